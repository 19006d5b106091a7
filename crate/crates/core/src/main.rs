use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manet_core::metrics::{csv_row, CSV_HEADER};
use manet_core::radio::PropagationKind;
use manet_core::routing::Protocol;
use manet_core::sweep::{self, CellResult, SweepGrid};
use manet_core::{Network, ScenarioConfig, SimError};

#[derive(Parser)]
#[command(name = "manet-sim", version, about = "Discrete-event MANET simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write one CSV row.
    Run(RunArgs),
    /// Run a protocol × model × connections × seed grid.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Overrides {
    /// Extra `key=value` settings applied after the config file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mobility and packet trace file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    connections: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated protocols, e.g. `aodv,dsr,dsdv`.
    #[arg(long)]
    protocols: Option<String>,
    /// Comma-separated propagation models.
    #[arg(long)]
    models: Option<String>,
    /// Comma-separated connection counts; ranges `a..b` allowed.
    #[arg(long)]
    connections: Option<String>,
    /// Comma-separated seeds; ranges `a..b` allowed.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
    /// CSV output file; stdout when absent. Companion files
    /// (`.connections.csv`, `.nodes.csv`, `.dat`) are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gnuplot data file; defaults to the `--out` path with a `.dat` extension.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("manet-sim: {e}");
            ExitCode::FAILURE
        }
    }
}

type Settings = Vec<(String, String)>;

/// Parses the file leniently, applies flag overrides, then checks
/// model-specific keys against the final propagation model.
fn load(path: &Path, overrides: &Settings, strict_model_keys: bool) -> Result<ScenarioConfig, SimError> {
    let text = fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    let (mut cfg, mut set) = ScenarioConfig::parse_lenient(&text)?;
    for (key, value) in overrides {
        cfg.set(key, value).map_err(|msg| SimError::Config(format!("flag `{key}`: {msg}")))?;
        set.retain(|(k, _)| k != key);
        set.push((key.clone(), 0));
    }
    if strict_model_keys {
        cfg.check_model_keys(&set).map_err(|e| match e {
            SimError::Parse { line: 0, key, msg } => SimError::Config(format!("flag `{key}`: {msg}")),
            other => other,
        })?;
    }
    Ok(cfg)
}

fn key_values(o: &Overrides) -> Result<Settings, SimError> {
    o.set
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim().to_string()))
                .ok_or_else(|| SimError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))
        })
        .collect()
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), SimError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| SimError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn companion(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn run(a: RunArgs) -> Result<bool, SimError> {
    let mut overrides = key_values(&a.overrides)?;
    let named = [
        ("protocol", a.protocol.clone()),
        ("propagation", a.model.clone()),
        ("connections", a.connections.map(|c| c.to_string())),
        ("seed", a.seed.map(|s| s.to_string())),
    ];
    overrides.extend(named.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    let cfg = load(&a.config, &overrides, true)?;
    cfg.validate()?;
    let mut net = Network::new(&cfg)?;
    if let Some(path) = &a.trace {
        let file = fs::File::create(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        net = net.with_trace(Box::new(BufWriter::new(file)))?;
    }
    let out = net.run()?;
    let labels = cfg.labels();
    let text = format!("{CSV_HEADER}\n{}\n", csv_row(&labels, &out.ledger));
    write_text(a.out.as_deref(), &text)?;
    if let Some(path) = &a.out {
        let cell = [CellResult { labels, outcome: Ok(out.ledger) }];
        write_text(Some(&companion(path, ".connections.csv")), &sweep::connections_csv(&cell))?;
        write_text(Some(&companion(path, ".nodes.csv")), &sweep::nodes_csv(&cell))?;
    }
    Ok(true)
}

fn run_sweep(a: SweepArgs) -> Result<bool, SimError> {
    let overrides = key_values(&a.overrides)?;
    // Model keys are checked per cell, so a base file may carry parameters
    // for several models at once.
    let base = load(&a.config, &overrides, false)?;
    let cfg_err = |m: String| SimError::Config(m);
    let grid = SweepGrid {
        protocols: match &a.protocols {
            Some(l) => sweep::parse_list::<Protocol>(l).map_err(cfg_err)?,
            None => vec![base.protocol],
        },
        models: match &a.models {
            Some(l) => sweep::parse_list::<PropagationKind>(l).map_err(cfg_err)?,
            None => vec![base.fading.kind],
        },
        connections: match &a.connections {
            Some(l) => sweep::parse_int_list(l).map_err(cfg_err)?.into_iter().map(|c| c as usize).collect(),
            None => vec![base.traffic.connections],
        },
        seeds: match &a.seeds {
            Some(l) => sweep::parse_int_list(l).map_err(cfg_err)?,
            None => vec![base.seed],
        },
    };
    let jobs = a.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let results = sweep::run_sweep(&base, &grid, jobs)?;
    let mut ok = true;
    for r in &results {
        if let Err(e) = &r.outcome {
            ok = false;
            let l = &r.labels;
            eprintln!("cell {}/{}/{} seed {} failed: {e}", l.protocol, l.propagation, l.connections, l.seed);
        }
    }
    write_text(a.out.as_deref(), &sweep::results_csv(&results))?;
    if let Some(path) = &a.out {
        write_text(Some(&companion(path, ".connections.csv")), &sweep::connections_csv(&results))?;
        write_text(Some(&companion(path, ".nodes.csv")), &sweep::nodes_csv(&results))?;
    }
    let dat = a.gnuplot.clone().or_else(|| a.out.as_ref().map(|p| p.with_extension("dat")));
    if let Some(path) = dat {
        write_text(Some(&path), &sweep::gnuplot(&results))?;
    }
    Ok(ok)
}
