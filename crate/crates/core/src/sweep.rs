//! Parameter grids over protocol × propagation × connections × seed.

use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::metrics::{self, MetricsLedger, RunLabels, CSV_HEADER};
use crate::radio::PropagationKind;
use crate::routing::Protocol;
use crate::scenario::ScenarioConfig;
use crate::sim::run_scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub protocols: Vec<Protocol>,
    pub models: Vec<PropagationKind>,
    pub connections: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.protocols.len() * self.models.len() * self.connections.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell configurations in output order: protocol, then model, then
    /// connection count, then seed.
    pub fn cells(&self, base: &ScenarioConfig) -> Vec<ScenarioConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &protocol in &self.protocols {
            for &model in &self.models {
                for &connections in &self.connections {
                    for &seed in &self.seeds {
                        let mut cfg = base.clone();
                        cfg.protocol = protocol;
                        cfg.fading.kind = model;
                        cfg.traffic.connections = connections;
                        cfg.seed = seed;
                        out.push(cfg);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub labels: RunLabels,
    pub outcome: std::result::Result<MetricsLedger, SimError>,
}

fn run_cell(cfg: &ScenarioConfig) -> CellResult {
    let outcome = cfg.validate().and_then(|_| run_scenario(cfg)).map(|o| o.ledger);
    CellResult { labels: cfg.labels(), outcome }
}

/// Runs every cell on `jobs` worker threads. Results come back in grid
/// order whatever the completion order.
pub fn run_sweep(base: &ScenarioConfig, grid: &SweepGrid, jobs: usize) -> Result<Vec<CellResult>> {
    if grid.is_empty() {
        return Err(SimError::Config("sweep grid is empty".into()));
    }
    let cells = grid.cells(base);
    if jobs <= 1 {
        return Ok(cells.iter().map(run_cell).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SimError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| cells.par_iter().map(run_cell).collect()))
}

/// Header plus one row per cell; failed cells get an error marker row.
pub fn results_csv(results: &[CellResult]) -> String {
    let mut out = String::with_capacity(128 * (results.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in results {
        match &r.outcome {
            Ok(m) => out.push_str(&metrics::csv_row(&r.labels, m)),
            Err(_) => out.push_str(&metrics::error_row(&r.labels)),
        }
        out.push('\n');
    }
    out
}

pub fn connections_csv(results: &[CellResult]) -> String {
    let mut out = format!("{}\n", metrics::CONNECTIONS_HEADER);
    for r in results {
        if let Ok(m) = &r.outcome {
            for row in metrics::connection_rows(&r.labels, m) {
                out.push_str(&row);
                out.push('\n');
            }
        }
    }
    out
}

pub fn nodes_csv(results: &[CellResult]) -> String {
    let mut out = format!("{}\n", metrics::NODES_HEADER);
    for r in results {
        if let Ok(m) = &r.outcome {
            for row in metrics::node_rows(&r.labels, m) {
                out.push_str(&row);
                out.push('\n');
            }
        }
    }
    out
}

pub fn gnuplot(results: &[CellResult]) -> String {
    let pairs: Vec<_> = results.iter().map(|r| (r.labels.clone(), r.outcome.as_ref().ok().cloned())).collect();
    metrics::gnuplot_blocks(&pairs)
}

/// Comma-separated list; integer items may be inclusive ranges `a..b` or `a-b`.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> std::result::Result<Vec<T>, String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| s.parse::<T>().map_err(|_| format!("bad list item `{s}`"))).collect()
}

pub fn parse_int_list(text: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let range = item.split_once("..").or_else(|| item.split_once('-'));
        match range {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (
                    a.trim().parse().map_err(|_| format!("bad range `{item}`"))?,
                    b.trim().parse().map_err(|_| format!("bad range `{item}`"))?,
                );
                if a > b {
                    return Err(format!("empty range `{item}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(item.parse().map_err(|_| format!("bad integer `{item}`"))?),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
