//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use manet_core::energy::{airtime_charge, Battery, EnergyConfig};
use manet_core::kernel::RngStream;
use manet_core::mac::MacEvent;
use manet_core::metrics::MetricsLedger;
use manet_core::mobility::{next_leg, MobilityConfig};
use manet_core::radio::{
    crossover_distance, envelope_pdf, fading::envelope_sample, friis_power, two_ray_power, FadingSpec,
    PropagationKind, RadioParams,
};
use manet_core::routing::harness::Harness;
use manet_core::routing::{Protocol, RoutingConfig};
use manet_core::sweep::{self, run_sweep, SweepGrid};
use manet_core::{Network, ScenarioConfig};

type Check = std::result::Result<String, String>;

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------- AC1

/// Free-space power evaluated in the log domain.
fn friis_db_oracle(pt: f64, gt: f64, gr: f64, loss: f64, lambda: f64, d: f64) -> f64 {
    let db = 10.0 * pt.log10() + 10.0 * gt.log10() + 10.0 * gr.log10() + 20.0 * lambda.log10()
        - 20.0 * (4.0 * PI).log10()
        - 20.0 * d.log10()
        - 10.0 * loss.log10();
    10f64.powf(db / 10.0)
}

fn two_ray_db_oracle(pt: f64, gt: f64, gr: f64, loss: f64, ht: f64, hr: f64, d: f64) -> f64 {
    let db = 10.0 * (pt * gt * gr).log10() + 20.0 * (ht * hr).log10() - 40.0 * d.log10() - 10.0 * loss.log10();
    10f64.powf(db / 10.0)
}

fn ac1() -> Check {
    let mut worst: f64 = 0.0;
    let mut sets = 0;
    for i in 0..20 {
        let f = i as f64;
        let rp = RadioParams {
            pt: 0.05 + 0.07 * f,
            gt: 1.0 + 0.25 * (i % 4) as f64,
            gr: 1.0 + 0.5 * (i % 3) as f64,
            loss: 1.0 + 0.1 * (i % 5) as f64,
            lambda: 3e8 / (400e6 + 150e6 * f),
            ht: 0.5 + 0.3 * f,
            hr: 1.0 + 0.2 * (i % 7) as f64,
            ..RadioParams::default()
        };
        let dc = 4.0 * PI * rp.ht * rp.hr / rp.lambda;
        if rel(crossover_distance(&rp), dc) > 1e-12 {
            return Err(format!("crossover distance mismatch in set {i}"));
        }
        let near = 0.3 * dc;
        let far = 1.5 * dc + 10.0 * f;
        for d in [near, far, 1.0 + f] {
            let want = friis_db_oracle(rp.pt, rp.gt, rp.gr, rp.loss, rp.lambda, d);
            worst = worst.max(rel(friis_power(&rp, d).map_err(|e| e.to_string())?, want));
        }
        let want_far = two_ray_db_oracle(rp.pt, rp.gt, rp.gr, rp.loss, rp.ht, rp.hr, far);
        worst = worst.max(rel(two_ray_power(&rp, far).map_err(|e| e.to_string())?, want_far));
        // Below the crossover two-ray falls back to free space.
        let want_near = friis_db_oracle(rp.pt, rp.gt, rp.gr, rp.loss, rp.lambda, near);
        worst = worst.max(rel(two_ray_power(&rp, near).map_err(|e| e.to_string())?, want_near));
        // Both predictions meet at the crossover.
        let at_dc = rel(two_ray_power(&rp, dc).unwrap(), friis_power(&rp, dc).unwrap());
        let oracle_dc = rel(
            two_ray_db_oracle(rp.pt, rp.gt, rp.gr, rp.loss, rp.ht, rp.hr, dc),
            friis_db_oracle(rp.pt, rp.gt, rp.gr, rp.loss, rp.lambda, dc),
        );
        worst = worst.max(at_dc).max(oracle_dc);
        sets += 1;
    }
    if worst <= 1e-9 {
        Ok(format!("{sets} parameter sets, worst relative error {worst:.2e}"))
    } else {
        Err(format!("worst relative error {worst:.2e} > 1e-9"))
    }
}

// ---------------------------------------------------------------- AC2

/// ln Γ(x) for x > 0 by recurrence to x ≥ 10 and the Stirling series.
fn ln_gamma_oracle(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

/// Regularized lower incomplete gamma P(a, x) by its power series.
fn gamma_p_oracle(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = 1.0;
    while term > sum * 1e-17 {
        term *= x / (a + n);
        sum += term;
        n += 1.0;
    }
    (sum.ln() + a * x.ln() - x - ln_gamma_oracle(a)).exp().min(1.0)
}

/// I₀(z) from its power series.
fn bessel_i0_oracle(z: f64) -> f64 {
    let q = z * z / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-18 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn rice_pdf_oracle(k: f64, p: f64, x: f64) -> f64 {
    2.0 * x * (k + 1.0) / p * (-k - (k + 1.0) * x * x / p).exp() * bessel_i0_oracle(2.0 * x * (k * (k + 1.0) / p).sqrt())
}

fn rayleigh_cdf(p: f64, x: f64) -> f64 {
    1.0 - (-x * x / p).exp()
}

/// CDF by cumulative Simpson integration of `pdf` on a fine grid.
fn tabulate_cdf(pdf: impl Fn(f64) -> f64, hi: f64, cells: usize) -> impl Fn(f64) -> f64 {
    let h = hi / cells as f64;
    let mut cdf = vec![0.0; cells + 1];
    for i in 0..cells {
        let a = i as f64 * h;
        cdf[i + 1] = cdf[i] + h / 6.0 * (pdf(a) + 4.0 * pdf(a + h / 2.0) + pdf(a + h));
    }
    move |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        let pos = x / h;
        let i = pos.floor() as usize;
        if i >= cells {
            return 1.0;
        }
        let t = pos - i as f64;
        cdf[i] + t * (cdf[i + 1] - cdf[i])
    }
}

fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

fn simpson_oracle(f: impl Fn(f64) -> f64, hi: f64, n: usize) -> f64 {
    let h = hi / n as f64;
    let mut s = f(0.0) + f(hi);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn ac2() -> Check {
    const DRAWS: usize = 100_000;
    let critical = ((2.0f64 / 0.01).ln() / 2.0).sqrt() / (DRAWS as f64).sqrt();
    let mut cases: Vec<(String, FadingSpec, Box<dyn Fn(f64) -> f64>)> =
        vec![("rayleigh P=1".into(), FadingSpec::rayleigh(1.0), Box::new(|x| rayleigh_cdf(1.0, x)))];
    for k in [0.0, 1.0, 5.0, 10.0] {
        cases.push((format!("rice K={k}"), FadingSpec::rice(k, 1.0), Box::new(tabulate_cdf(move |x| rice_pdf_oracle(k, 1.0, x), 8.0, 80_000))));
    }
    for m in [0.5, 1.0, 2.0, 4.0] {
        cases.push((format!("nakagami m={m}"), FadingSpec::nakagami(m, 1.0), Box::new(move |x| gamma_p_oracle(m, m * x * x))));
    }
    let mut notes = Vec::new();
    let mut worst_d: f64 = 0.0;
    let mut worst_mass: f64 = 0.0;
    for (name, spec, cdf) in &cases {
        let mass = simpson_oracle(|x| envelope_pdf(spec, x).unwrap(), 12.0, 240_000);
        worst_mass = worst_mass.max((mass - 1.0).abs());
        if (mass - 1.0).abs() > 1e-6 {
            return Err(format!("{name}: density integrates to {mass}"));
        }
        let mut rng = RngStream::new(&format!("acceptance:{name}"), 2024);
        let mut xs: Vec<f64> = (0..DRAWS).map(|_| envelope_sample(spec, &mut rng).unwrap()).collect();
        let d = ks_statistic(&mut xs, cdf);
        worst_d = worst_d.max(d);
        if d > critical {
            return Err(format!("{name}: KS D={d:.5} > {critical:.5}"));
        }
        notes.push(format!("{name} D={d:.4}"));
    }
    // Reductions to Rayleigh.
    let ray = FadingSpec::rayleigh(1.0);
    for (name, spec) in [("rice K=0", FadingSpec::rice(0.0, 1.0)), ("nakagami m=1", FadingSpec::nakagami(1.0, 1.0))] {
        for i in 1..400 {
            let x = i as f64 * 0.01;
            let (a, b) = (envelope_pdf(&spec, x).unwrap(), envelope_pdf(&ray, x).unwrap());
            if rel(a, b) > 1e-12 {
                return Err(format!("{name} density differs from Rayleigh at x={x}: {a} vs {b}"));
            }
        }
        let mut rng = RngStream::new(&format!("acceptance:reduce:{name}"), 7);
        let mut xs: Vec<f64> = (0..DRAWS).map(|_| envelope_sample(&spec, &mut rng).unwrap()).collect();
        let d = ks_statistic(&mut xs, |x| rayleigh_cdf(1.0, x));
        if d > critical {
            return Err(format!("{name} draws vs Rayleigh: KS D={d:.5} > {critical:.5}"));
        }
    }
    Ok(format!(
        "9 parameter sets; worst |mass-1|={worst_mass:.1e}, worst KS D={worst_d:.4} (critical {critical:.4}); Rice K=0 and Nakagami m=1 reduce to Rayleigh"
    ))
}

// ---------------------------------------------------------------- AC3

fn connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
        if bfs_dist(n, &edges, 0).iter().all(Option::is_some) {
            out.push(edges);
        }
    }
    out
}

fn bfs_dist(n: usize, edges: &[(usize, usize)], src: usize) -> Vec<Option<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut dist = vec![None; n];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(dist[u].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

fn check_path(path: Option<Vec<usize>>, edges: &[(usize, usize)], src: usize, dst: usize, want: usize) -> Result<(), String> {
    let path = path.ok_or_else(|| format!("no usable route {src}->{dst}"))?;
    let linked = |a: usize, b: usize| edges.contains(&(a.min(b), a.max(b)));
    let mut seen = std::collections::BTreeSet::new();
    if path.first() != Some(&src) || path.last() != Some(&dst) || !path.iter().all(|v| seen.insert(*v)) {
        return Err(format!("route {path:?} is not a loop-free {src}->{dst} walk"));
    }
    if !path.windows(2).all(|w| linked(w[0], w[1])) {
        return Err(format!("route {path:?} uses a missing link"));
    }
    if path.len() - 1 != want {
        return Err(format!("route {path:?} has {} hops, shortest is {want}", path.len() - 1));
    }
    Ok(())
}

fn ac3() -> Check {
    use rayon::prelude::*;
    let cfg = RoutingConfig::ideal();
    let graphs: Vec<(usize, Vec<(usize, usize)>)> =
        (2..=5).flat_map(|n| connected_graphs(n).into_iter().map(move |g| (n, g))).collect();
    let failures: Vec<String> = graphs
        .par_iter()
        .flat_map_iter(|(n, edges)| {
            let n = *n;
            let mut errs = Vec::new();
            let dists: Vec<_> = (0..n).map(|s| bfs_dist(n, edges, s)).collect();
            // DSDV: converged tables after three periodic dumps.
            let mut h = Harness::new(Protocol::Dsdv, n, edges, &cfg, 1);
            h.run_until(3.0 * cfg.dsdv.dump_interval + 1.0).unwrap();
            for s in 0..n {
                for d in (0..n).filter(|&d| d != s) {
                    if let Err(e) = check_path(h.follow(s, d), edges, s, d, dists[s][d].unwrap()) {
                        errs.push(format!("dsdv n={n} {edges:?}: {e}"));
                    }
                }
            }
            // AODV and DSR: one discovery per pair in a fresh network.
            for protocol in [Protocol::Aodv, Protocol::Dsr] {
                for s in 0..n {
                    for d in (0..n).filter(|&d| d != s) {
                        let mut h = Harness::new(protocol, n, edges, &cfg, 1);
                        h.send_data(0.5, s, d).unwrap();
                        h.run_until(3.0).unwrap();
                        if h.delivered.len() != 1 {
                            errs.push(format!("{protocol} n={n} {edges:?}: {s}->{d} delivered {} copies", h.delivered.len()));
                            continue;
                        }
                        if let Err(e) = check_path(h.follow(s, d), edges, s, d, dists[s][d].unwrap()) {
                            errs.push(format!("{protocol} n={n} {edges:?}: {e}"));
                        }
                    }
                }
            }
            errs
        })
        .collect();
    if failures.is_empty() {
        Ok(format!("{} connected graphs (n=2..5), all pairs, 3 protocols match BFS", graphs.len()))
    } else {
        Err(format!("{} mismatches, first: {}", failures.len(), failures[0]))
    }
}

// ---------------------------------------------------------------- AC4 / AC5

fn desk_base() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.nodes = 25;
    cfg.mobility.width = 400.0;
    cfg.mobility.height = 400.0;
    cfg.sim_time = 60.0;
    cfg
}

fn ac4() -> Check {
    let base = desk_base();
    for protocol in Protocol::ALL {
        let mut cfg = base.clone();
        cfg.protocol = protocol;
        cfg.fading.kind = PropagationKind::Shadowing;
        cfg.traffic.connections = 6;
        cfg.seed = 11;
        let rows: Vec<String> = (0..2)
            .map(|_| {
                let r = manet_core::run_scenario(&cfg).unwrap();
                manet_core::metrics::csv_row(&cfg.labels(), &r.ledger)
            })
            .collect();
        if rows[0] != rows[1] {
            return Err(format!("{protocol}: repeated run differs:\n{}\n{}", rows[0], rows[1]));
        }
    }
    let grid = SweepGrid {
        protocols: Protocol::ALL.to_vec(),
        models: PropagationKind::ALL.to_vec(),
        connections: vec![5, 10, 15, 20, 25, 30],
        seeds: vec![3],
    };
    let serial = run_sweep(&base, &grid, 1).map_err(|e| e.to_string())?;
    let parallel = run_sweep(&base, &grid, 8).map_err(|e| e.to_string())?;
    let render = |r: &[sweep::CellResult]| {
        [sweep::results_csv(r), sweep::connections_csv(r), sweep::nodes_csv(r), sweep::gnuplot(r)].concat()
    };
    let (a, b) = (render(&serial), render(&parallel));
    if serial.len() != 108 || a != b {
        return Err(format!("{} cells; serial and parallel outputs {}", serial.len(), if a == b { "match" } else { "differ" }));
    }
    if serial.iter().any(|c| c.outcome.is_err()) {
        return Err("a sweep cell failed".into());
    }
    Ok(format!("repeat runs identical; 108-cell sweep --jobs 8 == --jobs 1 ({} bytes)", a.len()))
}

struct Desk {
    by_cell: BTreeMap<(Protocol, PropagationKind, usize), Vec<MetricsLedger>>,
}

impl Desk {
    fn mean(&self, p: Protocol, m: PropagationKind, c: usize, f: impl Fn(&MetricsLedger) -> Option<f64>) -> f64 {
        let v: Vec<f64> = self.by_cell[&(p, m, c)].iter().filter_map(f).collect();
        v.iter().sum::<f64>() / v.len() as f64
    }
}

const LOADS: [usize; 4] = [2, 4, 6, 8];

fn desk_results() -> Result<Desk, String> {
    let grid = SweepGrid {
        protocols: Protocol::ALL.to_vec(),
        models: PropagationKind::ALL.to_vec(),
        connections: LOADS.to_vec(),
        seeds: (1..=10).collect(),
    };
    let results = run_sweep(&desk_base(), &grid, jobs()).map_err(|e| e.to_string())?;
    let mut by_cell: BTreeMap<_, Vec<MetricsLedger>> = BTreeMap::new();
    for r in results {
        let l = &r.labels;
        let key = (l.protocol.parse().unwrap(), l.propagation.parse().unwrap(), l.connections);
        by_cell.entry(key).or_default().push(r.outcome.map_err(|e| format!("cell {key:?} failed: {e}"))?);
    }
    Ok(Desk { by_cell })
}

fn spearman_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|x| {
                let below = v.iter().filter(|y| *y < x).count() as f64;
                let equal = v.iter().filter(|y| *y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

fn ac5(desk: &Desk) -> Vec<(String, Check)> {
    use PropagationKind::*;
    let pdf = |m: &MetricsLedger| m.pdf();
    let delay = |m: &MetricsLedger| m.avg_e2e_delay();
    let energy = |m: &MetricsLedger| Some(m.total_energy());
    let deterministic = [FreeSpace, TwoRay];
    let stochastic = [Shadowing, Rayleigh, Rice, Nakagami];
    let mut out = Vec::new();

    let mut bad = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for p in Protocol::ALL {
        for m in PropagationKind::ALL {
            let xs: Vec<f64> = LOADS.iter().map(|&c| c as f64).collect();
            let ys: Vec<f64> = LOADS.iter().map(|&c| desk.mean(p, m, c, pdf)).collect();
            let rho = spearman_oracle(&xs, &ys);
            worst = worst.max(rho);
            if rho > 0.0 {
                bad.push(format!("{p}/{m} rho={rho:.2} pdf={ys:.2?}"));
            }
        }
    }
    out.push((
        "(i) PDF non-increasing in load".to_string(),
        if bad.is_empty() { Ok(format!("max Spearman rho {worst:.2}")) } else { Err(bad.join("; ")) },
    ));

    let mut bad = Vec::new();
    for p in Protocol::ALL {
        for c in LOADS {
            for d in deterministic {
                for f in stochastic {
                    let (a, b) = (desk.mean(p, d, c, pdf), desk.mean(p, f, c, pdf));
                    if a + 2.0 < b {
                        bad.push(format!("{p} c={c} {d}={a:.2} < {f}={b:.2}"));
                    }
                }
            }
        }
    }
    out.push((
        "(ii) deterministic PDF >= fading PDF (2 pp band)".to_string(),
        if bad.is_empty() { Ok("all protocol/load pairs".into()) } else { Err(bad.join("; ")) },
    ));

    let mut bad = Vec::new();
    let mut lowest = f64::INFINITY;
    for p in [Protocol::Aodv, Protocol::Dsr] {
        for d in deterministic {
            let v = desk.mean(p, d, LOADS[0], pdf);
            lowest = lowest.min(v);
            if v < 95.0 {
                bad.push(format!("{p}/{d} {v:.2}"));
            }
        }
    }
    out.push((
        "(iii) AODV/DSR PDF >= 95% at lowest load".to_string(),
        if bad.is_empty() { Ok(format!("lowest {lowest:.2}%")) } else { Err(bad.join("; ")) },
    ));

    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for p in Protocol::ALL {
        let avg = |m| {
            let v: Vec<f64> = LOADS.iter().map(|&c| desk.mean(p, m, c, delay)).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (sh, fs) = (avg(Shadowing), avg(FreeSpace));
        notes.push(format!("{p} {sh:.4}s vs {fs:.4}s"));
        if sh < fs {
            bad.push(format!("{p} shadowing {sh:.4}s < freespace {fs:.4}s"));
        }
    }
    out.push((
        "(iv) AE2E delay shadowing >= freespace".to_string(),
        if bad.is_empty() { Ok(notes.join(", ")) } else { Err(bad.join("; ")) },
    ));

    let mut bad = Vec::new();
    for m in PropagationKind::ALL {
        for c in LOADS {
            let e = |p| desk.mean(p, m, c, energy);
            let (dsdv, aodv, dsr) = (e(Protocol::Dsdv), e(Protocol::Aodv), e(Protocol::Dsr));
            if dsdv > aodv || dsdv > dsr {
                bad.push(format!("{m} c={c} dsdv={dsdv:.2} aodv={aodv:.2} dsr={dsr:.2}"));
            }
        }
    }
    out.push((
        "(v) DSDV energy <= AODV and DSR".to_string(),
        if bad.is_empty() { Ok("every model and load".into()) } else { Err(format!("{} of 24 cells: {}", bad.len(), bad.join("; "))) },
    ));
    out
}

// ---------------------------------------------------------------- AC6

fn ac6() -> Check {
    let e = EnergyConfig::default();
    let (tx, rx) = (airtime_charge(e.tx_power_w, 4096, 2e6), airtime_charge(e.rx_power_w, 4096, 2e6));
    if tx != 1.35168e-3 || rx != 8.0896e-4 {
        return Err(format!("hand values: tx {tx:e}, rx {rx:e}"));
    }
    let mut b = Battery::new(&e);
    if b.debit_tx(4096, 2e6) != Some(1.35168e-3) || b.debit_rx(4096, 2e6) != Some(8.0896e-4) {
        return Err("battery debits differ from hand values".into());
    }
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for protocol in Protocol::ALL {
        for model in PropagationKind::ALL {
            let mut cfg = desk_base();
            cfg.protocol = protocol;
            cfg.fading.kind = model;
            cfg.traffic.connections = 4;
            let out = Network::new(&cfg).unwrap().with_mac_log().run().map_err(|err| err.to_string())?;
            let l = &out.ledger;
            if l.any_truncated() {
                return Err(format!("{protocol}/{model}: a battery hit the floor"));
            }
            // Recompute every charge from the MAC log.
            let rate = cfg.mac.link_rate;
            let mut spent = vec![0.0; cfg.nodes];
            for ev in &out.mac_log {
                match *ev {
                    MacEvent::TxStart { node, bits, .. } => spent[node.idx()] += e.tx_power_w * bits as f64 / rate,
                    MacEvent::RxOk { node, bits, charged: true, .. } => spent[node.idx()] += e.rx_power_w * bits as f64 / rate,
                    MacEvent::Ack { from, to, bits, .. } => {
                        spent[from.idx()] += e.tx_power_w * bits as f64 / rate;
                        spent[to.idx()] += e.rx_power_w * bits as f64 / rate;
                    }
                    _ => {}
                }
            }
            let consumed = l.total_energy();
            let debits: f64 = spent.iter().sum();
            worst = worst.max((consumed - debits).abs()).max((consumed - l.total_debits()).abs());
            for (i, n) in l.per_node.iter().enumerate() {
                worst = worst.max(((n.initial_j - n.remaining_j) - spent[i]).abs());
            }
            runs += 1;
        }
    }
    if worst <= 1e-9 {
        Ok(format!("hand values exact; {runs} runs, worst |consumed - sum of debits| {worst:.1e} J"))
    } else {
        Err(format!("ledger gap {worst:e} J"))
    }
}

// ---------------------------------------------------------------- AC7

fn ac7() -> Check {
    let cfg = MobilityConfig { width: 670.0, height: 670.0, ..MobilityConfig::default() };
    let mut rng = RngStream::new("acceptance:waypoints", 99);
    let mut at = (335.0, 335.0);
    let mut t = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    const N: usize = 1_000_000;
    for _ in 0..N {
        let leg = next_leg(&cfg, at, t, &mut rng);
        let (x, y) = leg.destination;
        if !(0.0..=cfg.width).contains(&x) || !(0.0..=cfg.height).contains(&y) {
            return Err(format!("waypoint ({x}, {y}) outside the field"));
        }
        sx += x;
        sy += y;
        at = leg.destination;
        t = leg.end_time();
    }
    let (mx, my) = (sx / N as f64, sy / N as f64);
    let (ex, ey) = (rel(mx, cfg.width / 2.0), rel(my, cfg.height / 2.0));
    if ex < 0.01 && ey < 0.01 {
        Ok(format!("1e6 waypoints inside; mean ({mx:.2}, {my:.2}), offsets {:.3}% / {:.3}%", 100.0 * ex, 100.0 * ey))
    } else {
        Err(format!("mean ({mx:.2}, {my:.2}) off center by more than 1%"))
    }
}

// ----------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Check) -> Check {
    panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    })
}

fn report(id: &str, title: &str, started: Instant, result: &Check) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match result {
        Ok(note) => println!("{id} PASS {title} [{secs:.1}s]: {note}"),
        Err(why) => println!("{id} FAIL {title} [{secs:.1}s]: {why}"),
    }
    result.is_ok()
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filter.is_empty() || filter.iter().any(|f| id.starts_with(f.as_str()) || f.starts_with(id));
    let mut ok = true;
    let simple: [(&str, &str, fn() -> Check); 6] = [
        ("AC1", "analytic path loss", ac1),
        ("AC2", "fading distributions", ac2),
        ("AC3", "routing oracle equivalence", ac3),
        ("AC4", "determinism", ac4),
        ("AC6", "energy ledger", ac6),
        ("AC7", "mobility containment and uniformity", ac7),
    ];
    for (id, title, f) in simple {
        if wanted(id) {
            let t = Instant::now();
            ok &= report(id, title, t, &guarded(f));
        }
    }
    if wanted("AC5") {
        let t = Instant::now();
        match guarded(|| desk_results().map(|d| {
            let parts = ac5(&d);
            let mut all = true;
            for (name, r) in &parts {
                all &= report("AC5", name, t, r);
            }
            if all { "all sub-criteria".to_string() } else { String::new() }
        })) {
            Ok(s) if !s.is_empty() => {
                report("AC5", "desk-scale directional findings", t, &Ok(s));
            }
            Ok(_) => {
                report("AC5", "desk-scale directional findings", t, &Err("see sub-criteria above".into()));
                ok = false;
            }
            Err(e) => {
                report("AC5", "desk-scale directional findings", t, &Err(e));
                ok = false;
            }
        }
    }
    if !ok {
        std::process::exit(1);
    }
}
