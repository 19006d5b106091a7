//! Run ledger, headline metrics and their CSV / gnuplot renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::packet::{DropReason, NodeId};
use crate::routing::ControlCounters;

pub const CSV_HEADER: &str = "protocol,propagation,nodes,connections,seed,sim_time_s,pdf_percent,avg_e2e_delay_s,\
throughput_bps,mrre_percent,total_energy_j,ctrl_packets,sent,received,drop_collision,drop_no_route,drop_retry,drop_queue";

pub const CONNECTIONS_HEADER: &str = "protocol,propagation,connections,seed,conn,src,dst,sent,received";
pub const NODES_HEADER: &str = "protocol,propagation,connections,seed,node,initial_j,remaining_j,residual_percent";

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEnergy {
    pub initial_j: f64,
    pub remaining_j: f64,
    pub debited_j: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnStats {
    pub id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub sent: u64,
    pub received: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLedger {
    pub horizon: f64,
    pub cbr_sent: u64,
    pub cbr_received: u64,
    pub duplicates: u64,
    pub delay_sum_s: f64,
    pub received_bits: u64,
    pub hops_sum: u64,
    pub drops: BTreeMap<DropReason, u64>,
    pub control: ControlCounters,
    pub per_node: Vec<NodeEnergy>,
    pub per_conn: Vec<ConnStats>,
    /// Data packets still queued or awaiting a route when the run ended.
    pub in_flight_at_end: u64,
    /// Free-form event counters (MAC and routing diagnostics).
    pub counters: BTreeMap<String, u64>,
}

impl MetricsLedger {
    pub fn new(horizon: f64) -> Self {
        MetricsLedger { horizon, ..Default::default() }
    }

    pub fn record_drop(&mut self, reason: DropReason) {
        *self.drops.entry(reason).or_default() += 1;
    }

    pub fn drop_count(&self, reason: DropReason) -> u64 {
        self.drops.get(&reason).copied().unwrap_or(0)
    }

    pub fn total_drops(&self) -> u64 {
        self.drops.values().sum()
    }

    pub fn bump(&mut self, what: &str) {
        *self.counters.entry(what.to_string()).or_default() += 1;
    }

    pub fn counter(&self, what: &str) -> u64 {
        self.counters.get(what).copied().unwrap_or(0)
    }

    /// Percent of originated packets received; `None` when nothing was sent.
    pub fn pdf(&self) -> Option<f64> {
        (self.cbr_sent > 0).then(|| 100.0 * self.cbr_received as f64 / self.cbr_sent as f64)
    }

    /// Mean of `recv − sent` over received packets.
    pub fn avg_e2e_delay(&self) -> Option<f64> {
        (self.cbr_received > 0).then(|| self.delay_sum_s / self.cbr_received as f64)
    }

    /// Received payload bits over the simulated horizon.
    pub fn throughput(&self) -> f64 {
        if self.horizon > 0.0 {
            self.received_bits as f64 / self.horizon
        } else {
            0.0
        }
    }

    /// Lowest residual energy across nodes, percent of initial.
    pub fn mrre(&self) -> f64 {
        self.per_node.iter().map(|n| 100.0 * n.remaining_j / n.initial_j).fold(100.0, f64::min)
    }

    pub fn total_energy(&self) -> f64 {
        self.per_node.iter().map(|n| n.initial_j - n.remaining_j).fold(0.0, |a, b| a + b)
    }

    pub fn total_debits(&self) -> f64 {
        self.per_node.iter().map(|n| n.debited_j).fold(0.0, |a, b| a + b)
    }

    pub fn any_truncated(&self) -> bool {
        self.per_node.iter().any(|n| n.truncated)
    }

    pub fn ctrl_packets(&self) -> u64 {
        self.control.total()
    }

    /// `sent = received + drops + in flight`.
    pub fn is_closed(&self) -> bool {
        self.cbr_sent == self.cbr_received + self.total_drops() + self.in_flight_at_end
    }
}

/// Identifying columns of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabels {
    pub protocol: String,
    pub propagation: String,
    pub nodes: usize,
    pub connections: usize,
    pub seed: u64,
    pub sim_time: f64,
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn opt6(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), f6)
}

fn label_cols(l: &RunLabels) -> String {
    format!("{},{},{},{},{},{}", l.protocol, l.propagation, l.nodes, l.connections, l.seed, f6(l.sim_time))
}

pub fn csv_row(l: &RunLabels, m: &MetricsLedger) -> String {
    let retry = m.drop_count(DropReason::RetryLimit) + m.drop_count(DropReason::BelowThreshold);
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        label_cols(l),
        opt6(m.pdf()),
        opt6(m.avg_e2e_delay()),
        f6(m.throughput()),
        f6(m.mrre()),
        f6(m.total_energy()),
        m.ctrl_packets(),
        m.cbr_sent,
        m.cbr_received,
        m.drop_count(DropReason::Collision),
        m.drop_count(DropReason::NoRoute),
        retry,
        m.drop_count(DropReason::QueueOverflow),
    )
}

/// Marker row for a failed cell: label columns followed by `ERR`.
pub fn error_row(l: &RunLabels) -> String {
    let metric_cols = CSV_HEADER.split(',').count() - 6;
    let mut s = label_cols(l);
    for _ in 0..metric_cols {
        s.push_str(",ERR");
    }
    s
}

fn short_labels(l: &RunLabels) -> String {
    format!("{},{},{},{}", l.protocol, l.propagation, l.connections, l.seed)
}

pub fn connection_rows(l: &RunLabels, m: &MetricsLedger) -> Vec<String> {
    m.per_conn
        .iter()
        .map(|c| format!("{},{},{},{},{},{}", short_labels(l), c.id, c.src.0, c.dst.0, c.sent, c.received))
        .collect()
}

pub fn node_rows(l: &RunLabels, m: &MetricsLedger) -> Vec<String> {
    m.per_node
        .iter()
        .enumerate()
        .map(|(i, n)| {
            format!(
                "{},{},{},{},{}",
                short_labels(l),
                i,
                f6(n.initial_j),
                f6(n.remaining_j),
                f6(100.0 * n.remaining_j / n.initial_j)
            )
        })
        .collect()
}

/// One gnuplot block per protocol×propagation pair (separated by two blank
/// lines, addressable with `index`), one line per connection count with
/// metrics averaged over seeds. Failed runs are skipped.
pub fn gnuplot_blocks(results: &[(RunLabels, Option<MetricsLedger>)]) -> String {
    type Key = (String, String);
    let mut order: Vec<Key> = Vec::new();
    let mut cells: BTreeMap<Key, BTreeMap<usize, Vec<&MetricsLedger>>> = BTreeMap::new();
    for (l, m) in results {
        let key = (l.protocol.clone(), l.propagation.clone());
        if !cells.contains_key(&key) {
            order.push(key.clone());
        }
        let by_conn = cells.entry(key).or_default();
        let runs = by_conn.entry(l.connections).or_default();
        if let Some(m) = m {
            runs.push(m);
        }
    }
    let mean = |v: Vec<f64>| if v.is_empty() { None } else { Some(v.iter().fold(0.0, |a, b| a + b) / v.len() as f64) };
    let mut out = String::new();
    for (bi, key) in order.iter().enumerate() {
        if bi > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# protocol={} propagation={}", key.0, key.1);
        out.push_str("# connections pdf_percent avg_e2e_delay_s throughput_bps mrre_percent total_energy_j runs\n");
        for (conn, runs) in &cells[key] {
            let pdf = mean(runs.iter().filter_map(|m| m.pdf()).collect());
            let delay = mean(runs.iter().filter_map(|m| m.avg_e2e_delay()).collect());
            let thr = mean(runs.iter().map(|m| m.throughput()).collect());
            let mrre = mean(runs.iter().map(|m| m.mrre()).collect());
            let energy = mean(runs.iter().map(|m| m.total_energy()).collect());
            let g = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), f6);
            let _ = writeln!(out, "{conn} {} {} {} {} {} {}", g(pdf), g(delay), g(thr), g(mrre), g(energy), runs.len());
        }
    }
    out
}
