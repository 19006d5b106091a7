//! Constant-bit-rate sources and deduplicating sinks.

use std::collections::BTreeSet;

use crate::error::{Result, SimError};
use crate::kernel::RngStream;
use crate::packet::{NodeId, Packet};

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    pub connections: usize,
    pub rate_pps: f64,
    pub payload_bytes: u32,
    /// Start times are uniform over `[0, stagger)`, clipped to the horizon.
    pub stagger: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig { connections: 10, rate_pps: 8.0, payload_bytes: 512, stagger: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub rate_pps: f64,
    pub payload_bytes: u32,
    pub start: f64,
    pub stop: f64,
}

impl Connection {
    /// Emission time of the `k`-th packet, if it falls before `stop`.
    pub fn emission_time(&self, k: u64) -> Option<f64> {
        let t = self.start + k as f64 / self.rate_pps;
        (t < self.stop).then_some(t)
    }

    /// Packets emitted over the whole active window.
    pub fn packet_count(&self) -> u64 {
        let mut k = ((self.stop - self.start) * self.rate_pps).ceil().max(0.0) as u64;
        // Guard against rounding on either side of the boundary.
        while k > 0 && self.emission_time(k - 1).is_none() {
            k -= 1;
        }
        while self.emission_time(k).is_some() {
            k += 1;
        }
        k
    }
}

/// Samples `cfg.connections` distinct ordered pairs. Pairs and start times
/// are drawn one connection at a time, so a smaller count yields a prefix
/// of a larger one under the same stream.
pub fn build_connections(cfg: &TrafficConfig, nodes: usize, horizon: f64, rng: &mut RngStream) -> Result<Vec<Connection>> {
    let n = cfg.connections;
    if n > 0 && nodes < 2 {
        return Err(SimError::Config("connections need at least two nodes".into()));
    }
    if n > nodes * nodes.saturating_sub(1) {
        return Err(SimError::Config(format!("{n} connections exceed the {} ordered pairs of {nodes} nodes", nodes * (nodes - 1))));
    }
    if !(cfg.rate_pps > 0.0 && cfg.rate_pps.is_finite()) {
        return Err(SimError::Config("rate_pps must be positive".into()));
    }
    if !(horizon > 0.0) {
        return Err(SimError::Config("simulation time must be positive".into()));
    }
    let window = cfg.stagger.min(horizon).max(0.0);
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let src = rng.below(nodes as u64) as u32;
        let dst = rng.below(nodes as u64 - 1) as u32;
        let dst = if dst >= src { dst + 1 } else { dst };
        if !used.insert((src, dst)) {
            continue;
        }
        let start = rng.uniform() * window;
        out.push(Connection {
            id: out.len(),
            src: NodeId(src),
            dst: NodeId(dst),
            rate_pps: cfg.rate_pps,
            payload_bytes: cfg.payload_bytes,
            start,
            stop: horizon,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkOutcome {
    Accepted,
    Duplicate,
    /// Not for this sink's connection.
    Ignored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sink {
    pub conn: usize,
    pub dst: NodeId,
    seen: BTreeSet<u64>,
    pub received: u64,
    pub duplicates: u64,
    pub delay_sum: f64,
    pub bits: u64,
    pub hops_sum: u64,
}

impl Sink {
    pub fn new(conn: &Connection) -> Self {
        Sink { conn: conn.id, dst: conn.dst, seen: BTreeSet::new(), received: 0, duplicates: 0, delay_sum: 0.0, bits: 0, hops_sum: 0 }
    }

    pub fn receive(&mut self, packet: &Packet, now: f64) -> SinkOutcome {
        match packet.data_id() {
            Some((conn, seq)) if conn == self.conn && packet.dst == Some(self.dst) => {
                if self.seen.insert(seq) {
                    self.received += 1;
                    self.delay_sum += now - packet.created_at;
                    self.bits += packet.payload_bits();
                    self.hops_sum += u64::from(packet.hops);
                    SinkOutcome::Accepted
                } else {
                    self.duplicates += 1;
                    SinkOutcome::Duplicate
                }
            }
            _ => SinkOutcome::Ignored,
        }
    }
}
