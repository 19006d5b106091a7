//! Simplified CSMA/CA: timing constants, the interface queue and the
//! capture rule. The event-driven channel itself lives in [`crate::sim`].

use std::collections::VecDeque;

use crate::error::{Result, SimError};
use crate::packet::{NodeId, Packet};

#[derive(Debug, Clone, PartialEq)]
pub struct MacConfig {
    /// Channel bit rate, b/s.
    pub link_rate: f64,
    pub slot: f64,
    pub difs: f64,
    pub sifs: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Retransmissions after the first unicast attempt.
    pub retry_limit: u32,
    pub header_bytes: u32,
    pub ack_bytes: u32,
    pub queue_capacity: usize,
    pub capture_db: f64,
    /// Carrier-sense deferrals tolerated per attempt before it counts as failed.
    pub max_defers: u32,
    /// Control packets bypass queued data. `None` follows the protocol default.
    pub control_priority: Option<bool>,
    /// Fixed backoff in slots instead of a random draw.
    pub backoff_override: Option<u32>,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig {
            link_rate: 2e6,
            slot: 20e-6,
            difs: 50e-6,
            sifs: 10e-6,
            cw_min: 32,
            cw_max: 1024,
            retry_limit: 7,
            header_bytes: 58,
            ack_bytes: 14,
            queue_capacity: 50,
            capture_db: 10.0,
            max_defers: 64,
            control_priority: None,
            backoff_override: None,
        }
    }
}

impl MacConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.link_rate) && pos(self.slot) && self.difs >= 0.0 && self.sifs >= 0.0) {
            return Err(SimError::Config("MAC timing values must be positive".into()));
        }
        if self.cw_min == 0 || self.cw_max < self.cw_min {
            return Err(SimError::Config("need 0 < cw_min <= cw_max".into()));
        }
        if !self.capture_db.is_finite() {
            return Err(SimError::Config("capture ratio must be finite".into()));
        }
        Ok(())
    }

    /// Airtime of a frame carrying `packet_bytes` of network-layer data.
    pub fn frame_duration(&self, packet_bytes: u32) -> f64 {
        f64::from(packet_bytes + self.header_bytes) * 8.0 / self.link_rate
    }

    pub fn frame_bits(&self, packet_bytes: u32) -> u64 {
        u64::from(packet_bytes + self.header_bytes) * 8
    }

    pub fn ack_duration(&self) -> f64 {
        f64::from(self.ack_bytes) * 8.0 / self.link_rate
    }

    pub fn capture_ratio(&self) -> f64 {
        10f64.powf(self.capture_db / 10.0)
    }
}

/// A queued packet and the neighbor it is for (`None` broadcasts).
pub type QueueEntry = (Packet, Option<NodeId>);

/// Interface queue with an optional priority lane for control packets.
#[derive(Debug, Clone)]
pub struct IfQueue {
    capacity: usize,
    control_priority: bool,
    control: VecDeque<QueueEntry>,
    data: VecDeque<QueueEntry>,
}

impl IfQueue {
    pub fn new(capacity: usize, control_priority: bool) -> Self {
        IfQueue { capacity, control_priority, control: VecDeque::new(), data: VecDeque::new() }
    }

    pub fn len(&self) -> usize {
        self.control.len() + self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends, or hands the entry back when the queue is full.
    pub fn push(&mut self, entry: QueueEntry) -> std::result::Result<(), QueueEntry> {
        if self.len() >= self.capacity {
            return Err(entry);
        }
        if self.control_priority && entry.0.kind().is_control() {
            self.control.push_back(entry);
        } else {
            self.data.push_back(entry);
        }
        Ok(())
    }

    pub fn pop(&mut self) -> Option<QueueEntry> {
        self.control.pop_front().or_else(|| self.data.pop_front())
    }

    /// Removes every unicast entry for `next_hop`, preserving order.
    pub fn remove_next_hop(&mut self, next_hop: NodeId) -> Vec<QueueEntry> {
        let mut out = Vec::new();
        for lane in [&mut self.control, &mut self.data] {
            let mut kept = VecDeque::with_capacity(lane.len());
            for e in lane.drain(..) {
                if e.1 == Some(next_hop) {
                    out.push(e);
                } else {
                    kept.push_back(e);
                }
            }
            *lane = kept;
        }
        out
    }

    pub fn drain(&mut self) -> Vec<QueueEntry> {
        self.control.drain(..).chain(self.data.drain(..)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &QueueEntry> {
        self.control.iter().chain(self.data.iter())
    }
}

/// Picks the frame a receiver decodes among overlapping `(id, power_w)`
/// arrivals: the strongest, if it reaches `rx_thresh` and exceeds the sum
/// of all the others by `capture_ratio`.
pub fn resolve_reception(frames: &[(u64, f64)], rx_thresh: f64, capture_ratio: f64) -> Option<u64> {
    let (best, power) = frames.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1))?;
    if power < rx_thresh {
        return None;
    }
    let others: f64 = frames.iter().filter(|f| f.0 != best).map(|f| f.1).sum();
    (others == 0.0 || power >= capture_ratio * others).then_some(best)
}

/// Why a frame was not decoded at a receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxFailure {
    BelowThreshold,
    Collision,
    /// The receiver was transmitting during part of the frame.
    HalfDuplex,
    ReceiverDead,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MacEvent {
    TxStart { t: f64, node: NodeId, uid: u64, attempt: u32, bits: u64 },
    Defer { t: f64, node: NodeId, uid: u64 },
    /// Decoded; `charged` tells whether the receiver paid for it.
    RxOk { t: f64, node: NodeId, uid: u64, bits: u64, charged: bool },
    RxFail { t: f64, node: NodeId, uid: u64, why: RxFailure },
    /// Acknowledgement from `from` back to the data sender `to`.
    Ack { t: f64, from: NodeId, to: NodeId, bits: u64 },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::Body;
    use crate::routing::aodv::AodvMsg;

    fn pkt(uid: u64, control: bool) -> Packet {
        let body = if control {
            Body::Aodv(AodvMsg::Hello { seq: 0 })
        } else {
            Body::Data { conn: 0, seq: uid, payload_bytes: 512, route: None }
        };
        Packet { uid, src: NodeId(0), dst: None, ttl: 1, hops: 0, created_at: 0.0, body }
    }

    #[test]
    fn frame_timing() {
        let m = MacConfig::default();
        assert_eq!(m.frame_duration(540), 598.0 * 8.0 / 2e6);
        assert_eq!(m.frame_bits(0), 58 * 8);
        assert!((m.capture_ratio() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn capture_rule() {
        let rx = 3.652e-10;
        assert_eq!(resolve_reception(&[(1, 1e-9)], rx, 10.0), Some(1));
        assert_eq!(resolve_reception(&[(1, 2e-10)], rx, 10.0), None);
        assert_eq!(resolve_reception(&[(1, 1e-9), (2, 2e-9)], rx, 10.0), None);
        assert_eq!(resolve_reception(&[(1, 1e-9), (2, 2.1e-8)], rx, 10.0), Some(2));
        // Two weak interferers that sum past the ratio block capture.
        assert_eq!(resolve_reception(&[(1, 1e-8), (2, 6e-10), (3, 6e-10)], rx, 10.0), None);
        assert_eq!(resolve_reception(&[], rx, 10.0), None);
    }

    #[test]
    fn queue_overflow_returns_newest_and_priority_lane() {
        let mut q = IfQueue::new(2, true);
        q.push((pkt(0, false), None)).unwrap();
        q.push((pkt(1, true), None)).unwrap();
        let rejected = q.push((pkt(2, false), None)).unwrap_err();
        assert_eq!(rejected.0.uid, 2);
        assert_eq!(q.pop().unwrap().0.uid, 1);
        let mut fifo = IfQueue::new(4, false);
        fifo.push((pkt(0, false), None)).unwrap();
        fifo.push((pkt(1, true), None)).unwrap();
        assert_eq!(fifo.pop().unwrap().0.uid, 0);
    }

    #[test]
    fn purge_by_next_hop() {
        let mut q = IfQueue::new(8, true);
        q.push((pkt(0, false), Some(NodeId(3)))).unwrap();
        q.push((pkt(1, false), Some(NodeId(4)))).unwrap();
        q.push((pkt(2, true), Some(NodeId(3)))).unwrap();
        let gone = q.remove_next_hop(NodeId(3));
        assert_eq!(gone.iter().map(|e| e.0.uid).collect::<Vec<_>>(), vec![2, 0]);
        assert_eq!(q.len(), 1);
    }
}
