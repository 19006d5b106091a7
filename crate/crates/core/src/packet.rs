//! Simulated frames and the identifiers they carry.

use std::fmt;

use crate::routing::aodv::AodvMsg;
use crate::routing::dsdv::DsdvUpdate;
use crate::routing::dsr::DsrMsg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// UDP + IP header added to every CBR payload.
pub const TRANSPORT_HEADER_BYTES: u32 = 28;
/// IP header carried by routing control messages.
pub const IP_HEADER_BYTES: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PacketKind {
    Data,
    Rreq,
    Rrep,
    Rerr,
    Hello,
    DsdvUpdate,
}

impl PacketKind {
    pub fn is_control(self) -> bool {
        self != PacketKind::Data
    }

    pub fn name(self) -> &'static str {
        match self {
            PacketKind::Data => "data",
            PacketKind::Rreq => "rreq",
            PacketKind::Rrep => "rrep",
            PacketKind::Rerr => "rerr",
            PacketKind::Hello => "hello",
            PacketKind::DsdvUpdate => "dsdv_update",
        }
    }
}

/// Ordered, loop-free hop list from source to destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRoute(Vec<NodeId>);

impl SourceRoute {
    /// Returns `None` when a node repeats.
    pub fn new(hops: Vec<NodeId>) -> Option<Self> {
        for (i, a) in hops.iter().enumerate() {
            if hops[i + 1..].contains(a) {
                return None;
            }
        }
        Some(SourceRoute(hops))
    }

    pub fn hops(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of links traversed end to end.
    pub fn hop_count(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn first(&self) -> Option<NodeId> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<NodeId> {
        self.0.last().copied()
    }

    pub fn position(&self, node: NodeId) -> Option<usize> {
        self.0.iter().position(|&n| n == node)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.0.contains(&node)
    }

    /// Hop following `node`, if `node` is on the route and not last.
    pub fn next_after(&self, node: NodeId) -> Option<NodeId> {
        let i = self.position(node)?;
        self.0.get(i + 1).copied()
    }

    pub fn contains_link(&self, from: NodeId, to: NodeId) -> bool {
        self.0.windows(2).any(|w| w[0] == from && w[1] == to)
    }

    pub fn reversed(&self) -> SourceRoute {
        SourceRoute(self.0.iter().rev().copied().collect())
    }

    /// Sub-route `[i, j]` inclusive.
    pub fn slice(&self, i: usize, j: usize) -> SourceRoute {
        SourceRoute(self.0[i..=j].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Data {
        conn: usize,
        seq: u64,
        payload_bytes: u32,
        route: Option<SourceRoute>,
    },
    Aodv(AodvMsg),
    Dsr(DsrMsg),
    Dsdv(DsdvUpdate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub uid: u64,
    /// Originator.
    pub src: NodeId,
    /// Final destination; `None` for one-hop broadcasts.
    pub dst: Option<NodeId>,
    pub ttl: u32,
    /// Links traversed so far.
    pub hops: u32,
    /// Origination time, s.
    pub created_at: f64,
    pub body: Body,
}

impl Packet {
    pub fn kind(&self) -> PacketKind {
        match &self.body {
            Body::Data { .. } => PacketKind::Data,
            Body::Aodv(m) => m.kind(),
            Body::Dsr(m) => m.kind(),
            Body::Dsdv(_) => PacketKind::DsdvUpdate,
        }
    }

    pub fn is_data(&self) -> bool {
        matches!(self.body, Body::Data { .. })
    }

    /// Network-layer size in bytes, MAC header excluded.
    pub fn size_bytes(&self) -> u32 {
        match &self.body {
            Body::Data { payload_bytes, route, .. } => {
                // DSR source-route option: 4-byte option header + 4 bytes per address.
                let sr = route.as_ref().map_or(0, |r| 4 + 4 * r.len() as u32);
                payload_bytes + TRANSPORT_HEADER_BYTES + sr
            }
            Body::Aodv(m) => IP_HEADER_BYTES + m.size_bytes(),
            Body::Dsr(m) => IP_HEADER_BYTES + m.size_bytes(),
            Body::Dsdv(u) => IP_HEADER_BYTES + u.size_bytes(),
        }
    }

    /// Application payload bits for data packets, 0 otherwise.
    pub fn payload_bits(&self) -> u64 {
        match &self.body {
            Body::Data { payload_bytes, .. } => u64::from(*payload_bytes) * 8,
            _ => 0,
        }
    }

    pub fn data_id(&self) -> Option<(usize, u64)> {
        match &self.body {
            Body::Data { conn, seq, .. } => Some((*conn, *seq)),
            _ => None,
        }
    }

    pub fn source_route(&self) -> Option<&SourceRoute> {
        match &self.body {
            Body::Data { route, .. } => route.as_ref(),
            _ => None,
        }
    }
}

/// Why a packet left the network without reaching its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropReason {
    /// Final MAC attempt lost to overlapping frames.
    Collision,
    /// Final MAC attempt arrived below the receive threshold.
    BelowThreshold,
    NoRoute,
    /// MAC retries exhausted for another reason (receiver busy or dead).
    RetryLimit,
    QueueOverflow,
    EnergyExhausted,
    TtlExpired,
    Malformed,
}

impl DropReason {
    pub const ALL: [DropReason; 8] = [
        DropReason::Collision,
        DropReason::BelowThreshold,
        DropReason::NoRoute,
        DropReason::RetryLimit,
        DropReason::QueueOverflow,
        DropReason::EnergyExhausted,
        DropReason::TtlExpired,
        DropReason::Malformed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DropReason::Collision => "collision",
            DropReason::BelowThreshold => "below_threshold",
            DropReason::NoRoute => "no_route",
            DropReason::RetryLimit => "retry_limit",
            DropReason::QueueOverflow => "queue_overflow",
            DropReason::EnergyExhausted => "energy_exhausted",
            DropReason::TtlExpired => "ttl_expired",
            DropReason::Malformed => "malformed",
        }
    }
}
