//! Routing layer: one interface, three protocols.
//!
//! Agents are per-node state machines. They never touch the channel or the
//! event queue directly; every side effect is pushed into a
//! [`RoutingCtx`] as an [`Action`] which the caller (the full network
//! simulation, or the ideal-link [`harness`]) carries out.

pub mod aodv;
pub mod dsdv;
pub mod dsr;
pub mod harness;

use std::fmt;
use std::str::FromStr;

use crate::error::SimError;
use crate::kernel::RngStream;
use crate::packet::{DropReason, NodeId, Packet, PacketKind, SourceRoute};

pub use aodv::{Aodv, AodvConfig};
pub use dsdv::{Dsdv, DsdvConfig};
pub use dsr::{Dsr, DsrConfig};

/// Default TTL for data packets.
pub const DATA_TTL: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Aodv,
    Dsr,
    Dsdv,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Aodv, Protocol::Dsr, Protocol::Dsdv];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Aodv => "aodv",
            Protocol::Dsr => "dsr",
            Protocol::Dsdv => "dsdv",
        }
    }

    /// Whether control packets jump ahead of data in the interface queue.
    pub fn default_control_priority(self) -> bool {
        !matches!(self, Protocol::Dsdv)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| SimError::Config(format!("unknown protocol `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoutingConfig {
    pub aodv: AodvConfig,
    pub dsr: DsrConfig,
    pub dsdv: DsdvConfig,
}

impl RoutingConfig {
    /// Timer settings for ideal-link oracles: no broadcast jitter and
    /// phase-aligned periodic updates.
    pub fn ideal() -> Self {
        RoutingConfig {
            aodv: AodvConfig { jitter: 0.0, ..AodvConfig::default() },
            dsr: DsrConfig { jitter: 0.0, ..DsrConfig::default() },
            dsdv: DsdvConfig {
                jitter: 0.0,
                periodic_jitter: 0.0,
                initial_spread: 0.0,
                min_trigger_gap: 0.0,
                ..DsdvConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Timer {
    Aodv(aodv::AodvTimer),
    Dsr(dsr::DsrTimer),
    Dsdv(dsdv::DsdvTimer),
}

/// Side effect requested by an agent.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Hand to the link layer after `delay` seconds; `next_hop: None` broadcasts.
    Send { packet: Packet, next_hop: Option<NodeId>, delay: f64 },
    /// Packet reached its destination at this node.
    Deliver(Packet),
    Drop { packet: Packet, reason: DropReason },
    Timer { delay: f64, timer: Timer },
    /// Named event counter, e.g. discarded replies.
    Count(&'static str),
}

pub struct RoutingCtx<'a> {
    pub now: f64,
    pub me: NodeId,
    rng: &'a mut RngStream,
    next_uid: &'a mut u64,
    actions: Vec<Action>,
}

impl<'a> RoutingCtx<'a> {
    pub fn new(now: f64, me: NodeId, rng: &'a mut RngStream, next_uid: &'a mut u64) -> Self {
        RoutingCtx { now, me, rng, next_uid, actions: Vec::new() }
    }

    pub fn uid(&mut self) -> u64 {
        let u = *self.next_uid;
        *self.next_uid += 1;
        u
    }

    pub fn jitter(&mut self, max: f64) -> f64 {
        if max > 0.0 {
            self.rng.uniform() * max
        } else {
            0.0
        }
    }

    pub fn send(&mut self, packet: Packet, next_hop: Option<NodeId>, delay: f64) {
        self.actions.push(Action::Send { packet, next_hop, delay });
    }

    pub fn deliver(&mut self, packet: Packet) {
        self.actions.push(Action::Deliver(packet));
    }

    pub fn drop_packet(&mut self, packet: Packet, reason: DropReason) {
        self.actions.push(Action::Drop { packet, reason });
    }

    pub fn timer(&mut self, delay: f64, timer: Timer) {
        self.actions.push(Action::Timer { delay, timer });
    }

    pub fn count(&mut self, what: &'static str) {
        self.actions.push(Action::Count(what));
    }

    pub fn into_actions(self) -> Vec<Action> {
        self.actions
    }
}

/// What a node would do with a data packet for `dest` right now.
#[derive(Debug, Clone, PartialEq)]
pub enum RouteAction {
    DeliverLocal,
    Forward(NodeId),
    ForwardSourceRoute(SourceRoute),
    InitiateDiscovery,
    DropNoRoute,
}

/// Common surface of the three protocols.
pub trait RoutingAgent {
    fn start(&mut self, ctx: &mut RoutingCtx);
    /// A data packet from the local application.
    fn originate(&mut self, ctx: &mut RoutingCtx, packet: Packet);
    /// Any packet decoded from neighbor `from` (broadcast, or unicast to us).
    fn receive(&mut self, ctx: &mut RoutingCtx, packet: Packet, from: NodeId);
    /// Outcome of a unicast transmission to `next_hop`. On failure the
    /// link layer has already dropped `packet`.
    fn link_feedback(&mut self, ctx: &mut RoutingCtx, next_hop: NodeId, success: bool, packet: &Packet);
    /// A packet pulled back from the interface queue after its next hop failed.
    fn reroute(&mut self, ctx: &mut RoutingCtx, packet: Packet);
    fn on_timer(&mut self, ctx: &mut RoutingCtx, timer: Timer);
    fn route_lookup(&self, now: f64, dest: NodeId) -> RouteAction;
    /// Data packets held while waiting for a route.
    fn buffered_data(&self) -> usize;
    /// Empties the send buffer (node death).
    fn drain_buffer(&mut self) -> Vec<Packet>;
}

pub enum Agent {
    Aodv(Aodv),
    Dsr(Dsr),
    Dsdv(Dsdv),
}

impl Agent {
    pub fn new(protocol: Protocol, me: NodeId, cfg: &RoutingConfig) -> Self {
        match protocol {
            Protocol::Aodv => Agent::Aodv(Aodv::new(me, cfg.aodv.clone())),
            Protocol::Dsr => Agent::Dsr(Dsr::new(me, cfg.dsr.clone())),
            Protocol::Dsdv => Agent::Dsdv(Dsdv::new(me, cfg.dsdv.clone())),
        }
    }

    pub fn protocol(&self) -> Protocol {
        match self {
            Agent::Aodv(_) => Protocol::Aodv,
            Agent::Dsr(_) => Protocol::Dsr,
            Agent::Dsdv(_) => Protocol::Dsdv,
        }
    }

    fn inner(&mut self) -> &mut dyn RoutingAgent {
        match self {
            Agent::Aodv(a) => a,
            Agent::Dsr(a) => a,
            Agent::Dsdv(a) => a,
        }
    }

    fn inner_ref(&self) -> &dyn RoutingAgent {
        match self {
            Agent::Aodv(a) => a,
            Agent::Dsr(a) => a,
            Agent::Dsdv(a) => a,
        }
    }
}

impl RoutingAgent for Agent {
    fn start(&mut self, ctx: &mut RoutingCtx) {
        self.inner().start(ctx)
    }

    fn originate(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        self.inner().originate(ctx, packet)
    }

    fn receive(&mut self, ctx: &mut RoutingCtx, packet: Packet, from: NodeId) {
        self.inner().receive(ctx, packet, from)
    }

    fn link_feedback(&mut self, ctx: &mut RoutingCtx, next_hop: NodeId, success: bool, packet: &Packet) {
        self.inner().link_feedback(ctx, next_hop, success, packet)
    }

    fn reroute(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        self.inner().reroute(ctx, packet)
    }

    fn on_timer(&mut self, ctx: &mut RoutingCtx, timer: Timer) {
        self.inner().on_timer(ctx, timer)
    }

    fn route_lookup(&self, now: f64, dest: NodeId) -> RouteAction {
        self.inner_ref().route_lookup(now, dest)
    }

    fn buffered_data(&self) -> usize {
        self.inner_ref().buffered_data()
    }

    fn drain_buffer(&mut self) -> Vec<Packet> {
        self.inner().drain_buffer()
    }
}

/// Counts of control transmissions by packet type, split by whether this
/// node originated the packet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControlCounters {
    pub originated: std::collections::BTreeMap<PacketKind, u64>,
    pub forwarded: std::collections::BTreeMap<PacketKind, u64>,
}

impl ControlCounters {
    pub fn record(&mut self, me: NodeId, packet: &Packet) {
        let kind = packet.kind();
        if !kind.is_control() {
            return;
        }
        let map = if packet.src == me && packet.hops == 0 { &mut self.originated } else { &mut self.forwarded };
        *map.entry(kind).or_default() += 1;
    }

    pub fn total(&self) -> u64 {
        self.originated.values().sum::<u64>() + self.forwarded.values().sum::<u64>()
    }
}

/// Bounded FIFO of data packets awaiting a route.
#[derive(Debug, Clone, Default)]
pub struct SendBuffer {
    capacity: usize,
    timeout: f64,
    items: std::collections::VecDeque<(Packet, f64)>,
}

impl SendBuffer {
    pub fn new(capacity: usize, timeout: f64) -> Self {
        SendBuffer { capacity, timeout, items: Default::default() }
    }

    /// Returns the packet evicted to make room, if any.
    pub fn push(&mut self, packet: Packet, now: f64) -> Option<Packet> {
        let evicted = if self.items.len() >= self.capacity { self.items.pop_front().map(|(p, _)| p) } else { None };
        if self.capacity > 0 {
            self.items.push_back((packet, now));
            evicted
        } else {
            Some(packet)
        }
    }

    pub fn expire(&mut self, now: f64) -> Vec<Packet> {
        let mut out = Vec::new();
        while let Some((_, t)) = self.items.front() {
            if now - t >= self.timeout {
                out.push(self.items.pop_front().unwrap().0);
            } else {
                break;
            }
        }
        out
    }

    /// Removes and returns packets matching `pred`, preserving order.
    pub fn take_where<F: FnMut(&Packet) -> bool>(&mut self, mut pred: F) -> Vec<Packet> {
        let mut taken = Vec::new();
        let mut kept = std::collections::VecDeque::with_capacity(self.items.len());
        for (p, t) in self.items.drain(..) {
            if pred(&p) {
                taken.push(p);
            } else {
                kept.push_back((p, t));
            }
        }
        self.items = kept;
        taken
    }

    pub fn has_dest(&self, dest: NodeId) -> bool {
        self.items.iter().any(|(p, _)| p.dst == Some(dest))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn drain(&mut self) -> Vec<Packet> {
        self.items.drain(..).map(|(p, _)| p).collect()
    }
}
