//! Destination-Sequenced Distance Vector routing.
//!
//! Every node periodically broadcasts its whole table, bumping its own even
//! sequence number each time. Entries are replaced by fresher sequence
//! numbers, or by shorter paths at equal freshness. A broken link is
//! advertised with infinite metric and an odd sequence number, which only
//! the destination itself can supersede.

use std::collections::BTreeMap;

use super::{RouteAction, RoutingAgent, RoutingCtx, Timer};
use crate::packet::{Body, DropReason, NodeId, Packet};

/// Metric of an unreachable destination.
pub const INFINITY: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct DsdvConfig {
    /// Full-dump period, s.
    pub dump_interval: f64,
    /// Relative spread of each period: next dump in `interval * [1 - j, 1 + j]`.
    pub periodic_jitter: f64,
    /// First dump lands uniformly in `[0, initial_spread)`.
    pub initial_spread: f64,
    pub triggered_updates: bool,
    /// Minimum spacing between triggered updates, s.
    pub min_trigger_gap: f64,
    /// Upper bound of the random delay before a triggered update, s.
    pub jitter: f64,
    /// A neighbor silent for this many dump intervals is considered gone.
    pub neighbor_timeout_dumps: u32,
}

impl Default for DsdvConfig {
    fn default() -> Self {
        DsdvConfig {
            dump_interval: 15.0,
            periodic_jitter: 0.1,
            initial_spread: 1.0,
            triggered_updates: true,
            min_trigger_gap: 1.0,
            jitter: 0.01,
            neighbor_timeout_dumps: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DsdvEntry {
    pub dest: NodeId,
    pub seq: u32,
    pub hops: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsdvUpdate {
    pub full: bool,
    pub entries: Vec<DsdvEntry>,
}

impl DsdvUpdate {
    /// One count byte, then per entry a 4-byte address, 1-byte metric and
    /// 4-byte sequence number.
    pub fn size_bytes(&self) -> u32 {
        1 + 9 * self.entries.len() as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DsdvTimer {
    Periodic,
    Trigger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsdvRoute {
    pub next_hop: NodeId,
    pub hops: u32,
    pub seq: u32,
    pub install_time: f64,
    changed: bool,
}

impl DsdvRoute {
    pub fn reachable(&self) -> bool {
        self.hops != INFINITY
    }
}

pub struct Dsdv {
    me: NodeId,
    cfg: DsdvConfig,
    table: BTreeMap<NodeId, DsdvRoute>,
    last_heard: BTreeMap<NodeId, f64>,
    trigger_pending: bool,
    last_trigger: f64,
}

impl Dsdv {
    pub fn new(me: NodeId, cfg: DsdvConfig) -> Self {
        let mut table = BTreeMap::new();
        table.insert(me, DsdvRoute { next_hop: me, hops: 0, seq: 0, install_time: 0.0, changed: false });
        Dsdv { me, cfg, table, last_heard: BTreeMap::new(), trigger_pending: false, last_trigger: f64::NEG_INFINITY }
    }

    pub fn table(&self) -> &BTreeMap<NodeId, DsdvRoute> {
        &self.table
    }

    pub fn own_seq(&self) -> u32 {
        self.table[&self.me].seq
    }

    fn bump_own_seq_past(&mut self, seen: u32) {
        let own = self.table.get_mut(&self.me).expect("self entry");
        let mut next = own.seq.max(seen) + 1;
        if next % 2 == 1 {
            next += 1;
        }
        own.seq = next;
        own.changed = true;
    }

    fn broadcast(&mut self, ctx: &mut RoutingCtx, full: bool, delay: f64) {
        let entries = self
            .table
            .iter()
            .filter(|(d, r)| full || r.changed || **d == self.me)
            .map(|(&dest, r)| DsdvEntry { dest, seq: r.seq, hops: r.hops })
            .collect();
        for r in self.table.values_mut() {
            r.changed = false;
        }
        let packet = Packet {
            uid: ctx.uid(),
            src: self.me,
            dst: None,
            ttl: 1,
            hops: 0,
            created_at: ctx.now,
            body: Body::Dsdv(DsdvUpdate { full, entries }),
        };
        ctx.send(packet, None, delay);
    }

    fn schedule_trigger(&mut self, ctx: &mut RoutingCtx) {
        if !self.cfg.triggered_updates || self.trigger_pending {
            return;
        }
        self.trigger_pending = true;
        let gap = (self.last_trigger + self.cfg.min_trigger_gap - ctx.now).max(0.0);
        let delay = gap + ctx.jitter(self.cfg.jitter);
        ctx.timer(delay, Timer::Dsdv(DsdvTimer::Trigger));
    }

    fn apply_update(&mut self, ctx: &mut RoutingCtx, update: &DsdvUpdate, from: NodeId) {
        let mut metric_changed = false;
        for e in &update.entries {
            if e.dest == self.me {
                if e.seq % 2 == 1 && e.seq > self.own_seq() {
                    self.bump_own_seq_past(e.seq);
                    metric_changed = true;
                }
                continue;
            }
            let hops = if e.hops == INFINITY { INFINITY } else { e.hops + 1 };
            match self.table.get_mut(&e.dest) {
                None => {
                    if hops == INFINITY {
                        continue;
                    }
                    self.table.insert(
                        e.dest,
                        DsdvRoute { next_hop: from, hops, seq: e.seq, install_time: ctx.now, changed: true },
                    );
                    metric_changed = true;
                }
                Some(r) => {
                    if e.seq > r.seq || (e.seq == r.seq && hops < r.hops) {
                        let differs = r.hops != hops || r.next_hop != from;
                        r.next_hop = from;
                        r.hops = hops;
                        r.seq = e.seq;
                        r.install_time = ctx.now;
                        if differs {
                            r.changed = true;
                            metric_changed = true;
                        }
                    }
                }
            }
        }
        if metric_changed {
            self.schedule_trigger(ctx);
        }
    }

    fn link_break(&mut self, ctx: &mut RoutingCtx, neighbor: NodeId) {
        self.last_heard.remove(&neighbor);
        let mut any = false;
        for (d, r) in self.table.iter_mut() {
            if *d != self.me && r.next_hop == neighbor && r.reachable() {
                r.hops = INFINITY;
                if r.seq % 2 == 0 {
                    r.seq += 1;
                }
                r.install_time = ctx.now;
                r.changed = true;
                any = true;
            }
        }
        if any {
            self.schedule_trigger(ctx);
        }
    }

    fn route_data(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        let dst = packet.dst.expect("data packets carry a destination");
        match self.route_lookup(ctx.now, dst) {
            RouteAction::DeliverLocal => ctx.deliver(packet),
            RouteAction::Forward(nh) => ctx.send(packet, Some(nh), 0.0),
            _ => ctx.drop_packet(packet, DropReason::NoRoute),
        }
    }
}

impl RoutingAgent for Dsdv {
    fn start(&mut self, ctx: &mut RoutingCtx) {
        let d = ctx.jitter(self.cfg.initial_spread);
        ctx.timer(d, Timer::Dsdv(DsdvTimer::Periodic));
    }

    fn originate(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        self.route_data(ctx, packet);
    }

    fn receive(&mut self, ctx: &mut RoutingCtx, mut packet: Packet, from: NodeId) {
        self.last_heard.insert(from, ctx.now);
        match &packet.body {
            Body::Data { .. } => {
                if packet.dst != Some(self.me) {
                    if packet.ttl <= 1 {
                        ctx.drop_packet(packet, DropReason::TtlExpired);
                        return;
                    }
                    packet.ttl -= 1;
                }
                self.route_data(ctx, packet);
            }
            Body::Dsdv(update) => {
                let update = update.clone();
                self.apply_update(ctx, &update, from);
            }
            Body::Aodv(_) | Body::Dsr(_) => ctx.count("foreign_control"),
        }
    }

    fn link_feedback(&mut self, ctx: &mut RoutingCtx, next_hop: NodeId, success: bool, _packet: &Packet) {
        if success {
            self.last_heard.insert(next_hop, ctx.now);
        } else {
            self.link_break(ctx, next_hop);
        }
    }

    fn reroute(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        if packet.is_data() {
            self.route_data(ctx, packet);
        } else {
            ctx.count("dsdv_control_purged");
        }
    }

    fn on_timer(&mut self, ctx: &mut RoutingCtx, timer: Timer) {
        let Timer::Dsdv(timer) = timer else { return };
        match timer {
            DsdvTimer::Periodic => {
                let limit = f64::from(self.cfg.neighbor_timeout_dumps) * self.cfg.dump_interval;
                let silent: Vec<NodeId> =
                    self.last_heard.iter().filter(|(_, &t)| ctx.now - t > limit).map(|(&n, _)| n).collect();
                for n in silent {
                    self.link_break(ctx, n);
                }
                let seq = self.own_seq();
                self.bump_own_seq_past(seq);
                self.broadcast(ctx, true, 0.0);
                let j = self.cfg.periodic_jitter;
                let next = self.cfg.dump_interval * (1.0 - j + ctx.jitter(2.0 * j));
                ctx.timer(next, Timer::Dsdv(DsdvTimer::Periodic));
            }
            DsdvTimer::Trigger => {
                self.trigger_pending = false;
                if self.table.values().any(|r| r.changed) {
                    self.last_trigger = ctx.now;
                    self.broadcast(ctx, false, 0.0);
                }
            }
        }
    }

    fn route_lookup(&self, _now: f64, dest: NodeId) -> RouteAction {
        if dest == self.me {
            return RouteAction::DeliverLocal;
        }
        match self.table.get(&dest) {
            Some(r) if r.reachable() => RouteAction::Forward(r.next_hop),
            _ => RouteAction::DropNoRoute,
        }
    }

    fn buffered_data(&self) -> usize {
        0
    }

    fn drain_buffer(&mut self) -> Vec<Packet> {
        Vec::new()
    }
}
