//! Ad hoc On-demand Distance Vector routing.
//!
//! Routes are discovered by flooding RREQs; the destination (or an
//! intermediate node holding a fresh enough route) answers with a RREP that
//! travels back along the reverse path, installing forward routes as it
//! goes. Destination sequence numbers order route freshness. HELLO
//! broadcasts keep neighbor liveness; a silent neighbor or a failed unicast
//! breaks the link and RERRs are sent to precursors.

use std::collections::{BTreeMap, BTreeSet};

use super::{RouteAction, RoutingAgent, RoutingCtx, SendBuffer, Timer};
use crate::packet::{Body, DropReason, NodeId, Packet, PacketKind};

#[derive(Debug, Clone, PartialEq)]
pub struct AodvConfig {
    pub hello_enabled: bool,
    pub hello_interval: f64,
    pub allowed_hello_loss: u32,
    pub active_route_timeout: f64,
    pub rreq_retries: u32,
    pub net_diameter: u32,
    pub node_traversal_time: f64,
    pub buffer_capacity: usize,
    pub buffer_timeout: f64,
    /// Upper bound of the random delay before rebroadcasting, s.
    pub jitter: f64,
    pub intermediate_reply: bool,
}

impl Default for AodvConfig {
    fn default() -> Self {
        AodvConfig {
            hello_enabled: true,
            hello_interval: 1.0,
            allowed_hello_loss: 2,
            active_route_timeout: 10.0,
            rreq_retries: 3,
            net_diameter: 35,
            node_traversal_time: 0.04,
            buffer_capacity: 64,
            buffer_timeout: 30.0,
            jitter: 0.01,
            intermediate_reply: true,
        }
    }
}

impl AodvConfig {
    pub fn net_traversal_time(&self) -> f64 {
        2.0 * self.node_traversal_time * f64::from(self.net_diameter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AodvMsg {
    Rreq {
        id: u32,
        origin: NodeId,
        origin_seq: u32,
        dest: NodeId,
        /// `None` when the originator knows no sequence number for `dest`.
        dest_seq: Option<u32>,
        hop_count: u32,
    },
    Rrep {
        dest: NodeId,
        dest_seq: u32,
        origin: NodeId,
        hop_count: u32,
        lifetime: f64,
    },
    Rerr {
        unreachable: Vec<(NodeId, u32)>,
    },
    Hello {
        seq: u32,
    },
}

impl AodvMsg {
    pub fn kind(&self) -> PacketKind {
        match self {
            AodvMsg::Rreq { .. } => PacketKind::Rreq,
            AodvMsg::Rrep { .. } => PacketKind::Rrep,
            AodvMsg::Rerr { .. } => PacketKind::Rerr,
            AodvMsg::Hello { .. } => PacketKind::Hello,
        }
    }

    pub fn size_bytes(&self) -> u32 {
        match self {
            AodvMsg::Rreq { .. } => 24,
            AodvMsg::Rrep { .. } | AodvMsg::Hello { .. } => 20,
            AodvMsg::Rerr { unreachable } => 4 + 8 * unreachable.len() as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AodvTimer {
    Hello,
    RreqTimeout { dest: NodeId, attempt: u32 },
    Housekeeping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AodvRoute {
    pub next_hop: NodeId,
    pub hops: u32,
    pub dest_seq: u32,
    pub valid_seq: bool,
    pub valid: bool,
    pub expiry: f64,
    pub install_time: f64,
    pub precursors: BTreeSet<NodeId>,
}

impl AodvRoute {
    pub fn is_active(&self, now: f64) -> bool {
        self.valid && self.expiry > now
    }
}

pub struct Aodv {
    me: NodeId,
    cfg: AodvConfig,
    seq: u32,
    rreq_id: u32,
    table: BTreeMap<NodeId, AodvRoute>,
    seen: BTreeMap<(NodeId, u32), f64>,
    buffer: SendBuffer,
    /// Destination -> current discovery attempt.
    pending: BTreeMap<NodeId, u32>,
    neighbors: BTreeMap<NodeId, f64>,
}

impl Aodv {
    pub fn new(me: NodeId, cfg: AodvConfig) -> Self {
        let buffer = SendBuffer::new(cfg.buffer_capacity, cfg.buffer_timeout);
        Aodv {
            me,
            cfg,
            seq: 0,
            rreq_id: 0,
            table: BTreeMap::new(),
            seen: BTreeMap::new(),
            buffer,
            pending: BTreeMap::new(),
            neighbors: BTreeMap::new(),
        }
    }

    pub fn table(&self) -> &BTreeMap<NodeId, AodvRoute> {
        &self.table
    }

    pub fn own_seq(&self) -> u32 {
        self.seq
    }

    pub fn is_discovering(&self, dest: NodeId) -> bool {
        self.pending.contains_key(&dest)
    }

    fn active(&self, dest: NodeId, now: f64) -> Option<&AodvRoute> {
        self.table.get(&dest).filter(|r| r.is_active(now))
    }

    /// Installs or refreshes a route. Newer sequence numbers win; equal
    /// ones win only with fewer hops (or when the current entry is down).
    /// Returns whether the entry changed.
    fn update_route(&mut self, now: f64, dest: NodeId, next_hop: NodeId, hops: u32, seq: Option<u32>, lifetime: f64) -> bool {
        let expiry = now + lifetime;
        let Some(r) = self.table.get_mut(&dest) else {
            self.table.insert(
                dest,
                AodvRoute {
                    next_hop,
                    hops,
                    dest_seq: seq.unwrap_or(0),
                    valid_seq: seq.is_some(),
                    valid: true,
                    expiry,
                    install_time: now,
                    precursors: BTreeSet::new(),
                },
            );
            return true;
        };
        let active = r.is_active(now);
        let accept = match seq {
            Some(s) => !r.valid_seq || s > r.dest_seq || (s == r.dest_seq && (!active || hops < r.hops)),
            None => !active || hops < r.hops,
        };
        if accept {
            if active && r.next_hop == next_hop && r.hops == hops {
                r.expiry = r.expiry.max(expiry);
            } else {
                r.expiry = expiry;
                r.install_time = now;
            }
            r.next_hop = next_hop;
            r.hops = hops;
            r.valid = true;
            if let Some(s) = seq {
                r.dest_seq = r.dest_seq.max(s);
                r.valid_seq = true;
            }
            true
        } else {
            if active && r.next_hop == next_hop && r.hops == hops {
                r.expiry = r.expiry.max(expiry);
            }
            false
        }
    }

    fn touch_neighbor(&mut self, now: f64, from: NodeId) {
        self.neighbors.insert(from, now);
        let art = self.cfg.active_route_timeout;
        self.update_route(now, from, from, 1, None, art);
    }

    fn control(&self, ctx: &mut RoutingCtx, dst: Option<NodeId>, ttl: u32, msg: AodvMsg) -> Packet {
        Packet { uid: ctx.uid(), src: self.me, dst, ttl, hops: 0, created_at: ctx.now, body: Body::Aodv(msg) }
    }

    fn send_rerr(&self, ctx: &mut RoutingCtx, unreachable: Vec<(NodeId, u32)>) {
        if unreachable.is_empty() {
            return;
        }
        let p = self.control(ctx, None, 1, AodvMsg::Rerr { unreachable });
        let d = ctx.jitter(self.cfg.jitter);
        ctx.send(p, None, d);
    }

    fn start_discovery(&mut self, ctx: &mut RoutingCtx, dest: NodeId, attempt: u32) {
        self.seq += 1;
        self.rreq_id += 1;
        self.seen.insert((self.me, self.rreq_id), ctx.now);
        let dest_seq = self.table.get(&dest).filter(|r| r.valid_seq).map(|r| r.dest_seq);
        let msg = AodvMsg::Rreq { id: self.rreq_id, origin: self.me, origin_seq: self.seq, dest, dest_seq, hop_count: 0 };
        let p = self.control(ctx, None, self.cfg.net_diameter, msg);
        ctx.send(p, None, 0.0);
        self.pending.insert(dest, attempt);
        let wait = self.cfg.net_traversal_time() * f64::from(1u32 << attempt.min(16));
        ctx.timer(wait, Timer::Aodv(AodvTimer::RreqTimeout { dest, attempt }));
    }

    fn flush_buffer(&mut self, ctx: &mut RoutingCtx, dest: NodeId) {
        let ready = self.buffer.take_where(|p| p.dst == Some(dest));
        for p in ready {
            self.route_data(ctx, p);
        }
    }

    fn link_break(&mut self, ctx: &mut RoutingCtx, neighbor: NodeId) {
        self.neighbors.remove(&neighbor);
        let mut unreachable = Vec::new();
        for (&dest, r) in self.table.iter_mut() {
            if r.valid && r.next_hop == neighbor {
                r.valid = false;
                if r.valid_seq {
                    r.dest_seq += 1;
                }
                r.expiry = ctx.now;
                if !r.precursors.is_empty() {
                    unreachable.push((dest, r.dest_seq));
                }
                r.precursors.clear();
            }
        }
        self.send_rerr(ctx, unreachable);
    }

    fn route_data(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        let dst = packet.dst.expect("data packets carry a destination");
        if dst == self.me {
            ctx.deliver(packet);
            return;
        }
        if let Some(r) = self.active(dst, ctx.now) {
            let nh = r.next_hop;
            let refresh = ctx.now + self.cfg.active_route_timeout;
            for d in [dst, nh] {
                if let Some(r) = self.table.get_mut(&d) {
                    r.expiry = r.expiry.max(refresh);
                }
            }
            ctx.send(packet, Some(nh), 0.0);
        } else if packet.src == self.me {
            if let Some(old) = self.buffer.push(packet, ctx.now) {
                ctx.drop_packet(old, DropReason::NoRoute);
            }
            if !self.pending.contains_key(&dst) {
                self.start_discovery(ctx, dst, 0);
            }
        } else {
            let seq = self.table.get(&dst).map_or(0, |r| r.dest_seq);
            ctx.drop_packet(packet, DropReason::NoRoute);
            self.send_rerr(ctx, vec![(dst, seq)]);
        }
    }

    fn handle_rreq(&mut self, ctx: &mut RoutingCtx, packet: Packet, from: NodeId) {
        let Body::Aodv(AodvMsg::Rreq { id, origin, origin_seq, dest, dest_seq, hop_count }) = packet.body else {
            unreachable!()
        };
        if origin == self.me || self.seen.contains_key(&(origin, id)) {
            return;
        }
        self.seen.insert((origin, id), ctx.now);
        let art = self.cfg.active_route_timeout;
        self.update_route(ctx.now, origin, from, hop_count + 1, Some(origin_seq), art);

        if dest == self.me {
            if let Some(s) = dest_seq {
                self.seq = self.seq.max(s);
            }
            let msg = AodvMsg::Rrep { dest: self.me, dest_seq: self.seq, origin, hop_count: 0, lifetime: 2.0 * art };
            let p = self.control(ctx, Some(origin), self.cfg.net_diameter, msg);
            ctx.send(p, Some(from), 0.0);
            return;
        }

        if self.cfg.intermediate_reply {
            if let Some(r) = self.active(dest, ctx.now) {
                let fresh = r.valid_seq && dest_seq.is_none_or(|s| r.dest_seq >= s);
                if fresh && r.next_hop != from {
                    let (nh, seq, hops, lifetime) = (r.next_hop, r.dest_seq, r.hops, r.expiry - ctx.now);
                    if let Some(fwd) = self.table.get_mut(&dest) {
                        fwd.precursors.insert(from);
                    }
                    if let Some(rev) = self.table.get_mut(&origin) {
                        rev.precursors.insert(nh);
                    }
                    let msg = AodvMsg::Rrep { dest, dest_seq: seq, origin, hop_count: hops, lifetime };
                    let p = self.control(ctx, Some(origin), self.cfg.net_diameter, msg);
                    ctx.send(p, Some(from), 0.0);
                    return;
                }
            }
        }

        if packet.ttl > 1 {
            let known = self.table.get(&dest).filter(|r| r.valid_seq).map(|r| r.dest_seq);
            let dest_seq = match (dest_seq, known) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            let fwd = Packet {
                ttl: packet.ttl - 1,
                body: Body::Aodv(AodvMsg::Rreq { id, origin, origin_seq, dest, dest_seq, hop_count: hop_count + 1 }),
                ..packet
            };
            let d = ctx.jitter(self.cfg.jitter);
            ctx.send(fwd, None, d);
        }
    }

    fn handle_rrep(&mut self, ctx: &mut RoutingCtx, packet: Packet, from: NodeId) {
        let Body::Aodv(AodvMsg::Rrep { dest, dest_seq, origin, hop_count, lifetime }) = packet.body else {
            unreachable!()
        };
        let stale = self.table.get(&dest).is_some_and(|r| r.valid_seq && dest_seq < r.dest_seq);
        if stale {
            ctx.count("aodv_stale_rrep");
            return;
        }
        let hops = hop_count + 1;
        self.update_route(ctx.now, dest, from, hops, Some(dest_seq), lifetime);

        if origin == self.me {
            self.pending.remove(&dest);
            self.flush_buffer(ctx, dest);
            return;
        }
        let Some(nh) = self.active(origin, ctx.now).map(|r| r.next_hop) else {
            ctx.count("aodv_rrep_no_reverse");
            return;
        };
        if packet.ttl <= 1 {
            return;
        }
        if let Some(r) = self.table.get_mut(&dest) {
            r.precursors.insert(nh);
        }
        if let Some(r) = self.table.get_mut(&origin) {
            r.precursors.insert(from);
        }
        let fwd = Packet {
            ttl: packet.ttl - 1,
            body: Body::Aodv(AodvMsg::Rrep { dest, dest_seq, origin, hop_count: hops, lifetime }),
            ..packet
        };
        ctx.send(fwd, Some(nh), 0.0);
    }

    fn handle_rerr(&mut self, ctx: &mut RoutingCtx, unreachable: Vec<(NodeId, u32)>, from: NodeId) {
        let mut propagate = Vec::new();
        for (dest, seq) in unreachable {
            if let Some(r) = self.table.get_mut(&dest) {
                if r.valid && r.next_hop == from {
                    r.valid = false;
                    r.dest_seq = r.dest_seq.max(seq);
                    r.expiry = ctx.now;
                    if !r.precursors.is_empty() {
                        propagate.push((dest, r.dest_seq));
                    }
                    r.precursors.clear();
                }
            }
        }
        self.send_rerr(ctx, propagate);
    }
}

impl RoutingAgent for Aodv {
    fn start(&mut self, ctx: &mut RoutingCtx) {
        if self.cfg.hello_enabled {
            let d = ctx.jitter(self.cfg.hello_interval);
            ctx.timer(d, Timer::Aodv(AodvTimer::Hello));
        }
        ctx.timer(1.0, Timer::Aodv(AodvTimer::Housekeeping));
    }

    fn originate(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        self.route_data(ctx, packet);
    }

    fn receive(&mut self, ctx: &mut RoutingCtx, mut packet: Packet, from: NodeId) {
        self.touch_neighbor(ctx.now, from);
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
            Body::Aodv(AodvMsg::Rreq { .. }) => self.handle_rreq(ctx, packet, from),
            Body::Aodv(AodvMsg::Rrep { .. }) => self.handle_rrep(ctx, packet, from),
            Body::Aodv(AodvMsg::Rerr { unreachable }) => {
                let list = unreachable.clone();
                self.handle_rerr(ctx, list, from);
            }
            Body::Aodv(AodvMsg::Hello { seq }) => {
                let lifetime = f64::from(self.cfg.allowed_hello_loss) * self.cfg.hello_interval;
                let seq = *seq;
                self.update_route(ctx.now, from, from, 1, Some(seq), lifetime);
            }
            Body::Dsr(_) | Body::Dsdv(_) => ctx.count("foreign_control"),
        }
    }

    fn link_feedback(&mut self, ctx: &mut RoutingCtx, next_hop: NodeId, success: bool, _packet: &Packet) {
        if success {
            self.neighbors.insert(next_hop, ctx.now);
        } else {
            self.link_break(ctx, next_hop);
        }
    }

    fn reroute(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        if packet.is_data() {
            self.route_data(ctx, packet);
        } else {
            ctx.count("aodv_control_purged");
        }
    }

    fn on_timer(&mut self, ctx: &mut RoutingCtx, timer: Timer) {
        let Timer::Aodv(timer) = timer else { return };
        match timer {
            AodvTimer::Hello => {
                let p = self.control(ctx, None, 1, AodvMsg::Hello { seq: self.seq });
                ctx.send(p, None, 0.0);
                let limit = f64::from(self.cfg.allowed_hello_loss) * self.cfg.hello_interval;
                let silent: Vec<NodeId> =
                    self.neighbors.iter().filter(|(_, &t)| ctx.now - t > limit).map(|(&n, _)| n).collect();
                for n in silent {
                    self.link_break(ctx, n);
                }
                let interval = self.cfg.hello_interval;
                let next = if self.cfg.jitter > 0.0 { interval * (0.9 + ctx.jitter(0.2)) } else { interval };
                ctx.timer(next, Timer::Aodv(AodvTimer::Hello));
            }
            AodvTimer::RreqTimeout { dest, attempt } => {
                if self.pending.get(&dest) != Some(&attempt) {
                    return;
                }
                if self.active(dest, ctx.now).is_some() {
                    self.pending.remove(&dest);
                    self.flush_buffer(ctx, dest);
                } else if !self.buffer.has_dest(dest) {
                    self.pending.remove(&dest);
                } else if attempt < self.cfg.rreq_retries {
                    self.start_discovery(ctx, dest, attempt + 1);
                } else {
                    self.pending.remove(&dest);
                    for p in self.buffer.take_where(|p| p.dst == Some(dest)) {
                        ctx.drop_packet(p, DropReason::NoRoute);
                    }
                }
            }
            AodvTimer::Housekeeping => {
                for p in self.buffer.expire(ctx.now) {
                    ctx.drop_packet(p, DropReason::NoRoute);
                }
                let horizon = 2.0 * self.cfg.net_traversal_time();
                let now = ctx.now;
                self.seen.retain(|_, t| now - *t < horizon);
                ctx.timer(1.0, Timer::Aodv(AodvTimer::Housekeeping));
            }
        }
    }

    fn route_lookup(&self, now: f64, dest: NodeId) -> RouteAction {
        if dest == self.me {
            RouteAction::DeliverLocal
        } else if let Some(r) = self.active(dest, now) {
            RouteAction::Forward(r.next_hop)
        } else {
            RouteAction::InitiateDiscovery
        }
    }

    fn buffered_data(&self) -> usize {
        self.buffer.len()
    }

    fn drain_buffer(&mut self) -> Vec<Packet> {
        self.buffer.drain()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::stream;
    use crate::routing::Action;

    struct Probe {
        rng: crate::kernel::RngStream,
        uid: u64,
    }

    impl Probe {
        fn new() -> Self {
            Probe { rng: stream("routing", 1), uid: 0 }
        }

        fn run<F: FnOnce(&mut Aodv, &mut RoutingCtx)>(&mut self, a: &mut Aodv, now: f64, f: F) -> Vec<Action> {
            let me = a.me;
            let mut ctx = RoutingCtx::new(now, me, &mut self.rng, &mut self.uid);
            f(a, &mut ctx);
            ctx.into_actions()
        }
    }

    fn ctrl(src: u32, ttl: u32, msg: AodvMsg) -> Packet {
        Packet { uid: 99, src: NodeId(src), dst: None, ttl, hops: 1, created_at: 0.0, body: Body::Aodv(msg) }
    }

    fn data(src: u32, dst: u32) -> Packet {
        Packet {
            uid: 7,
            src: NodeId(src),
            dst: Some(NodeId(dst)),
            ttl: 32,
            hops: 0,
            created_at: 0.0,
            body: Body::Data { conn: 0, seq: 0, payload_bytes: 512, route: None },
        }
    }

    fn sends(actions: &[Action]) -> Vec<(PacketKind, Option<NodeId>)> {
        actions
            .iter()
            .filter_map(|a| match a {
                Action::Send { packet, next_hop, .. } => Some((packet.kind(), *next_hop)),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn no_route_buffers_and_discovers() {
        let mut a = Aodv::new(NodeId(0), AodvConfig::default());
        let mut p = Probe::new();
        assert_eq!(a.route_lookup(0.0, NodeId(0)), RouteAction::DeliverLocal);
        assert_eq!(a.route_lookup(0.0, NodeId(2)), RouteAction::InitiateDiscovery);
        let acts = p.run(&mut a, 0.0, |a, ctx| a.originate(ctx, data(0, 2)));
        assert_eq!(sends(&acts), vec![(PacketKind::Rreq, None)]);
        assert_eq!(a.buffered_data(), 1);
        assert!(a.is_discovering(NodeId(2)));
    }

    #[test]
    fn duplicate_rreq_not_rebroadcast() {
        let mut b = Aodv::new(NodeId(1), AodvConfig::default());
        let mut p = Probe::new();
        let rreq = AodvMsg::Rreq { id: 1, origin: NodeId(0), origin_seq: 1, dest: NodeId(5), dest_seq: None, hop_count: 0 };
        let first = p.run(&mut b, 0.0, |b, ctx| b.receive(ctx, ctrl(0, 35, rreq.clone()), NodeId(0)));
        assert_eq!(sends(&first), vec![(PacketKind::Rreq, None)]);
        let second = p.run(&mut b, 0.01, |b, ctx| b.receive(ctx, ctrl(0, 35, rreq.clone()), NodeId(3)));
        assert!(sends(&second).is_empty());
    }

    #[test]
    fn destination_replies_to_rreq() {
        let mut c = Aodv::new(NodeId(2), AodvConfig::default());
        let mut p = Probe::new();
        let rreq = AodvMsg::Rreq { id: 1, origin: NodeId(0), origin_seq: 1, dest: NodeId(2), dest_seq: None, hop_count: 1 };
        let acts = p.run(&mut c, 0.0, |c, ctx| c.receive(ctx, ctrl(0, 34, rreq), NodeId(1)));
        assert_eq!(sends(&acts), vec![(PacketKind::Rrep, Some(NodeId(1)))]);
        let rev = &c.table()[&NodeId(0)];
        assert_eq!((rev.next_hop, rev.hops), (NodeId(1), 2));
    }

    #[test]
    fn stale_rrep_ignored() {
        let mut a = Aodv::new(NodeId(0), AodvConfig::default());
        let mut p = Probe::new();
        let fresh = AodvMsg::Rrep { dest: NodeId(2), dest_seq: 5, origin: NodeId(0), hop_count: 1, lifetime: 20.0 };
        p.run(&mut a, 0.0, |a, ctx| a.receive(ctx, ctrl(2, 35, fresh), NodeId(1)));
        let before = a.table().clone();
        let stale = AodvMsg::Rrep { dest: NodeId(2), dest_seq: 3, origin: NodeId(0), hop_count: 0, lifetime: 20.0 };
        let acts = p.run(&mut a, 0.1, |a, ctx| a.receive(ctx, ctrl(2, 35, stale), NodeId(3)));
        assert!(acts.contains(&Action::Count("aodv_stale_rrep")));
        // Only the neighbor entry for node 3 may differ.
        let mut after = a.table().clone();
        after.remove(&NodeId(3));
        assert_eq!(after[&NodeId(2)], before[&NodeId(2)]);
    }

    #[test]
    fn equal_seq_longer_route_rejected_shorter_accepted() {
        let mut a = Aodv::new(NodeId(0), AodvConfig::default());
        let mut p = Probe::new();
        let rrep = |hops| AodvMsg::Rrep { dest: NodeId(9), dest_seq: 4, origin: NodeId(0), hop_count: hops, lifetime: 20.0 };
        p.run(&mut a, 0.0, |a, ctx| a.receive(ctx, ctrl(9, 35, rrep(2)), NodeId(1)));
        p.run(&mut a, 0.0, |a, ctx| a.receive(ctx, ctrl(9, 35, rrep(4)), NodeId(2)));
        assert_eq!(a.table()[&NodeId(9)].next_hop, NodeId(1));
        p.run(&mut a, 0.0, |a, ctx| a.receive(ctx, ctrl(9, 35, rrep(0)), NodeId(3)));
        assert_eq!((a.table()[&NodeId(9)].next_hop, a.table()[&NodeId(9)].hops), (NodeId(3), 1));
    }

    #[test]
    fn rrep_without_reverse_route_discarded() {
        let mut b = Aodv::new(NodeId(1), AodvConfig::default());
        let mut p = Probe::new();
        let rrep = AodvMsg::Rrep { dest: NodeId(2), dest_seq: 1, origin: NodeId(0), hop_count: 0, lifetime: 20.0 };
        let acts = p.run(&mut b, 0.0, |b, ctx| b.receive(ctx, ctrl(2, 35, rrep), NodeId(2)));
        assert!(acts.contains(&Action::Count("aodv_rrep_no_reverse")));
        assert!(sends(&acts).is_empty());
    }

    #[test]
    fn link_failure_invalidates_and_bumps_seq() {
        let mut a = Aodv::new(NodeId(0), AodvConfig::default());
        let mut p = Probe::new();
        let rrep = AodvMsg::Rrep { dest: NodeId(2), dest_seq: 5, origin: NodeId(0), hop_count: 1, lifetime: 20.0 };
        p.run(&mut a, 0.0, |a, ctx| a.receive(ctx, ctrl(2, 35, rrep), NodeId(1)));
        let d = data(0, 2);
        p.run(&mut a, 1.0, |a, ctx| a.link_feedback(ctx, NodeId(1), false, &d));
        let r = &a.table()[&NodeId(2)];
        assert!(!r.valid);
        assert_eq!(r.dest_seq, 6);
        assert_eq!(a.route_lookup(1.0, NodeId(2)), RouteAction::InitiateDiscovery);
    }

    #[test]
    fn discovery_gives_up_after_retries() {
        let cfg = AodvConfig { rreq_retries: 1, ..AodvConfig::default() };
        let mut a = Aodv::new(NodeId(0), cfg);
        let mut p = Probe::new();
        p.run(&mut a, 0.0, |a, ctx| a.originate(ctx, data(0, 4)));
        let t = Timer::Aodv(AodvTimer::RreqTimeout { dest: NodeId(4), attempt: 0 });
        let acts = p.run(&mut a, 2.8, |a, ctx| a.on_timer(ctx, t));
        assert_eq!(sends(&acts), vec![(PacketKind::Rreq, None)]);
        let t = Timer::Aodv(AodvTimer::RreqTimeout { dest: NodeId(4), attempt: 1 });
        let acts = p.run(&mut a, 8.4, |a, ctx| a.on_timer(ctx, t));
        assert!(acts.iter().any(|x| matches!(x, Action::Drop { reason: DropReason::NoRoute, .. })));
        assert_eq!(a.buffered_data(), 0);
        assert!(!a.is_discovering(NodeId(4)));
    }

    proptest::proptest! {
        #[test]
        fn stored_sequence_numbers_never_decrease(
            msgs in proptest::collection::vec((0u8..4, 1u32..6, 0u32..12, 0u32..6), 1..60)
        ) {
            let mut a = Aodv::new(NodeId(0), AodvConfig::default());
            let mut p = Probe::new();
            let mut high: BTreeMap<NodeId, u32> = BTreeMap::new();
            for (i, (kind, peer, seq, hops)) in msgs.into_iter().enumerate() {
                let now = i as f64 * 0.5;
                let from = NodeId(peer);
                let dest = NodeId((peer + hops) % 6 + 1);
                let msg = match kind {
                    0 => AodvMsg::Rrep { dest, dest_seq: seq, origin: NodeId(0), hop_count: hops, lifetime: 5.0 },
                    1 => AodvMsg::Rreq { id: i as u32, origin: dest, origin_seq: seq, dest: NodeId(9), dest_seq: None, hop_count: hops },
                    2 => AodvMsg::Rerr { unreachable: vec![(dest, seq)] },
                    _ => AodvMsg::Hello { seq },
                };
                p.run(&mut a, now, |a, ctx| a.receive(ctx, ctrl(peer, 8, msg), from));
                if i % 7 == 3 {
                    let d = data(0, 1);
                    p.run(&mut a, now, |a, ctx| a.link_feedback(ctx, from, false, &d));
                }
                for (d, r) in a.table() {
                    let prev = high.entry(*d).or_insert(r.dest_seq);
                    proptest::prop_assert!(r.dest_seq >= *prev);
                    *prev = r.dest_seq;
                }
            }
        }
    }
}
