//! Dynamic Source Routing.
//!
//! Sources stamp each data packet with the full hop list taken from their
//! route cache. RREQs accumulate the path they travel; the target (or an
//! intermediate with a cached continuation) answers with the complete
//! route. Broken links reported by the link layer purge every cached route
//! using them and a RERR travels back to the data source.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{RouteAction, RoutingAgent, RoutingCtx, SendBuffer, Timer};
use crate::packet::{Body, DropReason, NodeId, Packet, PacketKind, SourceRoute};

#[derive(Debug, Clone, PartialEq)]
pub struct DsrConfig {
    /// Maximum number of cached paths.
    pub cache_size: usize,
    pub buffer_capacity: usize,
    pub buffer_timeout: f64,
    /// Upper bound of the random delay before rebroadcasting, s.
    pub jitter: f64,
    /// Intermediates answer RREQs from their cache.
    pub cache_replies: bool,
    /// Forwarders that know a shorter continuation tell the source.
    pub gratuitous_replies: bool,
    /// Learn routes from the source routes of forwarded data.
    pub learn_from_data: bool,
    /// First rediscovery wait, doubled per attempt up to `discovery_backoff_max`.
    pub discovery_backoff: f64,
    pub discovery_backoff_max: f64,
    /// RREQ hop limit.
    pub max_route_len: u32,
}

impl Default for DsrConfig {
    fn default() -> Self {
        DsrConfig {
            cache_size: 64,
            buffer_capacity: 64,
            buffer_timeout: 30.0,
            jitter: 0.01,
            cache_replies: true,
            gratuitous_replies: false,
            learn_from_data: true,
            discovery_backoff: 0.5,
            discovery_backoff_max: 10.0,
            max_route_len: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DsrMsg {
    Rreq {
        id: u32,
        target: NodeId,
        /// Nodes traversed so far, originator first.
        path: Vec<NodeId>,
    },
    Rrep {
        /// Complete route, originator first, target last.
        route: SourceRoute,
        /// Hops the reply follows, replier first, originator last.
        reply_path: SourceRoute,
    },
    Rerr {
        /// Detecting node and the unreachable next hop.
        from: NodeId,
        to: NodeId,
        /// Hops toward the source being notified, detector first.
        path: SourceRoute,
    },
}

impl DsrMsg {
    pub fn kind(&self) -> PacketKind {
        match self {
            DsrMsg::Rreq { .. } => PacketKind::Rreq,
            DsrMsg::Rrep { .. } => PacketKind::Rrep,
            DsrMsg::Rerr { .. } => PacketKind::Rerr,
        }
    }

    pub fn size_bytes(&self) -> u32 {
        let addrs = |n: usize| 4 * n as u32;
        match self {
            DsrMsg::Rreq { path, .. } => 8 + addrs(path.len()),
            DsrMsg::Rrep { route, reply_path } => 4 + addrs(route.len()) + 4 + addrs(reply_path.len()),
            DsrMsg::Rerr { path, .. } => 12 + 4 + addrs(path.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DsrTimer {
    Discovery { target: NodeId, attempt: u32 },
    Housekeeping,
}

/// Paths starting at the owning node, oldest first.
#[derive(Debug, Clone, Default)]
pub struct RouteCache {
    capacity: usize,
    paths: VecDeque<SourceRoute>,
}

impl RouteCache {
    pub fn new(capacity: usize) -> Self {
        RouteCache { capacity, paths: VecDeque::new() }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> impl Iterator<Item = &SourceRoute> {
        self.paths.iter()
    }

    /// Inserts `path` unless it, or a path it prefixes, is already cached.
    pub fn insert(&mut self, path: SourceRoute) {
        if path.len() < 2 || self.capacity == 0 {
            return;
        }
        if self.paths.iter().any(|p| p.len() >= path.len() && p.hops()[..path.len()] == *path.hops()) {
            return;
        }
        self.paths.retain(|p| !(p.len() < path.len() && path.hops()[..p.len()] == *p.hops()));
        if self.paths.len() >= self.capacity {
            self.paths.pop_front();
        }
        self.paths.push_back(path);
    }

    /// Shortest cached prefix ending at `dest`.
    pub fn find(&self, dest: NodeId) -> Option<SourceRoute> {
        self.paths
            .iter()
            .filter_map(|p| p.position(dest).map(|i| (i, p)))
            .min_by_key(|(i, _)| *i)
            .map(|(i, p)| p.slice(0, i))
    }

    /// Truncates every path at the link `a`–`b` (either direction).
    /// Returns whether anything changed.
    pub fn remove_link(&mut self, a: NodeId, b: NodeId) -> bool {
        let mut changed = false;
        let old: Vec<SourceRoute> = self.paths.drain(..).collect();
        for p in old {
            let cut = p.hops().windows(2).position(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a));
            match cut {
                Some(i) => {
                    changed = true;
                    if i >= 1 {
                        let kept = p.slice(0, i);
                        if !self.paths.contains(&kept) {
                            self.paths.push_back(kept);
                        }
                    }
                }
                None => self.paths.push_back(p),
            }
        }
        changed
    }
}

pub struct Dsr {
    me: NodeId,
    cfg: DsrConfig,
    rreq_id: u32,
    cache: RouteCache,
    seen: BTreeMap<(NodeId, u32), f64>,
    buffer: SendBuffer,
    pending: BTreeMap<NodeId, u32>,
    gratuitous_sent: BTreeSet<(NodeId, NodeId)>,
}

impl Dsr {
    pub fn new(me: NodeId, cfg: DsrConfig) -> Self {
        Dsr {
            me,
            cache: RouteCache::new(cfg.cache_size),
            buffer: SendBuffer::new(cfg.buffer_capacity, cfg.buffer_timeout),
            cfg,
            rreq_id: 0,
            seen: BTreeMap::new(),
            pending: BTreeMap::new(),
            gratuitous_sent: BTreeSet::new(),
        }
    }

    pub fn cache(&self) -> &RouteCache {
        &self.cache
    }

    pub fn find_route(&self, dest: NodeId) -> Option<SourceRoute> {
        self.cache.find(dest)
    }

    pub fn is_discovering(&self, dest: NodeId) -> bool {
        self.pending.contains_key(&dest)
    }

    /// Caches both directions of `route` as seen from this node.
    fn learn(&mut self, route: &SourceRoute) {
        let Some(i) = route.position(self.me) else { return };
        if i + 1 < route.len() {
            self.cache.insert(route.slice(i, route.len() - 1));
        }
        if i > 0 {
            self.cache.insert(route.slice(0, i).reversed());
        }
    }

    fn control(&self, ctx: &mut RoutingCtx, dst: Option<NodeId>, ttl: u32, msg: DsrMsg) -> Packet {
        Packet { uid: ctx.uid(), src: self.me, dst, ttl, hops: 0, created_at: ctx.now, body: Body::Dsr(msg) }
    }

    fn backoff(&self, attempt: u32) -> f64 {
        (self.cfg.discovery_backoff * f64::from(1u32 << attempt.min(16))).min(self.cfg.discovery_backoff_max)
    }

    fn start_discovery(&mut self, ctx: &mut RoutingCtx, target: NodeId, attempt: u32) {
        self.rreq_id += 1;
        self.seen.insert((self.me, self.rreq_id), ctx.now);
        let msg = DsrMsg::Rreq { id: self.rreq_id, target, path: vec![self.me] };
        let p = self.control(ctx, None, self.cfg.max_route_len, msg);
        ctx.send(p, None, 0.0);
        self.pending.insert(target, attempt);
        let wait = self.backoff(attempt);
        ctx.timer(wait, Timer::Dsr(DsrTimer::Discovery { target, attempt }));
    }

    fn stamp_and_send(&mut self, ctx: &mut RoutingCtx, mut packet: Packet) {
        let dst = packet.dst.expect("data packets carry a destination");
        if dst == self.me {
            ctx.deliver(packet);
            return;
        }
        match self.cache.find(dst) {
            Some(route) => {
                let next = route.hops()[1];
                if let Body::Data { route: r, .. } = &mut packet.body {
                    *r = Some(route);
                }
                ctx.send(packet, Some(next), 0.0);
            }
            None => {
                if let Body::Data { route: r, .. } = &mut packet.body {
                    *r = None;
                }
                if let Some(old) = self.buffer.push(packet, ctx.now) {
                    ctx.drop_packet(old, DropReason::NoRoute);
                }
                if !self.pending.contains_key(&dst) {
                    self.start_discovery(ctx, dst, 0);
                }
            }
        }
    }

    fn flush_buffer(&mut self, ctx: &mut RoutingCtx) {
        let cache = &self.cache;
        let ready = self.buffer.take_where(|p| p.dst.is_some_and(|d| cache.find(d).is_some()));
        for p in ready {
            if let Some(d) = p.dst {
                self.pending.remove(&d);
            }
            self.stamp_and_send(ctx, p);
        }
    }

    fn handle_rreq(&mut self, ctx: &mut RoutingCtx, packet: Packet, from: NodeId) {
        let Body::Dsr(DsrMsg::Rreq { id, target, path }) = &packet.body else { unreachable!() };
        let (id, target) = (*id, *target);
        let origin = path[0];
        if path.contains(&self.me) {
            ctx.count("dsr_rreq_loop");
            return;
        }
        let mut back = path.clone();
        back.push(self.me);
        let Some(full) = SourceRoute::new(back) else {
            ctx.count("dsr_rreq_loop");
            return;
        };
        self.learn(&full);

        if target == self.me {
            // The target answers every copy so the source can pick among paths.
            let msg = DsrMsg::Rrep { reply_path: full.reversed(), route: full };
            let p = self.control(ctx, Some(origin), self.cfg.max_route_len, msg);
            ctx.send(p, Some(from), 0.0);
            return;
        }
        if self.seen.contains_key(&(origin, id)) {
            return;
        }
        self.seen.insert((origin, id), ctx.now);

        if self.cfg.cache_replies {
            if let Some(rest) = self.cache.find(target) {
                let mut hops = full.hops().to_vec();
                hops.extend_from_slice(&rest.hops()[1..]);
                if let Some(route) = SourceRoute::new(hops) {
                    let msg = DsrMsg::Rrep { reply_path: full.reversed(), route };
                    let p = self.control(ctx, Some(origin), self.cfg.max_route_len, msg);
                    ctx.send(p, Some(from), 0.0);
                    return;
                }
            }
        }

        if packet.ttl > 1 {
            let fwd = Packet {
                ttl: packet.ttl - 1,
                body: Body::Dsr(DsrMsg::Rreq { id, target, path: full.hops().to_vec() }),
                ..packet
            };
            let d = ctx.jitter(self.cfg.jitter);
            ctx.send(fwd, None, d);
        }
    }

    fn handle_rrep(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        let Body::Dsr(DsrMsg::Rrep { route, reply_path }) = &packet.body else { unreachable!() };
        self.learn(&route.clone());
        if reply_path.last() == Some(self.me) {
            if let Some(t) = route.last() {
                self.pending.remove(&t);
            }
            self.flush_buffer(ctx);
            return;
        }
        self.forward_along(ctx, packet, |m| match m {
            DsrMsg::Rrep { reply_path, .. } => reply_path,
            _ => unreachable!(),
        });
    }

    fn handle_rerr(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        let Body::Dsr(DsrMsg::Rerr { from, to, path }) = &packet.body else { unreachable!() };
        self.cache.remove_link(*from, *to);
        if path.last() == Some(self.me) {
            return;
        }
        self.forward_along(ctx, packet, |m| match m {
            DsrMsg::Rerr { path, .. } => path,
            _ => unreachable!(),
        });
    }

    /// Relays a control packet to the hop after this node on its embedded path.
    fn forward_along<F: Fn(&DsrMsg) -> &SourceRoute>(&mut self, ctx: &mut RoutingCtx, packet: Packet, path_of: F) {
        let Body::Dsr(m) = &packet.body else { unreachable!() };
        let Some(next) = path_of(m).next_after(self.me) else {
            ctx.count("dsr_malformed_control");
            return;
        };
        if packet.ttl <= 1 {
            return;
        }
        ctx.send(Packet { ttl: packet.ttl - 1, ..packet }, Some(next), 0.0);
    }

    fn forward_data(&mut self, ctx: &mut RoutingCtx, mut packet: Packet) {
        let Some(route) = packet.source_route().cloned() else {
            ctx.drop_packet(packet, DropReason::Malformed);
            return;
        };
        let Some(pos) = route.position(self.me) else {
            ctx.drop_packet(packet, DropReason::Malformed);
            return;
        };
        if self.cfg.learn_from_data {
            self.learn(&route);
        }
        if packet.dst == Some(self.me) {
            ctx.deliver(packet);
            return;
        }
        let Some(next) = route.next_after(self.me) else {
            ctx.drop_packet(packet, DropReason::Malformed);
            return;
        };
        if packet.ttl <= 1 {
            ctx.drop_packet(packet, DropReason::TtlExpired);
            return;
        }
        packet.ttl -= 1;
        if self.cfg.gratuitous_replies {
            self.maybe_shorten(ctx, &route, pos);
        }
        ctx.send(packet, Some(next), 0.0);
    }

    /// Tells the source about a shorter continuation from this node.
    fn maybe_shorten(&mut self, ctx: &mut RoutingCtx, route: &SourceRoute, pos: usize) {
        let (Some(src), Some(dst)) = (route.first(), route.last()) else { return };
        if pos == 0 || self.gratuitous_sent.contains(&(src, dst)) {
            return;
        }
        let Some(mine) = self.cache.find(dst) else { return };
        let remaining = route.len() - 1 - pos;
        if mine.hop_count() >= remaining {
            return;
        }
        let mut hops = route.hops()[..=pos].to_vec();
        hops.extend_from_slice(&mine.hops()[1..]);
        let Some(shorter) = SourceRoute::new(hops) else { return };
        self.gratuitous_sent.insert((src, dst));
        let reply_path = route.slice(0, pos).reversed();
        let next = reply_path.hops()[1];
        let msg = DsrMsg::Rrep { route: shorter, reply_path };
        let p = self.control(ctx, Some(src), self.cfg.max_route_len, msg);
        ctx.count("dsr_gratuitous_reply");
        ctx.send(p, Some(next), 0.0);
    }
}

impl RoutingAgent for Dsr {
    fn start(&mut self, ctx: &mut RoutingCtx) {
        ctx.timer(1.0, Timer::Dsr(DsrTimer::Housekeeping));
    }

    fn originate(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        self.stamp_and_send(ctx, packet);
    }

    fn receive(&mut self, ctx: &mut RoutingCtx, packet: Packet, from: NodeId) {
        match &packet.body {
            Body::Data { .. } => self.forward_data(ctx, packet),
            Body::Dsr(DsrMsg::Rreq { .. }) => self.handle_rreq(ctx, packet, from),
            Body::Dsr(DsrMsg::Rrep { .. }) => self.handle_rrep(ctx, packet),
            Body::Dsr(DsrMsg::Rerr { .. }) => self.handle_rerr(ctx, packet),
            Body::Aodv(_) | Body::Dsdv(_) => ctx.count("foreign_control"),
        }
    }

    fn link_feedback(&mut self, ctx: &mut RoutingCtx, next_hop: NodeId, success: bool, packet: &Packet) {
        if success {
            return;
        }
        self.cache.remove_link(self.me, next_hop);
        let Some(route) = packet.source_route() else { return };
        let (Some(src), Some(pos)) = (route.first(), route.position(self.me)) else { return };
        if src == self.me || pos == 0 {
            return;
        }
        let path = route.slice(0, pos).reversed();
        let next = path.hops()[1];
        let msg = DsrMsg::Rerr { from: self.me, to: next_hop, path };
        let p = self.control(ctx, Some(src), self.cfg.max_route_len, msg);
        ctx.send(p, Some(next), 0.0);
    }

    fn reroute(&mut self, ctx: &mut RoutingCtx, packet: Packet) {
        if !packet.is_data() {
            ctx.count("dsr_control_purged");
        } else if packet.src == self.me {
            self.stamp_and_send(ctx, packet);
        } else {
            ctx.drop_packet(packet, DropReason::NoRoute);
        }
    }

    fn on_timer(&mut self, ctx: &mut RoutingCtx, timer: Timer) {
        let Timer::Dsr(timer) = timer else { return };
        match timer {
            DsrTimer::Discovery { target, attempt } => {
                if self.pending.get(&target) != Some(&attempt) {
                    return;
                }
                if self.cache.find(target).is_some() {
                    self.pending.remove(&target);
                    self.flush_buffer(ctx);
                } else if self.buffer.has_dest(target) {
                    self.start_discovery(ctx, target, attempt + 1);
                } else {
                    self.pending.remove(&target);
                }
            }
            DsrTimer::Housekeeping => {
                for p in self.buffer.expire(ctx.now) {
                    ctx.drop_packet(p, DropReason::NoRoute);
                }
                let now = ctx.now;
                self.seen.retain(|_, t| now - *t < 30.0);
                ctx.timer(1.0, Timer::Dsr(DsrTimer::Housekeeping));
            }
        }
    }

    fn route_lookup(&self, _now: f64, dest: NodeId) -> RouteAction {
        if dest == self.me {
            RouteAction::DeliverLocal
        } else if let Some(r) = self.cache.find(dest) {
            RouteAction::ForwardSourceRoute(r)
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

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn sr(v: &[u32]) -> SourceRoute {
        SourceRoute::new(ids(v)).unwrap()
    }

    fn run<F: FnOnce(&mut Dsr, &mut RoutingCtx)>(d: &mut Dsr, f: F) -> Vec<Action> {
        let mut rng = stream("routing", 3);
        let mut uid = 0;
        let mut ctx = RoutingCtx::new(0.0, d.me, &mut rng, &mut uid);
        f(d, &mut ctx);
        ctx.into_actions()
    }

    fn data(src: u32, dst: u32, route: Option<SourceRoute>) -> Packet {
        Packet {
            uid: 1,
            src: NodeId(src),
            dst: Some(NodeId(dst)),
            ttl: 32,
            hops: 0,
            created_at: 0.0,
            body: Body::Data { conn: 0, seq: 0, payload_bytes: 64, route },
        }
    }

    fn ctrl(src: u32, dst: Option<u32>, msg: DsrMsg) -> Packet {
        Packet { uid: 5, src: NodeId(src), dst: dst.map(NodeId), ttl: 16, hops: 1, created_at: 0.0, body: Body::Dsr(msg) }
    }

    #[test]
    fn cache_prefers_shortest_prefix() {
        let mut c = RouteCache::new(8);
        c.insert(sr(&[0, 1, 2, 3, 4]));
        c.insert(sr(&[0, 5, 4]));
        assert_eq!(c.find(NodeId(4)), Some(sr(&[0, 5, 4])));
        assert_eq!(c.find(NodeId(2)), Some(sr(&[0, 1, 2])));
        assert_eq!(c.find(NodeId(9)), None);
        // Prefixes of cached paths are not stored separately.
        c.insert(sr(&[0, 1, 2]));
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn cache_evicts_oldest_and_truncates_on_link_loss() {
        let mut c = RouteCache::new(2);
        c.insert(sr(&[0, 1]));
        c.insert(sr(&[0, 2]));
        c.insert(sr(&[0, 3]));
        assert_eq!(c.find(NodeId(1)), None);
        let mut c = RouteCache::new(8);
        c.insert(sr(&[0, 1, 2, 3]));
        assert!(c.remove_link(NodeId(2), NodeId(1)));
        assert_eq!(c.find(NodeId(1)), Some(sr(&[0, 1])));
        assert_eq!(c.find(NodeId(3)), None);
    }

    #[test]
    fn rreq_loop_discarded() {
        let mut d = Dsr::new(NodeId(1), DsrConfig::default());
        let msg = DsrMsg::Rreq { id: 1, target: NodeId(9), path: ids(&[0, 1, 2]) };
        let acts = run(&mut d, |d, ctx| d.receive(ctx, ctrl(0, None, msg), NodeId(2)));
        assert_eq!(acts, vec![Action::Count("dsr_rreq_loop")]);
    }

    #[test]
    fn target_replies_with_full_route() {
        let mut c = Dsr::new(NodeId(2), DsrConfig::default());
        let msg = DsrMsg::Rreq { id: 1, target: NodeId(2), path: ids(&[0, 1]) };
        let acts = run(&mut c, |c, ctx| c.receive(ctx, ctrl(0, None, msg), NodeId(1)));
        let [Action::Send { packet, next_hop, .. }] = &acts[..] else { panic!("{acts:?}") };
        assert_eq!(*next_hop, Some(NodeId(1)));
        assert_eq!(packet.body, Body::Dsr(DsrMsg::Rrep { route: sr(&[0, 1, 2]), reply_path: sr(&[2, 1, 0]) }));
        assert_eq!(c.find_route(NodeId(0)), Some(sr(&[2, 1, 0])));
    }

    #[test]
    fn source_stamps_cached_route() {
        let mut a = Dsr::new(NodeId(0), DsrConfig::default());
        let acts = run(&mut a, |a, ctx| a.originate(ctx, data(0, 2, None)));
        assert!(matches!(&acts[0], Action::Send { packet, next_hop: None, .. } if packet.kind() == PacketKind::Rreq));
        assert_eq!(a.buffered_data(), 1);
        let rrep = DsrMsg::Rrep { route: sr(&[0, 1, 2]), reply_path: sr(&[2, 1, 0]) };
        let acts = run(&mut a, |a, ctx| a.receive(ctx, ctrl(2, Some(0), rrep), NodeId(1)));
        let [Action::Send { packet, next_hop, .. }] = &acts[..] else { panic!("{acts:?}") };
        assert_eq!(*next_hop, Some(NodeId(1)));
        assert_eq!(packet.source_route(), Some(&sr(&[0, 1, 2])));
        assert_eq!(a.buffered_data(), 0);
        assert_eq!(a.route_lookup(0.0, NodeId(2)), RouteAction::ForwardSourceRoute(sr(&[0, 1, 2])));
    }

    #[test]
    fn forwarder_not_on_route_drops_malformed() {
        let mut d = Dsr::new(NodeId(7), DsrConfig::default());
        let acts = run(&mut d, |d, ctx| d.receive(ctx, data(0, 2, Some(sr(&[0, 1, 2]))), NodeId(1)));
        assert!(matches!(&acts[..], [Action::Drop { reason: DropReason::Malformed, .. }]));
    }

    #[test]
    fn link_failure_sends_rerr_to_source() {
        let mut b = Dsr::new(NodeId(1), DsrConfig::default());
        let p = data(0, 3, Some(sr(&[0, 1, 2, 3])));
        run(&mut b, |b, ctx| b.receive(ctx, p.clone(), NodeId(0)));
        assert!(b.find_route(NodeId(3)).is_some());
        let acts = run(&mut b, |b, ctx| b.link_feedback(ctx, NodeId(2), false, &p));
        assert!(b.find_route(NodeId(3)).is_none());
        let [Action::Send { packet, next_hop, .. }] = &acts[..] else { panic!("{acts:?}") };
        assert_eq!(*next_hop, Some(NodeId(0)));
        assert_eq!(packet.dst, Some(NodeId(0)));
        assert!(matches!(&packet.body, Body::Dsr(DsrMsg::Rerr { from: NodeId(1), to: NodeId(2), .. })));
    }

    #[test]
    fn gratuitous_reply_shortens_route() {
        let cfg = DsrConfig { gratuitous_replies: true, ..DsrConfig::default() };
        let mut b = Dsr::new(NodeId(1), cfg);
        b.cache.insert(sr(&[1, 4]));
        let acts = run(&mut b, |b, ctx| b.receive(ctx, data(0, 4, Some(sr(&[0, 1, 2, 3, 4]))), NodeId(0)));
        assert!(acts.contains(&Action::Count("dsr_gratuitous_reply")));
        let rrep = acts.iter().find_map(|a| match a {
            Action::Send { packet, .. } if packet.kind() == PacketKind::Rrep => Some(packet.clone()),
            _ => None,
        });
        let Body::Dsr(DsrMsg::Rrep { route, .. }) = rrep.unwrap().body else { unreachable!() };
        assert_eq!(route, sr(&[0, 1, 4]));
    }
}
