//! Loss-free link model for exercising routing agents in isolation.
//!
//! Every transmission reaches all current neighbors after a fixed per-hop
//! delay; a unicast to a non-neighbor fails and is reported back to the
//! sender. There is no contention, fading or energy.

use std::collections::BTreeMap;

use super::{Action, Agent, Protocol, RouteAction, RoutingAgent, RoutingConfig, RoutingCtx, Timer, DATA_TTL};
use crate::error::SimError;
use crate::kernel::{Kernel, RngStream, SimEvent, Target};
use crate::packet::{Body, DropReason, NodeId, Packet, PacketKind};

#[derive(Debug, Clone)]
enum Ev {
    Start,
    Originate(Packet),
    Arrive { packet: Packet, from: NodeId },
    Feedback { packet: Packet, next_hop: NodeId, ok: bool },
    Timer(Timer),
}

pub struct Harness {
    kernel: Kernel<Ev>,
    agents: Vec<Agent>,
    adj: Vec<Vec<bool>>,
    rngs: Vec<RngStream>,
    next_uid: u64,
    hop_delay: f64,
    data_seq: u64,
    pub delivered: Vec<(NodeId, Packet, f64)>,
    pub dropped: Vec<(NodeId, Packet, DropReason)>,
    pub control_tx: BTreeMap<PacketKind, u64>,
    pub counts: BTreeMap<&'static str, u64>,
}

impl Harness {
    pub fn new(protocol: Protocol, n: usize, edges: &[(usize, usize)], cfg: &RoutingConfig, seed: u64) -> Self {
        let mut adj = vec![vec![false; n]; n];
        for &(a, b) in edges {
            adj[a][b] = true;
            adj[b][a] = true;
        }
        let mut kernel = Kernel::new();
        for i in 0..n {
            kernel.schedule(0.0, Target::Node(i), Ev::Start).expect("time zero is never in the past");
        }
        Harness {
            kernel,
            agents: (0..n).map(|i| Agent::new(protocol, NodeId::from(i), cfg)).collect(),
            adj,
            rngs: (0..n).map(|i| RngStream::new(&format!("routing:{i}"), seed)).collect(),
            next_uid: 0,
            hop_delay: 0.01,
            data_seq: 0,
            delivered: Vec::new(),
            dropped: Vec::new(),
            control_tx: BTreeMap::new(),
            counts: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn now(&self) -> f64 {
        self.kernel.now()
    }

    pub fn agent(&self, i: usize) -> &Agent {
        &self.agents[i]
    }

    pub fn set_link(&mut self, a: usize, b: usize, up: bool) {
        self.adj[a][b] = up;
        self.adj[b][a] = up;
    }

    pub fn linked(&self, a: usize, b: usize) -> bool {
        self.adj[a][b]
    }

    pub fn control_total(&self) -> u64 {
        self.control_tx.values().sum()
    }

    /// Queues a data packet from `src` to `dst` at time `at`; returns its uid.
    pub fn send_data(&mut self, at: f64, src: usize, dst: usize) -> Result<u64, SimError> {
        let uid = self.next_uid;
        self.next_uid += 1;
        let packet = Packet {
            uid,
            src: NodeId::from(src),
            dst: Some(NodeId::from(dst)),
            ttl: DATA_TTL,
            hops: 0,
            created_at: at,
            body: Body::Data { conn: 0, seq: self.data_seq, payload_bytes: 64, route: None },
        };
        self.data_seq += 1;
        self.kernel.schedule(at, Target::Node(src), Ev::Originate(packet))?;
        Ok(uid)
    }

    pub fn lookup(&self, node: usize, dest: usize) -> RouteAction {
        self.agents[node].route_lookup(self.now(), NodeId::from(dest))
    }

    /// Follows forwarding state from `src` toward `dst` without sending
    /// anything. Returns the node sequence, or `None` on a missing entry,
    /// a broken link or a loop.
    pub fn follow(&self, src: usize, dst: usize) -> Option<Vec<usize>> {
        let mut path = vec![src];
        let mut cur = src;
        while cur != dst {
            match self.lookup(cur, dst) {
                RouteAction::Forward(nh) => {
                    let nh = nh.idx();
                    if !self.adj[cur][nh] || path.contains(&nh) {
                        return None;
                    }
                    path.push(nh);
                    cur = nh;
                }
                RouteAction::ForwardSourceRoute(r) => {
                    let hops: Vec<usize> = r.hops().iter().map(|n| n.idx()).collect();
                    if hops.first() != Some(&cur) || hops.windows(2).any(|w| !self.adj[w[0]][w[1]]) {
                        return None;
                    }
                    path.extend_from_slice(&hops[1..]);
                    return Some(path);
                }
                _ => return None,
            }
            if path.len() > self.agents.len() {
                return None;
            }
        }
        Some(path)
    }

    pub fn run_until(&mut self, t_end: f64) -> Result<u64, SimError> {
        let mut kernel = std::mem::replace(&mut self.kernel, Kernel::new());
        let out = kernel.run_until(t_end, |k, ev| self.handle(k, ev));
        self.kernel = kernel;
        out
    }

    fn handle(&mut self, k: &mut Kernel<Ev>, ev: SimEvent<Ev>) -> Result<(), SimError> {
        let Target::Node(i) = ev.target else { return Ok(()) };
        let me = NodeId::from(i);
        let now = k.now();
        let mut ctx = RoutingCtx::new(now, me, &mut self.rngs[i], &mut self.next_uid);
        let agent = &mut self.agents[i];
        match ev.payload {
            Ev::Start => agent.start(&mut ctx),
            Ev::Originate(p) => agent.originate(&mut ctx, p),
            Ev::Arrive { packet, from } => agent.receive(&mut ctx, packet, from),
            Ev::Feedback { packet, next_hop, ok } => {
                if !ok {
                    self.dropped.push((me, packet.clone(), DropReason::RetryLimit));
                }
                agent.link_feedback(&mut ctx, next_hop, ok, &packet)
            }
            Ev::Timer(t) => agent.on_timer(&mut ctx, t),
        }
        let actions = ctx.into_actions();
        for a in actions {
            self.apply(k, i, a)?;
        }
        Ok(())
    }

    fn apply(&mut self, k: &mut Kernel<Ev>, i: usize, action: Action) -> Result<(), SimError> {
        let me = NodeId::from(i);
        match action {
            Action::Send { packet, next_hop, delay } => {
                if packet.kind().is_control() {
                    *self.control_tx.entry(packet.kind()).or_default() += 1;
                }
                let at = delay + self.hop_delay;
                let mut arrived = packet.clone();
                arrived.hops += 1;
                match next_hop {
                    None => {
                        for j in 0..self.adj.len() {
                            if self.adj[i][j] {
                                k.schedule_in(at, Target::Node(j), Ev::Arrive { packet: arrived.clone(), from: me })?;
                            }
                        }
                    }
                    Some(nh) => {
                        let ok = self.adj[i][nh.idx()];
                        if ok {
                            k.schedule_in(at, Target::Node(nh.idx()), Ev::Arrive { packet: arrived, from: me })?;
                        }
                        k.schedule_in(at, Target::Node(i), Ev::Feedback { packet, next_hop: nh, ok })?;
                    }
                }
            }
            Action::Deliver(p) => self.delivered.push((me, p, k.now())),
            Action::Drop { packet, reason } => self.dropped.push((me, packet, reason)),
            Action::Timer { delay, timer } => {
                k.schedule_in(delay, Target::Node(i), Ev::Timer(timer))?;
            }
            Action::Count(what) => *self.counts.entry(what).or_default() += 1,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(p: Protocol) -> Harness {
        Harness::new(p, 3, &[(0, 1), (1, 2)], &RoutingConfig::ideal(), 1)
    }

    #[test]
    fn chain_lookup_after_discovery() {
        for p in [Protocol::Aodv, Protocol::Dsr] {
            let mut h = chain(p);
            h.send_data(0.5, 0, 2).unwrap();
            h.run_until(2.0).unwrap();
            assert_eq!(h.delivered.len(), 1, "{p}");
            assert_eq!(h.follow(0, 2), Some(vec![0, 1, 2]), "{p}");
        }
        let mut h = chain(Protocol::Aodv);
        h.send_data(0.5, 0, 2).unwrap();
        h.run_until(2.0).unwrap();
        assert_eq!(h.lookup(0, 2), RouteAction::Forward(NodeId(1)));
        let Agent::Aodv(a) = h.agent(0) else { unreachable!() };
        assert_eq!(a.table()[&NodeId(2)].hops, 2);
    }

    #[test]
    fn dsdv_chain_converges_within_two_dumps() {
        let mut h = chain(Protocol::Dsdv);
        h.run_until(30.0).unwrap();
        assert_eq!(h.lookup(0, 2), RouteAction::Forward(NodeId(1)));
        let Agent::Dsdv(a) = h.agent(0) else { unreachable!() };
        assert_eq!(a.table()[&NodeId(2)].hops, 2);
    }

    #[test]
    fn dsr_cache_hit_needs_no_second_discovery() {
        let mut h = chain(Protocol::Dsr);
        h.send_data(0.5, 0, 2).unwrap();
        h.run_until(2.0).unwrap();
        let rreqs = h.control_tx[&PacketKind::Rreq];
        h.send_data(2.5, 0, 2).unwrap();
        h.run_until(4.0).unwrap();
        assert_eq!(h.control_tx[&PacketKind::Rreq], rreqs);
        assert_eq!(h.delivered.len(), 2);
    }
}
