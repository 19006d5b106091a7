//! Whole-network simulation: mobility, shared channel with CSMA/CA, routing
//! agents, CBR traffic and batteries driven by one event queue.

use std::collections::BTreeMap;
use std::io::Write;

use crate::energy::Battery;
use crate::error::Result;
use crate::kernel::{Kernel, RngStream, SimEvent, Target};
use crate::mac::{resolve_reception, IfQueue, MacEvent, RxFailure};
use crate::metrics::{ConnStats, MetricsLedger, NodeEnergy};
use crate::mobility::Mobility;
use crate::packet::{Body, DropReason, NodeId, Packet};
use crate::radio::received_power;
use crate::routing::{Action, Agent, RoutingAgent, RoutingCtx, Timer, DATA_TTL};
use crate::scenario::ScenarioConfig;
use crate::traffic::{build_connections, Connection, Sink, SinkOutcome};

/// Distances are clamped here so co-located nodes stay in the model's domain.
const MIN_DISTANCE: f64 = 1e-3;

#[derive(Debug, Clone)]
enum Ev {
    Start,
    Cbr { conn: usize, k: u64 },
    RoutingTimer(Timer),
    RouteSend { packet: Packet, next_hop: Option<NodeId> },
    MacAttempt { token: u64 },
    TxEnd { frame: u64 },
    MacResume { token: u64 },
    Trace,
}

#[derive(Debug)]
struct Frame {
    tx: usize,
    packet: Packet,
    next_hop: Option<NodeId>,
    start: f64,
    end: f64,
    bits: u64,
    /// Received power at every node, W (0 at the transmitter).
    power: Vec<f64>,
}

#[derive(Debug)]
struct Current {
    packet: Packet,
    next_hop: Option<NodeId>,
    transmissions: u32,
    cw: u32,
    defers: u32,
    in_air: Option<u64>,
}

#[derive(Debug)]
struct MacState {
    queue: IfQueue,
    current: Option<Current>,
    busy: bool,
    token: u64,
    rng: RngStream,
}

struct Node {
    agent: Agent,
    mac: MacState,
    battery: Battery,
    routing_rng: RngStream,
    dead: bool,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub ledger: MetricsLedger,
    pub mac_log: Vec<MacEvent>,
    pub events: u64,
}

pub struct Network {
    cfg: ScenarioConfig,
    kernel: Kernel<Ev>,
    nodes: Vec<Node>,
    mobility: Mobility,
    fading_rng: RngStream,
    conns: Vec<Connection>,
    sinks: Vec<Sink>,
    conn_sent: Vec<u64>,
    frames: BTreeMap<u64, Frame>,
    next_frame: u64,
    max_airtime: f64,
    next_uid: u64,
    ledger: MetricsLedger,
    mac_log: Option<Vec<MacEvent>>,
    trace: Option<Box<dyn Write + Send>>,
    capture_ratio: f64,
    /// Time of the event being handled.
    clock: f64,
}

impl Network {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.nodes;
        let seed = cfg.seed;
        let mobility = Mobility::new(cfg.mobility.clone(), n, seed, cfg.placement.as_deref())?;
        let mut traffic_rng = RngStream::new("traffic", seed);
        let conns = build_connections(&cfg.traffic, n, cfg.sim_time, &mut traffic_rng)?;
        let control_priority = cfg.control_priority();
        let nodes = (0..n)
            .map(|i| Node {
                agent: Agent::new(cfg.protocol, NodeId::from(i), &cfg.routing),
                mac: MacState {
                    queue: IfQueue::new(cfg.mac.queue_capacity, control_priority),
                    current: None,
                    busy: false,
                    token: 0,
                    rng: RngStream::new(&format!("mac:{i}"), seed),
                },
                battery: Battery::new(&cfg.energy),
                routing_rng: RngStream::new(&format!("routing:{i}"), seed),
                dead: false,
            })
            .collect();
        let mut kernel = Kernel::new();
        for i in 0..n {
            kernel.schedule(0.0, Target::Node(i), Ev::Start)?;
        }
        for c in &conns {
            kernel.schedule(c.start, Target::Global, Ev::Cbr { conn: c.id, k: 0 })?;
        }
        Ok(Network {
            sinks: conns.iter().map(Sink::new).collect(),
            conn_sent: vec![0; conns.len()],
            conns,
            cfg: cfg.clone(),
            kernel,
            nodes,
            mobility,
            fading_rng: RngStream::new("fading", seed),
            frames: BTreeMap::new(),
            next_frame: 0,
            max_airtime: 0.0,
            next_uid: 0,
            ledger: MetricsLedger::new(cfg.sim_time),
            mac_log: None,
            trace: None,
            capture_ratio: cfg.mac.capture_ratio(),
            clock: 0.0,
        })
    }

    /// Records MAC transmissions and receptions.
    pub fn with_mac_log(mut self) -> Self {
        self.mac_log = Some(Vec::new());
        self
    }

    /// Writes a text trace: `M t node x y` position samples every
    /// `trace_interval` seconds, `T t node uid kind bytes next_hop` for each
    /// transmission, `R t node uid kind from` for each decoded addressed
    /// frame and `D t uid reason` for each data drop.
    pub fn with_trace(mut self, out: Box<dyn Write + Send>) -> Result<Self> {
        self.trace = Some(out);
        self.kernel.schedule(0.0, Target::Global, Ev::Trace)?;
        Ok(self)
    }

    pub fn connections(&self) -> &[Connection] {
        &self.conns
    }

    pub fn now(&self) -> f64 {
        self.kernel.now()
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn agent(&self, node: usize) -> &Agent {
        &self.nodes[node].agent
    }

    pub fn battery(&self, node: usize) -> &Battery {
        &self.nodes[node].battery
    }

    pub fn position(&mut self, node: usize) -> (f64, f64) {
        let t = self.kernel.now();
        self.mobility.position(node, t)
    }

    pub fn mac_log(&self) -> &[MacEvent] {
        self.mac_log.as_deref().unwrap_or(&[])
    }

    /// Hands `packet` to the link layer of `node` at time `at`, bypassing routing.
    pub fn inject(&mut self, at: f64, node: usize, packet: Packet, next_hop: Option<NodeId>) -> Result<()> {
        self.kernel.schedule(at, Target::Node(node), Ev::RouteSend { packet, next_hop })?;
        Ok(())
    }

    /// A data packet from `src` to `dst` outside any CBR connection.
    pub fn data_packet(&mut self, src: usize, dst: usize, payload_bytes: u32) -> Packet {
        let uid = self.next_uid;
        self.next_uid += 1;
        Packet {
            uid,
            src: NodeId::from(src),
            dst: Some(NodeId::from(dst)),
            ttl: DATA_TTL,
            hops: 0,
            created_at: self.kernel.now(),
            body: Body::Data { conn: usize::MAX, seq: uid, payload_bytes, route: None },
        }
    }

    pub fn run_until(&mut self, t_end: f64) -> Result<u64> {
        let t_end = t_end.min(self.cfg.sim_time);
        if t_end < self.kernel.now() {
            return Ok(0);
        }
        let mut kernel = std::mem::take(&mut self.kernel);
        let out = kernel.run_until(t_end, |k, ev| self.handle(k, ev));
        self.kernel = kernel;
        out
    }

    /// Runs to the horizon and closes the ledger.
    pub fn run(mut self) -> Result<RunOutput> {
        self.run_until(self.cfg.sim_time)?;
        Ok(self.finish())
    }

    pub fn finish(mut self) -> RunOutput {
        if let Some(t) = self.trace.as_mut() {
            let _ = t.flush();
        }
        let mut in_flight = 0u64;
        for node in &self.nodes {
            in_flight += node.mac.queue.iter().filter(|e| e.0.is_data()).count() as u64;
            in_flight += node.mac.current.as_ref().is_some_and(|c| c.packet.is_data()) as u64;
            in_flight += node.agent.buffered_data() as u64;
        }
        let l = &mut self.ledger;
        l.in_flight_at_end = in_flight;
        l.per_node = self
            .nodes
            .iter()
            .map(|n| NodeEnergy {
                initial_j: n.battery.initial_j,
                remaining_j: n.battery.remaining_j,
                debited_j: n.battery.debited_j,
                truncated: n.battery.truncated,
            })
            .collect();
        l.per_conn = self
            .conns
            .iter()
            .zip(&self.sinks)
            .zip(&self.conn_sent)
            .map(|((c, s), &sent)| ConnStats { id: c.id, src: c.src, dst: c.dst, sent, received: s.received })
            .collect();
        for s in &self.sinks {
            l.cbr_received += s.received;
            l.duplicates += s.duplicates;
            l.delay_sum_s += s.delay_sum;
            l.received_bits += s.bits;
            l.hops_sum += s.hops_sum;
        }
        l.cbr_sent = self.conn_sent.iter().sum();
        RunOutput { ledger: self.ledger, mac_log: self.mac_log.unwrap_or_default(), events: self.kernel.processed() }
    }

    fn log(&mut self, e: MacEvent) {
        if let Some(log) = self.mac_log.as_mut() {
            log.push(e);
        }
    }

    fn trace_line(&mut self, line: std::fmt::Arguments) -> Result<()> {
        if let Some(out) = self.trace.as_mut() {
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    fn handle(&mut self, k: &mut Kernel<Ev>, ev: SimEvent<Ev>) -> Result<()> {
        self.clock = k.now();
        match (ev.target, ev.payload) {
            (Target::Global, Ev::Cbr { conn, k: seq }) => self.cbr_tick(k, conn, seq),
            (Target::Global, Ev::Trace) => self.trace_tick(k),
            (Target::Node(i), payload) => {
                if self.nodes[i].dead {
                    // In-air frames still resolve; late hand-offs are dropped.
                    return match payload {
                        Ev::TxEnd { frame } => self.tx_end(k, frame),
                        Ev::RouteSend { packet, .. } => {
                            self.drop_packet(&packet, DropReason::EnergyExhausted);
                            Ok(())
                        }
                        _ => Ok(()),
                    };
                }
                match payload {
                    Ev::Start => self.with_agent(k, i, |a, ctx| a.start(ctx)),
                    Ev::RoutingTimer(t) => self.with_agent(k, i, |a, ctx| a.on_timer(ctx, t)),
                    Ev::RouteSend { packet, next_hop } => self.mac_enqueue(k, i, packet, next_hop),
                    Ev::MacAttempt { token } => self.mac_attempt(k, i, token),
                    Ev::TxEnd { frame } => self.tx_end(k, frame),
                    Ev::MacResume { token } => {
                        if self.nodes[i].mac.token == token {
                            self.nodes[i].mac.busy = false;
                            self.mac_kick(k, i)
                        } else {
                            Ok(())
                        }
                    }
                    Ev::Cbr { .. } | Ev::Trace => Ok(()),
                }
            }
            (Target::Global, _) => Ok(()),
        }
    }

    fn trace_tick(&mut self, k: &mut Kernel<Ev>) -> Result<()> {
        let t = k.now();
        let n = self.nodes.len();
        let mut lines = String::new();
        for i in 0..n {
            let (x, y) = self.mobility.position(i, t);
            lines.push_str(&format!("M {t:.6} {i} {x:.3} {y:.3}\n"));
        }
        if let Some(out) = self.trace.as_mut() {
            out.write_all(lines.as_bytes())?;
        }
        k.schedule_in(self.cfg.trace_interval, Target::Global, Ev::Trace)?;
        Ok(())
    }

    fn cbr_tick(&mut self, k: &mut Kernel<Ev>, conn: usize, seq: u64) -> Result<()> {
        let c = &self.conns[conn];
        let (src, dst, payload) = (c.src.idx(), c.dst, c.payload_bytes);
        if let Some(t) = c.emission_time(seq + 1) {
            k.schedule(t, Target::Global, Ev::Cbr { conn, k: seq + 1 })?;
        }
        let uid = self.next_uid;
        self.next_uid += 1;
        let packet = Packet {
            uid,
            src: NodeId::from(src),
            dst: Some(dst),
            ttl: DATA_TTL,
            hops: 0,
            created_at: k.now(),
            body: Body::Data { conn, seq, payload_bytes: payload, route: None },
        };
        self.conn_sent[conn] += 1;
        if self.nodes[src].dead {
            self.ledger.record_drop(DropReason::EnergyExhausted);
            return Ok(());
        }
        self.with_agent(k, src, |a, ctx| a.originate(ctx, packet))
    }

    fn with_agent<F>(&mut self, k: &mut Kernel<Ev>, i: usize, f: F) -> Result<()>
    where
        F: FnOnce(&mut Agent, &mut RoutingCtx),
    {
        let node = &mut self.nodes[i];
        let mut ctx = RoutingCtx::new(k.now(), NodeId::from(i), &mut node.routing_rng, &mut self.next_uid);
        f(&mut node.agent, &mut ctx);
        let actions = ctx.into_actions();
        for a in actions {
            self.apply(k, i, a)?;
        }
        Ok(())
    }

    fn apply(&mut self, k: &mut Kernel<Ev>, i: usize, action: Action) -> Result<()> {
        match action {
            Action::Send { packet, next_hop, delay } => {
                self.ledger.control.record(NodeId::from(i), &packet);
                if delay > 0.0 {
                    k.schedule_in(delay, Target::Node(i), Ev::RouteSend { packet, next_hop })?;
                    Ok(())
                } else {
                    self.mac_enqueue(k, i, packet, next_hop)
                }
            }
            Action::Deliver(p) => {
                self.sink_receive(&p, k.now());
                Ok(())
            }
            Action::Drop { packet, reason } => {
                self.drop_packet(&packet, reason);
                Ok(())
            }
            Action::Timer { delay, timer } => {
                k.schedule_in(delay, Target::Node(i), Ev::RoutingTimer(timer))?;
                Ok(())
            }
            Action::Count(what) => {
                self.ledger.bump(what);
                Ok(())
            }
        }
    }

    fn sink_receive(&mut self, p: &Packet, now: f64) {
        let Some((conn, _)) = p.data_id() else { return };
        match self.sinks.get_mut(conn).map(|s| s.receive(p, now)) {
            Some(SinkOutcome::Accepted) | Some(SinkOutcome::Duplicate) => {}
            Some(SinkOutcome::Ignored) | None => self.ledger.bump("data_for_unknown_sink"),
        }
    }

    fn drop_packet(&mut self, p: &Packet, reason: DropReason) {
        if p.is_data() {
            if p.data_id().is_some_and(|(c, _)| c < self.conns.len()) {
                self.ledger.record_drop(reason);
            }
            if let Some(out) = self.trace.as_mut() {
                // Trace output is best effort here; write errors surface on the next position sample.
                let _ = writeln!(out, "D {:.6} {} {}", self.clock, p.uid, reason.name());
            }
        } else {
            self.ledger.bump("control_dropped");
        }
    }

    fn mac_enqueue(&mut self, k: &mut Kernel<Ev>, i: usize, packet: Packet, next_hop: Option<NodeId>) -> Result<()> {
        if self.nodes[i].dead {
            self.drop_packet(&packet, DropReason::EnergyExhausted);
            return Ok(());
        }
        if let Err((p, _)) = self.nodes[i].mac.queue.push((packet, next_hop)) {
            self.drop_packet(&p, DropReason::QueueOverflow);
        }
        self.mac_kick(k, i)
    }

    fn backoff(&mut self, i: usize, cw: u32) -> f64 {
        let mac = &mut self.nodes[i].mac;
        let slots = match self.cfg.mac.backoff_override {
            Some(s) => s,
            None => mac.rng.below(u64::from(cw)) as u32,
        };
        f64::from(slots) * self.cfg.mac.slot
    }

    fn schedule_attempt(&mut self, k: &mut Kernel<Ev>, i: usize, at: f64) -> Result<()> {
        let mac = &mut self.nodes[i].mac;
        mac.token += 1;
        k.schedule(at, Target::Node(i), Ev::MacAttempt { token: mac.token })?;
        Ok(())
    }

    /// Starts serving the next queued packet if the MAC is idle.
    fn mac_kick(&mut self, k: &mut Kernel<Ev>, i: usize) -> Result<()> {
        let node = &mut self.nodes[i];
        if node.dead || node.mac.busy {
            return Ok(());
        }
        let Some((packet, next_hop)) = node.mac.queue.pop() else { return Ok(()) };
        let cw = self.cfg.mac.cw_min;
        node.mac.current = Some(Current { packet, next_hop, transmissions: 0, cw, defers: 0, in_air: None });
        node.mac.busy = true;
        let at = k.now() + self.cfg.mac.difs + self.backoff(i, cw);
        self.schedule_attempt(k, i, at)
    }

    /// End of the latest frame sensed at `i` that is in the air now.
    fn sensed_until(&self, i: usize, now: f64) -> Option<f64> {
        let cs = self.cfg.radio.cs_thresh;
        self.frames
            .values()
            .filter(|f| f.start < now && now < f.end && (f.tx == i || f.power[i] >= cs))
            .map(|f| f.end)
            .reduce(f64::max)
    }

    fn mac_attempt(&mut self, k: &mut Kernel<Ev>, i: usize, token: u64) -> Result<()> {
        if self.nodes[i].mac.token != token || self.nodes[i].mac.current.is_none() {
            return Ok(());
        }
        let now = k.now();
        if let Some(until) = self.sensed_until(i, now) {
            let max_defers = self.cfg.mac.max_defers;
            let cur = self.nodes[i].mac.current.as_mut().expect("checked above");
            cur.defers += 1;
            let uid = cur.packet.uid;
            let (cw, defers) = (cur.cw, cur.defers);
            if defers > max_defers {
                cur.transmissions += 1;
                cur.defers = 0;
            }
            self.log(MacEvent::Defer { t: now, node: NodeId::from(i), uid });
            if defers > max_defers {
                self.ledger.bump("mac_defer_limit");
                return self.attempt_failed(k, i, RxFailure::Collision, 0.0);
            }
            let at = until + self.cfg.mac.difs + self.backoff(i, cw);
            return self.schedule_attempt(k, i, at);
        }
        self.transmit(k, i)
    }

    fn transmit(&mut self, k: &mut Kernel<Ev>, i: usize) -> Result<()> {
        let now = k.now();
        let n = self.nodes.len();
        let (packet, next_hop, attempt) = {
            let cur = self.nodes[i].mac.current.as_mut().expect("transmit without a packet");
            cur.transmissions += 1;
            cur.defers = 0;
            (cur.packet.clone(), cur.next_hop, cur.transmissions)
        };
        let bytes = packet.size_bytes();
        let duration = self.cfg.mac.frame_duration(bytes);
        let bits = self.cfg.mac.frame_bits(bytes);
        let tx_pos = self.mobility.position(i, now);
        let mut power = vec![0.0; n];
        for (r, p) in power.iter_mut().enumerate() {
            if r == i {
                continue;
            }
            let rp = self.mobility.position(r, now);
            let d = (tx_pos.0 - rp.0).hypot(tx_pos.1 - rp.1).max(MIN_DISTANCE);
            *p = received_power(&self.cfg.fading, &self.cfg.radio, d, &mut self.fading_rng)?.received_w;
        }
        let id = self.next_frame;
        self.next_frame += 1;
        self.max_airtime = self.max_airtime.max(duration);
        self.log(MacEvent::TxStart { t: now, node: NodeId::from(i), uid: packet.uid, attempt, bits });
        if self.trace.is_some() {
            let nh = next_hop.map_or_else(|| "*".to_string(), |h| h.to_string());
            self.trace_line(format_args!("T {now:.6} {i} {} {} {bytes} {nh}", packet.uid, packet.kind().name()))?;
        }
        self.frames.insert(id, Frame { tx: i, packet, next_hop, start: now, end: now + duration, bits, power });
        if let Some(cur) = self.nodes[i].mac.current.as_mut() {
            cur.in_air = Some(id);
        }
        self.charge(k, i, bits, true);
        k.schedule(now + duration, Target::Node(i), Ev::TxEnd { frame: id })?;
        Ok(())
    }

    /// Debits a node and handles death. Returns whether the node is alive afterwards.
    fn charge(&mut self, k: &mut Kernel<Ev>, i: usize, bits: u64, tx: bool) -> bool {
        let rate = self.cfg.mac.link_rate;
        let b = &mut self.nodes[i].battery;
        let charged = if tx { b.debit_tx(bits, rate) } else { b.debit_rx(bits, rate) };
        if charged.is_none() {
            return false;
        }
        if b.is_dead() && !self.nodes[i].dead {
            self.kill(k, i);
            return false;
        }
        true
    }

    fn kill(&mut self, _k: &mut Kernel<Ev>, i: usize) {
        let node = &mut self.nodes[i];
        node.dead = true;
        node.mac.token += 1;
        let mut lost: Vec<Packet> = node.mac.queue.drain().into_iter().map(|e| e.0).collect();
        lost.extend(node.agent.drain_buffer());
        // A frame already in the air is resolved by its TxEnd.
        if node.mac.current.as_ref().is_some_and(|c| c.in_air.is_none()) {
            lost.push(node.mac.current.take().expect("checked").packet);
        }
        self.ledger.bump("node_died");
        for p in lost {
            self.drop_packet(&p, DropReason::EnergyExhausted);
        }
    }

    fn tx_end(&mut self, k: &mut Kernel<Ev>, frame_id: u64) -> Result<()> {
        let now = k.now();
        let Some(f) = self.frames.get(&frame_id) else { return Ok(()) };
        let (tx, start, end, bits, next_hop) = (f.tx, f.start, f.end, f.bits, f.next_hop);
        let packet = f.packet.clone();
        let broadcast = next_hop.is_none();
        let cs = self.cfg.radio.cs_thresh;
        let rx_thresh = self.cfg.radio.rx_thresh;

        let mut outcomes: Vec<(usize, std::result::Result<(), RxFailure>)> = Vec::new();
        for r in 0..self.nodes.len() {
            let p = f.power[r];
            if r == tx {
                continue;
            }
            let intended = next_hop == Some(NodeId::from(r));
            if p < cs && !intended {
                continue;
            }
            let outcome = if self.nodes[r].dead {
                Err(RxFailure::ReceiverDead)
            } else if p < rx_thresh {
                Err(RxFailure::BelowThreshold)
            } else {
                let overlapping = self.frames.iter().filter(|(id, g)| **id != frame_id && g.start < end && g.end > start);
                let mut arrivals = vec![(frame_id, p)];
                let mut half_duplex = false;
                for (id, g) in overlapping {
                    if g.tx == r {
                        half_duplex = true;
                    } else {
                        arrivals.push((*id, g.power[r]));
                    }
                }
                if half_duplex {
                    Err(RxFailure::HalfDuplex)
                } else if resolve_reception(&arrivals, rx_thresh, self.capture_ratio) == Some(frame_id) {
                    Ok(())
                } else {
                    Err(RxFailure::Collision)
                }
            };
            outcomes.push((r, outcome));
        }

        let mut intended_result = Err(RxFailure::BelowThreshold);
        for (r, outcome) in outcomes {
            let node = NodeId::from(r);
            let intended = next_hop == Some(node);
            match outcome {
                Ok(()) => {
                    let addressed = broadcast || intended;
                    let charged = addressed || self.cfg.energy.charge_overheard;
                    self.log(MacEvent::RxOk { t: now, node, uid: packet.uid, bits, charged });
                    if !charged {
                        continue;
                    }
                    let alive = self.charge(k, r, bits, false);
                    if intended {
                        intended_result = if alive { Ok(()) } else { Err(RxFailure::ReceiverDead) };
                    }
                    if addressed && alive {
                        self.trace_line(format_args!("R {now:.6} {r} {} {} {tx}", packet.uid, packet.kind().name()))?;
                        let mut p = packet.clone();
                        p.hops += 1;
                        let from = NodeId::from(tx);
                        self.with_agent(k, r, |a, ctx| a.receive(ctx, p, from))?;
                    }
                }
                Err(why) => {
                    self.log(MacEvent::RxFail { t: now, node, uid: packet.uid, why });
                    if intended {
                        intended_result = Err(why);
                    }
                }
            }
        }
        self.prune_frames(now);

        if self.nodes[tx].dead {
            // Sender died while this frame was in the air.
            let delivered = broadcast || intended_result.is_ok();
            if let Some(cur) = self.nodes[tx].mac.current.take() {
                if !delivered {
                    self.drop_packet(&cur.packet, DropReason::EnergyExhausted);
                }
            }
            return Ok(());
        }
        if let Some(cur) = self.nodes[tx].mac.current.as_mut() {
            cur.in_air = None;
        }
        let mac = self.cfg.mac.clone();
        let ack_wait = mac.sifs + mac.ack_duration();
        if broadcast {
            self.nodes[tx].mac.current = None;
            self.nodes[tx].mac.busy = false;
            return self.mac_kick(k, tx);
        }
        let nh = next_hop.expect("unicast");
        match intended_result {
            Ok(()) => {
                let ack_bits = u64::from(mac.ack_bytes) * 8;
                self.nodes[tx].mac.current = None;
                self.log(MacEvent::Ack { t: now, from: nh, to: NodeId::from(tx), bits: ack_bits });
                self.charge(k, nh.idx(), ack_bits, true);
                if !self.charge(k, tx, ack_bits, false) {
                    return Ok(());
                }
                self.with_agent(k, tx, |a, ctx| a.link_feedback(ctx, nh, true, &packet))?;
                self.resume_after(k, tx, ack_wait)
            }
            Err(why) => self.attempt_failed(k, tx, why, ack_wait),
        }
    }

    fn resume_after(&mut self, k: &mut Kernel<Ev>, i: usize, wait: f64) -> Result<()> {
        if self.nodes[i].dead {
            return Ok(());
        }
        let mac = &mut self.nodes[i].mac;
        mac.token += 1;
        k.schedule_in(wait, Target::Node(i), Ev::MacResume { token: mac.token })?;
        Ok(())
    }

    /// A unicast attempt failed: back off and retry, or give up and tell routing.
    fn attempt_failed(&mut self, k: &mut Kernel<Ev>, i: usize, why: RxFailure, wait: f64) -> Result<()> {
        let retry_limit = self.cfg.mac.retry_limit;
        let cw_max = self.cfg.mac.cw_max;
        let cur = self.nodes[i].mac.current.as_mut().expect("failed attempt without a packet");
        if cur.next_hop.is_none() {
            // Broadcasts are never retried.
            let cur = self.nodes[i].mac.current.take().expect("checked above");
            self.drop_packet(&cur.packet, DropReason::Collision);
            self.nodes[i].mac.busy = false;
            return self.mac_kick(k, i);
        }
        if cur.transmissions <= retry_limit {
            cur.cw = (cur.cw * 2).min(cw_max);
            let cw = cur.cw;
            let at = k.now() + wait + self.cfg.mac.difs + self.backoff(i, cw);
            return self.schedule_attempt(k, i, at);
        }
        let cur = self.nodes[i].mac.current.take().expect("checked above");
        let nh = cur.next_hop.expect("unicast");
        let reason = match why {
            RxFailure::BelowThreshold => DropReason::BelowThreshold,
            RxFailure::Collision | RxFailure::HalfDuplex => DropReason::Collision,
            RxFailure::ReceiverDead => DropReason::RetryLimit,
        };
        self.ledger.bump("mac_link_failure");
        self.drop_packet(&cur.packet, reason);
        let packet = cur.packet;
        self.with_agent(k, i, |a, ctx| a.link_feedback(ctx, nh, false, &packet))?;
        let stranded = self.nodes[i].mac.queue.remove_next_hop(nh);
        for (p, _) in stranded {
            self.with_agent(k, i, |a, ctx| a.reroute(ctx, p))?;
        }
        self.resume_after(k, i, wait)
    }

    fn prune_frames(&mut self, now: f64) {
        if self.frames.len() < 64 {
            return;
        }
        let horizon = now - 2.0 * self.max_airtime;
        self.frames.retain(|_, f| f.end >= horizon);
    }
}

/// Builds and runs one scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    Network::new(cfg)?.run()
}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network").field("now", &self.kernel.now()).field("nodes", &self.nodes.len()).finish()
    }
}
