//! Discrete-event simulation kernel.
//!
//! Virtual time only: every side effect is an event on a priority queue
//! ordered by (timestamp, insertion sequence), so identical inputs replay
//! identically. The kernel owns batteries, positions, neighbor views and
//! metrics; protocols are pure state machines invoked per event.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand_chacha::ChaCha8Rng;

use crate::energy::{Battery, EnergyModel, IdleState};
use crate::metrics::{Collector, MetricsReport, NodeStats};
use crate::model::{
    DataMessage, Message, MessageId, NeighborView, NodeId, ProtocolAction, ProtocolCtx,
    RoutingProtocol, TimerTag,
};
use crate::protocols::{build_node_protocol, ProtocolId, ProtocolParams};
use crate::rng::{stream, StreamPurpose};
use crate::scenario::{mobility_step, MobilitySpec, TrafficSpec};
use crate::time::SimTime;
use crate::topology::dist;

/// Who can hear whom.
#[derive(Debug, Clone)]
pub enum Medium {
    /// Unit-disk radio over the current positions.
    Disk { range: f64 },
    /// Fixed adjacency, for driving explicit graphs. Rows must be sorted
    /// ascending and symmetric.
    Graph { adj: Vec<Vec<NodeId>> },
}

/// Immutable description of one simulated deployment.
#[derive(Debug, Clone)]
pub struct SimWorld {
    pub positions: Vec<(f64, f64)>,
    pub medium: Medium,
    pub sink: NodeId,
    pub initial_j: Vec<f64>,
    pub capacity_j: f64,
}

#[derive(Debug, Clone)]
pub struct TrafficPlan {
    pub spec: TrafficSpec,
    /// No data is produced before this instant.
    pub start_s: f64,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub seed: u64,
    pub duration_s: f64,
    pub ttl: u16,
    pub model: EnergyModel,
    pub idle: IdleState,
    pub traffic: Option<TrafficPlan>,
    pub mobility: Option<MobilitySpec>,
    /// Extra one-shot data events (time, origin), mainly for tests.
    pub injected: Vec<(f64, NodeId)>,
    pub metric_interval_s: f64,
    /// Instant separating setup traffic from the measured phase.
    pub startup_end_s: f64,
    pub trace: bool,
}

impl SimOptions {
    /// Bare options: no periodic traffic, no mobility, defaults elsewhere.
    pub fn basic(seed: u64, duration_s: f64, ttl: u16) -> Self {
        SimOptions {
            seed,
            duration_s,
            ttl,
            model: EnergyModel::default(),
            idle: IdleState::Awake,
            traffic: None,
            mobility: None,
            injected: Vec::new(),
            metric_interval_s: 1.0,
            startup_end_s: 0.0,
            trace: false,
        }
    }
}

pub struct RunOutput {
    pub report: MetricsReport,
    pub trace: Vec<String>,
    /// Final protocol states, downcastable for inspection.
    pub protocols: Vec<Box<dyn RoutingProtocol>>,
}

#[derive(Debug, Clone)]
enum EventKind {
    Receive { to: NodeId, msg: Message },
    Timer { node: NodeId, tag: TimerTag },
    Sense { node: NodeId, reschedule: bool },
    MobilityTick,
    MetricTick,
    StartupMark,
}

struct QueuedEvent {
    at: SimTime,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl Eq for QueuedEvent {}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

struct SimNode {
    battery: Battery,
    protocol: Box<dyn RoutingProtocol>,
    view: NeighborView,
    next_seq: u32,
    tx_count: u64,
    rx_count: u64,
    traffic_rng: ChaCha8Rng,
    proto_rng: ChaCha8Rng,
}

struct Engine {
    sink: NodeId,
    model: EnergyModel,
    positions: Vec<(f64, f64)>,
    medium: Medium,
    nodes: Vec<SimNode>,
    mobility_rngs: Vec<ChaCha8Rng>,
    queue: BinaryHeap<Reverse<QueuedEvent>>,
    event_seq: u64,
    collector: Collector,
    trace_on: bool,
    trace: Vec<String>,
}

impl Engine {
    fn push(&mut self, at: SimTime, kind: EventKind) {
        let seq = self.event_seq;
        self.event_seq += 1;
        self.queue.push(Reverse(QueuedEvent { at, seq, kind }));
    }

    fn in_range(&self, u: NodeId) -> Vec<NodeId> {
        match &self.medium {
            Medium::Disk { range } => {
                let p = self.positions[u.0 as usize];
                (0..self.nodes.len() as u16)
                    .filter(|&j| j != u.0)
                    .filter(|&j| dist(p, self.positions[j as usize]) <= *range)
                    .map(NodeId)
                    .collect()
            }
            Medium::Graph { adj } => adj[u.0 as usize].clone(),
        }
    }

    fn tr(&mut self, now: SimTime, line: impl FnOnce() -> String) {
        if self.trace_on {
            let text = line();
            self.trace.push(format!("{:10.6} {}", now.as_secs_f64(), text));
        }
    }

    /// Syncs the node's neighbor view, builds the hook context and invokes
    /// the protocol. `heard` feeds an overheard (sender, energy) pair into
    /// the view first.
    fn protocol_event(
        &mut self,
        i: usize,
        now: SimTime,
        heard: Option<(NodeId, f64)>,
        invoke: impl FnOnce(&mut dyn RoutingProtocol, &mut ProtocolCtx) -> Vec<ProtocolAction>,
    ) -> Vec<ProtocolAction> {
        let members = self.in_range(NodeId(i as u16));
        let sink = self.sink;
        let node = &mut self.nodes[i];
        node.view.sync_members(&members);
        if let Some((from, energy)) = heard {
            node.view.record(from, energy, now);
        }
        let SimNode { battery, protocol, view, proto_rng, .. } = node;
        let mut ctx = ProtocolCtx {
            node: NodeId(i as u16),
            sink,
            now,
            energy_pct: battery.percent(),
            view,
            rng: proto_rng,
        };
        invoke(protocol.as_mut(), &mut ctx)
    }

    fn execute_actions(&mut self, from: NodeId, actions: Vec<ProtocolAction>, now: SimTime) {
        for action in actions {
            if !self.nodes[from.0 as usize].battery.is_alive() {
                self.tr(now, || format!("node={from} remaining actions dropped (dead)"));
                break;
            }
            match action {
                ProtocolAction::Broadcast(msg) => self.transmit(from, msg, None, now),
                ProtocolAction::Unicast(to, msg) => {
                    assert_ne!(to, from, "node {from} unicasting to itself");
                    self.transmit(from, msg, Some(to), now);
                }
                ProtocolAction::ScheduleTimer { delay_s, tag } => {
                    self.push(now.plus_secs(delay_s), EventKind::Timer { node: from, tag });
                }
                ProtocolAction::Deliver(id) => {
                    self.tr(now, || format!("node={from} deliver {id}"));
                }
            }
        }
    }

    /// One radio transmission: the sender pays TX once; every in-range node
    /// alive right now (or the addressee alone for a unicast) is charged RX
    /// and handed the message one hop delay later. Receivers are fixed at
    /// send time; a receiver that dies in flight drops the message.
    fn transmit(&mut self, from: NodeId, mut msg: Message, to: Option<NodeId>, now: SimTime) {
        let targets: Vec<NodeId> = match to {
            Some(t) => {
                if self.in_range(from).contains(&t) {
                    vec![t]
                } else {
                    Vec::new()
                }
            }
            None => self.in_range(from),
        };
        {
            let node = &mut self.nodes[from.0 as usize];
            node.battery.charge_tx(now, &self.model);
            node.tx_count += 1;
            msg.set_sender(from);
            msg.set_sender_energy(node.battery.percent());
        }
        let mut reached = 0usize;
        for t in targets {
            let receiver = &mut self.nodes[t.0 as usize];
            receiver.battery.settle(now, &self.model);
            if receiver.battery.is_alive() {
                self.push(
                    now.plus_secs(self.model.hop_delay_s),
                    EventKind::Receive { to: t, msg: msg.clone() },
                );
                reached += 1;
            }
        }
        self.tr(now, || match to {
            Some(t) => format!("node={from} tx unicast to {t} reached={reached}"),
            None => format!("node={from} tx broadcast reached={reached}"),
        });
    }

    fn handle_receive(&mut self, now: SimTime, to: NodeId, msg: Message) {
        let i = to.0 as usize;
        {
            let node = &mut self.nodes[i];
            node.battery.settle(now, &self.model);
            if !node.battery.is_alive() {
                self.tr(now, || format!("node={to} rx dropped (dead)"));
                return;
            }
            node.battery.charge_rx(now, &self.model);
            node.rx_count += 1;
            if !node.battery.is_alive() {
                self.tr(now, || format!("node={to} died during rx"));
                return;
            }
        }
        if let Message::Data(ref data) = msg {
            self.collector.record_reach(to, data.id);
            if to == self.sink {
                self.collector.record_sink_rx(data.id, now);
            }
        }
        let heard = Some((msg.sender(), msg.sender_energy()));
        let actions = match msg {
            Message::Data(data) => {
                self.tr(now, || format!("node={to} rx data {} from {}", data.id, data.sender));
                self.protocol_event(i, now, heard, |p, ctx| p.on_data(data, ctx))
            }
            Message::Control(ctrl) => {
                self.tr(now, || format!("node={to} rx control from {}", ctrl.sender));
                self.protocol_event(i, now, heard, |p, ctx| p.on_control(ctrl, ctx))
            }
        };
        self.execute_actions(to, actions, now);
    }

    fn handle_timer(&mut self, now: SimTime, node_id: NodeId, tag: TimerTag) {
        let i = node_id.0 as usize;
        let node = &mut self.nodes[i];
        node.battery.settle(now, &self.model);
        if !node.battery.is_alive() {
            return;
        }
        let actions = self.protocol_event(i, now, None, |p, ctx| p.on_timer(tag, ctx));
        self.execute_actions(node_id, actions, now);
    }

    fn handle_sense(&mut self, now: SimTime, node_id: NodeId, reschedule: bool, opts: &SimOptions) {
        let i = node_id.0 as usize;
        let msg = {
            let node = &mut self.nodes[i];
            node.battery.settle(now, &self.model);
            if !node.battery.is_alive() {
                return;
            }
            node.battery.charge_sense(now, &self.model);
            if !node.battery.is_alive() {
                return;
            }
            let seq = node.next_seq;
            node.next_seq += 1;
            let id = MessageId { origin: node_id, seq };
            DataMessage::new(id, node_id, opts.ttl, node.battery.percent(), now)
        };
        self.collector.record_created(msg.id);
        self.tr(now, || format!("node={node_id} sense {}", msg.id));
        let actions = self.protocol_event(i, now, None, |p, ctx| p.on_originate(msg, ctx));
        self.execute_actions(node_id, actions, now);
        if reschedule {
            if let Some(plan) = &opts.traffic {
                let gap = plan.spec.next_gap(&mut self.nodes[i].traffic_rng);
                self.push(now.plus_secs(gap), EventKind::Sense { node: node_id, reschedule: true });
            }
        }
    }

    fn settle_all(&mut self, now: SimTime) {
        for node in &mut self.nodes {
            node.battery.settle(now, &self.model);
        }
    }

    fn alive_count(&self) -> u32 {
        self.nodes.iter().filter(|n| n.battery.is_alive()).count() as u32
    }

    fn total_drained(&self) -> f64 {
        self.nodes.iter().map(|n| n.battery.drained_j()).sum()
    }
}

pub fn run_protocol(
    world: &SimWorld,
    proto: ProtocolId,
    params: &ProtocolParams,
    opts: &SimOptions,
) -> RunOutput {
    let n = world.positions.len();
    assert!(n > 0, "empty world");
    assert_eq!(world.initial_j.len(), n, "one initial level per node");
    assert!((world.sink.0 as usize) < n, "sink outside the deployment");
    if let Medium::Graph { adj } = &world.medium {
        assert_eq!(adj.len(), n, "adjacency size mismatch");
    }
    assert!(opts.duration_s > 0.0, "duration must be positive");

    let nodes: Vec<SimNode> = (0..n)
        .map(|i| SimNode {
            battery: Battery::new(world.capacity_j, world.initial_j[i], opts.idle),
            protocol: build_node_protocol(proto, NodeId(i as u16), world.sink, params),
            view: NeighborView::default(),
            next_seq: 0,
            tx_count: 0,
            rx_count: 0,
            traffic_rng: stream(opts.seed, StreamPurpose::Traffic, NodeId(i as u16)),
            proto_rng: stream(opts.seed, StreamPurpose::Fanout, NodeId(i as u16)),
        })
        .collect();

    let mut engine = Engine {
        sink: world.sink,
        model: opts.model,
        positions: world.positions.clone(),
        medium: world.medium.clone(),
        nodes,
        mobility_rngs: (0..n)
            .map(|i| stream(opts.seed, StreamPurpose::Mobility, NodeId(i as u16)))
            .collect(),
        queue: BinaryHeap::new(),
        event_seq: 0,
        collector: Collector::new(n, world.sink),
        trace_on: opts.trace,
        trace: Vec::new(),
    };

    let duration = SimTime::from_secs_f64(opts.duration_s);

    for i in 0..n {
        let actions = engine.protocol_event(i, SimTime::ZERO, None, |p, ctx| p.on_start(ctx));
        engine.execute_actions(NodeId(i as u16), actions, SimTime::ZERO);
    }

    if let Some(plan) = &opts.traffic {
        assert!(plan.start_s < opts.duration_s, "traffic starts after the run ends");
        for i in 0..n {
            let gap = plan.spec.next_gap(&mut engine.nodes[i].traffic_rng);
            engine.push(
                SimTime::from_secs_f64(plan.start_s + gap),
                EventKind::Sense { node: NodeId(i as u16), reschedule: true },
            );
        }
    }
    for &(at_s, origin) in &opts.injected {
        engine.push(
            SimTime::from_secs_f64(at_s),
            EventKind::Sense { node: origin, reschedule: false },
        );
    }
    if let Some(spec) = &opts.mobility {
        engine.push(
            SimTime::from_secs_f64(spec.start_after_s + spec.update_interval_s),
            EventKind::MobilityTick,
        );
    }
    engine.collector.sample(0.0, engine.alive_count());
    if opts.metric_interval_s <= opts.duration_s {
        engine.push(SimTime::from_secs_f64(opts.metric_interval_s), EventKind::MetricTick);
    }
    if opts.startup_end_s <= opts.duration_s {
        engine.push(SimTime::from_secs_f64(opts.startup_end_s), EventKind::StartupMark);
    }

    let mut last_at = SimTime::ZERO;
    while let Some(Reverse(ev)) = engine.queue.pop() {
        if ev.at > duration {
            break;
        }
        assert!(ev.at >= last_at, "event queue regressed in time");
        last_at = ev.at;
        match ev.kind {
            EventKind::Receive { to, msg } => engine.handle_receive(ev.at, to, msg),
            EventKind::Timer { node, tag } => engine.handle_timer(ev.at, node, tag),
            EventKind::Sense { node, reschedule } => {
                engine.handle_sense(ev.at, node, reschedule, opts)
            }
            EventKind::MobilityTick => {
                let spec = opts.mobility.clone().expect("mobility tick without a spec");
                mobility_step(&mut engine.positions, engine.sink, &spec, &mut engine.mobility_rngs);
                engine.push(ev.at.plus_secs(spec.update_interval_s), EventKind::MobilityTick);
            }
            EventKind::MetricTick => {
                engine.settle_all(ev.at);
                engine.collector.sample(ev.at.as_secs_f64(), engine.alive_count());
                let next = ev.at.plus_secs(opts.metric_interval_s);
                if next <= duration {
                    engine.push(next, EventKind::MetricTick);
                }
            }
            EventKind::StartupMark => {
                engine.settle_all(ev.at);
                let setup = engine.total_drained();
                engine.collector.set_setup_energy(setup);
            }
        }
    }

    engine.settle_all(duration);
    let per_node: Vec<NodeStats> = engine
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| NodeStats {
            node: NodeId(i as u16),
            energy_j: node.battery.drained_j(),
            death_s: node.battery.death_time().map(|t| t.as_secs_f64()),
            tx_count: node.tx_count,
            rx_count: node.rx_count,
            conservation_rel_err: node.battery.conservation_rel_err(),
        })
        .collect();

    let report = engine.collector.finalize(per_node);
    RunOutput {
        report,
        trace: engine.trace,
        protocols: engine.nodes.into_iter().map(|n| n.protocol).collect(),
    }
}
