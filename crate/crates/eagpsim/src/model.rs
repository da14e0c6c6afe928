//! Shared domain types and the protocol-facing node interface.

use std::collections::BTreeMap;
use std::fmt;

use rand_chacha::ChaCha8Rng;

use crate::time::SimTime;

/// Node identifier, dense 0..N-1 within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u16);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Message identity: (origin, per-origin sequence number).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageId {
    pub origin: NodeId,
    pub seq: u32,
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.origin, self.seq)
    }
}

pub const DATA_PAYLOAD_BYTES: u32 = 64;
pub const CONTROL_BASE_BYTES: u32 = 32;
pub const CONTROL_PER_ID_BYTES: u32 = 8;

/// A sensed datum travelling through the network.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMessage {
    pub id: MessageId,
    /// Last hop; rewritten by the kernel on every transmission.
    pub sender: NodeId,
    pub ttl: u16,
    pub payload_size: u32,
    /// Energy percentage of the last hop, piggybacked.
    pub sender_energy: f64,
    pub created_at: SimTime,
    /// Remaining hop budget toward the sink; used by cost-field routing only.
    pub route_cost: Option<u32>,
}

impl DataMessage {
    pub fn new(id: MessageId, origin: NodeId, ttl: u16, energy_pct: f64, now: SimTime) -> Self {
        DataMessage {
            id,
            sender: origin,
            ttl,
            payload_size: DATA_PAYLOAD_BYTES,
            sender_energy: energy_pct,
            created_at: now,
            route_cost: None,
        }
    }

    /// Copy for the next hop with the TTL spent. Panics on an exhausted TTL;
    /// callers must check first.
    pub fn forwarded(&self) -> DataMessage {
        assert!(self.ttl > 0, "forwarding a message with ttl 0");
        let mut next = self.clone();
        next.ttl -= 1;
        next
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlKind {
    /// Ids held lazily and available on request.
    LazyAdvert(Vec<MessageId>),
    /// Ids the requester is missing.
    MessageRequest(Vec<MessageId>),
    /// Standalone energy advertisement.
    EnergyBeacon,
    /// Cost-field setup wave: hops from the sink, tagged with a setup round.
    CostAdvert { cost: u32, round: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlMessage {
    pub kind: ControlKind,
    pub sender: NodeId,
    /// Sender's energy percentage, piggybacked on every kind.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Data(DataMessage),
    Control(ControlMessage),
}

impl Message {
    pub fn sender(&self) -> NodeId {
        match self {
            Message::Data(m) => m.sender,
            Message::Control(m) => m.sender,
        }
    }

    pub fn set_sender(&mut self, who: NodeId) {
        match self {
            Message::Data(m) => m.sender = who,
            Message::Control(m) => m.sender = who,
        }
    }

    pub fn sender_energy(&self) -> f64 {
        match self {
            Message::Data(m) => m.sender_energy,
            Message::Control(m) => m.energy,
        }
    }

    pub fn set_sender_energy(&mut self, pct: f64) {
        match self {
            Message::Data(m) => m.sender_energy = pct,
            Message::Control(m) => m.energy = pct,
        }
    }

    pub fn size_bytes(&self) -> u32 {
        match self {
            Message::Data(m) => m.payload_size,
            Message::Control(m) => {
                let ids = match &m.kind {
                    ControlKind::LazyAdvert(ids) | ControlKind::MessageRequest(ids) => {
                        ids.len() as u32
                    }
                    ControlKind::EnergyBeacon | ControlKind::CostAdvert { .. } => 0,
                };
                CONTROL_BASE_BYTES + CONTROL_PER_ID_BYTES * ids
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NeighborInfo {
    /// Last advertised energy percentage; None until first heard from.
    pub energy: Option<f64>,
    pub last_update: SimTime,
}

/// What a node knows about its current radio neighborhood: membership comes
/// from the kernel's neighbor oracle, energies only from overheard traffic.
#[derive(Debug, Clone, Default)]
pub struct NeighborView {
    entries: BTreeMap<NodeId, NeighborInfo>,
}

impl NeighborView {
    /// Reconciles membership against the in-range set. New neighbors start
    /// with unknown energy; departed neighbors are dropped.
    pub fn sync_members(&mut self, in_range: &[NodeId]) {
        self.entries.retain(|id, _| in_range.contains(id));
        for &id in in_range {
            self.entries.entry(id).or_default();
        }
    }

    /// Records an overheard energy advertisement. Ignored for nodes outside
    /// the current membership.
    pub fn record(&mut self, from: NodeId, energy_pct: f64, now: SimTime) {
        if let Some(info) = self.entries.get_mut(&from) {
            info.energy = Some(energy_pct.clamp(0.0, 100.0));
            info.last_update = now;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.keys().copied()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.entries.contains_key(&id)
    }

    /// Energies of neighbors that have advertised at least once.
    pub fn known_energies(&self) -> Vec<f64> {
        self.entries.values().filter_map(|i| i.energy).collect()
    }

    /// Mean advertised energy, or None if no neighbor has advertised yet.
    pub fn mean_known_energy(&self) -> Option<f64> {
        let known = self.known_energies();
        if known.is_empty() {
            None
        } else {
            Some(known.iter().sum::<f64>() / known.len() as f64)
        }
    }
}

/// Timer identity understood by protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerTag {
    /// Pending eager forward for one message.
    EagerFire(MessageId),
    /// Per-node advertising cycle.
    LazyCycle,
    /// Periodic cost-field re-flood.
    CostResetup,
}

/// The only side effects a protocol may request; the kernel executes them.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolAction {
    Broadcast(Message),
    Unicast(NodeId, Message),
    ScheduleTimer { delay_s: f64, tag: TimerTag },
    Deliver(MessageId),
}

/// Per-event context handed to protocol hooks.
pub struct ProtocolCtx<'a> {
    pub node: NodeId,
    pub sink: NodeId,
    pub now: SimTime,
    /// Local residual energy percentage at event time.
    pub energy_pct: f64,
    pub view: &'a NeighborView,
    pub rng: &'a mut ChaCha8Rng,
}

/// Uniform hook set every routing protocol implements. Hooks are pure state
/// transitions: all I/O happens through the returned actions.
pub trait RoutingProtocol: Send {
    /// Called once at t=0, before any traffic.
    fn on_start(&mut self, _ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        Vec::new()
    }

    /// This node sensed a fresh datum and must disseminate it.
    fn on_originate(&mut self, msg: DataMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction>;

    fn on_data(&mut self, msg: DataMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction>;

    fn on_control(&mut self, msg: ControlMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction>;

    fn on_timer(&mut self, tag: TimerTag, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction>;

    /// Downcast hook so harnesses can inspect final protocol state.
    fn as_any(&self) -> &dyn std::any::Any;
}
