//! Energy-aware gossip.
//!
//! Each data message is handled in one of two modes, decided per message
//! against the node's current energy standing: eager (forward after a delay
//! inversely proportional to relative energy) or lazy (hold, and if no
//! duplicate proves the message is flowing, advertise its id and serve
//! recovery requests). A missing payload is requested from one advertiser at
//! a time, with a retry window in case the answer never arrives. Energy
//! percentages piggyback on every transmission; a standalone beacon goes out
//! when the level drifted by lambda without any transmission advertising it.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    ControlKind, ControlMessage, DataMessage, Message, MessageId, NeighborView, ProtocolAction,
    ProtocolCtx, RoutingProtocol, TimerTag,
};
use crate::protocols::data_sends;
use crate::time::SimTime;

#[derive(Debug, Clone)]
pub struct EagpConfig {
    /// Maximum eager delay and the lazy advertising cycle period.
    pub dt_max_s: f64,
    /// Retention of advertised messages awaiting recovery requests.
    pub t_rec_s: f64,
    /// Energy-change percentage that forces a standalone beacon.
    pub lambda_pct: f64,
    /// Eager forwarding fan; None broadcasts to all neighbors.
    pub fanout: Option<usize>,
}

impl Default for EagpConfig {
    fn default() -> Self {
        EagpConfig { dt_max_s: 10.0, t_rec_s: 20.0, lambda_pct: 10.0, fanout: None }
    }
}

impl EagpConfig {
    pub fn validate(&self) {
        assert!(self.dt_max_s > 0.0, "dt_max must be positive");
        assert!(self.t_rec_s >= self.dt_max_s, "t_rec must be at least dt_max");
        assert!(
            self.lambda_pct > 0.0 && self.lambda_pct <= 100.0,
            "lambda must be in (0, 100]"
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Eager,
    Lazy,
}

/// Mode rule: defer (lazy) iff the local level is below the mean of the
/// neighbors' advertised levels. With nothing advertised yet there is no
/// basis for deferring, so the node stays eager.
pub fn decide_mode(eps_local: f64, view: &NeighborView) -> ForwardMode {
    match view.mean_known_energy() {
        Some(mean) if eps_local < mean => ForwardMode::Lazy,
        _ => ForwardMode::Eager,
    }
}

/// Eager holdoff: min-max normalization of the local level over the known
/// neighbor levels plus the node's own, scaled to dt_max. The highest level
/// in the set fires immediately; a degenerate spread fires immediately.
pub fn eager_delay_s(eps_local: f64, view: &NeighborView, dt_max_s: f64) -> f64 {
    let mut lo = eps_local;
    let mut hi = eps_local;
    for e in view.known_energies() {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    if hi <= lo {
        return 0.0;
    }
    (dt_max_s * (hi - eps_local) / (hi - lo)).clamp(0.0, dt_max_s)
}

#[derive(Debug, Clone)]
struct Held {
    msg: DataMessage,
    since: SimTime,
}

pub struct EagpNode {
    cfg: EagpConfig,
    seen: BTreeSet<MessageId>,
    /// Eager-scheduled messages awaiting their fire timer.
    pending: BTreeMap<MessageId, Held>,
    /// Lazily held messages, keyed by enqueue time.
    lazy: BTreeMap<MessageId, Held>,
    /// Announced messages retained for recovery until t_rec.
    advertised: BTreeMap<MessageId, Held>,
    /// Outstanding recovery requests. An id is requested from one advertiser
    /// at a time; only if the payload never arrives within a cycle may a
    /// later advert trigger a retry. Without this, several holders answering
    /// the same cycle would bombard the requester with near-simultaneous
    /// copies, and those duplicates would discard the fresh lazy holding.
    requested: BTreeMap<MessageId, SimTime>,
    last_advertised_energy: Option<f64>,
}

impl EagpNode {
    pub fn new(cfg: EagpConfig) -> Self {
        cfg.validate();
        EagpNode {
            cfg,
            seen: BTreeSet::new(),
            pending: BTreeMap::new(),
            lazy: BTreeMap::new(),
            advertised: BTreeMap::new(),
            requested: BTreeMap::new(),
            last_advertised_energy: None,
        }
    }

    /// Piggyback bookkeeping applied to every hook's outgoing actions: any
    /// transmission advertises the current level implicitly; otherwise a
    /// drift of lambda or more since the last advertisement emits a beacon.
    fn finish(&mut self, mut actions: Vec<ProtocolAction>, ctx: &ProtocolCtx) -> Vec<ProtocolAction> {
        let transmitted = actions
            .iter()
            .any(|a| matches!(a, ProtocolAction::Broadcast(_) | ProtocolAction::Unicast(..)));
        if transmitted {
            self.last_advertised_energy = Some(ctx.energy_pct);
            return actions;
        }
        if let Some(last) = self.last_advertised_energy {
            if (ctx.energy_pct - last).abs() >= self.cfg.lambda_pct {
                actions.push(ProtocolAction::Broadcast(Message::Control(ControlMessage {
                    kind: ControlKind::EnergyBeacon,
                    sender: ctx.node,
                    energy: ctx.energy_pct,
                })));
                self.last_advertised_energy = Some(ctx.energy_pct);
            }
        }
        actions
    }

    fn enqueue(&mut self, msg: DataMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        if msg.ttl == 0 {
            return Vec::new();
        }
        match decide_mode(ctx.energy_pct, ctx.view) {
            ForwardMode::Eager => {
                let delay_s = eager_delay_s(ctx.energy_pct, ctx.view, self.cfg.dt_max_s);
                let id = msg.id;
                self.pending.insert(id, Held { msg, since: ctx.now });
                vec![ProtocolAction::ScheduleTimer { delay_s, tag: TimerTag::EagerFire(id) }]
            }
            ForwardMode::Lazy => {
                self.lazy.insert(msg.id, Held { msg, since: ctx.now });
                Vec::new()
            }
        }
    }

    fn on_duplicate(&mut self, msg: &DataMessage, now: SimTime) {
        if let Some(held) = self.pending.get(&msg.id) {
            if held.msg.sender != msg.sender {
                let held = self.pending.remove(&msg.id).unwrap();
                self.lazy.insert(msg.id, Held { msg: held.msg, since: now });
            }
        } else if let Some(held) = self.lazy.get(&msg.id) {
            if held.msg.sender != msg.sender {
                self.lazy.remove(&msg.id);
            }
        }
    }

    fn advertising_cycle(&mut self, ctx: &ProtocolCtx) -> Vec<ProtocolAction> {
        let expired: Vec<MessageId> = self
            .lazy
            .iter()
            .filter(|(_, held)| ctx.now.diff_secs(held.since) >= self.cfg.dt_max_s)
            .map(|(&id, _)| id)
            .collect();
        for id in &expired {
            let mut held = self.lazy.remove(id).unwrap();
            held.since = ctx.now;
            self.advertised.insert(*id, held);
        }
        let t_rec = self.cfg.t_rec_s;
        self.advertised.retain(|_, held| ctx.now.diff_secs(held.since) < t_rec);
        self.requested.retain(|_, &mut at| ctx.now.diff_secs(at) < t_rec);

        let ids: Vec<MessageId> = self.advertised.keys().copied().collect();
        let mut actions = Vec::new();
        if !ids.is_empty() {
            actions.push(ProtocolAction::Broadcast(Message::Control(ControlMessage {
                kind: ControlKind::LazyAdvert(ids),
                sender: ctx.node,
                energy: ctx.energy_pct,
            })));
        }
        actions.push(ProtocolAction::ScheduleTimer {
            delay_s: self.cfg.dt_max_s,
            tag: TimerTag::LazyCycle,
        });
        actions
    }
}

impl RoutingProtocol for EagpNode {
    fn on_start(&mut self, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        let actions = vec![
            ProtocolAction::Broadcast(Message::Control(ControlMessage {
                kind: ControlKind::EnergyBeacon,
                sender: ctx.node,
                energy: ctx.energy_pct,
            })),
            // Per-node phase staggers the cycles without extra randomness.
            ProtocolAction::ScheduleTimer {
                delay_s: ctx.node.0 as f64 * 1e-3,
                tag: TimerTag::LazyCycle,
            },
        ];
        self.finish(actions, ctx)
    }

    fn on_originate(&mut self, msg: DataMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        self.seen.insert(msg.id);
        let actions = self.enqueue(msg, ctx);
        self.finish(actions, ctx)
    }

    fn on_data(&mut self, msg: DataMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        let actions = if self.seen.insert(msg.id) {
            self.requested.remove(&msg.id);
            let mut actions = vec![ProtocolAction::Deliver(msg.id)];
            actions.extend(self.enqueue(msg, ctx));
            actions
        } else {
            self.on_duplicate(&msg, ctx.now);
            Vec::new()
        };
        self.finish(actions, ctx)
    }

    fn on_control(&mut self, msg: ControlMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        let actions = match &msg.kind {
            ControlKind::LazyAdvert(ids) => {
                let retry_after = self.cfg.dt_max_s;
                let missing: Vec<MessageId> = ids
                    .iter()
                    .copied()
                    .filter(|id| !self.seen.contains(id))
                    .filter(|id| match self.requested.get(id) {
                        Some(&at) => ctx.now.diff_secs(at) >= retry_after,
                        None => true,
                    })
                    .collect();
                if missing.is_empty() {
                    Vec::new()
                } else {
                    for id in &missing {
                        self.requested.insert(*id, ctx.now);
                    }
                    vec![ProtocolAction::Unicast(
                        msg.sender,
                        Message::Control(ControlMessage {
                            kind: ControlKind::MessageRequest(missing),
                            sender: ctx.node,
                            energy: ctx.energy_pct,
                        }),
                    )]
                }
            }
            ControlKind::MessageRequest(ids) => ids
                .iter()
                .filter_map(|id| self.lazy.get(id).or_else(|| self.advertised.get(id)))
                .filter(|held| held.msg.ttl > 0)
                .map(|held| {
                    ProtocolAction::Unicast(msg.sender, Message::Data(held.msg.forwarded()))
                })
                .collect(),
            ControlKind::EnergyBeacon => Vec::new(),
            ControlKind::CostAdvert { .. } => {
                panic!("cost adverts do not belong to this protocol")
            }
        };
        self.finish(actions, ctx)
    }

    fn on_timer(&mut self, tag: TimerTag, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        let actions = match tag {
            TimerTag::EagerFire(id) => match self.pending.remove(&id) {
                Some(held) => data_sends(self.cfg.fanout, &held.msg.forwarded(), held.msg.sender, ctx),
                // Demoted to lazy (or discarded) while the timer was armed.
                None => Vec::new(),
            },
            TimerTag::LazyCycle => self.advertising_cycle(ctx),
            TimerTag::CostResetup => panic!("resetup timer does not belong to this protocol"),
        };
        self.finish(actions, ctx)
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeId;
    use crate::rng::{stream, StreamPurpose};
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn view_with(energies: &[(u16, f64)]) -> NeighborView {
        let members: Vec<NodeId> = energies.iter().map(|&(m, _)| NodeId(m)).collect();
        let mut view = NeighborView::default();
        view.sync_members(&members);
        for &(m, e) in energies {
            view.record(NodeId(m), e, SimTime::ZERO);
        }
        view
    }

    struct Env {
        view: NeighborView,
        rng: ChaCha8Rng,
        now: SimTime,
        energy_pct: f64,
    }

    impl Env {
        fn new(energies: &[(u16, f64)], energy_pct: f64) -> Env {
            Env {
                view: view_with(energies),
                rng: stream(0, StreamPurpose::Fanout, NodeId(7)),
                now: SimTime::ZERO,
                energy_pct,
            }
        }

        fn ctx(&mut self) -> ProtocolCtx<'_> {
            ProtocolCtx {
                node: NodeId(7),
                sink: NodeId(0),
                now: self.now,
                energy_pct: self.energy_pct,
                view: &self.view,
                rng: &mut self.rng,
            }
        }
    }

    fn data(origin: u16, seq: u32, sender: u16, ttl: u16) -> DataMessage {
        let mut m = DataMessage::new(
            MessageId { origin: NodeId(origin), seq },
            NodeId(origin),
            ttl,
            80.0,
            SimTime::ZERO,
        );
        m.sender = NodeId(sender);
        m
    }

    fn count_broadcasts(actions: &[ProtocolAction]) -> usize {
        actions.iter().filter(|a| matches!(a, ProtocolAction::Broadcast(_))).count()
    }

    #[test]
    fn mode_examples() {
        assert_eq!(decide_mode(40.0, &view_with(&[(1, 50.0), (2, 70.0)])), ForwardMode::Lazy);
        assert_eq!(decide_mode(60.0, &view_with(&[(1, 50.0), (2, 70.0)])), ForwardMode::Eager);
        assert_eq!(decide_mode(100.0, &view_with(&[(1, 10.0), (2, 20.0)])), ForwardMode::Eager);
        assert_eq!(decide_mode(1.0, &view_with(&[])), ForwardMode::Eager);
    }

    #[test]
    fn delay_hand_case() {
        let d = eager_delay_s(80.0, &view_with(&[(1, 60.0), (2, 90.0)]), 10.0);
        assert!((d - 10.0 / 3.0).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn delay_endpoints() {
        let view = view_with(&[(1, 60.0), (2, 90.0)]);
        assert_eq!(eager_delay_s(95.0, &view, 10.0), 0.0);
        assert_eq!(eager_delay_s(60.0, &view, 10.0), 10.0);
        assert_eq!(eager_delay_s(50.0, &view, 10.0), 10.0);
    }

    #[test]
    fn delay_degenerate_spread_fires_immediately() {
        assert_eq!(eager_delay_s(70.0, &view_with(&[(1, 70.0), (2, 70.0)]), 10.0), 0.0);
        assert_eq!(eager_delay_s(70.0, &view_with(&[]), 10.0), 0.0);
    }

    #[test]
    fn eager_sighting_schedules_fire() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 80.0);
        let actions = node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        let id = MessageId { origin: NodeId(1), seq: 0 };
        assert_eq!(actions[0], ProtocolAction::Deliver(id));
        match actions[1] {
            ProtocolAction::ScheduleTimer { delay_s, tag: TimerTag::EagerFire(got) } => {
                assert_eq!(got, id);
                assert!((delay_s - 10.0 / 3.0).abs() < 1e-9);
            }
            ref other => panic!("expected eager timer, got {other:?}"),
        }
        assert!(node.pending.contains_key(&id));

        let fire = node.on_timer(TimerTag::EagerFire(id), &mut env.ctx());
        assert_eq!(count_broadcasts(&fire), 1);
        match &fire[0] {
            ProtocolAction::Broadcast(Message::Data(m)) => assert_eq!(m.ttl, 19),
            other => panic!("expected data broadcast, got {other:?}"),
        }
        assert!(node.pending.is_empty());
    }

    #[test]
    fn lazy_sighting_holds_quietly() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 40.0);
        let actions = node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        let id = MessageId { origin: NodeId(1), seq: 0 };
        assert_eq!(actions, vec![ProtocolAction::Deliver(id)]);
        assert!(node.lazy.contains_key(&id));
    }

    #[test]
    fn duplicate_from_other_sender_demotes_pending() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 80.0);
        let id = MessageId { origin: NodeId(1), seq: 0 };
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        assert!(node.pending.contains_key(&id));

        env.now = SimTime::from_secs_f64(1.0);
        let dup = node.on_data(data(1, 0, 2, 19), &mut env.ctx());
        assert!(dup.is_empty());
        assert!(!node.pending.contains_key(&id));
        assert!(node.lazy.contains_key(&id));
        assert_eq!(node.lazy[&id].since, env.now, "demotion restarts the lazy clock");

        let fire = node.on_timer(TimerTag::EagerFire(id), &mut env.ctx());
        assert_eq!(count_broadcasts(&fire), 0, "neutralized timer must not forward");
    }

    #[test]
    fn duplicate_from_same_sender_is_ignored() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 80.0);
        let id = MessageId { origin: NodeId(1), seq: 0 };
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        assert!(node.pending.contains_key(&id));
        let fire = node.on_timer(TimerTag::EagerFire(id), &mut env.ctx());
        assert_eq!(count_broadcasts(&fire), 1);
    }

    #[test]
    fn duplicate_discards_lazy_holding() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 40.0);
        let id = MessageId { origin: NodeId(1), seq: 0 };
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        assert!(node.lazy.contains_key(&id));
        node.on_data(data(1, 0, 2, 19), &mut env.ctx());
        assert!(!node.lazy.contains_key(&id));
        assert!(!node.pending.contains_key(&id));
        assert!(node.seen.contains(&id));
    }

    #[test]
    fn exhausted_ttl_is_delivered_but_never_queued() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0)], 80.0);
        let id = MessageId { origin: NodeId(1), seq: 0 };
        let actions = node.on_data(data(1, 0, 1, 0), &mut env.ctx());
        assert_eq!(actions, vec![ProtocolAction::Deliver(id)]);
        assert!(node.pending.is_empty() && node.lazy.is_empty());
    }

    #[test]
    fn cycle_advertises_expired_ids_in_one_message() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 40.0);
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        node.on_data(data(2, 5, 2, 20), &mut env.ctx());

        env.now = SimTime::from_secs_f64(5.0);
        let early = node.on_timer(TimerTag::LazyCycle, &mut env.ctx());
        assert_eq!(count_broadcasts(&early), 0, "nothing aged past dt_max yet");
        assert!(matches!(
            early[0],
            ProtocolAction::ScheduleTimer { tag: TimerTag::LazyCycle, .. }
        ));

        env.now = SimTime::from_secs_f64(10.0);
        let cycle = node.on_timer(TimerTag::LazyCycle, &mut env.ctx());
        assert_eq!(count_broadcasts(&cycle), 1);
        match &cycle[0] {
            ProtocolAction::Broadcast(Message::Control(c)) => match &c.kind {
                ControlKind::LazyAdvert(ids) => assert_eq!(ids.len(), 2),
                other => panic!("expected advert, got {other:?}"),
            },
            other => panic!("expected broadcast, got {other:?}"),
        }
        assert!(node.lazy.is_empty());
        assert_eq!(node.advertised.len(), 2);
    }

    #[test]
    fn advertised_ids_are_retained_then_purged_at_t_rec() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 40.0);
        let id = MessageId { origin: NodeId(1), seq: 0 };
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());

        env.now = SimTime::from_secs_f64(10.0);
        let first = node.on_timer(TimerTag::LazyCycle, &mut env.ctx());
        assert_eq!(count_broadcasts(&first), 1);

        env.now = SimTime::from_secs_f64(20.0);
        let second = node.on_timer(TimerTag::LazyCycle, &mut env.ctx());
        assert_eq!(count_broadcasts(&second), 1, "retained id is re-advertised");
        assert!(node.advertised.contains_key(&id));

        env.now = SimTime::from_secs_f64(30.0);
        let third = node.on_timer(TimerTag::LazyCycle, &mut env.ctx());
        assert_eq!(count_broadcasts(&third), 0, "entry past t_rec is purged");
        assert!(node.advertised.is_empty());
    }

    #[test]
    fn advert_triggers_batched_request_for_unseen_only() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(3, 50.0)], 80.0);
        let known = MessageId { origin: NodeId(1), seq: 0 };
        let unknown_a = MessageId { origin: NodeId(2), seq: 0 };
        let unknown_b = MessageId { origin: NodeId(2), seq: 1 };
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());

        let advert = ControlMessage {
            kind: ControlKind::LazyAdvert(vec![known, unknown_a, unknown_b]),
            sender: NodeId(3),
            energy: 50.0,
        };
        let actions = node.on_control(advert, &mut env.ctx());
        assert_eq!(actions.len(), 1);
        match &actions[0] {
            ProtocolAction::Unicast(to, Message::Control(c)) => {
                assert_eq!(*to, NodeId(3));
                match &c.kind {
                    ControlKind::MessageRequest(ids) => {
                        assert_eq!(ids, &vec![unknown_a, unknown_b]);
                    }
                    other => panic!("expected request, got {other:?}"),
                }
            }
            other => panic!("expected unicast request, got {other:?}"),
        }
    }

    #[test]
    fn advert_of_seen_ids_is_silent() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(3, 50.0)], 80.0);
        let id = MessageId { origin: NodeId(1), seq: 0 };
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        let advert = ControlMessage {
            kind: ControlKind::LazyAdvert(vec![id]),
            sender: NodeId(3),
            energy: 50.0,
        };
        assert!(node.on_control(advert, &mut env.ctx()).is_empty());
    }

    #[test]
    fn concurrent_adverts_yield_a_single_request() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(3, 50.0), (4, 60.0)], 80.0);
        let id = MessageId { origin: NodeId(1), seq: 0 };
        let advert = |from: u16| ControlMessage {
            kind: ControlKind::LazyAdvert(vec![id]),
            sender: NodeId(from),
            energy: 50.0,
        };

        let first = node.on_control(advert(3), &mut env.ctx());
        assert_eq!(first.len(), 1);

        env.now = SimTime::from_secs_f64(0.002);
        let second = node.on_control(advert(4), &mut env.ctx());
        assert!(second.is_empty(), "id already requested from node 3");
    }

    #[test]
    fn unanswered_request_is_retried_after_the_window() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(3, 50.0)], 80.0);
        let id = MessageId { origin: NodeId(1), seq: 0 };
        let advert = ControlMessage {
            kind: ControlKind::LazyAdvert(vec![id]),
            sender: NodeId(3),
            energy: 50.0,
        };

        assert_eq!(node.on_control(advert.clone(), &mut env.ctx()).len(), 1);

        env.now = SimTime::from_secs_f64(10.0);
        let retry = node.on_control(advert, &mut env.ctx());
        assert_eq!(retry.len(), 1, "reply never came, ask again");
    }

    #[test]
    fn request_answered_from_holdings_with_spent_hop() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 40.0);
        let held = MessageId { origin: NodeId(1), seq: 0 };
        let purged = MessageId { origin: NodeId(4), seq: 0 };
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());

        let req = ControlMessage {
            kind: ControlKind::MessageRequest(vec![held, purged]),
            sender: NodeId(2),
            energy: 90.0,
        };
        let actions = node.on_control(req, &mut env.ctx());
        assert_eq!(actions.len(), 1);
        match &actions[0] {
            ProtocolAction::Unicast(to, Message::Data(m)) => {
                assert_eq!(*to, NodeId(2));
                assert_eq!(m.id, held);
                assert_eq!(m.ttl, 19);
            }
            other => panic!("expected payload unicast, got {other:?}"),
        }
    }

    #[test]
    fn beacon_fires_on_lambda_drift_without_tx() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0)], 100.0);
        let start = node.on_start(&mut env.ctx());
        assert_eq!(count_broadcasts(&start), 1);
        assert_eq!(node.last_advertised_energy, Some(100.0));

        // A quiet event (duplicate from the same sender) at 95%: below lambda.
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        node.on_data(data(1, 0, 2, 19), &mut env.ctx());
        env.energy_pct = 95.0;
        let quiet = node.on_data(data(1, 0, 2, 19), &mut env.ctx());
        assert!(quiet.is_empty());

        env.energy_pct = 89.0;
        let drifted = node.on_data(data(1, 0, 2, 19), &mut env.ctx());
        assert_eq!(count_broadcasts(&drifted), 1);
        match &drifted[0] {
            ProtocolAction::Broadcast(Message::Control(c)) => {
                assert!(matches!(c.kind, ControlKind::EnergyBeacon));
                assert_eq!(c.energy, 89.0);
            }
            other => panic!("expected beacon, got {other:?}"),
        }
        assert_eq!(node.last_advertised_energy, Some(89.0));
    }

    #[test]
    fn any_transmission_suppresses_the_beacon() {
        let mut node = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 100.0);
        node.on_start(&mut env.ctx());

        // Drift far past lambda, then handle an event that transmits anyway.
        env.energy_pct = 80.0;
        let id = MessageId { origin: NodeId(1), seq: 0 };
        node.on_data(data(1, 0, 1, 20), &mut env.ctx());
        let fire = node.on_timer(TimerTag::EagerFire(id), &mut env.ctx());
        assert_eq!(count_broadcasts(&fire), 1);
        assert!(
            fire.iter().all(|a| !matches!(
                a,
                ProtocolAction::Broadcast(Message::Control(ControlMessage {
                    kind: ControlKind::EnergyBeacon,
                    ..
                }))
            )),
            "piggyback replaces the standalone beacon"
        );
        assert_eq!(node.last_advertised_energy, Some(80.0));
    }

    #[test]
    fn origination_follows_mode_decision() {
        let mut eager = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0)], 80.0);
        let actions = eager.on_originate(data(7, 0, 7, 20), &mut env.ctx());
        assert!(actions
            .iter()
            .any(|a| matches!(a, ProtocolAction::ScheduleTimer { tag: TimerTag::EagerFire(_), .. })));
        assert!(actions.iter().all(|a| !matches!(a, ProtocolAction::Deliver(_))));

        let mut lazy = EagpNode::new(EagpConfig::default());
        let mut env = Env::new(&[(1, 60.0)], 30.0);
        let actions = lazy.on_originate(data(7, 1, 7, 20), &mut env.ctx());
        assert!(actions.is_empty());
        assert!(lazy.lazy.contains_key(&MessageId { origin: NodeId(7), seq: 1 }));
    }

    proptest! {
        #[test]
        fn delay_always_within_bounds(
            eps in 0.0f64..=100.0,
            energies in proptest::collection::vec((0u16..50, 0.0f64..=100.0), 0..8),
            dt_max in 0.1f64..600.0,
        ) {
            let view = view_with(&energies);
            let d = eager_delay_s(eps, &view, dt_max);
            prop_assert!(d >= 0.0 && d <= dt_max);
        }

        #[test]
        fn mode_matches_mean_oracle(
            eps in 0.0f64..=100.0,
            energies in proptest::collection::vec((0u16..50, 0.0f64..=100.0), 1..8),
        ) {
            let view = view_with(&energies);
            let known = view.known_energies();
            prop_assume!(!known.is_empty());
            let mean = known.iter().sum::<f64>() / known.len() as f64;
            let expected = if eps < mean { ForwardMode::Lazy } else { ForwardMode::Eager };
            prop_assert_eq!(decide_mode(eps, &view), expected);
        }

        #[test]
        fn queues_stay_mutually_exclusive(ops in proptest::collection::vec((0u8..4, 0u16..4, 0u32..3, 0u16..4), 1..60)) {
            let mut node = EagpNode::new(EagpConfig::default());
            let mut env = Env::new(&[(1, 60.0), (2, 90.0)], 75.0);
            let mut clock = 0.0;
            for (op, origin, seq, sender) in ops {
                clock += 1.0;
                env.now = SimTime::from_secs_f64(clock);
                let id = MessageId { origin: NodeId(origin), seq };
                match op {
                    0 => { node.on_data(data(origin, seq, sender, 20), &mut env.ctx()); }
                    1 => { node.on_timer(TimerTag::EagerFire(id), &mut env.ctx()); }
                    2 => { node.on_timer(TimerTag::LazyCycle, &mut env.ctx()); }
                    _ => {
                        let req = ControlMessage {
                            kind: ControlKind::MessageRequest(vec![id]),
                            sender: NodeId(sender),
                            energy: 50.0,
                        };
                        node.on_control(req, &mut env.ctx());
                    }
                }
                for id in node.pending.keys() {
                    prop_assert!(!node.lazy.contains_key(id));
                    prop_assert!(!node.advertised.contains_key(id));
                    prop_assert!(node.seen.contains(id));
                }
                for id in node.lazy.keys() {
                    prop_assert!(!node.advertised.contains_key(id));
                    prop_assert!(node.seen.contains(id));
                }
                for id in node.advertised.keys() {
                    prop_assert!(node.seen.contains(id));
                }
            }
        }
    }
}
