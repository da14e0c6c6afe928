//! Minimum-cost forwarding toward a single sink.
//!
//! Setup: the sink floods a cost advertisement; every node keeps the lowest
//! hop count it hears plus one, rebroadcasting each improvement, so the field
//! converges to BFS distance from the sink. The advertiser of the winning
//! cost becomes the next hop. Data then travels as unicasts down the cost
//! gradient, one transmission per hop, and only the sink consumes it.
//! An optional resetup timer re-floods the field under a fresh round number;
//! nodes abandon stale-round state the moment a newer round reaches them.

use std::collections::BTreeSet;

use crate::model::{
    ControlKind, ControlMessage, DataMessage, Message, MessageId, NodeId, ProtocolAction,
    ProtocolCtx, RoutingProtocol, TimerTag,
};

pub struct McfaNode {
    is_sink: bool,
    cost: Option<u32>,
    next_hop: Option<NodeId>,
    round: u32,
    seen: BTreeSet<MessageId>,
    resetup_s: Option<f64>,
}

impl McfaNode {
    pub fn new(is_sink: bool, resetup_s: Option<f64>) -> Self {
        if let Some(period) = resetup_s {
            assert!(period > 0.0, "resetup period must be positive");
        }
        McfaNode {
            is_sink,
            cost: if is_sink { Some(0) } else { None },
            next_hop: None,
            round: 0,
            seen: BTreeSet::new(),
            resetup_s,
        }
    }

    pub fn cost(&self) -> Option<u32> {
        if self.is_sink {
            Some(0)
        } else {
            self.cost
        }
    }

    pub fn next_hop(&self) -> Option<NodeId> {
        self.next_hop
    }

    fn advert(&self, ctx: &ProtocolCtx, cost: u32) -> ProtocolAction {
        ProtocolAction::Broadcast(Message::Control(ControlMessage {
            kind: ControlKind::CostAdvert { cost, round: self.round },
            sender: ctx.node,
            energy: ctx.energy_pct,
        }))
    }

    fn toward_sink(&self, msg: &DataMessage) -> Vec<ProtocolAction> {
        match (self.cost, self.next_hop) {
            (Some(cost), Some(hop)) if msg.ttl > 0 => {
                let mut next = msg.forwarded();
                next.route_cost = Some(cost);
                vec![ProtocolAction::Unicast(hop, Message::Data(next))]
            }
            // No route yet (or route lost to a resetup): the datum is dropped.
            _ => Vec::new(),
        }
    }
}

impl RoutingProtocol for McfaNode {
    fn on_start(&mut self, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        if !self.is_sink {
            return Vec::new();
        }
        let mut actions = vec![self.advert(ctx, 0)];
        if let Some(period) = self.resetup_s {
            actions.push(ProtocolAction::ScheduleTimer {
                delay_s: period,
                tag: TimerTag::CostResetup,
            });
        }
        actions
    }

    fn on_originate(&mut self, msg: DataMessage, _ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        self.seen.insert(msg.id);
        if self.is_sink {
            // Data born at the destination has nowhere to go.
            return Vec::new();
        }
        self.toward_sink(&msg)
    }

    fn on_data(&mut self, msg: DataMessage, _ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        if !self.seen.insert(msg.id) {
            return Vec::new();
        }
        if self.is_sink {
            return vec![ProtocolAction::Deliver(msg.id)];
        }
        self.toward_sink(&msg)
    }

    fn on_control(&mut self, msg: ControlMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        let ControlKind::CostAdvert { cost, round } = msg.kind else {
            panic!("unexpected control message for cost-field routing: {:?}", msg.kind);
        };
        if self.is_sink {
            return Vec::new();
        }
        if round > self.round {
            self.round = round;
            self.cost = None;
            self.next_hop = None;
        } else if round < self.round {
            return Vec::new();
        }
        let candidate = cost + 1;
        if self.cost.is_none_or(|mine| candidate < mine) {
            self.cost = Some(candidate);
            self.next_hop = Some(msg.sender);
            vec![self.advert(ctx, candidate)]
        } else {
            Vec::new()
        }
    }

    fn on_timer(&mut self, tag: TimerTag, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        assert_eq!(tag, TimerTag::CostResetup, "unexpected timer {tag:?}");
        assert!(self.is_sink, "only the sink re-floods the cost field");
        self.round += 1;
        vec![
            self.advert(ctx, 0),
            ProtocolAction::ScheduleTimer {
                delay_s: self.resetup_s.expect("resetup timer without a period"),
                tag: TimerTag::CostResetup,
            },
        ]
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NeighborView;
    use crate::rng::{stream, StreamPurpose};
    use crate::time::SimTime;
    use rand_chacha::ChaCha8Rng;

    struct Env {
        view: NeighborView,
        rng: ChaCha8Rng,
    }

    impl Env {
        fn new() -> Env {
            Env { view: NeighborView::default(), rng: stream(0, StreamPurpose::Fanout, NodeId(1)) }
        }

        fn ctx(&mut self, node: u16) -> ProtocolCtx<'_> {
            ProtocolCtx {
                node: NodeId(node),
                sink: NodeId(0),
                now: SimTime::ZERO,
                energy_pct: 90.0,
                view: &self.view,
                rng: &mut self.rng,
            }
        }
    }

    fn cost_advert(from: u16, cost: u32, round: u32) -> ControlMessage {
        ControlMessage {
            kind: ControlKind::CostAdvert { cost, round },
            sender: NodeId(from),
            energy: 90.0,
        }
    }

    fn advertised_cost(actions: &[ProtocolAction]) -> Option<u32> {
        actions.iter().find_map(|a| match a {
            ProtocolAction::Broadcast(Message::Control(ControlMessage {
                kind: ControlKind::CostAdvert { cost, .. },
                ..
            })) => Some(*cost),
            _ => None,
        })
    }

    fn data(origin: u16, seq: u32, ttl: u16) -> DataMessage {
        DataMessage::new(
            MessageId { origin: NodeId(origin), seq },
            NodeId(origin),
            ttl,
            90.0,
            SimTime::ZERO,
        )
    }

    #[test]
    fn chain_converges_to_hop_counts() {
        let mut env = Env::new();
        let mut nodes: Vec<McfaNode> =
            (0..4).map(|i| McfaNode::new(i == 0, None)).collect();

        let start = nodes[0].on_start(&mut env.ctx(0));
        assert_eq!(advertised_cost(&start), Some(0));

        // Relay the advert down the chain 0-1-2-3 by hand.
        let a1 = nodes[1].on_control(cost_advert(0, 0, 0), &mut env.ctx(1));
        assert_eq!(advertised_cost(&a1), Some(1));
        let a2 = nodes[2].on_control(cost_advert(1, 1, 0), &mut env.ctx(2));
        assert_eq!(advertised_cost(&a2), Some(2));
        let a3 = nodes[3].on_control(cost_advert(2, 2, 0), &mut env.ctx(3));
        assert_eq!(advertised_cost(&a3), Some(3));

        assert_eq!(nodes.iter().map(|n| n.cost().unwrap()).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(nodes[3].next_hop(), Some(NodeId(2)));
    }

    #[test]
    fn worse_cost_is_ignored_better_cost_wins() {
        let mut env = Env::new();
        let mut node = McfaNode::new(false, None);
        assert_eq!(advertised_cost(&node.on_control(cost_advert(5, 4, 0), &mut env.ctx(1))), Some(5));
        assert!(node.on_control(cost_advert(6, 4, 0), &mut env.ctx(1)).is_empty());
        assert!(node.on_control(cost_advert(7, 9, 0), &mut env.ctx(1)).is_empty());
        assert_eq!(advertised_cost(&node.on_control(cost_advert(8, 1, 0), &mut env.ctx(1))), Some(2));
        assert_eq!(node.cost(), Some(2));
        assert_eq!(node.next_hop(), Some(NodeId(8)));
    }

    #[test]
    fn newer_round_resets_even_to_a_worse_cost() {
        let mut env = Env::new();
        let mut node = McfaNode::new(false, None);
        node.on_control(cost_advert(2, 1, 0), &mut env.ctx(1));
        assert_eq!(node.cost(), Some(2));

        let actions = node.on_control(cost_advert(9, 6, 1), &mut env.ctx(1));
        assert_eq!(advertised_cost(&actions), Some(7));
        assert_eq!(node.cost(), Some(7));
        assert_eq!(node.next_hop(), Some(NodeId(9)));

        assert!(node.on_control(cost_advert(2, 1, 0), &mut env.ctx(1)).is_empty(), "stale round");
        assert_eq!(node.cost(), Some(7));
    }

    #[test]
    fn origin_stamps_its_cost_and_unicasts_downhill() {
        let mut env = Env::new();
        let mut node = McfaNode::new(false, None);
        node.on_control(cost_advert(4, 2, 0), &mut env.ctx(1));

        let actions = node.on_originate(data(1, 0, 20), &mut env.ctx(1));
        assert_eq!(actions.len(), 1);
        match &actions[0] {
            ProtocolAction::Unicast(to, Message::Data(m)) => {
                assert_eq!(*to, NodeId(4));
                assert_eq!(m.route_cost, Some(3));
                assert_eq!(m.ttl, 19);
            }
            other => panic!("expected downhill unicast, got {other:?}"),
        }
    }

    #[test]
    fn unrouted_node_drops_its_own_data() {
        let mut env = Env::new();
        let mut node = McfaNode::new(false, None);
        assert!(node.on_originate(data(1, 0, 20), &mut env.ctx(1)).is_empty());
    }

    #[test]
    fn sink_origin_needs_no_transmission() {
        let mut env = Env::new();
        let mut sink = McfaNode::new(true, None);
        assert!(sink.on_originate(data(0, 0, 20), &mut env.ctx(0)).is_empty());
    }

    #[test]
    fn relay_forwards_once_and_only_sink_delivers() {
        let mut env = Env::new();
        let mut relay = McfaNode::new(false, None);
        relay.on_control(cost_advert(0, 0, 0), &mut env.ctx(1));

        let actions = relay.on_data(data(5, 0, 19), &mut env.ctx(1));
        assert_eq!(actions.len(), 1);
        assert!(matches!(&actions[0], ProtocolAction::Unicast(to, Message::Data(m))
            if *to == NodeId(0) && m.route_cost == Some(1)));
        assert!(
            !actions.iter().any(|a| matches!(a, ProtocolAction::Deliver(_))),
            "relays route without consuming"
        );
        assert!(relay.on_data(data(5, 0, 19), &mut env.ctx(1)).is_empty(), "duplicate dropped");

        let mut sink = McfaNode::new(true, None);
        let at_sink = sink.on_data(data(5, 0, 18), &mut env.ctx(0));
        assert_eq!(at_sink, vec![ProtocolAction::Deliver(MessageId { origin: NodeId(5), seq: 0 })]);
    }

    #[test]
    fn resetup_bumps_round_and_refloods() {
        let mut env = Env::new();
        let mut sink = McfaNode::new(true, Some(60.0));
        let start = sink.on_start(&mut env.ctx(0));
        assert_eq!(advertised_cost(&start), Some(0));
        assert!(start
            .iter()
            .any(|a| matches!(a, ProtocolAction::ScheduleTimer { tag: TimerTag::CostResetup, .. })));

        let actions = sink.on_timer(TimerTag::CostResetup, &mut env.ctx(0));
        match &actions[0] {
            ProtocolAction::Broadcast(Message::Control(ControlMessage {
                kind: ControlKind::CostAdvert { cost, round },
                ..
            })) => {
                assert_eq!(*cost, 0);
                assert_eq!(*round, 1);
            }
            other => panic!("expected re-flood, got {other:?}"),
        }
        assert!(actions
            .iter()
            .any(|a| matches!(a, ProtocolAction::ScheduleTimer { tag: TimerTag::CostResetup, .. })));
    }

    #[test]
    fn quiet_node_never_advertises_first() {
        let mut env = Env::new();
        let mut node = McfaNode::new(false, Some(60.0));
        assert!(node.on_start(&mut env.ctx(1)).is_empty());
        assert_eq!(node.cost(), None);
    }
}
