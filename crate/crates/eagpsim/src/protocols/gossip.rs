//! Plain gossip: forward every unseen data message immediately, either as one
//! broadcast (flood) or as `fanout` unicasts to randomly drawn neighbors.

use std::collections::BTreeSet;

use crate::model::{
    ControlMessage, DataMessage, MessageId, ProtocolAction, ProtocolCtx, RoutingProtocol, TimerTag,
};
use crate::protocols::data_sends;

pub struct GossipNode {
    seen: BTreeSet<MessageId>,
    fanout: Option<usize>,
}

impl GossipNode {
    pub fn flood() -> Self {
        GossipNode { seen: BTreeSet::new(), fanout: None }
    }

    pub fn fanout(k: usize) -> Self {
        assert!(k >= 1, "fanout must be at least 1");
        GossipNode { seen: BTreeSet::new(), fanout: Some(k) }
    }

    fn spread(&self, msg: &DataMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        if msg.ttl == 0 {
            return Vec::new();
        }
        data_sends(self.fanout, &msg.forwarded(), msg.sender, ctx)
    }
}

impl RoutingProtocol for GossipNode {
    fn on_originate(&mut self, msg: DataMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        self.seen.insert(msg.id);
        self.spread(&msg, ctx)
    }

    fn on_data(&mut self, msg: DataMessage, ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        if !self.seen.insert(msg.id) {
            return Vec::new();
        }
        let mut actions = vec![ProtocolAction::Deliver(msg.id)];
        actions.extend(self.spread(&msg, ctx));
        actions
    }

    fn on_control(&mut self, _msg: ControlMessage, _ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        Vec::new()
    }

    fn on_timer(&mut self, tag: TimerTag, _ctx: &mut ProtocolCtx) -> Vec<ProtocolAction> {
        panic!("gossip schedules no timers, got {tag:?}");
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Message, NeighborView, NodeId};
    use crate::rng::{stream, StreamPurpose};
    use crate::time::SimTime;

    fn view_of(members: &[u16]) -> NeighborView {
        let mut view = NeighborView::default();
        let ids: Vec<NodeId> = members.iter().map(|&m| NodeId(m)).collect();
        view.sync_members(&ids);
        view
    }

    fn msg(origin: u16, seq: u32, sender: u16, ttl: u16) -> DataMessage {
        let mut m = DataMessage::new(
            MessageId { origin: NodeId(origin), seq },
            NodeId(origin),
            ttl,
            100.0,
            SimTime::ZERO,
        );
        m.sender = NodeId(sender);
        m
    }

    fn ctx<'a>(view: &'a NeighborView, rng: &'a mut rand_chacha::ChaCha8Rng) -> ProtocolCtx<'a> {
        ProtocolCtx {
            node: NodeId(9),
            sink: NodeId(0),
            now: SimTime::ZERO,
            energy_pct: 100.0,
            view,
            rng,
        }
    }

    #[test]
    fn flood_broadcasts_first_sighting_once() {
        let mut node = GossipNode::flood();
        let view = view_of(&[1, 2, 3, 4]);
        let mut rng = stream(0, StreamPurpose::Fanout, NodeId(9));
        let mut c = ctx(&view, &mut rng);

        let actions = node.on_data(msg(1, 0, 1, 20), &mut c);
        assert_eq!(actions.len(), 2);
        assert_eq!(actions[0], ProtocolAction::Deliver(MessageId { origin: NodeId(1), seq: 0 }));
        match &actions[1] {
            ProtocolAction::Broadcast(Message::Data(m)) => assert_eq!(m.ttl, 19),
            other => panic!("expected broadcast, got {other:?}"),
        }

        let dup = node.on_data(msg(1, 0, 2, 20), &mut c);
        assert!(dup.is_empty());
    }

    #[test]
    fn ttl_zero_delivers_without_forwarding() {
        let mut node = GossipNode::flood();
        let view = view_of(&[1]);
        let mut rng = stream(0, StreamPurpose::Fanout, NodeId(9));
        let mut c = ctx(&view, &mut rng);
        let actions = node.on_data(msg(1, 0, 1, 0), &mut c);
        assert_eq!(actions, vec![ProtocolAction::Deliver(MessageId { origin: NodeId(1), seq: 0 })]);
    }

    #[test]
    fn fanout_excludes_sender_and_clamps() {
        let mut node = GossipNode::fanout(3);
        let view = view_of(&[1, 2, 3, 4, 5]);
        let mut rng = stream(0, StreamPurpose::Fanout, NodeId(9));
        let mut c = ctx(&view, &mut rng);

        let actions = node.on_data(msg(1, 0, 5, 20), &mut c);
        let targets: Vec<NodeId> = actions
            .iter()
            .filter_map(|a| match a {
                ProtocolAction::Unicast(to, _) => Some(*to),
                _ => None,
            })
            .collect();
        assert_eq!(targets.len(), 3);
        assert!(!targets.contains(&NodeId(5)), "sender must be excluded");

        let mut small = GossipNode::fanout(3);
        let view2 = view_of(&[1, 7]);
        let mut c2 = ctx(&view2, &mut rng);
        let actions2 = small.on_data(msg(2, 0, 1, 20), &mut c2);
        let unicasts = actions2
            .iter()
            .filter(|a| matches!(a, ProtocolAction::Unicast(..)))
            .count();
        assert_eq!(unicasts, 1, "only node 7 is eligible");
    }

    #[test]
    fn origination_never_delivers_to_self() {
        let mut node = GossipNode::flood();
        let view = view_of(&[1]);
        let mut rng = stream(0, StreamPurpose::Fanout, NodeId(9));
        let mut c = ctx(&view, &mut rng);
        let actions = node.on_originate(msg(9, 0, 9, 20), &mut c);
        assert!(actions.iter().all(|a| !matches!(a, ProtocolAction::Deliver(_))));
        assert_eq!(actions.len(), 1);
    }
}
