//! Routing protocols behind a single pluggable interface.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{DataMessage, Message, NodeId, ProtocolAction, ProtocolCtx, RoutingProtocol};

pub mod eagp;
pub mod gossip;
pub mod mcfa;

pub use eagp::EagpConfig;

/// The four comparable protocols. Ordering is the canonical output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProtocolId {
    Eagp,
    Gossip,
    GossipFo,
    Mcfa,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 4] =
        [ProtocolId::Eagp, ProtocolId::Gossip, ProtocolId::GossipFo, ProtocolId::Mcfa];
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ProtocolId::Eagp => "eagp",
            ProtocolId::Gossip => "gossip",
            ProtocolId::GossipFo => "gossip_fo",
            ProtocolId::Mcfa => "mcfa",
        };
        f.write_str(name)
    }
}

impl FromStr for ProtocolId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "eagp" => Ok(ProtocolId::Eagp),
            "gossip" => Ok(ProtocolId::Gossip),
            "gossip_fo" => Ok(ProtocolId::GossipFo),
            "mcfa" => Ok(ProtocolId::Mcfa),
            other => Err(format!(
                "unknown protocol '{other}' (expected eagp, gossip, gossip_fo, mcfa)"
            )),
        }
    }
}

/// Tunables shared by a whole run.
#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub eagp: EagpConfig,
    pub gossip_fanout: usize,
    /// Cost-field re-flood interval; None = single setup at t=0.
    pub mcfa_resetup_s: Option<f64>,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams { eagp: EagpConfig::default(), gossip_fanout: 3, mcfa_resetup_s: None }
    }
}

/// Instantiates one node's protocol state machine.
pub fn build_node_protocol(
    id: ProtocolId,
    node: NodeId,
    sink: NodeId,
    params: &ProtocolParams,
) -> Box<dyn RoutingProtocol> {
    match id {
        ProtocolId::Eagp => Box::new(eagp::EagpNode::new(params.eagp.clone())),
        ProtocolId::Gossip => Box::new(gossip::GossipNode::flood()),
        ProtocolId::GossipFo => Box::new(gossip::GossipNode::fanout(params.gossip_fanout)),
        ProtocolId::Mcfa => Box::new(mcfa::McfaNode::new(node == sink, params.mcfa_resetup_s)),
    }
}

/// Uniform sample of `k` distinct entries, by partial Fisher-Yates. Order of
/// the returned picks follows the shuffle.
pub fn select_uniform(candidates: &[NodeId], k: usize, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let mut pool: Vec<NodeId> = candidates.to_vec();
    let k = k.min(pool.len());
    for i in 0..k {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Forwarding fan for data: broadcast when `fanout` is None, otherwise up to
/// `fanout` unicasts to uniformly drawn neighbors, excluding the last hop.
pub fn data_sends(
    fanout: Option<usize>,
    msg: &DataMessage,
    exclude: NodeId,
    ctx: &mut ProtocolCtx,
) -> Vec<ProtocolAction> {
    match fanout {
        None => vec![ProtocolAction::Broadcast(Message::Data(msg.clone()))],
        Some(k) => {
            let candidates: Vec<NodeId> =
                ctx.view.members().filter(|&m| m != exclude).collect();
            select_uniform(&candidates, k, ctx.rng)
                .into_iter()
                .map(|to| ProtocolAction::Unicast(to, Message::Data(msg.clone())))
                .collect()
        }
    }
}
