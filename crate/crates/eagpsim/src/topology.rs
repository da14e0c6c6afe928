//! Topology builders and graph utilities.
//!
//! Three layouts: concentric rings around a central sink, a column ladder
//! with the sink on the far left, and uniform random placement. Geometry is
//! chosen so hop distance matches the intended logical structure at the
//! configured radio range.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::NodeId;
use crate::rng::{stream, StreamPurpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Symmetrical,
    Asymmetrical,
    Random,
}

impl TopologyKind {
    pub fn name(&self) -> &'static str {
        match self {
            TopologyKind::Symmetrical => "symmetrical",
            TopologyKind::Asymmetrical => "asymmetrical",
            TopologyKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub kind: TopologyKind,
    pub positions: Vec<(f64, f64)>,
    pub sink: NodeId,
    pub radio_range: f64,
    pub diameter_hops: u32,
    pub sink_ecc_hops: u32,
    /// Nodes whose removal disconnects the graph.
    pub articulation: Vec<NodeId>,
}

impl Topology {
    pub fn n(&self) -> usize {
        self.positions.len()
    }
}

pub fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Adjacency lists from positions: u ~ v iff within radio range. Lists are
/// sorted ascending.
pub fn adjacency_from_positions(positions: &[(f64, f64)], range: f64) -> Vec<Vec<NodeId>> {
    let n = positions.len();
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            if dist(positions[u], positions[v]) <= range {
                adj[u].push(NodeId(v as u16));
                adj[v].push(NodeId(u as u16));
            }
        }
    }
    adj
}

/// BFS hop counts from `source`; unreachable nodes get None.
pub fn bfs_hops(adj: &[Vec<NodeId>], source: NodeId) -> Vec<Option<u32>> {
    let mut hops = vec![None; adj.len()];
    if adj.is_empty() {
        return hops;
    }
    let mut queue = std::collections::VecDeque::new();
    hops[source.0 as usize] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let d = hops[u.0 as usize].unwrap();
        for &v in &adj[u.0 as usize] {
            if hops[v.0 as usize].is_none() {
                hops[v.0 as usize] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    hops
}

pub fn is_connected(adj: &[Vec<NodeId>]) -> bool {
    if adj.is_empty() {
        return true;
    }
    bfs_hops(adj, NodeId(0)).iter().all(|h| h.is_some())
}

/// Longest shortest path over all pairs. Requires a connected graph.
pub fn graph_diameter(adj: &[Vec<NodeId>]) -> u32 {
    let mut diameter = 0;
    for u in 0..adj.len() {
        let hops = bfs_hops(adj, NodeId(u as u16));
        for h in hops {
            diameter = diameter.max(h.expect("diameter of a disconnected graph"));
        }
    }
    diameter
}

pub fn eccentricity(adj: &[Vec<NodeId>], source: NodeId) -> u32 {
    bfs_hops(adj, source)
        .iter()
        .map(|h| h.expect("eccentricity of a disconnected graph"))
        .max()
        .unwrap_or(0)
}

/// Articulation points by brute-force removal. Fine at desk scale.
pub fn articulation_points(adj: &[Vec<NodeId>]) -> Vec<NodeId> {
    let n = adj.len();
    if n <= 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for cut in 0..n {
        let reduced: Vec<Vec<NodeId>> = (0..n)
            .map(|u| {
                if u == cut {
                    Vec::new()
                } else {
                    adj[u].iter().copied().filter(|v| v.0 as usize != cut).collect()
                }
            })
            .collect();
        let start = NodeId(if cut == 0 { 1 } else { 0 });
        let hops = bfs_hops(&reduced, start);
        let disconnected = hops
            .iter()
            .enumerate()
            .any(|(u, h)| u != cut && h.is_none());
        if disconnected {
            out.push(NodeId(cut as u16));
        }
    }
    out
}

fn finish_topology(
    kind: TopologyKind,
    positions: Vec<(f64, f64)>,
    sink: NodeId,
    range: f64,
) -> Topology {
    let adj = adjacency_from_positions(&positions, range);
    assert!(is_connected(&adj), "built topology must be connected");
    let diameter_hops = graph_diameter(&adj);
    let sink_ecc_hops = eccentricity(&adj, sink);
    let articulation = articulation_points(&adj);
    Topology {
        kind,
        positions,
        sink,
        radio_range: range,
        diameter_hops,
        sink_ecc_hops,
        articulation,
    }
}

/// Concentric rings: sink at the origin, ring r at radius r * 0.9 * range
/// with `per_ring` nodes at equal, aligned angles. Each node's hop distance
/// to the sink equals its ring index.
pub fn build_symmetrical(rings: u32, per_ring: u32, range: f64) -> Topology {
    assert!(rings >= 1 && per_ring >= 1, "need at least one ring and one node per ring");
    let mut positions = vec![(0.0, 0.0)];
    let spacing = 0.9 * range;
    for r in 1..=rings {
        let radius = r as f64 * spacing;
        for k in 0..per_ring {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / per_ring as f64;
            positions.push((radius * angle.cos(), radius * angle.sin()));
        }
    }
    finish_topology(TopologyKind::Symmetrical, positions, NodeId(0), range)
}

/// Column ladder: sink alone in column 0, then `depth` columns of `width`
/// nodes. Column spacing 0.9 * range keeps links to adjacent columns only;
/// vertical spread is tight enough that adjacent columns are fully linked.
pub fn build_asymmetrical(depth: u32, width: u32, range: f64) -> Topology {
    assert!(depth >= 1 && width >= 1, "need at least one column and one row");
    let x_step = 0.9 * range;
    let y_step = if width == 1 {
        0.0
    } else {
        0.43 * range / (width - 1) as f64
    };
    let y_mid = (width - 1) as f64 * y_step / 2.0;
    let mut positions = vec![(0.0, y_mid)];
    for c in 1..=depth {
        for r in 0..width {
            positions.push((c as f64 * x_step, r as f64 * y_step));
        }
    }
    finish_topology(TopologyKind::Asymmetrical, positions, NodeId(0), range)
}

/// Uniform random placement in a square, regenerated until connected with
/// sink eccentricity within `max_ecc`. The sink is the node nearest the
/// centroid of the drawn points. None when no attempt qualifies.
pub fn try_build_random(
    n: u32,
    area_side: f64,
    range: f64,
    seed: u64,
    max_ecc: u32,
) -> Option<Topology> {
    assert!(n >= 1, "need at least one node");
    let mut rng: ChaCha8Rng = stream(seed, StreamPurpose::Topology, NodeId(0));
    for _attempt in 0..10_000 {
        let positions: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen::<f64>() * area_side, rng.gen::<f64>() * area_side))
            .collect();
        let cx = positions.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let cy = positions.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let sink = positions
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                dist(**a, (cx, cy)).partial_cmp(&dist(**b, (cx, cy))).unwrap()
            })
            .map(|(i, _)| NodeId(i as u16))
            .unwrap();
        let adj = adjacency_from_positions(&positions, range);
        if !is_connected(&adj) {
            continue;
        }
        if eccentricity(&adj, sink) > max_ecc {
            continue;
        }
        return Some(finish_topology(TopologyKind::Random, positions, sink, range));
    }
    None
}

pub fn build_random(n: u32, area_side: f64, range: f64, seed: u64, max_ecc: u32) -> Topology {
    try_build_random(n, area_side, range, seed, max_ecc).unwrap_or_else(|| {
        panic!("no connected random topology found for n={n}, area={area_side}, range={range}")
    })
}
