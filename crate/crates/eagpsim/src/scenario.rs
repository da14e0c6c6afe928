//! Scenario ingredients: initial battery assignment, the continuous-delivery
//! traffic model, and the bounded random-walk mobility model.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::NodeId;
use crate::rng::{stream, StreamPurpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    SteadyState,
    EndOfLife,
    Mobility,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::SteadyState => "steady_state",
            ScenarioKind::EndOfLife => "end_of_life",
            ScenarioKind::Mobility => "mobility",
        }
    }
}

/// How initial charges are drawn.
#[derive(Debug, Clone)]
pub struct BatterySpec {
    pub capacity_j: f64,
    /// Initial charge drawn uniformly from [min_pct, max_pct] of capacity.
    pub min_pct: f64,
    pub max_pct: f64,
    /// Fixed initial percentage for the sink, overriding the draw.
    pub sink_pct: Option<f64>,
    /// Explicit per-node Joules; overrides the distribution entirely.
    pub explicit_j: Option<Vec<f64>>,
}

impl BatterySpec {
    pub fn uniform(capacity_j: f64, min_pct: f64, max_pct: f64) -> Self {
        BatterySpec { capacity_j, min_pct, max_pct, sink_pct: None, explicit_j: None }
    }

    /// Initial Joules for every node, drawn from one battery stream so the
    /// assignment is independent of protocol or traffic randomness.
    pub fn assign(&self, n: usize, sink: NodeId, seed: u64) -> Vec<f64> {
        if let Some(levels) = &self.explicit_j {
            assert_eq!(levels.len(), n, "explicit battery list length must equal node count");
            return levels.clone();
        }
        let mut rng: ChaCha8Rng = stream(seed, StreamPurpose::Battery, NodeId(0));
        (0..n)
            .map(|i| {
                let pct = rng.gen_range(self.min_pct..=self.max_pct);
                let pct = if NodeId(i as u16) == sink {
                    self.sink_pct.unwrap_or(pct)
                } else {
                    pct
                };
                self.capacity_j * pct / 100.0
            })
            .collect()
    }
}

/// Rectangular arena for the random walk.
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    /// Smallest box containing all positions, grown by `margin` on each side.
    pub fn around(positions: &[(f64, f64)], margin: f64) -> Bounds {
        let min_x = positions.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let max_x = positions.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let min_y = positions.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let max_y = positions.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        Bounds {
            min_x: min_x - margin,
            min_y: min_y - margin,
            max_x: max_x + margin,
            max_y: max_y + margin,
        }
    }

    /// Reflects a coordinate pair back inside the box (mirror walls).
    pub fn reflect(&self, mut x: f64, mut y: f64) -> (f64, f64) {
        let w = self.max_x - self.min_x;
        let h = self.max_y - self.min_y;
        while x < self.min_x || x > self.max_x {
            if x < self.min_x {
                x = 2.0 * self.min_x - x;
            }
            if x > self.max_x {
                x = 2.0 * self.max_x - x;
            }
            debug_assert!(w > 0.0);
        }
        while y < self.min_y || y > self.max_y {
            if y < self.min_y {
                y = 2.0 * self.min_y - y;
            }
            if y > self.max_y {
                y = 2.0 * self.max_y - y;
            }
            debug_assert!(h > 0.0);
        }
        (x, y)
    }
}

/// Random-walk parameters. Positions update once per interval; every non-sink
/// node moves `speed * interval` meters in a fresh uniform heading.
#[derive(Debug, Clone)]
pub struct MobilitySpec {
    pub speed_mps: f64,
    pub update_interval_s: f64,
    pub bounds: Bounds,
    /// Walk begins only after the start-up phase.
    pub start_after_s: f64,
}

/// One walk step for every non-sink node. Headings come from per-node
/// mobility streams passed in by the caller.
pub fn mobility_step(
    positions: &mut [(f64, f64)],
    sink: NodeId,
    spec: &MobilitySpec,
    rngs: &mut [ChaCha8Rng],
) {
    let step_len = spec.speed_mps * spec.update_interval_s;
    for (i, pos) in positions.iter_mut().enumerate() {
        if NodeId(i as u16) == sink {
            continue;
        }
        let heading = rngs[i].gen::<f64>() * 2.0 * std::f64::consts::PI;
        let nx = pos.0 + step_len * heading.cos();
        let ny = pos.1 + step_len * heading.sin();
        *pos = spec.bounds.reflect(nx, ny);
    }
}

/// Continuous-delivery traffic: inter-arrival gaps uniform in [min, max).
#[derive(Debug, Clone, Copy)]
pub struct TrafficSpec {
    pub min_s: f64,
    pub max_s: f64,
}

impl Default for TrafficSpec {
    fn default() -> Self {
        TrafficSpec { min_s: 15.0, max_s: 50.0 }
    }
}

impl TrafficSpec {
    pub fn next_gap(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.gen_range(self.min_s..self.max_s)
    }
}

/// End of the network start-up phase: time for the cost-field flood to reach
/// the farthest node, a settling margin, then movement or failure may begin.
pub fn startup_end_s(sink_ecc_hops: u32, hop_delay_s: f64) -> f64 {
    5.0 + (sink_ecc_hops + 1) as f64 * hop_delay_s
}
