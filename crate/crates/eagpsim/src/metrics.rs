//! Run metrics: delivery, redundancy, efficiency, coverage, longevity.
//!
//! Counting conventions: "created" counts data originated by non-sink nodes
//! (the sink cannot deliver to itself). Sink unique/repeat counts come from
//! data receptions at the sink; coverage comes from Deliver actions, with the
//! origin excluded from both numerator and denominator. Control traffic never
//! touches delivery counters, only energy.

use std::collections::BTreeMap;

use crate::model::{MessageId, NodeId};
use crate::time::SimTime;

#[derive(Debug, Clone)]
struct MsgRec {
    origin: NodeId,
    /// Bit i set = node i fired Deliver for this message.
    delivered: u128,
    /// Whether this message participates in sink metrics (origin != sink).
    counted: bool,
    seen_at_sink: bool,
}

/// Per-run metrics accumulator. One per (protocol, seed) run.
#[derive(Debug)]
pub struct Collector {
    n: usize,
    sink: NodeId,
    registry: BTreeMap<MessageId, MsgRec>,
    created: u64,
    sink_unique: u64,
    sink_repeats: u64,
    last_delivery: Option<SimTime>,
    series: Vec<SeriesPoint>,
    setup_energy_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub time_s: f64,
    pub cum_deliveries: u64,
    pub alive_nodes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    pub node: NodeId,
    pub energy_j: f64,
    pub death_s: Option<f64>,
    pub tx_count: u64,
    pub rx_count: u64,
    pub conservation_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub created: u64,
    pub delivered_unique: u64,
    pub sink_repeats: u64,
    pub delivery_rate_pct: f64,
    /// Mean repeated receptions per unique packet at the sink.
    pub redundancy: f64,
    pub total_energy_j: f64,
    /// Joules per unique sink delivery; None when nothing was delivered.
    pub efficiency_j_per_pkt: Option<f64>,
    pub mean_coverage: f64,
    /// Mean coverage of each origin's messages, origin-sorted.
    pub coverage_by_origin: Vec<(NodeId, f64)>,
    pub last_delivery_s: Option<f64>,
    pub first_death_s: Option<f64>,
    pub setup_energy_j: f64,
    pub longevity: Vec<SeriesPoint>,
    pub per_node: Vec<NodeStats>,
    pub max_conservation_rel_err: f64,
}

impl Collector {
    pub fn new(n: usize, sink: NodeId) -> Self {
        assert!(n <= 128, "coverage bitmask supports at most 128 nodes, got {n}");
        Collector {
            n,
            sink,
            registry: BTreeMap::new(),
            created: 0,
            sink_unique: 0,
            sink_repeats: 0,
            last_delivery: None,
            series: Vec::new(),
            setup_energy_j: 0.0,
        }
    }

    pub fn record_created(&mut self, id: MessageId) {
        let counted = id.origin != self.sink;
        let prev = self.registry.insert(
            id,
            MsgRec { origin: id.origin, delivered: 0, counted, seen_at_sink: false },
        );
        assert!(prev.is_none(), "message {id} created twice");
        if counted {
            self.created += 1;
        }
    }

    /// A data message arrived at the sink's radio and was processed.
    pub fn record_sink_rx(&mut self, id: MessageId, now: SimTime) {
        let rec = self.registry.get_mut(&id).expect("sink received an uncreated message");
        if !rec.counted {
            return;
        }
        if rec.seen_at_sink {
            self.sink_repeats += 1;
        } else {
            rec.seen_at_sink = true;
            self.sink_unique += 1;
            self.last_delivery = Some(now);
        }
    }

    /// The message reached this node's radio and was processed. Repeats are
    /// fine; coverage counts distinct nodes.
    pub fn record_reach(&mut self, node: NodeId, id: MessageId) {
        let rec = self.registry.get_mut(&id).expect("reach of an uncreated message");
        rec.delivered |= 1u128 << node.0;
    }

    pub fn sample(&mut self, time_s: f64, alive_nodes: u32) {
        self.series.push(SeriesPoint { time_s, cum_deliveries: self.sink_unique, alive_nodes });
    }

    pub fn set_setup_energy(&mut self, joules: f64) {
        self.setup_energy_j = joules;
    }

    pub fn delivered_unique(&self) -> u64 {
        self.sink_unique
    }

    /// Coverage of one message: delivered fraction of the other n-1 nodes.
    fn coverage_of(&self, rec: &MsgRec) -> f64 {
        if self.n <= 1 {
            return 0.0;
        }
        let mask = rec.delivered & !(1u128 << rec.origin.0);
        mask.count_ones() as f64 / (self.n - 1) as f64
    }

    pub fn finalize(self, per_node: Vec<NodeStats>) -> MetricsReport {
        let mut by_origin: BTreeMap<NodeId, (f64, u64)> = BTreeMap::new();
        for rec in self.registry.values().filter(|r| r.counted) {
            let entry = by_origin.entry(rec.origin).or_insert((0.0, 0));
            entry.0 += self.coverage_of(rec);
            entry.1 += 1;
        }
        let coverage_by_origin: Vec<(NodeId, f64)> = by_origin
            .iter()
            .map(|(&origin, &(sum, count))| (origin, sum / count as f64))
            .collect();
        let counted_msgs: u64 = by_origin.values().map(|&(_, c)| c).sum();
        let mean_coverage = if counted_msgs == 0 {
            0.0
        } else {
            let total: f64 = self
                .registry
                .values()
                .filter(|r| r.counted)
                .map(|r| self.coverage_of(r))
                .sum();
            total / counted_msgs as f64
        };

        let total_energy_j: f64 = per_node.iter().map(|s| s.energy_j).sum();
        let max_conservation_rel_err = per_node
            .iter()
            .map(|s| s.conservation_rel_err)
            .fold(0.0, f64::max);
        let first_death_s = per_node
            .iter()
            .filter_map(|s| s.death_s)
            .min_by(|a, b| a.partial_cmp(b).unwrap());

        let delivery_rate_pct = if self.created == 0 {
            0.0
        } else {
            100.0 * self.sink_unique as f64 / self.created as f64
        };
        let redundancy = if self.sink_unique == 0 {
            0.0
        } else {
            self.sink_repeats as f64 / self.sink_unique as f64
        };
        let efficiency_j_per_pkt = if self.sink_unique == 0 {
            None
        } else {
            Some(total_energy_j / self.sink_unique as f64)
        };

        MetricsReport {
            created: self.created,
            delivered_unique: self.sink_unique,
            sink_repeats: self.sink_repeats,
            delivery_rate_pct,
            redundancy,
            total_energy_j,
            efficiency_j_per_pkt,
            mean_coverage,
            coverage_by_origin,
            last_delivery_s: self.last_delivery.map(|t| t.as_secs_f64()),
            first_death_s,
            setup_energy_j: self.setup_energy_j,
            longevity: self.series,
            per_node,
            max_conservation_rel_err,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
}

/// Seed-batch statistics; sample stdev (n-1), zero for a single value.
pub fn aggregate(values: &[f64]) -> Aggregate {
    assert!(!values.is_empty(), "aggregate of nothing");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stdev = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Aggregate { mean, stdev, min, max }
}
