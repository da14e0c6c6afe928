//! Runs a scenario across protocols and seeds, optionally on worker threads.
//!
//! Deployments are built once per seed and shared by every protocol, so all
//! four protocols face the same placement, batteries and traffic. Results are
//! keyed by job slot; worker count never changes what is produced.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::{build_world, sim_options, ConfigError, Resolved};
use crate::kernel::{run_protocol, SimWorld};
use crate::metrics::MetricsReport;
use crate::protocols::{ProtocolId, ProtocolParams};
use crate::topology::{adjacency_from_positions, Topology};

#[derive(Debug, Clone)]
pub struct Plan {
    pub resolved: Resolved,
    pub protocols: Vec<ProtocolId>,
    pub seeds: Vec<u64>,
    pub workers: usize,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub protocol: ProtocolId,
    pub seed: u64,
    pub report: MetricsReport,
    pub trace_lines: Vec<String>,
}

/// Per-seed deployment facts, for the run manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedInfo {
    pub seed: u64,
    pub n: usize,
    pub edges: usize,
    pub diameter_hops: u32,
    pub sink_ecc_hops: u32,
    pub ttl: u16,
    pub startup_end_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    /// One record per (protocol, seed), protocol-major in canonical order.
    pub records: Vec<RunRecord>,
    pub seeds: Vec<SeedInfo>,
}

pub fn execute_plan(plan: &Plan) -> Result<PlanOutput, ConfigError> {
    let mut protocols = plan.protocols.clone();
    protocols.sort();
    protocols.dedup();

    let mut worlds: Vec<(u64, SimWorld, Topology)> = Vec::with_capacity(plan.seeds.len());
    let mut seed_infos = Vec::with_capacity(plan.seeds.len());
    for &seed in &plan.seeds {
        let (world, topo) = build_world(&plan.resolved, seed)?;
        let opts = sim_options(&plan.resolved, &topo, seed, false);
        let adj = adjacency_from_positions(&topo.positions, topo.radio_range);
        seed_infos.push(SeedInfo {
            seed,
            n: topo.n(),
            edges: adj.iter().map(Vec::len).sum::<usize>() / 2,
            diameter_hops: topo.diameter_hops,
            sink_ecc_hops: topo.sink_ecc_hops,
            ttl: opts.ttl,
            startup_end_s: opts.startup_end_s,
        });
        worlds.push((seed, world, topo));
    }

    let params = ProtocolParams {
        eagp: plan.resolved.eagp.clone(),
        gossip_fanout: plan.resolved.gossip_fanout,
        mcfa_resetup_s: plan.resolved.mcfa_resetup_s,
    };

    let jobs: Vec<(ProtocolId, usize)> = protocols
        .iter()
        .flat_map(|&p| (0..worlds.len()).map(move |si| (p, si)))
        .collect();

    let run_job = |&(proto, si): &(ProtocolId, usize)| -> RunRecord {
        let (seed, world, topo) = &worlds[si];
        let opts = sim_options(&plan.resolved, topo, *seed, plan.trace);
        let out = run_protocol(world, proto, &params, &opts);
        RunRecord { protocol: proto, seed: *seed, report: out.report, trace_lines: out.trace }
    };

    let records = if plan.workers <= 1 || jobs.len() <= 1 {
        jobs.iter().map(run_job).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; jobs.len()]);
        std::thread::scope(|scope| {
            for _ in 0..plan.workers.min(jobs.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= jobs.len() {
                        break;
                    }
                    let record = run_job(&jobs[i]);
                    slots.lock().unwrap()[i] = Some(record);
                });
            }
        });
        slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|slot| slot.expect("worker left a job unfinished"))
            .collect()
    };

    Ok(PlanOutput { records, seeds: seed_infos })
}
