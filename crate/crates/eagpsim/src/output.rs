//! CSV and manifest emission for a finished plan.
//!
//! Layout under the output directory:
//!   summary.csv                 one row per (protocol, seed)
//!   aggregate.csv               per-protocol mean/stdev/min/max over seeds
//!   fig_longevity.csv           seed-mean deliveries and alive counts over time
//!   fig_delivery.csv            delivery-rate distribution per protocol
//!   fig_coverage.csv            seed-mean coverage per origin and protocol
//!   fig_efficiency.csv          energy-per-delivery distribution per protocol
//!   fig_energy_profile.csv      seed-mean consumed energy per node
//!   timeseries/{protocol}_{seed}.csv
//!   pernode/{protocol}_{seed}.csv
//!   trace/{protocol}_{seed}.log (only when tracing was on)
//!   manifest.txt                effective settings and per-seed deployments
//!
//! Absent values (no deliveries yet, node never died) are empty fields.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::metrics::aggregate;
use crate::protocols::ProtocolId;
use crate::runner::{Plan, PlanOutput, RunRecord};

fn opt3(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

fn opt6(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_summary(dir: &Path, plan: &Plan, records: &[RunRecord]) -> io::Result<()> {
    let mut w = create(&dir.join("summary.csv"))?;
    writeln!(
        w,
        "seed,protocol,topology,scenario,duration_s,created,delivered_unique,\
         delivery_rate_pct,redundancy,total_energy_j,efficiency_j_per_pkt,\
         mean_coverage,last_delivery_s,first_death_s,setup_energy_j"
    )?;
    let topology = plan.resolved.topology.kind_name();
    let scenario = plan.resolved.scenario.name();
    for r in records {
        let m = &r.report;
        writeln!(
            w,
            "{},{},{},{},{:.3},{},{},{:.4},{:.4},{:.6},{},{:.4},{},{},{:.6}",
            r.seed,
            r.protocol,
            topology,
            scenario,
            plan.resolved.duration_s,
            m.created,
            m.delivered_unique,
            m.delivery_rate_pct,
            m.redundancy,
            m.total_energy_j,
            opt6(m.efficiency_j_per_pkt),
            m.mean_coverage,
            opt3(m.last_delivery_s),
            opt3(m.first_death_s),
            m.setup_energy_j,
        )?;
    }
    w.flush()
}

fn by_protocol(records: &[RunRecord]) -> BTreeMap<ProtocolId, Vec<&RunRecord>> {
    let mut map: BTreeMap<ProtocolId, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.protocol).or_default().push(r);
    }
    map
}

fn write_aggregate(dir: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut w = create(&dir.join("aggregate.csv"))?;
    writeln!(w, "protocol,metric,mean,stdev,min,max")?;
    for (proto, runs) in by_protocol(records) {
        let columns: [(&str, Vec<f64>); 5] = [
            ("delivery_rate_pct", runs.iter().map(|r| r.report.delivery_rate_pct).collect()),
            ("redundancy", runs.iter().map(|r| r.report.redundancy).collect()),
            ("total_energy_j", runs.iter().map(|r| r.report.total_energy_j).collect()),
            (
                "efficiency_j_per_pkt",
                runs.iter().filter_map(|r| r.report.efficiency_j_per_pkt).collect(),
            ),
            ("mean_coverage", runs.iter().map(|r| r.report.mean_coverage).collect()),
        ];
        for (metric, values) in columns {
            if values.is_empty() {
                writeln!(w, "{proto},{metric},,,,")?;
                continue;
            }
            let a = aggregate(&values);
            writeln!(
                w,
                "{proto},{metric},{:.6},{:.6},{:.6},{:.6}",
                a.mean, a.stdev, a.min, a.max
            )?;
        }
    }
    w.flush()
}

fn write_longevity(dir: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut w = create(&dir.join("fig_longevity.csv"))?;
    writeln!(w, "time_s,protocol,cum_deliveries,alive_nodes")?;
    for (proto, runs) in by_protocol(records) {
        let len = runs.iter().map(|r| r.report.longevity.len()).min().unwrap_or(0);
        for i in 0..len {
            let time = runs[0].report.longevity[i].time_s;
            let deliveries: f64 = runs
                .iter()
                .map(|r| r.report.longevity[i].cum_deliveries as f64)
                .sum::<f64>()
                / runs.len() as f64;
            let alive: f64 = runs
                .iter()
                .map(|r| r.report.longevity[i].alive_nodes as f64)
                .sum::<f64>()
                / runs.len() as f64;
            writeln!(w, "{time:.3},{proto},{deliveries:.4},{alive:.4}")?;
        }
    }
    w.flush()
}

fn write_distribution(
    dir: &Path,
    file: &str,
    metric: &str,
    records: &[RunRecord],
    pick: impl Fn(&RunRecord) -> Option<f64>,
) -> io::Result<()> {
    let mut w = create(&dir.join(file))?;
    writeln!(w, "protocol,{metric}_mean,{metric}_stdev,{metric}_min,{metric}_max")?;
    for (proto, runs) in by_protocol(records) {
        let values: Vec<f64> = runs.iter().filter_map(|r| pick(r)).collect();
        if values.is_empty() {
            writeln!(w, "{proto},,,,")?;
            continue;
        }
        let a = aggregate(&values);
        writeln!(w, "{proto},{:.6},{:.6},{:.6},{:.6}", a.mean, a.stdev, a.min, a.max)?;
    }
    w.flush()
}

fn write_coverage(dir: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut w = create(&dir.join("fig_coverage.csv"))?;
    writeln!(w, "protocol,origin,coverage")?;
    for (proto, runs) in by_protocol(records) {
        let mut sums: BTreeMap<u16, (f64, u32)> = BTreeMap::new();
        for r in runs {
            for &(origin, cov) in &r.report.coverage_by_origin {
                let slot = sums.entry(origin.0).or_insert((0.0, 0));
                slot.0 += cov;
                slot.1 += 1;
            }
        }
        for (origin, (sum, count)) in sums {
            writeln!(w, "{proto},{origin},{:.4}", sum / count as f64)?;
        }
    }
    w.flush()
}

fn write_energy_profile(dir: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut w = create(&dir.join("fig_energy_profile.csv"))?;
    writeln!(w, "protocol,node,energy_j")?;
    for (proto, runs) in by_protocol(records) {
        let mut sums: BTreeMap<u16, (f64, u32)> = BTreeMap::new();
        for r in runs {
            for stats in &r.report.per_node {
                let slot = sums.entry(stats.node.0).or_insert((0.0, 0));
                slot.0 += stats.energy_j;
                slot.1 += 1;
            }
        }
        for (node, (sum, count)) in sums {
            writeln!(w, "{proto},{node},{:.6}", sum / count as f64)?;
        }
    }
    w.flush()
}

fn write_per_run(dir: &Path, records: &[RunRecord], trace: bool) -> io::Result<()> {
    let ts_dir = dir.join("timeseries");
    let pn_dir = dir.join("pernode");
    fs::create_dir_all(&ts_dir)?;
    fs::create_dir_all(&pn_dir)?;
    let trace_dir = dir.join("trace");
    if trace {
        fs::create_dir_all(&trace_dir)?;
    }
    for r in records {
        let stem = format!("{}_{}", r.protocol, r.seed);

        let mut w = create(&ts_dir.join(format!("{stem}.csv")))?;
        writeln!(w, "time_s,cumulative_deliveries,alive_nodes")?;
        for p in &r.report.longevity {
            writeln!(w, "{:.3},{},{}", p.time_s, p.cum_deliveries, p.alive_nodes)?;
        }
        w.flush()?;

        let mut w = create(&pn_dir.join(format!("{stem}.csv")))?;
        writeln!(w, "node,energy_j,death_s,tx_count,rx_count")?;
        for s in &r.report.per_node {
            writeln!(
                w,
                "{},{:.6},{},{},{}",
                s.node.0,
                s.energy_j,
                opt3(s.death_s),
                s.tx_count,
                s.rx_count
            )?;
        }
        w.flush()?;

        if trace {
            let mut w = create(&trace_dir.join(format!("{stem}.log")))?;
            for line in &r.trace_lines {
                writeln!(w, "{line}")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn write_manifest(dir: &Path, plan: &Plan, out: &PlanOutput) -> io::Result<()> {
    let mut w = create(&dir.join("manifest.txt"))?;
    writeln!(w, "# effective scenario settings")?;
    for line in plan.resolved.manifest_lines() {
        writeln!(w, "{line}")?;
    }
    writeln!(w)?;
    let mut protocols: Vec<ProtocolId> = plan.protocols.clone();
    protocols.sort();
    protocols.dedup();
    let listed: Vec<String> = protocols.iter().map(|p| p.to_string()).collect();
    writeln!(w, "protocols = {}", listed.join(","))?;
    let listed: Vec<String> = plan.seeds.iter().map(|s| s.to_string()).collect();
    writeln!(w, "seeds = {}", listed.join(","))?;
    writeln!(w)?;
    writeln!(w, "# per-seed deployments")?;
    for info in &out.seeds {
        writeln!(
            w,
            "seed {}: n={} edges={} diameter={} sink_ecc={} ttl={} startup_end_s={:.3}",
            info.seed,
            info.n,
            info.edges,
            info.diameter_hops,
            info.sink_ecc_hops,
            info.ttl,
            info.startup_end_s
        )?;
    }
    w.flush()
}

/// Writes every output file for a finished plan under `dir`.
pub fn write_outputs(dir: &Path, plan: &Plan, out: &PlanOutput) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_summary(dir, plan, &out.records)?;
    write_aggregate(dir, &out.records)?;
    write_longevity(dir, &out.records)?;
    write_distribution(dir, "fig_delivery.csv", "delivery_rate_pct", &out.records, |r| {
        Some(r.report.delivery_rate_pct)
    })?;
    write_coverage(dir, &out.records)?;
    write_distribution(dir, "fig_efficiency.csv", "efficiency_j_per_pkt", &out.records, |r| {
        r.report.efficiency_j_per_pkt
    })?;
    write_energy_profile(dir, &out.records)?;
    write_per_run(dir, &out.records, plan.trace)?;
    write_manifest(dir, plan, out)?;
    Ok(())
}
