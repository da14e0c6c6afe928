//! Scenario files: parsing, validation and world assembly.
//!
//! The format is flat text, one `section.key = value` per line, `#` starts a
//! comment. Parsing is strict: unknown keys, duplicates, malformed values and
//! misplaced keys are all errors that carry the offending line.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::energy::{EnergyModel, IdleState};
use crate::kernel::{Medium, SimOptions, SimWorld, TrafficPlan};
use crate::protocols::EagpConfig;
use crate::scenario::{startup_end_s, BatterySpec, Bounds, MobilitySpec, ScenarioKind, TrafficSpec};
use crate::topology::{build_asymmetrical, build_symmetrical, try_build_random, Topology};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `section.key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("{0}")]
    Invalid(String),
    #[error("topology is disconnected or does not meet its hop bound: {0}")]
    Disconnected(String),
}

impl ConfigError {
    /// Process exit code mandated for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Disconnected(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub enum TopologySpec {
    Symmetrical { rings: u32, per_ring: u32, range: f64 },
    Asymmetrical { depth: u32, width: u32, range: f64 },
    Random { n: u32, area_side: f64, range: f64, max_ecc: u32 },
}

impl TopologySpec {
    pub fn node_count(&self) -> usize {
        match *self {
            TopologySpec::Symmetrical { rings, per_ring, .. } => 1 + (rings * per_ring) as usize,
            TopologySpec::Asymmetrical { depth, width, .. } => 1 + (depth * width) as usize,
            TopologySpec::Random { n, .. } => n as usize,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TopologySpec::Symmetrical { .. } => "symmetrical",
            TopologySpec::Asymmetrical { .. } => "asymmetrical",
            TopologySpec::Random { .. } => "random",
        }
    }
}

/// A fully validated scenario with every default filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub topology: TopologySpec,
    pub scenario: ScenarioKind,
    pub duration_s: f64,
    pub battery: BatterySpec,
    pub traffic: TrafficSpec,
    pub mobility_speed: f64,
    pub mobility_expand: f64,
    pub eagp: EagpConfig,
    pub gossip_fanout: usize,
    pub mcfa_resetup_s: Option<f64>,
    pub model: EnergyModel,
    pub idle: IdleState,
    pub seeds: Option<Vec<u64>>,
}

struct Raw {
    map: BTreeMap<String, (usize, String)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Raw, ConfigError> {
        let mut map = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let stripped = line.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let syntax = || ConfigError::Syntax { line: line_no, text: stripped.to_string() };
            let (key, value) = stripped.split_once('=').ok_or_else(syntax)?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() || !key.contains('.') {
                return Err(syntax());
            }
            if map.insert(key.to_string(), (line_no, value.to_string())).is_some() {
                return Err(ConfigError::DuplicateKey { line: line_no, key: key.to_string() });
            }
        }
        Ok(Raw { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parse_with<T>(
        &mut self,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, text)) => parse(&text).map(Some).ok_or_else(|| ConfigError::BadValue {
                line,
                key: key.to_string(),
                reason: format!("`{text}` is not {what}"),
            }),
        }
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parse_with(key, "a number", |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn u32_or(&mut self, key: &str, default: u32) -> Result<u32, ConfigError> {
        Ok(self
            .parse_with(key, "a whole number", |s| s.parse::<u32>().ok())?
            .unwrap_or(default))
    }

    fn usize_opt(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse_with(key, "a whole number", |s| s.parse::<usize>().ok())
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        Ok(self.take(key).map(|(_, v)| v))
    }

    fn required_string(&mut self, key: &str) -> Result<String, ConfigError> {
        self.string(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn seeds(&mut self, key: &str) -> Result<Option<Vec<u64>>, ConfigError> {
        self.parse_with(key, "a comma-separated list of seeds", |s| {
            let seeds: Option<Vec<u64>> =
                s.split(',').map(|p| p.trim().parse::<u64>().ok()).collect();
            seeds.filter(|v| !v.is_empty())
        })
    }

    fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.parse_with(key, "a comma-separated list of numbers", |s| {
            let vals: Option<Vec<f64>> =
                s.split(',').map(|p| p.trim().parse::<f64>().ok()).collect();
            vals.filter(|v| !v.is_empty())
        })
    }

    fn forbid(&mut self, key: &str, why: &str) -> Result<(), ConfigError> {
        if let Some((line, _)) = self.take(key) {
            return Err(ConfigError::Invalid(format!("line {line}: key `{key}` {why}")));
        }
        Ok(())
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some((key, (line, _))) = self.map.iter().min_by_key(|(_, (line, _))| *line) {
            return Err(ConfigError::UnknownKey { line: *line, key: key.clone() });
        }
        Ok(())
    }
}

fn require(cond: bool, message: impl Into<String>) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::Invalid(message.into()))
    }
}

pub fn parse_scenario(text: &str) -> Result<Resolved, ConfigError> {
    let mut raw = Raw::parse(text)?;

    let kind = raw.required_string("topology.kind")?;
    let range = raw.f64_or("topology.range", 100.0)?;
    require(range > 0.0, "topology.range must be positive")?;
    let topology = match kind.as_str() {
        "symmetrical" => {
            for key in ["topology.n", "topology.area", "topology.depth", "topology.width", "topology.max_hops"] {
                raw.forbid(key, "does not apply to symmetrical topologies")?;
            }
            let rings = raw.u32_or("topology.rings", 5)?;
            let per_ring = raw.u32_or("topology.per_ring", 6)?;
            require(rings >= 1 && per_ring >= 1, "symmetrical topology needs rings >= 1 and per_ring >= 1")?;
            TopologySpec::Symmetrical { rings, per_ring, range }
        }
        "asymmetrical" => {
            for key in ["topology.n", "topology.area", "topology.rings", "topology.per_ring", "topology.max_hops"] {
                raw.forbid(key, "does not apply to asymmetrical topologies")?;
            }
            let depth = raw.u32_or("topology.depth", 9)?;
            let width = raw.u32_or("topology.width", 3)?;
            require(depth >= 1 && width >= 1, "asymmetrical topology needs depth >= 1 and width >= 1")?;
            TopologySpec::Asymmetrical { depth, width, range }
        }
        "random" => {
            for key in ["topology.rings", "topology.per_ring", "topology.depth", "topology.width"] {
                raw.forbid(key, "does not apply to random topologies")?;
            }
            let n = raw.u32_or("topology.n", 30)?;
            let area_side = raw.f64_or("topology.area", 250.0)?;
            let max_ecc = raw.u32_or("topology.max_hops", 11)?;
            require(n >= 1, "topology.n must be at least 1")?;
            require(area_side > 0.0, "topology.area must be positive")?;
            TopologySpec::Random { n, area_side, range, max_ecc }
        }
        other => {
            return Err(ConfigError::Invalid(format!(
                "topology.kind must be symmetrical, asymmetrical or random, got `{other}`"
            )))
        }
    };
    let n = topology.node_count();
    require(n <= 128, format!("at most 128 nodes are supported, this topology has {n}"))?;

    let scenario = match raw.required_string("scenario.kind")?.as_str() {
        "steady_state" => ScenarioKind::SteadyState,
        "end_of_life" => ScenarioKind::EndOfLife,
        "mobility" => ScenarioKind::Mobility,
        other => {
            return Err(ConfigError::Invalid(format!(
                "scenario.kind must be steady_state, end_of_life or mobility, got `{other}`"
            )))
        }
    };
    let duration_s = raw
        .f64("scenario.duration")?
        .ok_or_else(|| ConfigError::Missing("scenario.duration".into()))?;
    require(duration_s > 0.0, "scenario.duration must be positive")?;

    let capacity_j = raw.f64_or("battery.capacity_j", 200.0)?;
    require(capacity_j > 0.0, "battery.capacity_j must be positive")?;
    let min_pct = raw.f64_or("battery.min_pct", 60.0)?;
    let max_pct = raw.f64_or("battery.max_pct", 100.0)?;
    require(
        min_pct > 0.0 && min_pct <= max_pct && max_pct <= 100.0,
        "battery percentages must satisfy 0 < min_pct <= max_pct <= 100",
    )?;
    let mut battery = BatterySpec::uniform(capacity_j, min_pct, max_pct);
    if let Some(sink_pct) = raw.f64("battery.sink_pct")? {
        require(sink_pct > 0.0 && sink_pct <= 100.0, "battery.sink_pct must be in (0, 100]")?;
        battery.sink_pct = Some(sink_pct);
    }
    if let Some(levels) = raw.f64_list("battery.levels_j")? {
        require(
            levels.len() == n,
            format!("battery.levels_j lists {} values for {} nodes", levels.len(), n),
        )?;
        require(
            levels.iter().all(|&j| j > 0.0 && j <= capacity_j),
            "battery.levels_j entries must be in (0, capacity_j]",
        )?;
        battery.explicit_j = Some(levels);
    }

    let traffic_min = raw.f64_or("traffic.min", 15.0)?;
    let traffic_max = raw.f64_or("traffic.max", 50.0)?;
    require(
        traffic_min > 0.0 && traffic_min < traffic_max,
        "traffic gaps must satisfy 0 < min < max",
    )?;
    let traffic = TrafficSpec { min_s: traffic_min, max_s: traffic_max };

    let (mobility_speed, mobility_expand) = if scenario == ScenarioKind::Mobility {
        let speed = raw.f64_or("mobility.speed", 1.0)?;
        let expand = raw.f64_or("mobility.expand", 75.0)?;
        require(speed > 0.0, "mobility.speed must be positive")?;
        require(expand >= 0.0, "mobility.expand must not be negative")?;
        (speed, expand)
    } else {
        raw.forbid("mobility.speed", "only applies to mobility scenarios")?;
        raw.forbid("mobility.expand", "only applies to mobility scenarios")?;
        (0.0, 0.0)
    };

    let eagp = EagpConfig {
        dt_max_s: raw.f64_or("eagp.dt_max", 10.0)?,
        t_rec_s: raw.f64_or("eagp.t_rec", 20.0)?,
        lambda_pct: raw.f64_or("eagp.lambda", 10.0)?,
        fanout: raw.usize_opt("eagp.fanout")?,
    };
    require(eagp.dt_max_s > 0.0, "eagp.dt_max must be positive")?;
    require(eagp.t_rec_s >= eagp.dt_max_s, "eagp.t_rec must be at least eagp.dt_max")?;
    require(
        eagp.lambda_pct > 0.0 && eagp.lambda_pct <= 100.0,
        "eagp.lambda must be in (0, 100]",
    )?;
    if let Some(k) = eagp.fanout {
        require(k >= 1, "eagp.fanout must be at least 1")?;
    }

    let gossip_fanout = raw.usize_opt("gossip.fanout")?.unwrap_or(3);
    require(gossip_fanout >= 1, "gossip.fanout must be at least 1")?;

    let mcfa_resetup_s = raw.f64("mcfa.resetup_interval")?;
    if let Some(period) = mcfa_resetup_s {
        require(period > 0.0, "mcfa.resetup_interval must be positive")?;
    }

    let mut model = EnergyModel::default();
    {
        let mut set = |key: &str, slot: &mut f64| -> Result<(), ConfigError> {
            if let Some(v) = raw.f64(key)? {
                require(v > 0.0, format!("{key} must be positive"))?;
                *slot = v;
            }
            Ok(())
        };
        set("energy.deep_sleep_a", &mut model.deep_sleep_a)?;
        set("energy.modem_sleep_a", &mut model.modem_sleep_a)?;
        set("energy.awake_a", &mut model.awake_a)?;
        set("energy.tx_a", &mut model.tx_a)?;
        set("energy.rx_a", &mut model.rx_a)?;
        set("energy.voltage", &mut model.voltage)?;
        set("energy.tx_time_s", &mut model.tx_time_s)?;
        set("energy.rx_time_s", &mut model.rx_time_s)?;
        set("energy.sensor_j", &mut model.sensor_j)?;
        set("energy.bandwidth_bps", &mut model.bandwidth_bps)?;
        set("energy.hop_delay_s", &mut model.hop_delay_s)?;
    }
    let idle = match raw.string("energy.idle_state")?.as_deref() {
        None | Some("awake") => IdleState::Awake,
        Some("modem_sleep") => IdleState::ModemSleep,
        Some("deep_sleep") => IdleState::DeepSleep,
        Some(other) => {
            return Err(ConfigError::Invalid(format!(
                "energy.idle_state must be awake, modem_sleep or deep_sleep, got `{other}`"
            )))
        }
    };

    let seeds = raw.seeds("sim.seeds")?;

    raw.finish()?;

    Ok(Resolved {
        topology,
        scenario,
        duration_s,
        battery,
        traffic,
        mobility_speed,
        mobility_expand,
        eagp,
        gossip_fanout,
        mcfa_resetup_s,
        model,
        idle,
        seeds,
    })
}

impl Resolved {
    /// Canonical `key = value` listing of every effective setting, for the
    /// run manifest. Stable ordering, independent of the input file layout.
    pub fn manifest_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        let mut put = |k: &str, v: String| lines.push(format!("{k} = {v}"));
        put("topology.kind", self.topology.kind_name().to_string());
        match self.topology {
            TopologySpec::Symmetrical { rings, per_ring, range } => {
                put("topology.rings", rings.to_string());
                put("topology.per_ring", per_ring.to_string());
                put("topology.range", format!("{range}"));
            }
            TopologySpec::Asymmetrical { depth, width, range } => {
                put("topology.depth", depth.to_string());
                put("topology.width", width.to_string());
                put("topology.range", format!("{range}"));
            }
            TopologySpec::Random { n, area_side, range, max_ecc } => {
                put("topology.n", n.to_string());
                put("topology.area", format!("{area_side}"));
                put("topology.range", format!("{range}"));
                put("topology.max_hops", max_ecc.to_string());
            }
        }
        put("scenario.kind", self.scenario.name().to_string());
        put("scenario.duration", format!("{}", self.duration_s));
        put("battery.capacity_j", format!("{}", self.battery.capacity_j));
        put("battery.min_pct", format!("{}", self.battery.min_pct));
        put("battery.max_pct", format!("{}", self.battery.max_pct));
        if let Some(p) = self.battery.sink_pct {
            put("battery.sink_pct", format!("{p}"));
        }
        if let Some(levels) = &self.battery.explicit_j {
            let listed: Vec<String> = levels.iter().map(|v| format!("{v}")).collect();
            put("battery.levels_j", listed.join(","));
        }
        put("traffic.min", format!("{}", self.traffic.min_s));
        put("traffic.max", format!("{}", self.traffic.max_s));
        if self.scenario == ScenarioKind::Mobility {
            put("mobility.speed", format!("{}", self.mobility_speed));
            put("mobility.expand", format!("{}", self.mobility_expand));
        }
        put("eagp.dt_max", format!("{}", self.eagp.dt_max_s));
        put("eagp.t_rec", format!("{}", self.eagp.t_rec_s));
        put("eagp.lambda", format!("{}", self.eagp.lambda_pct));
        if let Some(k) = self.eagp.fanout {
            put("eagp.fanout", k.to_string());
        }
        put("gossip.fanout", self.gossip_fanout.to_string());
        if let Some(period) = self.mcfa_resetup_s {
            put("mcfa.resetup_interval", format!("{period}"));
        }
        let d = EnergyModel::default();
        let m = &self.model;
        for (key, value, default) in [
            ("energy.deep_sleep_a", m.deep_sleep_a, d.deep_sleep_a),
            ("energy.modem_sleep_a", m.modem_sleep_a, d.modem_sleep_a),
            ("energy.awake_a", m.awake_a, d.awake_a),
            ("energy.tx_a", m.tx_a, d.tx_a),
            ("energy.rx_a", m.rx_a, d.rx_a),
            ("energy.voltage", m.voltage, d.voltage),
            ("energy.tx_time_s", m.tx_time_s, d.tx_time_s),
            ("energy.rx_time_s", m.rx_time_s, d.rx_time_s),
            ("energy.sensor_j", m.sensor_j, d.sensor_j),
            ("energy.bandwidth_bps", m.bandwidth_bps, d.bandwidth_bps),
            ("energy.hop_delay_s", m.hop_delay_s, d.hop_delay_s),
        ] {
            if value != default {
                put(key, format!("{value}"));
            }
        }
        if self.idle != IdleState::Awake {
            let name = match self.idle {
                IdleState::Awake => "awake",
                IdleState::ModemSleep => "modem_sleep",
                IdleState::DeepSleep => "deep_sleep",
            };
            put("energy.idle_state", name.to_string());
        }
        if let Some(seeds) = &self.seeds {
            let listed: Vec<String> = seeds.iter().map(|s| s.to_string()).collect();
            put("sim.seeds", listed.join(","));
        }
        lines
    }
}

/// Builds the deployment for one seed. Sym/asym layouts are seed-independent;
/// random layouts and all battery draws are keyed by the seed.
pub fn build_world(resolved: &Resolved, seed: u64) -> Result<(SimWorld, Topology), ConfigError> {
    let topo = match resolved.topology {
        TopologySpec::Symmetrical { rings, per_ring, range } => {
            build_symmetrical(rings, per_ring, range)
        }
        TopologySpec::Asymmetrical { depth, width, range } => {
            build_asymmetrical(depth, width, range)
        }
        TopologySpec::Random { n, area_side, range, max_ecc } => {
            try_build_random(n, area_side, range, seed, max_ecc).ok_or_else(|| {
                ConfigError::Disconnected(format!(
                    "no connected placement of {n} nodes in a {area_side}x{area_side} area \
                     with range {range} within {max_ecc} hops of the sink (seed {seed})"
                ))
            })?
        }
    };
    let initial_j = resolved.battery.assign(topo.n(), topo.sink, seed);
    let world = SimWorld {
        positions: topo.positions.clone(),
        medium: Medium::Disk { range: topo.radio_range },
        sink: topo.sink,
        initial_j,
        capacity_j: resolved.battery.capacity_j,
    };
    Ok((world, topo))
}

/// Kernel options for one run of this scenario.
pub fn sim_options(resolved: &Resolved, topo: &Topology, seed: u64, trace: bool) -> SimOptions {
    let ttl = (2 * topo.diameter_hops).max(1);
    assert!(ttl <= u16::MAX as u32);
    let start_s = startup_end_s(topo.sink_ecc_hops, resolved.model.hop_delay_s);
    SimOptions {
        seed,
        duration_s: resolved.duration_s,
        ttl: ttl as u16,
        model: resolved.model,
        idle: resolved.idle,
        traffic: Some(TrafficPlan { spec: resolved.traffic, start_s }),
        mobility: (resolved.scenario == ScenarioKind::Mobility).then(|| MobilitySpec {
            speed_mps: resolved.mobility_speed,
            update_interval_s: 1.0,
            bounds: Bounds::around(&topo.positions, resolved.mobility_expand),
            start_after_s: start_s,
        }),
        injected: Vec::new(),
        metric_interval_s: 1.0,
        startup_end_s: start_s,
        trace,
    }
}
