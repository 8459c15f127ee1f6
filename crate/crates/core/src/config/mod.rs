// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Experiment configuration.
//!
//! The format is line oriented: `key = value` with dotted section keys
//! (`topology.kind = random`) and `#` comments. Every key is known up
//! front; anything else is rejected with its line number.

mod presets;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use thiserror::Error;

use crate::adversary::{DropPolicy, Placement};
use crate::engine::{SimulationRun, DEFAULT_TOTAL_STEPS, DEFAULT_TTL};
use crate::protocol::{
    ProtocolConfig, ProtocolKind, Step, DEFAULT_FAILSAFE_WAIT, DEFAULT_FLUFF_PROBABILITY,
    DEFAULT_FORWARD_PROBABILITY,
};
use crate::seed::{derive_seed, stream};
use crate::topology::{
    TopologyKind, TopologySpec, DEFAULT_RETRY_BUDGET, DEFAULT_REWIRE_PROBABILITY,
};

pub use presets::{preset, Preset, PRESETS};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_NODES: usize = 10_000;
pub const DEFAULT_MEAN_DEGREE: usize = 8;
pub const DEFAULT_MAX_DIAMETER: usize = 10;

/// Where a value came from, for error messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("command-line override"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: Origin, key: String },
    #[error("line {line}: key `{key}` is set more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("{origin}: invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        origin: Origin,
        key: String,
        value: String,
        reason: String,
    },
    #[error("{origin}: `{key}`: {reason}")]
    Invariant {
        origin: Origin,
        key: String,
        reason: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Fixed(usize),
}

impl Threads {
    /// Worker count for a thread pool; `0` lets the pool decide.
    pub fn count(self) -> usize {
        match self {
            Threads::Auto => 0,
            Threads::Fixed(n) => n,
        }
    }
}

impl fmt::Display for Threads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threads::Auto => f.write_str("auto"),
            Threads::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// Attacker fractions to sweep: an inclusive `start:end:step` range or an
/// explicit list.
#[derive(Clone, Debug, PartialEq)]
pub enum Fractions {
    Range { start: f64, end: f64, step: f64 },
    List(Vec<f64>),
}

impl Fractions {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Fractions::List(v) => v.clone(),
            Fractions::Range { start, end, step } => {
                let mut out = Vec::new();
                if *step <= 0.0 {
                    return out;
                }
                let mut i = 0u32;
                loop {
                    // Snap to a 1e-9 grid so 0.01 + 5 * 0.05 prints as 0.26.
                    let v = ((start + f64::from(i) * step) * 1e9).round() / 1e9;
                    if v > end + 1e-12 {
                        break;
                    }
                    out.push(v);
                    i += 1;
                }
                out
            }
        }
    }
}

impl fmt::Display for Fractions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fractions::Range { start, end, step } => write!(f, "{start}:{end}:{step}"),
            Fractions::List(v) => {
                let parts: Vec<String> = v.iter().map(f64::to_string).collect();
                f.write_str(&parts.join(", "))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopologySection {
    pub kind: TopologyKind,
    pub nodes: usize,
    pub edges: Option<usize>,
    pub mean_degree: Option<usize>,
    pub rewire_probability: Option<f64>,
    pub max_diameter: Option<usize>,
    pub retries: usize,
    /// `None` derives the topology seed from the experiment seed.
    pub seed: Option<u64>,
    /// Edge-list file to load instead of generating.
    pub input: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSection {
    pub kinds: Vec<ProtocolKind>,
    pub forward_probability: f64,
    pub fluff_probability: f64,
    pub failsafe_wait: Step,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub threads: Threads,
    pub output: PathBuf,
    pub topology: TopologySection,
    pub protocol: ProtocolSection,
    pub ttl: Step,
    pub total_steps: u32,
    pub placement: Placement,
    pub policy: DropPolicy,
    pub fractions: Fractions,
}

impl ExperimentConfig {
    pub fn topology_spec(&self) -> TopologySpec {
        let t = &self.topology;
        TopologySpec {
            kind: t.kind,
            node_count: t.nodes,
            edge_count: t.edges,
            mean_degree: t.mean_degree,
            rewire_probability: t.rewire_probability,
            max_diameter: t.max_diameter,
            retry_budget: t.retries,
            seed: t
                .seed
                .unwrap_or_else(|| derive_seed(self.seed, stream::TOPOLOGY, 0)),
        }
    }

    pub fn protocol_configs(&self) -> Vec<ProtocolConfig> {
        let p = &self.protocol;
        p.kinds
            .iter()
            .map(|&kind| {
                ProtocolConfig::new(kind)
                    .with_forward_probability(p.forward_probability)
                    .with_fluff_probability(p.fluff_probability)
                    .with_failsafe_wait(p.failsafe_wait)
            })
            .collect()
    }

    /// Per-fraction template; `attacker_fraction` is filled in by the sweep.
    pub fn simulation_template(&self) -> SimulationRun {
        SimulationRun {
            ttl: self.ttl,
            total_steps: self.total_steps,
            attacker_fraction: 0.0,
            master_seed: self.seed,
        }
    }

    pub fn fraction_values(&self) -> Vec<f64> {
        self.fractions.values()
    }

    /// Config text with every key spelled out. Keys in `defaults` are
    /// tagged so the applied defaults are visible. Re-parsing the dump
    /// yields an equal config.
    pub fn normalized_dump(&self, defaults: &[&str]) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let t = &self.topology;
        let p = &self.protocol;
        let kinds: Vec<&str> = p.kinds.iter().map(|k| k.as_str()).collect();
        let entries: [(&str, String); 22] = [
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
            ("output", self.output.display().to_string()),
            ("topology.kind", t.kind.to_string()),
            ("topology.nodes", t.nodes.to_string()),
            ("topology.edges", opt(t.edges.map(|v| v.to_string()))),
            (
                "topology.mean_degree",
                opt(t.mean_degree.map(|v| v.to_string())),
            ),
            (
                "topology.rewire_probability",
                opt(t.rewire_probability.map(|v| v.to_string())),
            ),
            (
                "topology.max_diameter",
                opt(t.max_diameter.map(|v| v.to_string())),
            ),
            ("topology.retries", t.retries.to_string()),
            (
                "topology.seed",
                t.seed.map_or_else(|| "derived".into(), |v| v.to_string()),
            ),
            (
                "topology.input",
                opt(t.input.as_ref().map(|v| v.display().to_string())),
            ),
            ("protocol.kind", kinds.join(", ")),
            (
                "protocol.forward_probability",
                p.forward_probability.to_string(),
            ),
            (
                "protocol.fluff_probability",
                p.fluff_probability.to_string(),
            ),
            ("protocol.failsafe_wait", p.failsafe_wait.to_string()),
            ("run.ttl", self.ttl.to_string()),
            ("run.total_steps", self.total_steps.to_string()),
            ("adversary.placement", self.placement.as_str().to_string()),
            ("adversary.policy", self.policy.as_str().to_string()),
            ("sweep.fractions", self.fractions.to_string()),
            ("sweep.points", self.fraction_values().len().to_string()),
        ];
        let mut out = String::new();
        for (key, value) in entries {
            if key == "sweep.points" {
                let _ = writeln!(
                    out,
                    "# {value} sweep points, {} epochs each",
                    self.simulation_template().epoch_count()
                );
                continue;
            }
            if defaults.contains(&key) {
                let _ = writeln!(out, "{key} = {value}  # default");
            } else {
                let _ = writeln!(out, "{key} = {value}");
            }
        }
        out
    }

    /// Dump without the keys that cannot change results.
    pub fn result_identity(&self) -> String {
        self.normalized_dump(&[])
            .lines()
            .filter(|l| !l.starts_with("threads") && !l.starts_with("output"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub const KEYS: [&str; 21] = [
    "seed",
    "threads",
    "output",
    "topology.kind",
    "topology.nodes",
    "topology.edges",
    "topology.mean_degree",
    "topology.rewire_probability",
    "topology.max_diameter",
    "topology.retries",
    "topology.seed",
    "topology.input",
    "protocol.kind",
    "protocol.forward_probability",
    "protocol.fluff_probability",
    "protocol.failsafe_wait",
    "run.ttl",
    "run.total_steps",
    "adversary.placement",
    "adversary.policy",
    "sweep.fractions",
];

struct Entry {
    origin: Origin,
    value: String,
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            text: content.to_string(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: content.to_string(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                origin: Origin::Line(line),
                key: key.to_string(),
            });
        }
        let entry = Entry {
            origin: Origin::Line(line),
            value: value.trim().to_string(),
        };
        if entries.insert(key.to_string(), entry).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }
    Ok(entries)
}

struct Reader {
    entries: BTreeMap<String, Entry>,
    defaults: Vec<&'static str>,
}

impl Reader {
    fn origin(&self, key: &str) -> Origin {
        self.entries.get(key).map_or(Origin::Default, |e| e.origin)
    }

    fn invariant(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invariant {
            origin: self.origin(key),
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// Parses `key` with `parse`, or records the default.
    fn get<T>(
        &mut self,
        key: &'static str,
        default: T,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        match self.entries.get(key) {
            Some(entry) => parse(&entry.value).map_err(|reason| ConfigError::InvalidValue {
                origin: entry.origin,
                key: key.to_string(),
                value: entry.value.clone(),
                reason,
            }),
            None => {
                self.defaults.push(key);
                Ok(default)
            }
        }
    }
}

fn integer<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse()
        .map_err(|_| "expected a non-negative integer".to_string())
}

fn real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err("expected a real number".to_string()),
    }
}

fn optional<T>(s: &str, inner: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, String> {
    if s == "none" {
        Ok(None)
    } else {
        inner(s).map(Some)
    }
}

fn probability(s: &str) -> Result<f64, String> {
    let v = real(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err("expected a probability in [0, 1]".to_string())
    }
}

fn fractions(s: &str) -> Result<Fractions, String> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, end, step] = parts.as_slice() else {
            return Err("range must be start:end:step".to_string());
        };
        let (start, end, step) = (real(start)?, real(end)?, real(step)?);
        if step <= 0.0 || end < start {
            return Err("range needs start <= end and a positive step".to_string());
        }
        Ok(Fractions::Range { start, end, step })
    } else {
        s.split(',')
            .map(|p| real(p.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map(Fractions::List)
    }
}

fn protocol_kinds(s: &str) -> Result<Vec<ProtocolKind>, String> {
    let kinds = s
        .split(',')
        .map(|p| p.trim().parse::<ProtocolKind>())
        .collect::<Result<Vec<_>, _>>()?;
    for (i, k) in kinds.iter().enumerate() {
        if kinds[..i].contains(k) {
            return Err(format!("protocol `{k}` listed twice"));
        }
    }
    Ok(kinds)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with_overrides(text, &[]).map(|(cfg, _)| cfg)
}

/// Parses `text`, then applies `key=value` overrides on top. Returns the
/// config and the keys that fell back to their defaults.
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[(String, String)],
) -> Result<(ExperimentConfig, Vec<&'static str>), ConfigError> {
    let mut entries = tokenize(text)?;
    for (key, value) in overrides {
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                origin: Origin::Override,
                key: key.to_string(),
            });
        }
        entries.insert(
            key.to_string(),
            Entry {
                origin: Origin::Override,
                value: value.trim().to_string(),
            },
        );
    }
    let mut r = Reader {
        entries,
        defaults: Vec::new(),
    };

    let seed = r.get("seed", DEFAULT_SEED, integer)?;
    let threads = r.get("threads", Threads::Auto, |s| match s {
        "auto" => Ok(Threads::Auto),
        _ => match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
            _ => Err("expected `auto` or a positive integer".to_string()),
        },
    })?;
    let output = r.get("output", PathBuf::from("out"), |s| {
        if s.is_empty() {
            Err("output directory must not be empty".to_string())
        } else {
            Ok(PathBuf::from(s))
        }
    })?;

    let kind = r.get("topology.kind", TopologyKind::Random, |s| s.parse())?;
    let nodes = r.get("topology.nodes", DEFAULT_NODES, integer)?;
    let has_edges = r.entries.contains_key("topology.edges");
    let has_degree = r.entries.contains_key("topology.mean_degree");
    let edges = r.get("topology.edges", None, |s| optional(s, integer))?;
    let degree_default = (!has_edges && !has_degree).then_some(DEFAULT_MEAN_DEGREE);
    let mean_degree = r.get("topology.mean_degree", degree_default, |s| {
        optional(s, integer)
    })?;
    let rewire_default = (kind == TopologyKind::SmallWorld).then_some(DEFAULT_REWIRE_PROBABILITY);
    let rewire_probability = r.get("topology.rewire_probability", rewire_default, |s| {
        optional(s, probability)
    })?;
    let max_diameter = r.get("topology.max_diameter", Some(DEFAULT_MAX_DIAMETER), |s| {
        optional(s, integer)
    })?;
    let retries = r.get("topology.retries", DEFAULT_RETRY_BUDGET, integer)?;
    let topology_seed = r.get("topology.seed", None, |s| {
        if s == "derived" {
            Ok(None)
        } else {
            integer(s).map(Some)
        }
    })?;
    let input = r.get("topology.input", None, |s| {
        optional(s, |p| Ok(PathBuf::from(p)))
    })?;

    let kinds = r.get(
        "protocol.kind",
        vec![ProtocolKind::Broadcast],
        protocol_kinds,
    )?;
    let forward_probability = r.get(
        "protocol.forward_probability",
        DEFAULT_FORWARD_PROBABILITY,
        probability,
    )?;
    let fluff_probability = r.get(
        "protocol.fluff_probability",
        DEFAULT_FLUFF_PROBABILITY,
        probability,
    )?;
    let failsafe_wait = r.get("protocol.failsafe_wait", DEFAULT_FAILSAFE_WAIT, integer)?;

    let ttl = r.get("run.ttl", DEFAULT_TTL, integer)?;
    let total_steps = r.get("run.total_steps", DEFAULT_TOTAL_STEPS, integer)?;

    let placement = r.get(
        "adversary.placement",
        Placement::UniformRandom,
        |s| match s {
            "uniform_random" => Ok(Placement::UniformRandom),
            _ => Err("expected `uniform_random`".to_string()),
        },
    )?;
    let policy = r.get("adversary.policy", DropPolicy::DropAll, |s| match s {
        "drop_all" => Ok(DropPolicy::DropAll),
        _ => Err("expected `drop_all`".to_string()),
    })?;
    let fractions = r.get(
        "sweep.fractions",
        Fractions::Range {
            start: 0.01,
            end: 0.99,
            step: 0.01,
        },
        fractions,
    )?;

    let cfg = ExperimentConfig {
        seed,
        threads,
        output,
        topology: TopologySection {
            kind,
            nodes,
            edges,
            mean_degree,
            rewire_probability,
            max_diameter,
            retries,
            seed: topology_seed,
            input,
        },
        protocol: ProtocolSection {
            kinds,
            forward_probability,
            fluff_probability,
            failsafe_wait,
        },
        ttl,
        total_steps,
        placement,
        policy,
        fractions,
    };
    validate(&cfg, &r)?;
    Ok((cfg, r.defaults))
}

fn validate(cfg: &ExperimentConfig, r: &Reader) -> Result<(), ConfigError> {
    let t = &cfg.topology;
    if t.nodes == 0 {
        return Err(r.invariant("topology.nodes", "must be at least 1"));
    }
    if t.rewire_probability.is_some() && t.kind != TopologyKind::SmallWorld {
        return Err(r.invariant(
            "topology.rewire_probability",
            format!("only applies to small_world, not {}", t.kind),
        ));
    }
    if t.input.is_none() {
        if let (Some(m), Some(d)) = (t.edges, t.mean_degree) {
            if d * t.nodes != 2 * m {
                return Err(r.invariant(
                    "topology.mean_degree",
                    format!(
                        "{d} disagrees with {m} edges on {} nodes (expected 2m/n)",
                        t.nodes
                    ),
                ));
            }
        }
        if t.edges.is_none() && t.mean_degree.is_none() {
            return Err(r.invariant("topology.edges", "either edges or mean_degree is required"));
        }
        cfg.topology_spec()
            .validate()
            .map_err(|e| r.invariant("topology.kind", e.to_string()))?;
    }
    if t.retries == 0 {
        return Err(r.invariant("topology.retries", "must be positive"));
    }
    if cfg.ttl == 0 {
        return Err(r.invariant("run.ttl", "must be at least 1"));
    }
    if cfg.total_steps < cfg.ttl {
        return Err(r.invariant(
            "run.total_steps",
            "must cover at least one epoch of ttl steps",
        ));
    }
    if cfg
        .protocol
        .kinds
        .contains(&ProtocolKind::DandelionPlusPlus)
    {
        if cfg.protocol.failsafe_wait == 0 {
            return Err(r.invariant(
                "protocol.failsafe_wait",
                "must be positive for dandelion_pp",
            ));
        }
        if cfg.ttl <= cfg.protocol.failsafe_wait {
            return Err(r.invariant(
                "run.ttl",
                "must exceed protocol.failsafe_wait for dandelion_pp",
            ));
        }
    }
    let values = cfg.fraction_values();
    if values.is_empty() {
        return Err(r.invariant("sweep.fractions", "no attacker fractions"));
    }
    let mut previous = 0.0;
    for v in values {
        if !(v > 0.0 && v < 1.0) {
            return Err(r.invariant("sweep.fractions", format!("{v} is outside (0, 1)")));
        }
        if v <= previous {
            return Err(r.invariant("sweep.fractions", "fractions must strictly increase"));
        }
        previous = v;
    }
    Ok(())
}
