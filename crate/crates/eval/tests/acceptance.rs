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

//! Acceptance suite at desk scale: 1000 nodes, mean degree 8 and 16, ttl 16,
//! 312 epochs per point, attacker fractions 5% to 95% in 5% steps.
//!
//! Runs without the libtest harness so every criterion prints exactly one
//! PASS or FAIL line. Exits nonzero if any criterion fails.

use std::collections::VecDeque;
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use gossipsim_core::adversary::{sybil_count, SybilSet};
use gossipsim_core::config::{parse_config_with_overrides, preset, ExperimentConfig};
use gossipsim_core::engine::{run_epoch, run_simulation, EpochConfig, SimulationRun, SweepOutcome};
use gossipsim_core::experiment::{build_graph, run_experiment, run_sweeps};
use gossipsim_core::metrics::{aggregate, CoveragePoint};
use gossipsim_core::protocol::{ProtocolConfig, ProtocolKind};
use gossipsim_core::seed::rng_from_seed;
use gossipsim_core::topology::{diameter, generate_random, Diameter, Graph, NodeId};
use rand::seq::SliceRandom;
use rand::Rng;

const DESK_NODES: &str = "1000";
const DESK_FRACTIONS: &str = "0.05:0.95:0.05";

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// A bundled preset shrunk to desk scale, with extra overrides on top.
fn desk(name: &str, degree: usize, extra: &[(&str, &str)]) -> ExperimentConfig {
    let edges = (1000 * degree / 2).to_string();
    let mut overrides: Vec<(String, String)> = vec![
        ("topology.nodes".into(), DESK_NODES.into()),
        ("topology.edges".into(), edges),
        ("sweep.fractions".into(), DESK_FRACTIONS.into()),
    ];
    for (k, v) in extra {
        overrides.retain(|(key, _)| key != k);
        overrides.push(((*k).into(), (*v).into()));
    }
    let text = preset(name).expect("bundled preset").text;
    parse_config_with_overrides(text, &overrides)
        .expect("desk config")
        .0
}

fn sweep(cfg: &ExperimentConfig) -> Vec<SweepOutcome<f64>> {
    run_sweeps(cfg).expect("sweep runs").1
}

fn by_protocol<'a>(sweeps: &'a [SweepOutcome<f64>], name: &str) -> &'a [CoveragePoint<f64>] {
    &sweeps
        .iter()
        .find(|s| s.result.protocol == name)
        .unwrap_or_else(|| panic!("no {name} sweep"))
        .result
        .points
}

/// Honest nodes within `ttl` hops of `victim` along paths whose interior
/// nodes are honest. Written independently of the engine.
fn bfs_oracle(g: &Graph, sybils: &[bool], victim: NodeId, ttl: u32) -> Vec<NodeId> {
    let mut dist = vec![u32::MAX; g.node_count()];
    dist[victim] = 0;
    let mut queue = VecDeque::from([victim]);
    while let Some(u) = queue.pop_front() {
        if sybils[u] || dist[u] == ttl {
            continue;
        }
        for &v in g.neighbors(u) {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (0..g.node_count())
        .filter(|&v| dist[v] != u32::MAX && !sybils[v])
        .collect()
}

fn criterion_1() -> Verdict {
    let mut rng = rng_from_seed(0xacce_0001);
    let broadcast = ProtocolConfig::new(ProtocolKind::Broadcast);
    let mut mismatches = 0;
    for instance in 0..200u64 {
        let n = rng.gen_range(2..=50usize);
        let max_m = n * (n - 1) / 2;
        let m = rng.gen_range(n / 2..=max_m.min(3 * n)).min(max_m);
        let g = generate_random(n, m, rng.gen()).expect("graph");
        let mut order: Vec<NodeId> = (0..n).collect();
        order.shuffle(&mut rng);
        let k = rng.gen_range(0..n);
        let sybil_ids = &order[..k];
        let victim = order[k];
        let mut is_sybil = vec![false; n];
        for &s in sybil_ids {
            is_sybil[s] = true;
        }
        let ttl = rng.gen_range(1..=8u32);
        let sybils = SybilSet::from_ids(n, sybil_ids.iter().copied());
        let ecfg = EpochConfig {
            ttl,
            victim,
            epoch_index: instance,
        };
        let result =
            run_epoch(&g, &broadcast, &sybils, &ecfg, &mut rng_from_seed(instance)).expect("epoch");
        if result.reached != bfs_oracle(&g, &is_sybil, victim, ttl) {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("{mismatches} mismatches in 200 instances"),
    )
}

fn criterion_2() -> Verdict {
    let cfg = desk("fig1", 8, &[("protocol.kind", "broadcast")]);
    let built = build_graph(&cfg).expect("graph");
    let d = diameter(&built.graph);
    let run = SimulationRun {
        attacker_fraction: 0.0,
        ..cfg.simulation_template()
    };
    let result = run_simulation(&built.graph, &cfg.protocol_configs()[0], &run).expect("run");
    let point = aggregate(0.0f64, &result.epochs, result.honest_count()).expect("aggregate");
    let pass = matches!(d, Diameter::Finite(x) if x <= 16)
        && point.mean_coverage == 1.0
        && point.std_dev == 0.0;
    verdict(
        pass,
        format!(
            "diameter {d:?}, mean {} std {} over {} epochs",
            point.mean_coverage, point.std_dev, point.epoch_count
        ),
    )
}

fn criterion_3() -> Verdict {
    let reference = sweep(&desk("fig1", 8, &[("protocol.kind", "broadcast")]));
    let reference = by_protocol(&reference, "broadcast");
    let legs = [
        ("fixed_probability", "protocol.forward_probability"),
        ("probabilistic_broadcast", "protocol.forward_probability"),
        ("dandelion", "protocol.fluff_probability"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, key) in legs {
        let sweeps = sweep(&desk("fig1", 8, &[("protocol.kind", kind), (key, "1")]));
        let points = by_protocol(&sweeps, kind);
        let differing = points
            .iter()
            .zip(reference)
            .filter(|(a, b)| {
                (a.mean_coverage, a.std_dev, a.min, a.max)
                    != (b.mean_coverage, b.std_dev, b.min, b.max)
            })
            .count();
        pass &= differing == 0;
        parts.push(format!(
            "{kind}: {differing}/{} points differ",
            points.len()
        ));
    }
    verdict(pass, parts.join("; "))
}

fn coverage_at(points: &[CoveragePoint<f64>], f: f64) -> f64 {
    points
        .iter()
        .find(|p| (p.attacker_fraction - f).abs() < 1e-9)
        .map(|p| p.mean_coverage)
        .expect("fraction on grid")
}

fn criterion_4(deg8: &[SweepOutcome<f64>]) -> Verdict {
    let d = by_protocol(deg8, "dandelion");
    let fp = by_protocol(deg8, "fixed_probability");
    let pb = by_protocol(deg8, "probabilistic_broadcast");
    let mut worst_gap = f64::INFINITY;
    let mut worst_mid_gap = f64::INFINITY;
    let mut pass = true;
    for p in d.iter().filter(|p| p.attacker_fraction >= 0.1 - 1e-9) {
        let f = p.attacker_fraction;
        let gap = coverage_at(fp, f).min(coverage_at(pb, f)) - p.mean_coverage;
        worst_gap = worst_gap.min(gap);
        pass &= gap > 0.0;
        if (0.2 - 1e-9..=0.6 + 1e-9).contains(&f) {
            worst_mid_gap = worst_mid_gap.min(gap);
            pass &= gap >= 0.05;
        }
    }
    verdict(
        pass,
        format!("smallest lead of FP/PB over Dandelion: {worst_gap:.4} (>= 10%), {worst_mid_gap:.4} (20%..60%)"),
    )
}

fn criterion_5(deg8: &[SweepOutcome<f64>]) -> Verdict {
    let pp = by_protocol(deg8, "dandelion_pp");
    let pb = by_protocol(deg8, "probabilistic_broadcast");
    let (mut worst, mut at) = (0.0f64, 0.0);
    for p in pp.iter().filter(|p| p.attacker_fraction <= 0.7 + 1e-9) {
        let diff = (p.mean_coverage - coverage_at(pb, p.attacker_fraction)).abs();
        if diff > worst {
            (worst, at) = (diff, p.attacker_fraction);
        }
    }
    verdict(
        worst <= 0.10,
        format!("max |D++ - PB| = {worst:.4} at {:.0}%", at * 100.0),
    )
}

fn criterion_6(deg8: &[SweepOutcome<f64>]) -> Verdict {
    let fp = by_protocol(deg8, "fixed_probability");
    let pb = by_protocol(deg8, "probabilistic_broadcast");
    let mean = fp
        .iter()
        .zip(pb)
        .map(|(a, b)| a.mean_coverage - b.mean_coverage)
        .sum::<f64>()
        / fp.len() as f64;
    verdict(mean >= 0.0, format!("mean(FP - PB) = {mean:.4}"))
}

fn criterion_7(deg8: &[SweepOutcome<f64>], deg16: &[SweepOutcome<f64>]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["fixed_probability", "probabilistic_broadcast", "broadcast"] {
        let hi = by_protocol(deg16, name);
        let lo = by_protocol(deg8, name);
        let floor = hi
            .iter()
            .filter(|p| p.attacker_fraction <= 0.65 + 1e-9)
            .map(|p| p.mean_coverage)
            .fold(f64::INFINITY, f64::min);
        let dominated = hi
            .iter()
            .zip(lo)
            .filter(|(h, l)| h.mean_coverage < l.mean_coverage)
            .count();
        pass &= floor >= 0.90 && dominated == 0;
        parts.push(format!(
            "{name}: min {floor:.4} up to 65%, {dominated} points below degree 8"
        ));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_8(deg8: &[SweepOutcome<f64>]) -> Verdict {
    let sw = sweep(&desk(
        "fig7",
        8,
        &[(
            "protocol.kind",
            "broadcast, fixed_probability, probabilistic_broadcast, dandelion",
        )],
    ));
    let mut pass = true;
    let mut parts = Vec::new();
    for name in [
        "broadcast",
        "fixed_probability",
        "probabilistic_broadcast",
        "dandelion",
    ] {
        let (mut worst, mut at) = (0.0f64, 0.0);
        for (a, b) in by_protocol(deg8, name).iter().zip(by_protocol(&sw, name)) {
            let diff = (a.mean_coverage - b.mean_coverage).abs();
            if diff > worst {
                (worst, at) = (diff, a.attacker_fraction);
            }
        }
        pass &= worst <= 0.10;
        parts.push(format!("{name}: {worst:.4} at {:.0}%", at * 100.0));
    }
    verdict(
        pass,
        format!("max |random - small world|: {}", parts.join(", ")),
    )
}

fn csv_bytes(cfg: &ExperimentConfig) -> Vec<(String, Vec<u8>)> {
    run_experiment(cfg, &[]).expect("experiment");
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&cfg.output)
        .expect("output dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn criterion_9() -> Verdict {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = |name: &str| tmp.path().join(name).display().to_string();
    let a = csv_bytes(&desk("fig1", 8, &[("output", &out("a"))]));
    let b = csv_bytes(&desk("fig1", 8, &[("output", &out("b"))]));
    let t1 = csv_bytes(&desk(
        "fig1",
        8,
        &[("output", &out("t1")), ("threads", "1")],
    ));
    let t8 = csv_bytes(&desk(
        "fig1",
        8,
        &[("output", &out("t8")), ("threads", "8")],
    ));
    let repeat = !a.is_empty() && a == b;
    let threads = !t1.is_empty() && t1 == t8;
    verdict(
        repeat && threads,
        format!("repeat run identical: {repeat}; threads 1 vs 8 identical: {threads}"),
    )
}

fn criterion_10() -> Verdict {
    let cfg = desk(
        "fig1",
        8,
        &[
            ("protocol.kind", "broadcast"),
            ("sweep.fractions", "0.01:0.99:0.01"),
        ],
    );
    let outcome = &sweep(&cfg)[0];
    let fractions = cfg.fraction_values();
    let bad = fractions
        .iter()
        .zip(&outcome.sybil_counts)
        .filter(|(&f, &c)| {
            c != (f * 1000.0 + 0.5).floor() as usize || c != sybil_count(f, 1000).unwrap()
        })
        .count();
    verdict(
        bad == 0 && fractions.len() == outcome.sybil_counts.len(),
        format!("{bad} of {} sweep points off round(f * n)", fractions.len()),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let all = "broadcast, fixed_probability, probabilistic_broadcast, dandelion, dandelion_pp";
    let deg8 = sweep(&desk("fig1", 8, &[("protocol.kind", all)]));
    let deg16 = sweep(&desk("fig4", 16, &[("protocol.kind", all)]));

    let results = [
        ("1 broadcast matches BFS oracle", criterion_1()),
        ("2 no-attack baseline", criterion_2()),
        ("3 degenerate probabilities equal broadcast", criterion_3()),
        ("4 dandelion below FP and PB", criterion_4(&deg8)),
        (
            "5 dandelion++ within 0.10 of PB up to 70%",
            criterion_5(&deg8),
        ),
        ("6 FP at least PB on average", criterion_6(&deg8)),
        (
            "7 degree-16 resilience and dominance",
            criterion_7(&deg8, &deg16),
        ),
        ("8 random vs small world within 0.10", criterion_8(&deg8)),
        ("9 byte-identical reruns", criterion_9()),
        ("10 sybil counts exact", criterion_10()),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!(
            "criterion {name}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
