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

//! Coverage statistics, CSV results and plot-script emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::EpochResult;
use crate::num::Scalar;

pub const CSV_HEADER: &str = "protocol,topology,fraction,mean_coverage,std_dev,min,max,epochs,seed";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("coverage is undefined without honest nodes")]
    NoHonestNodes,
    #[error("{reached} reached nodes exceed {honest} honest nodes")]
    ReachedExceedsHonest { reached: usize, honest: usize },
    #[error("cannot aggregate an empty list of epochs")]
    EmptyAggregation,
    #[error("csv line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("inconsistent sweeps: {0}")]
    Consistency(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Aggregated coverage at one attacker fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct CoveragePoint<T> {
    pub attacker_fraction: T,
    pub mean_coverage: T,
    pub std_dev: T,
    pub epoch_count: usize,
    pub min: T,
    pub max: T,
}

/// Coverage curve of one protocol over one topology.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult<T> {
    pub protocol: String,
    pub topology: String,
    /// Ordered by strictly increasing fraction.
    pub points: Vec<CoveragePoint<T>>,
    /// Hash of the inputs that produced the sweep; absent when read back
    /// from a CSV file.
    pub fingerprint: Option<String>,
    pub seed: u64,
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn fingerprint(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Share of honest nodes reached in one epoch.
pub fn coverage<T: Scalar>(result: &EpochResult, honest_count: usize) -> Result<T, MetricsError> {
    if honest_count == 0 {
        return Err(MetricsError::NoHonestNodes);
    }
    let reached = result.reached.len();
    if reached > honest_count {
        return Err(MetricsError::ReachedExceedsHonest {
            reached,
            honest: honest_count,
        });
    }
    Ok(T::ratio(reached, honest_count))
}

/// Mean, population standard deviation, min and max of per-epoch coverage.
pub fn aggregate<T: Scalar>(
    attacker_fraction: T,
    results: &[EpochResult],
    honest_count: usize,
) -> Result<CoveragePoint<T>, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyAggregation);
    }
    let values = results
        .iter()
        .map(|r| coverage::<T>(r, honest_count))
        .collect::<Result<Vec<T>, _>>()?;
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let count = T::from_count(values.len());
    if min == max {
        return Ok(CoveragePoint {
            attacker_fraction,
            mean_coverage: min,
            std_dev: T::zero(),
            epoch_count: values.len(),
            min,
            max,
        });
    }
    let mean = values.iter().copied().fold(T::zero(), |a, b| a + b) / count;
    let variance = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .fold(T::zero(), |a, b| a + b)
        / count;
    Ok(CoveragePoint {
        attacker_fraction,
        mean_coverage: mean.max(min).min(max),
        std_dev: variance.sqrt(),
        epoch_count: values.len(),
        min,
        max,
    })
}

pub fn write_csv<T: Scalar, W: Write>(
    sweep: &SweepResult<T>,
    mut sink: W,
) -> Result<(), MetricsError> {
    writeln!(sink, "{CSV_HEADER}")?;
    for p in &sweep.points {
        writeln!(
            sink,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            sweep.protocol,
            sweep.topology,
            p.attacker_fraction,
            p.mean_coverage,
            p.std_dev,
            p.min,
            p.max,
            p.epoch_count,
            sweep.seed
        )?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_csv`].
pub fn parse_csv<T: Scalar, R: BufRead>(source: R) -> Result<SweepResult<T>, MetricsError> {
    let mut lines = source.lines().enumerate();
    let header = lines.next().map(|(_, line)| line).transpose()?;
    match header {
        Some(line) if line.trim() == CSV_HEADER => {}
        _ => {
            return Err(MetricsError::Parse {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut sweep: Option<SweepResult<T>> = None;
    for (index, line) in lines {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| MetricsError::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 9 {
            return Err(err(format!("expected 9 fields, found {}", fields.len())));
        }
        let real = |i: usize| -> Result<T, MetricsError> {
            fields[i]
                .parse::<T>()
                .map_err(|_| err(format!("`{}` is not a number", fields[i])))
        };
        let point = CoveragePoint {
            attacker_fraction: real(2)?,
            mean_coverage: real(3)?,
            std_dev: real(4)?,
            min: real(5)?,
            max: real(6)?,
            epoch_count: fields[7]
                .parse()
                .map_err(|_| err(format!("`{}` is not an epoch count", fields[7])))?,
        };
        let seed: u64 = fields[8]
            .parse()
            .map_err(|_| err(format!("`{}` is not a seed", fields[8])))?;
        let sweep = sweep.get_or_insert_with(|| SweepResult {
            protocol: fields[0].to_string(),
            topology: fields[1].to_string(),
            points: Vec::new(),
            fingerprint: None,
            seed,
        });
        if sweep.protocol != fields[0] || sweep.topology != fields[1] || sweep.seed != seed {
            return Err(err("row belongs to a different sweep".into()));
        }
        sweep.points.push(point);
    }
    sweep.ok_or(MetricsError::Parse {
        line: 1,
        message: "no data rows".into(),
    })
}

/// File name a sweep is stored under: `<protocol>_<topology>.csv`.
pub fn csv_file_name<T>(sweep: &SweepResult<T>) -> String {
    format!("{}_{}.csv", sweep.protocol, sweep.topology)
}

fn fraction_grid<T: Scalar>(sweep: &SweepResult<T>) -> Vec<String> {
    sweep
        .points
        .iter()
        .map(|p| format!("{:.6}", p.attacker_fraction))
        .collect()
}

/// Writes a matplotlib script that draws one coverage-vs-attackers figure per
/// topology, one curve per protocol, reading the sweeps' CSV files from the
/// script's own directory.
pub fn emit_plot_script<T: Scalar, W: Write>(
    sweeps: &[SweepResult<T>],
    mut sink: W,
) -> Result<(), MetricsError> {
    let first = sweeps
        .first()
        .ok_or_else(|| MetricsError::Consistency("no sweeps to plot".into()))?;
    let grid = fraction_grid(first);
    for s in &sweeps[1..] {
        if fraction_grid(s) != grid {
            return Err(MetricsError::Consistency(format!(
                "{} on {} uses a different fraction grid than {} on {}",
                s.protocol, s.topology, first.protocol, first.topology
            )));
        }
    }
    let mut by_topology: BTreeMap<&str, Vec<(String, String)>> = BTreeMap::new();
    for s in sweeps {
        by_topology
            .entry(s.topology.as_str())
            .or_default()
            .push((s.protocol.clone(), csv_file_name(s)));
    }

    let mut script = String::new();
    script.push_str(
        r#"#!/usr/bin/env python3
# Generated by gossipsim. Renders coverage against attacker share.
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
BANDS = "--bands" in sys.argv

LABELS = {
    "broadcast": "Broadcast",
    "fixed_probability": "Fixed Probability (FP)",
    "probabilistic_broadcast": "Probabilistic Broadcast (PB)",
    "dandelion": "Dandelion",
    "dandelion_pp": "Dandelion++",
}


def load(name):
    xs, mean, lo, hi = [], [], [], []
    with open(os.path.join(HERE, name), newline="") as f:
        for row in csv.DictReader(f):
            xs.append(100.0 * float(row["fraction"]))
            mean.append(100.0 * float(row["mean_coverage"]))
            lo.append(100.0 * float(row["min"]))
            hi.append(100.0 * float(row["max"]))
    return xs, mean, lo, hi


FIGURES = {
"#,
    );
    for (topology, curves) in &by_topology {
        let _ = writeln!(script, "    {topology:?}: [");
        for (protocol, file) in curves {
            let _ = writeln!(script, "        ({protocol:?}, {file:?}),");
        }
        script.push_str("    ],\n");
    }
    script.push_str(
        r#"}

for topology, curves in FIGURES.items():
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for protocol, name in curves:
        xs, mean, lo, hi = load(name)
        (line,) = ax.plot(xs, mean, marker=".", label=LABELS.get(protocol, protocol))
        if BANDS:
            ax.fill_between(xs, lo, hi, color=line.get_color(), alpha=0.15)
    ax.set_xlim(1, 99)
    ax.set_ylim(0, 100)
    ax.set_xlabel("% malicious nodes")
    ax.set_ylabel("% honest nodes reached")
    ax.set_title("Coverage, overlay " + topology)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, "coverage_" + topology + ".png"), dpi=150)
    plt.close(fig)
"#,
    );
    sink.write_all(script.as_bytes())?;
    sink.flush()?;
    Ok(())
}
