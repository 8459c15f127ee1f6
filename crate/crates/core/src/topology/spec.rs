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

use std::fmt;
use std::str::FromStr;

use super::generators::{
    generate_k_regular, generate_random, generate_scale_free, generate_small_world,
};
use super::{diameter_at_most, is_connected, Graph, TopologyError};
use crate::seed::{derive_seed, stream};

pub const DEFAULT_REWIRE_PROBABILITY: f64 = 0.1;
pub const DEFAULT_RETRY_BUDGET: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Random,
    SmallWorld,
    KRegular,
    ScaleFree,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Random => "random",
            TopologyKind::SmallWorld => "small_world",
            TopologyKind::KRegular => "k_regular",
            TopologyKind::ScaleFree => "scale_free",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(TopologyKind::Random),
            "small_world" => Ok(TopologyKind::SmallWorld),
            "k_regular" => Ok(TopologyKind::KRegular),
            "scale_free" => Ok(TopologyKind::ScaleFree),
            other => Err(format!(
                "unknown topology kind `{other}` (expected random, small_world, k_regular or scale_free)"
            )),
        }
    }
}

/// Full description of an overlay to generate.
///
/// Either `edge_count` or `mean_degree` must be set; when both are, they
/// must agree (`mean_degree * node_count == 2 * edge_count`).
#[derive(Clone, Debug, PartialEq)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub node_count: usize,
    pub edge_count: Option<usize>,
    pub mean_degree: Option<usize>,
    /// Small-world only.
    pub rewire_probability: Option<f64>,
    pub max_diameter: Option<usize>,
    pub retry_budget: usize,
    pub seed: u64,
}

impl TopologySpec {
    pub fn new(kind: TopologyKind, node_count: usize, edge_count: usize, seed: u64) -> Self {
        TopologySpec {
            kind,
            node_count,
            edge_count: Some(edge_count),
            mean_degree: None,
            rewire_probability: None,
            max_diameter: None,
            retry_budget: DEFAULT_RETRY_BUDGET,
            seed,
        }
    }

    pub fn with_max_diameter(mut self, max_diameter: usize) -> Self {
        self.max_diameter = Some(max_diameter);
        self
    }

    pub fn with_rewire_probability(mut self, p: f64) -> Self {
        self.rewire_probability = Some(p);
        self
    }

    /// Edge count implied by these parameters, after the consistency checks.
    pub fn resolved_edge_count(&self) -> Result<usize, TopologyError> {
        let n = self.node_count;
        match (self.edge_count, self.mean_degree) {
            (Some(m), Some(d)) if d * n != 2 * m => Err(TopologyError::InvalidParameter(format!(
                "mean degree {d} inconsistent with {m} edges on {n} nodes"
            ))),
            (Some(m), _) => Ok(m),
            (None, Some(d)) if !(d * n).is_multiple_of(2) => Err(TopologyError::InvalidParameter(
                format!("mean degree {d} on {n} nodes gives a fractional edge count"),
            )),
            (None, Some(d)) => Ok(d * n / 2),
            (None, None) => Err(TopologyError::InvalidParameter(
                "either edge count or mean degree is required".into(),
            )),
        }
    }

    /// Degree implied by `2m / n` for generators that need an integer one.
    fn integral_degree(&self) -> Result<usize, TopologyError> {
        let m = self.resolved_edge_count()?;
        let n = self.node_count.max(1);
        if (2 * m) % n != 0 {
            return Err(TopologyError::InvalidParameter(format!(
                "{} requires 2m/n to be an integer, got 2*{m}/{n}",
                self.kind
            )));
        }
        Ok(2 * m / n)
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.node_count == 0 {
            return Err(TopologyError::InvalidParameter(
                "node count must be at least 1".into(),
            ));
        }
        self.resolved_edge_count()?;
        match (self.kind, self.rewire_probability) {
            (TopologyKind::SmallWorld, Some(p)) if !(0.0..=1.0).contains(&p) => Err(
                TopologyError::InvalidParameter(format!("rewire probability {p} outside [0, 1]")),
            ),
            (TopologyKind::SmallWorld, _) | (_, None) => Ok(()),
            (kind, Some(_)) => Err(TopologyError::InvalidParameter(format!(
                "rewire probability only applies to small_world, not {kind}"
            ))),
        }?;
        if self.retry_budget == 0 {
            return Err(TopologyError::InvalidParameter(
                "retry budget must be positive".into(),
            ));
        }
        Ok(())
    }

    /// One unconstrained draw from the generator with the given seed.
    pub fn generate_once(&self, seed: u64) -> Result<Graph, TopologyError> {
        self.validate()?;
        let n = self.node_count;
        match self.kind {
            TopologyKind::Random => generate_random(n, self.resolved_edge_count()?, seed),
            TopologyKind::SmallWorld => generate_small_world(
                n,
                self.integral_degree()?,
                self.rewire_probability
                    .unwrap_or(DEFAULT_REWIRE_PROBABILITY),
                seed,
            ),
            TopologyKind::KRegular => generate_k_regular(n, self.integral_degree()?, seed),
            TopologyKind::ScaleFree => {
                let degree = self.integral_degree()?;
                generate_scale_free(n, (degree / 2).max(1), seed)
            }
        }
    }

    /// Short descriptor used in result files, e.g. `random-n10000-m40000`.
    pub fn label(&self) -> String {
        let m = self
            .resolved_edge_count()
            .map(|m| m.to_string())
            .unwrap_or_else(|_| "?".into());
        format!("{}-n{}-m{}", self.kind, self.node_count, m)
    }
}

/// Graph plus the number of rejected draws it took to meet the constraints.
#[derive(Clone, Debug)]
pub struct ConstrainedGraph {
    pub graph: Graph,
    pub retries: usize,
}

/// Draws graphs with derived sub-seeds until one is connected and, if
/// `max_diameter` is set, no wider than it.
pub fn generate_with_constraints(spec: &TopologySpec) -> Result<ConstrainedGraph, TopologyError> {
    spec.validate()?;
    let mut any_connected = false;
    for attempt in 0..spec.retry_budget {
        let seed = derive_seed(spec.seed, stream::ATTEMPT, attempt as u64);
        let graph = spec.generate_once(seed)?;
        if !is_connected(&graph) {
            continue;
        }
        any_connected = true;
        if spec
            .max_diameter
            .is_none_or(|d| diameter_at_most(&graph, d))
        {
            return Ok(ConstrainedGraph {
                graph,
                retries: attempt,
            });
        }
    }
    let constraint = match spec.max_diameter {
        Some(d) if any_connected => format!("max_diameter <= {d}"),
        _ => "connected".to_string(),
    };
    Err(TopologyError::ConstraintUnsatisfiable {
        constraint,
        attempts: spec.retry_budget,
    })
}
