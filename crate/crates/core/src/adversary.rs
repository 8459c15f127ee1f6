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

//! Sybil placement and the message-dropping policy.

use rand::seq::index;
use thiserror::Error;

use crate::protocol::ForwardDecision;
use crate::seed::rng_from_seed;
use crate::topology::{Graph, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum AdversaryError {
    #[error("attacker fraction {0} outside [0, 1)")]
    FractionOutOfRange(f64),
    #[error("fraction {fraction} of {nodes} nodes leaves no honest node")]
    NoHonestNodes { fraction: f64, nodes: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Placement {
    #[default]
    UniformRandom,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DropPolicy {
    #[default]
    DropAll,
}

impl Placement {
    pub fn as_str(self) -> &'static str {
        "uniform_random"
    }
}

impl DropPolicy {
    pub fn as_str(self) -> &'static str {
        "drop_all"
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversaryConfig {
    pub fraction: f64,
    pub placement: Placement,
    pub policy: DropPolicy,
    pub seed: u64,
}

impl AdversaryConfig {
    pub fn new(fraction: f64, seed: u64) -> Self {
        AdversaryConfig {
            fraction,
            placement: Placement::UniformRandom,
            policy: DropPolicy::DropAll,
            seed,
        }
    }
}

/// Number of Sybils for a fraction of `node_count`, rounding half up.
pub fn sybil_count(fraction: f64, node_count: usize) -> Result<usize, AdversaryError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(AdversaryError::FractionOutOfRange(fraction));
    }
    let count = (fraction * node_count as f64 + 0.5).floor() as usize;
    if count >= node_count {
        return Err(AdversaryError::NoHonestNodes {
            fraction,
            nodes: node_count,
        });
    }
    Ok(count)
}

/// Attacker-controlled identities. Immutable once placed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SybilSet {
    ids: Vec<NodeId>,
    mask: Vec<bool>,
}

impl SybilSet {
    pub fn none(node_count: usize) -> Self {
        SybilSet {
            ids: Vec::new(),
            mask: vec![false; node_count],
        }
    }

    pub fn from_ids<I: IntoIterator<Item = NodeId>>(node_count: usize, ids: I) -> Self {
        let mut mask = vec![false; node_count];
        for id in ids {
            mask[id] = true;
        }
        let ids = (0..node_count).filter(|&v| mask[v]).collect();
        SybilSet { ids, mask }
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.mask.get(node).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Sorted Sybil ids.
    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    /// Sorted honest ids.
    pub fn honest(&self) -> Vec<NodeId> {
        (0..self.mask.len()).filter(|&v| !self.mask[v]).collect()
    }

    pub fn honest_count(&self) -> usize {
        self.mask.len() - self.ids.len()
    }
}

/// Samples exactly `round(fraction * n)` distinct nodes uniformly.
pub fn place_sybils(g: &Graph, cfg: &AdversaryConfig) -> Result<SybilSet, AdversaryError> {
    let n = g.node_count();
    let count = sybil_count(cfg.fraction, n)?;
    let mut rng = rng_from_seed(cfg.seed);
    match cfg.placement {
        Placement::UniformRandom => {
            let picked = index::sample(&mut rng, n, count);
            Ok(SybilSet::from_ids(n, picked))
        }
    }
}

/// Applies the drop policy to a decision taken by `node`.
pub fn filter_decision(
    node: NodeId,
    sybils: &SybilSet,
    decision: ForwardDecision,
) -> ForwardDecision {
    if sybils.contains(node) {
        ForwardDecision::empty()
    } else {
        decision
    }
}
