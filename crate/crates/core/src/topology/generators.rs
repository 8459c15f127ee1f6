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

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{Graph, NodeId, TopologyError};
use crate::seed::rng_from_seed;

const K_REGULAR_ATTEMPTS: usize = 100;

/// Inverse of the triangular numbering `k = v(v-1)/2 + u`, `u < v`.
fn pair_from_index(k: usize) -> (NodeId, NodeId) {
    let mut v = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0) as usize;
    while v * (v - 1) / 2 > k {
        v -= 1;
    }
    while (v + 1) * v / 2 <= k {
        v += 1;
    }
    (k - v * (v - 1) / 2, v)
}

/// Uniform G(n, m) graph: exactly `m` distinct edges drawn without
/// replacement from all `n(n-1)/2` node pairs.
pub fn generate_random(n: usize, m: usize, seed: u64) -> Result<Graph, TopologyError> {
    if n == 0 {
        return Err(TopologyError::InvalidParameter(
            "node count must be at least 1".into(),
        ));
    }
    let max_edges = n * (n - 1) / 2;
    if m > max_edges {
        return Err(TopologyError::InvalidParameter(format!(
            "{m} edges exceed the {max_edges} possible on {n} nodes"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let picks = index::sample(&mut rng, max_edges, m);
    Graph::from_edges(n, picks.into_iter().map(pair_from_index))
}

/// Watts–Strogatz small world: ring lattice with `k` nearest neighbors,
/// each lattice edge rewired with probability `p_rewire` to a uniform
/// endpoint that is neither the source nor an existing neighbor.
pub fn generate_small_world(
    n: usize,
    k: usize,
    p_rewire: f64,
    seed: u64,
) -> Result<Graph, TopologyError> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(TopologyError::InvalidParameter(format!(
            "small-world degree must be even and at least 2, got {k}"
        )));
    }
    if k >= n {
        return Err(TopologyError::InvalidParameter(format!(
            "small-world degree {k} must be below node count {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p_rewire) {
        return Err(TopologyError::InvalidParameter(format!(
            "rewire probability {p_rewire} outside [0, 1]"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !adj[u].contains(&v) || rng.gen::<f64>() >= p_rewire {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let mut w = rng.gen_range(0..n);
            while w == u || adj[u].contains(&w) {
                w = rng.gen_range(0..n);
            }
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, s)| s.range(u + 1..).map(move |&v| (u, v)))
        .collect::<Vec<_>>();
    Graph::from_edges(n, edges)
}

/// One pass of the stub-pairing construction. Returns `None` when the
/// leftover stubs can no longer be paired without a loop or duplicate.
fn try_pairing<R: Rng>(n: usize, k: usize, rng: &mut R) -> Option<BTreeSet<(NodeId, NodeId)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<NodeId> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<NodeId, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && edges.insert((a, b)) {
                continue;
            }
            *leftover.entry(a).or_default() += 1;
            *leftover.entry(b).or_default() += 1;
        }
        let open: Vec<NodeId> = leftover.keys().copied().collect();
        let pairable = open.iter().enumerate().any(|(i, &a)| {
            open[..i]
                .iter()
                .any(|&b| !edges.contains(&(b.min(a), b.max(a))))
        });
        if !leftover.is_empty() && !pairable {
            return None;
        }
        stubs = leftover
            .into_iter()
            .flat_map(|(v, c)| std::iter::repeat_n(v, c))
            .collect();
    }
    Some(edges)
}

/// Random k-regular graph by stub pairing with local rejection of loops
/// and duplicate edges, restarted up to a fixed budget.
pub fn generate_k_regular(n: usize, k: usize, seed: u64) -> Result<Graph, TopologyError> {
    if n == 0 || k >= n {
        return Err(TopologyError::InvalidParameter(format!(
            "k-regular degree {k} must be below node count {n}"
        )));
    }
    if !(n * k).is_multiple_of(2) {
        return Err(TopologyError::InvalidParameter(format!(
            "n * k must be even, got {n} * {k}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..K_REGULAR_ATTEMPTS {
        if let Some(edges) = try_pairing(n, k, &mut rng) {
            return Graph::from_edges(n, edges);
        }
    }
    Err(TopologyError::GenerationFailed {
        attempts: K_REGULAR_ATTEMPTS,
        reason: format!("no simple {k}-regular pairing found on {n} nodes"),
    })
}

/// Barabási–Albert preferential attachment: a star on `attach + 1` nodes,
/// then every new node links to `attach` distinct degree-weighted targets.
pub fn generate_scale_free(n: usize, attach: usize, seed: u64) -> Result<Graph, TopologyError> {
    if attach == 0 || attach >= n {
        return Err(TopologyError::InvalidParameter(format!(
            "attachment count {attach} must be in 1..{n}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut edges: Vec<(NodeId, NodeId)> = (1..=attach).map(|v| (0, v)).collect();
    let mut repeated: Vec<NodeId> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    for source in attach + 1..n {
        let mut targets = HashSet::with_capacity(attach);
        let mut ordered = Vec::with_capacity(attach);
        while ordered.len() < attach {
            let t = repeated[rng.gen_range(0..repeated.len())];
            if targets.insert(t) {
                ordered.push(t);
            }
        }
        for &t in &ordered {
            edges.push((t, source));
            repeated.push(t);
            repeated.push(source);
        }
    }
    Graph::from_edges(n, edges)
}
