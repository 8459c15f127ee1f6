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

use std::collections::VecDeque;
use std::fmt;

use rayon::prelude::*;

use super::{Graph, NodeId};

/// Longest shortest path of a graph, or `Infinite` when it is disconnected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Diameter {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Diameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diameter::Finite(d) => write!(f, "{d}"),
            Diameter::Infinite => f.write_str("inf"),
        }
    }
}

/// Hop distances from `source`; `None` marks unreachable nodes.
pub fn bfs_distances(g: &Graph, source: NodeId) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u].map(|d| d + 1);
        for &v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Eccentricity of `source`, or `None` if some node is unreachable.
fn eccentricity(
    g: &Graph,
    source: NodeId,
    dist: &mut [u32],
    queue: &mut Vec<NodeId>,
) -> Option<usize> {
    dist.fill(u32::MAX);
    queue.clear();
    dist[source] = 0;
    queue.push(source);
    let mut head = 0;
    let mut far = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        let du = dist[u];
        far = far.max(du);
        for &v in g.neighbors(u) {
            if dist[v] == u32::MAX {
                dist[v] = du + 1;
                queue.push(v);
            }
        }
    }
    (queue.len() == g.node_count()).then_some(far as usize)
}

pub fn is_connected(g: &Graph) -> bool {
    g.node_count() <= 1 || bfs_distances(g, 0).iter().all(Option::is_some)
}

/// All-pairs BFS diameter. Sources are processed in parallel.
pub fn diameter(g: &Graph) -> Diameter {
    if !is_connected(g) {
        return Diameter::Infinite;
    }
    let n = g.node_count();
    let far = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![u32::MAX; n], Vec::with_capacity(n)),
            |(dist, queue), s| eccentricity(g, s, dist, queue).unwrap_or(usize::MAX),
        )
        .max()
        .unwrap_or(0);
    Diameter::Finite(far)
}

/// `diameter(g) <= bound`, stopping at the first source whose eccentricity
/// exceeds the bound.
pub fn diameter_at_most(g: &Graph, bound: usize) -> bool {
    if !is_connected(g) {
        return false;
    }
    let n = g.node_count();
    (0..n).into_par_iter().all(|s| {
        let mut dist = vec![u32::MAX; n];
        let mut queue = Vec::with_capacity(n);
        eccentricity(g, s, &mut dist, &mut queue).is_some_and(|e| e <= bound)
    })
}
