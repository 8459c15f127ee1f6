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

//! Overlay topologies: the undirected graphs messages travel over.
//!
//! Generators are pure functions of their parameters and a seed. Graphs are
//! immutable once built; adjacency lists are kept sorted so every traversal
//! order is reproducible.

mod analysis;
mod edge_list;
mod generators;
mod spec;

use thiserror::Error;

pub use analysis::{bfs_distances, diameter, diameter_at_most, is_connected, Diameter};
pub use edge_list::{load_edge_list, save_edge_list};
pub use generators::{
    generate_k_regular, generate_random, generate_scale_free, generate_small_world,
};
pub use spec::{
    generate_with_constraints, ConstrainedGraph, TopologyKind, TopologySpec, DEFAULT_RETRY_BUDGET,
    DEFAULT_REWIRE_PROBABILITY,
};

/// Identifier of a peer. Node ids are dense: `0..node_count`.
pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid edge ({u}, {v}): {reason}")]
    InvalidEdge {
        u: NodeId,
        v: NodeId,
        reason: &'static str,
    },
    #[error("graph generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },
    #[error("constraint `{constraint}` not satisfied after {attempts} attempts")]
    ConstraintUnsatisfiable { constraint: String, attempts: usize },
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Simple undirected graph stored as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl Graph {
    /// Graph with `node_count` isolated nodes.
    pub fn empty(node_count: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); node_count],
            edge_count: 0,
        }
    }

    /// Builds a graph from undirected edges, rejecting self-loops,
    /// duplicates (in either orientation) and out-of-range ids.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self, TopologyError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut adjacency = vec![Vec::new(); node_count];
        let mut edge_count = 0;
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(TopologyError::InvalidEdge {
                    u,
                    v,
                    reason: "node id out of range",
                });
            }
            if u == v {
                return Err(TopologyError::InvalidEdge {
                    u,
                    v,
                    reason: "self-loop",
                });
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
            edge_count += 1;
        }
        for (node, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(TopologyError::InvalidEdge {
                    u: node,
                    v: w[0],
                    reason: "duplicate edge",
                });
            }
        }
        Ok(Graph {
            adjacency,
            edge_count,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbor ids of `node`.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.node_count() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Mean degree `2m / n`.
    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count as f64 / self.node_count() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(matches!(
            Graph::from_edges(3, [(0, 0)]),
            Err(TopologyError::InvalidEdge {
                reason: "self-loop",
                ..
            })
        ));
        assert!(matches!(
            Graph::from_edges(3, [(0, 1), (1, 0)]),
            Err(TopologyError::InvalidEdge {
                reason: "duplicate edge",
                ..
            })
        ));
        assert!(matches!(
            Graph::from_edges(3, [(0, 3)]),
            Err(TopologyError::InvalidEdge { .. })
        ));
    }

    #[test]
    fn edges_are_canonical() {
        let g = Graph::from_edges(4, [(3, 1), (0, 2), (1, 0)]).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 3)]);
        assert_eq!(g.neighbors(1), &[0, 3]);
        assert!(g.has_edge(3, 1));
        assert!(!g.has_edge(2, 3));
    }
}
