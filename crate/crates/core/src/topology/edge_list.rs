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

//! Plain-text edge lists: a `# nodes=<n> edges=<m>` header followed by one
//! `u v` line per edge with `u < v`, sorted.

use std::io::{BufRead, Write};

use super::{Graph, NodeId, TopologyError};

pub fn save_edge_list<W: Write>(g: &Graph, mut sink: W) -> Result<(), TopologyError> {
    writeln!(sink, "# nodes={} edges={}", g.node_count(), g.edge_count())?;
    for (u, v) in g.edges() {
        writeln!(sink, "{u} {v}")?;
    }
    sink.flush()?;
    Ok(())
}

fn parse_header(text: &str, line: usize) -> Result<(usize, usize), TopologyError> {
    let err = |message: String| TopologyError::Parse { line, message };
    let mut nodes = None;
    let mut edges = None;
    for field in text.trim_start_matches('#').split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(format!("malformed header field `{field}`")))?;
        let value: usize = value
            .parse()
            .map_err(|_| err(format!("header value `{value}` is not an integer")))?;
        match key {
            "nodes" => nodes = Some(value),
            "edges" => edges = Some(value),
            _ => return Err(err(format!("unknown header field `{key}`"))),
        }
    }
    match (nodes, edges) {
        (Some(n), Some(m)) => Ok((n, m)),
        _ => Err(err("header must carry nodes= and edges=".into())),
    }
}

/// Reads an edge list. The header is optional when loading; without one the
/// node count is one past the largest id seen.
pub fn load_edge_list<R: BufRead>(source: R) -> Result<Graph, TopologyError> {
    let mut header = None;
    let mut edges: Vec<(NodeId, NodeId, usize)> = Vec::new();
    for (index, line) in source.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if text.starts_with('#') {
            if header.is_none() && edges.is_empty() && text.contains("nodes=") {
                header = Some(parse_header(text, line_no)?);
            }
            continue;
        }
        let mut fields = text.split_whitespace();
        let mut id = || -> Result<NodeId, TopologyError> {
            let field = fields.next().ok_or_else(|| TopologyError::Parse {
                line: line_no,
                message: "expected two node ids".into(),
            })?;
            field.parse().map_err(|_| TopologyError::Parse {
                line: line_no,
                message: format!("`{field}` is not a node id"),
            })
        };
        let u = id()?;
        let v = id()?;
        if fields.next().is_some() {
            return Err(TopologyError::Parse {
                line: line_no,
                message: "trailing fields after edge".into(),
            });
        }
        edges.push((u, v, line_no));
    }

    let node_count = match header {
        Some((n, _)) => n,
        None => edges
            .iter()
            .map(|&(u, v, _)| u.max(v) + 1)
            .max()
            .unwrap_or(0),
    };
    for &(u, v, line) in &edges {
        let bad = if u >= node_count || v >= node_count {
            Some(format!("node id out of range for {node_count} nodes"))
        } else if u == v {
            Some("self-loop".to_string())
        } else {
            None
        };
        if let Some(message) = bad {
            return Err(TopologyError::Parse { line, message });
        }
    }
    if let Some((_, m)) = header {
        if m != edges.len() {
            return Err(TopologyError::Parse {
                line: 1,
                message: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
    }
    Graph::from_edges(node_count, edges.into_iter().map(|(u, v, _)| (u, v)))
}
