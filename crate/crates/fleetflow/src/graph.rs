//! City graph: regions as nodes, possible trips as directed edges.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A directed trip edge. `from`/`to` index into the owning graph's node list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    /// Travel time in whole time steps.
    pub travel_time: u32,
    /// Per-trip transportation cost charged to the platform.
    pub cost: f64,
}

/// Strongly connected digraph of city regions.
///
/// Construction only requires that edge endpoints reference known nodes;
/// the model-level invariants (strong connectivity, positive travel times,
/// non-negative costs, unique edge ids) are checked by [`CityGraph::validate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CityGraph {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    #[serde(skip)]
    out_edges: Vec<Vec<usize>>,
    #[serde(skip)]
    in_edges: Vec<Vec<usize>>,
}

/// One violated graph invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    NotStronglyConnected,
    BadTravelTime { edge: String, travel_time: u32 },
    NegativeCost { edge: String, cost: f64 },
    DuplicateEdgeId { edge: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotStronglyConnected => write!(f, "graph is not strongly connected"),
            Violation::BadTravelTime { edge, travel_time } => {
                write!(f, "edge {edge} has travel_time {travel_time}, must be >= 1")
            }
            Violation::NegativeCost { edge, cost } => {
                write!(f, "edge {edge} has negative cost {cost}")
            }
            Violation::DuplicateEdgeId { edge } => write!(f, "duplicate edge id {edge}"),
        }
    }
}

/// Result of validating a [`CityGraph`]; empty iff the graph is valid.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl CityGraph {
    /// Build a graph from node ids and `(edge id, from id, to id, travel_time, cost)`
    /// tuples. Fails on unknown node references or duplicate node ids.
    pub fn new(
        nodes: Vec<String>,
        edge_specs: Vec<(String, String, String, u32, f64)>,
    ) -> Result<Self> {
        let mut index = std::collections::BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate node id {n}")));
            }
        }
        let mut edges = Vec::with_capacity(edge_specs.len());
        for (id, from, to, travel_time, cost) in edge_specs {
            let &from = index
                .get(&from)
                .ok_or_else(|| Error::InvalidInput(format!("edge {id}: unknown node {from}")))?;
            let &to = index
                .get(&to)
                .ok_or_else(|| Error::InvalidInput(format!("edge {id}: unknown node {to}")))?;
            edges.push(Edge { id, from, to, travel_time, cost });
        }
        Ok(Self::from_parts(nodes, edges))
    }

    pub(crate) fn from_parts(nodes: Vec<String>, edges: Vec<Edge>) -> Self {
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            out_edges[e.from].push(i);
            in_edges[e.to].push(i);
        }
        CityGraph { nodes, edges, out_edges, in_edges }
    }

    /// Rebuild adjacency after deserialization.
    pub fn rebuild_adjacency(&mut self) {
        let rebuilt = Self::from_parts(self.nodes.clone(), self.edges.clone());
        self.out_edges = rebuilt.out_edges;
        self.in_edges = rebuilt.in_edges;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.nodes[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Indices of edges leaving `node`.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    /// Indices of edges entering `node`.
    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.in_edges[node]
    }

    /// Check all model invariants and list every violation found.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            if !seen.insert(e.id.as_str()) {
                violations.push(Violation::DuplicateEdgeId { edge: e.id.clone() });
            }
            if e.travel_time < 1 {
                violations.push(Violation::BadTravelTime {
                    edge: e.id.clone(),
                    travel_time: e.travel_time,
                });
            }
            if e.cost < 0.0 || !e.cost.is_finite() {
                violations.push(Violation::NegativeCost { edge: e.id.clone(), cost: e.cost });
            }
        }
        if !self.is_strongly_connected() {
            violations.push(Violation::NotStronglyConnected);
        }
        ValidationReport { violations }
    }

    /// A digraph is strongly connected iff node 0 reaches every node along
    /// forward edges and along reversed edges.
    fn is_strongly_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, reversed: bool) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            let adjacent = if reversed { &self.in_edges[v] } else { &self.out_edges[v] };
            for &ei in adjacent {
                let w = if reversed { self.edges[ei].from } else { self.edges[ei].to };
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.nodes.len()
    }
}
