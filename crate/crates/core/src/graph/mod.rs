//! Finite directed multigraphs with positive edge weights.
//!
//! Vertices and edges are stored in insertion order. Edge ids are the
//! canonical index used by every environment vector and every solver, so
//! parallel edges are distinct objects. The dual graph keeps edge ids: edge
//! `e = (x, y)` of `G` and its reversal `ě = (y, x)` of the dual share the same
//! [`EdgeId`].

mod cycles;
mod io;
mod layered;
pub(crate) mod path;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use cycles::{fundamental_cycles, random_closed_walk};
pub use io::GraphFile;
pub use layered::{build_layered, build_layered_example, LayeredGraph, LayeredWeighting};
pub use path::{enumerate_simple_paths, path_weight, Path};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// External vertex identifier as it appears in graph files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexKey {
    Int(i64),
    Name(String),
}

impl fmt::Display for VertexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexKey::Int(i) => write!(f, "{i}"),
            VertexKey::Name(s) => f.write_str(s),
        }
    }
}

impl From<i64> for VertexKey {
    fn from(v: i64) -> Self {
        VertexKey::Int(v)
    }
}

impl From<usize> for VertexKey {
    fn from(v: usize) -> Self {
        VertexKey::Int(v as i64)
    }
}

impl From<&str> for VertexKey {
    fn from(v: &str) -> Self {
        VertexKey::Name(v.to_owned())
    }
}

impl From<String> for VertexKey {
    fn from(v: String) -> Self {
        VertexKey::Name(v)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("edge {edge} refers to unknown vertex {vertex}")]
    UnknownVertex { edge: usize, vertex: String },
    #[error("edge {edge} ({tail} -> {head}) has non-positive or non-finite weight {weight}")]
    NonPositiveWeight {
        edge: usize,
        tail: String,
        head: String,
        weight: f64,
    },
    #[error("graph is not strongly connected: {to} is unreachable from {from}")]
    NotStronglyConnected { from: String, to: String },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("weight vector has length {got}, graph has {expected} edges")]
    WeightLength { expected: usize, got: usize },
    #[error("malformed graph file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub tail: VertexId,
    pub head: VertexId,
    pub weight: T,
}

/// Finite, strongly connected directed multigraph with strictly positive
/// weights `a_e`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph<T> {
    labels: Vec<VertexKey>,
    edges: Vec<Edge<T>>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    // position of each edge inside its tail's outgoing list
    out_pos: Vec<usize>,
}

impl<T: Scalar> WeightedDigraph<T> {
    /// Builds a graph from vertex keys and `(tail, head, weight)` triples.
    pub fn build<K, I, E>(vertices: I, edges: E) -> Result<Self, GraphError>
    where
        K: Into<VertexKey>,
        I: IntoIterator<Item = K>,
        E: IntoIterator<Item = (K, K, T)>,
    {
        let labels: Vec<VertexKey> = vertices.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, key) in labels.iter().enumerate() {
            if index.insert(key.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(key.to_string()));
            }
        }
        let mut indexed = Vec::new();
        for (i, (t, h, w)) in edges.into_iter().enumerate() {
            let (t, h) = (t.into(), h.into());
            let tail = *index.get(&t).ok_or_else(|| GraphError::UnknownVertex {
                edge: i,
                vertex: t.to_string(),
            })?;
            let head = *index.get(&h).ok_or_else(|| GraphError::UnknownVertex {
                edge: i,
                vertex: h.to_string(),
            })?;
            indexed.push((tail, head, w));
        }
        Self::from_parts(labels, &indexed)
    }

    /// Builds a graph on vertices `0..n` labelled by their index.
    pub fn from_edges(n: usize, edges: &[(usize, usize, T)]) -> Result<Self, GraphError> {
        let labels = (0..n).map(VertexKey::from).collect();
        for (i, &(t, h, _)) in edges.iter().enumerate() {
            for v in [t, h] {
                if v >= n {
                    return Err(GraphError::UnknownVertex {
                        edge: i,
                        vertex: v.to_string(),
                    });
                }
            }
        }
        Self::from_parts(labels, edges)
    }

    fn from_parts(labels: Vec<VertexKey>, edges: &[(usize, usize, T)]) -> Result<Self, GraphError> {
        let n = labels.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut out_pos = Vec::with_capacity(edges.len());
        let mut stored = Vec::with_capacity(edges.len());
        for (i, &(t, h, w)) in edges.iter().enumerate() {
            let wf = w.to_f64_lossy();
            if !(wf.is_finite() && wf > 0.0) {
                return Err(GraphError::NonPositiveWeight {
                    edge: i,
                    tail: labels[t].to_string(),
                    head: labels[h].to_string(),
                    weight: wf,
                });
            }
            out_pos.push(out_edges[t].len());
            out_edges[t].push(EdgeId(i));
            in_edges[h].push(EdgeId(i));
            stored.push(Edge {
                tail: VertexId(t),
                head: VertexId(h),
                weight: w,
            });
        }
        let graph = WeightedDigraph {
            labels,
            edges: stored,
            out_edges,
            in_edges,
            out_pos,
        };
        if let Some((from, to)) = graph.unreachable_pair() {
            return Err(GraphError::NotStronglyConnected {
                from: graph.label(from).to_string(),
                to: graph.label(to).to_string(),
            });
        }
        Ok(graph)
    }

    /// Same topology with a new weight vector indexed by edge id.
    pub fn with_weights(&self, weights: &[T]) -> Result<Self, GraphError> {
        if weights.len() != self.edges.len() {
            return Err(GraphError::WeightLength {
                expected: self.edges.len(),
                got: weights.len(),
            });
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, &w)| (e.tail.0, e.head.0, w))
            .collect();
        Self::from_parts(self.labels.clone(), &edges)
    }

    /// The dual graph: every edge reversed, weight and edge id kept.
    pub fn dual(&self) -> Self {
        let edges: Vec<Edge<T>> = self
            .edges
            .iter()
            .map(|e| Edge {
                tail: e.head,
                head: e.tail,
                weight: e.weight,
            })
            .collect();
        let mut out_pos = vec![0; edges.len()];
        for list in &self.in_edges {
            for (pos, e) in list.iter().enumerate() {
                out_pos[e.0] = pos;
            }
        }
        WeightedDigraph {
            labels: self.labels.clone(),
            edges,
            out_edges: self.in_edges.clone(),
            in_edges: self.out_edges.clone(),
            out_pos,
        }
    }

    /// `div(a)(x) = Σ_{e into x} a_e − Σ_{e out of x} a_e`.
    pub fn divergence(&self) -> Vec<T> {
        self.divergence_of(&self.weights())
    }

    /// Divergence of an arbitrary edge function `θ`.
    pub fn divergence_of(&self, theta: &[T]) -> Vec<T> {
        let mut div = vec![T::zero(); self.vertex_count()];
        for (e, &t) in self.edges.iter().zip(theta) {
            div[e.head.0] = div[e.head.0] + t;
            div[e.tail.0] = div[e.tail.0] - t;
        }
        div
    }

    pub fn max_abs_divergence(&self) -> T {
        self.divergence()
            .into_iter()
            .fold(T::zero(), |m, d| m.max(d.abs()))
    }

    /// `max |div(a)| ≤ rel_tol · Σ_e a_e`.
    pub fn is_divergence_free(&self, rel_tol: T) -> bool {
        self.max_abs_divergence() <= rel_tol * self.total_weight()
    }

    pub fn total_weight(&self) -> T {
        self.edges.iter().fold(T::zero(), |s, e| s + e.weight)
    }

    pub fn weights(&self) -> Vec<T> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Weights `a_x = (a_e)_{e ∈ E_x}` in canonical order.
    pub fn out_weights(&self, x: VertexId) -> Vec<T> {
        self.out_edges[x.0].iter().map(|&e| self.weight(e)).collect()
    }

    pub fn weight(&self, e: EdgeId) -> T {
        self.edges[e.0].weight
    }
}

impl<T> WeightedDigraph<T> {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = VertexId> {
        (0..self.labels.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl ExactSizeIterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn edge(&self, e: EdgeId) -> &Edge<T> {
        &self.edges[e.0]
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn tail(&self, e: EdgeId) -> VertexId {
        self.edges[e.0].tail
    }

    pub fn head(&self, e: EdgeId) -> VertexId {
        self.edges[e.0].head
    }

    /// `E_x`, the outgoing edges of `x`.
    pub fn out_edges(&self, x: VertexId) -> &[EdgeId] {
        &self.out_edges[x.0]
    }

    /// `E^x`, the incoming edges of `x`.
    pub fn in_edges(&self, x: VertexId) -> &[EdgeId] {
        &self.in_edges[x.0]
    }

    /// `M_x = |E_x|`.
    pub fn out_degree(&self, x: VertexId) -> usize {
        self.out_edges[x.0].len()
    }

    /// Index of `e` inside `E_{tail(e)}`.
    pub fn out_position(&self, e: EdgeId) -> usize {
        self.out_pos[e.0]
    }

    pub fn label(&self, x: VertexId) -> &VertexKey {
        &self.labels[x.0]
    }

    pub fn labels(&self) -> &[VertexKey] {
        &self.labels
    }

    pub fn vertex_by_label(&self, key: &VertexKey) -> Option<VertexId> {
        self.labels.iter().position(|k| k == key).map(VertexId)
    }

    /// BFS hop distances from `source` following edges forward
    /// (`reverse = false`) or backward.
    pub fn hop_distances(&self, source: VertexId, reverse: bool) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        dist[source.0] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v.0].unwrap_or(0);
            let adj = if reverse {
                &self.in_edges[v.0]
            } else {
                &self.out_edges[v.0]
            };
            for &e in adj {
                let w = if reverse { self.tail(e) } else { self.head(e) };
                if dist[w.0].is_none() {
                    dist[w.0] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Strong connectivity via one forward and one backward sweep from
    /// vertex 0; returns an ordered pair `(from, to)` with `to` unreachable.
    fn unreachable_pair(&self) -> Option<(VertexId, VertexId)> {
        let root = VertexId(0);
        if let Some(v) = self.hop_distances(root, false).iter().position(Option::is_none) {
            return Some((root, VertexId(v)));
        }
        self.hop_distances(root, true)
            .iter()
            .position(Option::is_none)
            .map(|v| (VertexId(v), root))
    }
}
