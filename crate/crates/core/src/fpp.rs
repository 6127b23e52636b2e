//! First passage times `T(x, y) = inf_{π ∈ Π(x,y)} Σ w(x_i, Δx_i)` on
//! nonnegative edge weights, with optional constraints on the first edge,
//! the last edge and the intermediate vertices.
//!
//! Admissible paths are simple: no vertex repeats, except that the path may
//! close when source and target coincide. For `T(x, x)` without constraint
//! the empty path gives 0.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::graph::path::visit_simple_paths;
use crate::graph::{path_weight, EdgeId, LayeredGraph, Path, VertexId, WeightedDigraph};
use crate::scalar::Scalar;

/// Default number of DFS extensions the brute-force oracle may spend.
pub const ORACLE_BUDGET: usize = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FppError {
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("weight vector has length {got}, graph has {expected} edges")]
    WeightLength { expected: usize, got: usize },
    #[error("edge {edge} has weight {weight}; passage times need nonnegative weights")]
    NegativeWeight { edge: usize, weight: f64 },
    #[error("simple-path enumeration exceeded its budget of {budget} steps")]
    GraphTooLarge { budget: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PassageConstraint {
    /// Allowed first edges, a subset of `E_source`.
    pub first_edges: Vec<EdgeId>,
    /// Allowed last edges, a subset of `E^target`.
    pub last_edges: Vec<EdgeId>,
    /// Vertices the path may not visit strictly between its endpoints.
    pub forbid_intermediate: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PassageTimeQuery {
    pub source: VertexId,
    pub target: VertexId,
    pub constraint: Option<PassageConstraint>,
}

impl PassageTimeQuery {
    pub fn new(source: VertexId, target: VertexId) -> Self {
        PassageTimeQuery {
            source,
            target,
            constraint: None,
        }
    }

    pub fn constrained(source: VertexId, target: VertexId, constraint: PassageConstraint) -> Self {
        PassageTimeQuery {
            source,
            target,
            constraint: Some(constraint),
        }
    }
}

/// `value = +∞` with no witness when no admissible path exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassageTimeResult<T> {
    pub value: T,
    pub witness: Option<Path>,
}

impl<T: Scalar> PassageTimeResult<T> {
    fn none() -> Self {
        PassageTimeResult {
            value: T::infinity(),
            witness: None,
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.witness.is_some()
    }
}

fn check_weights<T: Scalar>(graph: &WeightedDigraph<T>, w: &[T]) -> Result<(), FppError> {
    if w.len() != graph.edge_count() {
        return Err(FppError::WeightLength {
            expected: graph.edge_count(),
            got: w.len(),
        });
    }
    match w.iter().position(|&v| !(v >= T::zero())) {
        Some(edge) => Err(FppError::NegativeWeight {
            edge,
            weight: w[edge].to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

fn check_constraint<T>(graph: &WeightedDigraph<T>, q: &PassageTimeQuery) -> Result<(), FppError> {
    let n = graph.vertex_count();
    if q.source.0 >= n || q.target.0 >= n {
        return Err(FppError::InvalidConstraint(format!(
            "endpoints {} / {} outside the graph",
            q.source, q.target
        )));
    }
    let Some(c) = &q.constraint else {
        return Ok(());
    };
    let m = graph.edge_count();
    for &e in &c.first_edges {
        if e.0 >= m || graph.tail(e) != q.source {
            return Err(FppError::InvalidConstraint(format!("first edge {e} does not leave {}", q.source)));
        }
    }
    for &e in &c.last_edges {
        if e.0 >= m || graph.head(e) != q.target {
            return Err(FppError::InvalidConstraint(format!("last edge {e} does not enter {}", q.target)));
        }
    }
    if let Some(v) = c.forbid_intermediate.iter().find(|v| v.0 >= n) {
        return Err(FppError::InvalidConstraint(format!("forbidden vertex {v} outside the graph")));
    }
    Ok(())
}

struct Entry<T> {
    dist: T,
    vertex: usize,
}

impl<T: PartialOrd> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: PartialOrd> Eq for Entry<T> {}

impl<T: PartialOrd> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Entry<T> {
    // reversed for a min-heap; distances are never NaN
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Dijkstra from several seeds `(vertex, distance, entering edge)` over the
/// vertices not in `blocked`. Returns distances and predecessor edges.
fn dijkstra<T: Scalar>(
    graph: &WeightedDigraph<T>,
    w: &[T],
    seeds: &[(VertexId, T, Option<EdgeId>)],
    blocked: &[bool],
) -> (Vec<T>, Vec<Option<EdgeId>>) {
    let n = graph.vertex_count();
    let mut dist = vec![T::infinity(); n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &(v, d, e) in seeds {
        if !blocked[v.0] && d < dist[v.0] {
            dist[v.0] = d;
            pred[v.0] = e;
            heap.push(Entry { dist: d, vertex: v.0 });
        }
    }
    while let Some(Entry { dist: d, vertex: u }) = heap.pop() {
        if done[u] || d > dist[u] {
            continue;
        }
        done[u] = true;
        for &e in graph.out_edges(VertexId(u)) {
            let v = graph.head(e).0;
            if blocked[v] || done[v] {
                continue;
            }
            let nd = d + w[e.0];
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(e);
                heap.push(Entry { dist: nd, vertex: v });
            }
        }
    }
    (dist, pred)
}

/// Edges from the seed back to `v`, in path order.
fn trace<T>(graph: &WeightedDigraph<T>, pred: &[Option<EdgeId>], mut v: VertexId) -> Vec<EdgeId> {
    let mut edges = Vec::new();
    while let Some(e) = pred[v.0] {
        edges.push(e);
        v = graph.tail(e);
    }
    edges.reverse();
    edges
}

/// Exact first passage time by Dijkstra. Constrained queries seed the
/// search at the heads of the allowed first edges, search the graph
/// without the forbidden vertices and the endpoints, and close with the
/// cheapest allowed last edge.
pub fn first_passage<T: Scalar>(
    graph: &WeightedDigraph<T>,
    weights: &[T],
    query: &PassageTimeQuery,
) -> Result<PassageTimeResult<T>, FppError> {
    check_weights(graph, weights)?;
    check_constraint(graph, query)?;
    let (s, t) = (query.source, query.target);
    let n = graph.vertex_count();
    let Some(c) = &query.constraint else {
        if s == t {
            return Ok(PassageTimeResult {
                value: T::zero(),
                witness: Some(Path::empty(s)),
            });
        }
        let (dist, pred) = dijkstra(graph, weights, &[(s, T::zero(), None)], &vec![false; n]);
        if dist[t.0].is_infinite() {
            return Ok(PassageTimeResult::none());
        }
        return Ok(PassageTimeResult {
            value: dist[t.0],
            witness: Some(Path::from_raw(s, trace(graph, &pred, t))),
        });
    };

    let mut blocked = vec![false; n];
    for v in &c.forbid_intermediate {
        blocked[v.0] = true;
    }
    blocked[s.0] = true;
    blocked[t.0] = true;

    let mut best = PassageTimeResult::none();
    // one-step paths
    for &e in &c.first_edges {
        if c.last_edges.contains(&e) && weights[e.0] < best.value {
            best = PassageTimeResult {
                value: weights[e.0],
                witness: Some(Path::from_raw(s, vec![e])),
            };
        }
    }
    let seeds: Vec<_> = c
        .first_edges
        .iter()
        .map(|&e| (graph.head(e), weights[e.0], Some(e)))
        .collect();
    let (dist, pred) = dijkstra(graph, weights, &seeds, &blocked);
    for &e in &c.last_edges {
        let u = graph.tail(e);
        if blocked[u.0] || dist[u.0].is_infinite() {
            continue;
        }
        let v = dist[u.0] + weights[e.0];
        if v < best.value {
            let mut edges = trace(graph, &pred, u);
            edges.push(e);
            best = PassageTimeResult {
                value: v,
                witness: Some(Path::from_raw(s, edges)),
            };
        }
    }
    Ok(best)
}

fn admissible<T>(graph: &WeightedDigraph<T>, c: &PassageConstraint, edges: &[EdgeId]) -> bool {
    let (Some(first), Some(last)) = (edges.first(), edges.last()) else {
        return false;
    };
    c.first_edges.contains(first)
        && c.last_edges.contains(last)
        && edges[..edges.len() - 1]
            .iter()
            .all(|&e| !c.forbid_intermediate.contains(&graph.head(e)))
}

/// Minimum over every admissible simple path, by enumeration. Fails with
/// `GraphTooLarge` once `budget` DFS steps are spent.
pub fn brute_force_oracle<T: Scalar>(
    graph: &WeightedDigraph<T>,
    weights: &[T],
    query: &PassageTimeQuery,
    budget: usize,
) -> Result<PassageTimeResult<T>, FppError> {
    check_weights(graph, weights)?;
    check_constraint(graph, query)?;
    let (s, t) = (query.source, query.target);
    let mut best = PassageTimeResult::none();
    let mut left = budget;
    let complete = visit_simple_paths(graph, s, t, graph.vertex_count(), &mut left, &mut |edges| {
        if let Some(c) = &query.constraint {
            if !admissible(graph, c, edges) {
                return;
            }
        }
        let p = Path::from_raw(s, edges.to_vec());
        let v = path_weight(weights, &p);
        if v < best.value {
            best = PassageTimeResult {
                value: v,
                witness: Some(p),
            };
        }
    });
    if !complete {
        return Err(FppError::GraphTooLarge { budget });
    }
    Ok(best)
}

/// `T_c(x1_1, x1_1)`: leave the root into layer 2, come back from layer 7
/// or `y`, never touch the root in between.
pub fn constrained_return_query<T>(l: &LayeredGraph<T>) -> PassageTimeQuery {
    let mut last_edges = l.layer7_to_root.to_vec();
    last_edges.push(l.y_to_root);
    PassageTimeQuery::constrained(
        l.root,
        l.root,
        PassageConstraint {
            first_edges: l.root_to_layer2.to_vec(),
            last_edges,
            forbid_intermediate: vec![l.root],
        },
    )
}

/// The dual counterpart, on `l.graph.dual()`: first step into layer 7 or
/// `y`, last step from layer 2.
pub fn dual_constrained_query<T>(l: &LayeredGraph<T>) -> PassageTimeQuery {
    let mut first_edges = l.layer7_to_root.to_vec();
    first_edges.push(l.y_to_root);
    PassageTimeQuery::constrained(
        l.root,
        l.root,
        PassageConstraint {
            first_edges,
            last_edges: l.root_to_layer2.to_vec(),
            forbid_intermediate: vec![l.root],
        },
    )
}

pub fn constrained_return_time<T: Scalar>(
    l: &LayeredGraph<T>,
    weights: &[T],
) -> Result<PassageTimeResult<T>, FppError> {
    first_passage(&l.graph, weights, &constrained_return_query(l))
}

pub fn dual_constrained_return_time<T: Scalar>(
    l: &LayeredGraph<T>,
    dual: &WeightedDigraph<T>,
    dual_weights: &[T],
) -> Result<PassageTimeResult<T>, FppError> {
    first_passage(dual, dual_weights, &dual_constrained_query(l))
}

/// The six-term minimum
/// `min_k w̌(x1_1, x7_k) ∧ min_k (w̌(x1_1, y) + w̌(y, x7_k))`
/// on a dual environment (indexed by the shared edge ids).
pub fn dual_return_formula<T: Scalar>(l: &LayeredGraph<T>, dual_weights: &[T]) -> T {
    let via_y = dual_weights[l.y_to_root.0];
    let mut best = T::infinity();
    for k in 0..3 {
        best = best.min(dual_weights[l.layer7_to_root[k].0]);
        best = best.min(via_y + dual_weights[l.layer7_to_y[k].0]);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_layered_example;

    fn diamond() -> WeightedDigraph<f64> {
        // x=0, m1=1, m2=2, y=3
        WeightedDigraph::from_edges(
            4,
            &[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn two_route_minimum() {
        let g = diamond();
        let w = [0.3, 0.1, 0.2, 0.4, 0.0];
        let r = first_passage(&g, &w, &PassageTimeQuery::new(VertexId(0), VertexId(3))).unwrap();
        assert!((r.value - 0.4).abs() < 1e-15);
        let p = r.witness.unwrap();
        assert_eq!(p.vertices(&g), vec![VertexId(0), VertexId(1), VertexId(3)]);
    }

    #[test]
    fn return_time_is_zero() {
        let g = diamond();
        let r = first_passage(&g, &[1.0; 5], &PassageTimeQuery::new(VertexId(2), VertexId(2))).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.witness.unwrap().is_empty());
    }

    #[test]
    fn empty_first_set_has_no_path() {
        let g = diamond();
        let q = PassageTimeQuery::constrained(
            VertexId(0),
            VertexId(3),
            PassageConstraint {
                first_edges: vec![],
                last_edges: vec![EdgeId(1), EdgeId(3)],
                forbid_intermediate: vec![],
            },
        );
        let w = [1.0; 5];
        for r in [
            first_passage(&g, &w, &q).unwrap(),
            brute_force_oracle(&g, &w, &q, ORACLE_BUDGET).unwrap(),
        ] {
            assert!(r.value.is_infinite());
            assert!(!r.is_admissible());
        }
    }

    #[test]
    fn constraint_is_validated() {
        let g = diamond();
        let q = PassageTimeQuery::constrained(
            VertexId(0),
            VertexId(3),
            PassageConstraint {
                first_edges: vec![EdgeId(1)],
                ..Default::default()
            },
        );
        assert!(matches!(first_passage(&g, &[1.0; 5], &q), Err(FppError::InvalidConstraint(_))));
        assert!(matches!(
            first_passage(&g, &[1.0, -1.0, 1.0, 1.0, 1.0], &PassageTimeQuery::new(VertexId(0), VertexId(3))),
            Err(FppError::NegativeWeight { edge: 1, .. })
        ));
    }

    #[test]
    fn triangle_with_one_positive_edge() {
        let g = WeightedDigraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let w = [0.0, 2.5, 0.0];
        for (x, y, want) in [(0, 1, 0.0), (0, 2, 2.5), (2, 1, 0.0), (1, 0, 2.5)] {
            let q = PassageTimeQuery::new(VertexId(x), VertexId(y));
            assert_eq!(brute_force_oracle(&g, &w, &q, ORACLE_BUDGET).unwrap().value, want);
            assert_eq!(first_passage(&g, &w, &q).unwrap().value, want);
        }
    }

    #[test]
    fn oracle_budget() {
        let l = build_layered_example(1.0, 2.0, 3.0).unwrap();
        let w = vec![1.0; l.graph.edge_count()];
        let q = constrained_return_query(&l);
        assert!(matches!(
            brute_force_oracle(&l.graph, &w, &q, 10),
            Err(FppError::GraphTooLarge { budget: 10 })
        ));
        let r = brute_force_oracle(&l.graph, &w, &q, ORACLE_BUDGET).unwrap();
        // six layer hops and the return edge
        assert_eq!(r.value, 7.0);
    }

    #[test]
    fn six_term_arithmetic() {
        let l = build_layered_example(1.0, 1.0, 1.0).unwrap();
        let mut w = vec![9.0; l.graph.edge_count()];
        for (k, v) in [1.0, 2.0, 3.0].into_iter().enumerate() {
            w[l.layer7_to_root[k].0] = v;
        }
        w[l.y_to_root.0] = 0.5;
        for (k, v) in [0.1, 4.0, 5.0].into_iter().enumerate() {
            w[l.layer7_to_y[k].0] = v;
        }
        assert_eq!(dual_return_formula(&l, &w), 0.6);
    }

    #[test]
    fn hand_folded_layer_minima() {
        // only root -> x2_2 is free; each layer's cheapest entry is known
        let l = build_layered_example(1.0, 2.0, 3.0).unwrap();
        let g = &l.graph;
        let mut w = vec![5.0; g.edge_count()];
        w[l.root_to_layer2[1].0] = 0.0;
        // from x{i}_2 the edge to x{i+1}_2 costs 0.25, to the others 1.0
        for i in 2..=6 {
            for &e in g.out_edges(l.layer(i)[1]) {
                w[e.0] = if g.head(e) == l.layer(i + 1)[1] { 0.25 } else { 1.0 };
            }
        }
        w[l.layer7_to_root[1].0] = 0.5;
        let r = constrained_return_time(&l, &w).unwrap();
        assert!((r.value - (0.0f64 + 5.0 * 0.25 + 0.5)).abs() < 1e-15);
        let o = brute_force_oracle(g, &w, &constrained_return_query(&l), ORACLE_BUDGET).unwrap();
        assert_eq!(o.value, r.value);
        assert_eq!(o.witness, r.witness);
    }

    #[test]
    fn generic_over_f32() {
        let g = WeightedDigraph::<f32>::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let r = first_passage(&g, &[0.5f32, 0.25], &PassageTimeQuery::new(VertexId(1), VertexId(0))).unwrap();
        assert_eq!(r.value, 0.25f32);
    }
}
