use serde::Serialize;

use super::{EdgeId, GraphError, VertexId, WeightedDigraph};
use crate::scalar::Scalar;

/// A path `(x_0, …, x_n)` recorded as its start vertex plus the edge taken
/// at each step, so parallel edges stay distinguishable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Path {
    start: VertexId,
    edges: Vec<EdgeId>,
}

impl Path {
    /// The path with no steps, `(x)`.
    pub fn empty(start: VertexId) -> Self {
        Path {
            start,
            edges: Vec::new(),
        }
    }

    pub fn new<T>(
        graph: &WeightedDigraph<T>,
        start: VertexId,
        edges: Vec<EdgeId>,
    ) -> Result<Self, GraphError> {
        if start.0 >= graph.vertex_count() {
            return Err(GraphError::InvalidPath(format!("unknown start vertex {start}")));
        }
        let mut at = start;
        for (i, &e) in edges.iter().enumerate() {
            if e.0 >= graph.edge_count() {
                return Err(GraphError::InvalidPath(format!("step {i}: unknown edge {e}")));
            }
            if graph.tail(e) != at {
                return Err(GraphError::InvalidPath(format!(
                    "step {i}: edge {e} leaves {} but the path is at {at}",
                    graph.tail(e)
                )));
            }
            at = graph.head(e);
        }
        Ok(Path { start, edges })
    }

    /// Builds an unchecked path; callers guarantee consecutiveness.
    pub(crate) fn from_raw(start: VertexId, edges: Vec<EdgeId>) -> Self {
        Path { start, edges }
    }

    pub fn start(&self) -> VertexId {
        self.start
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    /// Number of steps `n`.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end<T>(&self, graph: &WeightedDigraph<T>) -> VertexId {
        self.edges.last().map_or(self.start, |&e| graph.head(e))
    }

    pub fn vertices<T>(&self, graph: &WeightedDigraph<T>) -> Vec<VertexId> {
        std::iter::once(self.start)
            .chain(self.edges.iter().map(|&e| graph.head(e)))
            .collect()
    }

    pub fn is_closed<T>(&self, graph: &WeightedDigraph<T>) -> bool {
        self.end(graph) == self.start
    }

    /// The time reversal `(x_n, …, x_0)`, as a path of the dual graph
    /// (edge ids are shared between a graph and its dual).
    pub fn reversed<T>(&self, graph: &WeightedDigraph<T>) -> Path {
        Path {
            start: self.end(graph),
            edges: self.edges.iter().rev().copied().collect(),
        }
    }
}

/// `Σ_i w(x_i, Δx_i)` for a per-edge weight vector.
pub fn path_weight<T: Scalar>(weights: &[T], path: &Path) -> T {
    path.edges.iter().fold(T::zero(), |s, e| s + weights[e.0])
}

/// All simple paths from `x` to `y` with at most `max_len` steps. No vertex
/// repeats except that `x = y` may close the path; for `x = y` the empty
/// path is included.
pub fn enumerate_simple_paths<T>(
    graph: &WeightedDigraph<T>,
    x: VertexId,
    y: VertexId,
    max_len: usize,
) -> Vec<Path> {
    let mut out = Vec::new();
    let mut budget = usize::MAX;
    visit_simple_paths(graph, x, y, max_len, &mut budget, &mut |edges| {
        out.push(Path::from_raw(x, edges.to_vec()));
    });
    out
}

/// Depth-first enumeration driver. Every DFS extension spends one unit of
/// `budget`; returns `false` when the budget ran out before completion.
pub(crate) fn visit_simple_paths<T, F>(
    graph: &WeightedDigraph<T>,
    x: VertexId,
    y: VertexId,
    max_len: usize,
    budget: &mut usize,
    visit: &mut F,
) -> bool
where
    F: FnMut(&[EdgeId]),
{
    let mut on_path = vec![false; graph.vertex_count()];
    on_path[x.0] = true;
    let mut stack = Vec::new();
    if x == y {
        visit(&stack);
    }
    dfs(graph, y, x, max_len, &mut on_path, &mut stack, budget, visit)
}

#[allow(clippy::too_many_arguments)]
fn dfs<T, F>(
    graph: &WeightedDigraph<T>,
    y: VertexId,
    at: VertexId,
    max_len: usize,
    on_path: &mut [bool],
    stack: &mut Vec<EdgeId>,
    budget: &mut usize,
    visit: &mut F,
) -> bool
where
    F: FnMut(&[EdgeId]),
{
    if stack.len() == max_len {
        return true;
    }
    for &e in graph.out_edges(at) {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let next = graph.head(e);
        if next == y {
            stack.push(e);
            visit(stack);
            stack.pop();
            continue;
        }
        if on_path[next.0] {
            continue;
        }
        on_path[next.0] = true;
        stack.push(e);
        let done = dfs(graph, y, next, max_len, on_path, stack, budget, visit);
        stack.pop();
        on_path[next.0] = false;
        if !done {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WeightedDigraph<f64> {
        WeightedDigraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    #[test]
    fn empty_path_weighs_zero() {
        let p = Path::empty(VertexId(0));
        assert_eq!(path_weight(&[1.0, 2.0, 3.0], &p), 0.0);
        assert!(p.is_closed(&triangle()));
    }

    #[test]
    fn triangle_loop_weight() {
        let g = triangle();
        let p = Path::new(&g, VertexId(0), vec![EdgeId(0), EdgeId(1), EdgeId(2)]).unwrap();
        assert!(p.is_closed(&g));
        assert!((path_weight(&[0.2f64, 0.0, 1.1], &p) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn invalid_step_is_rejected() {
        let g = triangle();
        assert!(matches!(
            Path::new(&g, VertexId(0), vec![EdgeId(1)]),
            Err(GraphError::InvalidPath(_))
        ));
        assert!(Path::new(&g, VertexId(0), vec![EdgeId(7)]).is_err());
    }

    #[test]
    fn triangle_enumeration() {
        let g = triangle();
        let paths = enumerate_simple_paths(&g, VertexId(0), VertexId(2), 10);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].vertices(&g), vec![VertexId(0), VertexId(1), VertexId(2)]);

        let loops = enumerate_simple_paths(&g, VertexId(0), VertexId(0), 10);
        assert_eq!(loops.len(), 2);
        assert!(loops[0].is_empty());
        assert_eq!(loops[1].len(), 3);
    }

    #[test]
    fn enumeration_respects_max_len_and_parallel_edges() {
        let g = WeightedDigraph::from_edges(2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 1.0)]).unwrap();
        let paths = enumerate_simple_paths(&g, VertexId(0), VertexId(1), 5);
        assert_eq!(paths.len(), 2);
        assert!(enumerate_simple_paths(&g, VertexId(0), VertexId(1), 0).is_empty());
    }

    #[test]
    fn reversal_is_a_dual_path() {
        let g = WeightedDigraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (1, 0, 1.0)])
            .unwrap();
        let p = Path::new(&g, VertexId(0), vec![EdgeId(0), EdgeId(1)]).unwrap();
        let r = p.reversed(&g);
        let d = g.dual();
        let r = Path::new(&d, r.start(), r.edges().to_vec()).unwrap();
        assert_eq!(r.vertices(&d), vec![VertexId(2), VertexId(1), VertexId(0)]);
    }
}
