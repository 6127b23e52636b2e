use rand::Rng;

use super::{EdgeId, Path, VertexId, WeightedDigraph};

/// Spanning-tree fundamental closed walks rooted at vertex 0.
///
/// With `T` a BFS out-tree from the root and `Q(v)` the BFS shortest path
/// from `v` back to the root, every edge `e = (u, v)` outside `T` yields the
/// closed walk `T(root → u) · e · Q(v)`. There are `|E| − |V| + 1` of them and
/// they form a basis of the cycle space: ordered by the hop distance from
/// `v` to the root, the coefficient matrix on non-tree edges is unit
/// triangular.
pub fn fundamental_cycles<T>(graph: &WeightedDigraph<T>) -> Vec<Path> {
    let root = VertexId(0);
    let n = graph.vertex_count();
    let mut parent: Vec<Option<EdgeId>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[root.0] = true;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &e in graph.out_edges(v) {
            let w = graph.head(e);
            if !seen[w.0] {
                seen[w.0] = true;
                parent[w.0] = Some(e);
                queue.push_back(w);
            }
        }
    }
    let back = shortest_paths_to(graph, root);

    let mut tree = vec![false; graph.edge_count()];
    for e in parent.iter().flatten() {
        tree[e.0] = true;
    }
    let mut cycles = Vec::with_capacity(graph.edge_count() + 1 - n);
    for e in graph.edge_ids().filter(|e| !tree[e.0]) {
        let mut down = Vec::new();
        let mut v = graph.tail(e);
        while let Some(p) = parent[v.0] {
            down.push(p);
            v = graph.tail(p);
        }
        down.reverse();
        down.push(e);
        let mut v = graph.head(e);
        while let Some(step) = back[v.0] {
            down.push(step);
            v = graph.head(step);
        }
        cycles.push(Path::from_raw(root, down));
    }
    cycles
}

/// For every vertex, the first edge of a hop-shortest path to `target`
/// (`None` at the target itself).
fn shortest_paths_to<T>(graph: &WeightedDigraph<T>, target: VertexId) -> Vec<Option<EdgeId>> {
    let n = graph.vertex_count();
    let mut next = vec![None; n];
    let mut seen = vec![false; n];
    seen[target.0] = true;
    let mut queue = std::collections::VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        for &e in graph.in_edges(v) {
            let u = graph.tail(e);
            if !seen[u.0] {
                seen[u.0] = true;
                next[u.0] = Some(e);
                queue.push_back(u);
            }
        }
    }
    next
}

/// A random closed walk at `start` with between 0 and `max_len` steps.
///
/// The walk steps uniformly among edges that still allow a return to
/// `start` within the length budget, then closes along a shortest path.
pub fn random_closed_walk<T, R: Rng + ?Sized>(
    graph: &WeightedDigraph<T>,
    start: VertexId,
    max_len: usize,
    rng: &mut R,
) -> Path {
    if max_len == 0 {
        return Path::empty(start);
    }
    let dist = graph.hop_distances(start, true);
    let budget = rng.random_range(1..=max_len);
    let mut edges = Vec::new();
    let mut at = start;
    let mut candidates = Vec::new();
    loop {
        candidates.clear();
        candidates.extend(graph.out_edges(at).iter().copied().filter(|&e| {
            dist[graph.head(e).0].is_some_and(|d| edges.len() + 1 + d <= budget)
        }));
        if candidates.is_empty() {
            break;
        }
        let e = candidates[rng.random_range(0..candidates.len())];
        edges.push(e);
        at = graph.head(e);
        if at == start && edges.len() == budget {
            break;
        }
    }
    debug_assert_eq!(at, start);
    Path::from_raw(start, edges)
}
