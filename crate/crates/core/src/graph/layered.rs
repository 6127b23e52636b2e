//! The seven-layer return-time graph.
//!
//! Layer 1 is the single vertex `x1_1` (the root), layers 2..=7 hold three
//! vertices `x{i}_{k}` each, plus an extra vertex `y`. Edges:
//! root → every layer-2 vertex; every layer-`i` vertex → every layer-`i+1`
//! vertex (`2 ≤ i ≤ 6`); every layer-7 vertex → root and → `y`; root → `y`;
//! `y` → root.

use serde::{Deserialize, Serialize};

use super::{EdgeId, GraphError, VertexId, VertexKey, WeightedDigraph};
use crate::scalar::Scalar;

/// How the three parameters `a1, a2, a3` are spread over the edges.
/// `S = a1 + a2 + a3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayeredWeighting {
    /// root → layer 2 edges weigh `S`; an edge into the `j`-th vertex of the
    /// next layer weighs `a_j`; layer 7 → root and layer 7 → `y` weigh `S/2`;
    /// `y` → root weighs `S`; root → `y` weighs `S/2`.
    ///
    /// This weighting is not divergence-free: the root carries `3.5 S` out
    /// and `2.5 S` in, for every choice of parameters.
    #[default]
    Literal,
    /// Same topology, divergence-free: root → `x2_k` weighs `a_k`; the
    /// layer edge `k → j` weighs `a_k a_j / S`; `x7_k` → root and `x7_k` → `y`
    /// weigh `a_k / 2`; root → `y` weighs `S/2`; `y` → root weighs `S`.
    Balanced,
}

/// The layered graph together with handles on its named vertices and
/// edge groups.
#[derive(Debug, Clone)]
pub struct LayeredGraph<T> {
    pub graph: WeightedDigraph<T>,
    pub weighting: LayeredWeighting,
    /// `x1_1`.
    pub root: VertexId,
    pub y: VertexId,
    layers: [[VertexId; 3]; 6],
    /// root → `x2_k`, `k = 1..3`.
    pub root_to_layer2: [EdgeId; 3],
    /// `x7_k` → root.
    pub layer7_to_root: [EdgeId; 3],
    /// `x7_k` → `y`.
    pub layer7_to_y: [EdgeId; 3],
    pub root_to_y: EdgeId,
    pub y_to_root: EdgeId,
}

impl<T> LayeredGraph<T> {
    /// Vertices of layer `i`, `2 ≤ i ≤ 7`.
    pub fn layer(&self, i: usize) -> [VertexId; 3] {
        assert!((2..=7).contains(&i), "layer index {i} out of range 2..=7");
        self.layers[i - 2]
    }
}

/// The layered graph with the [`LayeredWeighting::Literal`] weights.
pub fn build_layered_example<T: Scalar>(a1: T, a2: T, a3: T) -> Result<LayeredGraph<T>, GraphError> {
    build_layered([a1, a2, a3], LayeredWeighting::Literal)
}

pub fn build_layered<T: Scalar>(
    a: [T; 3],
    weighting: LayeredWeighting,
) -> Result<LayeredGraph<T>, GraphError> {
    for (i, &ai) in a.iter().enumerate() {
        let v = ai.to_f64_lossy();
        if !(v.is_finite() && v > 0.0) {
            return Err(GraphError::NonPositiveWeight {
                edge: i,
                tail: format!("a{}", i + 1),
                head: String::new(),
                weight: v,
            });
        }
    }
    let s = a[0] + a[1] + a[2];
    let two = T::one() + T::one();

    let mut labels: Vec<VertexKey> = vec!["x1_1".into()];
    let mut layers = [[VertexId(0); 3]; 6];
    for (li, layer) in layers.iter_mut().enumerate() {
        for (k, v) in layer.iter_mut().enumerate() {
            *v = VertexId(labels.len());
            labels.push(format!("x{}_{}", li + 2, k + 1).into());
        }
    }
    let root = VertexId(0);
    let y = VertexId(labels.len());
    labels.push("y".into());

    let mut edges: Vec<(usize, usize, T)> = Vec::new();
    let mut push = |t: VertexId, h: VertexId, w: T| {
        edges.push((t.0, h.0, w));
        EdgeId(edges.len() - 1)
    };

    let mut root_to_layer2 = [EdgeId(0); 3];
    for k in 0..3 {
        let w = match weighting {
            LayeredWeighting::Literal => s,
            LayeredWeighting::Balanced => a[k],
        };
        root_to_layer2[k] = push(root, layers[0][k], w);
    }
    for li in 0..5 {
        for k in 0..3 {
            for j in 0..3 {
                let w = match weighting {
                    LayeredWeighting::Literal => a[j],
                    LayeredWeighting::Balanced => a[k] * a[j] / s,
                };
                push(layers[li][k], layers[li + 1][j], w);
            }
        }
    }
    let mut layer7_to_root = [EdgeId(0); 3];
    let mut layer7_to_y = [EdgeId(0); 3];
    for k in 0..3 {
        let w = match weighting {
            LayeredWeighting::Literal => s / two,
            LayeredWeighting::Balanced => a[k] / two,
        };
        layer7_to_root[k] = push(layers[5][k], root, w);
        layer7_to_y[k] = push(layers[5][k], y, w);
    }
    let root_to_y = push(root, y, s / two);
    let y_to_root = push(y, root, s);

    let graph = WeightedDigraph::from_parts(labels, &edges)?;
    Ok(LayeredGraph {
        graph,
        weighting,
        root,
        y,
        layers,
        root_to_layer2,
        layer7_to_root,
        layer7_to_y,
        root_to_y,
        y_to_root,
    })
}
