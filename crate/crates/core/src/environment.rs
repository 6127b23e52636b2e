//! Random environments on a graph: Be-Exp environments and Dirichlet
//! environments at scale ε, both indexed by edge id.
//!
//! Vertex `x` draws from `RngStream::child(x)` of the stream handed in, so
//! an environment depends only on `(seed, stream, graph)`.

use std::io::Write;

use rand::distr::Distribution;
use thiserror::Error;

use crate::graph::{EdgeId, GraphError, VertexId, WeightedDigraph};
use crate::samplers::{BeExp, LogDirichlet, RngStream, SamplerError};
use crate::stats::special::log_sum_exp;

/// Tolerance on `logsumexp` of every per-vertex log-probability vector.
pub const NORMALIZATION_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("vertex {vertex}: log-probabilities sum to {logsum} in log-space")]
    NotNormalized { vertex: usize, logsum: f64 },
    #[error("edge {0} carries a non-finite log-probability")]
    NonFinite(usize),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for EnvError {
    fn from(e: std::io::Error) -> Self {
        EnvError::Io(e.to_string())
    }
}

impl From<csv::Error> for EnvError {
    fn from(e: csv::Error) -> Self {
        EnvError::Io(e.to_string())
    }
}

pub fn validate_epsilon(epsilon: f64) -> Result<(), EnvError> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(EnvError::InvalidEpsilon(epsilon))
    }
}

/// One sample `ω ~ P_BE^(a)`: weight `ω(x, e)` for every edge `e ∈ E_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeExpEnvironment {
    weights: Vec<f64>,
    zero_edges: Vec<EdgeId>,
}

impl BeExpEnvironment {
    /// Per-edge weights, indexed by edge id.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, e: EdgeId) -> f64 {
        self.weights[e.0]
    }

    /// The edge of `E_x` carrying weight zero.
    pub fn zero_edge(&self, x: VertexId) -> EdgeId {
        self.zero_edges[x.0]
    }

    /// `(ω(x, e))_{e ∈ E_x}` in the order of `E_x`.
    pub fn vertex_vector(&self, graph: &WeightedDigraph<f64>, x: VertexId) -> Vec<f64> {
        graph.out_edges(x).iter().map(|e| self.weights[e.0]).collect()
    }

    pub fn write_csv<W: Write>(&self, graph: &WeightedDigraph<f64>, out: W) -> Result<(), EnvError> {
        write_env_csv(graph, "be-exp", None, &self.weights, out)
    }
}

/// Independent `Be-Exp_{M_x}(a_x)` vectors at every vertex.
pub fn sample_be_env(
    graph: &WeightedDigraph<f64>,
    rng: &RngStream,
) -> Result<BeExpEnvironment, EnvError> {
    let mut weights = vec![0.0; graph.edge_count()];
    let mut zero_edges = Vec::with_capacity(graph.vertex_count());
    for x in graph.vertices() {
        let law = BeExp::new(&graph.out_weights(x))?;
        let s = law.sample(&mut rng.child(x.0 as u64));
        let out = graph.out_edges(x);
        for (&e, &v) in out.iter().zip(&s.values) {
            weights[e.0] = v;
        }
        zero_edges.push(out[s.zero_index]);
    }
    Ok(BeExpEnvironment {
        weights,
        zero_edges,
    })
}

/// A Dirichlet environment `ω_ε` stored as per-edge `log ω_ε(x, e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletEnvironment {
    epsilon: f64,
    log_probs: Vec<f64>,
}

impl DirichletEnvironment {
    /// Wraps per-edge log-probabilities after checking that every entry is
    /// finite and every vertex normalizes within [`NORMALIZATION_TOL`].
    pub fn from_log_probs(
        graph: &WeightedDigraph<f64>,
        epsilon: f64,
        log_probs: Vec<f64>,
    ) -> Result<Self, EnvError> {
        validate_epsilon(epsilon)?;
        if log_probs.len() != graph.edge_count() {
            return Err(GraphError::WeightLength {
                expected: graph.edge_count(),
                got: log_probs.len(),
            }
            .into());
        }
        if let Some(i) = log_probs.iter().position(|l| !l.is_finite()) {
            return Err(EnvError::NonFinite(i));
        }
        let env = DirichletEnvironment { epsilon, log_probs };
        for x in graph.vertices() {
            let logsum = log_sum_exp(&env.vertex_log_probs(graph, x));
            if !(logsum.abs() <= NORMALIZATION_TOL) {
                return Err(EnvError::NotNormalized {
                    vertex: x.0,
                    logsum,
                });
            }
        }
        Ok(env)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn log_prob(&self, e: EdgeId) -> f64 {
        self.log_probs[e.0]
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn vertex_log_probs(&self, graph: &WeightedDigraph<f64>, x: VertexId) -> Vec<f64> {
        graph.out_edges(x).iter().map(|e| self.log_probs[e.0]).collect()
    }

    pub fn write_csv<W: Write>(&self, graph: &WeightedDigraph<f64>, out: W) -> Result<(), EnvError> {
        write_env_csv(graph, "dirichlet-log", Some(self.epsilon), &self.log_probs, out)
    }
}

/// Independent `Dirichlet(ε a_x)` vectors at every vertex, in log-space.
pub fn sample_dirichlet_env(
    graph: &WeightedDigraph<f64>,
    epsilon: f64,
    rng: &RngStream,
) -> Result<DirichletEnvironment, EnvError> {
    validate_epsilon(epsilon)?;
    let mut log_probs = vec![0.0; graph.edge_count()];
    for x in graph.vertices() {
        let a: Vec<f64> = graph.out_weights(x).iter().map(|w| epsilon * w).collect();
        let s = LogDirichlet::new(&a)?.sample(&mut rng.child(x.0 as u64));
        for (&e, &l) in graph.out_edges(x).iter().zip(&s.logu) {
            log_probs[e.0] = l;
        }
    }
    Ok(DirichletEnvironment { epsilon, log_probs })
}

/// `φ_ε(x, e) = −ε log ω_ε(x, e)` per edge.
pub fn phi_transform(env: &DirichletEnvironment) -> Vec<f64> {
    // `+ 0.0` turns −0.0 (from log 1 = 0) into 0.0
    env.log_probs.iter().map(|&l| -env.epsilon * l + 0.0).collect()
}

fn write_env_csv<W: Write>(
    graph: &WeightedDigraph<f64>,
    law: &str,
    epsilon: Option<f64>,
    values: &[f64],
    mut out: W,
) -> Result<(), EnvError> {
    let a: Vec<String> = graph.weights().iter().map(|w| w.to_string()).collect();
    write!(out, "# law={law} a={}", a.join(";"))?;
    if let Some(eps) = epsilon {
        write!(out, " epsilon={eps}")?;
    }
    writeln!(out)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex", "edge", "value"])?;
    for e in graph.edge_ids() {
        w.write_record([
            graph.label(graph.tail(e)).to_string(),
            e.0.to_string(),
            values[e.0].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
