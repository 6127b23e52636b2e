//! Stationary distributions, time-reversed environments and the finite-ε
//! coupling `(φ_ε, φ̌_ε, υ_ε)`.
//!
//! For an environment `ω_ε` with stationary law `π`, the reversed
//! environment on the dual graph is
//! `log ω̌(y, ě) = log π(x) − log π(y) + log ω(x, e)` for `e = (x, y)`, and
//! `φ̌ = υ + φ` with `υ(e) = −ε log π(x) + ε log π(y)` a gradient.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::environment::{phi_transform, sample_dirichlet_env, DirichletEnvironment, EnvError};
use crate::graph::{GraphError, Path, WeightedDigraph};
use crate::samplers::RngStream;
use crate::stats::special::{log_add_exp, log_sum_exp, regularized_incomplete_beta};
use crate::stats::{be_exp_battery, ks_one_sample, StatError, StatReport, KS_ALPHA, KS_ALPHA_SWEEP, KS_SLACK};

/// Bound on `‖πP − π‖_∞` accepted as a stationary solve.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;
/// Absolute tolerance of `φ̌ = υ + φ` per edge.
pub const RELATION_TOL: f64 = 1e-12;
/// Relative factor of the closed-loop tolerance `tol · L_max · max|f|`.
pub const CLOSED_LOOP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ReversalError {
    #[error("stationary system is singular: {0}")]
    SingularSystem(String),
    #[error("stationary input inconsistent with the environment: {0}")]
    InconsistentStationaryInput(String),
    #[error("loop {index} is not closed")]
    NotClosed { index: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Stat(#[from] StatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StationaryMethod {
    /// State reduction (Grassmann–Taksar–Heyman) on log-probabilities.
    /// Uses no subtractions, so tiny masses keep full relative accuracy.
    #[default]
    LogGth,
    /// Gaussian elimination with partial pivoting on `Pᵀ − I` with the
    /// last row replaced by the normalization.
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub log_pi: Vec<f64>,
    pub pi: Vec<f64>,
    /// `‖πP − π‖_∞`.
    pub residual: f64,
}

/// Log transition matrix: `L[x][y] = log Σ_{e=(x,y)} ω(x, e)`.
fn log_transition_matrix(graph: &WeightedDigraph<f64>, env: &DirichletEnvironment) -> Vec<Vec<f64>> {
    let n = graph.vertex_count();
    let mut l = vec![vec![f64::NEG_INFINITY; n]; n];
    for e in graph.edge_ids() {
        let (x, y) = (graph.tail(e).0, graph.head(e).0);
        l[x][y] = log_add_exp(l[x][y], env.log_prob(e));
    }
    l
}

/// `max_y |Σ_{e=(x,y)} π(x) ω(x, e) − π(y)|`.
pub fn stationary_residual(graph: &WeightedDigraph<f64>, env: &DirichletEnvironment, pi: &[f64]) -> f64 {
    let mut flow = vec![0.0; graph.vertex_count()];
    for e in graph.edge_ids() {
        flow[graph.head(e).0] += pi[graph.tail(e).0] * env.log_prob(e).exp();
    }
    flow.iter()
        .zip(pi)
        .map(|(f, p)| (f - p).abs())
        .fold(0.0, f64::max)
}

pub fn stationary_distribution(
    graph: &WeightedDigraph<f64>,
    env: &DirichletEnvironment,
) -> Result<StationaryDistribution, ReversalError> {
    stationary_distribution_with(graph, env, StationaryMethod::default())
}

pub fn stationary_distribution_with(
    graph: &WeightedDigraph<f64>,
    env: &DirichletEnvironment,
    method: StationaryMethod,
) -> Result<StationaryDistribution, ReversalError> {
    let log_pi = match method {
        StationaryMethod::LogGth => log_gth(log_transition_matrix(graph, env))?,
        StationaryMethod::Dense => dense_solve(graph, env)?,
    };
    let pi: Vec<f64> = log_pi.iter().map(|l| l.exp()).collect();
    let residual = stationary_residual(graph, env, &pi);
    Ok(StationaryDistribution {
        log_pi,
        pi,
        residual,
    })
}

fn log_gth(mut l: Vec<Vec<f64>>) -> Result<Vec<f64>, ReversalError> {
    let n = l.len();
    for k in (1..n).rev() {
        let s = log_sum_exp(&l[k][..k]);
        if s == f64::NEG_INFINITY || s.is_nan() {
            return Err(ReversalError::SingularSystem(format!(
                "state {k} cannot reach states 0..{k} after reduction"
            )));
        }
        for i in 0..k {
            l[i][k] -= s;
        }
        for i in 0..k {
            let lik = l[i][k];
            if lik == f64::NEG_INFINITY {
                continue;
            }
            for j in 0..k {
                let v = lik + l[k][j];
                l[i][j] = log_add_exp(l[i][j], v);
            }
        }
    }
    let mut log_pi = vec![0.0; n];
    for k in 1..n {
        let terms: Vec<f64> = (0..k).map(|i| log_pi[i] + l[i][k]).collect();
        log_pi[k] = log_sum_exp(&terms);
    }
    let total = log_sum_exp(&log_pi);
    for v in &mut log_pi {
        *v -= total;
    }
    if log_pi.iter().any(|v| !v.is_finite()) {
        return Err(ReversalError::SingularSystem("non-finite stationary mass".into()));
    }
    Ok(log_pi)
}

fn dense_solve(graph: &WeightedDigraph<f64>, env: &DirichletEnvironment) -> Result<Vec<f64>, ReversalError> {
    let n = graph.vertex_count();
    // row y of Pᵀ − I, then the last row replaced by ones
    let mut a = vec![vec![0.0; n + 1]; n];
    for e in graph.edge_ids() {
        a[graph.head(e).0][graph.tail(e).0] += env.log_prob(e).exp();
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[piv][col].abs() < 1e-300 {
            return Err(ReversalError::SingularSystem(format!("zero pivot in column {col}")));
        }
        a.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..=n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut pi = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * pi[c]).sum();
        pi[r] = (a[r][n] - s) / a[r][r];
    }
    if let Some(x) = pi.iter().position(|&p| !(p > 0.0)) {
        return Err(ReversalError::SingularSystem(format!(
            "non-positive stationary mass {} at vertex {x}",
            pi[x]
        )));
    }
    Ok(pi.iter().map(|p| p.ln()).collect())
}

/// The reversed environment on `graph.dual()`.
pub fn reverse_environment(
    graph: &WeightedDigraph<f64>,
    env: &DirichletEnvironment,
    stationary: &StationaryDistribution,
) -> Result<DirichletEnvironment, ReversalError> {
    reverse_on(graph, &graph.dual(), env, stationary)
}

fn reverse_on(
    graph: &WeightedDigraph<f64>,
    dual: &WeightedDigraph<f64>,
    env: &DirichletEnvironment,
    stationary: &StationaryDistribution,
) -> Result<DirichletEnvironment, ReversalError> {
    if stationary.log_pi.len() != graph.vertex_count() {
        return Err(ReversalError::InconsistentStationaryInput(format!(
            "{} masses for {} vertices",
            stationary.log_pi.len(),
            graph.vertex_count()
        )));
    }
    let residual = stationary_residual(graph, env, &stationary.pi);
    if !(residual <= STATIONARY_RESIDUAL_TOL) {
        return Err(ReversalError::InconsistentStationaryInput(format!("residual {residual:e}")));
    }
    let lp = &stationary.log_pi;
    let log_probs: Vec<f64> = graph
        .edge_ids()
        .map(|e| lp[graph.tail(e).0] - lp[graph.head(e).0] + env.log_prob(e))
        .collect();
    DirichletEnvironment::from_log_probs(dual, env.epsilon(), log_probs).map_err(|e| match e {
        EnvError::NotNormalized { vertex, logsum } => ReversalError::InconsistentStationaryInput(format!(
            "reversed vertex {vertex} has log row sum {logsum:e}"
        )),
        other => other.into(),
    })
}

/// One finite-ε coupling sample. All vectors are indexed by edge id (the
/// dual edge `ě` shares the id of `e`).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTriple {
    pub epsilon: f64,
    pub phi: Vec<f64>,
    pub phi_check: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub environment: DirichletEnvironment,
    pub reversed: DirichletEnvironment,
    pub stationary: StationaryDistribution,
}

/// Samples `ω_ε` and derives the coupling triple. Warns when the weights are
/// not divergence-free.
pub fn build_coupling(
    graph: &WeightedDigraph<f64>,
    epsilon: f64,
    rng: &RngStream,
) -> Result<CouplingTriple, ReversalError> {
    if !graph.is_divergence_free(1e-12) {
        warn!(
            "coupling on weights with divergence {:e}: the reversed law is not claimed",
            graph.max_abs_divergence()
        );
    }
    coupling_on(graph, &graph.dual(), epsilon, rng)
}

fn coupling_on(
    graph: &WeightedDigraph<f64>,
    dual: &WeightedDigraph<f64>,
    epsilon: f64,
    rng: &RngStream,
) -> Result<CouplingTriple, ReversalError> {
    let environment = sample_dirichlet_env(graph, epsilon, rng)?;
    let stationary = stationary_distribution(graph, &environment)?;
    let reversed = reverse_on(graph, dual, &environment, &stationary)?;
    let lp = &stationary.log_pi;
    let upsilon = graph
        .edge_ids()
        .map(|e| -epsilon * lp[graph.tail(e).0] + epsilon * lp[graph.head(e).0])
        .collect();
    Ok(CouplingTriple {
        epsilon,
        phi: phi_transform(&environment),
        phi_check: phi_transform(&reversed),
        upsilon,
        environment,
        reversed,
        stationary,
    })
}

/// `max_e |φ̌(ě) − υ(e) − φ(e)|`.
pub fn relation_error(triple: &CouplingTriple) -> f64 {
    triple
        .phi_check
        .iter()
        .zip(&triple.upsilon)
        .zip(&triple.phi)
        .map(|((c, u), p)| (c - u - p).abs())
        .fold(0.0, f64::max)
}

/// `max |Σ_{e ∈ loop} f(e)|` over the loops, against
/// `1e-9 · (longest loop) · max|f|`. The note names the worst loop.
pub fn closed_loop_check(
    f: &[f64],
    graph: &WeightedDigraph<f64>,
    loops: &[Path],
) -> Result<StatReport, ReversalError> {
    let mut worst = (0.0f64, 0usize);
    let mut longest = 0;
    for (index, p) in loops.iter().enumerate() {
        if !p.is_closed(graph) {
            return Err(ReversalError::NotClosed { index });
        }
        longest = longest.max(p.len());
        let s: f64 = p.edges().iter().map(|e| f[e.0]).sum();
        if !(s.abs() <= worst.0) {
            worst = (s.abs(), index);
        }
    }
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let report = StatReport::new(
        "closed-loop",
        worst.0,
        CLOSED_LOOP_TOL * longest as f64 * fmax,
        vec![loops.len()],
        0.0,
    );
    Ok(if report.passed {
        report
    } else {
        let vs: Vec<String> = loops[worst.1]
            .vertices(graph)
            .iter()
            .map(|v| graph.label(*v).to_string())
            .collect();
        report.with_note(format!("loop {} ({}) sums to {:e}", worst.1, vs.join("->"), worst.0))
    })
}

/// For every closed path, `|Σ_π φ − Σ_π̌ φ̌|`, with `π̌` walked on the dual.
pub fn closed_path_corollary(
    graph: &WeightedDigraph<f64>,
    dual: &WeightedDigraph<f64>,
    triple: &CouplingTriple,
    loops: &[Path],
) -> Result<StatReport, ReversalError> {
    let mut worst = 0.0f64;
    for (index, p) in loops.iter().enumerate() {
        if !p.is_closed(graph) {
            return Err(ReversalError::NotClosed { index });
        }
        let r = p.reversed(graph);
        let r = Path::new(dual, r.start(), r.edges().to_vec())?;
        let forward: f64 = p.edges().iter().map(|e| triple.phi[e.0]).sum();
        let backward: f64 = r.edges().iter().map(|e| triple.phi_check[e.0]).sum();
        worst = worst.max((forward - backward).abs());
    }
    Ok(StatReport::new(
        "closed-path-corollary",
        worst,
        CLOSED_LOOP_TOL,
        vec![loops.len()],
        0.0,
    ))
}

/// The exact items of the coupling on one sample: relation `φ̌ = υ + φ`,
/// closed loops of `υ`, and the closed-path corollary.
pub fn algebraic_checks(
    graph: &WeightedDigraph<f64>,
    dual: &WeightedDigraph<f64>,
    triple: &CouplingTriple,
    loops: &[Path],
) -> Result<Vec<StatReport>, ReversalError> {
    let n_edges = graph.edge_count();
    Ok(vec![
        StatReport::new("relation", relation_error(triple), RELATION_TOL, vec![n_edges], 0.0),
        closed_loop_check(&triple.upsilon, graph, loops)?.named("upsilon-closed-loop"),
        closed_path_corollary(graph, dual, triple, loops)?,
    ])
}

/// Reports of one ε in the distributional check.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonReports {
    pub epsilon: f64,
    /// Battery of `φ_ε` against `Be-Exp(a_x)` at every vertex with `M_x ≥ 2`.
    pub primal: Vec<StatReport>,
    /// Battery of `φ̌_ε` against `Be-Exp(ǎ_y)` on the dual.
    pub dual: Vec<StatReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingLawReport {
    pub per_epsilon: Vec<EpsilonReports>,
    /// Decrease of the largest conditional KS statistic along the ε list,
    /// for `φ` then `φ̌`. Empty for a single ε.
    pub trend: Vec<StatReport>,
    /// KS of each `ω̌` coordinate against its Beta marginal at the largest ε.
    pub beta: Vec<StatReport>,
}

fn all_pass(rs: &[StatReport]) -> bool {
    rs.iter().all(|r| r.passed)
}

impl CouplingLawReport {
    fn smallest(&self) -> &EpsilonReports {
        self.per_epsilon.last().expect("nonempty ε list")
    }

    /// Check (A) at the smallest ε.
    pub fn primal_passed(&self) -> bool {
        all_pass(&self.smallest().primal)
    }

    /// Check (B) at the smallest ε.
    pub fn dual_passed(&self) -> bool {
        all_pass(&self.smallest().dual)
    }

    pub fn trend_passed(&self) -> bool {
        all_pass(&self.trend)
    }

    pub fn beta_passed(&self) -> bool {
        all_pass(&self.beta)
    }

    pub fn passed(&self) -> bool {
        self.primal_passed() && self.dual_passed() && self.trend_passed() && self.beta_passed()
    }

    /// Every report in a fixed order.
    pub fn reports(&self) -> Vec<StatReport> {
        let mut out = Vec::new();
        for p in &self.per_epsilon {
            out.extend(p.primal.iter().cloned());
            out.extend(p.dual.iter().cloned());
        }
        out.extend(self.trend.iter().cloned());
        out.extend(self.beta.iter().cloned());
        out
    }
}

/// Samples `n` couplings per ε (sample `i` always uses `base.child(i)`).
pub fn sample_couplings(
    graph: &WeightedDigraph<f64>,
    epsilon: f64,
    n: usize,
    base: &RngStream,
) -> Result<Vec<CouplingTriple>, ReversalError> {
    let dual = graph.dual();
    (0..n)
        .into_par_iter()
        .map(|i| coupling_on(graph, &dual, epsilon, &base.child(i as u64)))
        .collect()
}

fn vertex_battery(
    name: &str,
    graph: &WeightedDigraph<f64>,
    values: &[&[f64]],
) -> Result<Vec<StatReport>, ReversalError> {
    let mut out = Vec::new();
    for x in graph.vertices() {
        let edges = graph.out_edges(x);
        if edges.len() < 2 {
            continue;
        }
        let samples: Vec<Vec<f64>> = values
            .iter()
            .map(|v| edges.iter().map(|e| v[e.0]).collect())
            .collect();
        let label = format!("{name}/{}", graph.label(x));
        out.extend(be_exp_battery(&label, &samples, &graph.out_weights(x), KS_ALPHA, KS_SLACK)?);
    }
    Ok(out)
}

fn max_ks(reports: &[StatReport]) -> f64 {
    reports
        .iter()
        .filter(|r| r.name.contains("/ks["))
        .map(|r| r.statistic)
        .fold(0.0, f64::max)
}

/// The distributional items of the coupling, checked along a decreasing ε
/// list with `n` samples per ε.
pub fn coupling_law_check(
    graph: &WeightedDigraph<f64>,
    epsilons: &[f64],
    n: usize,
    base: &RngStream,
) -> Result<CouplingLawReport, ReversalError> {
    if epsilons.is_empty() {
        return Err(StatError::Domain("empty ε list".into()).into());
    }
    let dual = graph.dual();
    let mut per_epsilon = Vec::new();
    let mut beta = Vec::new();
    for (k, &eps) in epsilons.iter().enumerate() {
        let triples = sample_couplings(graph, eps, n, base)?;
        let phi: Vec<&[f64]> = triples.iter().map(|t| t.phi.as_slice()).collect();
        let phi_check: Vec<&[f64]> = triples.iter().map(|t| t.phi_check.as_slice()).collect();
        let tag = format!("eps={eps}");
        let primal = vertex_battery(&format!("phi/{tag}"), graph, &phi)?;
        let dual_reports = vertex_battery(&format!("phi-check/{tag}"), &dual, &phi_check)?;
        let mut entry = EpsilonReports {
            epsilon: eps,
            primal,
            dual: dual_reports,
        };
        // only the smallest ε decides the verdict of (A) and (B)
        if k + 1 < epsilons.len() {
            for r in entry.primal.iter_mut().chain(entry.dual.iter_mut()) {
                r.gating = false;
            }
        }
        per_epsilon.push(entry);
        if k == 0 {
            beta = beta_marginal_checks(&dual, &triples)?;
        }
    }
    let mut trend = Vec::new();
    if per_epsilon.len() > 1 {
        for (which, pick) in [
            ("phi", (|r: &EpsilonReports| max_ks(&r.primal)) as fn(&EpsilonReports) -> f64),
            ("phi-check", |r: &EpsilonReports| max_ks(&r.dual)),
        ] {
            let ks: Vec<f64> = per_epsilon.iter().map(pick).collect();
            let worst = ks.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            let series: Vec<String> = ks.iter().map(|v| format!("{v:.5}")).collect();
            trend.push(
                StatReport::new(format!("trend/{which}"), worst, 0.0, vec![n; ks.len()], 0.0)
                    .with_note(format!("max conditional KS along eps: {}", series.join(","))),
            );
        }
        // the increments must be strictly negative
        for r in &mut trend {
            r.passed = r.statistic < 0.0;
        }
    }
    Ok(CouplingLawReport {
        per_epsilon,
        trend,
        beta,
    })
}

/// KS of `ω̌(y, ě)` against `Beta(εǎ_e, ε(Σ_{E_y} ǎ − ǎ_e))` for every dual
/// edge at a dual vertex of degree ≥ 2.
pub fn beta_marginal_checks(
    dual: &WeightedDigraph<f64>,
    triples: &[CouplingTriple],
) -> Result<Vec<StatReport>, ReversalError> {
    let mut out = Vec::new();
    let Some(eps) = triples.first().map(|t| t.epsilon) else {
        return Ok(out);
    };
    for y in dual.vertices() {
        let edges = dual.out_edges(y);
        if edges.len() < 2 {
            continue;
        }
        let total: f64 = dual.out_weights(y).iter().sum();
        for &e in edges {
            let (a, b) = (eps * dual.weight(e), eps * (total - dual.weight(e)));
            let xs: Vec<f64> = triples.iter().map(|t| t.reversed.log_prob(e).exp()).collect();
            let cdf = |x: f64| regularized_incomplete_beta(a, b, x.clamp(0.0, 1.0)).unwrap_or(f64::NAN);
            let r = ks_one_sample(&xs, cdf, KS_ALPHA_SWEEP)?;
            out.push(r.named(format!("omega-check-beta/eps={eps}/{}/e{}", dual.label(y), e.0)));
        }
    }
    Ok(out)
}

/// Rows `(tail, head, phi, phi_check, upsilon, epsilon, sample)`.
pub fn write_coupling_csv<W: std::io::Write>(
    graph: &WeightedDigraph<f64>,
    triples: &[(usize, &CouplingTriple)],
    out: W,
) -> Result<(), EnvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tail", "head", "phi", "phi_check", "upsilon", "epsilon", "sample"])?;
    for (id, t) in triples {
        for e in graph.edge_ids() {
            w.write_record([
                graph.label(graph.tail(e)).to_string(),
                graph.label(graph.head(e)).to_string(),
                t.phi[e.0].to_string(),
                t.phi_check[e.0].to_string(),
                t.upsilon[e.0].to_string(),
                t.epsilon.to_string(),
                id.to_string(),
            ])?;
        }
    }
    w.flush().map_err(EnvError::from)
}

/// Vertex potential `g` turned into the gradient `g(head) − g(tail)`.
pub fn gradient(graph: &WeightedDigraph<f64>, g: &[f64]) -> Vec<f64> {
    graph.edge_ids().map(|e| g[graph.head(e).0] - g[graph.tail(e).0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fundamental_cycles, random_closed_walk, EdgeId};
    use rand::Rng;

    fn chords() -> WeightedDigraph<f64> {
        WeightedDigraph::from_edges(
            4,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (1, 0, 0.5),
                (2, 1, 0.5),
                (0, 2, 0.5),
                (0, 3, 0.5),
                (3, 0, 0.5),
            ],
        )
        .unwrap()
    }

    fn env_from_probs(g: &WeightedDigraph<f64>, p: &[f64]) -> DirichletEnvironment {
        DirichletEnvironment::from_log_probs(g, 1.0, p.iter().map(|v| v.ln()).collect()).unwrap()
    }

    fn power_iteration(g: &WeightedDigraph<f64>, env: &DirichletEnvironment, iters: usize) -> Vec<f64> {
        let n = g.vertex_count();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..iters {
            let mut next = vec![0.0; n];
            for e in g.edge_ids() {
                next[g.head(e).0] += pi[g.tail(e).0] * env.log_prob(e).exp();
            }
            // lazy step keeps periodic chains convergent
            for (p, q) in pi.iter_mut().zip(&next) {
                *p = 0.5 * *p + 0.5 * q;
            }
        }
        pi
    }

    #[test]
    fn symmetric_two_cycle() {
        let g = WeightedDigraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let env = env_from_probs(&g, &[1.0, 1.0]);
        for m in [StationaryMethod::LogGth, StationaryMethod::Dense] {
            let s = stationary_distribution_with(&g, &env, m).unwrap();
            assert!((s.pi[0] - 0.5).abs() < 1e-15 && (s.pi[1] - 0.5).abs() < 1e-15);
            assert!(s.residual <= 1e-15);
        }
    }

    #[test]
    fn doubly_stochastic_is_uniform() {
        // the rows and columns of the transition matrix all sum to 1
        let g = WeightedDigraph::from_edges(
            3,
            &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (1, 0, 1.0), (2, 0, 1.0), (2, 1, 1.0)],
        )
        .unwrap();
        let env = env_from_probs(&g, &[0.3, 0.7, 0.3, 0.7, 0.3, 0.7]);
        let s = stationary_distribution(&g, &env).unwrap();
        for p in &s.pi {
            assert!((p - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_power_iteration() {
        let g = chords();
        let base = RngStream::new(5, 0);
        for i in 0..20 {
            let env = sample_dirichlet_env(&g, 1.0, &base.child(i)).unwrap();
            let oracle = power_iteration(&g, &env, 100_000);
            for m in [StationaryMethod::LogGth, StationaryMethod::Dense] {
                let s = stationary_distribution_with(&g, &env, m).unwrap();
                let sup = s.pi.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(sup < 1e-8, "method {m:?} sample {i}: {sup:e}");
                assert!(s.residual <= STATIONARY_RESIDUAL_TOL);
            }
        }
    }

    #[test]
    fn small_epsilon_keeps_log_accuracy() {
        let g = chords();
        let env = sample_dirichlet_env(&g, 0.02, &RngStream::new(6, 0)).unwrap();
        let s = stationary_distribution(&g, &env).unwrap();
        assert!(s.log_pi.iter().all(|l| l.is_finite()));
        let rev = reverse_environment(&g, &env, &s).unwrap();
        let d = g.dual();
        for y in d.vertices() {
            assert!(log_sum_exp(&rev.vertex_log_probs(&d, y)).abs() < 1e-10);
        }
    }

    #[test]
    fn reversible_two_cycle_transports_weights() {
        let g = WeightedDigraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let env = env_from_probs(&g, &[1.0, 1.0]);
        let s = stationary_distribution(&g, &env).unwrap();
        let rev = reverse_environment(&g, &env, &s).unwrap();
        assert_eq!(rev.log_probs(), env.log_probs());
    }

    #[test]
    fn reversing_twice_recovers_environment() {
        let g = chords();
        let d = g.dual();
        let base = RngStream::new(7, 0);
        for i in 0..100 {
            let env = sample_dirichlet_env(&g, 0.7, &base.child(i)).unwrap();
            let s = stationary_distribution(&g, &env).unwrap();
            let rev = reverse_environment(&g, &env, &s).unwrap();
            let s2 = stationary_distribution(&d, &rev).unwrap();
            for (a, b) in s.pi.iter().zip(&s2.pi) {
                assert!((a - b).abs() < 1e-12);
            }
            let back = reverse_environment(&d, &rev, &s).unwrap();
            for (a, b) in back.probabilities().iter().zip(env.probabilities()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn inconsistent_stationary_input() {
        let g = chords();
        let env = sample_dirichlet_env(&g, 1.0, &RngStream::new(8, 0)).unwrap();
        let mut s = stationary_distribution(&g, &env).unwrap();
        s.pi.swap(0, 1);
        s.log_pi.swap(0, 1);
        assert!(matches!(
            reverse_environment(&g, &env, &s),
            Err(ReversalError::InconsistentStationaryInput(_))
        ));
    }

    #[test]
    fn coupling_relation_and_loops() {
        let g = chords();
        let d = g.dual();
        let mut loops = fundamental_cycles(&g);
        let mut rng = RngStream::new(9, 1);
        for _ in 0..100 {
            let start = crate::graph::VertexId(rng.random_range(0..g.vertex_count()));
            loops.push(random_closed_walk(&g, start, 20, &mut rng));
        }
        let base = RngStream::new(9, 0);
        for i in 0..50 {
            let t = build_coupling(&g, 0.1, &base.child(i)).unwrap();
            for r in algebraic_checks(&g, &d, &t, &loops).unwrap() {
                assert!(r.passed, "{r:?}");
            }
        }
    }

    #[test]
    fn closed_loop_examples() {
        let g = WeightedDigraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        let loops = fundamental_cycles(&g);
        assert!(closed_loop_check(&[0.0, 0.0], &g, &loops).unwrap().passed);
        assert!(closed_loop_check(&gradient(&g, &[3.5, -1.25]), &g, &loops).unwrap().passed);
        let r = closed_loop_check(&g.weights(), &g, &loops).unwrap();
        assert!(!r.passed);
        assert_eq!(r.statistic, 3.0);
        assert!(r.note.unwrap().contains("0->1->0"));
        let open = Path::new(&g, crate::graph::VertexId(0), vec![EdgeId(0)]).unwrap();
        assert!(matches!(
            closed_loop_check(&[0.0, 0.0], &g, &[open]),
            Err(ReversalError::NotClosed { index: 0 })
        ));
    }

    #[test]
    fn singular_chain_is_reported() {
        // vertex 2 is a trap once the 2 -> 0 transition is numerically absent
        let g = WeightedDigraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let mut l = log_transition_matrix(&g, &env_from_probs(&g, &[1.0, 1.0, 1.0]));
        l[2][0] = f64::NEG_INFINITY;
        assert!(matches!(log_gth(l), Err(ReversalError::SingularSystem(_))));
    }
}
