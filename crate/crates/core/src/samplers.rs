//! Random variates for the model: exponentials, small-shape Gamma in
//! log-space, Dirichlet in log-space, generalized Bernoulli and generalized
//! Bernoulli–Exponential vectors.
//!
//! All randomness flows through [`RngStream`], a ChaCha8 generator keyed by a
//! 64-bit seed and a 64-bit stream id. `RngStream::child(i)` derives the
//! stream id `splitmix64(stream ^ splitmix64(i + 1))` under the same seed, so
//! Monte Carlo work keyed by `(seed, sample index, vertex index)` is
//! reproducible regardless of scheduling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Open01};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Gamma};
use serde::Serialize;
use thiserror::Error;

use crate::stats::special::log_sum_exp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("parameter {index} must be positive and finite, got {value}")]
    NonPositiveParameter { index: usize, value: f64 },
    #[error("parameter vector is empty")]
    EmptyParameters,
    #[error("need at least {needed} coordinates, got {got}")]
    TooFewCoordinates { needed: usize, got: usize },
    #[error("coordinates {first} and {second} tie for the minimum ({value})")]
    TiedMinimum {
        first: usize,
        second: usize,
        value: f64,
    },
}

/// Reproducible random stream: identical `(seed, stream)` pairs produce
/// identical sequences.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    /// Fresh stream for sub-task `index`, independent of this stream's
    /// consumption state.
    pub fn child(&self, index: u64) -> Self {
        RngStream::new(
            self.seed,
            splitmix64(self.stream ^ splitmix64(index.wrapping_add(1))),
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn validate(a: &[f64]) -> Result<(), SamplerError> {
    if a.is_empty() {
        return Err(SamplerError::EmptyParameters);
    }
    match a.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
        Some(index) => Err(SamplerError::NonPositiveParameter {
            index,
            value: a[index],
        }),
        None => Ok(()),
    }
}

/// `p_i = a_i / Σ_j a_j`.
pub fn prob_vector(a: &[f64]) -> Result<Vec<f64>, SamplerError> {
    validate(a)?;
    let total: f64 = a.iter().sum();
    Ok(a.iter().map(|&v| v / total).collect())
}

/// One draw `X = ((1−B_1)E_1, …, (1−B_M)E_M)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeExpSample {
    pub values: Vec<f64>,
    /// The unique `i` with `B_i = 1`, i.e. the zero coordinate.
    pub zero_index: usize,
}

impl BeExpSample {
    /// Assembles `X` from a Bernoulli index and the exponential draws.
    pub fn from_draws(zero_index: usize, exponentials: &[f64]) -> Self {
        let values = exponentials
            .iter()
            .enumerate()
            .map(|(i, &e)| if i == zero_index { 0.0 } else { e })
            .collect();
        BeExpSample { values, zero_index }
    }
}

/// The generalized Bernoulli–Exponential law `Be-Exp_M(a)`.
#[derive(Debug, Clone)]
pub struct BeExp {
    index: WeightedIndex<f64>,
    exps: Vec<Exp<f64>>,
}

impl BeExp {
    pub fn new(a: &[f64]) -> Result<Self, SamplerError> {
        validate(a)?;
        let index = WeightedIndex::new(a).map_err(|_| SamplerError::EmptyParameters)?;
        let exps = a
            .iter()
            .map(|&r| Exp::new(r).expect("validated rate"))
            .collect();
        Ok(BeExp { index, exps })
    }

    pub fn order(&self) -> usize {
        self.exps.len()
    }
}

impl Distribution<BeExpSample> for BeExp {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BeExpSample {
        let zero_index = self.index.sample(rng);
        let draws: Vec<f64> = self.exps.iter().map(|e| e.sample(rng)).collect();
        BeExpSample::from_draws(zero_index, &draws)
    }
}

pub fn sample_be_exp<R: Rng + ?Sized>(a: &[f64], rng: &mut R) -> Result<BeExpSample, SamplerError> {
    Ok(BeExp::new(a)?.sample(rng))
}

/// `log W` for `W ~ Gamma(alpha, 1)`.
///
/// For `alpha < 1` the draw uses `W = U^{1/alpha} W'` with `W' ~ Gamma(alpha+1)`
/// and `U` uniform on (0,1), evaluated as `ln U / alpha + ln W'`, which stays
/// finite for shapes far below the point where `W` itself underflows.
#[derive(Debug, Clone, Copy)]
pub struct LogGamma {
    alpha: f64,
    gamma: Gamma<f64>,
}

impl LogGamma {
    pub fn new(alpha: f64) -> Result<Self, SamplerError> {
        validate(&[alpha])?;
        let shape = if alpha < 1.0 { alpha + 1.0 } else { alpha };
        let gamma = Gamma::new(shape, 1.0).expect("validated shape");
        Ok(LogGamma { alpha, gamma })
    }
}

impl Distribution<f64> for LogGamma {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w: f64 = self.gamma.sample(rng);
        if self.alpha < 1.0 {
            let u: f64 = Open01.sample(rng);
            u.ln() / self.alpha + w.ln()
        } else {
            w.ln()
        }
    }
}

pub fn sample_log_gamma_small_shape<R: Rng + ?Sized>(
    alpha: f64,
    rng: &mut R,
) -> Result<f64, SamplerError> {
    Ok(LogGamma::new(alpha)?.sample(rng))
}

/// A Dirichlet draw stored as `log U_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogDirichletSample {
    pub logu: Vec<f64>,
}

impl LogDirichletSample {
    pub fn probabilities(&self) -> Vec<f64> {
        self.logu.iter().map(|l| l.exp()).collect()
    }
}

/// `Dirichlet(a)` in log-space: `log U_i = log W_i − logsumexp_j log W_j`.
#[derive(Debug, Clone)]
pub struct LogDirichlet {
    parts: Vec<LogGamma>,
}

impl LogDirichlet {
    pub fn new(a: &[f64]) -> Result<Self, SamplerError> {
        validate(a)?;
        let parts = a.iter().map(|&v| LogGamma::new(v)).collect::<Result<_, _>>()?;
        Ok(LogDirichlet { parts })
    }

    /// Draws the Dirichlet vector together with `log Σ_j W_j`.
    pub fn sample_with_total<R: Rng + ?Sized>(&self, rng: &mut R) -> (LogDirichletSample, f64) {
        if self.parts.len() == 1 {
            let lw = self.parts[0].sample(rng);
            return (LogDirichletSample { logu: vec![0.0] }, lw);
        }
        let mut logw: Vec<f64> = self.parts.iter().map(|g| g.sample(rng)).collect();
        let total = log_sum_exp(&logw);
        for l in &mut logw {
            *l -= total;
        }
        (LogDirichletSample { logu: logw }, total)
    }
}

impl Distribution<LogDirichletSample> for LogDirichlet {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LogDirichletSample {
        self.sample_with_total(rng).0
    }
}

pub fn sample_log_dirichlet<R: Rng + ?Sized>(
    a: &[f64],
    rng: &mut R,
) -> Result<LogDirichletSample, SamplerError> {
    Ok(LogDirichlet::new(a)?.sample(rng))
}

/// `(E*, i*, (E_1 − E*, …, E_M − E*))` with `E* = min_i E_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinDecomposition {
    pub min: f64,
    pub argmin: usize,
    pub shifted: Vec<f64>,
}

pub fn min_decompose(e: &[f64]) -> Result<MinDecomposition, SamplerError> {
    if e.len() < 2 {
        return Err(SamplerError::TooFewCoordinates {
            needed: 2,
            got: e.len(),
        });
    }
    validate(e)?;
    let mut argmin = 0;
    let mut tie = None;
    for (i, &v) in e.iter().enumerate().skip(1) {
        if v < e[argmin] {
            argmin = i;
            tie = None;
        } else if v == e[argmin] {
            tie = Some(i);
        }
    }
    if let Some(second) = tie {
        return Err(SamplerError::TiedMinimum {
            first: argmin,
            second,
            value: e[argmin],
        });
    }
    let min = e[argmin];
    let shifted = e
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == argmin { 0.0 } else { v - min })
        .collect();
    Ok(MinDecomposition {
        min,
        argmin,
        shifted,
    })
}
