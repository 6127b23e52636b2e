//! Statistical tests shared by every verification suite.
//!
//! Every test returns a full [`StatReport`] (statistic, critical value,
//! sample sizes). Mixed laws with an atom at zero are tested by splitting:
//! a binomial band on the atom, KS on the part conditioned positive.

mod battery;
pub mod special;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use battery::{argmin, be_exp_battery, one_zero_check};
pub use special::{log_gamma, regularized_incomplete_beta};

/// Minimum sample size accepted by the KS tests.
pub const MIN_KS_SAMPLES: usize = 100;
/// Level for single targeted checks.
pub const KS_ALPHA: f64 = 0.05;
/// Level for checks repeated many times inside a sweep.
pub const KS_ALPHA_SWEEP: f64 = 0.001;
/// Slack applied where the tested law is attained only asymptotically.
pub const KS_SLACK: f64 = 1.5;
/// Level of the chi-square independence tests.
pub const CHI_SQUARE_ALPHA: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatError {
    #[error("{test} needs at least {needed} samples, got {got}")]
    TooFewSamples {
        test: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("degenerate bins: {0}")]
    DegenerateBins(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Outcome of one statistical check. `passed ⇔ statistic ≤ critical_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub statistic: f64,
    pub critical_value: f64,
    pub sample_sizes: Vec<usize>,
    pub significance: f64,
    pub passed: bool,
    /// Whether the report counts toward a suite verdict.
    #[serde(default = "gating_default")]
    pub gating: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl StatReport {
    pub fn new(
        name: impl Into<String>,
        statistic: f64,
        critical_value: f64,
        sample_sizes: Vec<usize>,
        significance: f64,
    ) -> Self {
        StatReport {
            name: name.into(),
            statistic,
            critical_value,
            sample_sizes,
            significance,
            passed: statistic <= critical_value,
            gating: true,
            seed: None,
            note: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Scales the critical value and re-derives the verdict.
    pub fn with_slack(mut self, factor: f64) -> Self {
        self.critical_value *= factor;
        self.passed = self.statistic <= self.critical_value;
        self
    }

    /// Marks the report as informational: it is kept for the record but
    /// does not decide a verdict.
    pub fn informational(mut self) -> Self {
        self.gating = false;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn gating_default() -> bool {
    true
}

/// True when every gating report passed.
pub fn verdict(reports: &[StatReport]) -> bool {
    reports.iter().filter(|r| r.gating).all(|r| r.passed)
}

/// Kolmogorov coefficient `c(α)`: the critical value of `√n · D_n`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    match alpha {
        a if a == 0.05 => 1.36,
        a if a == 0.01 => 1.63,
        a if a == 0.001 => 1.95,
        a => (-(a / 2.0).ln() / 2.0).sqrt(),
    }
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample KS: `sup_t |F_n(t) − F(t)|`, critical value `c(α)/√n`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(
    samples: &[f64],
    cdf: F,
    alpha: f64,
) -> Result<StatReport, StatError> {
    let n = samples.len();
    if n < MIN_KS_SAMPLES {
        return Err(StatError::TooFewSamples {
            test: "ks_one_sample",
            needed: MIN_KS_SAMPLES,
            got: n,
        });
    }
    let xs = sorted(samples);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < n {
        // step over a run of ties so the ECDF jump is taken at once
        let mut j = i;
        while j + 1 < n && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max(f - i as f64 / nf).max((j + 1) as f64 / nf - f);
        i = j + 1;
    }
    Ok(StatReport::new(
        "ks-one-sample",
        d,
        ks_coefficient(alpha) / nf.sqrt(),
        vec![n],
        alpha,
    ))
}

/// Two-sample KS: `sup_t |F_n(t) − G_m(t)|`, critical value
/// `c(α)·√((n+m)/(nm))`. Ties (atoms) are handled by advancing both
/// samples through equal values before comparing.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<StatReport, StatError> {
    for s in [a, b] {
        if s.len() < MIN_KS_SAMPLES {
            return Err(StatError::TooFewSamples {
                test: "ks_two_sample",
                needed: MIN_KS_SAMPLES,
                got: s.len(),
            });
        }
    }
    let (xs, ys) = (sorted(a), sorted(b));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    Ok(StatReport::new(
        "ks-two-sample",
        d,
        ks_coefficient(alpha) * ((nf + mf) / (nf * mf)).sqrt(),
        vec![n, m],
        alpha,
    ))
}

/// Three-sigma binomial band: `|k/n − p| ≤ 3·√(p(1−p)/n)`.
pub fn frequency_test(count: usize, n: usize, expected_p: f64) -> StatReport {
    let freq = if n == 0 { f64::NAN } else { count as f64 / n as f64 };
    let sigma = (expected_p * (1.0 - expected_p) / n as f64).sqrt();
    StatReport::new(
        "frequency",
        (freq - expected_p).abs(),
        3.0 * sigma,
        vec![n],
        0.0027,
    )
}

/// Frequency of exact zeros against `expected_p`.
pub fn atom_test(samples: &[f64], expected_p: f64) -> Result<StatReport, StatError> {
    if samples.iter().any(|&x| !(x >= 0.0)) {
        return Err(StatError::Domain("atom_test needs nonnegative samples".into()));
    }
    let zeros = samples.iter().filter(|&&x| x == 0.0).count();
    Ok(frequency_test(zeros, samples.len(), expected_p).named("atom"))
}

/// Pearson chi-square independence test on paired categorical labels,
/// compared with the 0.99-quantile of `χ²((r−1)(c−1))`.
pub fn chi_square_independence(a: &[usize], b: &[usize]) -> Result<StatReport, StatError> {
    if a.len() != b.len() {
        return Err(StatError::DegenerateBins(format!(
            "label vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    if rows.len() < 2 || cols.len() < 2 {
        return Err(StatError::DegenerateBins(format!(
            "{} row and {} column categories",
            rows.len(),
            cols.len()
        )));
    }
    let n = a.len() as f64;
    let mut stat = 0.0;
    for (&r, &rc) in &rows {
        for (&c, &cc) in &cols {
            let expected = rc as f64 * cc as f64 / n;
            let observed = table.get(&(r, c)).copied().unwrap_or(0) as f64;
            stat += (observed - expected).powi(2) / expected;
        }
    }
    let df = ((rows.len() - 1) * (cols.len() - 1)) as f64;
    let critical = special::chi_square_quantile(df, 1.0 - CHI_SQUARE_ALPHA)?;
    Ok(StatReport::new(
        "chi-square-independence",
        stat,
        critical,
        vec![a.len()],
        CHI_SQUARE_ALPHA,
    ))
}

/// Equal-count bins by rank: label `⌊10·rank/n⌋` in `0..10`. Ties are broken
/// by position, so the labelling is deterministic.
pub fn decile_bins(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut bins = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        bins[i] = rank * 10 / n.max(1);
    }
    bins
}

pub fn pearson_correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |t| if t <= 0.0 { 0.0 } else { -(-rate * t).exp_m1() }
}
