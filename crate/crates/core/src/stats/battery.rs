use super::{exp_cdf, frequency_test, ks_one_sample, StatError, StatReport, MIN_KS_SAMPLES};

/// Index of the smallest coordinate (first one on ties).
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// The Be-Exp battery on vector samples claimed to follow `Be-Exp(a)`:
/// per coordinate, the frequency of being the minimal coordinate against
/// `p_i` (3σ band) and a KS test of the coordinate, on samples where it is
/// not minimal, against `Exp(a_i)` with critical value scaled by `slack`.
///
/// For exact Be-Exp draws the minimal coordinate is the zero. For
/// `−ε log U` draws it is the coordinate converging to the atom. Coordinates
/// with fewer than 100 conditioned samples get no KS report.
pub fn be_exp_battery(
    name: &str,
    samples: &[Vec<f64>],
    a: &[f64],
    alpha: f64,
    slack: f64,
) -> Result<Vec<StatReport>, StatError> {
    let m = a.len();
    if samples.iter().any(|s| s.len() != m) {
        return Err(StatError::Domain(format!("{name}: sample length differs from {m}")));
    }
    let n = samples.len();
    let total: f64 = a.iter().sum();
    let mins: Vec<usize> = samples.iter().map(|s| argmin(s)).collect();
    let mut out = Vec::with_capacity(2 * m);
    for (i, &ai) in a.iter().enumerate() {
        let count = mins.iter().filter(|&&k| k == i).count();
        out.push(frequency_test(count, n, ai / total).named(format!("{name}/atom[{i}]")));
        if m == 1 {
            continue;
        }
        let positive: Vec<f64> = samples
            .iter()
            .zip(&mins)
            .filter(|(_, &k)| k != i)
            .map(|(s, _)| s[i])
            .collect();
        if positive.len() < MIN_KS_SAMPLES {
            continue;
        }
        let r = ks_one_sample(&positive, exp_cdf(ai), alpha)?.with_slack(slack);
        out.push(r.named(format!("{name}/ks[{i}]")));
    }
    Ok(out)
}

/// Counts samples that do not have exactly one zero coordinate; passes
/// only when that count is 0.
pub fn one_zero_check(name: &str, samples: &[Vec<f64>]) -> StatReport {
    let bad = samples
        .iter()
        .filter(|s| s.iter().filter(|&&v| v == 0.0).count() != 1 || s.iter().any(|&v| !(v >= 0.0)))
        .count();
    StatReport::new(name, bad as f64, 0.0, vec![samples.len()], 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{BeExp, RngStream};
    use crate::stats::KS_ALPHA;
    use rand::distr::Distribution;

    #[test]
    fn exact_be_exp_passes() {
        let law = BeExp::new(&[1.0, 2.0, 3.0]).unwrap();
        let mut rng = RngStream::new(21, 0);
        let xs: Vec<Vec<f64>> = (0..20_000).map(|_| law.sample(&mut rng).values).collect();
        let reports = be_exp_battery("t", &xs, &[1.0, 2.0, 3.0], KS_ALPHA, 1.5).unwrap();
        assert_eq!(reports.len(), 6);
        assert!(reports.iter().all(|r| r.passed), "{reports:?}");
        assert!(one_zero_check("z", &xs).passed);
    }

    #[test]
    fn wrong_parameters_fail() {
        let law = BeExp::new(&[1.0, 2.0, 3.0]).unwrap();
        let mut rng = RngStream::new(22, 0);
        let xs: Vec<Vec<f64>> = (0..20_000).map(|_| law.sample(&mut rng).values).collect();
        let reports = be_exp_battery("t", &xs, &[3.0, 2.0, 1.0], KS_ALPHA, 1.5).unwrap();
        assert!(!reports[0].passed);
    }

    #[test]
    fn one_zero_counts_violations() {
        let xs = vec![vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, 2.0]];
        let r = one_zero_check("z", &xs);
        assert_eq!(r.statistic, 2.0);
        assert!(!r.passed);
    }

    #[test]
    fn argmin_first_on_ties() {
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), 1);
        assert_eq!(argmin(&[0.0]), 0);
    }
}
