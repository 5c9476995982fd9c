use serde::{Deserialize, Serialize};

use super::family::SalaryDistribution;
use crate::stats::chi2_sf;

/// Smallest sample for which the chi-squared test is run.
pub const MIN_CHI_SQUARED_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChiSquared {
    Computed { statistic: f64, bins: usize, df: usize, p_value: f64 },
    Skipped { reason: String },
}

impl ChiSquared {
    pub fn p_value(&self) -> Option<f64> {
        match self {
            ChiSquared::Computed { p_value, .. } => Some(*p_value),
            ChiSquared::Skipped { .. } => None,
        }
    }
}

/// Pearson statistic over `max(5, n / 5)` bins that are equiprobable under
/// the fitted distribution.
pub fn chi_squared_gof(xs: &[f64], dist: &SalaryDistribution) -> ChiSquared {
    let n = xs.len();
    if n < MIN_CHI_SQUARED_N {
        return ChiSquared::Skipped {
            reason: format!("{n} observations; the test needs at least {MIN_CHI_SQUARED_N}"),
        };
    }
    let bins = (n / 5).max(5);
    let mut observed = vec![0usize; bins];
    for &x in xs {
        let b = ((dist.cdf(x) * bins as f64).floor() as usize).min(bins - 1);
        observed[b] += 1;
    }
    let expected = n as f64 / bins as f64;
    let statistic = observed
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let params = dist.parameter_count();
    if bins <= params + 1 {
        return ChiSquared::Skipped {
            reason: format!("{bins} bins leave no degrees of freedom"),
        };
    }
    let df = bins - 1 - params;
    ChiSquared::Computed {
        statistic,
        bins,
        df,
        p_value: chi2_sf(statistic, df as f64),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// (fitted CDF at x_(i), (i - 0.5) / n)
    pub pp: Vec<(f64, f64)>,
    /// (fitted quantile at (i - 0.5) / n, x_(i))
    pub qq: Vec<(f64, f64)>,
}

pub fn pp_qq_series(dist: &SalaryDistribution, xs: &[f64]) -> Diagnostics {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out = Diagnostics::default();
    for (i, &x) in sorted.iter().enumerate() {
        let u = (i as f64 + 0.5) / n;
        out.pp.push((dist.cdf(x), u));
        out.qq.push((dist.quantile(u), x));
    }
    out
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand::Rng;

    use super::*;
    use crate::salary_dist::family::Family;
    use crate::salary_dist::fit::fit_family;

    fn lognormal() -> SalaryDistribution {
        SalaryDistribution::new(Family::Lognormal, 7.5e5, None, [14.0, 0.5]).unwrap()
    }

    fn sample(d: &SalaryDistribution, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| d.quantile(rng.random::<f64>())).collect()
    }

    #[test]
    fn equal_probability_bins() {
        let d = lognormal();
        // Each bin gets exactly one fifth of the plotting positions.
        let xs: Vec<f64> = (0..100).map(|i| d.quantile((i as f64 + 0.5) / 100.0)).collect();
        match chi_squared_gof(&xs, &d) {
            ChiSquared::Computed { statistic, bins, df, p_value } => {
                assert_eq!((bins, df), (20, 17));
                assert!(statistic < 1e-12 && p_value > 0.999);
            }
            other => panic!("{other:?}"),
        }
        let xs: Vec<f64> = (0..25).map(|i| d.quantile((i as f64 + 0.5) / 25.0)).collect();
        match chi_squared_gof(&xs, &d) {
            ChiSquared::Computed { bins, .. } => assert_eq!(bins, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_samples_skip() {
        assert!(matches!(chi_squared_gof(&[1e6; 19], &lognormal()), ChiSquared::Skipped { .. }));
    }

    #[test]
    fn calibrated_under_correct_fit() {
        let truth = lognormal();
        let mut passes = 0;
        for seed in 0..100 {
            let xs = sample(&truth, seed, 500);
            let fit = fit_family(&xs, Family::Lognormal, truth.lower, None).unwrap();
            if chi_squared_gof(&xs, &fit.distribution).p_value().unwrap() > 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 95, "{passes}");
    }

    #[test]
    fn detects_shifted_data() {
        let d = lognormal();
        let xs: Vec<f64> = sample(&d, 9, 500).iter().map(|x| (x - d.lower) * (1.5f64).exp() + d.lower).collect();
        assert!(chi_squared_gof(&xs, &d).p_value().unwrap() < 0.01);
    }

    #[test]
    fn pp_qq_construction() {
        let d = lognormal();
        let xs: Vec<f64> = (0..50).map(|i| d.quantile((i as f64 + 0.5) / 50.0)).collect();
        let diag = pp_qq_series(&d, &xs);
        for (t, e) in &diag.pp {
            assert!((t - e).abs() < 1e-9);
        }
        for (t, e) in &diag.qq {
            assert!((t - e).abs() <= 1e-9 * e);
        }
        let one = pp_qq_series(&d, &[1.5e6]);
        assert_eq!(one.pp, vec![(d.cdf(1.5e6), 0.5)]);
    }

    #[test]
    fn pp_close_for_own_draws() {
        let d = lognormal();
        let diag = pp_qq_series(&d, &sample(&d, 12, 300));
        let worst = diag.pp.iter().map(|(t, e)| (t - e).abs()).fold(0.0, f64::max);
        assert!(worst < 0.1 && diag.pp.iter().all(|(t, _)| (0.0..=1.0).contains(t)));
    }
}
