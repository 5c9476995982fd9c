//! Small distribution helpers shared by the regression, profiling and
//! fitting code.

use statrs::function::{beta::beta_reg, erf, gamma::gamma_ur};

/// Two-sided p-value of a Student t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() || df.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Upper tail of the chi-squared distribution.
pub fn chi2_sf(statistic: f64, df: f64) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    gamma_ur(df / 2.0, statistic / 2.0)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_sf(z: f64) -> f64 {
    0.5 * erf::erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n - 1 denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_round_trip() {
        for p in [1e-10, 0.001, 0.025, 0.5, 0.9, 0.999] {
            let z = normal_quantile(p);
            let err = (normal_cdf(z) - p).abs() / p;
            assert!(err < 1e-9, "{p}: {err}");
        }
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
        assert!((normal_quantile(1e-10) + 6.361340902404056).abs() < 1e-11);
    }

    #[test]
    fn t_p_values() {
        // One degree of freedom is Cauchy: P(|T| > 1) = 1/2.
        assert!((t_two_sided_p(1.0, 1.0) - 0.5).abs() < 1e-14);
        assert_eq!(t_two_sided_p(0.0, 7.0), 1.0);
        assert!((t_two_sided_p(-2.0, 3.0) - t_two_sided_p(2.0, 3.0)).abs() < 1e-15);
    }

    #[test]
    fn chi2_two_df_is_exponential() {
        for x in [0.5, 2.0, 9.0] {
            assert!((chi2_sf(x, 2.0) - (-x / 2.0f64).exp()).abs() < 1e-14);
        }
    }
}
