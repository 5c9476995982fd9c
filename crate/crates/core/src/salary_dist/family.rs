use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, inv_beta_reg, ln_beta};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::stats::{normal_cdf, normal_quantile, normal_sf};

/// Candidate salary families, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Lognormal,
    Gamma,
    Beta,
    /// Lomax, i.e. Pareto type II starting at the lower bound.
    Pareto,
    Weibull,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Lognormal,
        Family::Gamma,
        Family::Beta,
        Family::Pareto,
        Family::Weibull,
    ];

    pub fn parameter_names(self) -> [&'static str; 2] {
        match self {
            Family::Lognormal => ["mu", "sigma"],
            Family::Gamma => ["shape", "scale"],
            Family::Beta => ["alpha", "beta"],
            Family::Pareto => ["shape", "scale"],
            Family::Weibull => ["shape", "scale"],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Lognormal => "LOGNORMAL",
            Family::Gamma => "GAMMA",
            Family::Beta => "BETA",
            Family::Pareto => "PARETO",
            Family::Weibull => "WEIBULL",
        })
    }
}

/// A family with concrete parameters on the support `[lower, upper)`.
/// Every family except Beta is applied to `x - lower`; Beta is applied to
/// `(x - lower) / (upper - lower)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalaryDistribution {
    pub family: Family,
    pub lower: f64,
    pub upper: Option<f64>,
    pub params: [f64; 2],
}

impl SalaryDistribution {
    pub fn new(family: Family, lower: f64, upper: Option<f64>, params: [f64; 2]) -> Result<Self> {
        let ok = match family {
            Family::Lognormal => params[0].is_finite() && params[1] > 0.0,
            _ => params.iter().all(|p| p.is_finite() && *p > 0.0),
        };
        if !ok || !params[1].is_finite() {
            return Err(Error::InvalidArgument(format!("{family} parameters {params:?} are invalid")));
        }
        if family == Family::Beta && !upper.is_some_and(|u| u > lower) {
            return Err(Error::InvalidArgument("Beta needs an upper bound above the lower bound".into()));
        }
        Ok(SalaryDistribution {
            family,
            lower,
            upper: if family == Family::Beta { upper } else { None },
            params,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    fn width(&self) -> f64 {
        self.upper.map_or(1.0, |u| u - self.lower)
    }

    /// Position on the family's standard support, or None outside it.
    fn reduce(&self, x: f64) -> Option<f64> {
        let y = (x - self.lower) / self.width();
        match self.family {
            Family::Beta => (y > 0.0 && y < 1.0).then_some(y),
            _ => (y > 0.0).then_some(y),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let Some(y) = self.reduce(x) else {
            return f64::NEG_INFINITY;
        };
        let [a, b] = self.params;
        let v = match self.family {
            Family::Lognormal => {
                let z = (y.ln() - a) / b;
                -y.ln() - b.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
            }
            Family::Gamma => (a - 1.0) * y.ln() - y / b - ln_gamma(a) - a * b.ln(),
            Family::Beta => (a - 1.0) * y.ln() + (b - 1.0) * (-y).ln_1p() - ln_beta(a, b),
            Family::Pareto => a.ln() - b.ln() - (a + 1.0) * (y / b).ln_1p(),
            Family::Weibull => a.ln() - b.ln() + (a - 1.0) * (y / b).ln() - (y / b).powf(a),
        };
        v - self.width().ln()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let y = (x - self.lower) / self.width();
        if y <= 0.0 {
            return 0.0;
        }
        if self.family == Family::Beta && y >= 1.0 {
            return 1.0;
        }
        let [a, b] = self.params;
        match self.family {
            Family::Lognormal => normal_cdf((y.ln() - a) / b),
            Family::Gamma => gamma_lr(a, y / b),
            Family::Beta => beta_reg(a, b, y),
            Family::Pareto => -(-a * (y / b).ln_1p()).exp_m1(),
            Family::Weibull => -(-(y / b).powf(a)).exp_m1(),
        }
    }

    /// Upper tail 1 - F(x), computed directly to keep precision far out.
    pub fn sf(&self, x: f64) -> f64 {
        let y = (x - self.lower) / self.width();
        if y <= 0.0 {
            return 1.0;
        }
        if self.family == Family::Beta && y >= 1.0 {
            return 0.0;
        }
        let [a, b] = self.params;
        match self.family {
            Family::Lognormal => normal_sf((y.ln() - a) / b),
            Family::Gamma => gamma_ur(a, y / b),
            Family::Beta => beta_reg(b, a, 1.0 - y),
            Family::Pareto => (-a * (y / b).ln_1p()).exp(),
            Family::Weibull => (-(y / b).powf(a)).exp(),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.lower;
        }
        if u >= 1.0 {
            return self.upper.unwrap_or(f64::INFINITY);
        }
        let [a, b] = self.params;
        let y = match self.family {
            Family::Lognormal => (a + b * normal_quantile(u)).exp(),
            Family::Beta => inv_beta_reg(a, b, u),
            Family::Pareto => b * ((-(-u).ln_1p() / a).exp_m1()),
            Family::Weibull => b * (-(-u).ln_1p()).powf(1.0 / a),
            Family::Gamma => return self.invert(u),
        };
        self.lower + self.width() * y
    }

    /// Bisection on the CDF (or the upper tail above the median).
    fn invert(&self, u: f64) -> f64 {
        let upper_half = u > 0.5;
        let target = if upper_half { 1.0 - u } else { u };
        let below = |x: f64| {
            if upper_half {
                self.sf(x) > target
            } else {
                self.cdf(x) < target
            }
        };
        let mut lo = self.lower;
        let mut step = self.width().max(1e-300);
        let mut hi = self.lower + step;
        while below(hi) {
            lo = hi;
            step *= 2.0;
            hi = self.lower + step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if below(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}
