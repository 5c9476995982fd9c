//! Parametric salary distributions per cluster: maximum-likelihood fits of
//! five families above a fixed lower bound, goodness of fit and selection.

mod family;
mod fit;
mod gof;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use family::{Family, SalaryDistribution};
pub use fit::{fit_family, FamilyFit, GRADIENT_TOLERANCE};
pub use gof::{chi_squared_gof, pp_qq_series, ChiSquared, Diagnostics, MIN_CHI_SQUARED_N};

use crate::error::{Error, Result};

/// Clusters of this size or smaller are not fitted.
pub const MIN_FIT_SIZE: usize = 15;

/// Relative AIC difference treated as a tie.
pub const AIC_TIE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistConfig {
    /// Lower support bound; defaults to 0.95 of the smallest salary seen.
    pub lower_bound: Option<f64>,
    /// Beta upper bound as a multiple of the largest cluster salary.
    pub beta_upper_factor: f64,
    /// Clusters with at most this many members are skipped.
    pub min_cluster_size: usize,
}

impl Default for DistConfig {
    fn default() -> Self {
        DistConfig {
            lower_bound: None,
            beta_upper_factor: 1.1,
            min_cluster_size: MIN_FIT_SIZE,
        }
    }
}

impl DistConfig {
    /// The configured bound, or 0.95 of the smallest of `all_salaries`.
    pub fn resolve_lower(&self, all_salaries: &[f64]) -> Result<f64> {
        match self.lower_bound {
            Some(l) => Ok(l),
            None => {
                let min = all_salaries.iter().copied().fold(f64::INFINITY, f64::min);
                if !min.is_finite() {
                    return Err(Error::InsufficientData("no salaries to derive a lower bound from".into()));
                }
                Ok(0.95 * min)
            }
        }
    }
}

/// One row of a cluster's family ranking table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFit {
    pub family: Family,
    pub fit: Option<FamilyFit>,
    pub chi_squared: Option<ChiSquared>,
    /// Why the family was left out of the selection, if it was.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSalaryDistribution {
    pub cluster: usize,
    pub fit: FamilyFit,
    pub chi_squared: ChiSquared,
    pub diagnostics: Diagnostics,
}

impl FittedSalaryDistribution {
    pub fn distribution(&self) -> &SalaryDistribution {
        &self.fit.distribution
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Selection {
    Selected {
        fitted: Box<FittedSalaryDistribution>,
        ranking: Vec<CandidateFit>,
    },
    Skipped {
        cluster: usize,
        reason: String,
        ranking: Vec<CandidateFit>,
    },
}

impl Selection {
    pub fn fitted(&self) -> Option<&FittedSalaryDistribution> {
        match self {
            Selection::Selected { fitted, .. } => Some(fitted),
            Selection::Skipped { .. } => None,
        }
    }

    pub fn ranking(&self) -> &[CandidateFit] {
        match self {
            Selection::Selected { ranking, .. } | Selection::Skipped { ranking, .. } => ranking,
        }
    }
}

/// Order on (AIC, parameter count, family): AIC values within [`AIC_TIE`]
/// of each other (relative) are tied, then fewer parameters win, then the
/// family listed first.
pub fn compare_fits(a: (f64, usize, Family), b: (f64, usize, Family)) -> Ordering {
    let tol = AIC_TIE * a.0.abs().max(b.0.abs()).max(1.0);
    if (a.0 - b.0).abs() > tol {
        return a.0.total_cmp(&b.0);
    }
    a.1.cmp(&b.1).then(a.2.cmp(&b.2))
}

/// Fits every family to one cluster and keeps the minimum-AIC converged fit.
pub fn select_distribution(cluster: usize, xs: &[f64], lower: f64, beta_upper_factor: f64, min_size: usize) -> Selection {
    if xs.len() <= min_size {
        return Selection::Skipped {
            cluster,
            reason: format!("{} members; at least {} are needed", xs.len(), min_size + 1),
            ranking: Vec::new(),
        };
    }
    let upper = beta_upper_factor * xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut ranking: Vec<CandidateFit> = Family::ALL
        .par_iter()
        .map(|&family| match fit_family(xs, family, lower, Some(upper)) {
            Ok(fit) => CandidateFit {
                family,
                chi_squared: Some(chi_squared_gof(xs, &fit.distribution)),
                excluded: (!fit.converged)
                    .then(|| format!("did not converge (gradient norm {:.3e})", fit.gradient_norm)),
                fit: Some(fit),
            },
            Err(e) => CandidateFit {
                family,
                fit: None,
                chi_squared: None,
                excluded: Some(e.to_string()),
            },
        })
        .collect();
    ranking.sort_by(|a, b| match (&a.fit, &b.fit) {
        (Some(x), Some(y)) => compare_fits(
            (x.aic, x.distribution.parameter_count(), a.family),
            (y.aic, y.distribution.parameter_count(), b.family),
        ),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.family.cmp(&b.family),
    });
    let winner = ranking
        .iter()
        .filter(|c| c.excluded.is_none())
        .min_by(|a, b| {
            let (x, y) = (a.fit.as_ref().expect("fit"), b.fit.as_ref().expect("fit"));
            compare_fits(
                (x.aic, x.distribution.parameter_count(), a.family),
                (y.aic, y.distribution.parameter_count(), b.family),
            )
        })
        .cloned();
    match winner {
        Some(c) => {
            let fit = c.fit.expect("converged candidate has a fit");
            Selection::Selected {
                fitted: Box::new(FittedSalaryDistribution {
                    cluster,
                    diagnostics: pp_qq_series(&fit.distribution, xs),
                    chi_squared: c.chi_squared.expect("computed with the fit"),
                    fit,
                }),
                ranking,
            }
        }
        None => Selection::Skipped {
            cluster,
            reason: "no family produced a converged fit".into(),
            ranking,
        },
    }
}
