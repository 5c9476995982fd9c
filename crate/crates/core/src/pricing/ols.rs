use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureSource;
use crate::error::{Error, Result};
use crate::stats::t_two_sided_p;

pub const INTERCEPT: &str = "(Intercept)";

/// Relative size below which a QR diagonal marks a dependent column.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

/// Fitted linear salary model with an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingModel {
    pub intercept: Term,
    pub terms: Vec<Term>,
    pub n: usize,
    pub r2: f64,
    pub adjusted_r2: f64,
    pub rss: f64,
    pub tss: f64,
    pub sigma: f64,
    pub aicc: f64,
}

impl PricingModel {
    pub fn names(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.name.as_str()).collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.coefficient)
    }

    /// Coefficients including the intercept.
    pub fn parameter_count(&self) -> usize {
        self.terms.len() + 1
    }

    pub fn predict(&self, source: &impl FeatureSource) -> Result<f64> {
        let mut y = self.intercept.coefficient;
        for t in &self.terms {
            let x = source
                .feature(&t.name)
                .ok_or_else(|| Error::MissingPredictor(t.name.clone()))?;
            y += t.coefficient * x;
        }
        Ok(y)
    }
}

/// Small-sample corrected AIC of a Gaussian linear model with `p`
/// coefficients; the error variance counts as one more parameter.
pub fn aicc(rss: f64, n: usize, p: usize) -> f64 {
    let n_f = n as f64;
    let k = p as f64 + 1.0;
    if n_f - k - 1.0 <= 0.0 {
        return f64::INFINITY;
    }
    let rss_per = (rss / n_f).max(f64::MIN_POSITIVE);
    n_f * rss_per.ln() + 2.0 * k + 2.0 * k * (k + 1.0) / (n_f - k - 1.0)
}

/// Ordinary least squares of `y` on an intercept plus the named columns.
pub fn ols_fit(y: &[f64], predictors: &[(&str, &[f64])]) -> Result<PricingModel> {
    let n = y.len();
    let p = predictors.len() + 1;
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} observations cannot support {p} coefficients"
        )));
    }
    for (name, col) in predictors {
        if col.len() != n {
            return Err(Error::InvalidArgument(format!(
                "column `{name}` has {} rows, response has {n}",
                col.len()
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("column `{name}` has non-finite values")));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("response has non-finite values".into()));
    }

    let mut names: Vec<&str> = vec![INTERCEPT];
    names.extend(predictors.iter().map(|(name, _)| *name));
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { predictors[j - 1].1[i] });
    let yv = DVector::from_column_slice(y);

    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let norm = x.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm {
            return Err(Error::RankDeficient {
                column: names[j].to_string(),
                collinear_with: collinear_partners(&x, j, &names),
            });
        }
    }

    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .expect("diagonal checked nonzero");
    let residuals = &yv - &x * &beta;
    let rss = residuals.norm_squared();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    if tss == 0.0 {
        return Err(Error::Degenerate("salary response is constant".into()));
    }
    let df = (n - p) as f64;
    let sigma2 = rss / df;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("diagonal checked nonzero");

    let mut all_terms = Vec::with_capacity(p);
    for j in 0..p {
        let var = sigma2 * r_inv.row(j).norm_squared();
        let se = var.sqrt();
        let t = if se > 0.0 {
            beta[j] / se
        } else if beta[j] == 0.0 {
            0.0
        } else {
            beta[j].signum() * f64::INFINITY
        };
        all_terms.push(Term {
            name: names[j].to_string(),
            coefficient: beta[j],
            std_error: se,
            t_value: t,
            p_value: t_two_sided_p(t, df),
        });
    }
    let intercept = all_terms.remove(0);
    let r2 = 1.0 - rss / tss;
    Ok(PricingModel {
        intercept,
        terms: all_terms,
        n,
        r2,
        adjusted_r2: 1.0 - (rss / df) / (tss / (n as f64 - 1.0)),
        rss,
        tss,
        sigma: sigma2.sqrt(),
        aicc: aicc(rss, n, p),
    })
}

/// Columns before `j` that participate in reproducing column `j`.
fn collinear_partners(x: &DMatrix<f64>, j: usize, names: &[&str]) -> Vec<String> {
    let target = x.column(j).into_owned();
    if j == 0 {
        return Vec::new();
    }
    let sub = x.columns(0, j).into_owned();
    let Some(coef) = sub.clone().svd(true, true).solve(&target, 1e-12).ok() else {
        return names[..j].iter().map(|s| s.to_string()).collect();
    };
    let scale = target.norm().max(f64::MIN_POSITIVE);
    let partners: Vec<String> = (0..j)
        .filter(|&k| (coef[k] * sub.column(k).norm()).abs() > 1e-8 * scale)
        .map(|k| names[k].to_string())
        .collect();
    if partners.is_empty() {
        // An all-zero column is collinear with the intercept.
        vec![INTERCEPT.to_string()]
    } else {
        partners
    }
}

/// Named predictor columns plus the response they explain.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignData {
    columns: BTreeMap<String, Vec<f64>>,
    response: Vec<f64>,
}

impl DesignData {
    pub fn new(response: Vec<f64>) -> Self {
        DesignData {
            columns: BTreeMap::new(),
            response,
        }
    }

    /// Pulls the named predictors from each row.
    pub fn from_sources<S: FeatureSource>(rows: &[S], names: &[&str], response: impl Fn(&S) -> f64) -> Result<Self> {
        let mut data = DesignData::new(rows.iter().map(&response).collect());
        for &name in names {
            let col = rows
                .iter()
                .map(|r| r.feature(name).ok_or_else(|| Error::MissingPredictor(name.to_string())))
                .collect::<Result<Vec<f64>>>()?;
            data.insert(name, col)?;
        }
        Ok(data)
    }

    pub fn insert(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.response.len() {
            return Err(Error::InvalidArgument(format!(
                "column `{name}` has {} rows, response has {}",
                values.len(),
                self.response.len()
            )));
        }
        self.columns.insert(name.to_string(), values);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingPredictor(name.to_string()))
    }

    /// Fits the response on the given columns, in the given order.
    pub fn fit(&self, names: &[&str]) -> Result<PricingModel> {
        let cols = names
            .iter()
            .map(|&n| self.column(n).map(|c| (n, c)))
            .collect::<Result<Vec<_>>>()?;
        ols_fit(&self.response, &cols)
    }
}
