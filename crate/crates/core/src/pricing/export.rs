use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::MetricWeights;
use super::ols::{PricingModel, INTERCEPT};
use crate::dataset::{Category, Predictor};

/// One row of the coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    #[serde(rename = "Variable")]
    pub variable: String,
    #[serde(rename = "Estimate")]
    pub estimate: f64,
    #[serde(rename = "t value")]
    pub t_value: f64,
    #[serde(rename = "Pr(>|t|)")]
    pub p_value: f64,
}

/// Serialized form of a fitted salary model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub coefficients: Vec<ExportRow>,
    pub adjusted_r2: f64,
    pub n: usize,
    pub partition: BTreeMap<String, Category>,
    pub weights: BTreeMap<String, f64>,
}

fn label(name: &str) -> String {
    Predictor::from_name(name).map_or_else(|| name.to_string(), |p| p.label().to_string())
}

impl ModelExport {
    pub fn new(model: &PricingModel, weights: Option<&MetricWeights>) -> Self {
        let mut coefficients = vec![ExportRow {
            variable: INTERCEPT.to_string(),
            estimate: model.intercept.coefficient,
            t_value: model.intercept.t_value,
            p_value: model.intercept.p_value,
        }];
        coefficients.extend(model.terms.iter().map(|t| ExportRow {
            variable: label(&t.name),
            estimate: t.coefficient,
            t_value: t.t_value,
            p_value: t.p_value,
        }));
        ModelExport {
            coefficients,
            adjusted_r2: model.adjusted_r2,
            n: model.n,
            partition: weights.map(|w| w.partition.clone()).unwrap_or_default(),
            weights: weights.map(|w| w.gamma.clone()).unwrap_or_default(),
        }
    }

    /// Tab-separated coefficient table: whole-dollar estimates, t to three
    /// decimals, p to three significant digits.
    pub fn render_table(&self) -> String {
        let mut out = String::from("Variable\tEstimate\tt value\tPr(>|t|)\n");
        for r in &self.coefficients {
            out.push_str(&format!(
                "{}\t{:.0}\t{:.3}\t{}\n",
                r.variable,
                r.estimate,
                r.t_value,
                format_p(r.p_value)
            ));
        }
        out
    }
}

/// Three significant digits; scientific notation below 1e-4.
pub fn format_p(p: f64) -> String {
    if p == 0.0 {
        return "0".into();
    }
    if p < 1e-4 {
        let exp = p.log10().floor() as i32;
        let mut mant = p / 10f64.powi(exp);
        let mut exp = exp;
        if (mant * 100.0).round() >= 1000.0 {
            mant /= 10.0;
            exp += 1;
        }
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant:.2}E{sign}{:02}", exp.abs());
    }
    let digits = (2 - p.log10().floor() as i32).max(0) as usize;
    format!("{p:.digits$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::ols::Term;

    fn term(name: &str, coefficient: f64, t_value: f64, p_value: f64) -> Term {
        Term {
            name: name.into(),
            coefficient,
            std_error: coefficient / t_value,
            t_value,
            p_value,
        }
    }

    /// Published initial salary model, used only to check formatting.
    fn reference_model() -> PricingModel {
        PricingModel {
            intercept: term(INTERCEPT, 5399261.0, 9.427, 2.12e-15),
            terms: vec![
                term("pff_prior_avg", 56697.0, 3.081, 0.00268),
                term("experience", -199134.0, -2.694, 0.00831),
                term("draft_round", -264405.0, -4.224, 5.38e-05),
                term("pro_bowls", 624910.0, 3.715, 0.000338),
                term("stuff_pct_diff", -82247.0, -2.551, 0.0123),
                term("yds_per_attempt_diff", 382197.0, 2.035, 0.0445),
                term("sack_pct", -2516.0, -2.31, 0.0230),
            ],
            n: 120,
            r2: 0.53,
            adjusted_r2: 0.50,
            rss: 1.0,
            tss: 2.0,
            sigma: 1.0,
            aicc: 0.0,
        }
    }

    #[test]
    fn table_layout() {
        let text = ModelExport::new(&reference_model(), None).render_table();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Variable\tEstimate\tt value\tPr(>|t|)");
        assert_eq!(lines[1], "(Intercept)\t5399261\t9.427\t2.12E-15");
        assert_eq!(lines[2], "Avg. PFF Rating Prior to Contract\t56697\t3.081\t0.00268");
        assert_eq!(lines[4], "Draft Round\t-264405\t-4.224\t5.38E-05");
        assert_eq!(lines[5], "Pro Bowl Selections\t624910\t3.715\t0.000338");
        assert_eq!(lines[8], "Sack %\t-2516\t-2.310\t0.0230");
        assert_eq!(lines.len(), 9);
    }

    #[test]
    fn json_columns() {
        let json = serde_json::to_value(ModelExport::new(&reference_model(), None)).unwrap();
        let row = &json["coefficients"][0];
        for key in ["Variable", "Estimate", "t value", "Pr(>|t|)"] {
            assert!(row.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn p_formatting() {
        assert_eq!(format_p(0.5), "0.500");
        assert_eq!(format_p(0.012284), "0.0123");
        assert_eq!(format_p(9.996e-5), "1.00E-04");
    }
}
