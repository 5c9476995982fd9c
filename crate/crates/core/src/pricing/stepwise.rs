use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ols::{DesignData, PricingModel};
use crate::error::Result;

/// Rule deciding whether a predictor enters or leaves the model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SelectionRule {
    /// Minimize the small-sample corrected AIC.
    #[default]
    Aicc,
    /// Enter below `entry`, leave above `exit`.
    PValue { entry: f64, exit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: StepAction,
    pub predictor: String,
    pub aicc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseResult {
    pub model: PricingModel,
    pub steps: Vec<Step>,
    pub warnings: Vec<String>,
}

impl StepwiseResult {
    pub fn selected(&self) -> Vec<&str> {
        self.model.names()
    }
}

fn fit_set(data: &DesignData, set: &BTreeSet<&str>) -> Result<PricingModel> {
    let names: Vec<&str> = set.iter().copied().collect();
    data.fit(&names)
}

/// Evaluates `f` on every candidate and returns the best by `score`,
/// keeping the earliest name on ties. Errors surface in name order.
fn best<'a>(
    candidates: &[&'a str],
    f: impl Fn(&'a str) -> Result<PricingModel> + Sync,
    score: impl Fn(&'a str, &PricingModel) -> f64,
) -> Result<Option<(&'a str, PricingModel, f64)>> {
    let fits: Vec<Result<PricingModel>> = candidates.par_iter().map(|&c| f(c)).collect();
    let mut out: Option<(&str, PricingModel, f64)> = None;
    for (&c, fit) in candidates.iter().zip(fits) {
        let model = fit?;
        let s = score(c, &model);
        if out.as_ref().is_none_or(|(_, _, b)| s < *b) {
            out = Some((c, model, s));
        }
    }
    Ok(out)
}

/// Bidirectional stepwise selection starting from the intercept-only model.
///
/// Each round tries every single addition and keeps the best one if it
/// strictly improves the rule, then drops predictors while a removal
/// strictly improves it. Candidates are visited in name order so the result
/// does not depend on the order they were supplied in.
pub fn stepwise_select(data: &DesignData, candidates: &[&str], rule: SelectionRule) -> Result<StepwiseResult> {
    let pool: BTreeSet<&str> = candidates.iter().copied().collect();
    let mut current: BTreeSet<&str> = BTreeSet::new();
    let mut model = fit_set(data, &current)?;
    let mut steps = Vec::new();
    let mut seen: BTreeSet<Vec<&str>> = BTreeSet::from([Vec::new()]);

    loop {
        let outside: Vec<&str> = pool.difference(&current).copied().collect();
        let added = best(
            &outside,
            |c| {
                let mut s = current.clone();
                s.insert(c);
                fit_set(data, &s)
            },
            |c, m| match rule {
                SelectionRule::Aicc => m.aicc,
                SelectionRule::PValue { .. } => m.terms.iter().find(|t| t.name == c).map_or(1.0, |t| t.p_value),
            },
        )?;
        let accept = match (&added, rule) {
            (Some((_, m, _)), SelectionRule::Aicc) => m.aicc < model.aicc,
            (Some((_, _, p)), SelectionRule::PValue { entry, .. }) => *p < entry,
            (None, _) => false,
        };
        let mut changed = false;
        if accept {
            let (c, m, _) = added.expect("accepted addition exists");
            let mut next = current.clone();
            next.insert(c);
            if seen.insert(next.iter().copied().collect()) {
                current = next;
                steps.push(Step {
                    action: StepAction::Added,
                    predictor: c.to_string(),
                    aicc: m.aicc,
                });
                model = m;
                changed = true;
            }
        }

        loop {
            let inside: Vec<&str> = current.iter().copied().collect();
            if inside.is_empty() {
                break;
            }
            let removal = match rule {
                SelectionRule::Aicc => best(
                    &inside,
                    |c| {
                        let mut s = current.clone();
                        s.remove(c);
                        fit_set(data, &s)
                    },
                    |_, m| m.aicc,
                )?
                .filter(|(_, m, _)| m.aicc < model.aicc),
                SelectionRule::PValue { exit, .. } => {
                    let worst = model
                        .terms
                        .iter()
                        .filter(|t| t.p_value > exit)
                        .max_by(|a, b| a.p_value.total_cmp(&b.p_value).then_with(|| b.name.cmp(&a.name)));
                    match worst {
                        Some(t) => {
                            let name = *current.get(t.name.as_str()).expect("term in current set");
                            let mut s = current.clone();
                            s.remove(name);
                            let m = fit_set(data, &s)?;
                            Some((name, m, 0.0))
                        }
                        None => None,
                    }
                }
            };
            let Some((c, m, _)) = removal else { break };
            let mut next = current.clone();
            next.remove(c);
            if !seen.insert(next.iter().copied().collect()) {
                break;
            }
            current = next;
            steps.push(Step {
                action: StepAction::Removed,
                predictor: c.to_string(),
                aicc: m.aicc,
            });
            model = m;
            changed = true;
        }

        if !changed {
            break;
        }
    }

    let mut warnings = Vec::new();
    if current.is_empty() {
        warnings.push("no candidate improved on the intercept-only model".to_string());
    }
    Ok(StepwiseResult { model, steps, warnings })
}
