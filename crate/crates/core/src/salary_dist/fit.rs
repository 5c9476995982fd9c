use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::family::{Family, SalaryDistribution};
use crate::error::{Error, Result};
use crate::stats::{mean, sample_variance};

/// Gradient norm, in the optimizer's coordinates, below which a fit counts
/// as converged. The objective is the mean log-likelihood of the rescaled
/// sample, with scale parameters on the log scale.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub distribution: SalaryDistribution,
    pub log_likelihood: f64,
    pub aic: f64,
    pub converged: bool,
    pub gradient_norm: f64,
}

impl FamilyFit {
    pub fn family(&self) -> Family {
        self.distribution.family
    }
}

/// Maps optimizer coordinates to family parameters.
fn natural(family: Family, theta: [f64; 2]) -> [f64; 2] {
    match family {
        Family::Lognormal => [theta[0], theta[1].exp()],
        _ => [theta[0].exp(), theta[1].exp()],
    }
}

fn transformed(family: Family, p: [f64; 2]) -> [f64; 2] {
    match family {
        Family::Lognormal => [p[0], p[1].ln()],
        _ => [p[0].ln(), p[1].ln()],
    }
}

fn moment_start(family: Family, w: &[f64]) -> [f64; 2] {
    let m = mean(w);
    let v = sample_variance(w);
    match family {
        Family::Lognormal => {
            let s2 = (1.0 + v / (m * m)).ln();
            [m.ln() - s2 / 2.0, s2.sqrt()]
        }
        Family::Gamma => [m * m / v, v / m],
        Family::Beta => {
            let c = m * (1.0 - m) / v - 1.0;
            if c > 0.0 {
                [m * c, (1.0 - m) * c]
            } else {
                [1.0, 1.0]
            }
        }
        Family::Pareto => {
            if v > m * m {
                let a = 2.0 * v / (v - m * m);
                [a, m * (a - 1.0)]
            } else {
                [3.0, 2.0 * m]
            }
        }
        Family::Weibull => {
            let k = (v.sqrt() / m).powf(-1.086).clamp(0.05, 50.0);
            [k, m / gamma(1.0 + 1.0 / k)]
        }
    }
}

fn dispersed(family: Family, p: [f64; 2], f: f64) -> [f64; 2] {
    match family {
        Family::Lognormal => [p[0] + f.ln(), p[1] * f],
        _ => [p[0] * f, p[1] * f],
    }
}

fn nelder_mead(f: &impl Fn([f64; 2]) -> f64, start: [f64; 2]) -> [f64; 2] {
    let mut simplex = [start, [start[0] + 0.1, start[1]], [start[0], start[1] + 0.1]];
    let mut values = simplex.map(f);
    for _ in 0..4000 {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        let spread = (0..2)
            .map(|j| (simplex[1][j] - simplex[0][j]).abs().max((simplex[2][j] - simplex[0][j]).abs()))
            .fold(0.0, f64::max);
        if (values[2] - values[0]).abs() < 1e-15 && spread < 1e-11 {
            break;
        }
        let centroid = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let toward = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };
        let reflected = toward(-1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = toward(-2.0);
            let fe = f(expanded);
            (simplex[2], values[2]) = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < values[1] {
            (simplex[2], values[2]) = (reflected, fr);
        } else {
            let contracted = if fr < values[2] { toward(-0.5) } else { toward(0.5) };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                (simplex[2], values[2]) = (contracted, fc);
            } else {
                for i in 1..3 {
                    for j in 0..2 {
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    }
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("three vertices");
    simplex[best]
}

fn gradient(f: &impl Fn([f64; 2]) -> f64, t: [f64; 2]) -> [f64; 2] {
    let h = 1e-5;
    let mut g = [0.0; 2];
    for (j, gj) in g.iter_mut().enumerate() {
        let (mut a, mut b) = (t, t);
        a[j] += h;
        b[j] -= h;
        *gj = (f(a) - f(b)) / (2.0 * h);
    }
    g
}

fn hessian(f: &impl Fn([f64; 2]) -> f64, t: [f64; 2]) -> [[f64; 2]; 2] {
    let h = 1e-4;
    let at = |d0: f64, d1: f64| f([t[0] + d0, t[1] + d1]);
    let f0 = f(t);
    let h00 = (at(h, 0.0) - 2.0 * f0 + at(-h, 0.0)) / (h * h);
    let h11 = (at(0.0, h) - 2.0 * f0 + at(0.0, -h)) / (h * h);
    let h01 = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
    [[h00, h01], [h01, h11]]
}

fn norm(g: [f64; 2]) -> f64 {
    g[0].hypot(g[1])
}

/// Newton iterations with a backtracking line search; falls back to
/// steepest descent where the Hessian is not positive definite.
fn polish(f: &impl Fn([f64; 2]) -> f64, mut t: [f64; 2]) -> ([f64; 2], f64) {
    let mut g = gradient(f, t);
    for _ in 0..100 {
        if norm(g) < GRADIENT_TOLERANCE {
            break;
        }
        let h = hessian(f, t);
        let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        let step = if h[0][0] > 0.0 && det > 0.0 {
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(h[0][0] * g[1] - h[0][1] * g[0]) / det,
            ]
        } else {
            [-g[0], -g[1]]
        };
        let f0 = f(t);
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = [t[0] + scale * step[0], t[1] + scale * step[1]];
            let fc = f(cand);
            // Close to the optimum the decrease is below rounding, so a
            // flat step that shrinks the gradient is also accepted.
            let flat = fc <= f0 + 1e-14 * f0.abs().max(1.0);
            if fc < f0 || (flat && norm(gradient(f, cand)) < norm(g)) {
                t = cand;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if !moved {
            break;
        }
        g = gradient(f, t);
    }
    (t, norm(g))
}

/// Maximum-likelihood fit of one family to salaries above `lower` (and
/// below `upper` for Beta). Scale families are fitted to the sample
/// divided by its mean, which leaves the shape estimates unchanged and
/// keeps the objective well conditioned.
pub fn fit_family(xs: &[f64], family: Family, lower: f64, upper: Option<f64>) -> Result<FamilyFit> {
    if xs.len() < 4 {
        return Err(Error::InsufficientData(format!("{} salaries; fitting needs at least 4", xs.len())));
    }
    let width = match (family, upper) {
        (Family::Beta, Some(u)) if u > lower => u - lower,
        (Family::Beta, _) => {
            return Err(Error::InvalidArgument("Beta needs an upper bound above the lower bound".into()));
        }
        _ => 1.0,
    };
    let top = if family == Family::Beta { lower + width } else { f64::INFINITY };
    if let Some(&x) = xs.iter().find(|&&x| !(x > lower && x < top)) {
        return Err(Error::OutOfSupport {
            value: x,
            lower,
            upper: top,
        });
    }
    let y: Vec<f64> = xs.iter().map(|x| (x - lower) / width).collect();
    if sample_variance(&y) <= 0.0 {
        return Err(Error::Degenerate(format!("{family}: all salaries are equal")));
    }
    let scale = if family == Family::Beta { 1.0 } else { mean(&y) };
    let w: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let standard_upper = (family == Family::Beta).then_some(1.0);
    let objective = |t: [f64; 2]| {
        match SalaryDistribution::new(family, 0.0, standard_upper, natural(family, t)) {
            Ok(d) => {
                let ll = d.log_likelihood(&w) / w.len() as f64;
                if ll.is_finite() {
                    -ll
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    };

    let base = moment_start(family, &w);
    let starts = [base, dispersed(family, base, 0.5), dispersed(family, base, 2.0)];
    let best = starts
        .iter()
        .map(|&p| nelder_mead(&objective, transformed(family, p)))
        .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
        .expect("three starts");
    let (theta, gradient_norm) = polish(&objective, best);

    let mut params = natural(family, theta);
    match family {
        Family::Lognormal => params[0] += scale.ln(),
        Family::Beta => {}
        _ => params[1] *= scale,
    }
    let distribution = SalaryDistribution::new(family, lower, upper, params)?;
    let log_likelihood = distribution.log_likelihood(xs);
    Ok(FamilyFit {
        aic: 2.0 * distribution.parameter_count() as f64 - 2.0 * log_likelihood,
        converged: gradient_norm < GRADIENT_TOLERANCE && log_likelihood.is_finite(),
        distribution,
        log_likelihood,
        gradient_norm,
    })
}
