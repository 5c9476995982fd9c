//! Cluster characterization by per-predictor t-tests and the choice of
//! which salary tail to test in each cluster.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clustering::Matrix;
use crate::dataset::Predictor;
use crate::error::{Error, Result};
use crate::stats::{mean, sample_variance, t_two_sided_p};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    /// Both samples had zero spread and different means.
    pub degenerate: bool,
}

fn zero_spread(diff: f64) -> TestResult {
    if diff == 0.0 {
        TestResult {
            t: 0.0,
            df: f64::NAN,
            p_value: 1.0,
            degenerate: false,
        }
    } else {
        TestResult {
            t: diff.signum() * f64::INFINITY,
            df: f64::NAN,
            p_value: 0.0,
            degenerate: true,
        }
    }
}

/// Welch's unequal-variance two-sample t-test, two-sided.
pub fn welch_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData("each sample needs at least two values".into()));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (v1, v2) = (sample_variance(a) / n1, sample_variance(b) / n2);
    let diff = mean(a) - mean(b);
    let se2 = v1 + v2;
    if se2 == 0.0 {
        return Ok(zero_spread(diff));
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0));
    Ok(TestResult {
        t,
        df,
        p_value: t_two_sided_p(t, df),
        degenerate: false,
    })
}

/// One-sample t-test of `a` against the fixed mean `mu`, two-sided.
pub fn one_sample_test(a: &[f64], mu: f64) -> Result<TestResult> {
    if a.len() < 2 {
        return Err(Error::InsufficientData("the sample needs at least two values".into()));
    }
    let n = a.len() as f64;
    let se2 = sample_variance(a) / n;
    let diff = mean(a) - mu;
    if se2 == 0.0 {
        return Ok(zero_spread(diff));
    }
    let t = diff / se2.sqrt();
    Ok(TestResult {
        t,
        df: n - 1.0,
        p_value: t_two_sided_p(t, n - 1.0),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMode {
    /// Cluster members against everyone else.
    #[default]
    TwoSample,
    /// Cluster members against the whole-sample mean.
    OneSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    TestUndervalued,
    TestOvervalued,
    TestBoth,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::TestUndervalued => "Undervalued",
            Direction::TestOvervalued => "Overvalued",
            Direction::TestBoth => "Both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorStat {
    pub predictor: String,
    pub cluster_mean: f64,
    pub overall_mean: f64,
    pub t: f64,
    pub p_value: f64,
    pub significant: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster: usize,
    pub size: usize,
    pub stats: Vec<PredictorStat>,
    pub direction: Direction,
    pub narrative: String,
    /// Why the cluster was not tested, if it was not.
    pub skipped: Option<String>,
}

/// Per-cluster, per-predictor t-tests on the unstandardized attributes.
/// Clusters with fewer than two members, or fewer than two non-members,
/// are skipped. `significance` is the per-test threshold.
pub fn cluster_t_tests(
    x: &Matrix,
    names: &[String],
    assignments: &[usize],
    k: usize,
    mode: TestMode,
    significance: f64,
) -> Result<Vec<Vec<PredictorStat>>> {
    if names.len() != x.cols() || assignments.len() != x.rows() {
        return Err(Error::InvalidArgument("feature matrix, names and assignments disagree".into()));
    }
    let overall: Vec<f64> = (0..x.cols()).map(|j| mean(&x.column(j))).collect();
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let inside: Vec<usize> = (0..x.rows()).filter(|&i| assignments[i] == c).collect();
        let outside: Vec<usize> = (0..x.rows()).filter(|&i| assignments[i] != c).collect();
        if inside.len() < 2 || outside.len() < 2 {
            out.push(Vec::new());
            continue;
        }
        let mut stats = Vec::with_capacity(x.cols());
        for (j, name) in names.iter().enumerate() {
            let a: Vec<f64> = inside.iter().map(|&i| x.get(i, j)).collect();
            let test = match mode {
                TestMode::TwoSample => {
                    let b: Vec<f64> = outside.iter().map(|&i| x.get(i, j)).collect();
                    welch_test(&a, &b)?
                }
                TestMode::OneSample => one_sample_test(&a, overall[j])?,
            };
            stats.push(PredictorStat {
                predictor: name.clone(),
                cluster_mean: mean(&a),
                overall_mean: overall[j],
                t: test.t,
                p_value: test.p_value,
                significant: test.p_value < significance,
                degenerate: test.degenerate,
            });
        }
        out.push(stats);
    }
    Ok(out)
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Which tail to test: a cluster whose significant traits all point to a
/// higher salary (coefficient sign times deviation sign) is tested for
/// underpaid players, all-lower for overpaid players, anything else both.
pub fn assign_direction(stats: &[PredictorStat], coefficients: &BTreeMap<String, f64>) -> Result<Direction> {
    let mut signs = Vec::new();
    for s in stats.iter().filter(|s| s.significant) {
        let alpha = coefficients
            .get(&s.predictor)
            .ok_or_else(|| Error::MissingPredictor(s.predictor.clone()))?;
        signs.push(sign(*alpha) * sign(s.cluster_mean - s.overall_mean));
    }
    Ok(if signs.is_empty() {
        Direction::TestBoth
    } else if signs.iter().all(|&d| d == 1) {
        Direction::TestUndervalued
    } else if signs.iter().all(|&d| d == -1) {
        Direction::TestOvervalued
    } else {
        Direction::TestBoth
    })
}

fn phrase(name: &str, above: bool) -> String {
    let pick = |hi: &str, lo: &str| if above { hi.to_string() } else { lo.to_string() };
    match Predictor::from_name(name) {
        Some(Predictor::Age) => pick("are older", "are younger"),
        Some(Predictor::Experience) => pick("have more experience", "have less experience"),
        Some(Predictor::DraftRound) | Some(Predictor::DraftPick) => {
            pick("were late draft selections", "were early draft selections")
        }
        Some(Predictor::ProBowls) => pick("have more Pro Bowl selections", "have fewer Pro Bowl selections"),
        Some(Predictor::AllPro1st) => pick("have more 1st team All Pro selections", "have fewer 1st team All Pro selections"),
        Some(Predictor::AllPro2nd) => pick("have more 2nd team All Pro selections", "have fewer 2nd team All Pro selections"),
        Some(Predictor::PfwAllPro) => pick("have more PFW All Pro selections", "have fewer PFW All Pro selections"),
        Some(Predictor::PffPriorAvg) => pick(
            "had above average PFF ratings prior to their contract being signed",
            "had below average PFF ratings prior to their contract being signed",
        ),
        Some(Predictor::PffCurrent) => pick(
            "have above average PFF ratings in the current season",
            "have below average PFF ratings in the current season",
        ),
        Some(p) => format!("have {} average {}", if above { "above" } else { "below" }, p.label()),
        None => format!("have {} average {name}", if above { "above" } else { "below" }),
    }
}

/// One-sentence characterization built from the significant predictors.
pub fn narrative(stats: &[PredictorStat]) -> String {
    let parts: Vec<String> = stats
        .iter()
        .filter(|s| s.significant && s.cluster_mean != s.overall_mean)
        .map(|s| phrase(&s.predictor, s.cluster_mean > s.overall_mean))
        .collect();
    match parts.len() {
        0 => "No predictor differs significantly from the rest of the sample".to_string(),
        1 => format!("Players who {}", parts[0]),
        _ => {
            let (last, head) = parts.split_last().expect("two or more parts");
            format!("Players who {}, and {last}", head.join(", "))
        }
    }
}

/// Full profile of every cluster.
pub fn profile_clusters(
    x: &Matrix,
    names: &[String],
    assignments: &[usize],
    k: usize,
    coefficients: &BTreeMap<String, f64>,
    mode: TestMode,
    significance: f64,
) -> Result<Vec<ClusterProfile>> {
    let tests = cluster_t_tests(x, names, assignments, k, mode, significance)?;
    tests
        .into_iter()
        .enumerate()
        .map(|(c, stats)| {
            let size = assignments.iter().filter(|&&a| a == c).count();
            if stats.is_empty() {
                return Ok(ClusterProfile {
                    cluster: c,
                    size,
                    stats,
                    direction: Direction::TestBoth,
                    narrative: String::new(),
                    skipped: Some("cluster or its complement has fewer than two members".into()),
                });
            }
            Ok(ClusterProfile {
                cluster: c,
                size,
                direction: assign_direction(&stats, coefficients)?,
                narrative: narrative(&stats),
                stats,
                skipped: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;

    /// Two-sided t tail by Simpson integration of the density in the
    /// angle variable t = sqrt(df) tan(theta).
    fn t_tail_oracle(t: f64, df: f64) -> f64 {
        let f = |th: f64| th.cos().powf(df - 1.0);
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let theta = (t.abs() / df.sqrt()).atan();
        let half = std::f64::consts::FRAC_PI_2;
        simpson(theta, half, 20000) / simpson(0.0, half, 20000)
    }

    fn sample(rng: &mut ChaCha8Rng, n: usize, mu: f64, sd: f64) -> Vec<f64> {
        let d = Normal::new(mu, sd).unwrap();
        (0..n).map(|_| d.sample(rng)).collect()
    }

    #[test]
    fn identical_samples() {
        let r = welch_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.t, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn zero_spread_rules() {
        let r = welch_test(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!((r.p_value, r.degenerate), (1.0, false));
        let r = welch_test(&[2.0, 2.0], &[3.0, 3.0, 3.0]).unwrap();
        assert_eq!((r.p_value, r.degenerate), (0.0, true));
    }

    #[test]
    fn shifted_cluster_is_significant_and_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = sample(&mut rng, 20, 5.0, 1.0);
        let b = sample(&mut rng, 20, 0.0, 1.0);
        let r = welch_test(&a, &b).unwrap();
        assert!(r.p_value < 1e-6);
        let oracle = t_tail_oracle(r.t, r.df);
        assert!((r.p_value - oracle).abs() < 1e-8 * oracle.max(1e-300).max(1e-12), "{} vs {oracle}", r.p_value);
    }

    #[test]
    fn null_case_not_significant() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = sample(&mut rng, 30, 0.0, 1.0);
        let b = sample(&mut rng, 60, 0.0, 1.0);
        let r = welch_test(&a, &b).unwrap();
        assert!(r.p_value > 0.01);
        assert!((r.p_value - t_tail_oracle(r.t, r.df)).abs() < 1e-8);
    }

    fn stat(name: &str, cluster_mean: f64, significant: bool) -> PredictorStat {
        PredictorStat {
            predictor: name.into(),
            cluster_mean,
            overall_mean: 0.0,
            t: 0.0,
            p_value: if significant { 0.001 } else { 0.5 },
            significant,
            degenerate: false,
        }
    }

    #[test]
    fn direction_rules() {
        let coef = BTreeMap::from([
            ("pff_prior_avg".to_string(), 5.0),
            ("draft_round".to_string(), -2.0),
            ("pro_bowls".to_string(), 3.0),
        ]);
        assert_eq!(
            assign_direction(&[stat("pff_prior_avg", 1.0, true)], &coef).unwrap(),
            Direction::TestUndervalued
        );
        assert_eq!(
            assign_direction(&[stat("draft_round", 1.0, true), stat("pro_bowls", -1.0, true)], &coef).unwrap(),
            Direction::TestOvervalued
        );
        assert_eq!(
            assign_direction(&[stat("pff_prior_avg", 1.0, true), stat("pro_bowls", -1.0, true)], &coef).unwrap(),
            Direction::TestBoth
        );
        assert_eq!(assign_direction(&[stat("pro_bowls", 1.0, false)], &coef).unwrap(), Direction::TestBoth);
        assert!(assign_direction(&[stat("age", 1.0, true)], &coef).is_err());
    }

    #[test]
    fn narrative_template() {
        let text = narrative(&[stat("draft_round", -1.0, true), stat("pro_bowls", -2.0, true), stat("age", 3.0, false)]);
        assert_eq!(
            text,
            "Players who were early draft selections, and have fewer Pro Bowl selections"
        );
    }

    #[test]
    fn small_clusters_skipped() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![9.0]]).unwrap();
        let coef = BTreeMap::from([("age".to_string(), 1.0)]);
        let p = profile_clusters(&x, &["age".into()], &[0, 0, 0, 1], 2, &coef, TestMode::TwoSample, 0.01).unwrap();
        assert!(p[0].skipped.is_some() && p[1].skipped.is_some());
        assert_eq!(p[1].direction, Direction::TestBoth);
    }

    proptest! {
        #[test]
        fn antisymmetric_and_affine_invariant(
            a in prop::collection::vec(-50.0f64..50.0, 2..15),
            b in prop::collection::vec(-50.0f64..50.0, 2..15),
            scale in prop::sample::select(vec![-3.0f64, 0.5, 2.0, 10.0]),
            shift in -100.0f64..100.0,
        ) {
            let r = welch_test(&a, &b).unwrap();
            let s = welch_test(&b, &a).unwrap();
            prop_assume!(!r.degenerate && r.t.is_finite());
            prop_assert!((r.t + s.t).abs() <= 1e-12 * r.t.abs().max(1.0));
            prop_assert!((r.p_value - s.p_value).abs() <= 1e-12);
            let f = |v: &Vec<f64>| v.iter().map(|x| scale * x + shift).collect::<Vec<_>>();
            let q = welch_test(&f(&a), &f(&b)).unwrap();
            prop_assert!((q.p_value - r.p_value).abs() <= 1e-8);
        }

        #[test]
        fn direction_ignores_order(order in Just(()).prop_perturb(|_, mut rng| {
            let mut v = vec![0usize, 1, 2];
            use rand::seq::SliceRandom;
            v.shuffle(&mut rng);
            v
        })) {
            let coef = BTreeMap::from([("a".to_string(), 1.0), ("b".to_string(), -1.0), ("c".to_string(), 2.0)]);
            let stats = [stat("a", 1.0, true), stat("b", -1.0, true), stat("c", 1.0, true)];
            let shuffled: Vec<_> = order.iter().map(|&i| stats[i].clone()).collect();
            prop_assert_eq!(assign_direction(&stats, &coef).unwrap(), assign_direction(&shuffled, &coef).unwrap());
        }
    }
}
