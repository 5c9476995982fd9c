//! Salary anomaly detection: tail probabilities under each cluster's fitted
//! salary distribution, the silhouette gate and the rank comparison used to
//! sanity-check the findings.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::PositionGroup;
use crate::error::{Error, Result};
use crate::profiling::Direction;
use crate::salary_dist::{SalaryDistribution, Selection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    Upper,
    Lower,
}

/// `P(X >= s)` for the upper tail, `P(X <= s)` for the lower.
pub fn tail_probability(dist: &SalaryDistribution, s: f64, tail: Tail) -> Result<f64> {
    if s < dist.lower {
        return Err(Error::OutOfSupport {
            value: s,
            lower: dist.lower,
            upper: dist.upper.unwrap_or(f64::INFINITY),
        });
    }
    Ok(match tail {
        Tail::Upper => dist.sf(s),
        Tail::Lower => dist.cdf(s),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Overvalued,
    Undervalued,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Overvalued => "OVERVALUED",
            Verdict::Undervalued => "UNDERVALUED",
        })
    }
}

/// A cluster member as seen by the tail test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub player_id: String,
    pub season_year: i32,
    pub team: String,
    pub position: PositionGroup,
    pub cap_value_nominal: f64,
    /// The salary that is tested; the one the distribution was fitted to.
    pub cap_value_adjusted: f64,
    pub silhouette: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationFinding {
    pub player_id: String,
    pub season_year: i32,
    pub team: String,
    pub position: PositionGroup,
    pub cap_value_nominal: f64,
    pub cluster: usize,
    pub verdict: Verdict,
    pub tail_probability: f64,
    pub silhouette: f64,
    pub gate_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFindings {
    pub cluster: usize,
    pub direction: Direction,
    /// Every tail hit, before the silhouette gate.
    pub candidates: Vec<ValuationFinding>,
    pub skipped: Option<String>,
}

impl ClusterFindings {
    pub fn findings(&self) -> impl Iterator<Item = &ValuationFinding> {
        self.candidates.iter().filter(|f| f.gate_passed)
    }
}

/// Flags members whose salary falls in the tested tail. A one-directional
/// cluster uses `alpha` in its single tail; a two-sided test splits it.
/// Candidates whose silhouette is below `silhouette_mean` fail the gate.
pub fn identify(
    cluster: usize,
    members: &[Member],
    selection: &Selection,
    direction: Direction,
    silhouette_mean: f64,
    alpha: f64,
) -> Result<ClusterFindings> {
    let Some(fitted) = selection.fitted() else {
        let reason = match selection {
            Selection::Skipped { reason, .. } => reason.clone(),
            Selection::Selected { .. } => unreachable!(),
        };
        return Ok(ClusterFindings {
            cluster,
            direction,
            candidates: Vec::new(),
            skipped: Some(format!("no salary distribution: {reason}")),
        });
    };
    let dist = fitted.distribution();
    let tests: &[(Tail, Verdict)] = match direction {
        Direction::TestOvervalued => &[(Tail::Upper, Verdict::Overvalued)],
        Direction::TestUndervalued => &[(Tail::Lower, Verdict::Undervalued)],
        Direction::TestBoth => &[(Tail::Upper, Verdict::Overvalued), (Tail::Lower, Verdict::Undervalued)],
    };
    let level = if direction == Direction::TestBoth { alpha / 2.0 } else { alpha };
    let mut candidates = Vec::new();
    for m in members {
        for &(tail, verdict) in tests {
            let p = tail_probability(dist, m.cap_value_adjusted, tail)?;
            if p <= level {
                candidates.push(ValuationFinding {
                    player_id: m.player_id.clone(),
                    season_year: m.season_year,
                    team: m.team.clone(),
                    position: m.position,
                    cap_value_nominal: m.cap_value_nominal,
                    cluster,
                    verdict,
                    tail_probability: p,
                    silhouette: m.silhouette,
                    gate_passed: m.silhouette >= silhouette_mean,
                });
            }
        }
    }
    Ok(ClusterFindings {
        cluster,
        direction,
        candidates,
        skipped: None,
    })
}

/// Performance rating and salary of one player-season in the rank population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankInput {
    pub player_id: String,
    pub season_year: i32,
    pub position: PositionGroup,
    pub rating: Option<f64>,
    pub salary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub player_id: String,
    pub season_year: i32,
    pub position: PositionGroup,
    pub relative_performance_rank: Option<usize>,
    pub relative_salary_rank: Option<usize>,
    pub verdict: Verdict,
    /// None when the ranks cannot be compared.
    pub corroborated: Option<bool>,
}

/// Rank 1 is best performance or highest salary. An undervalued verdict is
/// corroborated when the player performs better than they are paid by more
/// than `min_gap` places, overvalued when they perform worse.
pub fn corroborates(verdict: Verdict, performance_rank: usize, salary_rank: usize, min_gap: usize) -> bool {
    let (p, s) = (performance_rank as i64, salary_rank as i64);
    match verdict {
        Verdict::Undervalued => s - p > min_gap as i64,
        Verdict::Overvalued => p - s > min_gap as i64,
    }
}

/// Competition ranks (1 = largest value, ties share the smallest rank).
fn descending_ranks(values: &[(usize, f64)]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for &(i, v) in values {
        out.insert(i, 1 + values.iter().filter(|(_, w)| *w > v).count());
    }
    out
}

/// Compares each finding's performance and salary rank within its position
/// group over the whole rank population.
pub fn rank_validation(findings: &[ValuationFinding], population: &[RankInput], min_gap: usize) -> Vec<ValidationRow> {
    let mut perf_ranks = BTreeMap::new();
    let mut salary_ranks = BTreeMap::new();
    for group in [PositionGroup::C, PositionGroup::G, PositionGroup::T] {
        let members: Vec<usize> = (0..population.len()).filter(|&i| population[i].position == group).collect();
        let ratings: Vec<(usize, f64)> = members
            .iter()
            .filter_map(|&i| population[i].rating.map(|r| (i, r)))
            .collect();
        let salaries: Vec<(usize, f64)> = members.iter().map(|&i| (i, population[i].salary)).collect();
        perf_ranks.extend(descending_ranks(&ratings));
        salary_ranks.extend(descending_ranks(&salaries));
    }
    findings
        .iter()
        .map(|f| {
            let idx = population
                .iter()
                .position(|r| r.player_id == f.player_id && r.season_year == f.season_year);
            let perf = idx.and_then(|i| perf_ranks.get(&i).copied());
            let salary = idx.and_then(|i| salary_ranks.get(&i).copied());
            ValidationRow {
                player_id: f.player_id.clone(),
                season_year: f.season_year,
                position: f.position,
                relative_performance_rank: perf,
                relative_salary_rank: salary,
                verdict: f.verdict,
                corroborated: perf.zip(salary).map(|(p, s)| corroborates(f.verdict, p, s, min_gap)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::salary_dist::{ChiSquared, Diagnostics, Family, FamilyFit, FittedSalaryDistribution};

    const L: f64 = 7.5e5;

    fn lognormal() -> SalaryDistribution {
        SalaryDistribution::new(Family::Lognormal, L, None, [14.0, 0.5]).unwrap()
    }

    fn selected(d: SalaryDistribution) -> Selection {
        Selection::Selected {
            fitted: Box::new(FittedSalaryDistribution {
                cluster: 0,
                fit: FamilyFit {
                    distribution: d,
                    log_likelihood: 0.0,
                    aic: 4.0,
                    converged: true,
                    gradient_norm: 0.0,
                },
                chi_squared: ChiSquared::Skipped { reason: String::new() },
                diagnostics: Diagnostics::default(),
            }),
            ranking: Vec::new(),
        }
    }

    fn member(id: &str, salary: f64, silhouette: f64) -> Member {
        Member {
            player_id: id.into(),
            season_year: 2014,
            team: "NYG".into(),
            position: PositionGroup::G,
            cap_value_nominal: salary,
            cap_value_adjusted: salary,
            silhouette,
        }
    }

    #[test]
    fn median_and_quantile_tails() {
        let d = lognormal();
        let med = d.quantile(0.5);
        assert!((tail_probability(&d, med, Tail::Upper).unwrap() - 0.5).abs() < 1e-12);
        assert!((tail_probability(&d, med, Tail::Lower).unwrap() - 0.5).abs() < 1e-12);
        let q95 = d.quantile(0.95);
        assert!((tail_probability(&d, q95, Tail::Upper).unwrap() - 0.05).abs() < 1e-9);
        assert!(tail_probability(&d, L - 1.0, Tail::Upper).is_err());
    }

    /// Upper tail by Simpson integration of the density, with the
    /// substitution x = L + exp(v) to cover the infinite range.
    #[test]
    fn upper_tail_matches_quadrature() {
        let d = lognormal();
        for s in [1.2e6, 2.0e6, 4.0e6] {
            let (a, b) = ((s - L).ln(), 30.0f64);
            let n = 200_000;
            let h = (b - a) / n as f64;
            let g = |v: f64| (d.ln_pdf(L + v.exp()) + v).exp();
            let mut sum = g(a) + g(b);
            for i in 1..n {
                sum += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let oracle = sum * h / 3.0;
            assert!((tail_probability(&d, s, Tail::Upper).unwrap() - oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn identify_rules() {
        let d = lognormal();
        let hi = d.quantile(0.97);
        let members = vec![
            member("mid", d.quantile(0.5), 0.9),
            member("hi_good", hi, 0.6),
            member("hi_poor", hi, 0.1),
        ];
        let out = identify(0, &members, &selected(d.clone()), Direction::TestOvervalued, 0.4, 0.05).unwrap();
        let ids: Vec<&str> = out.candidates.iter().map(|f| f.player_id.as_str()).collect();
        assert_eq!(ids, vec!["hi_good", "hi_poor"]);
        let gated: Vec<&str> = out.findings().map(|f| f.player_id.as_str()).collect();
        assert_eq!(gated, vec!["hi_good"]);
        assert!(out.candidates.iter().all(|f| f.verdict == Verdict::Overvalued));

        // 0.03 in the upper tail is not beyond 0.025 in a two-sided test.
        let both = identify(0, &members, &selected(d.clone()), Direction::TestBoth, 0.4, 0.05).unwrap();
        assert!(both.candidates.is_empty());
        let under = identify(0, &members, &selected(d), Direction::TestUndervalued, 0.4, 0.05).unwrap();
        assert!(under.candidates.is_empty());
    }

    #[test]
    fn skipped_cluster_has_no_findings() {
        let sel = Selection::Skipped {
            cluster: 5,
            reason: "8 members".into(),
            ranking: Vec::new(),
        };
        let out = identify(5, &[member("a", 1e6, 1.0)], &sel, Direction::TestBoth, 0.0, 0.05).unwrap();
        assert!(out.candidates.is_empty() && out.skipped.is_some());
    }

    #[test]
    fn corroboration_rule() {
        assert!(corroborates(Verdict::Overvalued, 30, 1, 0));
        assert!(corroborates(Verdict::Undervalued, 23, 28, 0));
        assert!(!corroborates(Verdict::Undervalued, 31, 27, 0));
        assert!(!corroborates(Verdict::Overvalued, 5, 5, 0));
        assert!(!corroborates(Verdict::Undervalued, 5, 5, 0));
        assert!(!corroborates(Verdict::Undervalued, 23, 28, 5));
    }

    fn finding(id: &str, verdict: Verdict) -> ValuationFinding {
        ValuationFinding {
            player_id: id.into(),
            season_year: 2014,
            team: "X".into(),
            position: PositionGroup::G,
            cap_value_nominal: 1.0,
            cluster: 0,
            verdict,
            tail_probability: 0.01,
            silhouette: 0.5,
            gate_passed: true,
        }
    }

    fn population(ratings: &[Option<f64>], salaries: &[f64]) -> Vec<RankInput> {
        ratings
            .iter()
            .zip(salaries)
            .enumerate()
            .map(|(i, (&rating, &salary))| RankInput {
                player_id: format!("p{i}"),
                season_year: 2014,
                position: if i % 4 == 3 { PositionGroup::T } else { PositionGroup::G },
                rating,
                salary,
            })
            .collect()
    }

    #[test]
    fn ranks_within_groups() {
        let pop = population(&[Some(80.0), Some(60.0), Some(70.0), Some(10.0), None], &[1e6, 3e6, 2e6, 9e6, 5e6]);
        let rows = rank_validation(
            &[finding("p1", Verdict::Overvalued), finding("p3", Verdict::Overvalued), finding("p4", Verdict::Undervalued)],
            &pop,
            0,
        );
        // Guards p0, p1, p2, p4: p1 is third best and second highest paid.
        assert_eq!((rows[0].relative_performance_rank, rows[0].relative_salary_rank), (Some(3), Some(2)));
        assert_eq!(rows[0].corroborated, Some(true));
        // The only tackle ranks first on both.
        assert_eq!(rows[1].corroborated, Some(false));
        assert_eq!(rows[2].corroborated, None);
    }

    proptest! {
        #[test]
        fn upper_tail_monotone(a in 7.6e5f64..2e7, b in 7.6e5f64..2e7) {
            let d = lognormal();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(tail_probability(&d, hi, Tail::Upper).unwrap() <= tail_probability(&d, lo, Tail::Upper).unwrap());
        }

        #[test]
        fn gate_only_removes(sil in prop::collection::vec(-1.0f64..1.0, 5..30), mean in -0.5f64..0.5) {
            let d = lognormal();
            let members: Vec<Member> = sil.iter().enumerate()
                .map(|(i, &s)| member(&format!("m{i}"), d.quantile((i as f64 + 0.5) / sil.len() as f64 * 0.1 + 0.9), s))
                .collect();
            let out = identify(0, &members, &selected(d), Direction::TestOvervalued, mean, 0.05).unwrap();
            prop_assert!(out.findings().all(|f| out.candidates.contains(f) && f.silhouette >= mean));
        }

        #[test]
        fn ranks_invariant_to_monotone_transform(ratings in prop::collection::vec(0.0f64..100.0, 8..20)) {
            let salaries: Vec<f64> = (0..ratings.len()).map(|i| 1e6 + 1e5 * ((i * 7) % 11) as f64).collect();
            let a = population(&ratings.iter().map(|&r| Some(r)).collect::<Vec<_>>(), &salaries);
            let b = population(&ratings.iter().map(|&r| Some((r / 10.0).exp())).collect::<Vec<_>>(), &salaries);
            let fs = vec![finding("p0", Verdict::Overvalued), finding("p5", Verdict::Undervalued)];
            prop_assert_eq!(rank_validation(&fs, &a, 0), rank_validation(&fs, &b, 0));
        }
    }
}
