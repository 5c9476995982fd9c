use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{GameRecord, PassStats, Position, PressureStats, RushStats, Sided};
use crate::error::{Error, Result};

/// League season a game belongs to. August through February games belong to
/// the season that started in August.
pub fn season_of(date: NaiveDate) -> Result<i32> {
    match date.month() {
        8..=12 => Ok(date.year()),
        1 | 2 => Ok(date.year() - 1),
        _ => Err(Error::InvalidArgument(format!(
            "game date {date} falls outside the August-February season window"
        ))),
    }
}

/// Per-side season totals for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonTotals {
    pub player_id: String,
    pub season_year: i32,
    /// Team and position with the most snaps in the season.
    pub team: String,
    pub position: Position,
    pub games: u32,
    pub snaps: u32,
    pub rookie_year: i32,
    pub draft_round: u32,
    pub draft_pick: u32,
    pub birthday: NaiveDate,
    pub holding_penalties_rush: u32,
    pub holding_penalties_pass: u32,
    pub rush: Sided<RushStats>,
    pub pass: PassStats,
    pub protection: Sided<PressureStats>,
    /// Attempt-weighted mean release time.
    pub release_time: f64,
    pub release_attempts: u32,
    pub release_time_under_pressure: f64,
    pub release_attempts_under_pressure: u32,
    /// Snaps by position, used to pick each team's primary lineup.
    pub snaps_by_slot: Vec<(String, Position, u32)>,
}

fn most_snaps<K: Ord + Clone>(counts: &BTreeMap<K, u32>) -> K {
    // Ties go to the smallest key.
    let mut best: Option<(&K, u32)> = None;
    for (k, &v) in counts {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.expect("non-empty").0.clone()
}

/// Sums a player's games in one season.
pub fn aggregate_season(records: &[GameRecord], player_id: &str, season_year: i32) -> Result<SeasonTotals> {
    let mut games: Vec<&GameRecord> = Vec::new();
    for r in records.iter().filter(|r| r.player_id == player_id) {
        if season_of(r.date)? == season_year {
            games.push(r);
        }
    }
    if games.is_empty() {
        return Err(Error::EmptyRecords {
            player_id: player_id.to_string(),
            season: season_year,
        });
    }
    // Fixed summation order keeps floating sums independent of input order.
    games.sort_by(|a, b| (a.date, &a.game_id).cmp(&(b.date, &b.game_id)));

    let first = games[0];
    let mut rush = Sided::<RushStats>::default();
    let mut pass = PassStats::default();
    let mut protection = Sided::<PressureStats>::default();
    let (mut snaps, mut hold_rush, mut hold_pass) = (0u32, 0u32, 0u32);
    let (mut rel_sum, mut rel_att, mut relp_sum, mut relp_att) = (0.0, 0u32, 0.0, 0u32);
    let mut team_snaps: BTreeMap<String, u32> = BTreeMap::new();
    let mut position_snaps: BTreeMap<Position, u32> = BTreeMap::new();
    let mut slot_snaps: BTreeMap<(String, Position), u32> = BTreeMap::new();
    for g in &games {
        rush.to_side.add(&g.rush.to_side);
        rush.not_to_side.add(&g.rush.not_to_side);
        pass.add(&g.pass);
        protection.to_side.add(&g.protection.to_side);
        protection.not_to_side.add(&g.protection.not_to_side);
        snaps += g.snaps;
        hold_rush += g.holding_penalties_rush;
        hold_pass += g.holding_penalties_pass;
        rel_sum += g.release.time * f64::from(g.release.attempts);
        rel_att += g.release.attempts;
        relp_sum += g.release.time_under_pressure * f64::from(g.release.attempts_under_pressure);
        relp_att += g.release.attempts_under_pressure;
        *team_snaps.entry(g.team.clone()).or_default() += g.snaps;
        *position_snaps.entry(g.position).or_default() += g.snaps;
        *slot_snaps.entry((g.team.clone(), g.position)).or_default() += g.snaps;
    }
    let weighted = |sum: f64, n: u32| if n == 0 { 0.0 } else { sum / f64::from(n) };
    Ok(SeasonTotals {
        player_id: player_id.to_string(),
        season_year,
        team: most_snaps(&team_snaps),
        position: most_snaps(&position_snaps),
        games: games.len() as u32,
        snaps,
        rookie_year: first.rookie_year,
        draft_round: first.draft_round,
        draft_pick: first.draft_pick,
        birthday: first.birthday,
        holding_penalties_rush: hold_rush,
        holding_penalties_pass: hold_pass,
        rush,
        pass,
        protection,
        release_time: weighted(rel_sum, rel_att),
        release_attempts: rel_att,
        release_time_under_pressure: weighted(relp_sum, relp_att),
        release_attempts_under_pressure: relp_att,
        snaps_by_slot: slot_snaps.into_iter().map(|((t, p), s)| (t, p, s)).collect(),
    })
}

/// Aggregates every (player, season) present in `records`, sorted by player
/// then season.
pub fn aggregate_all(records: &[GameRecord]) -> Result<Vec<SeasonTotals>> {
    let mut keys = std::collections::BTreeSet::new();
    for r in records {
        keys.insert((r.player_id.as_str(), season_of(r.date)?));
    }
    let mut by_player: BTreeMap<&str, Vec<GameRecord>> = BTreeMap::new();
    for r in records {
        by_player.entry(r.player_id.as_str()).or_default().push(r.clone());
    }
    keys.into_iter()
        .map(|(p, s)| aggregate_season(&by_player[p], p, s))
        .collect()
}

/// Differential statistics for one player-season.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Differentials {
    /// Percentage points.
    pub stuff_pct_diff: f64,
    pub yds_per_attempt_diff: f64,
    pub yac_per_attempt_diff: f64,
    pub ybc_per_attempt_diff: f64,
    /// Percentage points.
    pub successful_run_pct_diff: f64,
    pub rush_td_per_attempt_diff: f64,
    pub pressure_allowed_diff: f64,
    pub pressure_pct: f64,
    pub sack_pct: f64,
    pub att_per_dropback: f64,
}

/// Conditions under which a rate was substituted rather than computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialFlags {
    pub no_rushes_to_side: bool,
    pub no_rushes_not_to_side: bool,
    pub no_dropbacks: bool,
    /// Pressures to side with none elsewhere: denominator floored at 0.5.
    pub pressure_floor: bool,
    /// Sacks to side with none elsewhere: denominator floored at 0.5.
    pub sack_floor: bool,
}

impl DifferentialFlags {
    pub fn any(&self) -> bool {
        self.no_rushes_to_side
            || self.no_rushes_not_to_side
            || self.no_dropbacks
            || self.pressure_floor
            || self.sack_floor
    }
}

fn rate(numerator: f64, attempts: u32) -> f64 {
    if attempts == 0 {
        0.0
    } else {
        numerator / f64::from(attempts)
    }
}

/// Ratio of to-side to not-to-side counts with a half-count floor on an
/// empty denominator.
fn side_ratio(to_side: u32, not_to_side: u32) -> (f64, bool) {
    match (to_side, not_to_side) {
        (_, n) if n > 0 => (f64::from(to_side) / f64::from(n), false),
        (0, _) => (0.0, false),
        (t, _) => (f64::from(t) / 0.5, true),
    }
}

pub fn compute_differentials(totals: &SeasonTotals) -> (Differentials, DifferentialFlags) {
    let ts = &totals.rush.to_side;
    let nts = &totals.rush.not_to_side;
    let diff = |f: fn(&RushStats) -> f64| rate(f(ts), ts.attempts) - rate(f(nts), nts.attempts);
    let dropbacks = totals.pass.dropbacks;
    let pts = &totals.protection.to_side;
    let pnts = &totals.protection.not_to_side;
    let (pressure_pct, pressure_floor) = side_ratio(pts.pressures, pnts.pressures);
    let (sack_pct, sack_floor) = side_ratio(pts.sacks, pnts.sacks);
    let values = Differentials {
        stuff_pct_diff: 100.0 * diff(|r| f64::from(r.stuffs)),
        yds_per_attempt_diff: diff(|r| r.yards as f64),
        yac_per_attempt_diff: diff(|r| r.yards_after_contact as f64),
        ybc_per_attempt_diff: diff(|r| (r.yards - r.yards_after_contact) as f64),
        successful_run_pct_diff: 100.0 * diff(|r| f64::from(r.successful)),
        rush_td_per_attempt_diff: diff(|r| f64::from(r.touchdowns)),
        pressure_allowed_diff: rate(f64::from(pts.pressures), dropbacks)
            - rate(f64::from(pnts.pressures), dropbacks),
        pressure_pct,
        sack_pct,
        att_per_dropback: rate(f64::from(totals.pass.attempts), dropbacks),
    };
    let flags = DifferentialFlags {
        no_rushes_to_side: ts.attempts == 0,
        no_rushes_not_to_side: nts.attempts == 0,
        no_dropbacks: dropbacks == 0,
        pressure_floor,
        sack_floor,
    };
    (values, flags)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::games::tests::sample_game;

    #[test]
    fn season_window() {
        let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        assert_eq!(season_of(d("2013-09-08")).unwrap(), 2013);
        assert_eq!(season_of(d("2014-01-12")).unwrap(), 2013);
        assert_eq!(season_of(d("2014-02-02")).unwrap(), 2013);
        assert_eq!(season_of(d("2014-08-10")).unwrap(), 2014);
        assert!(season_of(d("2014-05-01")).is_err());
    }

    #[test]
    fn sums_two_games() {
        let mut a = sample_game("g1", "2013-09-08", "p1");
        let mut b = sample_game("g2", "2013-09-15", "p1");
        a.rush.to_side.attempts = 10;
        b.rush.to_side.attempts = 12;
        let t = aggregate_season(&[a, b], "p1", 2013).unwrap();
        assert_eq!(t.rush.to_side.attempts, 22);
        assert_eq!(t.games, 2);
    }

    #[test]
    fn single_game_identity() {
        let g = sample_game("g1", "2013-09-08", "p1");
        let t = aggregate_season(std::slice::from_ref(&g), "p1", 2013).unwrap();
        assert_eq!(t.rush, g.rush);
        assert_eq!(t.pass, g.pass);
        assert_eq!(t.protection, g.protection);
        assert_eq!(t.snaps, g.snaps);
        assert_eq!(t.release_time, g.release.time);
    }

    #[test]
    fn release_time_is_attempt_weighted() {
        let mut a = sample_game("g1", "2013-09-08", "p1");
        let mut b = sample_game("g2", "2013-09-15", "p1");
        a.release.time = 2.3;
        a.release.attempts = 20;
        b.release.time = 2.5;
        b.release.attempts = 30;
        let t = aggregate_season(&[a, b], "p1", 2013).unwrap();
        assert!((t.release_time - 2.42).abs() < 1e-12);
    }

    #[test]
    fn empty_selection_is_error() {
        let g = sample_game("g1", "2013-09-08", "p1");
        assert!(matches!(
            aggregate_season(&[g], "p1", 2014),
            Err(Error::EmptyRecords { .. })
        ));
    }

    fn totals_with(f: impl FnOnce(&mut SeasonTotals)) -> SeasonTotals {
        let mut t = aggregate_season(&[sample_game("g1", "2013-09-08", "p1")], "p1", 2013).unwrap();
        f(&mut t);
        t
    }

    #[test]
    fn equal_stuff_rates_give_zero() {
        let t = totals_with(|t| {
            t.rush.to_side.attempts = 100;
            t.rush.to_side.stuffs = 10;
            t.rush.not_to_side.attempts = 100;
            t.rush.not_to_side.stuffs = 10;
        });
        assert_eq!(compute_differentials(&t).0.stuff_pct_diff, 0.0);
    }

    #[test]
    fn yards_per_attempt_difference() {
        let t = totals_with(|t| {
            t.rush.to_side.attempts = 100;
            t.rush.to_side.yards = 450;
            t.rush.not_to_side.attempts = 100;
            t.rush.not_to_side.yards = 400;
        });
        assert!((compute_differentials(&t).0.yds_per_attempt_diff - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pressure_ratio() {
        let t = totals_with(|t| {
            t.protection.to_side.pressures = 4;
            t.protection.not_to_side.pressures = 8;
        });
        assert_eq!(compute_differentials(&t).0.pressure_pct, 0.5);
    }

    #[test]
    fn zero_denominator_handling() {
        let t = totals_with(|t| {
            t.protection.to_side.pressures = 0;
            t.protection.not_to_side.pressures = 0;
            t.protection.to_side.sacks = 2;
            t.protection.not_to_side.sacks = 0;
            t.rush.not_to_side = RushStats::default();
        });
        let (d, flags) = compute_differentials(&t);
        assert_eq!(d.pressure_pct, 0.0);
        assert!(!flags.pressure_floor);
        assert_eq!(d.sack_pct, 4.0);
        assert!(flags.sack_floor);
        assert!(flags.no_rushes_not_to_side);
        assert!(d.stuff_pct_diff.is_finite());
    }

    fn arb_rush() -> impl Strategy<Value = RushStats> {
        (0u32..60, 0u32..60, -20i64..300, 0i64..200, 0u32..5, 0u32..60).prop_map(|(a, s, y, yac, td, succ)| RushStats {
            attempts: a,
            stuffs: s.min(a),
            yards: y,
            yards_after_contact: yac,
            touchdowns: td.min(a),
            successful: succ.min(a),
        })
    }

    proptest! {
        #[test]
        fn identical_sides_have_zero_differentials(rush in arb_rush(), p in 1u32..40, s in 0u32..10) {
            let t = totals_with(|t| {
                t.rush = Sided { to_side: rush, not_to_side: rush };
                t.protection.to_side.pressures = p;
                t.protection.not_to_side.pressures = p;
                t.protection.to_side.sacks = s;
                t.protection.not_to_side.sacks = s;
            });
            let (d, _) = compute_differentials(&t);
            prop_assert_eq!(d.stuff_pct_diff, 0.0);
            prop_assert_eq!(d.yds_per_attempt_diff, 0.0);
            prop_assert_eq!(d.yac_per_attempt_diff, 0.0);
            prop_assert_eq!(d.ybc_per_attempt_diff, 0.0);
            prop_assert_eq!(d.successful_run_pct_diff, 0.0);
            prop_assert_eq!(d.rush_td_per_attempt_diff, 0.0);
            prop_assert_eq!(d.pressure_allowed_diff, 0.0);
            prop_assert_eq!(d.pressure_pct, 1.0);
            prop_assert!(d.sack_pct == 1.0 || s == 0);
        }

        #[test]
        fn aggregation_is_order_invariant(
            atts in proptest::collection::vec((0u32..30, 1.5f64..3.5, 0u32..40), 1..8),
            seed in any::<u64>(),
        ) {
            let games: Vec<GameRecord> = atts.iter().enumerate().map(|(i, &(a, rt, ra))| {
                let mut g = sample_game(&format!("g{i}"), &format!("2013-10-{:02}", i + 1), "p1");
                g.rush.to_side.attempts = a;
                g.rush.to_side.stuffs = a / 3;
                g.rush.to_side.successful = a / 2;
                g.release.time = rt;
                g.release.attempts = ra;
                g
            }).collect();
            let mut shuffled = games.clone();
            let n = shuffled.len();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (state >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(
                aggregate_season(&games, "p1", 2013).unwrap(),
                aggregate_season(&shuffled, "p1", 2013).unwrap()
            );
        }
    }
}
