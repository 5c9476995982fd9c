//! Game-level ingestion and player-season feature derivation.
//!
//! Each game row carries rushing and pass-protection statistics split into
//! plays run toward the lineman's own part of the line ("to side") and plays
//! run elsewhere ("not to side"). Season aggregates of the two halves are
//! turned into differential statistics that control for the rest of the line.

mod cap;
mod exclusions;
mod external;
mod features;
mod games;
mod season;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cap::{adjust_cap_inflation, CapTable};
pub use exclusions::{apply_exclusions, ExclusionRules, RegressionObservation, Samples};
pub use external::{
    build_feature_vectors, read_awards, read_contracts, read_pff, write_awards, write_contracts,
    write_pff, AwardRow, ContractRow, ExternalData, MergeReport, PffRow, FIRST_PFF_SEASON,
    UNDRAFTED_PICK, UNDRAFTED_ROUND,
};
pub use features::{
    Awards, Category, ContractInfo, Demographics, FeatureSource, PffHistory, Predictor, Salary,
    SeasonFeatureVector, DEFAULT_CANDIDATES,
};
pub use games::{read_game_records, write_game_records, GAME_COLUMNS};
pub use season::{
    aggregate_all, aggregate_season, compute_differentials, season_of, DifferentialFlags,
    Differentials, SeasonTotals,
};

/// Offensive line position, left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Position {
    LT,
    LG,
    C,
    RG,
    RT,
}

impl Position {
    pub const ALL: [Position; 5] = [Position::LT, Position::LG, Position::C, Position::RG, Position::RT];

    pub fn as_str(self) -> &'static str {
        match self {
            Position::LT => "LT",
            Position::LG => "LG",
            Position::C => "C",
            Position::RG => "RG",
            Position::RT => "RT",
        }
    }

    /// Adjacent positions along the line.
    pub fn neighbors(self) -> &'static [Position] {
        match self {
            Position::LT => &[Position::LG],
            Position::LG => &[Position::LT, Position::C],
            Position::C => &[Position::LG, Position::RG],
            Position::RG => &[Position::C, Position::RT],
            Position::RT => &[Position::RG],
        }
    }

    /// Grouping used for rank comparisons: guards and tackles are pooled
    /// across sides.
    pub fn group(self) -> PositionGroup {
        match self {
            Position::C => PositionGroup::C,
            Position::LG | Position::RG => PositionGroup::G,
            Position::LT | Position::RT => PositionGroup::T,
        }
    }

    pub fn mirror(self) -> Position {
        match self {
            Position::LT => Position::RT,
            Position::LG => Position::RG,
            Position::C => Position::C,
            Position::RG => Position::LG,
            Position::RT => Position::LT,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Position {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LT" => Ok(Position::LT),
            "LG" => Ok(Position::LG),
            "C" => Ok(Position::C),
            "RG" => Ok(Position::RG),
            "RT" => Ok(Position::RT),
            other => Err(format!("`{other}` is not an offensive line position (LT, LG, C, RG, RT)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PositionGroup {
    C,
    G,
    T,
}

impl fmt::Display for PositionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PositionGroup::C => "C",
            PositionGroup::G => "G",
            PositionGroup::T => "T",
        })
    }
}

/// Horizontal split of the line where a play was directed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    LS,
    L,
    M,
    R,
    RS,
}

impl Split {
    pub const ALL: [Split; 5] = [Split::LS, Split::L, Split::M, Split::R, Split::RS];

    pub fn mirror(self) -> Split {
        match self {
            Split::LS => Split::RS,
            Split::L => Split::R,
            Split::M => Split::M,
            Split::R => Split::L,
            Split::RS => Split::LS,
        }
    }
}

/// Splits credited as "to side" for a position.
pub fn to_side_splits(position: Position) -> &'static [Split] {
    match position {
        Position::LT => &[Split::LS, Split::L],
        Position::LG => &[Split::LS, Split::L, Split::M],
        Position::C => &[Split::L, Split::M, Split::R],
        Position::RG => &[Split::M, Split::R, Split::RS],
        Position::RT => &[Split::R, Split::RS],
    }
}

/// A pair of values for plays to the lineman's side and everywhere else.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Sided<T> {
    pub to_side: T,
    pub not_to_side: T,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RushStats {
    pub attempts: u32,
    pub stuffs: u32,
    pub yards: i64,
    pub yards_after_contact: i64,
    pub touchdowns: u32,
    pub successful: u32,
}

impl RushStats {
    fn add(&mut self, other: &RushStats) {
        self.attempts += other.attempts;
        self.stuffs += other.stuffs;
        self.yards += other.yards;
        self.yards_after_contact += other.yards_after_contact;
        self.touchdowns += other.touchdowns;
        self.successful += other.successful;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassStats {
    pub passing_yards: i64,
    pub dropbacks: u32,
    pub attempts: u32,
    pub completions: u32,
}

impl PassStats {
    fn add(&mut self, other: &PassStats) {
        self.passing_yards += other.passing_yards;
        self.dropbacks += other.dropbacks;
        self.attempts += other.attempts;
        self.completions += other.completions;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PressureStats {
    pub sacks: u32,
    pub sack_yards: i64,
    pub pressures: u32,
    pub hurries: u32,
    pub knockdowns: u32,
}

impl PressureStats {
    fn add(&mut self, other: &PressureStats) {
        self.sacks += other.sacks;
        self.sack_yards += other.sack_yards;
        self.pressures += other.pressures;
        self.hurries += other.hurries;
        self.knockdowns += other.knockdowns;
    }
}

/// Quarterback release timing while the lineman was on the field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReleaseStats {
    pub time: f64,
    pub attempts: u32,
    pub time_under_pressure: f64,
    pub attempts_under_pressure: u32,
}

/// One player-game observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub date: chrono::NaiveDate,
    pub playoff: bool,
    pub player_id: String,
    pub team: String,
    pub opponent: String,
    pub position: Position,
    pub rookie_year: i32,
    /// 0 when undrafted.
    pub draft_round: u32,
    /// 0 when undrafted.
    pub draft_pick: u32,
    pub birthday: chrono::NaiveDate,
    pub base_salary: f64,
    pub signing_bonus: f64,
    pub incentives: f64,
    pub cap_value: f64,
    pub snaps: u32,
    pub holding_penalties_rush: u32,
    pub holding_penalties_pass: u32,
    pub rush: Sided<RushStats>,
    pub pass: PassStats,
    pub protection: Sided<PressureStats>,
    pub release: ReleaseStats,
}

impl GameRecord {
    /// Checks the count relationships every row must satisfy.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (side, r) in [("to side", &self.rush.to_side), ("not to side", &self.rush.not_to_side)] {
            if r.stuffs > r.attempts {
                return Err(format!(
                    "stuffs {side} ({}) exceed rush attempts {side} ({})",
                    r.stuffs, r.attempts
                ));
            }
            if r.successful > r.attempts {
                return Err(format!(
                    "successful rushes {side} ({}) exceed rush attempts {side} ({})",
                    r.successful, r.attempts
                ));
            }
        }
        let p = &self.pass;
        if p.completions > p.attempts || p.attempts > p.dropbacks {
            return Err(format!(
                "pass counts must satisfy completions ({}) <= attempts ({}) <= dropbacks ({})",
                p.completions, p.attempts, p.dropbacks
            ));
        }
        if !(self.release.time >= 0.0 && self.release.time_under_pressure >= 0.0) {
            return Err("release times must be non-negative".into());
        }
        for (name, v) in [
            ("base_salary", self.base_salary),
            ("signing_bonus", self.signing_bonus),
            ("incentives", self.incentives),
            ("cap_value", self.cap_value),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be a non-negative amount"));
            }
        }
        Ok(())
    }
}
