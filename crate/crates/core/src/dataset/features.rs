use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::season::{DifferentialFlags, Differentials};
use super::Position;

/// Experience or performance side of the metric split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Experience,
    Performance,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Experience => "E",
            Category::Performance => "P",
        })
    }
}

/// Player-season attributes that can enter the salary model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predictor {
    Age,
    Experience,
    DraftRound,
    DraftPick,
    ProBowls,
    AllPro1st,
    AllPro2nd,
    PfwAllPro,
    PffPriorAvg,
    PffCurrent,
    StuffPctDiff,
    YdsPerAttemptDiff,
    YacPerAttemptDiff,
    YbcPerAttemptDiff,
    SuccessfulRunPctDiff,
    RushTdPerAttemptDiff,
    PressureAllowedDiff,
    PressurePct,
    SackPct,
    AttPerDropback,
}

/// Default stepwise candidate pool: demographics, honors, prior PFF grade,
/// five rushing/pass-protection differentials, attempts per dropback and the
/// current-season PFF grade.
pub const DEFAULT_CANDIDATES: [Predictor; 16] = [
    Predictor::Age,
    Predictor::Experience,
    Predictor::DraftRound,
    Predictor::DraftPick,
    Predictor::ProBowls,
    Predictor::AllPro1st,
    Predictor::AllPro2nd,
    Predictor::PfwAllPro,
    Predictor::PffPriorAvg,
    Predictor::StuffPctDiff,
    Predictor::YdsPerAttemptDiff,
    Predictor::SuccessfulRunPctDiff,
    Predictor::PressurePct,
    Predictor::SackPct,
    Predictor::AttPerDropback,
    Predictor::PffCurrent,
];

impl Predictor {
    pub const ALL: [Predictor; 20] = [
        Predictor::Age,
        Predictor::Experience,
        Predictor::DraftRound,
        Predictor::DraftPick,
        Predictor::ProBowls,
        Predictor::AllPro1st,
        Predictor::AllPro2nd,
        Predictor::PfwAllPro,
        Predictor::PffPriorAvg,
        Predictor::PffCurrent,
        Predictor::StuffPctDiff,
        Predictor::YdsPerAttemptDiff,
        Predictor::YacPerAttemptDiff,
        Predictor::YbcPerAttemptDiff,
        Predictor::SuccessfulRunPctDiff,
        Predictor::RushTdPerAttemptDiff,
        Predictor::PressureAllowedDiff,
        Predictor::PressurePct,
        Predictor::SackPct,
        Predictor::AttPerDropback,
    ];

    /// Column name used in data files and model exports.
    pub fn key(self) -> &'static str {
        match self {
            Predictor::Age => "age",
            Predictor::Experience => "experience",
            Predictor::DraftRound => "draft_round",
            Predictor::DraftPick => "draft_pick",
            Predictor::ProBowls => "pro_bowls",
            Predictor::AllPro1st => "ap_all_pro_1st",
            Predictor::AllPro2nd => "ap_all_pro_2nd",
            Predictor::PfwAllPro => "pfw_all_pro",
            Predictor::PffPriorAvg => "pff_prior_avg",
            Predictor::PffCurrent => "pff_current",
            Predictor::StuffPctDiff => "stuff_pct_diff",
            Predictor::YdsPerAttemptDiff => "yds_per_attempt_diff",
            Predictor::YacPerAttemptDiff => "yac_per_attempt_diff",
            Predictor::YbcPerAttemptDiff => "ybc_per_attempt_diff",
            Predictor::SuccessfulRunPctDiff => "successful_run_pct_diff",
            Predictor::RushTdPerAttemptDiff => "rush_td_per_attempt_diff",
            Predictor::PressureAllowedDiff => "pressure_allowed_diff",
            Predictor::PressurePct => "pressure_pct",
            Predictor::SackPct => "sack_pct",
            Predictor::AttPerDropback => "att_per_dropback",
        }
    }

    /// Human-readable label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Predictor::Age => "Age",
            Predictor::Experience => "Experience",
            Predictor::DraftRound => "Draft Round",
            Predictor::DraftPick => "Draft Pick",
            Predictor::ProBowls => "Pro Bowl Selections",
            Predictor::AllPro1st => "1st Team All Pro",
            Predictor::AllPro2nd => "2nd Team All Pro",
            Predictor::PfwAllPro => "PFW All Pro",
            Predictor::PffPriorAvg => "Avg. PFF Rating Prior to Contract",
            Predictor::PffCurrent => "PFF Rating Current Season",
            Predictor::StuffPctDiff => "Stuff % Differential",
            Predictor::YdsPerAttemptDiff => "Yds per Attempt Differential",
            Predictor::YacPerAttemptDiff => "YAC per Attempt Differential",
            Predictor::YbcPerAttemptDiff => "YBC per Attempt Differential",
            Predictor::SuccessfulRunPctDiff => "Successful Run % Differential",
            Predictor::RushTdPerAttemptDiff => "Rush TDs per Attempt Differential",
            Predictor::PressureAllowedDiff => "Pressure Allowed Differential",
            Predictor::PressurePct => "Pressure %",
            Predictor::SackPct => "Sack %",
            Predictor::AttPerDropback => "Att per Dropback",
        }
    }

    pub fn category(self) -> Category {
        use Predictor::*;
        match self {
            Age | Experience | DraftRound | DraftPick | ProBowls | AllPro1st | AllPro2nd | PfwAllPro
            | PffPriorAvg => Category::Experience,
            PffCurrent | StuffPctDiff | YdsPerAttemptDiff | YacPerAttemptDiff | YbcPerAttemptDiff
            | SuccessfulRunPctDiff | RushTdPerAttemptDiff | PressureAllowedDiff | PressurePct | SackPct
            | AttPerDropback => Category::Performance,
        }
    }

    /// Resolves a column key or report label, ignoring case.
    pub fn from_name(name: &str) -> Option<Predictor> {
        let wanted = name.trim();
        Predictor::ALL.into_iter().find(|p| {
            p.key().eq_ignore_ascii_case(wanted) || p.label().eq_ignore_ascii_case(wanted)
        })
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    /// Years at the September 1 season start.
    pub age: f64,
    /// Seasons since the rookie year.
    pub experience: f64,
    pub draft_round: f64,
    pub draft_pick: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Awards {
    pub pro_bowls: f64,
    pub ap_all_pro_1st: f64,
    pub ap_all_pro_2nd: f64,
    pub pfw_all_pro: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PffHistory {
    pub avg_rating_prior_to_contract: f64,
    pub rating_current_season: f64,
    /// No rating before the signing year; the average was imputed as 0.
    pub prior_missing: bool,
    pub current_missing: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Salary {
    pub cap_value_nominal: f64,
    pub cap_value_adjusted: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractInfo {
    pub signing_year: i32,
    pub rookie_contract: bool,
    pub unrestricted_fa_at_signing: bool,
}

/// Player-season aggregate fed to pricing and clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonFeatureVector {
    pub player_id: String,
    pub season_year: i32,
    pub team: String,
    pub position: Position,
    pub snaps: u32,
    pub demographics: Demographics,
    pub awards: Awards,
    pub pff: PffHistory,
    pub differentials: Differentials,
    pub differential_flags: DifferentialFlags,
    pub salary: Salary,
    pub contract: ContractInfo,
}

impl SeasonFeatureVector {
    pub fn value(&self, predictor: Predictor) -> f64 {
        let d = &self.differentials;
        match predictor {
            Predictor::Age => self.demographics.age,
            Predictor::Experience => self.demographics.experience,
            Predictor::DraftRound => self.demographics.draft_round,
            Predictor::DraftPick => self.demographics.draft_pick,
            Predictor::ProBowls => self.awards.pro_bowls,
            Predictor::AllPro1st => self.awards.ap_all_pro_1st,
            Predictor::AllPro2nd => self.awards.ap_all_pro_2nd,
            Predictor::PfwAllPro => self.awards.pfw_all_pro,
            Predictor::PffPriorAvg => self.pff.avg_rating_prior_to_contract,
            Predictor::PffCurrent => self.pff.rating_current_season,
            Predictor::StuffPctDiff => d.stuff_pct_diff,
            Predictor::YdsPerAttemptDiff => d.yds_per_attempt_diff,
            Predictor::YacPerAttemptDiff => d.yac_per_attempt_diff,
            Predictor::YbcPerAttemptDiff => d.ybc_per_attempt_diff,
            Predictor::SuccessfulRunPctDiff => d.successful_run_pct_diff,
            Predictor::RushTdPerAttemptDiff => d.rush_td_per_attempt_diff,
            Predictor::PressureAllowedDiff => d.pressure_allowed_diff,
            Predictor::PressurePct => d.pressure_pct,
            Predictor::SackPct => d.sack_pct,
            Predictor::AttPerDropback => d.att_per_dropback,
        }
    }

    fn value_mut(&mut self, predictor: Predictor) -> &mut f64 {
        let d = &mut self.differentials;
        match predictor {
            Predictor::Age => &mut self.demographics.age,
            Predictor::Experience => &mut self.demographics.experience,
            Predictor::DraftRound => &mut self.demographics.draft_round,
            Predictor::DraftPick => &mut self.demographics.draft_pick,
            Predictor::ProBowls => &mut self.awards.pro_bowls,
            Predictor::AllPro1st => &mut self.awards.ap_all_pro_1st,
            Predictor::AllPro2nd => &mut self.awards.ap_all_pro_2nd,
            Predictor::PfwAllPro => &mut self.awards.pfw_all_pro,
            Predictor::PffPriorAvg => &mut self.pff.avg_rating_prior_to_contract,
            Predictor::PffCurrent => &mut self.pff.rating_current_season,
            Predictor::StuffPctDiff => &mut d.stuff_pct_diff,
            Predictor::YdsPerAttemptDiff => &mut d.yds_per_attempt_diff,
            Predictor::YacPerAttemptDiff => &mut d.yac_per_attempt_diff,
            Predictor::YbcPerAttemptDiff => &mut d.ybc_per_attempt_diff,
            Predictor::SuccessfulRunPctDiff => &mut d.successful_run_pct_diff,
            Predictor::RushTdPerAttemptDiff => &mut d.rush_td_per_attempt_diff,
            Predictor::PressureAllowedDiff => &mut d.pressure_allowed_diff,
            Predictor::PressurePct => &mut d.pressure_pct,
            Predictor::SackPct => &mut d.sack_pct,
            Predictor::AttPerDropback => &mut d.att_per_dropback,
        }
    }

    /// Element-wise mean of every numeric feature; identifiers and flags come
    /// from the first vector.
    pub fn average(vectors: &[&SeasonFeatureVector]) -> SeasonFeatureVector {
        assert!(!vectors.is_empty(), "cannot average zero feature vectors");
        let n = vectors.len() as f64;
        let mut out = vectors[0].clone();
        for p in Predictor::ALL {
            *out.value_mut(p) = vectors.iter().map(|v| v.value(p)).sum::<f64>() / n;
        }
        out.salary.cap_value_nominal = vectors.iter().map(|v| v.salary.cap_value_nominal).sum::<f64>() / n;
        out.salary.cap_value_adjusted = vectors.iter().map(|v| v.salary.cap_value_adjusted).sum::<f64>() / n;
        out.snaps = (vectors.iter().map(|v| f64::from(v.snaps)).sum::<f64>() / n).round() as u32;
        out
    }
}

/// Anything that can supply predictor values by name.
pub trait FeatureSource {
    fn feature(&self, name: &str) -> Option<f64>;
}

impl FeatureSource for SeasonFeatureVector {
    fn feature(&self, name: &str) -> Option<f64> {
        Predictor::from_name(name).map(|p| self.value(p))
    }
}

impl FeatureSource for BTreeMap<String, f64> {
    fn feature(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl FeatureSource for std::collections::HashMap<String, f64> {
    fn feature(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}
