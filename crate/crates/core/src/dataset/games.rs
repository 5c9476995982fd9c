use std::collections::HashMap;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;

use super::{GameRecord, PassStats, PressureStats, ReleaseStats, RushStats, Sided};
use crate::error::{Error, Result};

/// Header of `games.csv`, in the order files are written.
///
/// Columns ending in `_ts` count plays to the lineman's side, `_nts` plays
/// to any other split. Dates are ISO `YYYY-MM-DD`; `playoff` is 0/1.
pub const GAME_COLUMNS: [&str; 48] = [
    "game_id",
    "date",
    "playoff",
    "player_id",
    "team",
    "opponent",
    "position",
    "rookie_year",
    "draft_round",
    "draft_pick",
    "birthday",
    "base_salary",
    "signing_bonus",
    "incentives",
    "cap_value",
    "snaps",
    "holding_rush",
    "holding_pass",
    "rush_att_ts",
    "rush_att_nts",
    "stuffs_ts",
    "stuffs_nts",
    "rush_yds_ts",
    "rush_yds_nts",
    "yac_ts",
    "yac_nts",
    "rush_td_ts",
    "rush_td_nts",
    "succ_rush_ts",
    "succ_rush_nts",
    "pass_yds",
    "dropbacks",
    "pass_att",
    "pass_cmp",
    "sacks_ts",
    "sacks_nts",
    "sack_yds_ts",
    "sack_yds_nts",
    "pressures_ts",
    "pressures_nts",
    "hurries_ts",
    "hurries_nts",
    "knockdowns_ts",
    "knockdowns_nts",
    "qb_release_time",
    "release_att",
    "release_time_pressure",
    "release_att_pressure",
];

/// Field accessor over one CSV row that reports the row and column on failure.
pub(crate) struct RowReader<'a> {
    pub file: &'a str,
    pub line: u64,
    pub index: &'a HashMap<String, usize>,
    pub record: &'a csv::StringRecord,
}

impl RowReader<'_> {
    pub fn raw(&self, column: &str) -> &str {
        // Presence of every column is checked against the header up front.
        self.record.get(self.index[column]).unwrap_or("").trim()
    }

    pub fn error(&self, column: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            file: self.file.to_string(),
            line: self.line,
            column: column.to_string(),
            message: message.into(),
        }
    }

    pub fn parse<T: FromStr>(&self, column: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(column);
        raw.parse::<T>()
            .map_err(|e| self.error(column, format!("cannot parse `{raw}`: {e}")))
    }

    pub fn text(&self, column: &str) -> Result<String> {
        let raw = self.raw(column);
        if raw.is_empty() {
            return Err(self.error(column, "empty value"));
        }
        Ok(raw.to_string())
    }

    pub fn flag(&self, column: &str) -> Result<bool> {
        match self.raw(column) {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.error(column, format!("expected 0 or 1, found `{other}`"))),
        }
    }

    pub fn date(&self, column: &str) -> Result<NaiveDate> {
        let raw = self.raw(column);
        NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map_err(|e| self.error(column, format!("cannot parse date `{raw}`: {e}")))
    }

    pub fn amount(&self, column: &str) -> Result<f64> {
        let v: f64 = self.parse(column)?;
        if !v.is_finite() {
            return Err(self.error(column, "value must be finite"));
        }
        Ok(v)
    }
}

/// Reads a headed CSV, checks required columns and hands each row to `f`.
pub(crate) fn read_table<R: Read, T>(
    reader: R,
    file: &str,
    required: &[&str],
    mut f: impl FnMut(&RowReader<'_>) -> Result<T>,
) -> Result<Vec<T>> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let index: HashMap<String, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_string(), i))
        .collect();
    for column in required {
        if !index.contains_key(*column) {
            return Err(Error::MissingColumn {
                file: file.to_string(),
                column: column.to_string(),
            });
        }
    }
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    while csv.read_record(&mut record)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = RowReader {
            file,
            line,
            index: &index,
            record: &record,
        };
        out.push(f(&row)?);
    }
    Ok(out)
}

fn parse_game(row: &RowReader<'_>) -> Result<GameRecord> {
    let rush = |suffix: &str| -> Result<RushStats> {
        Ok(RushStats {
            attempts: row.parse(&format!("rush_att_{suffix}"))?,
            stuffs: row.parse(&format!("stuffs_{suffix}"))?,
            yards: row.parse(&format!("rush_yds_{suffix}"))?,
            yards_after_contact: row.parse(&format!("yac_{suffix}"))?,
            touchdowns: row.parse(&format!("rush_td_{suffix}"))?,
            successful: row.parse(&format!("succ_rush_{suffix}"))?,
        })
    };
    let protection = |suffix: &str| -> Result<PressureStats> {
        Ok(PressureStats {
            sacks: row.parse(&format!("sacks_{suffix}"))?,
            sack_yards: row.parse(&format!("sack_yds_{suffix}"))?,
            pressures: row.parse(&format!("pressures_{suffix}"))?,
            hurries: row.parse(&format!("hurries_{suffix}"))?,
            knockdowns: row.parse(&format!("knockdowns_{suffix}"))?,
        })
    };
    let position = row
        .raw("position")
        .parse()
        .map_err(|e: String| row.error("position", e))?;
    let record = GameRecord {
        game_id: row.text("game_id")?,
        date: row.date("date")?,
        playoff: row.flag("playoff")?,
        player_id: row.text("player_id")?,
        team: row.text("team")?,
        opponent: row.text("opponent")?,
        position,
        rookie_year: row.parse("rookie_year")?,
        draft_round: row.parse("draft_round")?,
        draft_pick: row.parse("draft_pick")?,
        birthday: row.date("birthday")?,
        base_salary: row.amount("base_salary")?,
        signing_bonus: row.amount("signing_bonus")?,
        incentives: row.amount("incentives")?,
        cap_value: row.amount("cap_value")?,
        snaps: row.parse("snaps")?,
        holding_penalties_rush: row.parse("holding_rush")?,
        holding_penalties_pass: row.parse("holding_pass")?,
        rush: Sided {
            to_side: rush("ts")?,
            not_to_side: rush("nts")?,
        },
        pass: PassStats {
            passing_yards: row.parse("pass_yds")?,
            dropbacks: row.parse("dropbacks")?,
            attempts: row.parse("pass_att")?,
            completions: row.parse("pass_cmp")?,
        },
        protection: Sided {
            to_side: protection("ts")?,
            not_to_side: protection("nts")?,
        },
        release: ReleaseStats {
            time: row.amount("qb_release_time")?,
            attempts: row.parse("release_att")?,
            time_under_pressure: row.amount("release_time_pressure")?,
            attempts_under_pressure: row.parse("release_att_pressure")?,
        },
    };
    record.check_invariants().map_err(|message| Error::RecordInvariant {
        file: row.file.to_string(),
        line: row.line,
        message,
    })?;
    Ok(record)
}

/// Parses `games.csv` content. `file` names the source in error messages.
pub fn read_game_records<R: Read>(reader: R, file: &str) -> Result<Vec<GameRecord>> {
    read_table(reader, file, &GAME_COLUMNS, parse_game)
}

pub fn write_game_records<W: Write>(writer: W, records: &[GameRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(GAME_COLUMNS)?;
    for g in records {
        let (ts, nts) = (&g.rush.to_side, &g.rush.not_to_side);
        let (pts, pnts) = (&g.protection.to_side, &g.protection.not_to_side);
        let row: Vec<String> = vec![
            g.game_id.clone(),
            g.date.format("%Y-%m-%d").to_string(),
            u8::from(g.playoff).to_string(),
            g.player_id.clone(),
            g.team.clone(),
            g.opponent.clone(),
            g.position.to_string(),
            g.rookie_year.to_string(),
            g.draft_round.to_string(),
            g.draft_pick.to_string(),
            g.birthday.format("%Y-%m-%d").to_string(),
            g.base_salary.to_string(),
            g.signing_bonus.to_string(),
            g.incentives.to_string(),
            g.cap_value.to_string(),
            g.snaps.to_string(),
            g.holding_penalties_rush.to_string(),
            g.holding_penalties_pass.to_string(),
            ts.attempts.to_string(),
            nts.attempts.to_string(),
            ts.stuffs.to_string(),
            nts.stuffs.to_string(),
            ts.yards.to_string(),
            nts.yards.to_string(),
            ts.yards_after_contact.to_string(),
            nts.yards_after_contact.to_string(),
            ts.touchdowns.to_string(),
            nts.touchdowns.to_string(),
            ts.successful.to_string(),
            nts.successful.to_string(),
            g.pass.passing_yards.to_string(),
            g.pass.dropbacks.to_string(),
            g.pass.attempts.to_string(),
            g.pass.completions.to_string(),
            pts.sacks.to_string(),
            pnts.sacks.to_string(),
            pts.sack_yards.to_string(),
            pnts.sack_yards.to_string(),
            pts.pressures.to_string(),
            pnts.pressures.to_string(),
            pts.hurries.to_string(),
            pnts.hurries.to_string(),
            pts.knockdowns.to_string(),
            pnts.knockdowns.to_string(),
            g.release.time.to_string(),
            g.release.attempts.to_string(),
            g.release.time_under_pressure.to_string(),
            g.release.attempts_under_pressure.to_string(),
        ];
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| Error::io("games.csv", e))?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dataset::Position;

    pub(crate) fn sample_game(game_id: &str, date: &str, player_id: &str) -> GameRecord {
        GameRecord {
            game_id: game_id.into(),
            date: NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap(),
            playoff: false,
            player_id: player_id.into(),
            team: "NYG".into(),
            opponent: "DAL".into(),
            position: Position::LG,
            rookie_year: 2008,
            draft_round: 2,
            draft_pick: 45,
            birthday: NaiveDate::from_ymd_opt(1985, 3, 14).unwrap(),
            base_salary: 1_000_000.0,
            signing_bonus: 250_000.0,
            incentives: 0.0,
            cap_value: 1_500_000.0,
            snaps: 64,
            holding_penalties_rush: 0,
            holding_penalties_pass: 1,
            rush: Sided {
                to_side: RushStats {
                    attempts: 10,
                    stuffs: 2,
                    yards: 45,
                    yards_after_contact: 20,
                    touchdowns: 1,
                    successful: 5,
                },
                not_to_side: RushStats {
                    attempts: 14,
                    stuffs: 3,
                    yards: 50,
                    yards_after_contact: 22,
                    touchdowns: 0,
                    successful: 6,
                },
            },
            pass: PassStats {
                passing_yards: 240,
                dropbacks: 38,
                attempts: 34,
                completions: 22,
            },
            protection: Sided {
                to_side: PressureStats {
                    sacks: 1,
                    sack_yards: 7,
                    pressures: 3,
                    hurries: 1,
                    knockdowns: 1,
                },
                not_to_side: PressureStats {
                    sacks: 1,
                    sack_yards: 6,
                    pressures: 5,
                    hurries: 2,
                    knockdowns: 2,
                },
            },
            release: ReleaseStats {
                time: 2.4,
                attempts: 34,
                time_under_pressure: 2.1,
                attempts_under_pressure: 8,
            },
        }
    }

    fn to_csv(records: &[GameRecord]) -> String {
        let mut buf = Vec::new();
        write_game_records(&mut buf, records).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn reads_three_rows() {
        let games = [
            sample_game("g1", "2013-09-08", "p1"),
            sample_game("g2", "2013-09-15", "p1"),
            sample_game("g3", "2014-01-05", "p1"),
        ];
        let parsed = read_game_records(to_csv(&games).as_bytes(), "games.csv").unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed, games);
    }

    #[test]
    fn rejects_unknown_position_with_line() {
        let text = to_csv(&[sample_game("g1", "2013-09-08", "p1"), sample_game("g2", "2013-09-15", "p1")]);
        let text = text.replacen(",LG,", ",QB,", 2).replacen(",QB,", ",LG,", 1);
        match read_game_records(text.as_bytes(), "games.csv").unwrap_err() {
            Error::Parse { line, column, message, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "position");
                assert!(message.contains("QB"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn rejects_stuffs_above_attempts() {
        let mut g = sample_game("g1", "2013-09-08", "p1");
        g.rush.to_side.stuffs = 11;
        let err = read_game_records(to_csv(&[g]).as_bytes(), "games.csv").unwrap_err();
        assert!(matches!(err, Error::RecordInvariant { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_column_is_schema_error() {
        let text = to_csv(&[sample_game("g1", "2013-09-08", "p1")]).replace("dropbacks", "drop_backs");
        let err = read_game_records(text.as_bytes(), "games.csv").unwrap_err();
        assert!(matches!(err, Error::MissingColumn { ref column, .. } if column == "dropbacks"));
    }

    #[test]
    fn non_numeric_count_names_row_and_column() {
        let text = to_csv(&[sample_game("g1", "2013-09-08", "p1")]).replace(",64,", ",sixty,");
        let err = read_game_records(text.as_bytes(), "games.csv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, ref column, .. } if column == "snaps"), "{err}");
    }
}
