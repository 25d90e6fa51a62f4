//! Reading game records and count matrices.
//!
//! Three input shapes are accepted:
//!
//! * CSV with header `home,away,outcome[,repeat]`,
//! * a JSON array of `{"home","away","outcome","repeat"?}` objects,
//! * a JSON matrix document, either venue-free `{"teams", "a", "t"?}` or
//!   venue-split `{"teams", "a_home", "a_away", "t_home"}`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Location, Result};
use crate::types::{CountMatrices, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    HomeWin,
    AwayWin,
    Tie,
}

impl Outcome {
    pub fn token(self) -> &'static str {
        match self {
            Outcome::HomeWin => "home_win",
            Outcome::AwayWin => "away_win",
            Outcome::Tie => "tie",
        }
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "home_win" => Ok(Outcome::HomeWin),
            "away_win" => Ok(Outcome::AwayWin),
            "tie" => Ok(Outcome::Tie),
            other => Err(format!(
                "unknown outcome {other:?} (expected home_win, away_win or tie)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameRecord {
    pub home: String,
    pub away: String,
    pub outcome: Outcome,
    pub repeat: u64,
}

impl GameRecord {
    pub fn new(home: impl Into<String>, away: impl Into<String>, outcome: Outcome) -> Self {
        Self {
            home: home.into(),
            away: away.into(),
            outcome,
            repeat: 1,
        }
    }

    pub fn repeated(mut self, repeat: u64) -> Self {
        self.repeat = repeat;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Json,
}

/// Any of the supported input files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    RecordsJson,
    MatrixJson,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(InputFormat::Csv),
            "records-json" => Ok(InputFormat::RecordsJson),
            "matrix-json" => Ok(InputFormat::MatrixJson),
            other => Err(Error::config(format!(
                "unknown format {other:?} (expected csv, records-json or matrix-json)"
            ))),
        }
    }
}

pub fn parse_records(bytes: &[u8], format: RecordFormat) -> Result<Vec<GameRecord>> {
    match format {
        RecordFormat::Csv => parse_csv(bytes),
        RecordFormat::Json => parse_json_records(bytes),
    }
}

fn parse_csv(bytes: &[u8]) -> Result<Vec<GameRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let csv_err = |e: csv::Error| Error::Parse {
        location: e
            .position()
            .map_or(Location::Document, |p| Location::Line(p.line())),
        message: e.to_string(),
    };
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let missing = |name: &str| Error::Parse {
        location: Location::Line(1),
        message: format!("header is missing required column {name:?}"),
    };
    let home_col = column("home").ok_or_else(|| missing("home"))?;
    let away_col = column("away").ok_or_else(|| missing("away"))?;
    let outcome_col = column("outcome").ok_or_else(|| missing("outcome"))?;
    let repeat_col = column("repeat");

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line());
        let location = Location::Line(line);
        let parse_err = |message: String| Error::Parse { location, message };
        let home = row[home_col].to_string();
        let away = row[away_col].to_string();
        if home.is_empty() || away.is_empty() {
            return Err(parse_err("empty team id".into()));
        }
        let outcome: Outcome = row[outcome_col].parse().map_err(parse_err)?;
        let repeat = match repeat_col.map(|c| &row[c]) {
            None | Some("") => 1,
            Some(s) => parse_repeat(s).map_err(parse_err)?,
        };
        if home == away {
            return Err(Error::SelfPlay {
                location,
                team: home,
            });
        }
        out.push(GameRecord {
            home,
            away,
            outcome,
            repeat,
        });
    }
    Ok(out)
}

fn parse_repeat(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) | Err(_) => Err(format!("repeat must be a positive integer, got {s:?}")),
        Ok(n) => Ok(n),
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    home: String,
    away: String,
    outcome: String,
    #[serde(default = "one")]
    repeat: Value,
}

fn one() -> Value {
    Value::from(1)
}

fn parse_json_records(bytes: &[u8]) -> Result<Vec<GameRecord>> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        location: Location::Document,
        message: e.to_string(),
    })?;
    let items = doc.as_array().ok_or_else(|| Error::Parse {
        location: Location::Document,
        message: "expected a JSON array of game records".into(),
    })?;
    items
        .iter()
        .enumerate()
        .map(|(idx, item)| {
            let location = Location::Element(idx);
            let parse_err = |message: String| Error::Parse { location, message };
            let rec = JsonRecord::deserialize(item).map_err(|e| parse_err(e.to_string()))?;
            let outcome: Outcome = rec.outcome.parse().map_err(parse_err)?;
            let repeat = match rec.repeat.as_u64() {
                Some(n) if n >= 1 => n,
                _ => {
                    return Err(parse_err(format!(
                        "repeat must be a positive integer, got {}",
                        rec.repeat
                    )))
                }
            };
            if rec.home == rec.away {
                return Err(Error::SelfPlay {
                    location,
                    team: rec.home,
                });
            }
            Ok(GameRecord {
                home: rec.home,
                away: rec.away,
                outcome,
                repeat,
            })
        })
        .collect()
}

/// Serializes records as CSV in the format `parse_records` reads.
pub fn write_records_csv(records: &[GameRecord]) -> String {
    let mut out = String::from("home,away,outcome,repeat\n");
    for r in records {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record([&r.home, &r.away, r.outcome.token(), &r.repeat.to_string()])
            .expect("in-memory csv write");
        let bytes = w.into_inner().expect("in-memory csv flush");
        out.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
    }
    out
}

/// Aggregates records into per-venue counts. Teams are indexed by first
/// appearance (home before away within a record).
pub fn aggregate(records: &[GameRecord]) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut teams: Vec<String> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut intern = |id: &str, teams: &mut Vec<String>| -> usize {
        *index.entry(id.to_string()).or_insert_with(|| {
            teams.push(id.to_string());
            teams.len() - 1
        })
    };
    let mut pairs = Vec::with_capacity(records.len());
    for (idx, r) in records.iter().enumerate() {
        if r.home == r.away {
            return Err(Error::SelfPlay {
                location: Location::Element(idx),
                team: r.home.clone(),
            });
        }
        if r.repeat == 0 {
            return Err(Error::Parse {
                location: Location::Element(idx),
                message: "repeat must be at least 1".into(),
            });
        }
        let h = intern(&r.home, &mut teams);
        let a = intern(&r.away, &mut teams);
        pairs.push((h, a));
    }
    let mut counts = CountMatrices::zeros(teams.len());
    for (r, &(h, a)) in records.iter().zip(&pairs) {
        match r.outcome {
            Outcome::HomeWin => counts.a_home[[h, a]] += r.repeat,
            // visitor `a` beats host `h` away from home
            Outcome::AwayWin => counts.a_away[[a, h]] += r.repeat,
            Outcome::Tie => counts.t_home[[h, a]] += r.repeat,
        }
    }
    Dataset::new(teams, counts, false)
}

/// Parses a matrix-JSON document.
pub fn parse_matrix(bytes: &[u8]) -> Result<Dataset> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        location: Location::Document,
        message: e.to_string(),
    })?;
    let obj = doc.as_object().ok_or_else(|| Error::Parse {
        location: Location::Document,
        message: "expected a JSON object with \"teams\" and count matrices".into(),
    })?;
    let teams: Vec<String> = match obj.get("teams") {
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(Error::Parse {
                    location: Location::Element(i),
                    message: "team ids must be strings".into(),
                }),
            })
            .collect::<Result<_>>()?,
        _ => {
            return Err(Error::Parse {
                location: Location::Document,
                message: "missing \"teams\" array".into(),
            })
        }
    };
    let t = teams.len();
    if t < 2 {
        return Err(Error::Shape(format!("at least 2 teams required, got {t}")));
    }
    if obj.contains_key("a_home") {
        let mut counts = CountMatrices::zeros(t);
        counts.a_home = read_matrix(obj.get("a_home"), "a_home", t)?;
        counts.a_away = read_matrix(obj.get("a_away"), "a_away", t)?;
        counts.t_home = read_matrix(obj.get("t_home"), "t_home", t)?;
        Dataset::new(teams, counts, false)
    } else if obj.contains_key("a") {
        let wins = read_matrix(obj.get("a"), "a", t)?;
        let ties = match obj.get("t") {
            Some(v) => Some(read_matrix(Some(v), "t", t)?),
            None => None,
        };
        Dataset::from_win_matrix(teams, wins, ties)
    } else {
        Err(Error::Parse {
            location: Location::Document,
            message: "expected either \"a\" or \"a_home\"/\"a_away\"/\"t_home\"".into(),
        })
    }
}

fn read_matrix(value: Option<&Value>, name: &'static str, t: usize) -> Result<Array2<u64>> {
    let rows = value.and_then(Value::as_array).ok_or_else(|| Error::Parse {
        location: Location::Document,
        message: format!("missing or non-array matrix {name:?}"),
    })?;
    if rows.len() != t {
        return Err(Error::Shape(format!(
            "{name} has {} rows, expected {t}",
            rows.len()
        )));
    }
    let mut m = Array2::zeros((t, t));
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| Error::Parse {
            location: Location::Document,
            message: format!("{name}[{i}] is not an array"),
        })?;
        if row.len() != t {
            return Err(Error::Shape(format!(
                "{name}[{i}] has {} entries, expected {t}",
                row.len()
            )));
        }
        for (j, v) in row.iter().enumerate() {
            let x = v.as_f64().ok_or_else(|| Error::Parse {
                location: Location::Document,
                message: format!("{name}[{i}][{j}] is not a number"),
            })?;
            if x < 0.0 {
                return Err(Error::NegativeCount {
                    matrix: name,
                    row: i,
                    col: j,
                    value: x,
                });
            }
            m[[i, j]] = v.as_u64().ok_or_else(|| Error::Parse {
                location: Location::Document,
                message: format!("{name}[{i}][{j}] = {x} is not an integer count"),
            })?;
        }
    }
    Ok(m)
}

/// Serializes a dataset as venue-split matrix JSON.
pub fn write_matrix_json(dataset: &Dataset) -> String {
    let c = dataset.counts();
    let rows = |m: &Array2<u64>| -> Vec<Vec<u64>> { m.rows().into_iter().map(|r| r.to_vec()).collect() };
    let doc = serde_json::json!({
        "teams": dataset.teams(),
        "a_home": rows(&c.a_home),
        "a_away": rows(&c.a_away),
        "t_home": rows(&c.t_home),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json serialization");
    let _ = writeln!(s);
    s
}

/// Reads a dataset from bytes, guessing the format when not given: CSV
/// unless the content starts with `[` (records) or `{` (matrix).
pub fn load_bytes(bytes: &[u8], format: Option<InputFormat>) -> Result<Dataset> {
    let format = format.unwrap_or_else(|| {
        let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
        match first {
            Some(b'[') => InputFormat::RecordsJson,
            Some(b'{') => InputFormat::MatrixJson,
            _ => InputFormat::Csv,
        }
    });
    match format {
        InputFormat::Csv => aggregate(&parse_records(bytes, RecordFormat::Csv)?),
        InputFormat::RecordsJson => aggregate(&parse_records(bytes, RecordFormat::Json)?),
        InputFormat::MatrixJson => parse_matrix(bytes),
    }
}

pub fn load_path(path: &Path, format: Option<InputFormat>) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::Parse {
        location: Location::Document,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    load_bytes(&bytes, format)
}
