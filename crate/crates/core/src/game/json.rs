//! JSON and CSV forms of games and value reports.
//!
//! A game document looks like
//! `{"t": 3, "m": 2, "questions": [["0","1"], ...],
//!   "support": [{"x": ["0","0","0"], "w": "1/4", "target": 0}, ...]}`.
//! Labels may be strings or integers. An optional `"width"` widens the answer
//! alphabet to `Z_m^width`.

use serde_json::{json, Value};

use super::{GameValueReport, ModMGame, SupportEntry};
use crate::error::{Error, Result};
use crate::rational::rational_from_json;

fn label(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Parse(format!("question label must be a string or number, got {other}"))),
    }
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| Error::Parse(format!("missing field \"{name}\"")))
}

fn as_u64(v: &Value, name: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::Parse(format!("\"{name}\" must be a nonnegative integer")))
}

pub fn game_from_value(v: &Value) -> Result<ModMGame> {
    let m = as_u64(field(v, "m")?, "m")? as u32;
    let width = match v.get("width") {
        Some(w) => as_u64(w, "width")? as u32,
        None => 1,
    };
    let questions: Vec<Vec<String>> = field(v, "questions")?
        .as_array()
        .ok_or_else(|| Error::Parse("\"questions\" must be an array".into()))?
        .iter()
        .map(|qs| {
            qs.as_array()
                .ok_or_else(|| Error::Parse("each question set must be an array".into()))?
                .iter()
                .map(label)
                .collect()
        })
        .collect::<Result<_>>()?;
    if let Some(t) = v.get("t") {
        let t = as_u64(t, "t")? as usize;
        if t != questions.len() {
            return Err(Error::InvalidGame(format!(
                "\"t\" is {t} but {} question sets are given",
                questions.len()
            )));
        }
    }
    let support = field(v, "support")?
        .as_array()
        .ok_or_else(|| Error::Parse("\"support\" must be an array".into()))?
        .iter()
        .map(|e| {
            let labels = field(e, "x")?
                .as_array()
                .ok_or_else(|| Error::Parse("\"x\" must be an array".into()))?;
            if labels.len() != questions.len() {
                return Err(Error::InvalidGame(format!(
                    "input has {} labels, expected {}",
                    labels.len(),
                    questions.len()
                )));
            }
            let x = labels
                .iter()
                .enumerate()
                .map(|(j, l)| {
                    let l = label(l)?;
                    questions[j]
                        .iter()
                        .position(|q| *q == l)
                        .ok_or_else(|| Error::InvalidGame(format!("unknown label {l:?} for player {j}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let weight = rational_from_json(field(e, "w")?)?;
            let target = as_u64(field(e, "target")?, "target")? as u32;
            Ok(SupportEntry { x, weight, target })
        })
        .collect::<Result<Vec<_>>>()?;
    ModMGame::with_width(m, width, questions, support)
}

pub fn game_from_json(text: &str) -> Result<ModMGame> {
    game_from_value(&serde_json::from_str(text)?)
}

pub fn game_to_json(game: &ModMGame) -> Value {
    let support: Vec<Value> = game
        .support()
        .iter()
        .map(|e| {
            let x: Vec<&str> = e.x.iter().enumerate().map(|(j, &q)| game.questions()[j][q].as_str()).collect();
            json!({"x": x, "w": e.weight.to_string(), "target": e.target})
        })
        .collect();
    let mut v = json!({
        "t": game.players(),
        "m": game.modulus(),
        "questions": game.questions(),
        "support": support,
    });
    if game.width() != 1 {
        v["width"] = json!(game.width());
    }
    v
}

/// Report with the witness given as label-to-answer maps per player.
pub fn report_to_json(game: &ModMGame, report: &GameValueReport) -> Value {
    let witness: Vec<Value> = game
        .questions()
        .iter()
        .zip(&report.witness.answers)
        .map(|(labels, answers)| {
            let map: serde_json::Map<String, Value> =
                labels.iter().cloned().zip(answers.iter().map(|&a| json!(a))).collect();
            Value::Object(map)
        })
        .collect();
    json!({
        "omega": report.omega.to_string(),
        "beta": report.beta.to_string(),
        "witness": witness,
    })
}

pub fn report_csv_row(id: &str, report: &GameValueReport) -> String {
    format!("{id},{},{}", report.omega, report.beta)
}
