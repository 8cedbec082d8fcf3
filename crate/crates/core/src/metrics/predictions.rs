//! Prediction CSV: `index,task,payload...`.
//!
//! Classification tasks carry one integer, regression four floats
//! (`cos phi, sin phi, 100 df, snr_db`), demodulation one field of
//! semicolon-joined symbol indices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::Task;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Class(usize),
    Regressed([f64; 4]),
    Symbols(Vec<u16>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub example_index: u64,
    pub task: Task,
    pub payload: Payload,
}

impl PredictionRecord {
    pub fn new(example_index: u64, task: Task, payload: Payload) -> Result<Self> {
        let ok = matches!(
            (task, &payload),
            (Task::Amc | Task::SymbolCount, Payload::Class(_))
                | (Task::Regression, Payload::Regressed(_))
                | (Task::Demod, Payload::Symbols(_))
        );
        if !ok {
            return Err(Error::PayloadMismatch {
                index: example_index,
                reason: format!("payload {payload:?} does not fit task {task}"),
            });
        }
        Ok(PredictionRecord {
            example_index,
            task,
            payload,
        })
    }
}

pub const HEADER: &str = "index,task,payload";

pub fn predictions_to_csv(records: &[PredictionRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        write!(out, "{},{},", r.example_index, r.task).unwrap();
        match &r.payload {
            Payload::Class(c) => write!(out, "{c}").unwrap(),
            Payload::Regressed(v) => write!(out, "{},{},{},{}", v[0], v[1], v[2], v[3]).unwrap(),
            Payload::Symbols(s) => {
                let joined: Vec<String> = s.iter().map(u16::to_string).collect();
                out.push_str(&joined.join(";"));
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_predictions(path: impl AsRef<Path>, records: &[PredictionRecord]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, predictions_to_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_predictions(text: &str) -> Result<Vec<PredictionRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER || h.trim_start().starts_with("index,task") => {}
        _ => {
            return Err(Error::BadPrediction {
                line: 1,
                reason: format!("expected header `{HEADER}`"),
            })
        }
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        let line_no = n + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::BadPrediction {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(bad(
                "expected at least index, task and one payload field".into()
            ));
        }
        let index: u64 = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad index `{}`", fields[0])))?;
        let task: Task = fields[1]
            .parse()
            .map_err(|_| bad(format!("unknown task `{}`", fields[1])))?;
        let payload = match task {
            Task::Amc | Task::SymbolCount => {
                if fields.len() != 3 {
                    return Err(bad("class payload is a single integer".into()));
                }
                Payload::Class(
                    fields[2]
                        .parse()
                        .map_err(|_| bad(format!("bad class `{}`", fields[2])))?,
                )
            }
            Task::Regression => {
                if fields.len() != 6 {
                    return Err(bad("regression payload needs four values".into()));
                }
                let mut v = [0.0; 4];
                for (slot, f) in v.iter_mut().zip(&fields[2..]) {
                    *slot = f.parse().map_err(|_| bad(format!("bad value `{f}`")))?;
                }
                Payload::Regressed(v)
            }
            Task::Demod => {
                if fields.len() != 3 {
                    return Err(bad("demod payload is one semicolon-joined field".into()));
                }
                let syms = if fields[2].is_empty() {
                    Vec::new()
                } else {
                    fields[2]
                        .split(';')
                        .map(|s| s.parse().map_err(|_| bad(format!("bad symbol `{s}`"))))
                        .collect::<Result<_>>()?
                };
                Payload::Symbols(syms)
            }
        };
        out.push(PredictionRecord {
            example_index: index,
            task,
            payload,
        });
    }
    Ok(out)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}
