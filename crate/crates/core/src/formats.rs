//! Record types for the JSON / JSONL files exchanged with model harnesses.
//!
//! | file                 | record                                                        |
//! |----------------------|---------------------------------------------------------------|
//! | `tokens.jsonl`       | `{"id", "source": "student"\|"teacher", "tokens": [{"text", "cont"}]}` |
//! | `logits.jsonl`       | `{"id", "start": [f64], "end": [f64]}`                         |
//! | gold spans           | `{"id", "start": int, "end": int}`                             |
//! | `predictions.jsonl`  | `{"id", "candidates": [{"text", "prob", "start", "end"}]}`     |
//! | `embeddings.jsonl`   | `{"id", "vec": [f64]}`                                         |
//! | score files          | `{id: number}` or `{id: {"em": number, "f1": number}}`         |

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::active::PredictionRecord;
use crate::align::{Token, TokenSequence, TokenSource};
use crate::error::{Error, Result};
use crate::io;
use crate::loss::{GoldSpan, SpanLogits};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub id: String,
    pub source: TokenSource,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitsRecord {
    pub id: String,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl LogitsRecord {
    pub fn from_span(id: impl Into<String>, logits: &SpanLogits) -> Self {
        LogitsRecord {
            id: id.into(),
            start: logits.start().to_vec(),
            end: logits.end().to_vec(),
        }
    }

    pub fn to_span(&self) -> Result<SpanLogits> {
        SpanLogits::new(self.start.clone(), self.end.clone()).map_err(|e| Error::Validation {
            id: self.id.clone(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub id: String,
    pub start: usize,
    pub end: usize,
}

impl GoldRecord {
    pub fn span(&self) -> Result<GoldSpan> {
        GoldSpan::new(self.start, self.end).map_err(|e| Error::Validation {
            id: self.id.clone(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub id: String,
    pub mapping: Vec<usize>,
    pub leader: Vec<bool>,
    pub teacher_len: usize,
}

/// Student and teacher tokenizations of one context.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenPair {
    pub id: String,
    pub student: TokenSequence,
    pub teacher: TokenSequence,
}

/// Groups token records by id, in order of first appearance.
pub fn pair_tokens(records: Vec<TokenRecord>) -> Result<Vec<TokenPair>> {
    let mut order: Vec<String> = Vec::new();
    let mut slots: HashMap<String, (Option<TokenSequence>, Option<TokenSequence>)> = HashMap::new();
    for rec in records {
        let seq = TokenSequence::new(rec.source, rec.tokens).map_err(|e| Error::Validation {
            id: rec.id.clone(),
            message: e.to_string(),
        })?;
        let slot = slots.entry(rec.id.clone()).or_insert_with(|| {
            order.push(rec.id.clone());
            (None, None)
        });
        let target = match rec.source {
            TokenSource::Student => &mut slot.0,
            TokenSource::Teacher => &mut slot.1,
        };
        if target.replace(seq).is_some() {
            return Err(Error::Validation {
                id: rec.id,
                message: format!("duplicate {:?} token record", rec.source),
            });
        }
    }
    order
        .into_iter()
        .map(|id| match slots.remove(&id) {
            Some((Some(student), Some(teacher))) => Ok(TokenPair { id, student, teacher }),
            Some((None, _)) => Err(Error::Missing { what: "student tokens", id }),
            _ => Err(Error::Missing { what: "teacher tokens", id }),
        })
        .collect()
}

/// Indexes records by id, rejecting duplicates.
pub fn index_by_id<T, F>(records: Vec<T>, id_of: F) -> Result<HashMap<String, T>>
where
    F: Fn(&T) -> &str,
{
    let mut out = HashMap::with_capacity(records.len());
    for rec in records {
        let id = id_of(&rec).to_string();
        if out.contains_key(&id) {
            return Err(Error::Validation {
                id,
                message: "duplicate record id".into(),
            });
        }
        out.insert(id, rec);
    }
    Ok(out)
}

pub fn read_logits(path: &Path) -> Result<Vec<LogitsRecord>> {
    io::read_jsonl(path)
}

/// Answer predictions: either the official `{id: text}` map or a
/// `predictions.jsonl` of ranked candidates (top candidate used).
pub fn read_answer_predictions(path: &Path) -> Result<HashMap<String, String>> {
    let text = io::read_to_string(path)?;
    if let Ok(map) = serde_json::from_str::<HashMap<String, String>>(&text) {
        return Ok(map);
    }
    let records: Vec<PredictionRecord> = io::parse_jsonl(path, &text)?;
    let records = index_by_id(records, |r| &r.id)?;
    Ok(records.into_iter().map(|(id, rec)| (id, rec.top().text.clone())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMetric {
    #[default]
    Em,
    F1,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScoreEntry {
    Plain(f64),
    Both { em: f64, f1: f64 },
}

/// Per-example scores keyed by id.
pub fn read_scores(path: &Path, metric: ScoreMetric) -> Result<BTreeMap<String, f64>> {
    let raw: BTreeMap<String, ScoreEntry> = io::read_json(path)?;
    Ok(raw
        .into_iter()
        .map(|(id, entry)| {
            let v = match (entry, metric) {
                (ScoreEntry::Plain(v), _) => v,
                (ScoreEntry::Both { em, .. }, ScoreMetric::Em) => em,
                (ScoreEntry::Both { f1, .. }, ScoreMetric::F1) => f1,
            };
            (id, v)
        })
        .collect())
}
