//! Per-question informativeness scores computed from ranked answer candidates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerCandidate {
    pub text: String,
    #[serde(rename = "prob")]
    pub probability: f64,
    pub start: usize,
    pub end: usize,
}

/// Answer candidates for one question, most probable first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub id: String,
    candidates: Vec<AnswerCandidate>,
}

#[derive(Deserialize)]
struct RawPrediction {
    id: String,
    candidates: Vec<AnswerCandidate>,
}

impl<'de> Deserialize<'de> for PredictionRecord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPrediction::deserialize(d)?;
        PredictionRecord::new(raw.id, raw.candidates).map_err(serde::de::Error::custom)
    }
}

impl PredictionRecord {
    /// Validates and sorts candidates by descending probability (stable).
    pub fn new(id: impl Into<String>, mut candidates: Vec<AnswerCandidate>) -> Result<Self> {
        let id = id.into();
        if candidates.is_empty() {
            return Err(Error::Validation {
                id,
                message: "prediction has no candidates".into(),
            });
        }
        for c in &candidates {
            if !(0.0..=1.0).contains(&c.probability) {
                return Err(Error::Validation {
                    id,
                    message: format!("candidate probability {} outside [0, 1]", c.probability),
                });
            }
            if c.start > c.end {
                return Err(Error::Validation {
                    id,
                    message: format!("candidate span ({}, {}) has start after end", c.start, c.end),
                });
            }
        }
        candidates.sort_by(|a, b| b.probability.total_cmp(&a.probability));
        Ok(PredictionRecord { id, candidates })
    }

    /// Shorthand for tests and fixtures: candidates with the given probabilities.
    pub fn from_probs(id: impl Into<String>, probs: &[f64]) -> Result<Self> {
        let candidates = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| AnswerCandidate {
                text: format!("candidate {i}"),
                probability: p,
                start: i,
                end: i,
            })
            .collect();
        Self::new(id, candidates)
    }

    pub fn candidates(&self) -> &[AnswerCandidate] {
        &self.candidates
    }

    pub fn top(&self) -> &AnswerCandidate {
        &self.candidates[0]
    }
}

/// `1 - p(top answer)`; larger means less confident.
pub fn score_least_confidence(rec: &PredictionRecord) -> f64 {
    1.0 - rec.top().probability
}

/// `p1 - p2` between the two most probable answers.
pub fn score_margin(rec: &PredictionRecord) -> Result<f64> {
    match rec.candidates() {
        [first, second, ..] => Ok(first.probability - second.probability),
        _ => Err(Error::Validation {
            id: rec.id.clone(),
            message: "margin needs at least two candidates".into(),
        }),
    }
}

/// Shannon entropy (nats) of the `top_n` most probable candidates.
///
/// Probabilities are used as given unless `renormalize` is set.
pub fn score_entropy(rec: &PredictionRecord, top_n: usize, renormalize: bool) -> Result<f64> {
    if top_n == 0 {
        return Err(Error::argument("top_n must be at least 1"));
    }
    let probs: Vec<f64> = rec.candidates().iter().take(top_n).map(|c| c.probability).collect();
    if probs.iter().any(|&p| p < 0.0) {
        return Err(Error::contract(format!("negative probability in `{}`", rec.id)));
    }
    let mass: f64 = if renormalize { probs.iter().sum() } else { 1.0 };
    if mass == 0.0 {
        return Ok(0.0);
    }
    Ok(probs
        .iter()
        .map(|&p| p / mass)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum())
}
