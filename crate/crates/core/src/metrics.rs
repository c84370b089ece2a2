//! SQuAD-style exact match and token F1.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qa_data::{normalize_answer, QADataset};

fn check_golds<S: AsRef<str>>(golds: &[S]) -> Result<()> {
    if golds.is_empty() {
        Err(Error::argument("at least one gold answer is required"))
    } else {
        Ok(())
    }
}

/// 1 if the normalized prediction equals any normalized gold, else 0.
pub fn exact_match<S: AsRef<str>>(prediction: &str, golds: &[S]) -> Result<u8> {
    check_golds(golds)?;
    let pred = normalize_answer(prediction);
    Ok(golds.iter().any(|g| normalize_answer(g.as_ref()) == pred) as u8)
}

fn token_f1(pred: &str, gold: &str) -> f64 {
    let pred_tokens: Vec<&str> = pred.split(' ').filter(|t| !t.is_empty()).collect();
    let gold_tokens: Vec<&str> = gold.split(' ').filter(|t| !t.is_empty()).collect();
    match (pred_tokens.is_empty(), gold_tokens.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gold_tokens {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &pred_tokens {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    // 2pr / (p + r) with p = overlap / |pred| and r = overlap / |gold|
    2.0 * overlap as f64 / (pred_tokens.len() + gold_tokens.len()) as f64
}

/// Best bag-of-tokens F1 of `prediction` against any gold answer.
pub fn f1<S: AsRef<str>>(prediction: &str, golds: &[S]) -> Result<f64> {
    check_golds(golds)?;
    let pred = normalize_answer(prediction);
    Ok(golds
        .iter()
        .map(|g| token_f1(&pred, &normalize_answer(g.as_ref())))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub em: u8,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Percentage in [0, 100].
    pub exact_match: f64,
    /// Percentage in [0, 100].
    pub f1: f64,
    pub count: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub per_example: BTreeMap<String, ExampleScore>,
    /// Prediction ids that do not occur in the dataset.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub unknown_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Missing predictions are an error.
    Strict,
    /// Missing predictions score zero.
    #[default]
    Lenient,
}

/// Scores every question of `dataset`; aggregates are means over all
/// questions scaled to percentages.
pub fn evaluate(
    dataset: &QADataset,
    predictions: &HashMap<String, String>,
    policy: MissingPolicy,
) -> Result<EvalReport> {
    let mut per_example = BTreeMap::new();
    let (mut em_sum, mut f1_sum) = (0.0, 0.0);
    let mut known = HashSet::new();
    for qa in dataset.questions() {
        known.insert(qa.id.as_str());
        let golds: Vec<&str> = qa.answers.iter().map(|a| a.text.as_str()).collect();
        let score = match predictions.get(&qa.id) {
            Some(pred) => ExampleScore {
                em: exact_match(pred, &golds)?,
                f1: f1(pred, &golds)?,
            },
            None if policy == MissingPolicy::Strict => {
                return Err(Error::Missing {
                    what: "prediction",
                    id: qa.id.clone(),
                })
            }
            None => ExampleScore { em: 0, f1: 0.0 },
        };
        em_sum += score.em as f64;
        f1_sum += score.f1;
        per_example.insert(qa.id.clone(), score);
    }
    let mut unknown_ids: Vec<String> = predictions
        .keys()
        .filter(|id| !known.contains(id.as_str()))
        .cloned()
        .collect();
    unknown_ids.sort();

    let count = per_example.len();
    let pct = |sum: f64| if count == 0 { 0.0 } else { 100.0 * sum / count as f64 };
    Ok(EvalReport {
        exact_match: pct(em_sum),
        f1: pct(f1_sum),
        count,
        per_example,
        unknown_ids,
    })
}
