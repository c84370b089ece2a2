//! Independent reference implementations shared by the integration tests.
//! None of these call into the library code they are compared against.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use distal_core::active::{AnswerCandidate, PredictionRecord};
use distal_core::align::TokenSequence;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture<T: serde::de::DeserializeOwned>(name: &str) -> T {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Positions of `target` evenly spaced samples over `[0, n - 1]`.
fn sample_positions(n: usize, target: usize) -> Vec<f64> {
    (0..target)
        .map(|j| if target == 1 { 0.0 } else { j as f64 * (n - 1) as f64 / (target - 1) as f64 })
        .collect()
}

/// Natural cubic spline through `(i, y[i])` from a dense LU solve of the
/// full moment system (boundary rows included).
pub fn spline_oracle(y: &[f64], target: usize) -> Vec<f64> {
    let n = y.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    a[(0, 0)] = 1.0;
    a[(n - 1, n - 1)] = 1.0;
    for i in 1..n - 1 {
        a[(i, i - 1)] = 1.0;
        a[(i, i)] = 4.0;
        a[(i, i + 1)] = 1.0;
        b[i] = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
    }
    let m = a.lu().solve(&b).expect("spline system is non-singular");
    sample_positions(n, target)
        .into_iter()
        .map(|x| {
            let seg = (x.floor() as usize).min(n - 2);
            let u = x - seg as f64;
            let w = 1.0 - u;
            w * y[seg] + u * y[seg + 1] + ((w.powi(3) - w) * m[seg] + (u.powi(3) - u) * m[seg + 1]) / 6.0
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Plain Lloyd iterations until the assignment stops changing.
/// Returns (assignments, centroids, objective after each assignment).
pub fn naive_lloyd(points: &[Vec<f64>], init: &[Vec<f64>]) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut centroids = init.to_vec();
    let mut objective = Vec::new();
    let mut prev: Option<Vec<usize>> = None;
    for _ in 0..1000 {
        let mut assign = Vec::with_capacity(points.len());
        let mut sse = 0.0;
        for p in points {
            let mut best = 0;
            for c in 1..centroids.len() {
                if dist(p, &centroids[c]) < dist(p, &centroids[best]) {
                    best = c;
                }
            }
            sse += dist(p, &centroids[best]);
            assign.push(best);
        }
        objective.push(sse);
        if prev.as_ref() == Some(&assign) {
            return (assign, centroids, objective);
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                for d in 0..centroid.len() {
                    centroid[d] = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        prev = Some(assign);
    }
    panic!("naive Lloyd did not converge");
}

/// Bootstrap p-value: share of `b` resample sums that are `<= 0`, drawing
/// indices with `random_range(0..k)` from `ChaCha8Rng::seed_from_u64(seed)`.
pub fn bootstrap_oracle(values: &[f64], b: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = values.len();
    let mut hits = 0usize;
    for _ in 0..b {
        let mut sum = 0.0;
        for _ in 0..k {
            sum += values[rng.random_range(0..k)];
        }
        if sum <= 0.0 {
            hits += 1;
        }
    }
    hits as f64 / b as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStrategy {
    Lc,
    MarginLiteral,
    MarginUncertainty,
    Entropy(usize),
}

fn oracle_score(strategy: OracleStrategy, probs: &[f64]) -> Option<f64> {
    let mut sorted = probs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    match strategy {
        OracleStrategy::Lc => Some(-sorted[0]),
        OracleStrategy::MarginLiteral => (sorted.len() >= 2).then(|| sorted[0] - sorted[1]),
        OracleStrategy::MarginUncertainty => (sorted.len() >= 2).then(|| sorted[1] - sorted[0]),
        OracleStrategy::Entropy(n) => Some(
            sorted
                .iter()
                .take(n)
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.ln())
                .sum(),
        ),
    }
}

/// Exhaustive ranking: score every unlabeled id, sort the whole list by
/// (score desc, id asc), append unscored ids in id order, cut at `budget`.
pub fn selection_oracle(
    unlabeled: &BTreeSet<String>,
    probs: &HashMap<String, Vec<f64>>,
    strategy: OracleStrategy,
    budget: usize,
) -> Vec<String> {
    let mut scored: Vec<(f64, String)> = Vec::new();
    let mut rest: Vec<String> = Vec::new();
    for id in unlabeled {
        match probs.get(id).and_then(|p| oracle_score(strategy, p)) {
            Some(s) => scored.push((s, id.clone())),
            None => rest.push(id.clone()),
        }
    }
    scored.sort_by(|a, b| match b.0.partial_cmp(&a.0).unwrap() {
        Ordering::Equal => a.1.cmp(&b.1),
        o => o,
    });
    rest.sort();
    scored.into_iter().map(|(_, id)| id).chain(rest).take(budget).collect()
}

pub fn prediction(id: &str, probs: &[f64]) -> PredictionRecord {
    let candidates = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| AnswerCandidate {
            text: format!("answer {i}"),
            probability: p,
            start: i,
            end: i + 1,
        })
        .collect();
    PredictionRecord::new(id, candidates).unwrap()
}

/// Random candidate lists for `ids`: 1 to 6 candidates each, with a share
/// of exact duplicates so that ties in every score occur.
pub fn random_probs(rng: &mut impl Rng, ids: &[String]) -> HashMap<String, Vec<f64>> {
    let mut out: HashMap<String, Vec<f64>> = HashMap::new();
    let mut previous: Option<Vec<f64>> = None;
    for id in ids {
        let probs = match &previous {
            Some(p) if rng.random_bool(0.2) => p.clone(),
            _ => {
                let n = rng.random_range(1..=6);
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
                let total: f64 = raw.iter().sum::<f64>() * rng.random_range(1.0..1.5);
                raw.into_iter().map(|x| x / total).collect()
            }
        };
        previous = Some(probs.clone());
        out.insert(id.clone(), probs);
    }
    out
}

const SYLLABLES: [&str; 16] = [
    "ka", "ri", "mo", "to", "phy", "sics", "ac", "com", "mo", "da", "tion", "né", "Ü", "ber", "x", "ström",
];

/// One synthetic context: a list of words, a student tokenization that may
/// split words into separate tokens, and a WordPiece-style teacher
/// tokenization that splits words at other points.
pub fn fuzz_context(rng: &mut impl Rng) -> (TokenSequence, TokenSequence) {
    let n_words = rng.random_range(1..40);
    let mut student: Vec<String> = Vec::new();
    let mut teacher: Vec<String> = Vec::new();
    for _ in 0..n_words {
        let word: String = (0..rng.random_range(1..5))
            .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
            .collect();
        let word = if rng.random_bool(0.1) { format!("{word},") } else { word };
        let chars: Vec<char> = word.chars().collect();
        // student: up to two plain tokens per word, with cased variants
        let cut = rng.random_range(0..chars.len());
        let (a, b) = chars.split_at(cut);
        for part in [a, b] {
            if !part.is_empty() {
                let s: String = part.iter().collect();
                student.push(if rng.random_bool(0.3) { s.to_uppercase() } else { s });
            }
        }
        // teacher: word pieces at independent cut points
        let mut cuts: Vec<usize> = (0..rng.random_range(0..3)).map(|_| rng.random_range(1..=chars.len())).collect();
        cuts.push(chars.len());
        cuts.sort_unstable();
        cuts.dedup();
        let mut from = 0;
        for to in cuts {
            if to > from {
                let piece: String = chars[from..to].iter().collect();
                teacher.push(if from == 0 { piece.to_lowercase() } else { format!("##{}", piece.to_lowercase()) });
                from = to;
            }
        }
    }
    (
        TokenSequence::student(&student).unwrap(),
        TokenSequence::teacher(&teacher).unwrap(),
    )
}

/// Largest-remainder quotas computed in rationals by brute force: floor
/// shares, then one extra seat per largest remainder, ties to lower index.
pub fn largest_remainder_oracle(sizes: &[usize], budget: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| budget * s / total).collect();
    let rem: Vec<usize> = sizes.iter().map(|&s| budget * s % total).collect();
    let mut left = budget - quotas.iter().sum::<usize>();
    let mut used = vec![false; sizes.len()];
    while left > 0 {
        let mut best: Option<usize> = None;
        for i in 0..sizes.len() {
            if !used[i] && best.is_none_or(|b| rem[i] > rem[b]) {
                best = Some(i);
            }
        }
        let b = best.unwrap();
        used[b] = true;
        quotas[b] += 1;
        left -= 1;
    }
    quotas
}
pub mod workspace;
