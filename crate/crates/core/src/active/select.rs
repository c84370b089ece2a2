//! Acquisition strategies over the unlabeled part of a [`Pool`].
//!
//! Every strategy produces a total order of the unlabeled ids, most
//! informative first, and returns a prefix of it. Equal scores fall back to
//! ascending id. Ids without a usable prediction (missing record under the
//! lenient policy, or fewer than two candidates for margin) rank after all
//! scored ids.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans;
use super::pool::Pool;
use super::scoring::{score_entropy, score_margin, PredictionRecord};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    #[default]
    Lc,
    Margin,
    Entropy,
    #[value(alias = "lc-cluster")]
    LcCluster,
}

/// Direction in which margin scores are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MarginMode {
    /// Largest margin first.
    #[default]
    #[value(alias = "paper-literal")]
    PaperLiteral,
    /// Smallest margin first.
    Uncertainty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub top_n: usize,
    pub k_clusters: usize,
    pub oversample_factor: usize,
    pub margin_mode: MarginMode,
    pub renormalize_entropy: bool,
    pub seed: u64,
    /// Rank ids without a prediction record last instead of failing.
    pub lenient: bool,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            strategy: Strategy::Lc,
            top_n: 5,
            k_clusters: 10,
            oversample_factor: 3,
            margin_mode: MarginMode::PaperLiteral,
            renormalize_entropy: false,
            seed: 0,
            lenient: false,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-9,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if matches!(self.strategy, Strategy::Margin | Strategy::Entropy) && self.top_n < 2 {
            return Err(Error::argument("top_n must be at least 2 for margin and entropy"));
        }
        if self.oversample_factor < 1 {
            return Err(Error::argument("oversample factor must be at least 1"));
        }
        if self.strategy == Strategy::LcCluster && self.k_clusters < 1 {
            return Err(Error::argument("k_clusters must be at least 1"));
        }
        Ok(())
    }
}

/// Question embeddings used by the clustering strategy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vec: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(records: impl IntoIterator<Item = EmbeddingRecord>) -> Result<Self> {
        let mut vectors = HashMap::new();
        let mut dim = None;
        for rec in records {
            if *dim.get_or_insert(rec.vec.len()) != rec.vec.len() {
                return Err(Error::Validation {
                    id: rec.id,
                    message: "embedding dimension differs from earlier records".into(),
                });
            }
            if rec.vec.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation {
                    id: rec.id,
                    message: "embedding has non-finite values".into(),
                });
            }
            if vectors.insert(rec.id.clone(), rec.vec).is_some() {
                return Err(Error::Validation {
                    id: rec.id,
                    message: "duplicate embedding id".into(),
                });
            }
        }
        Ok(EmbeddingTable {
            vectors,
            dim: dim.unwrap_or(0),
        })
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Selection {
    pub ids: Vec<String>,
    /// Unlabeled ids that could not be scored.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub unscored: Vec<String>,
}

/// Sort key: larger is more informative.
fn informativeness(rec: &PredictionRecord, cfg: &StrategyConfig) -> Result<Option<f64>> {
    Ok(match cfg.strategy {
        // rank on the raw top probability so that near-1 values stay distinct
        Strategy::Lc | Strategy::LcCluster => Some(-rec.top().probability),
        Strategy::Margin => match score_margin(rec) {
            Ok(m) if cfg.margin_mode == MarginMode::PaperLiteral => Some(m),
            Ok(m) => Some(-m),
            Err(_) => None,
        },
        Strategy::Entropy => Some(score_entropy(rec, cfg.top_n, cfg.renormalize_entropy)?),
        Strategy::Random => unreachable!("random selection does not score records"),
    })
}

/// All unlabeled ids, most informative first.
fn rank(
    pool: &Pool,
    preds: &HashMap<String, PredictionRecord>,
    cfg: &StrategyConfig,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut scored = Vec::new();
    let mut unscored = Vec::new();
    for id in &pool.unlabeled {
        match preds.get(id) {
            Some(rec) => match informativeness(rec, cfg)? {
                Some(key) => scored.push((key, id)),
                None => unscored.push(id.clone()),
            },
            None if cfg.lenient => unscored.push(id.clone()),
            None => {
                return Err(Error::Missing {
                    what: "prediction record",
                    id: id.clone(),
                })
            }
        }
    }
    scored.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => a.1.cmp(b.1),
        other => other,
    });
    let mut order: Vec<String> = scored.into_iter().map(|(_, id)| id.clone()).collect();
    order.extend(unscored.iter().cloned());
    Ok((order, unscored))
}

/// Picks up to `budget` unlabeled ids with the configured strategy.
pub fn select(
    pool: &Pool,
    preds: &HashMap<String, PredictionRecord>,
    cfg: &StrategyConfig,
    budget: usize,
    embeddings: Option<&EmbeddingTable>,
) -> Result<Selection> {
    cfg.validate()?;
    if budget == 0 || pool.unlabeled.is_empty() {
        return Ok(Selection::default());
    }
    match cfg.strategy {
        Strategy::Random => {
            let mut ids: Vec<String> = pool.unlabeled.iter().cloned().collect();
            let mut rng = stream_rng(cfg.seed, Purpose::RandomSelection, pool.cycle as u32);
            ids.shuffle(&mut rng);
            ids.truncate(budget);
            Ok(Selection { ids, unscored: vec![] })
        }
        Strategy::LcCluster => {
            let emb = embeddings.ok_or_else(|| Error::argument("the lc_cluster strategy needs embeddings"))?;
            select_lc_cluster(pool, preds, emb, cfg, budget)
        }
        _ => {
            let (mut ids, unscored) = rank(pool, preds, cfg)?;
            ids.truncate(budget);
            Ok(Selection { ids, unscored })
        }
    }
}

/// Splits `budget` across groups proportionally to `sizes` by the
/// largest-remainder rule; ties go to the lower index.
pub fn largest_remainder(sizes: &[usize], budget: usize) -> Result<Vec<usize>> {
    let total: usize = sizes.iter().sum();
    if budget > total {
        return Err(Error::argument(format!("budget {budget} exceeds the {total} available members")));
    }
    if total == 0 {
        return Ok(vec![0; sizes.len()]);
    }
    let (budget_w, total_w) = (budget as u128, total as u128);
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| (budget_w * s as u128 / total_w) as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // exact remainders: budget * size mod total
    order.sort_by_key(|&c| (std::cmp::Reverse(budget_w * sizes[c] as u128 % total_w), c));
    for &c in order.iter().take(budget - assigned) {
        quotas[c] += 1;
    }
    Ok(quotas)
}

/// Least-confidence preselection of `oversample_factor * budget` ids,
/// k-means over their embeddings, then per-cluster picks in proportion to
/// cluster size. Within a cluster, ids are taken in least-confidence order.
pub fn select_lc_cluster(
    pool: &Pool,
    preds: &HashMap<String, PredictionRecord>,
    emb: &EmbeddingTable,
    cfg: &StrategyConfig,
    budget: usize,
) -> Result<Selection> {
    if budget == 0 || pool.unlabeled.is_empty() {
        return Ok(Selection::default());
    }
    let lc_cfg = StrategyConfig {
        strategy: Strategy::Lc,
        ..cfg.clone()
    };
    let (mut ranked, unscored) = rank(pool, preds, &lc_cfg)?;
    ranked.truncate(cfg.oversample_factor.saturating_mul(budget));
    let points = ranked
        .iter()
        .map(|id| {
            emb.get(id).map(<[f64]>::to_vec).ok_or_else(|| Error::Missing {
                what: "embedding",
                id: id.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let k = cfg.k_clusters.min(ranked.len());
    let clusters = kmeans(&points, k, cfg.seed, cfg.kmeans_max_iter, cfg.kmeans_tol)?;
    let mut sizes = vec![0usize; k];
    for &c in &clusters.assignments {
        sizes[c] += 1;
    }
    let quotas = largest_remainder(&sizes, budget.min(ranked.len()))?;

    let mut taken = vec![0usize; k];
    let mut picked = vec![false; ranked.len()];
    for (pos, &c) in clusters.assignments.iter().enumerate() {
        if taken[c] < quotas[c] {
            taken[c] += 1;
            picked[pos] = true;
        }
    }
    let ids = ranked
        .into_iter()
        .zip(picked)
        .filter_map(|(id, p)| p.then_some(id))
        .collect();
    Ok(Selection { ids, unscored })
}
