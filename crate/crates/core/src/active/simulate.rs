//! Replay of the pool-based loop: seed a random labeled set, then grow it
//! cycle by cycle with a selection strategy fed by per-cycle predictions.
//!
//! Model retraining happens outside the toolkit; each cycle's predictions
//! come from a [`PredictionSource`], typically a directory of
//! `cycle_<n>.jsonl` files written by the training harness.

use std::collections::HashMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::pool::Pool;
use super::scoring::PredictionRecord;
use super::select::{select, EmbeddingTable, Strategy, StrategyConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::rng::{stream_rng, Purpose};
use crate::stats::ceil_fraction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Each entry is a cumulative labeled fraction of the whole pool.
    #[default]
    Cumulative,
    /// `[initial, step]`: label `initial` of the pool, then repeatedly `step`
    /// of whatever is still unlabeled until the pool is exhausted.
    #[value(alias = "fraction-of-remaining")]
    FractionOfRemaining,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: ScheduleMode,
    pub fractions: Vec<f64>,
}

impl Schedule {
    /// 1%, then 10% through 100% in steps of 10%.
    pub fn table_default() -> Self {
        let mut fractions = vec![0.01];
        fractions.extend((1..=10).map(|i| i as f64 / 10.0));
        Schedule {
            mode: ScheduleMode::Cumulative,
            fractions,
        }
    }

    pub fn cumulative(fractions: Vec<f64>) -> Self {
        Schedule {
            mode: ScheduleMode::Cumulative,
            fractions,
        }
    }

    pub fn fraction_of_remaining(initial: f64, step: f64) -> Self {
        Schedule {
            mode: ScheduleMode::FractionOfRemaining,
            fractions: vec![initial, step],
        }
    }

    /// Validates and returns warnings for entries that had to be clipped.
    fn check(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.fractions.is_empty() {
            return Err(Error::argument("schedule is empty"));
        }
        if self.fractions.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::argument("schedule fractions must be positive"));
        }
        match self.mode {
            ScheduleMode::Cumulative => {
                if self.fractions.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::argument("cumulative schedule must be strictly increasing"));
                }
                if let Some(f) = self.fractions.iter().find(|f| **f > 1.0) {
                    warnings.push(format!("schedule entry {f} exceeds the pool; clipped to 1.0"));
                }
            }
            ScheduleMode::FractionOfRemaining => {
                if self.fractions.len() != 2 {
                    return Err(Error::argument("fraction-of-remaining schedule takes [initial, step]"));
                }
                if self.fractions.iter().any(|f| *f > 1.0) {
                    return Err(Error::argument("fractions must not exceed 1.0"));
                }
            }
        }
        Ok(warnings)
    }
}

pub trait PredictionSource {
    /// Predictions of the model trained on the pool's labeled set, used to
    /// choose the ids labeled in `cycle`.
    fn predictions(&mut self, cycle: usize, pool: &Pool) -> Result<HashMap<String, PredictionRecord>>;
}

/// Reads `<dir>/cycle_<n>.jsonl`.
#[derive(Debug, Clone)]
pub struct ReplayDir {
    pub dir: PathBuf,
}

impl ReplayDir {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayDir { dir: dir.into() }
    }

    pub fn path_for(&self, cycle: usize) -> PathBuf {
        self.dir.join(format!("cycle_{cycle}.jsonl"))
    }
}

pub fn predictions_by_id(records: Vec<PredictionRecord>) -> Result<HashMap<String, PredictionRecord>> {
    let mut out = HashMap::with_capacity(records.len());
    for rec in records {
        if let Some(prev) = out.insert(rec.id.clone(), rec) {
            return Err(Error::Validation {
                id: prev.id,
                message: "duplicate prediction record".into(),
            });
        }
    }
    Ok(out)
}

impl PredictionSource for ReplayDir {
    fn predictions(&mut self, cycle: usize, _pool: &Pool) -> Result<HashMap<String, PredictionRecord>> {
        predictions_by_id(io::read_jsonl(&self.path_for(cycle))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub labeled_percent: f64,
    pub selected: Vec<String>,
    pub pool: Pool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub history: Vec<CycleRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Runs the loop over `ids` until the schedule ends or the pool is exhausted.
pub fn run_simulation(
    ids: &[String],
    schedule: &Schedule,
    source: &mut dyn PredictionSource,
    cfg: &StrategyConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<SimulationReport> {
    cfg.validate()?;
    let mut warnings = schedule.check()?;
    let mut pool = Pool::new(ids.iter().cloned())?;
    let n = pool.len();
    let mut history = Vec::new();
    if n == 0 {
        return Ok(SimulationReport { history, warnings });
    }

    // cycle 0: seeded random seed set
    let first = ceil_fraction(schedule.fractions[0].min(1.0), n).max(1);
    let mut seed_ids: Vec<String> = pool.unlabeled.iter().cloned().collect();
    seed_ids.shuffle(&mut stream_rng(cfg.seed, Purpose::SeedPool, 0));
    seed_ids.truncate(first);
    record(&mut pool, &mut history, seed_ids)?;

    let mut step = 1;
    while !pool.is_exhausted() {
        let wanted = match schedule.mode {
            ScheduleMode::Cumulative => match schedule.fractions.get(step) {
                Some(f) => ceil_fraction(f.min(1.0), n).saturating_sub(pool.labeled.len()),
                None => break,
            },
            ScheduleMode::FractionOfRemaining => ceil_fraction(schedule.fractions[1], pool.unlabeled.len()),
        };
        // the labeled set grows every cycle until exhaustion
        let budget = wanted.max(1).min(pool.unlabeled.len());
        let preds = if cfg.strategy == Strategy::Random {
            HashMap::new()
        } else {
            source.predictions(pool.cycle, &pool)?
        };
        let sel = select(&pool, &preds, cfg, budget, embeddings)?;
        if !sel.unscored.is_empty() {
            warnings.push(format!(
                "cycle {}: {} unlabeled ids had no usable prediction",
                pool.cycle,
                sel.unscored.len()
            ));
        }
        record(&mut pool, &mut history, sel.ids)?;
        step += 1;
    }
    if schedule.mode == ScheduleMode::Cumulative && step < schedule.fractions.len() {
        warnings.push(format!(
            "pool exhausted after {step} of {} schedule entries",
            schedule.fractions.len()
        ));
    }
    Ok(SimulationReport { history, warnings })
}

fn record(pool: &mut Pool, history: &mut Vec<CycleRecord>, selected: Vec<String>) -> Result<()> {
    let cycle = pool.cycle;
    pool.label(&selected)?;
    history.push(CycleRecord {
        cycle,
        labeled_percent: pool.labeled_percent(),
        selected,
        pool: pool.clone(),
    });
    Ok(())
}
