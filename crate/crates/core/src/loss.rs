//! Distillation objective for span-extraction QA.
//!
//! `total = (1 - rho) * hard + rho * soft [+ mse_weight * mse]`, where `hard`
//! is the start/end cross-entropy of the student, `soft` is
//! `T^2 * (KL(p_start || q_start) + KL(p_end || q_end))` between tempered
//! student (`p`) and teacher (`q`) distributions, and the optional `mse` term
//! compares the student logits resampled to teacher length with the full
//! teacher logits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resample::{resample, Method};

pub const DEFAULT_RHO: f64 = 0.7;
pub const DEFAULT_TEMPERATURE: f64 = 10.0;

/// Paired start/end logits over the token positions of one context.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanLogits {
    start: Vec<f64>,
    end: Vec<f64>,
}

impl SpanLogits {
    pub fn new(start: Vec<f64>, end: Vec<f64>) -> Result<Self> {
        if start.is_empty() || start.len() != end.len() {
            return Err(Error::contract(format!(
                "start/end logits must be non-empty and of equal length (got {} and {})",
                start.len(),
                end.len()
            )));
        }
        if start.iter().chain(&end).any(|x| !x.is_finite()) {
            return Err(Error::contract("logits must be finite"));
        }
        Ok(SpanLogits { start, end })
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn end(&self) -> &[f64] {
        &self.end
    }

    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    pub fn resampled(&self, target_len: usize, method: Method) -> Result<SpanLogits> {
        SpanLogits::new(
            resample(&self.start, target_len, method)?,
            resample(&self.end, target_len, method)?,
        )
    }
}

/// Gold answer start and end token indices (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSpan {
    pub start: usize,
    pub end: usize,
}

impl GoldSpan {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::argument(format!("gold start {start} after end {end}")));
        }
        Ok(GoldSpan { start, end })
    }
}

/// Which vector length the interpolation term is computed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ResampleDirection {
    /// Student logits stretched to teacher length.
    #[default]
    #[value(alias = "student-to-teacher")]
    StudentToTeacher,
    /// Teacher logits squeezed to student length.
    #[value(alias = "teacher-to-student")]
    TeacherToStudent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillConfig {
    pub rho: f64,
    pub temperature: f64,
    pub mse_weight: f64,
    pub use_interpolation: bool,
    pub method: Method,
    pub direction: ResampleDirection,
    /// Compute the soft term on the interpolated pair instead of the
    /// rule-aligned one.
    pub interpolated_soft: bool,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            rho: DEFAULT_RHO,
            temperature: DEFAULT_TEMPERATURE,
            mse_weight: 1.0,
            use_interpolation: false,
            method: Method::Cubic,
            direction: ResampleDirection::StudentToTeacher,
            interpolated_soft: false,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::argument(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::argument(format!("temperature must be > 0, got {}", self.temperature)));
        }
        if !(self.mse_weight >= 0.0 && self.mse_weight.is_finite()) {
            return Err(Error::argument(format!("mse_weight must be >= 0, got {}", self.mse_weight)));
        }
        Ok(())
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::argument(format!("temperature must be > 0, got {t}")))
    }
}

/// Max-shifted `log softmax(v / t)`.
pub fn log_softmax(v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_temperature(t)?;
    if v.is_empty() {
        return Err(Error::argument("softmax of an empty vector"));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = v.iter().map(|x| (x - max) / t).collect();
    let log_z = shifted.iter().map(|s| s.exp()).sum::<f64>().ln();
    Ok(shifted.into_iter().map(|s| s - log_z).collect())
}

pub fn tempered_softmax(v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_temperature(t)?;
    if v.is_empty() {
        return Err(Error::argument("softmax of an empty vector"));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| ((x - max) / t).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// `KL(p || q)` for distributions given as log-probabilities.
fn kl_from_logs(log_p: &[f64], log_q: &[f64]) -> f64 {
    log_p
        .iter()
        .zip(log_q)
        .map(|(&lp, &lq)| {
            let p = lp.exp();
            if p == 0.0 {
                0.0
            } else {
                p * (lp - lq)
            }
        })
        .sum::<f64>()
        .max(0.0)
}

/// `-log p_start[gold.start] - log p_end[gold.end]` under the plain softmax.
pub fn hard_loss(student: &SpanLogits, gold: GoldSpan) -> Result<f64> {
    if gold.start > gold.end || gold.end >= student.len() {
        return Err(Error::argument(format!(
            "gold span ({}, {}) outside context of length {}",
            gold.start,
            gold.end,
            student.len()
        )));
    }
    let ls = log_softmax(student.start(), 1.0)?;
    let le = log_softmax(student.end(), 1.0)?;
    Ok(-ls[gold.start] - le[gold.end])
}

pub fn soft_loss(student: &SpanLogits, teacher: &SpanLogits, t: f64) -> Result<f64> {
    check_temperature(t)?;
    if student.len() != teacher.len() {
        return Err(Error::contract(format!(
            "soft loss needs equal lengths, got student {} and teacher {}; align or resample first",
            student.len(),
            teacher.len()
        )));
    }
    let kl_start = kl_from_logs(&log_softmax(student.start(), t)?, &log_softmax(teacher.start(), t)?);
    let kl_end = kl_from_logs(&log_softmax(student.end(), t)?, &log_softmax(teacher.end(), t)?);
    Ok(t * t * (kl_start + kl_end))
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::contract(format!("mse of lengths {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::argument("mse of empty vectors"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub hard: f64,
    pub soft: f64,
    pub mse: f64,
    pub total: f64,
}

/// Weighted distillation loss with its individual terms.
///
/// `teacher_aligned` must have student length (see
/// [`project_teacher_logits`](crate::align::project_teacher_logits));
/// `teacher_full` keeps the teacher's own tokenization and is only used by
/// the interpolation term.
pub fn combined_loss(
    student: &SpanLogits,
    teacher_aligned: &SpanLogits,
    teacher_full: &SpanLogits,
    gold: GoldSpan,
    cfg: &DistillConfig,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    let hard = hard_loss(student, gold)?;

    let interpolated = if cfg.use_interpolation || cfg.interpolated_soft {
        Some(match cfg.direction {
            ResampleDirection::StudentToTeacher => {
                (student.resampled(teacher_full.len(), cfg.method)?, teacher_full.clone())
            }
            ResampleDirection::TeacherToStudent => {
                (student.clone(), teacher_full.resampled(student.len(), cfg.method)?)
            }
        })
    } else {
        None
    };

    let soft = match (&interpolated, cfg.interpolated_soft) {
        (Some((s, t)), true) => soft_loss(s, t, cfg.temperature)?,
        _ => soft_loss(student, teacher_aligned, cfg.temperature)?,
    };
    let mse_term = match (&interpolated, cfg.use_interpolation) {
        (Some((s, t)), true) => mse(s.start(), t.start())? + mse(s.end(), t.end())?,
        _ => 0.0,
    };

    let mut total = (1.0 - cfg.rho) * hard + cfg.rho * soft;
    if cfg.use_interpolation {
        total += cfg.mse_weight * mse_term;
    }
    Ok(LossBreakdown {
        hard,
        soft,
        mse: mse_term,
        total,
    })
}
