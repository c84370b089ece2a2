//! Length resampling of logit vectors by linear or natural cubic interpolation.
//!
//! Source sample `i` sits at parameter `i`. Output sample `j` of `m` is
//! evaluated at `j * (n - 1) / (m - 1)`. The segment index and the fractional
//! offset are computed in integer arithmetic, so targets that land on a
//! source node reproduce that node exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pre-softmax scores, guaranteed finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "non-finite logit {} at position {pos}",
                values[pos]
            )));
        }
        Ok(LogitVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<'de> Deserialize<'de> for LogitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        LogitVector::new(values).map_err(serde::de::Error::custom)
    }
}

impl std::ops::Deref for LogitVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linear,
    #[default]
    Cubic,
}

/// Resamples `v` to `target_len` points.
///
/// A single source sample is extended as a constant. Cubic interpolation of
/// two samples falls back to linear. A single target sample takes `v[0]`.
pub fn resample(v: &[f64], target_len: usize, method: Method) -> Result<Vec<f64>> {
    if target_len == 0 {
        return Err(Error::argument("target length must be at least 1"));
    }
    if v.is_empty() {
        return Err(Error::argument("cannot resample an empty vector"));
    }
    if let Some(pos) = v.iter().position(|x| x.is_nan()) {
        return Err(Error::contract(format!("NaN at position {pos}")));
    }
    let n = v.len();
    if target_len == n {
        return Ok(v.to_vec());
    }
    if n == 1 {
        return Ok(vec![v[0]; target_len]);
    }
    if target_len == 1 {
        return Ok(vec![v[0]]);
    }

    let second = match method {
        Method::Cubic if n > 2 => Some(natural_second_derivatives(v)),
        _ => None,
    };
    let denom = target_len - 1;
    let out = (0..target_len)
        .map(|j| {
            let num = j * (n - 1);
            let (seg, rem) = (num / denom, num % denom);
            if rem == 0 {
                return v[seg];
            }
            let b = rem as f64 / denom as f64;
            let a = 1.0 - b;
            let linear = a * v[seg] + b * v[seg + 1];
            match &second {
                Some(m) => linear + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) / 6.0,
                None => linear,
            }
        })
        .collect();
    Ok(out)
}

/// Second derivatives of the natural cubic spline through `y` at unit spacing.
///
/// Interior rows read `m[i-1] + 4 m[i] + m[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1])`
/// with `m[0] = m[n-1] = 0`; solved with the Thomas algorithm.
fn natural_second_derivatives(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    let interior = n - 2;
    let mut c = vec![0.0; interior];
    let mut d = vec![0.0; interior];
    for k in 0..interior {
        let i = k + 1;
        let rhs = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
        if k == 0 {
            c[k] = 1.0 / 4.0;
            d[k] = rhs / 4.0;
        } else {
            let w = 4.0 - c[k - 1];
            c[k] = 1.0 / w;
            d[k] = (rhs - d[k - 1]) / w;
        }
    }
    for k in (0..interior).rev() {
        let next = if k + 1 < interior { m[k + 2] } else { 0.0 };
        m[k + 1] = d[k] - c[k] * next;
    }
    m
}
