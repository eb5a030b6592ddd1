use serde::{Deserialize, Serialize};

use super::normalize::{normalize, NormalizationParams};
use crate::error::{shape_err, Result};

/// Model inputs: `samples × n_steps × n_coeff`, stored sample-major with
/// the channel index fastest (`(s · n_steps + t) · n_coeff + c`).
///
/// One sample flattened is therefore the row `[x(t=0,c=0), x(0,1), …]`,
/// which is what the per-step regressors consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTensor {
    samples: usize,
    n_steps: usize,
    n_coeff: usize,
    values: Vec<f64>,
}

impl FeatureTensor {
    pub fn new(samples: usize, n_steps: usize, n_coeff: usize, values: Vec<f64>) -> Result<Self> {
        if n_steps == 0 || n_coeff == 0 {
            return Err(shape_err("feature tensor needs at least one step and one channel"));
        }
        if values.len() != samples * n_steps * n_coeff {
            return Err(shape_err(format!(
                "{} values for {samples} × {n_steps} × {n_coeff}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(shape_err(format!("non-finite feature at flat index {i}")));
        }
        Ok(Self {
            samples,
            n_steps,
            n_coeff,
            values,
        })
    }

    /// Builds a tensor from flattened samples of length `n_steps · n_coeff`.
    pub fn from_samples<R: AsRef<[f64]>>(n_steps: usize, n_coeff: usize, rows: &[R]) -> Result<Self> {
        let width = n_steps * n_coeff;
        let mut values = Vec::with_capacity(rows.len() * width);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != width {
                return Err(shape_err(format!("sample {i} has {} values, expected {width}", r.len())));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), n_steps, n_coeff, values)
    }

    /// Stacks per-channel series: `channels[c][s][t]`.
    pub fn from_channels(channels: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_coeff = channels.len();
        let samples = channels.first().map_or(0, Vec::len);
        let n_steps = channels.first().and_then(|c| c.first()).map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != samples || c.iter().any(|r| r.len() != n_steps)) {
            return Err(shape_err("channels differ in shape"));
        }
        let mut values = Vec::with_capacity(samples * n_steps * n_coeff);
        for s in 0..samples {
            for t in 0..n_steps {
                for ch in channels {
                    values.push(ch[s][t]);
                }
            }
        }
        Self::new(samples, n_steps, n_coeff, values)
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_coeff(&self) -> usize {
        self.n_coeff
    }

    /// Features per flattened sample.
    pub fn width(&self) -> usize {
        self.n_steps * self.n_coeff
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: usize, t: usize, c: usize) -> f64 {
        self.values[(s * self.n_steps + t) * self.n_coeff + c]
    }

    /// Flattened sample `s`.
    pub fn sample(&self, s: usize) -> &[f64] {
        let w = self.width();
        &self.values[s * w..(s + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width())
    }

    /// Samples `range` as a new tensor.
    pub fn slice(&self, range: std::ops::Range<usize>) -> FeatureTensor {
        let w = self.width();
        FeatureTensor {
            samples: range.len(),
            n_steps: self.n_steps,
            n_coeff: self.n_coeff,
            values: self.values[range.start * w..range.end * w].to_vec(),
        }
    }

    /// Samples in the given order.
    pub fn select(&self, idx: &[usize]) -> FeatureTensor {
        let mut values = Vec::with_capacity(idx.len() * self.width());
        for &i in idx {
            values.extend_from_slice(self.sample(i));
        }
        FeatureTensor {
            samples: idx.len(),
            n_steps: self.n_steps,
            n_coeff: self.n_coeff,
            values,
        }
    }

    /// Applies per-feature min–max scaling fitted on flattened samples.
    pub fn normalized(&self, p: &NormalizationParams) -> Result<FeatureTensor> {
        if p.width() != self.width() {
            return Err(shape_err(format!(
                "normalizer of width {} for samples of width {}",
                p.width(),
                self.width()
            )));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for r in self.rows() {
            values.extend(normalize(r, p));
        }
        Ok(FeatureTensor { values, ..*self })
    }

    pub(crate) fn check_shape(&self, n_steps: usize, n_coeff: usize) -> Result<()> {
        if self.n_steps != n_steps || self.n_coeff != n_coeff {
            return Err(shape_err(format!(
                "features of shape ({}, {}) for a model trained on ({n_steps}, {n_coeff})",
                self.n_steps, self.n_coeff
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_index_is_fastest() {
        let a = vec![vec![1.0, 2.0, 3.0]];
        let d = vec![vec![10.0, 20.0, 30.0]];
        let t = FeatureTensor::from_channels(&[a, d]).unwrap();
        assert_eq!(t.sample(0), &[1.0, 10.0, 2.0, 20.0, 3.0, 30.0]);
        assert_eq!(t.get(0, 2, 1), 30.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(FeatureTensor::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(FeatureTensor::new(1, 2, 1, vec![0.0]).is_err());
    }
}
