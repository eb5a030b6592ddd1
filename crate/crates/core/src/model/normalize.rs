use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};

/// Feature-wise min–max scaling fitted on training rows.
///
/// A feature whose training minimum equals its maximum maps to `0` and
/// denormalizes back to that constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    pub fn width(&self) -> usize {
        self.min.len()
    }

    /// Indices of constant training features.
    pub fn constant_features(&self) -> Vec<usize> {
        (0..self.min.len()).filter(|&i| self.max[i] == self.min[i]).collect()
    }
}

pub fn fit_normalizer<R: AsRef<[f64]>>(rows: &[R]) -> Result<NormalizationParams> {
    let first = rows.first().ok_or_else(|| shape_err("cannot fit a normalizer on zero rows"))?;
    let width = first.as_ref().len();
    let mut min = vec![f64::INFINITY; width];
    let mut max = vec![f64::NEG_INFINITY; width];
    for r in rows {
        let r = r.as_ref();
        if r.len() != width {
            return Err(shape_err(format!("normalizer rows of width {} and {width}", r.len())));
        }
        for (i, v) in r.iter().enumerate() {
            min[i] = min[i].min(*v);
            max[i] = max[i].max(*v);
        }
    }
    let params = NormalizationParams { min, max };
    let constant = params.constant_features();
    if !constant.is_empty() {
        log::debug!("{} constant feature(s) map to 0: {:?}", constant.len(), constant);
    }
    Ok(params)
}

pub fn normalize(x: &[f64], p: &NormalizationParams) -> Vec<f64> {
    x.iter()
        .zip(p.min.iter().zip(&p.max))
        .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

pub fn denormalize(y: &[f64], p: &NormalizationParams) -> Vec<f64> {
    y.iter()
        .zip(p.min.iter().zip(&p.max))
        .map(|(v, (lo, hi))| v * (hi - lo) + lo)
        .collect()
}
