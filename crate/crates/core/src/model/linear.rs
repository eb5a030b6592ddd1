use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};
use crate::linalg::{least_squares, LinearFit};

/// One ordinary-least-squares model with intercept per output step.
///
/// All outputs share a single factorization of the normal equations.
/// Rank-deficient inputs (constant or duplicated features, fewer samples
/// than features) are handled by a tiny trace-scaled ridge, so fitting
/// never fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMimoModel {
    fit: LinearFit,
}

impl LinearMimoModel {
    pub fn n_features(&self) -> usize {
        self.fit.n_features()
    }

    pub fn n_outputs(&self) -> usize {
        self.fit.n_outputs()
    }

    /// Whether the ridge fallback was needed.
    pub fn regularized(&self) -> bool {
        self.fit.regularized()
    }

    pub fn intercepts(&self) -> &[f64] {
        self.fit.intercepts()
    }

    pub fn weight(&self, feature: usize, output: usize) -> f64 {
        self.fit.weight(feature, output)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(shape_err(format!(
                "{} features for a linear model trained on {}",
                x.len(),
                self.n_features()
            )));
        }
        Ok(self.fit.predict_row(x))
    }
}

pub fn fit_mimo_linear<X: AsRef<[f64]>, Y: AsRef<[f64]>>(x: &[X], y: &[Y]) -> Result<LinearMimoModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(shape_err(format!("{} input rows and {} target rows", x.len(), y.len())));
    }
    let (k, q) = (x[0].as_ref().len(), y[0].as_ref().len());
    if x.iter().any(|r| r.as_ref().len() != k) || y.iter().any(|r| r.as_ref().len() != q) {
        return Err(shape_err("ragged regression rows"));
    }
    Ok(LinearMimoModel {
        fit: least_squares(x, y),
    })
}
