use serde::{Deserialize, Serialize};

use crate::data::DailyMatrix;
use crate::error::{shape_err, Error, Result};

/// Training-set statistics the relative metrics are normalized by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsContext {
    /// Maximum power in the training data (`C`), MW.
    pub capacity: f64,
    /// Mean training power at each time step of the day (`x̄_t`), MW.
    pub step_means: Vec<f64>,
}

impl MetricsContext {
    pub fn new(capacity: f64, step_means: Vec<f64>) -> Result<Self> {
        if !(capacity > 0.0) {
            return Err(Error::Data(format!("metric capacity must be positive, got {capacity}")));
        }
        Ok(Self { capacity, step_means })
    }

    pub fn from_training(train: &DailyMatrix) -> Result<Self> {
        Self::new(train.max_value(), train.step_means())
    }

    /// Context restricted to one time step.
    pub fn at_step(&self, t: usize) -> MetricsContext {
        MetricsContext {
            capacity: self.capacity,
            step_means: vec![self.step_means[t]],
        }
    }
}

/// Scores of one forecast. Relative metrics are `None` when their
/// denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub mae: f64,
    pub rmse: f64,
    /// Percent of the training maximum.
    pub mre: f64,
    pub rae: Option<f64>,
    pub rrse: Option<f64>,
    /// Explained-variance ratio `Σ(x̄ - x̂)² / Σ(x̄ - x)²`.
    pub r2: Option<f64>,
    /// `1 - Σ(x̂ - x)² / Σ(x̄ - x)²`.
    pub r2_standard: Option<f64>,
}

#[derive(Default)]
pub(crate) struct ErrorSums {
    pub n: usize,
    pub abs: f64,
    pub sq: f64,
    pub abs_ref: f64,
    pub sq_ref: f64,
    pub sq_explained: f64,
}

impl ErrorSums {
    pub fn add(&mut self, pred: f64, actual: f64, mean: f64) {
        let e = pred - actual;
        self.n += 1;
        self.abs += e.abs();
        self.sq += e * e;
        self.abs_ref += (mean - actual).abs();
        self.sq_ref += (mean - actual) * (mean - actual);
        self.sq_explained += (mean - pred) * (mean - pred);
    }

    pub fn finish(&self, capacity: f64) -> Option<MetricsBundle> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        let mae = self.abs / n;
        let rmse = (self.sq / n).sqrt();
        debug_assert!(mae <= rmse * (1.0 + 1e-12) + 1e-300, "mae {mae} > rmse {rmse}");
        let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);
        Some(MetricsBundle {
            mae,
            rmse,
            mre: mae / capacity * 100.0,
            rae: ratio(self.abs, self.abs_ref),
            rrse: ratio(self.sq, self.sq_ref).map(f64::sqrt),
            r2: ratio(self.sq_explained, self.sq_ref),
            r2_standard: ratio(self.sq, self.sq_ref).map(|r| 1.0 - r),
        })
    }
}

/// Scores `pred` against `actual` (both `D × N`, rows are days).
pub fn compute_metrics<P, A>(pred: &[P], actual: &[A], ctx: &MetricsContext) -> Result<MetricsBundle>
where
    P: AsRef<[f64]>,
    A: AsRef<[f64]>,
{
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(shape_err(format!(
            "{} predicted days vs {} actual days",
            pred.len(),
            actual.len()
        )));
    }
    let mut sums = ErrorSums::default();
    for (p, a) in pred.iter().zip(actual) {
        let (p, a) = (p.as_ref(), a.as_ref());
        if p.len() != a.len() || p.len() != ctx.step_means.len() {
            return Err(shape_err(format!(
                "row of {} predictions vs {} actuals and {} step means",
                p.len(),
                a.len(),
                ctx.step_means.len()
            )));
        }
        for ((pv, av), m) in p.iter().zip(a).zip(&ctx.step_means) {
            sums.add(*pv, *av, *m);
        }
    }
    sums.finish(ctx.capacity)
        .ok_or_else(|| shape_err("no values to score"))
}

/// Percentage MAE reduction from `mae_without` to `mae_with`; `None` for a
/// zero baseline.
pub fn improvement(mae_without: f64, mae_with: f64) -> Option<f64> {
    (mae_without > 0.0).then(|| (mae_without - mae_with) / mae_without * 100.0)
}
