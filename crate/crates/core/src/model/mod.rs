//! Multi-output day-ahead regressors.
//!
//! Every model maps one sample of input features to the `T` values of the
//! next day. Linear and forest models treat each output step as its own
//! model; the CNN predicts all steps at once.

mod cnn;
mod features;
mod forest;
mod linear;
mod normalize;

pub use cnn::{fit_cnn, parameter_count, CnnConfig, CnnModel, EpochLoss, Topology};
pub use features::FeatureTensor;
pub use forest::{fit_forest_mimo, fit_random_forest_step, ForestConfig, ForestMimo, RandomForest, RegressionTree};
pub use linear::{fit_mimo_linear, LinearMimoModel};
pub use normalize::{denormalize, fit_normalizer, normalize, NormalizationParams};

use serde::{Deserialize, Serialize};

use crate::data::DailyMatrix;
use crate::error::{shape_err, Error, Result};

/// Yesterday's row as today's forecast.
pub fn persistence_forecast(matrix: &DailyMatrix, day: usize) -> Result<Vec<f64>> {
    if day == 0 {
        return Err(Error::NoHistory(day));
    }
    if day > matrix.n_days() {
        return Err(shape_err(format!("day {day} is past the end of {} days", matrix.n_days())));
    }
    Ok(matrix.row(day - 1).to_vec())
}

/// Any fitted regressor behind one prediction interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedModel {
    /// Echoes the single-channel input day.
    Persistence { n_steps: usize },
    Linear(LinearMimoModel),
    Forest(ForestMimo),
    Cnn(CnnModel),
}

impl FittedModel {
    /// One output row per sample.
    pub fn predict(&self, x: &FeatureTensor) -> Result<Vec<Vec<f64>>> {
        let out = match self {
            FittedModel::Persistence { n_steps } => {
                x.check_shape(*n_steps, 1)?;
                x.rows().map(<[f64]>::to_vec).collect()
            }
            FittedModel::Linear(m) => x.rows().map(|r| m.predict(r)).collect::<Result<Vec<_>>>()?,
            FittedModel::Forest(m) => x.rows().map(|r| m.predict(r)).collect::<Result<Vec<_>>>()?,
            FittedModel::Cnn(m) => m.predict(x)?,
        };
        if out.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch: 0 });
        }
        Ok(out)
    }

    /// Fitted regressors: one per output step for linear and forest
    /// models, one per network, none for persistence.
    pub fn fitted_count(&self) -> usize {
        match self {
            FittedModel::Persistence { .. } => 0,
            FittedModel::Cnn(_) => 1,
            FittedModel::Linear(m) => m.n_outputs(),
            FittedModel::Forest(m) => m.forests().len(),
        }
    }
}
