use std::path::Path;
use std::time::Instant;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::config::{Approach, ModelKind, PipelineConfig};
use super::transform::{DailyTransformer, DayTransform};
use crate::data::DailyMatrix;
use crate::error::{shape_err, Error, Result};
use crate::evaluation::{compute_metrics, MetricsBundle, MetricsContext};
use crate::model::{
    denormalize, fit_cnn, fit_forest_mimo, fit_mimo_linear, fit_normalizer, normalize, FeatureTensor, FittedModel,
    NormalizationParams,
};
use crate::seed::derive_seed;

/// Chronological split into the first `train_days` days and the rest.
pub fn split_dataset(matrix: &DailyMatrix, train_days: usize) -> Result<(DailyMatrix, DailyMatrix)> {
    if train_days == 0 || matrix.n_days() <= train_days {
        return Err(Error::Data(format!(
            "{} days cannot be split into {train_days} training days and a non-empty test set",
            matrix.n_days()
        )));
    }
    Ok((matrix.slice(0..train_days), matrix.slice(train_days..matrix.n_days())))
}

/// Outcome of one configuration on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub label: String,
    pub config: PipelineConfig,
    /// Indices of the forecast days in the input matrix.
    pub test_days: Vec<usize>,
    pub dates: Vec<NaiveDate>,
    /// `test_days × T`, MW.
    pub predictions: Vec<Vec<f64>>,
    pub actuals: Vec<Vec<f64>>,
    pub metrics: MetricsBundle,
    /// Per-step regressors fitted (a CNN counts once).
    pub fitted_model_count: usize,
    /// Models fitted per reconstructed component (`DL + 1` under MM, else 1).
    pub component_model_count: usize,
    pub train_samples: usize,
    /// MAE reduction against the same model without wavelet features.
    pub improvement_pct: Option<f64>,
    /// Decomposition, training and prediction.
    pub wall_time_s: f64,
}

/// A fitted model with the scaling it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ComponentModel {
    x_norm: Option<NormalizationParams>,
    y_norm: Option<NormalizationParams>,
    model: FittedModel,
}

impl ComponentModel {
    fn predict(&self, x: &FeatureTensor) -> Result<Vec<Vec<f64>>> {
        let xn = match &self.x_norm {
            Some(p) => x.normalized(p)?,
            None => x.clone(),
        };
        let out = self.model.predict(&xn)?;
        Ok(match &self.y_norm {
            Some(p) => out.iter().map(|r| denormalize(r, p)).collect(),
            None => out,
        })
    }
}

pub const FORECASTER_FORMAT: &str = "swtcast-forecaster";
pub const FORECASTER_VERSION: u32 = 1;

/// Everything needed to forecast from new history: the configuration, the
/// fitted models and their normalization parameters.
///
/// Stored as JSON with fields `format`, `version`, `config`, `steps` and
/// `models` (one per component under MM, otherwise one), where each model
/// holds `x_norm`, `y_norm` (`{min, max}` per feature) and `model` tagged
/// by `kind` (`persistence`, `linear`, `forest`, `cnn`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecaster {
    format: String,
    version: u32,
    config: PipelineConfig,
    steps: usize,
    models: Vec<ComponentModel>,
}

impl Forecaster {
    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn fitted_model_count(&self) -> usize {
        self.models.iter().map(|m| m.model.fitted_count()).sum()
    }

    /// Forecast of the day after the last row of `history`.
    pub fn forecast_next(&self, history: &DailyMatrix) -> Result<Vec<f64>> {
        if history.steps() != self.steps {
            return Err(shape_err(format!(
                "history has {} steps per day, model expects {}",
                history.steps(),
                self.steps
            )));
        }
        let d = history.n_days().checked_sub(1).ok_or(Error::NoHistory(0))?;
        let transform = match &self.config.wavelet {
            Some(w) => {
                let tr = DailyTransformer::new(w, self.steps, self.config.approach == Approach::Mm)?;
                if d < tr.first_day() {
                    return Err(Error::NoHistory(d));
                }
                let padder = tr.padder_for(history, d)?;
                Some(tr.transform(history, d, padder.as_ref())?)
            }
            None => None,
        };
        let inputs = inputs_for_day(&self.config, history, d, transform.as_ref())?;
        let mut total = vec![0.0; self.steps];
        for (m, x) in self.models.iter().zip(&inputs) {
            let x = FeatureTensor::from_samples(self.steps, x.len() / self.steps, &[x])?;
            let p = m.predict(&x)?;
            total.iter_mut().zip(&p[0]).for_each(|(a, v)| *a += v);
        }
        Ok(total)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Forecaster = serde_json::from_str(text)?;
        if f.format != FORECASTER_FORMAT || f.version != FORECASTER_VERSION {
            return Err(Error::Config(format!(
                "unsupported model file {:?} version {} (expected {FORECASTER_FORMAT:?} version {FORECASTER_VERSION})",
                f.format, f.version
            )));
        }
        f.config.validate()?;
        Ok(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Flattened model inputs for input day `d`, one per component model.
fn inputs_for_day(cfg: &PipelineConfig, m: &DailyMatrix, d: usize, t: Option<&DayTransform>) -> Result<Vec<Vec<f64>>> {
    let interleave = |bands: &[Vec<f64>]| -> Vec<f64> {
        (0..m.steps()).flat_map(|s| bands.iter().map(move |b| b[s])).collect()
    };
    let missing = || Error::State(format!("no transform for day {d}"));
    Ok(match cfg.approach {
        Approach::Direct => vec![m.row(d).to_vec()],
        Approach::Mc | Approach::Mi => vec![interleave(&t.ok_or_else(missing)?.bands)],
        Approach::Mm => t
            .ok_or_else(missing)?
            .components
            .clone()
            .ok_or_else(missing)?,
    })
}

/// Targets for input day `d` (i.e. describing day `d + 1`), one per
/// component model.
fn targets_for_day(cfg: &PipelineConfig, m: &DailyMatrix, d: usize, next: Option<&DayTransform>) -> Result<Vec<Vec<f64>>> {
    Ok(match cfg.approach {
        Approach::Mm => next
            .and_then(|t| t.components.clone())
            .ok_or_else(|| Error::State(format!("no components for day {}", d + 1)))?,
        _ => vec![m.row(d + 1).to_vec()],
    })
}

fn fit_component(cfg: &PipelineConfig, kind: ModelKind, index: usize, x: &FeatureTensor, y: &[Vec<f64>]) -> Result<ComponentModel> {
    if kind == ModelKind::Persistence {
        return Ok(ComponentModel {
            x_norm: None,
            y_norm: None,
            model: FittedModel::Persistence { n_steps: x.n_steps() },
        });
    }
    let x_norm = fit_normalizer(&x.rows().collect::<Vec<_>>())?;
    let y_norm = fit_normalizer(y)?;
    let xn = x.normalized(&x_norm)?;
    let yn: Vec<Vec<f64>> = y.iter().map(|r| normalize(r, &y_norm)).collect();
    let rows: Vec<&[f64]> = xn.rows().collect();
    let model = match kind {
        ModelKind::Lr => FittedModel::Linear(fit_mimo_linear(&rows, &yn)?),
        ModelKind::Rf => FittedModel::Forest(fit_forest_mimo(&rows, &yn, &cfg.forest, cfg.seed)?),
        ModelKind::Cnn => {
            let n = xn.samples();
            let n_val = ((n as f64 * cfg.val_fraction).round() as usize).clamp(1, n.saturating_sub(1));
            if n < 2 {
                return Err(Error::Data("CNN training needs at least 2 samples".into()));
            }
            let cut = n - n_val;
            let cnn_cfg = crate::model::CnnConfig {
                topology: cfg.topology(),
                ..cfg.cnn.clone()
            };
            let seed = derive_seed(cfg.seed, "cnn", index as u64);
            FittedModel::Cnn(fit_cnn(
                &cnn_cfg,
                (&xn.slice(0..cut), &yn[..cut]),
                (&xn.slice(cut..n), &yn[cut..]),
                seed,
            )?)
        }
        ModelKind::Persistence => unreachable!(),
    };
    Ok(ComponentModel {
        x_norm: Some(x_norm),
        y_norm: Some(y_norm),
        model,
    })
}

/// Runs one configuration: transforms every day, fits on samples whose
/// target lies in the first `train_days` days and forecasts every later
/// day from the day before it.
pub fn run_pipeline_with_model(cfg: &PipelineConfig, matrix: &DailyMatrix) -> Result<(ForecastReport, Forecaster)> {
    cfg.validate()?;
    let (train, _) = split_dataset(matrix, cfg.train_days)?;
    let ctx = MetricsContext::from_training(&train)?;
    let steps = matrix.steps();
    let started = Instant::now();

    let (transforms, first) = match &cfg.wavelet {
        Some(w) => {
            let tr = DailyTransformer::new(w, steps, cfg.approach == Approach::Mm)?;
            (tr.transform_all(matrix)?, tr.first_day())
        }
        None => (Vec::new(), 0),
    };
    let transform_of = |d: usize| -> Option<&DayTransform> { d.checked_sub(first).and_then(|i| transforms.get(i)) };

    let n_train = cfg.train_days;
    if first + 1 >= n_train {
        return Err(Error::Data(format!(
            "no training samples: first usable day {first}, {n_train} training days"
        )));
    }
    let train_inputs: Vec<usize> = (first..n_train - 1).collect();
    let test_inputs: Vec<usize> = (n_train - 1..matrix.n_days() - 1).collect();

    let n_models = match cfg.approach {
        Approach::Mm => cfg.wavelet.map_or(1, |w| w.n_coeff()),
        _ => 1,
    };
    let mut xs: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_models];
    let mut ys: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_models];
    for &d in &train_inputs {
        let x = inputs_for_day(cfg, matrix, d, transform_of(d))?;
        let y = targets_for_day(cfg, matrix, d, transform_of(d + 1))?;
        for (c, (xv, yv)) in x.into_iter().zip(y).enumerate() {
            xs[c].push(xv);
            ys[c].push(yv);
        }
    }
    let mut test_x: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_models];
    for &d in &test_inputs {
        for (c, xv) in inputs_for_day(cfg, matrix, d, transform_of(d))?.into_iter().enumerate() {
            test_x[c].push(xv);
        }
    }

    let mut models = Vec::with_capacity(n_models);
    let mut predictions = vec![vec![0.0; steps]; test_inputs.len()];
    for c in 0..n_models {
        // under MM only the approximation uses the configured model
        let kind = if c == 0 { cfg.model } else { ModelKind::Lr };
        let n_coeff = xs[c][0].len() / steps;
        let x = FeatureTensor::from_samples(steps, n_coeff, &xs[c])?;
        let model = fit_component(cfg, kind, c, &x, &ys[c])?;
        let p = model.predict(&FeatureTensor::from_samples(steps, n_coeff, &test_x[c])?)?;
        for (acc, row) in predictions.iter_mut().zip(&p) {
            acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
        }
        models.push(model);
    }
    let wall_time_s = started.elapsed().as_secs_f64();

    if predictions.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { epoch: 0 });
    }
    let test_days: Vec<usize> = test_inputs.iter().map(|d| d + 1).collect();
    let actuals: Vec<Vec<f64>> = test_days.iter().map(|&d| matrix.row(d).to_vec()).collect();
    let metrics = compute_metrics(&predictions, &actuals, &ctx)?;
    let forecaster = Forecaster {
        format: FORECASTER_FORMAT.into(),
        version: FORECASTER_VERSION,
        config: cfg.clone(),
        steps,
        models,
    };
    let report = ForecastReport {
        label: cfg.label(),
        config: cfg.clone(),
        dates: test_days.iter().map(|&d| matrix.date(d)).collect(),
        test_days,
        predictions,
        actuals,
        metrics,
        fitted_model_count: forecaster.fitted_model_count(),
        component_model_count: n_models,
        train_samples: train_inputs.len(),
        improvement_pct: None,
        wall_time_s,
    };
    Ok((report, forecaster))
}

pub fn run_pipeline(cfg: &PipelineConfig, matrix: &DailyMatrix) -> Result<ForecastReport> {
    run_pipeline_with_model(cfg, matrix).map(|(r, _)| r)
}

fn run_checked(cfg: &PipelineConfig, matrix: &DailyMatrix, want: Approach) -> Result<ForecastReport> {
    if cfg.approach != want {
        return Err(Error::Config(format!("expected approach {want}, got {}", cfg.approach)));
    }
    run_pipeline(cfg, matrix)
}

/// Coefficients as channels of one model.
pub fn run_mc(cfg: &PipelineConfig, matrix: &DailyMatrix) -> Result<ForecastReport> {
    run_checked(cfg, matrix, Approach::Mc)
}

/// Coefficients as separate inputs of one network.
pub fn run_mi(cfg: &PipelineConfig, matrix: &DailyMatrix) -> Result<ForecastReport> {
    run_checked(cfg, matrix, Approach::Mi)
}

/// One model per component, forecasts summed.
pub fn run_mm(cfg: &PipelineConfig, matrix: &DailyMatrix) -> Result<ForecastReport> {
    run_checked(cfg, matrix, Approach::Mm)
}

/// Fills `improvement_pct` from a run of the same model without wavelets.
pub fn attach_improvement(report: &mut ForecastReport, baseline: &ForecastReport) {
    report.improvement_pct = crate::evaluation::improvement(baseline.metrics.mae, report.metrics.mae);
}
