//! Day-ahead forecasting runs: daily wavelet transformation without
//! look-ahead, the MM / MC / MI architectures, train/test protocol,
//! parameter sweeps and report export.
//!
//! A sample pairs input day `d` with target day `d + 1`. Samples whose
//! target falls inside the first `train_days` days train the models; every
//! later day is forecast from the day before it.

mod config;
mod report;
mod run;
mod sweep;
mod transform;

pub use config::{Approach, ModelKind, PipelineConfig, WaveletConfig};
pub use report::{
    metrics_json, write_metrics_csv, write_predictions_csv, write_sweep_csv, write_timing_csv, METRICS_HEADER,
};
pub use run::{
    attach_improvement, run_mc, run_mi, run_mm, run_pipeline, run_pipeline_with_model, split_dataset, ForecastReport,
    Forecaster, FORECASTER_FORMAT, FORECASTER_VERSION,
};
pub use sweep::{sweep_settings, SweepGrid, SweepResult, SweepRow, TimingRow};
pub use transform::{transform_daily, DailyTransformer, DayTransform};
