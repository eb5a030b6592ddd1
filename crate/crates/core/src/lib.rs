//! Stationary-wavelet features for day-ahead PV power forecasting.
//!
//! A day of PV output is 27 half-hourly readings from 06:00 to 19:00. The
//! crate decomposes each day with an undecimated wavelet transform, padded
//! causally so no future day leaks in, and feeds the coefficients to linear,
//! forest or convolutional regressors that predict the whole next day.
//!
//! ```
//! use swtcast::data::{synthesize_pv, SynthParams};
//! use swtcast::padding::PadMethod;
//! use swtcast::pipeline::{run_pipeline, Approach, ModelKind, PipelineConfig, WaveletConfig};
//!
//! let m = synthesize_pv(60, 1, 1, &SynthParams::default())?.remove(0);
//! let w = WaveletConfig { order: 4, level: 2, padding: PadMethod::Rep };
//! let cfg = PipelineConfig { train_days: 45, ..PipelineConfig::new(Approach::Mc, ModelKind::Lr, Some(w)) };
//! let report = run_pipeline(&cfg, &m)?;
//! assert_eq!(report.predictions.len(), 15);
//! # Ok::<(), swtcast::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod evaluation;
mod linalg;
pub mod model;
pub mod padding;
pub mod pipeline;
pub mod seed;
pub mod volatility;
pub mod wavelet;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/wavelets.md")]
    mod wavelets {}
    #[doc = include_str!("../../../book/src/padding.md")]
    mod padding {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/volatility.md")]
    mod volatility {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
