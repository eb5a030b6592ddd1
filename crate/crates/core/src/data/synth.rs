//! Synthetic PV generation for desk-scale experiments.
//!
//! Each value is `capacity · season(d) · bell(t) · cloud(s, d, t)`:
//!
//! * `bell(t) = sin²(π t / (T-1))`, exactly zero at the first and last step;
//! * `season(d) = (1 + A cos(2π (doy - 355) / 365.25)) / (1 + A)`, peaking
//!   in the southern-hemisphere summer;
//! * `cloud` is a clipped multiplicative factor in `[0, 1]`. A regional
//!   AR(1) weather index shared by all sites is mixed with a per-site daily
//!   draw and a small per-step flicker, all scaled by the noise level. With
//!   noise `0` the factor is exactly `1`.

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::matrix::{DailyMatrix, STEPS_PER_DAY};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub const MIN_SYNTH_DAYS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub capacity_mw: f64,
    pub cloud_noise: f64,
    pub seasonal_amplitude: f64,
    pub start: NaiveDate,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            capacity_mw: 100.0,
            cloud_noise: 0.3,
            seasonal_amplitude: 0.3,
            start: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
        }
    }
}

const REGIONAL_PERSISTENCE: f64 = 0.3;

pub fn bell(t: usize, steps: usize) -> f64 {
    if t == 0 || t + 1 >= steps {
        return 0.0;
    }
    let s = (std::f64::consts::PI * t as f64 / (steps - 1) as f64).sin();
    s * s
}

pub fn season(date: NaiveDate, amplitude: f64) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * (date.ordinal() as f64 - 355.0) / 365.25;
    (1.0 + amplitude * phase.cos()) / (1.0 + amplitude)
}

/// Noise-free value of step `t` on `date`.
pub fn clear_sky(date: NaiveDate, t: usize, params: &SynthParams) -> f64 {
    params.capacity_mw * season(date, params.seasonal_amplitude) * bell(t, STEPS_PER_DAY)
}

/// `sites` matrices of `days` days each, deterministic in `seed`.
pub fn synthesize_pv(days: usize, sites: usize, seed: u64, params: &SynthParams) -> Result<Vec<DailyMatrix>> {
    if days < MIN_SYNTH_DAYS {
        return Err(Error::Config(format!(
            "synthetic data needs at least {MIN_SYNTH_DAYS} days, got {days}"
        )));
    }
    if sites == 0 {
        return Err(Error::Config("synthetic data needs at least one site".into()));
    }
    if !(params.capacity_mw > 0.0) || params.cloud_noise < 0.0 || !(0.0..1.0).contains(&params.seasonal_amplitude) {
        return Err(Error::Config(format!("invalid synthetic parameters {params:?}")));
    }

    let mut regional_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "synth", u64::MAX));
    let mut regional = Vec::with_capacity(days);
    let mut r: f64 = StandardNormal.sample(&mut regional_rng);
    let innovation = (1.0 - REGIONAL_PERSISTENCE * REGIONAL_PERSISTENCE).sqrt();
    for _ in 0..days {
        regional.push(r);
        let e: f64 = StandardNormal.sample(&mut regional_rng);
        r = REGIONAL_PERSISTENCE * r + innovation * e;
    }

    let dates: Vec<NaiveDate> = params.start.iter_days().take(days).collect();
    (0..sites)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "synth", s as u64));
            let rows = dates
                .iter()
                .zip(&regional)
                .map(|(date, reg)| {
                    let local: f64 = StandardNormal.sample(&mut rng);
                    let transmittance = (1.0 - params.cloud_noise * (0.8 * reg + 0.6 * local).abs()).clamp(0.0, 1.0);
                    (0..STEPS_PER_DAY)
                        .map(|t| {
                            let flicker: f64 = StandardNormal.sample(&mut rng);
                            let cloud = (transmittance * (1.0 + 0.3 * params.cloud_noise * flicker)).clamp(0.0, 1.0);
                            clear_sky(*date, t, params) * cloud
                        })
                        .collect()
                })
                .collect();
            DailyMatrix::new(dates.clone(), rows)
        })
        .collect()
}
