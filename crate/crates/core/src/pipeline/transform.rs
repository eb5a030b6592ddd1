use crate::data::DailyMatrix;
use crate::error::{Error, Result};
use crate::padding::{align_to_swt, pad_lr, pad_rep, padding_plan, LinearPadder, PadMethod, PaddedSignal, PaddingPlan, MIN_PADDER_DAYS};
use crate::wavelet::{daubechies_filters, reconstruct_components, swt, FilterPair};

use super::config::WaveletConfig;

/// Wavelet view of one input day, restricted to that day's samples.
///
/// Bands and components are ordered `A_DL, D_DL, …, D_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DayTransform {
    pub day: usize,
    pub bands: Vec<Vec<f64>>,
    pub components: Option<Vec<Vec<f64>>>,
}

/// Transforms each day from itself, the previous day and a right
/// extension, never reading later days.
///
/// The padded signal is `[day d-1 | day d | extension]`, lengthened to a
/// multiple of `2^DL` by continuing the extension. The
/// extension repeats day `d` (REP) or is a linear next-day prediction
/// fitted on days `0..=d` only (LR).
#[derive(Debug, Clone)]
pub struct DailyTransformer {
    cfg: WaveletConfig,
    filters: FilterPair,
    plan: PaddingPlan,
    components: bool,
}

impl DailyTransformer {
    pub fn new(cfg: &WaveletConfig, steps: usize, components: bool) -> Result<Self> {
        let filters = daubechies_filters(cfg.order)?;
        let plan = padding_plan(steps, steps, &filters, cfg.level)?;
        Ok(Self {
            cfg: *cfg,
            filters,
            plan,
            components,
        })
    }

    pub fn plan(&self) -> &PaddingPlan {
        &self.plan
    }

    /// Length of the signal handed to the transform.
    pub fn padded_len(&self) -> usize {
        align_to_swt(&self.plan)
    }

    /// First day with enough history to be transformed.
    pub fn first_day(&self) -> usize {
        match self.cfg.padding {
            PadMethod::Rep => 1,
            PadMethod::Lr => MIN_PADDER_DAYS - 1,
        }
    }

    pub fn pad(&self, matrix: &DailyMatrix, d: usize, padder: Option<&LinearPadder>) -> Result<PaddedSignal> {
        if d == 0 || d >= matrix.n_days() {
            return Err(Error::NoHistory(d));
        }
        let (prev, core) = (matrix.row(d - 1), matrix.row(d));
        match self.cfg.padding {
            PadMethod::Rep => pad_rep(prev, core, &self.plan),
            PadMethod::Lr => {
                let padder = padder.ok_or_else(|| Error::State("LR padding needs a fitted padder".into()))?;
                pad_lr(padder, prev, core, &self.plan)
            }
        }
    }

    /// Transform of day `d`. Under LR padding `padder` must have been fit
    /// on days `0..=d`.
    pub fn transform(&self, matrix: &DailyMatrix, d: usize, padder: Option<&LinearPadder>) -> Result<DayTransform> {
        let signal = self.pad(matrix, d, padder)?;
        let coeffs = swt(&signal.values, &self.filters, self.cfg.level)?;
        let core = signal.core_off..signal.right_off;
        let bands = coeffs.bands().map(|b| b[core.clone()].to_vec()).collect();
        let components = if self.components {
            let set = reconstruct_components(&coeffs, &self.filters)?;
            Some(set.components().map(|c| c[core.clone()].to_vec()).collect())
        } else {
            None
        };
        Ok(DayTransform { day: d, bands, components })
    }

    /// Padder fitted on days `0..=d`.
    pub fn padder_for(&self, matrix: &DailyMatrix, d: usize) -> Result<Option<LinearPadder>> {
        match self.cfg.padding {
            PadMethod::Rep => Ok(None),
            PadMethod::Lr => {
                let rows: Vec<&[f64]> = (0..=d).map(|i| matrix.row(i)).collect();
                LinearPadder::fit(&rows).map(Some)
            }
        }
    }

    /// Transforms of days `first_day()..n_days`, in order. The LR padder is
    /// grown one day at a time.
    pub fn transform_all(&self, matrix: &DailyMatrix) -> Result<Vec<DayTransform>> {
        let first = self.first_day();
        if matrix.n_days() <= first {
            return Err(Error::Data(format!(
                "{} days are too few to transform (first usable day is {first})",
                matrix.n_days()
            )));
        }
        let mut padder = self.padder_for(matrix, first)?;
        let mut out = Vec::with_capacity(matrix.n_days() - first);
        for d in first..matrix.n_days() {
            if d > first {
                if let Some(p) = padder.as_mut() {
                    p.update(matrix.row(d))?;
                }
            }
            out.push(self.transform(matrix, d, padder.as_ref())?);
        }
        Ok(out)
    }
}

/// Coefficient bands of every transformable day.
pub fn transform_daily(matrix: &DailyMatrix, cfg: &WaveletConfig) -> Result<Vec<DayTransform>> {
    DailyTransformer::new(cfg, matrix.steps(), false)?.transform_all(matrix)
}
