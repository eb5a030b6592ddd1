//! Signal extension before the stationary transform.
//!
//! A day to be decomposed (the core `S`) is preceded by the previous day
//! (`H`) and followed by a right pad of `F + 2^(DL-1) - 1` samples, so the
//! padded length is `P = len(H) + len(S) + F + 2^(DL-1) - 1`. The right pad
//! either repeats the start of the core day ([`PadMethod::Rep`]) or holds a
//! next-day prediction from a [`LinearPadder`] ([`PadMethod::Lr`]).
//!
//! `P` is not always a multiple of `2^DL`, which the transform needs;
//! [`align_to_swt`] rounds it up and the extra samples are produced by the
//! same rule as the rest of the right pad.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{least_squares, LinearFit};
use crate::wavelet::FilterPair;

/// Days needed before a [`LinearPadder`] can be fitted.
pub const MIN_PADDER_DAYS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PadMethod {
    Rep,
    Lr,
}

impl std::fmt::Display for PadMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PadMethod::Rep => "REP",
            PadMethod::Lr => "LR",
        })
    }
}

impl std::str::FromStr for PadMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "REP" | "PAD_REP" => Ok(PadMethod::Rep),
            "LR" | "PAD_LR" => Ok(PadMethod::Lr),
            other => Err(Error::Config(format!("unknown padding method {other:?} (expected REP or LR)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaddingPlan {
    pub len_h: usize,
    pub len_s: usize,
    pub filter_len: usize,
    pub level: usize,
    /// `P`.
    pub total: usize,
    pub right_len: usize,
}

pub fn padding_plan(len_h: usize, len_s: usize, f: &FilterPair, level: usize) -> Result<PaddingPlan> {
    if len_h == 0 || len_s == 0 || level == 0 {
        return Err(Error::Config(format!(
            "padding plan needs positive lengths and level, got H={len_h} S={len_s} DL={level}"
        )));
    }
    let right_len = f.len() + (1usize << (level - 1)) - 1;
    Ok(PaddingPlan {
        len_h,
        len_s,
        filter_len: f.len(),
        level,
        total: len_h + len_s + right_len,
        right_len,
    })
}

/// Smallest length `>= P` divisible by `2^DL`.
pub fn align_to_swt(plan: &PaddingPlan) -> usize {
    let m = 1usize << plan.level;
    plan.total.div_ceil(m) * m
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaddedSignal {
    pub values: Vec<f64>,
    pub left_off: usize,
    pub core_off: usize,
    pub right_off: usize,
    pub method: PadMethod,
}

impl PaddedSignal {
    pub fn core(&self) -> &[f64] {
        &self.values[self.core_off..self.right_off]
    }

    pub fn right(&self) -> &[f64] {
        &self.values[self.right_off..]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_days(prev_day: &[f64], core_day: &[f64], plan: &PaddingPlan) -> Result<()> {
    if prev_day.len() != plan.len_h || core_day.len() != plan.len_s {
        return Err(shape_err(format!(
            "plan expects H={} and S={} samples, got {} and {}",
            plan.len_h,
            plan.len_s,
            prev_day.len(),
            core_day.len()
        )));
    }
    Ok(())
}

fn assemble(prev_day: &[f64], core_day: &[f64], source: &[f64], plan: &PaddingPlan, method: PadMethod) -> PaddedSignal {
    let total = align_to_swt(plan);
    let mut values = Vec::with_capacity(total);
    values.extend_from_slice(prev_day);
    values.extend_from_slice(core_day);
    let right = total - values.len();
    values.extend((0..right).map(|i| source[i % source.len()]));
    PaddedSignal {
        values,
        left_off: 0,
        core_off: plan.len_h,
        right_off: plan.len_h + plan.len_s,
        method,
    }
}

/// Right pad by repetition of the core day.
pub fn pad_rep(prev_day: &[f64], core_day: &[f64], plan: &PaddingPlan) -> Result<PaddedSignal> {
    check_days(prev_day, core_day, plan)?;
    Ok(assemble(prev_day, core_day, core_day, plan, PadMethod::Rep))
}

/// Right pad with the padder's next-day prediction.
pub fn pad_lr(padder: &LinearPadder, prev_day: &[f64], core_day: &[f64], plan: &PaddingPlan) -> Result<PaddedSignal> {
    check_days(prev_day, core_day, plan)?;
    let forecast = padder.predict_next(core_day)?;
    Ok(assemble(prev_day, core_day, &forecast, plan, PadMethod::Lr))
}

/// Next-day linear extrapolator: one least-squares model per time step,
/// each mapping all of the previous day's samples to that step of the
/// following day. Refit from scratch whenever a day is added.
#[derive(Debug, Clone, Default)]
pub struct LinearPadder {
    days: Vec<Vec<f64>>,
    fit: Option<LinearFit>,
}

impl LinearPadder {
    /// Fits on consecutive `days` (at least [`MIN_PADDER_DAYS`]).
    pub fn fit<D: AsRef<[f64]>>(days: &[D]) -> Result<Self> {
        if days.len() < MIN_PADDER_DAYS {
            return Err(Error::State(format!(
                "padder needs {MIN_PADDER_DAYS} days to fit, got {}",
                days.len()
            )));
        }
        let steps = days[0].as_ref().len();
        if days.iter().any(|d| d.as_ref().len() != steps) {
            return Err(shape_err("padder days differ in length"));
        }
        let mut padder = LinearPadder {
            days: days.iter().map(|d| d.as_ref().to_vec()).collect(),
            fit: None,
        };
        padder.refit();
        Ok(padder)
    }

    /// Adds one observed day and refits on every (day, next day) pair.
    pub fn update(&mut self, new_day: &[f64]) -> Result<()> {
        if self.fit.is_none() {
            return Err(Error::State("padder must be fitted before it is updated".into()));
        }
        if new_day.len() != self.days[0].len() {
            return Err(shape_err(format!(
                "padder expects {} samples per day, got {}",
                self.days[0].len(),
                new_day.len()
            )));
        }
        self.days.push(new_day.to_vec());
        self.refit();
        Ok(())
    }

    pub fn is_fitted(&self) -> bool {
        self.fit.is_some()
    }

    /// Number of days seen so far.
    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    /// Full next-day prediction given `day`.
    pub fn predict_next(&self, day: &[f64]) -> Result<Vec<f64>> {
        let fit = self
            .fit
            .as_ref()
            .ok_or_else(|| Error::State("padder used before fitting".into()))?;
        if day.len() != fit.n_features() {
            return Err(shape_err(format!(
                "padder expects {} samples per day, got {}",
                fit.n_features(),
                day.len()
            )));
        }
        Ok(fit.predict_row(day))
    }

    fn refit(&mut self) {
        let x: Vec<Vec<f64>> = self.days[..self.days.len() - 1].to_vec();
        let y: Vec<Vec<f64>> = self.days[1..].to_vec();
        self.fit = Some(least_squares(&x, &y));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::daubechies_filters;

    fn ramp(start: f64) -> Vec<f64> {
        (0..27).map(|i| start + i as f64).collect()
    }

    #[test]
    fn plan_matches_worked_example() {
        let db4 = daubechies_filters(4).unwrap();
        let plan = padding_plan(27, 27, &db4, 1).unwrap();
        assert_eq!(plan.total, 62);
        assert_eq!(plan.right_len, 8);
        let db1 = daubechies_filters(1).unwrap();
        assert_eq!(padding_plan(27, 27, &db1, 1).unwrap().total, 56);
    }

    #[test]
    fn alignment_rounds_up_to_dyadic_multiple() {
        let db4 = daubechies_filters(4).unwrap();
        assert_eq!(align_to_swt(&padding_plan(27, 27, &db4, 1).unwrap()), 62);
        let db1 = daubechies_filters(1).unwrap();
        let p57 = padding_plan(27, 27, &db1, 2).unwrap();
        assert_eq!(p57.total, 57);
        assert_eq!(align_to_swt(&p57), 60);
        let p69 = padding_plan(27, 27, &db4, 4).unwrap();
        assert_eq!(p69.total, 69);
        assert_eq!(align_to_swt(&p69), 80);
    }

    #[test]
    fn zero_lengths_rejected() {
        let db1 = daubechies_filters(1).unwrap();
        assert!(padding_plan(0, 27, &db1, 1).is_err());
    }

    #[test]
    fn rep_repeats_core_start() {
        let db4 = daubechies_filters(4).unwrap();
        let plan = padding_plan(27, 27, &db4, 1).unwrap();
        let prev = ramp(1.0);
        let core = ramp(101.0);
        let p = pad_rep(&prev, &core, &plan).unwrap();
        assert_eq!(p.len(), 62);
        assert_eq!(&p.values[..27], prev.as_slice());
        assert_eq!(p.core(), core.as_slice());
        assert_eq!(p.right(), &core[..8]);
    }

    #[test]
    fn rep_of_constant_days_is_constant() {
        let db2 = daubechies_filters(2).unwrap();
        let plan = padding_plan(27, 27, &db2, 3).unwrap();
        let p = pad_rep(&[5.0; 27], &[5.0; 27], &plan).unwrap();
        assert!(p.values.iter().all(|v| *v == 5.0));
        assert_eq!(p.len() % 8, 0);
    }

    #[test]
    fn rep_rejects_length_mismatch() {
        let db2 = daubechies_filters(2).unwrap();
        let plan = padding_plan(27, 27, &db2, 1).unwrap();
        assert!(matches!(pad_rep(&[0.0; 26], &[0.0; 27], &plan), Err(Error::Shape(_))));
    }

    #[test]
    fn unfitted_padder_is_a_state_error() {
        let db2 = daubechies_filters(2).unwrap();
        let plan = padding_plan(27, 27, &db2, 1).unwrap();
        let padder = LinearPadder::default();
        assert!(matches!(pad_lr(&padder, &[0.0; 27], &[0.0; 27], &plan), Err(Error::State(_))));
        assert!(matches!(LinearPadder::fit(&vec![vec![0.0; 27]; 13]), Err(Error::State(_))));
    }
}
