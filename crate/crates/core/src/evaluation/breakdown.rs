use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::metrics::{ErrorSums, MetricsBundle, MetricsContext};
use super::wilcoxon::wilcoxon_rank_sum;
use crate::data::step_label;
use crate::error::{shape_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakdownBy {
    Timestep,
    Month,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub label: String,
    pub n_values: usize,
    /// `None` for an empty slice.
    pub metrics: Option<MetricsBundle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub label: String,
    pub p_value: Option<f64>,
    pub significant: Option<bool>,
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

struct Slice {
    label: String,
    /// (day, step) cells in the slice
    cells: Vec<(usize, usize)>,
}

fn months_spanned(dates: &[NaiveDate]) -> Vec<(i32, u32)> {
    let (Some(first), Some(last)) = (dates.iter().min(), dates.iter().max()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let (mut y, mut m) = (first.year(), first.month());
    while (y, m) <= (last.year(), last.month()) {
        out.push((y, m));
        if m == 12 {
            y += 1;
            m = 1;
        } else {
            m += 1;
        }
    }
    out
}

fn slices(days: usize, steps: usize, dates: &[NaiveDate], by: BreakdownBy) -> Vec<Slice> {
    match by {
        BreakdownBy::Timestep => (0..steps)
            .map(|t| Slice {
                label: step_label(t),
                cells: (0..days).map(|d| (d, t)).collect(),
            })
            .collect(),
        BreakdownBy::Month => months_spanned(dates)
            .into_iter()
            .map(|(y, m)| Slice {
                label: format!("{y}-{m:02}"),
                cells: (0..days)
                    .filter(|&d| dates[d].year() == y && dates[d].month() == m)
                    .flat_map(|d| (0..steps).map(move |t| (d, t)))
                    .collect(),
            })
            .collect(),
    }
}

fn check_shapes<P: AsRef<[f64]>, A: AsRef<[f64]>>(pred: &[P], actual: &[A], dates: &[NaiveDate]) -> Result<usize> {
    if pred.len() != actual.len() || pred.len() != dates.len() || pred.is_empty() {
        return Err(shape_err(format!(
            "{} predicted days, {} actual days, {} dates",
            pred.len(),
            actual.len(),
            dates.len()
        )));
    }
    let steps = actual[0].as_ref().len();
    if pred.iter().any(|r| r.as_ref().len() != steps) || actual.iter().any(|r| r.as_ref().len() != steps) {
        return Err(shape_err("rows differ in length"));
    }
    Ok(steps)
}

/// Metrics recomputed over each time step or each calendar month.
pub fn breakdown<P, A>(
    pred: &[P],
    actual: &[A],
    dates: &[NaiveDate],
    ctx: &MetricsContext,
    by: BreakdownBy,
) -> Result<Vec<BreakdownRow>>
where
    P: AsRef<[f64]>,
    A: AsRef<[f64]>,
{
    let steps = check_shapes(pred, actual, dates)?;
    if ctx.step_means.len() != steps {
        return Err(shape_err("metrics context does not match the number of steps"));
    }
    Ok(slices(pred.len(), steps, dates, by)
        .into_iter()
        .map(|s| {
            let mut sums = ErrorSums::default();
            for &(d, t) in &s.cells {
                sums.add(pred[d].as_ref()[t], actual[d].as_ref()[t], ctx.step_means[t]);
            }
            BreakdownRow {
                label: s.label,
                n_values: sums.n,
                metrics: sums.finish(ctx.capacity),
            }
        })
        .collect())
}

/// Rank-sum test of two forecasts per slice. The samples are per-day mean
/// absolute errors of each forecast over the slice's cells.
pub fn significance<P, Q, A>(
    pred_a: &[P],
    pred_b: &[Q],
    actual: &[A],
    dates: &[NaiveDate],
    by: BreakdownBy,
) -> Result<Vec<SignificanceRow>>
where
    P: AsRef<[f64]>,
    Q: AsRef<[f64]>,
    A: AsRef<[f64]>,
{
    let steps = check_shapes(pred_a, actual, dates)?;
    check_shapes(pred_b, actual, dates)?;
    slices(pred_a.len(), steps, dates, by)
        .into_iter()
        .map(|s| {
            let per_day = |pred: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
                let mut acc: Vec<(usize, f64, usize)> = Vec::new();
                for &(d, t) in &s.cells {
                    let e = (pred(d, t) - actual[d].as_ref()[t]).abs();
                    match acc.last_mut() {
                        Some((day, sum, n)) if *day == d => {
                            *sum += e;
                            *n += 1;
                        }
                        _ => acc.push((d, e, 1)),
                    }
                }
                acc.into_iter().map(|(_, s, n)| s / n as f64).collect()
            };
            let a = per_day(&|d, t| pred_a[d].as_ref()[t]);
            let b = per_day(&|d, t| pred_b[d].as_ref()[t]);
            if a.is_empty() {
                return Ok(SignificanceRow {
                    label: s.label,
                    p_value: None,
                    significant: None,
                });
            }
            let p = wilcoxon_rank_sum(&a, &b)?.p_two_sided;
            Ok(SignificanceRow {
                label: s.label,
                p_value: Some(p),
                significant: Some(p <= SIGNIFICANCE_LEVEL),
            })
        })
        .collect()
}
