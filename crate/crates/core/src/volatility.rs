//! Historical volatility of PV series from logarithmic returns.
//!
//! `ret_t = ln(P_t / P_{t-h})`; the volatility of a window is the
//! sample (N-1) standard deviation of its returns, and the overall figure
//! is the unweighted mean over windows. Intra-day volatility uses `h = 1`
//! inside each day (one window per day); trans-day volatility uses
//! `h = T` on the concatenated series (same step on consecutive days),
//! grouped into windows of `T` consecutive returns.
//!
//! Logarithms need positive power. Samples below a floor (default 0.1 MW)
//! are raised to the floor first and counted.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::DailyMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_FLOOR_MW: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct LogReturns {
    pub values: Vec<f64>,
    /// Samples raised to the floor.
    pub floored: usize,
}

/// Lag-`h` log returns of `series` after flooring; length `len - h`.
pub fn log_returns(series: &[f64], h: usize, floor: f64) -> Result<LogReturns> {
    if h == 0 {
        return Err(Error::Config("log-return lag must be positive".into()));
    }
    let mut floored = 0;
    let mut p = Vec::with_capacity(series.len());
    for (i, &v) in series.iter().enumerate() {
        let x = if v < floor {
            floored += 1;
            floor
        } else {
            v
        };
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain { index: i, value: x });
        }
        p.push(x);
    }
    // the ratio form keeps equal-ratio steps bit-identical
    let values = if h >= p.len() {
        Vec::new()
    } else {
        (h..p.len()).map(|t| (p[t] / p[t - h]).ln()).collect()
    };
    Ok(LogReturns { values, floored })
}

/// Sample standard deviation, accumulated relative to the first value so
/// identical inputs give exactly zero.
fn sample_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let shift = x[0];
    let mean = x.iter().map(|v| v - shift).sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - shift - mean) * (v - shift - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Volatility {
    pub per_window: Vec<f64>,
    pub overall: f64,
    pub skipped_windows: usize,
    pub floored: usize,
}

fn summarize(windows: Vec<f64>, skipped: usize, floored: usize) -> Volatility {
    let overall = if windows.is_empty() {
        f64::NAN
    } else {
        windows.iter().sum::<f64>() / windows.len() as f64
    };
    Volatility {
        per_window: windows,
        overall,
        skipped_windows: skipped,
        floored,
    }
}

fn window_stds(returns: &[f64], window: usize, out: &mut Vec<f64>) -> usize {
    let mut skipped = 0;
    for chunk in returns.chunks(window) {
        if chunk.len() < 2 {
            log::warn!("skipping volatility window with {} return(s)", chunk.len());
            skipped += 1;
        } else {
            out.push(sample_std(chunk));
        }
    }
    skipped
}

/// Volatility of lag-`h` returns over consecutive windows of `window`
/// returns.
pub fn historical_volatility(series: &[f64], h: usize, window: usize, floor: f64) -> Result<Volatility> {
    if window == 0 {
        return Err(Error::Config("volatility window must be positive".into()));
    }
    let r = log_returns(series, h, floor)?;
    let mut windows = Vec::new();
    let skipped = window_stds(&r.values, window, &mut windows);
    Ok(summarize(windows, skipped, r.floored))
}

/// `σ_{1,T}`: lag-1 returns within each day, one window per day.
pub fn intra_day_volatility(matrix: &DailyMatrix, floor: f64) -> Result<Volatility> {
    let mut windows = Vec::new();
    let mut skipped = 0;
    let mut floored = 0;
    for row in matrix.rows() {
        let r = log_returns(row, 1, floor)?;
        floored += r.floored;
        skipped += window_stds(&r.values, matrix.steps(), &mut windows);
    }
    Ok(summarize(windows, skipped, floored))
}

/// `σ_{T,T}`: lag-T returns (same step, consecutive days) in windows of T.
pub fn trans_day_volatility(matrix: &DailyMatrix, floor: f64) -> Result<Volatility> {
    historical_volatility(matrix.as_series(), matrix.steps(), matrix.steps(), floor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityReport {
    pub name: String,
    pub sigma_intra: f64,
    pub sigma_trans: f64,
    pub lag_intra: usize,
    pub lag_trans: usize,
    pub window: usize,
    pub floored: usize,
}

fn report(name: &str, m: &DailyMatrix, floor: f64) -> Result<VolatilityReport> {
    let intra = intra_day_volatility(m, floor)?;
    let trans = trans_day_volatility(m, floor)?;
    Ok(VolatilityReport {
        name: name.to_string(),
        sigma_intra: intra.overall,
        sigma_trans: trans.overall,
        lag_intra: 1,
        lag_trans: m.steps(),
        window: m.steps(),
        floored: intra.floored,
    })
}

/// One report per site plus the aggregate (named `state`), over the first
/// `first_days` days of each series.
pub fn volatility_table(
    sites: &[(&str, &DailyMatrix)],
    aggregate: &DailyMatrix,
    first_days: usize,
    floor: f64,
) -> Result<Vec<VolatilityReport>> {
    let cut = |m: &DailyMatrix| m.slice(0..first_days.min(m.n_days()));
    if sites.iter().any(|(_, m)| m.dates() != aggregate.dates()) {
        return Err(Error::Data("site calendars differ from the aggregate".into()));
    }
    let mut out = sites
        .iter()
        .map(|(n, m)| report(n, &cut(m), floor))
        .collect::<Result<Vec<_>>>()?;
    out.push(report("state", &cut(aggregate), floor)?);
    Ok(out)
}

/// Table with one row per statistic and one column per series; σ values
/// are multiplied by `scale` (100 gives percent).
pub fn write_volatility_csv<W: Write>(writer: W, reports: &[VolatilityReport], scale: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["statistic".to_string()];
    header.extend(reports.iter().map(|r| r.name.clone()));
    w.write_record(&header)?;
    let row = |label: String, f: &dyn Fn(&VolatilityReport) -> String| {
        let mut rec = vec![label];
        rec.extend(reports.iter().map(f));
        rec
    };
    let (h1, h2, win) = reports
        .first()
        .map_or((1, 27, 27), |r| (r.lag_intra, r.lag_trans, r.window));
    w.write_record(row(format!("sigma_{h1}_{win}"), &|r| format!("{:.4}", r.sigma_intra * scale)))?;
    w.write_record(row(format!("sigma_{h2}_{win}"), &|r| format!("{:.4}", r.sigma_trans * scale)))?;
    w.write_record(row("floored_samples".into(), &|r| r.floored.to_string()))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_zero_returns() {
        let r = log_returns(&[5.0; 10], 1, DEFAULT_FLOOR_MW).unwrap();
        assert_eq!(r.values, vec![0.0; 9]);
        let v = historical_volatility(&[5.0; 54], 1, 27, DEFAULT_FLOOR_MW).unwrap();
        assert!(v.per_window.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn geometric_series_has_constant_returns() {
        let x: Vec<f64> = (0..20).map(|t| 3.0 * 1.1f64.powi(t)).collect();
        let r = log_returns(&x, 1, DEFAULT_FLOOR_MW).unwrap();
        assert!(r.values.iter().all(|v| (v - 1.1f64.ln()).abs() < 1e-12));
        let exact: Vec<f64> = (0..40).map(|t| 0.75 * 2f64.powi(t)).collect();
        let v = historical_volatility(&exact, 1, 13, DEFAULT_FLOOR_MW).unwrap();
        assert!(v.per_window.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn lag_equal_to_length_is_empty() {
        assert!(log_returns(&[1.0, 2.0, 3.0], 3, 0.1).unwrap().values.is_empty());
    }

    #[test]
    fn non_positive_without_floor_is_domain_error() {
        assert!(matches!(log_returns(&[1.0, 0.0], 1, 0.0), Err(Error::Domain { index: 1, .. })));
    }

    #[test]
    fn floor_is_counted() {
        let r = log_returns(&[0.0, 1.0, 0.05], 1, 0.1).unwrap();
        assert_eq!(r.floored, 2);
    }

    #[test]
    fn short_trailing_window_is_skipped() {
        let v = historical_volatility(&(1..=12).map(f64::from).collect::<Vec<_>>(), 1, 5, 0.1).unwrap();
        // 11 returns -> windows of 5, 5, 1
        assert_eq!(v.per_window.len(), 2);
        assert_eq!(v.skipped_windows, 1);
    }
}
