use chrono::{NaiveDate, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

/// Half-hour samples between 06:00 and 19:00 inclusive.
pub const STEPS_PER_DAY: usize = 27;
pub const INTERVAL_MINUTES: u32 = 30;

pub fn day_start() -> NaiveTime {
    NaiveTime::from_hms_opt(6, 0, 0).unwrap()
}

pub fn day_end() -> NaiveTime {
    NaiveTime::from_hms_opt(19, 0, 0).unwrap()
}

/// `HH:MM` label of step `t` of a day.
pub fn step_label(t: usize) -> String {
    let minutes = day_start().num_seconds_from_midnight() / 60 + t as u32 * INTERVAL_MINUTES;
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

/// `D × T` grid of power values, one row per calendar date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyMatrix {
    dates: Vec<NaiveDate>,
    steps: usize,
    values: Vec<f64>,
}

impl DailyMatrix {
    /// Builds a matrix; rows must share one length and hold finite,
    /// non-negative values.
    pub fn new(dates: Vec<NaiveDate>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if dates.len() != rows.len() {
            return Err(shape_err(format!("{} dates for {} rows", dates.len(), rows.len())));
        }
        let steps = rows.first().map_or(STEPS_PER_DAY, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * steps);
        for (d, row) in rows.iter().enumerate() {
            if row.len() != steps {
                return Err(shape_err(format!("row {d} has {} samples, expected {steps}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Data(format!("row {d} ({}) holds invalid value {v}", dates[d])));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { dates, steps, values })
    }

    /// Consecutive dates starting at `start`.
    pub fn from_rows(start: NaiveDate, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dates = start.iter_days().take(rows.len()).collect();
        Self::new(dates, rows)
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn date(&self, d: usize) -> NaiveDate {
        self.dates[d]
    }

    pub fn row(&self, d: usize) -> &[f64] {
        &self.values[d * self.steps..(d + 1) * self.steps]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.steps)
    }

    pub fn get(&self, d: usize, t: usize) -> f64 {
        self.values[d * self.steps + t]
    }

    pub fn column(&self, t: usize) -> Vec<f64> {
        self.rows().map(|r| r[t]).collect()
    }

    /// Row-major flattening, i.e. the half-hourly series.
    pub fn as_series(&self) -> &[f64] {
        &self.values
    }

    /// Days `range` as a new matrix.
    pub fn slice(&self, range: std::ops::Range<usize>) -> DailyMatrix {
        DailyMatrix {
            dates: self.dates[range.clone()].to_vec(),
            steps: self.steps,
            values: self.values[range.start * self.steps..range.end * self.steps].to_vec(),
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Mean of each step over all days.
    pub fn step_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.steps];
        for r in self.rows() {
            m.iter_mut().zip(r).for_each(|(a, v)| *a += v);
        }
        let n = self.n_days().max(1) as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> DailyMatrix {
        DailyMatrix {
            dates: self.dates.clone(),
            steps: self.steps,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Maps every value given its `(day, step)` position.
    pub fn map_indexed(&self, f: impl Fn(usize, usize, f64) -> f64) -> DailyMatrix {
        DailyMatrix {
            dates: self.dates.clone(),
            steps: self.steps,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| f(i / self.steps, i % self.steps, *v))
                .collect(),
        }
    }
}

/// Element-wise sum of site matrices sharing one calendar.
pub fn aggregate_sites(matrices: &[DailyMatrix]) -> Result<DailyMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::Data("no site matrices to aggregate".into()))?;
    let mut out = first.clone();
    for (i, m) in matrices.iter().enumerate().skip(1) {
        if m.dates != first.dates || m.steps != first.steps {
            return Err(Error::Data(format!("site {i} does not share the calendar of site 0")));
        }
        out.values.iter_mut().zip(&m.values).for_each(|(a, v)| *a += v);
    }
    Ok(out)
}
