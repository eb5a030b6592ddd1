//! CSV ingestion and export.
//!
//! Input ("long") layout: a header row, one timestamp column and one MW
//! column per site:
//!
//! ```text
//! timestamp,site_a,site_b
//! 2019-01-01T06:00:00,0.0,0.4
//! 2019-01-01T06:30:00,3.1,2.2
//! ```
//!
//! Timestamps are ISO-8601 local times (`T` or space separator, seconds
//! optional; `YYYY/MM/DD HH:MM:SS` is accepted too). Only samples on the
//! half-hour grid between 06:00 and 19:00 inclusive are kept.
//!
//! Matrix layout: `date,06:00,06:30,...,19:00`, one row per date.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::Serialize;

use super::matrix::{step_label, DailyMatrix, INTERVAL_MINUTES};
use crate::error::{Error, Result};

/// Column layout and daytime window of a long CSV.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub timestamp_column: String,
    /// Site columns to read; `None` reads every other column.
    pub value_columns: Option<Vec<String>>,
    pub window_start: NaiveTime,
    pub window_end: NaiveTime,
    pub interval_minutes: u32,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp_column: "timestamp".into(),
            value_columns: None,
            window_start: super::matrix::day_start(),
            window_end: super::matrix::day_end(),
            interval_minutes: INTERVAL_MINUTES,
        }
    }
}

impl CsvSchema {
    pub fn steps_per_day(&self) -> usize {
        let span = (self.window_end - self.window_start).num_minutes() as u32;
        (span / self.interval_minutes) as usize + 1
    }

    fn slot(&self, t: NaiveTime) -> Option<usize> {
        if t < self.window_start || t > self.window_end {
            return None;
        }
        let minutes = (t.num_seconds_from_midnight() - self.window_start.num_seconds_from_midnight()) / 60;
        if t.second() != 0 || minutes % self.interval_minutes != 0 {
            return None;
        }
        Some((minutes / self.interval_minutes) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedDay {
    pub date: NaiveDate,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Site {
    pub name: String,
    pub matrix: DailyMatrix,
}

/// Result of [`load_csv`]: one matrix per site over the complete days,
/// plus what was dropped.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub sites: Vec<Site>,
    pub rejected: Vec<RejectedDay>,
    /// Negative readings replaced by zero.
    pub clamped_negative: usize,
    /// In-window samples not on the sampling grid.
    pub off_grid: usize,
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    const FORMATS: [&str; 6] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
        "%Y/%m/%d %H:%M:%S",
        "%Y/%m/%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| chrono::DateTime::parse_from_rfc3339(s).ok().map(|d| d.naive_local()))
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Ingested> {
    let file = std::fs::File::open(path)?;
    read_long_csv(file, schema)
}

/// [`load_csv`] over any reader.
pub fn read_long_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ts_idx = headers
        .iter()
        .position(|h| h == schema.timestamp_column)
        .ok_or_else(|| Error::Data(format!("missing timestamp column {:?}", schema.timestamp_column)))?;
    let value_idx: Vec<(String, usize)> = match &schema.value_columns {
        Some(cols) => cols
            .iter()
            .map(|c| {
                headers
                    .iter()
                    .position(|h| h == c)
                    .map(|i| (c.clone(), i))
                    .ok_or_else(|| Error::Data(format!("missing value column {c:?}")))
            })
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != ts_idx)
            .map(|(i, h)| (h.to_string(), i))
            .collect(),
    };
    if value_idx.is_empty() {
        return Err(Error::Data("no value columns".into()));
    }

    let steps = schema.steps_per_day();
    let mut issues = Vec::new();
    let mut days: BTreeMap<NaiveDate, Vec<Vec<Option<f64>>>> = BTreeMap::new();
    let mut last: Option<NaiveDateTime> = None;
    let mut clamped_negative = 0;
    let mut off_grid = 0;

    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                issues.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let Some(ts) = record.get(ts_idx).and_then(parse_timestamp) else {
            issues.push(format!("line {line}: unparseable timestamp {:?}", record.get(ts_idx).unwrap_or("")));
            continue;
        };
        if let Some(prev) = last {
            if ts == prev {
                issues.push(format!("line {line}: duplicate timestamp {ts}"));
                continue;
            }
            if ts < prev {
                issues.push(format!("line {line}: timestamp {ts} goes backwards (after {prev})"));
                continue;
            }
        }
        last = Some(ts);

        let in_window = ts.time() >= schema.window_start && ts.time() <= schema.window_end;
        let Some(slot) = schema.slot(ts.time()) else {
            if in_window {
                off_grid += 1;
            }
            continue;
        };
        let entry = days
            .entry(ts.date())
            .or_insert_with(|| vec![vec![None; steps]; value_idx.len()]);
        for (s, (name, idx)) in value_idx.iter().enumerate() {
            let raw = record.get(*idx).unwrap_or("");
            if raw.is_empty() {
                continue;
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    if v < 0.0 {
                        clamped_negative += 1;
                    }
                    entry[s][slot] = Some(v.max(0.0));
                }
                _ => issues.push(format!("line {line}: column {name:?} holds non-numeric value {raw:?}")),
            }
        }
    }

    if !issues.is_empty() {
        return Err(Error::Data(format!(
            "{} ingestion error(s):\n  {}",
            issues.len(),
            issues.join("\n  ")
        )));
    }

    let mut rejected = Vec::new();
    let mut kept_dates = Vec::new();
    let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); value_idx.len()];
    for (date, sites) in days {
        let missing: Vec<String> = sites
            .iter()
            .zip(&value_idx)
            .filter_map(|(slots, (name, _))| {
                let n = slots.iter().filter(|v| v.is_none()).count();
                (n > 0).then(|| format!("{name}: {n} of {steps} samples missing"))
            })
            .collect();
        if !missing.is_empty() {
            rejected.push(RejectedDay {
                date,
                reason: missing.join("; "),
            });
            continue;
        }
        kept_dates.push(date);
        for (s, slots) in sites.into_iter().enumerate() {
            rows[s].push(slots.into_iter().map(|v| v.unwrap()).collect());
        }
    }

    let sites = value_idx
        .into_iter()
        .zip(rows)
        .map(|((name, _), rows)| {
            Ok(Site {
                name,
                matrix: DailyMatrix::new(kept_dates.clone(), rows)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Ingested {
        sites,
        rejected,
        clamped_negative,
        off_grid,
    })
}

/// Writes site matrices in the long layout read by [`load_csv`].
pub fn write_long_csv<W: Write>(writer: W, sites: &[(&str, &DailyMatrix)]) -> Result<()> {
    let first = sites
        .first()
        .ok_or_else(|| Error::Data("no sites to write".into()))?
        .1;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_string()];
    header.extend(sites.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header)?;
    for d in 0..first.n_days() {
        for t in 0..first.steps() {
            let mut rec = vec![format!("{}T{}:00", first.date(d), step_label(t))];
            rec.extend(sites.iter().map(|(_, m)| m.get(d, t).to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_csv<W: Write>(writer: W, matrix: &DailyMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend((0..matrix.steps()).map(step_label));
    w.write_record(&header)?;
    for d in 0..matrix.n_days() {
        let mut rec = vec![matrix.date(d).to_string()];
        rec.extend(matrix.row(d).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(reader: R) -> Result<DailyMatrix> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let date: NaiveDate = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("line {line}: bad date {:?}", rec.get(0).unwrap_or(""))))?;
        if !seen.insert(date) {
            return Err(Error::Data(format!("line {line}: duplicate date {date}")));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Data(format!("line {line}: bad value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        dates.push(date);
        rows.push(row);
    }
    DailyMatrix::new(dates, rows)
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<DailyMatrix> {
    read_matrix_csv(std::fs::File::open(path)?)
}

pub fn save_matrix_csv(path: impl AsRef<Path>, matrix: &DailyMatrix) -> Result<()> {
    write_matrix_csv(std::fs::File::create(path)?, matrix)
}
