//! CSV and JSON views of forecast reports.
//!
//! * predictions CSV: `date,day,step,label,predicted,actual`, one row per
//!   forecast day and step;
//! * metrics CSV: one row per configuration (see [`METRICS_HEADER`]);
//! * sweep CSV: the metrics columns plus `status` and `error`;
//! * timing CSV: `label,level,padding,cells,mean_wall_time_s`.
//!
//! Undefined metrics are written as empty fields.

use std::io::Write;

use serde_json::{json, Value};

use super::run::ForecastReport;
use super::sweep::{SweepResult, SweepRow};
use crate::data::step_label;
use crate::error::Result;

pub const METRICS_HEADER: [&str; 17] = [
    "label",
    "approach",
    "model",
    "wavelet",
    "level",
    "padding",
    "mae",
    "rmse",
    "rae",
    "mre",
    "rrse",
    "r2",
    "r2_standard",
    "improvement_pct",
    "fitted_models",
    "component_models",
    "wall_time_s",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn metrics_record(r: &ForecastReport) -> Vec<String> {
    let c = &r.config;
    let w = c.wavelet;
    let m = &r.metrics;
    vec![
        r.label.clone(),
        c.approach.to_string(),
        c.model.to_string(),
        w.map_or_else(String::new, |w| format!("db{}", w.order)),
        w.map_or_else(String::new, |w| w.level.to_string()),
        w.map_or_else(String::new, |w| w.padding.to_string()),
        m.mae.to_string(),
        m.rmse.to_string(),
        opt(m.rae),
        m.mre.to_string(),
        opt(m.rrse),
        opt(m.r2),
        opt(m.r2_standard),
        opt(r.improvement_pct),
        r.fitted_model_count.to_string(),
        r.component_model_count.to_string(),
        r.wall_time_s.to_string(),
    ]
}

pub fn write_predictions_csv<W: Write>(writer: W, report: &ForecastReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "day", "step", "label", "predicted", "actual"])?;
    for (i, (p, a)) in report.predictions.iter().zip(&report.actuals).enumerate() {
        for (t, (pv, av)) in p.iter().zip(a).enumerate() {
            w.write_record([
                report.dates[i].to_string(),
                report.test_days[i].to_string(),
                t.to_string(),
                step_label(t),
                pv.to_string(),
                av.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_csv<W: Write>(writer: W, reports: &[&ForecastReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRICS_HEADER)?;
    for r in reports {
        w.write_record(metrics_record(r))?;
    }
    w.flush()?;
    Ok(())
}

fn sweep_record(row: &SweepRow) -> Vec<String> {
    match &row.report {
        Some(r) => {
            let mut rec = metrics_record(r);
            rec.extend(["ok".to_string(), String::new()]);
            rec
        }
        None => {
            let c = &row.config;
            let w = c.wavelet;
            let mut rec = vec![
                c.label(),
                c.approach.to_string(),
                c.model.to_string(),
                w.map_or_else(String::new, |w| format!("db{}", w.order)),
                w.map_or_else(String::new, |w| w.level.to_string()),
                w.map_or_else(String::new, |w| w.padding.to_string()),
            ];
            rec.resize(METRICS_HEADER.len(), String::new());
            rec.extend(["failed".to_string(), row.error.clone().unwrap_or_default()]);
            rec
        }
    }
}

/// One row per sweep cell, followed by the wavelet-free baselines.
pub fn write_sweep_csv<W: Write>(writer: W, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = METRICS_HEADER.to_vec();
    header.extend(["status", "error"]);
    w.write_record(&header)?;
    for row in sweep.rows.iter().chain(&sweep.baselines) {
        w.write_record(sweep_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing_csv<W: Write>(writer: W, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label", "level", "padding", "cells", "mean_wall_time_s"])?;
    for t in sweep.timing_means() {
        w.write_record([
            t.label,
            t.level.map_or_else(String::new, |l| l.to_string()),
            t.padding.map_or_else(String::new, |p| p.to_string()),
            t.cells.to_string(),
            t.mean_wall_time_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Report summary without timing, stable across reruns.
pub fn metrics_json(report: &ForecastReport) -> Value {
    json!({
        "label": report.label,
        "config": report.config,
        "test_days": report.test_days.len(),
        "first_test_date": report.dates.first(),
        "last_test_date": report.dates.last(),
        "train_samples": report.train_samples,
        "metrics": report.metrics,
        "improvement_pct": report.improvement_pct,
        "fitted_model_count": report.fitted_model_count,
        "component_model_count": report.component_model_count,
    })
}
