use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::json;
use swtcast::data::{
    load_csv, read_matrix_csv, save_matrix_csv, scada_to_long_csv, step_label, synthesize_pv, write_long_csv,
    fetch_archive, FetchSpec, SynthParams,
};
use swtcast::evaluation::{breakdown, significance, BreakdownBy, MetricsContext};
use swtcast::pipeline::{
    attach_improvement, metrics_json, run_pipeline, run_pipeline_with_model, split_dataset, sweep_settings,
    write_metrics_csv, write_predictions_csv, write_sweep_csv, write_timing_csv, Approach, DailyTransformer,
    PipelineConfig, WaveletConfig,
};
use swtcast::volatility::{volatility_table, write_volatility_csv};
use swtcast::wavelet::{daubechies_filters, iswt, reconstruct_components, swt};

use crate::args::{DecomposeArgs, FetchArgs, ForecastArgs, SweepArgs, SynthArgs, VolatilityArgs};
use crate::config::{ensure, violation, DataSource, ExperimentConfig};
use crate::data::{csv_tables, load_dataset, report_ingestion, schema, HttpTransport};

/// Process exit status of a command that ran to completion.
pub enum Outcome {
    Ok,
    PartialFailure,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn out_dir(cfg: &ExperimentConfig) -> anyhow::Result<PathBuf> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

fn band_names(level: usize) -> Vec<(String, String)> {
    let mut v = vec![(format!("cA_{level}"), format!("A_{level}"))];
    v.extend((1..=level).rev().map(|l| (format!("cD_{l}"), format!("D_{l}"))));
    v
}

fn write_series(path: &Path, values: &[f64]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["index", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn read_series(text: &str) -> anyhow::Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.rsplit(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ if i == 0 => {} // header
            _ => return Err(swtcast::Error::Data(format!("line {}: bad value {field:?}", i + 1)).into()),
        }
    }
    Ok(out)
}

pub fn decompose(cfg: &ExperimentConfig, a: &DecomposeArgs) -> anyhow::Result<Outcome> {
    let wavelet = WaveletConfig {
        order: a.order,
        level: a.level,
        padding: a.padding,
    };
    let f = daubechies_filters(a.order)?;
    if !(1..=4).contains(&a.level) {
        return Err(swtcast::Error::UnsupportedLevel(a.level).into());
    }
    let text = fs::read_to_string(&a.input).with_context(|| format!("cannot read {}", a.input.display()))?;
    let dir = out_dir(cfg)?;
    let names = band_names(a.level);
    let is_matrix = text.lines().next().is_some_and(|h| h.trim_start().to_ascii_lowercase().starts_with("date"));

    let max_err = if is_matrix {
        let matrix = read_matrix_csv(text.as_bytes())?;
        let t = DailyTransformer::new(&wavelet, matrix.steps(), true)?;
        let days = t.transform_all(&matrix)?;
        let mut header = vec!["date".to_string()];
        header.extend((0..matrix.steps()).map(step_label));
        let mut max_err: f64 = 0.0;
        for (b, (band, comp)) in names.iter().enumerate() {
            let mut wb = csv::Writer::from_writer(create(&dir.join(format!("{band}.csv")))?);
            let mut wc = csv::Writer::from_writer(create(&dir.join(format!("{comp}.csv")))?);
            wb.write_record(&header)?;
            wc.write_record(&header)?;
            for d in &days {
                let date = matrix.date(d.day).to_string();
                let comps = d.components.as_ref().context("components missing")?;
                wb.write_record(std::iter::once(date.clone()).chain(d.bands[b].iter().map(f64::to_string)))?;
                wc.write_record(std::iter::once(date).chain(comps[b].iter().map(f64::to_string)))?;
            }
            wb.flush()?;
            wc.flush()?;
        }
        for d in &days {
            let comps = d.components.as_ref().context("components missing")?;
            for (t, x) in matrix.row(d.day).iter().enumerate() {
                let s: f64 = comps.iter().map(|c| c[t]).sum();
                max_err = max_err.max((s - x).abs());
            }
        }
        println!(
            "decomposed {} of {} days with db{} level {} {} padding",
            days.len(),
            matrix.n_days(),
            a.order,
            a.level,
            a.padding
        );
        max_err
    } else {
        let x = read_series(&text)?;
        let coeffs = swt(&x, &f, a.level)?;
        let comps = reconstruct_components(&coeffs, &f)?;
        for ((band, comp), (c, r)) in names.iter().zip(coeffs.bands().zip(comps.components())) {
            write_series(&dir.join(format!("{band}.csv")), c)?;
            write_series(&dir.join(format!("{comp}.csv")), r)?;
        }
        let y = iswt(&coeffs, &f)?;
        x.iter().zip(&y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    println!("reconstruction max error: {max_err:.3e}");
    println!("wrote {} band and {} component files to {}", names.len(), names.len(), dir.display());
    Ok(Outcome::Ok)
}

pub fn forecast(cfg: &ExperimentConfig, a: &ForecastArgs) -> anyhow::Result<Outcome> {
    ensure(cfg.forecast_violations())?;
    let data = load_dataset(&cfg.data, cfg.seed())?;
    let matrix = &data.aggregate;
    let p = &cfg.pipeline;
    let (mut report, forecaster) = run_pipeline_with_model(p, matrix)?;
    let dir = out_dir(cfg)?;

    let mut extra = serde_json::Map::new();
    if a.baseline && p.approach != Approach::Direct {
        let base_cfg = PipelineConfig {
            approach: Approach::Direct,
            wavelet: None,
            ..p.clone()
        };
        let base = run_pipeline(&base_cfg, matrix)?;
        attach_improvement(&mut report, &base);
        let sig = significance(
            &report.predictions,
            &base.predictions,
            &report.actuals,
            &report.dates,
            BreakdownBy::Month,
        )?;
        extra.insert("baseline_mae".into(), json!(base.metrics.mae));
        extra.insert("monthly_rank_sum".into(), json!(sig));
        write_metrics_csv(create(&dir.join("metrics.csv"))?, &[&report, &base])?;
    } else {
        write_metrics_csv(create(&dir.join("metrics.csv"))?, &[&report])?;
    }

    write_predictions_csv(create(&dir.join("predictions.csv"))?, &report)?;
    let mut metrics = metrics_json(&report);
    if let Some(obj) = metrics.as_object_mut() {
        obj.extend(extra);
    }
    fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&metrics)? + "\n")?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;

    let (train, _) = split_dataset(matrix, p.train_days)?;
    let ctx = MetricsContext::from_training(&train)?;
    let mut w = csv::Writer::from_writer(create(&dir.join("breakdown.csv"))?);
    w.write_record(["by", "label", "n_values", "mae", "rmse", "mre"])?;
    for by in [BreakdownBy::Timestep, BreakdownBy::Month] {
        for row in breakdown(&report.predictions, &report.actuals, &report.dates, &ctx, by)? {
            let m = row.metrics.as_ref();
            let f = |g: fn(&swtcast::evaluation::MetricsBundle) -> f64| m.map_or_else(String::new, |m| g(m).to_string());
            w.write_record([
                format!("{by:?}").to_lowercase(),
                row.label,
                row.n_values.to_string(),
                f(|m| m.mae),
                f(|m| m.rmse),
                f(|m| m.mre),
            ])?;
        }
    }
    w.flush()?;

    if let Some(path) = &a.save_model {
        forecaster.save(path)?;
        println!("saved model to {}", path.display());
    }
    let m = &report.metrics;
    println!(
        "{}: {} test days, MAE {:.4}, RMSE {:.4}, MRE {:.3}%, fitted models {}, {:.3} s",
        report.label,
        report.test_days.len(),
        m.mae,
        m.rmse,
        m.mre,
        report.fitted_model_count,
        report.wall_time_s
    );
    if let Some(i) = report.improvement_pct {
        println!("improvement over {}: {i:.2}%", p.model);
    }
    println!("reports written to {}", dir.display());
    Ok(Outcome::Ok)
}

pub fn sweep(cfg: &ExperimentConfig, _a: &SweepArgs) -> anyhow::Result<Outcome> {
    ensure(cfg.sweep_violations())?;
    let data = load_dataset(&cfg.data, cfg.seed())?;
    let base = PipelineConfig {
        wavelet: None,
        ..cfg.pipeline.clone()
    };
    let result = sweep_settings(&cfg.grid, &base, &data.aggregate)?;
    for s in &result.skipped {
        log::warn!("skipped {s}");
    }
    let dir = out_dir(cfg)?;
    write_sweep_csv(create(&dir.join("sweep.csv"))?, &result)?;
    write_timing_csv(create(&dir.join("timing.csv"))?, &result)?;
    let failures = result.failures();
    println!(
        "{} cells run, {} baselines, {} skipped as invalid, {} failed; tables in {}",
        result.rows.len(),
        result.baselines.len(),
        result.skipped.len(),
        failures,
        dir.display()
    );
    for row in result.rows.iter().chain(&result.baselines).filter(|r| r.error.is_some()) {
        eprintln!("failed {}: {}", row.config.label(), row.error.as_deref().unwrap_or(""));
    }
    Ok(if failures > 0 { Outcome::PartialFailure } else { Outcome::Ok })
}

pub fn volatility(cfg: &ExperimentConfig, _a: &VolatilityArgs) -> anyhow::Result<Outcome> {
    let v = &cfg.volatility;
    let mut problems = cfg.data_violations();
    if !(v.floor >= 0.0 && v.floor.is_finite()) {
        problems.push(format!("floor must be non-negative, got {}", v.floor));
    }
    if v.first_days == Some(0) {
        problems.push("first_days must be at least 1".into());
    }
    ensure(problems)?;
    let data = load_dataset(&cfg.data, cfg.seed())?;
    let reports = volatility_table(&data.site_refs(), &data.aggregate, v.first_days.unwrap_or(usize::MAX), v.floor)?;
    let dir = out_dir(cfg)?;
    let path = dir.join("volatility.csv");
    write_volatility_csv(create(&path)?, &reports, v.scale)?;
    for r in &reports {
        println!(
            "{:>12}: sigma_{}_{} {:.4}  sigma_{}_{} {:.4}  floored {}",
            r.name,
            r.lag_intra,
            r.window,
            r.sigma_intra * v.scale,
            r.lag_trans,
            r.window,
            r.sigma_trans * v.scale,
            r.floored
        );
    }
    println!("wrote {}", path.display());
    Ok(Outcome::Ok)
}

pub fn synth(cfg: &ExperimentConfig, a: &SynthArgs) -> anyhow::Result<Outcome> {
    let d = &cfg.data;
    let params = SynthParams {
        capacity_mw: a.capacity_mw.unwrap_or(d.synth.capacity_mw),
        cloud_noise: a.cloud_noise.unwrap_or(d.synth.cloud_noise),
        seasonal_amplitude: a.seasonal_amplitude.unwrap_or(d.synth.seasonal_amplitude),
        start: a.start.unwrap_or(d.synth.start),
    };
    let mut eff = cfg.clone();
    eff.data.source = DataSource::Synth;
    eff.data.days = a.days.unwrap_or(d.days);
    eff.data.sites = a.sites.unwrap_or(d.sites);
    eff.data.synth = params.clone();
    ensure(eff.data_violations())?;

    let sites = synthesize_pv(eff.data.days, eff.data.sites, cfg.seed(), &params)?;
    let names: Vec<String> = (1..=sites.len()).map(|i| format!("site_{i}")).collect();
    let refs: Vec<(&str, &swtcast::data::DailyMatrix)> = names.iter().map(String::as_str).zip(&sites).collect();
    let dir = out_dir(cfg)?;
    write_long_csv(create(&dir.join("synth_long.csv"))?, &refs)?;
    let aggregate = swtcast::data::aggregate_sites(&sites)?;
    save_matrix_csv(dir.join("synth_matrix.csv"), &aggregate)?;
    println!(
        "{} days x {} site(s) written to {} (synth_long.csv, synth_matrix.csv)",
        aggregate.n_days(),
        sites.len(),
        dir.display()
    );
    Ok(Outcome::Ok)
}

pub fn fetch(cfg: &ExperimentConfig, a: &FetchArgs) -> anyhow::Result<Outcome> {
    let f = &cfg.fetch;
    let base_url = a.base_url.clone().unwrap_or_else(|| f.base_url.clone());
    let start = a.start.or(f.start);
    let end = a.end.or(f.end).or(start);
    let duids = a.duids.clone().unwrap_or_else(|| f.duids.clone());
    let cache_dir = a
        .cache_dir
        .clone()
        .or_else(|| f.cache_dir.clone())
        .unwrap_or_else(|| PathBuf::from(".swtcast-cache"));

    let mut problems = Vec::new();
    if start.is_none() {
        problems.push("fetch needs a start date".to_string());
    }
    if let (Some(s), Some(e)) = (start, end) {
        if e < s {
            problems.push(format!("end date {e} precedes start date {s}"));
        }
    }
    ensure(problems)?;
    let (start, end) = (start.unwrap(), end.unwrap());

    let mut spec = FetchSpec::new(base_url, start, end, &cache_dir);
    if let Some(t) = a.template.clone().or_else(|| f.template.clone()) {
        if !t.contains("{date}") {
            return Err(violation(format!("file template {t:?} lacks a {{date}} placeholder")));
        }
        spec.file_template = t;
    }
    if let Some(r) = a.retries.or(f.retries) {
        spec.retries = r;
    }
    let files = fetch_archive(&spec, &HttpTransport::new())?;
    let downloaded = files.iter().filter(|c| c.downloaded).count();
    println!(
        "{} file(s) in {} ({} downloaded, {} from cache)",
        files.len(),
        cache_dir.display(),
        downloaded,
        files.len() - downloaded
    );
    if duids.is_empty() {
        return Ok(Outcome::Ok);
    }

    let mut tables = Vec::new();
    for file in &files {
        let bytes = fs::read(&file.path)?;
        if file.path.extension().is_some_and(|e| e.eq_ignore_ascii_case("zip")) {
            tables.extend(csv_tables(&bytes).map_err(|e| swtcast::Error::Data(format!("{}: {e}", file.path.display())))?);
        } else {
            tables.push(String::from_utf8_lossy(&bytes).into_owned());
        }
    }
    let refs: Vec<&str> = tables.iter().map(String::as_str).collect();
    let long = scada_to_long_csv(&refs, &duids)?;
    let dir = out_dir(cfg)?;
    let long_path = dir.join("scada_long.csv");
    fs::write(&long_path, &long)?;

    let mut data_cfg = cfg.data.clone();
    data_cfg.columns = Some(duids.clone());
    let ing = load_csv(&long_path, &schema(&data_cfg))?;
    report_ingestion(&ing);
    let matrices: Vec<_> = ing.sites.iter().map(|s| s.matrix.clone()).collect();
    for s in &ing.sites {
        save_matrix_csv(dir.join(format!("site_{}.csv", s.name)), &s.matrix)?;
    }
    let aggregate = swtcast::data::aggregate_sites(&matrices)?;
    save_matrix_csv(dir.join("aggregate.csv"), &aggregate)?;
    println!(
        "{} complete day(s) for {} unit(s) written to {}",
        aggregate.n_days(),
        ing.sites.len(),
        dir.display()
    );
    Ok(Outcome::Ok)
}
