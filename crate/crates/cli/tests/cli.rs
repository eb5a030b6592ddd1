use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::NaiveDate;
use swtcast::data::{clear_sky, load_matrix_csv, sha256_hex, SynthParams};

fn swtcast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swtcast"))
        .current_dir(dir)
        .env_remove("SWTCAST_CACHE_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = swtcast(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn synth_matrix(dir: &Path, days: usize) -> PathBuf {
    ok(dir, &["synth", "--days", &days.to_string(), "--out", "data"]);
    dir.join("data/synth_matrix.csv")
}

#[test]
fn synth_is_deterministic_and_sized() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth", "--days", "30", "--seed", "4", "--out", "a"]);
    ok(dir, &["synth", "--days", "30", "--seed", "4", "--out", "b"]);
    let a = fs::read(dir.join("a/synth_matrix.csv")).unwrap();
    assert_eq!(a, fs::read(dir.join("b/synth_matrix.csv")).unwrap());
    assert_eq!(load_matrix_csv(dir.join("a/synth_matrix.csv")).unwrap().n_days(), 30);
    ok(dir, &["synth", "--days", "30", "--seed", "5", "--out", "c"]);
    assert_ne!(a, fs::read(dir.join("c/synth_matrix.csv")).unwrap());
}

#[test]
fn forecast_metrics_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let run = |out: &str| {
        ok(dir, &["forecast", "--synth-days", "60", "--train-days", "45", "--approach", "MC", "--model", "RF", "--trees", "4", "--seed", "11", "--out", out]);
        fs::read(dir.join(out).join("metrics.json")).unwrap()
    };
    assert_eq!(run("r1"), run("r2"));
    for f in ["predictions.csv", "metrics.csv", "report.json", "breakdown.csv"] {
        assert!(dir.join("r1").join(f).is_file(), "{f}");
    }
}

#[test]
fn mc_and_mm_share_actuals() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let m = synth_matrix(dir, 60);
    let m = m.to_str().unwrap();
    let actuals = |approach: &str| {
        ok(dir, &["forecast", "--matrix", m, "--train-days", "45", "--approach", approach, "--out", approach]);
        let mut r = csv::Reader::from_path(dir.join(approach).join("predictions.csv")).unwrap();
        r.records().map(|rec| rec.unwrap()[5].to_string()).collect::<Vec<_>>()
    };
    let mc = actuals("MC");
    assert_eq!(mc.len(), 15 * 27);
    assert_eq!(mc, actuals("MM"));
}

#[test]
fn persistence_on_noiseless_data_reports_seasonal_drift() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["forecast", "--synth-days", "50", "--cloud-noise", "0", "--model", "PERSISTENCE", "--train-days", "30", "--out", "p"]);
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("p/metrics.json")).unwrap()).unwrap();
    let mae = metrics["metrics"]["mae"].as_f64().unwrap();

    let params = SynthParams::default();
    let start = params.start;
    let date = |d: usize| start + chrono::Days::new(d as u64);
    let mut sum = 0.0;
    for d in 30..50 {
        for t in 0..27 {
            sum += (clear_sky(date(d), t, &params) - clear_sky(date(d - 1), t, &params)).abs();
        }
    }
    let drift = sum / (20.0 * 27.0);
    assert!((mae - drift).abs() <= 1e-9 * drift.max(1.0), "{mae} vs {drift}");
    assert!(drift > 0.0);
    assert_eq!(metrics["fitted_model_count"], 0);
}

#[test]
fn sweep_grid_rows_and_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = ok(dir, &["sweep", "--synth-days", "50", "--train-days", "40", "--orders", "1,3", "--levels", "1,2", "--paddings", "REP", "--out", "s"]);
    assert!(out.contains("4 cells run"), "{out}");
    let mut r = csv::Reader::from_path(dir.join("s/sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    let cells = rows.iter().filter(|r| &r[1] == "MC").count();
    assert_eq!(cells, 4);
    assert!(rows.iter().any(|r| &r[1] == "DIRECT"));
    assert!(rows.iter().all(|r| &r[17] == "ok"));
    let timing = fs::read_to_string(dir.join("s/timing.csv")).unwrap();
    assert_eq!(timing.lines().count(), 3, "{timing}");
}

#[test]
fn failed_sweep_cells_give_partial_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let m = synth_matrix(dir, 16);
    let text = fs::read_to_string(&m).unwrap();
    let short: String = text.lines().take(15).map(|l| format!("{l}\n")).collect();
    fs::write(dir.join("short.csv"), short).unwrap();
    let out = swtcast(
        dir,
        &["sweep", "--matrix", "short.csv", "--train-days", "12", "--orders", "1", "--levels", "1,2", "--paddings", "REP,LR", "--out", "s"],
    );
    assert_eq!(code(&out), 5, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.join("s/sweep.csv")).unwrap();
    assert_eq!(table.matches(",failed,").count(), 2, "{table}");
}

#[test]
fn volatility_table_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth", "--days", "40", "--sites", "3", "--out", "data"]);
    ok(dir, &["volatility", "--input", "data/synth_long.csv", "--out", "v"]);
    let table = fs::read_to_string(dir.join("v/volatility.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "statistic,site_1,site_2,site_3,state");
    assert!(lines[1].starts_with("sigma_1_27,"));
    assert!(lines[2].starts_with("sigma_27_27,"));
    assert!(lines[3].starts_with("floored_samples,"));

    let mut constant = String::from("date");
    for t in 0..27 {
        constant += &format!(",s{t}");
    }
    constant.push('\n');
    for d in 1..=5 {
        constant += &format!("2020-01-0{d}{}\n", ",5".repeat(27));
    }
    fs::write(dir.join("constant.csv"), constant).unwrap();
    ok(dir, &["volatility", "--matrix", "constant.csv", "--out", "c"]);
    let table = fs::read_to_string(dir.join("c/volatility.csv")).unwrap();
    assert!(table.contains("sigma_1_27,0.0000,0.0000"), "{table}");
    assert!(table.contains("sigma_27_27,0.0000,0.0000"), "{table}");
}

#[test]
fn decompose_series_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("flat.txt"), "value\n".to_string() + &"3.5\n".repeat(32)).unwrap();
    let out = ok(dir, &["decompose", "--input", "flat.txt", "--order", "1", "--level", "1", "--out", "d"]);
    let mut r = csv::Reader::from_path(dir.join("d/cD_1.csv")).unwrap();
    let values: Vec<f64> = r.records().map(|x| x.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(values, vec![0.0; 32]);
    let err: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("reconstruction max error: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 1e-9);

    let bad = swtcast(dir, &["decompose", "--input", "flat.txt", "--level", "5"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("1..=4"));

    fs::write(dir.join("odd.txt"), "1\n2\n3\n").unwrap();
    assert_eq!(code(&swtcast(dir, &["decompose", "--input", "odd.txt", "--level", "1"])), 3);
}

#[test]
fn decompose_matrix_daily() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let m = synth_matrix(dir, 20);
    let out = ok(dir, &["decompose", "--input", m.to_str().unwrap(), "--order", "3", "--level", "2", "--out", "d"]);
    assert!(out.contains("decomposed 19 of 20 days"), "{out}");
    for f in ["cA_2.csv", "cD_2.csv", "cD_1.csv", "A_2.csv", "D_2.csv", "D_1.csv"] {
        assert_eq!(fs::read_to_string(dir.join("d").join(f)).unwrap().lines().count(), 20, "{f}");
    }
}

#[test]
fn config_file_flags_win_and_errors_aggregate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("exp.toml"),
        "seed = 1\n[data]\ndays = 50\n[pipeline]\napproach = \"MC\"\nmodel = \"LR\"\ntrain_days = 40\nwavelet = { order = 2, level = 1, padding = \"REP\" }\n",
    )
    .unwrap();
    ok(dir, &["--config", "exp.toml", "forecast", "--seed", "2", "--level", "2", "--out", "a"]);
    ok(dir, &["forecast", "--synth-days", "50", "--train-days", "40", "--approach", "MC", "--order", "2", "--level", "2", "--seed", "2", "--out", "b"]);
    assert_eq!(fs::read(dir.join("a/metrics.json")).unwrap(), fs::read(dir.join("b/metrics.json")).unwrap());

    fs::write(
        dir.join("bad.toml"),
        "[data]\ndays = 5\n[pipeline]\napproach = \"MI\"\nmodel = \"LR\"\nval_fraction = 1.5\n",
    )
    .unwrap();
    let out = swtcast(dir, &["--config", "bad.toml", "forecast"]);
    assert_eq!(code(&out), 2);
    let msg = String::from_utf8_lossy(&out.stderr);
    for needle in ["at least 16", "MI requires", "val_fraction", "train_days (365)"] {
        assert!(msg.contains(needle), "{needle} missing from {msg}");
    }

    fs::write(dir.join("typo.toml"), "sede = 1\n").unwrap();
    assert_eq!(code(&swtcast(dir, &["--config", "typo.toml", "synth"])), 2);
    assert_eq!(code(&swtcast(dir, &["forecast", "--matrix", "missing.csv"])), 2);
}

fn scada_zip(day: NaiveDate, duids: &[&str]) -> Vec<u8> {
    let mut table = String::from("C,NEMP.WORLD,DISPATCHSCADA\nI,DISPATCH,UNIT_SCADA,1,SETTLEMENTDATE,DUID,SCADAVALUE,LASTCHANGED\n");
    for minute in (6 * 60..=19 * 60).step_by(5) {
        for (k, duid) in duids.iter().enumerate() {
            let ts = format!("{} {:02}:{:02}:00", day.format("%Y/%m/%d"), minute / 60, minute % 60);
            table += &format!("D,DISPATCH,UNIT_SCADA,1,\"{ts}\",{duid},{},\"{ts}\"\n", (k + 1) as f64 * 1.5);
        }
    }
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    w.start_file("PUBLIC_DISPATCHSCADA.CSV", zip::write::SimpleFileOptions::default()).unwrap();
    w.write_all(table.as_bytes()).unwrap();
    w.finish().unwrap().into_inner()
}

#[test]
fn fetch_uses_warm_cache_and_converts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cache = dir.join("cache");
    fs::create_dir_all(&cache).unwrap();
    for day in ["20200101", "20200102"] {
        let bytes = scada_zip(NaiveDate::parse_from_str(day, "%Y%m%d").unwrap(), &["SOLAR1", "SOLAR2"]);
        let name = format!("PUBLIC_DISPATCHSCADA_{day}.zip");
        fs::write(cache.join(&name), &bytes).unwrap();
        fs::write(cache.join(format!("{name}.sha256")), sha256_hex(&bytes)).unwrap();
    }
    // port 9 is closed: any request would fail
    let out = Command::new(env!("CARGO_BIN_EXE_swtcast"))
        .current_dir(dir)
        .env("SWTCAST_CACHE_DIR", &cache)
        .args(["fetch", "--base-url", "http://127.0.0.1:9", "--start", "2020-01-01", "--end", "2020-01-02", "--duids", "SOLAR1,SOLAR2", "--out", "f"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 downloaded, 2 from cache"));
    let agg = load_matrix_csv(dir.join("f/aggregate.csv")).unwrap();
    assert_eq!(agg.n_days(), 2);
    assert!(agg.as_series().iter().all(|v| *v == 4.5));
    assert_eq!(load_matrix_csv(dir.join("f/site_SOLAR2.csv")).unwrap().get(1, 26), 3.0);
}

#[test]
fn fetch_failure_leaves_cache_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = swtcast(
        dir,
        &["fetch", "--base-url", "http://127.0.0.1:9", "--start", "2020-01-01", "--retries", "0", "--cache-dir", "cache"],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let leftovers = fs::read_dir(dir.join("cache")).map(|d| d.count()).unwrap_or(0);
    assert_eq!(leftovers, 0);
}
