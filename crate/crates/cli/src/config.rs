//! The experiment file and its merge with command-line flags.
//!
//! ```toml
//! seed = 7
//! out = "results"
//!
//! [data]
//! source = "synth"      # synth | csv | matrix
//! days = 400
//! [data.synth]
//! cloud_noise = 0.3
//!
//! [pipeline]
//! approach = "MC"
//! model = "LR"
//! train_days = 300
//! wavelet = { order = 4, level = 2, padding = "REP" }
//!
//! [grid]
//! levels = [1, 2, 3, 4]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use swtcast::data::{SynthParams, MIN_SYNTH_DAYS};
use swtcast::padding::PadMethod;
use swtcast::pipeline::{PipelineConfig, SweepGrid, WaveletConfig};
use swtcast::volatility::DEFAULT_FLOOR_MW;

use crate::args::{DataArgs, PipelineArgs};

/// Every problem found while validating a configuration, reported at once.
#[derive(Debug)]
pub struct ConfigViolations(pub Vec<String>);

impl fmt::Display for ConfigViolations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for v in &self.0 {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigViolations {}

pub fn violation(msg: impl Into<String>) -> anyhow::Error {
    ConfigViolations(vec![msg.into()]).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    #[default]
    Synth,
    Csv,
    Matrix,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    pub path: Option<PathBuf>,
    pub days: usize,
    pub sites: usize,
    pub synth: SynthParams,
    pub timestamp_column: String,
    pub columns: Option<Vec<String>>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synth,
            path: None,
            days: 400,
            sites: 1,
            synth: SynthParams::default(),
            timestamp_column: "timestamp".into(),
            columns: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolatilityConfig {
    pub floor: f64,
    pub first_days: Option<usize>,
    pub scale: f64,
}

impl Default for VolatilityConfig {
    fn default() -> Self {
        Self {
            floor: DEFAULT_FLOOR_MW,
            first_days: None,
            scale: 100.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    pub base_url: String,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub duids: Vec<String>,
    pub cache_dir: Option<PathBuf>,
    pub template: Option<String>,
    pub retries: Option<usize>,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            base_url: "https://nemweb.com.au/Data_Archive/Wholesale_Electricity/MMSDM".into(),
            start: None,
            end: None,
            duids: Vec::new(),
            cache_dir: None,
            template: None,
            retries: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub data: DataConfig,
    pub pipeline: PipelineConfig,
    pub grid: SweepGrid,
    pub volatility: VolatilityConfig,
    pub fetch: FetchConfig,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| violation(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| violation(format!("{}: {e}", path.display())))
    }

    /// Seed in effect: the flag, then the top-level key, then `pipeline.seed`.
    pub fn apply_globals(&mut self, seed: Option<u64>, out: Option<PathBuf>, jobs: Option<usize>) {
        self.seed = seed.or(self.seed).or(Some(self.pipeline.seed));
        self.pipeline.seed = self.seed.unwrap_or(0);
        self.out = out.or(self.out.take());
        self.jobs = jobs.or(self.jobs);
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("swtcast-out"))
    }

    pub fn apply_data(&mut self, a: &DataArgs) {
        let d = &mut self.data;
        if let Some(p) = &a.input {
            d.source = DataSource::Csv;
            d.path = Some(p.clone());
        }
        if let Some(p) = &a.matrix {
            d.source = DataSource::Matrix;
            d.path = Some(p.clone());
        }
        if let Some(n) = a.synth_days {
            d.source = DataSource::Synth;
            d.days = n;
        }
        if let Some(n) = a.sites {
            d.sites = n;
        }
        if let Some(x) = a.cloud_noise {
            d.synth.cloud_noise = x;
        }
        if let Some(c) = &a.timestamp_column {
            d.timestamp_column = c.clone();
        }
        if let Some(c) = &a.columns {
            d.columns = Some(c.clone());
        }
    }

    /// Wavelet approaches without wavelet settings get db4, level 2, REP;
    /// `DIRECT` drops any wavelet settings.
    pub fn apply_pipeline(&mut self, a: &PipelineArgs) {
        let p = &mut self.pipeline;
        if let Some(x) = a.approach {
            p.approach = x;
        }
        if let Some(x) = a.model {
            p.model = x;
        }
        if let Some(x) = a.train_days {
            p.train_days = x;
        }
        if let Some(x) = a.trees {
            p.forest.n_estimators = x;
        }
        if let Some(x) = a.epochs {
            p.cnn.max_epochs = x;
        }
        if p.approach.uses_wavelet() {
            let w = p.wavelet.get_or_insert(WaveletConfig {
                order: 4,
                level: 2,
                padding: PadMethod::Rep,
            });
            w.order = a.order.unwrap_or(w.order);
            w.level = a.level.unwrap_or(w.level);
            w.padding = a.padding.unwrap_or(w.padding);
        } else if a.approach.is_some() {
            p.wavelet = None;
        }
    }

    pub fn data_violations(&self) -> Vec<String> {
        let d = &self.data;
        let mut v = Vec::new();
        match d.source {
            DataSource::Csv | DataSource::Matrix => match &d.path {
                None => v.push(format!("data source {:?} needs a path", d.source)),
                Some(p) if !p.is_file() => v.push(format!("data file {} does not exist", p.display())),
                Some(_) => {}
            },
            DataSource::Synth => {
                if d.days < MIN_SYNTH_DAYS {
                    v.push(format!("synthetic days must be at least {MIN_SYNTH_DAYS}, got {}", d.days));
                }
                if d.sites == 0 {
                    v.push("synthetic sites must be at least 1".into());
                }
                if !(d.synth.capacity_mw > 0.0 && d.synth.capacity_mw.is_finite()) {
                    v.push(format!("capacity_mw must be positive, got {}", d.synth.capacity_mw));
                }
                if !(d.synth.cloud_noise >= 0.0 && d.synth.cloud_noise.is_finite()) {
                    v.push(format!("cloud_noise must be non-negative, got {}", d.synth.cloud_noise));
                }
                if !(0.0..1.0).contains(&d.synth.seasonal_amplitude) {
                    v.push(format!("seasonal_amplitude must be in [0, 1), got {}", d.synth.seasonal_amplitude));
                }
            }
        }
        if self.jobs == Some(0) {
            v.push("jobs must be at least 1".into());
        }
        v
    }

    /// Known-at-parse-time problems of a single forecasting run.
    pub fn forecast_violations(&self) -> Vec<String> {
        let mut v = self.data_violations();
        v.extend(self.pipeline.violations());
        if self.data.source == DataSource::Synth && self.data.days <= self.pipeline.train_days {
            v.push(format!(
                "train_days ({}) must be smaller than the number of days ({})",
                self.pipeline.train_days, self.data.days
            ));
        }
        v
    }

    pub fn sweep_violations(&self) -> Vec<String> {
        let mut v = self.data_violations();
        let g = &self.grid;
        for (name, empty) in [
            ("orders", g.orders.is_empty()),
            ("levels", g.levels.is_empty()),
            ("paddings", g.paddings.is_empty()),
            ("approaches", g.approaches.is_empty()),
            ("models", g.models.is_empty()),
        ] {
            if empty {
                v.push(format!("grid.{name} is empty"));
            }
        }
        if let Some(o) = g.orders.iter().find(|o| !(1..=7).contains(*o)) {
            v.push(format!("grid order {o} is outside 1..=7"));
        }
        if let Some(l) = g.levels.iter().find(|l| !(1..=4).contains(*l)) {
            v.push(format!("grid level {l} is outside 1..=4"));
        }
        if self.pipeline.train_days < 2 {
            v.push("train_days must be at least 2".into());
        }
        if self.data.source == DataSource::Synth && self.data.days <= self.pipeline.train_days {
            v.push(format!(
                "train_days ({}) must be smaller than the number of days ({})",
                self.pipeline.train_days, self.data.days
            ));
        }
        v
    }
}

pub fn ensure(violations: Vec<String>) -> anyhow::Result<()> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ConfigViolations(violations).into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"
            seed = 7
            out = "results"
            [data]
            source = "synth"
            days = 400
            [data.synth]
            cloud_noise = 0.2
            start = "2020-01-01"
            [pipeline]
            approach = "MC"
            model = "LR"
            train_days = 300
            wavelet = { order = 4, level = 2, padding = "REP" }
            [grid]
            levels = [1, 2]
        "#;
        let c: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.pipeline.label(), "LR_MC");
        assert_eq!(c.grid.levels, vec![1, 2]);
        assert_eq!(c.data.synth.cloud_noise, 0.2);
        assert!(c.forecast_violations().is_empty());
    }

    #[test]
    fn all_violations_reported_together() {
        let mut c = ExperimentConfig::default();
        c.data.days = 3;
        c.data.sites = 0;
        c.pipeline.train_days = 1;
        c.pipeline.val_fraction = 2.0;
        assert!(c.forecast_violations().len() >= 4, "{:?}", c.forecast_violations());
    }

    #[test]
    fn flag_seed_wins() {
        let mut c: ExperimentConfig = toml::from_str("seed = 3").unwrap();
        c.apply_globals(Some(9), None, None);
        assert_eq!((c.seed(), c.pipeline.seed), (9, 9));
        let mut c: ExperimentConfig = toml::from_str("seed = 3").unwrap();
        c.apply_globals(None, None, None);
        assert_eq!(c.pipeline.seed, 3);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("sed = 3").is_err());
    }
}
