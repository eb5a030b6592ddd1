use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Approach, ModelKind, PipelineConfig, WaveletConfig};
use super::run::{attach_improvement, run_pipeline, ForecastReport};
use crate::data::DailyMatrix;
use crate::error::{Error, Result};
use crate::padding::PadMethod;

/// Cartesian grid of wavelet settings, approaches and models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub orders: Vec<usize>,
    pub levels: Vec<usize>,
    pub paddings: Vec<PadMethod>,
    pub approaches: Vec<Approach>,
    pub models: Vec<ModelKind>,
    /// Also run each model without wavelets to fill `improvement_pct`.
    pub baseline: bool,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            orders: (1..=7).collect(),
            levels: (1..=4).collect(),
            paddings: vec![PadMethod::Rep, PadMethod::Lr],
            approaches: vec![Approach::Mc],
            models: vec![ModelKind::Lr],
            baseline: true,
        }
    }
}

impl SweepGrid {
    /// Valid cells in grid order (model, approach, order, level, padding)
    /// and descriptions of the combinations that were skipped as invalid.
    pub fn cells(&self, base: &PipelineConfig) -> (Vec<PipelineConfig>, Vec<String>) {
        let mut cells = Vec::new();
        let mut skipped = Vec::new();
        let mut push = |cfg: PipelineConfig| {
            let v = cfg.violations();
            if v.is_empty() {
                cells.push(cfg);
            } else {
                let w = cfg
                    .wavelet
                    .map_or_else(String::new, |w| format!(" db{} DL{} {}", w.order, w.level, w.padding));
                skipped.push(format!("{}{w}: {}", cfg.label(), v.join("; ")));
            }
        };
        for &model in &self.models {
            for &approach in &self.approaches {
                let with = |wavelet| PipelineConfig {
                    approach,
                    model,
                    wavelet,
                    ..base.clone()
                };
                if !approach.uses_wavelet() {
                    push(with(None));
                    continue;
                }
                for &order in &self.orders {
                    for &level in &self.levels {
                        for &padding in &self.paddings {
                            push(with(Some(WaveletConfig { order, level, padding })));
                        }
                    }
                }
            }
        }
        (cells, skipped)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config: PipelineConfig,
    pub report: Option<ForecastReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub label: String,
    pub level: Option<usize>,
    pub padding: Option<PadMethod>,
    pub cells: usize,
    pub mean_wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Wavelet-free runs used for `improvement_pct`.
    pub baselines: Vec<SweepRow>,
    pub skipped: Vec<String>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().chain(&self.baselines).filter(|r| r.error.is_some()).count()
    }

    /// Mean wall time per (model label, level, padding) over successful
    /// cells.
    pub fn timing_means(&self) -> Vec<TimingRow> {
        let mut groups: BTreeMap<(String, Option<usize>, Option<String>), (Vec<f64>, Option<PadMethod>)> = BTreeMap::new();
        for row in &self.rows {
            let Some(r) = &row.report else { continue };
            let w = row.config.wavelet;
            let key = (row.config.label(), w.map(|w| w.level), w.map(|w| w.padding.to_string()));
            let e = groups.entry(key).or_insert((Vec::new(), w.map(|w| w.padding)));
            e.0.push(r.wall_time_s);
        }
        groups
            .into_iter()
            .map(|((label, level, _), (times, padding))| TimingRow {
                label,
                level,
                padding,
                cells: times.len(),
                mean_wall_time_s: times.iter().sum::<f64>() / times.len() as f64,
            })
            .collect()
    }
}

fn run_row(cfg: PipelineConfig, matrix: &DailyMatrix) -> SweepRow {
    match run_pipeline(&cfg, matrix) {
        Ok(r) => SweepRow {
            config: cfg,
            report: Some(r),
            error: None,
        },
        Err(e) => {
            log::warn!("sweep cell {} failed: {e}", cfg.label());
            SweepRow {
                config: cfg,
                report: None,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Runs every valid cell of `grid` on `matrix`, in parallel. Each cell uses
/// `base.seed`, so a one-cell sweep reproduces a single run exactly. Cell
/// failures are recorded and the sweep continues.
pub fn sweep_settings(grid: &SweepGrid, base: &PipelineConfig, matrix: &DailyMatrix) -> Result<SweepResult> {
    let (cells, skipped) = grid.cells(base);
    if cells.is_empty() {
        return Err(Error::Config(format!(
            "sweep grid has no valid cells{}",
            if skipped.is_empty() {
                String::new()
            } else {
                format!(": {}", skipped.join("; "))
            }
        )));
    }
    let mut baseline_cfgs = Vec::new();
    if grid.baseline {
        for &model in &grid.models {
            let direct_in_grid = cells.iter().any(|c| c.model == model && c.approach == Approach::Direct);
            let wavelet_in_grid = cells.iter().any(|c| c.model == model && c.approach.uses_wavelet());
            if wavelet_in_grid && !direct_in_grid {
                baseline_cfgs.push(PipelineConfig {
                    approach: Approach::Direct,
                    model,
                    wavelet: None,
                    ..base.clone()
                });
            }
        }
    }
    let all: Vec<PipelineConfig> = cells.iter().chain(&baseline_cfgs).cloned().collect();
    let mut done: Vec<SweepRow> = all.into_par_iter().map(|c| run_row(c, matrix)).collect();
    let baselines = done.split_off(cells.len());
    let mut rows = done;

    if grid.baseline {
        let reference: Vec<ForecastReport> = rows
            .iter()
            .chain(&baselines)
            .filter(|r| r.config.approach == Approach::Direct)
            .filter_map(|r| r.report.clone())
            .collect();
        for row in rows.iter_mut().filter(|r| r.config.approach.uses_wavelet()) {
            let model = row.config.model;
            if let (Some(rep), Some(base)) = (row.report.as_mut(), reference.iter().find(|b| b.config.model == model)) {
                attach_improvement(rep, base);
            }
        }
    }
    Ok(SweepResult { rows, baselines, skipped })
}
