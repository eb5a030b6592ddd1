use std::io::{Cursor, Read};
use std::time::Duration;

use anyhow::Context;
use swtcast::data::{aggregate_sites, load_csv, load_matrix_csv, synthesize_pv, CsvSchema, DailyMatrix, Ingested, Transport};

use crate::config::{DataConfig, DataSource};

/// Per-site series and their sum.
pub struct Dataset {
    pub sites: Vec<(String, DailyMatrix)>,
    pub aggregate: DailyMatrix,
}

impl Dataset {
    pub fn site_refs(&self) -> Vec<(&str, &DailyMatrix)> {
        self.sites.iter().map(|(n, m)| (n.as_str(), m)).collect()
    }
}

pub fn schema(cfg: &DataConfig) -> CsvSchema {
    CsvSchema {
        timestamp_column: cfg.timestamp_column.clone(),
        value_columns: cfg.columns.clone(),
        ..Default::default()
    }
}

pub fn report_ingestion(ing: &Ingested) {
    for r in &ing.rejected {
        log::warn!("rejected {}: {}", r.date, r.reason);
    }
    if !ing.rejected.is_empty() {
        eprintln!("{} incomplete or malformed day(s) rejected", ing.rejected.len());
    }
    if ing.clamped_negative > 0 {
        log::info!("{} negative readings clamped to zero", ing.clamped_negative);
    }
}

pub fn load_dataset(cfg: &DataConfig, seed: u64) -> anyhow::Result<Dataset> {
    let sites = match cfg.source {
        DataSource::Synth => synthesize_pv(cfg.days, cfg.sites, seed, &cfg.synth)?
            .into_iter()
            .enumerate()
            .map(|(i, m)| (format!("site_{}", i + 1), m))
            .collect(),
        DataSource::Matrix => {
            let path = cfg.path.as_ref().context("matrix source without a path")?;
            vec![("series".to_string(), load_matrix_csv(path)?)]
        }
        DataSource::Csv => {
            let path = cfg.path.as_ref().context("csv source without a path")?;
            let ing = load_csv(path, &schema(cfg))?;
            report_ingestion(&ing);
            ing.sites.into_iter().map(|s| (s.name, s.matrix)).collect::<Vec<_>>()
        }
    };
    let matrices: Vec<DailyMatrix> = sites.iter().map(|(_, m)| m.clone()).collect();
    let aggregate = aggregate_sites(&matrices)?;
    if aggregate.is_empty() {
        return Err(swtcast::Error::Data("no complete days in the input".into()).into());
    }
    Ok(Dataset { sites, aggregate })
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new() -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> swtcast::Result<Vec<u8>> {
        let net = |e: ureq::Error| swtcast::Error::Network(format!("{url}: {e}"));
        let mut resp = self.agent.get(url).call().map_err(net)?;
        resp.body_mut()
            .with_config()
            .limit(1 << 30)
            .read_to_vec()
            .map_err(net)
    }
}

/// Text of every CSV inside a (possibly nested) ZIP archive.
pub fn csv_tables(bytes: &[u8]) -> anyhow::Result<Vec<String>> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes)).context("not a ZIP archive")?;
    let mut out = Vec::new();
    for i in 0..archive.len() {
        let mut entry = archive.by_index(i)?;
        let name = entry.name().to_ascii_lowercase();
        let mut buf = Vec::new();
        entry.read_to_end(&mut buf)?;
        if name.ends_with(".zip") {
            out.extend(csv_tables(&buf)?);
        } else if name.ends_with(".csv") {
            out.push(String::from_utf8_lossy(&buf).into_owned());
        }
    }
    Ok(out)
}
