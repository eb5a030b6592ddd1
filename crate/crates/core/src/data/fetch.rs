//! Cached download of daily dispatch archives.
//!
//! Cache layout: `<cache_dir>/<file name>` holds the raw archive and
//! `<cache_dir>/<file name>.sha256` its hex SHA-256. A file whose sidecar
//! exists is never downloaded again; its checksum is verified instead.
//! Downloads land in `<file name>.part` and are renamed into place only
//! once complete, so a failed request leaves nothing behind.
//!
//! The HTTP client is abstracted behind [`Transport`]; the parsing of
//! the raw SCADA tables into the long CSV layout is [`scada_to_long_csv`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{NaiveDate, Timelike};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::csv_io::parse_timestamp;
use crate::error::{Error, Result};

/// Minimal blocking HTTP GET.
pub trait Transport: Sync {
    fn get(&self, url: &str) -> Result<Vec<u8>>;
}

#[derive(Debug, Clone)]
pub struct FetchSpec {
    pub base_url: String,
    /// File name pattern; `{date}` is replaced by `YYYYMMDD`.
    pub file_template: String,
    pub start: NaiveDate,
    /// Inclusive.
    pub end: NaiveDate,
    pub cache_dir: PathBuf,
    pub retries: usize,
    pub backoff: Duration,
    pub max_in_flight: usize,
}

impl FetchSpec {
    pub fn new(base_url: impl Into<String>, start: NaiveDate, end: NaiveDate, cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            base_url: base_url.into(),
            file_template: "PUBLIC_DISPATCHSCADA_{date}.zip".into(),
            start,
            end,
            cache_dir: cache_dir.into(),
            retries: 3,
            backoff: Duration::from_millis(500),
            max_in_flight: 4,
        }
    }

    pub fn file_names(&self) -> Vec<String> {
        self.start
            .iter_days()
            .take_while(|d| *d <= self.end)
            .map(|d| self.file_template.replace("{date}", &d.format("%Y%m%d").to_string()))
            .collect()
    }

    fn url(&self, name: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedFile {
    pub path: PathBuf,
    pub sha256: String,
    /// False when served from the cache.
    pub downloaded: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sha256");
    PathBuf::from(s)
}

/// Downloads every archive in the date range that is not cached yet.
pub fn fetch_archive(spec: &FetchSpec, transport: &dyn Transport) -> Result<Vec<CachedFile>> {
    if !(spec.base_url.starts_with("http://") || spec.base_url.starts_with("https://")) {
        return Err(Error::Config(format!("base URL {:?} is not http(s)", spec.base_url)));
    }
    if spec.end < spec.start {
        return Err(Error::Config(format!("empty date range {}..={}", spec.start, spec.end)));
    }
    std::fs::create_dir_all(&spec.cache_dir)?;
    let names = spec.file_names();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.max_in_flight.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| names.par_iter().map(|n| fetch_one(spec, transport, n)).collect())
}

fn fetch_one(spec: &FetchSpec, transport: &dyn Transport, name: &str) -> Result<CachedFile> {
    let path = spec.cache_dir.join(name);
    let side = sidecar(&path);
    if path.exists() && side.exists() {
        let expected = std::fs::read_to_string(&side)?.trim().to_string();
        let actual = sha256_hex(&std::fs::read(&path)?);
        if expected != actual {
            return Err(Error::Integrity(format!(
                "{} has checksum {actual}, sidecar says {expected}",
                path.display()
            )));
        }
        return Ok(CachedFile {
            path,
            sha256: actual,
            downloaded: false,
        });
    }

    let url = spec.url(name);
    let mut attempt = 0;
    let bytes = loop {
        match transport.get(&url) {
            Ok(b) => break b,
            Err(e) if attempt + 1 >= spec.retries.max(1) => {
                return Err(Error::Network(format!("{url}: giving up after {} attempt(s): {e}", attempt + 1)))
            }
            Err(e) => {
                log::warn!("{url}: attempt {} failed: {e}", attempt + 1);
                std::thread::sleep(spec.backoff * 2u32.pow(attempt as u32));
                attempt += 1;
            }
        }
    };

    let digest = sha256_hex(&bytes);
    let mut part = path.as_os_str().to_owned();
    part.push(".part");
    let part = PathBuf::from(part);
    std::fs::write(&part, &bytes)?;
    std::fs::rename(&part, &path)?;
    std::fs::write(&side, format!("{digest}\n"))?;
    Ok(CachedFile {
        path,
        sha256: digest,
        downloaded: true,
    })
}

/// Converts `UNIT_SCADA` tables (the `C/I/D` record format of the dispatch
/// archives) into the long CSV layout, one column per requested unit.
///
/// Only readings stamped on the half hour are kept; other five-minute
/// readings are dropped. Timestamps where a unit has no reading are left
/// blank, which [`super::load_csv`] then reports as an incomplete day.
pub fn scada_to_long_csv(tables: &[&str], duids: &[String]) -> Result<String> {
    let wanted: BTreeSet<&str> = duids.iter().map(String::as_str).collect();
    let mut readings: BTreeMap<chrono::NaiveDateTime, BTreeMap<String, f64>> = BTreeMap::new();

    for table in tables {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(table.as_bytes());
        let mut columns: Option<(usize, usize, usize)> = None;
        for rec in rdr.records() {
            let rec = rec?;
            match (rec.get(0), rec.get(1), rec.get(2)) {
                (Some("I"), Some("DISPATCH"), Some("UNIT_SCADA")) => {
                    let find = |name: &str| rec.iter().position(|c| c == name);
                    columns = match (find("SETTLEMENTDATE"), find("DUID"), find("SCADAVALUE")) {
                        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
                        _ => return Err(Error::Data("UNIT_SCADA header lacks required columns".into())),
                    };
                }
                (Some("D"), Some("DISPATCH"), Some("UNIT_SCADA")) => {
                    let (ts_i, duid_i, val_i) =
                        columns.ok_or_else(|| Error::Data("UNIT_SCADA data row before its header".into()))?;
                    let duid = rec.get(duid_i).unwrap_or("").trim();
                    if !wanted.contains(duid) {
                        continue;
                    }
                    let ts_raw = rec.get(ts_i).unwrap_or("");
                    let ts = parse_timestamp(ts_raw)
                        .ok_or_else(|| Error::Data(format!("bad SETTLEMENTDATE {ts_raw:?}")))?;
                    if ts.minute() % 30 != 0 || ts.second() != 0 {
                        continue;
                    }
                    let raw = rec.get(val_i).unwrap_or("");
                    let v: f64 = raw
                        .trim()
                        .parse()
                        .map_err(|_| Error::Data(format!("bad SCADAVALUE {raw:?} for {duid}")))?;
                    readings.entry(ts).or_default().insert(duid.to_string(), v);
                }
                _ => {}
            }
        }
    }

    let mut out = String::from("timestamp");
    for d in duids {
        out.push(',');
        out.push_str(d);
    }
    out.push('\n');
    for (ts, row) in readings {
        out.push_str(&ts.format("%Y-%m-%dT%H:%M:%S").to_string());
        for d in duids {
            out.push(',');
            if let Some(v) = row.get(d) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    Ok(out)
}
