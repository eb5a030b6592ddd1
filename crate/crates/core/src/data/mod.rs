//! Ingestion, export and generation of daily PV matrices.

mod csv_io;
mod fetch;
mod matrix;
mod synth;

pub use csv_io::{
    load_csv, load_matrix_csv, parse_timestamp, read_long_csv, read_matrix_csv, save_matrix_csv, write_long_csv,
    write_matrix_csv, CsvSchema, Ingested, RejectedDay, Site,
};
pub use fetch::{fetch_archive, scada_to_long_csv, sha256_hex, CachedFile, FetchSpec, Transport};
pub use matrix::{aggregate_sites, day_end, day_start, step_label, DailyMatrix, INTERVAL_MINUTES, STEPS_PER_DAY};
pub use synth::{bell, clear_sky, season, synthesize_pv, SynthParams, MIN_SYNTH_DAYS};
