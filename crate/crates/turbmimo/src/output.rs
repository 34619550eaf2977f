//! Sweep results as CSV plus a metadata sidecar.
//!
//! Floats are written in shortest round-trip scientific notation, so the
//! CSV bytes are a pure function of the rows. Undefined statistics are
//! written as `NaN`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use turbmimo_core::experiment::{MeanSe, SimConfig, SweepRow};

use crate::config::render_config;
use crate::error::{AppError, AppResult};

/// Statistics written as `<name>_mean, <name>_se` column pairs.
pub const STATISTICS: [&str; 9] = [
    "p_all_kept",
    "p_collision",
    "p_collision_given_kept",
    "mean_eps",
    "erasure_correlation",
    "fidelity_conditional",
    "fidelity_unconditional",
    "p_succ",
    "composition_deviation",
];

fn statistics(row: &SweepRow) -> [MeanSe; 9] {
    [
        row.p_all_kept,
        row.p_collision,
        row.p_collision_given_kept,
        row.mean_eps,
        row.erasure_correlation,
        row.fidelity_conditional,
        row.fidelity_unconditional,
        row.p_succ,
        row.composition_deviation,
    ]
}

/// The CSV header.
pub fn header() -> Vec<String> {
    let mut cols: Vec<String> = ["cn2", "n_modes", "regime", "n_mc", "r0", "rytov_variance"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for s in STATISTICS {
        cols.push(format!("{s}_mean"));
        cols.push(format!("{s}_se"));
    }
    cols.push("saturated".into());
    cols
}

pub fn format_float(x: f64) -> String {
    format!("{x:e}")
}

fn record(row: &SweepRow) -> Vec<String> {
    let mut out = vec![
        format_float(row.cn2),
        row.n_modes.to_string(),
        row.regime.name().to_string(),
        row.n_mc.to_string(),
        format_float(row.r0),
        format_float(row.rytov_variance),
    ];
    for s in statistics(row) {
        out.push(format_float(s.mean));
        out.push(format_float(s.se));
    }
    out.push(row.saturated.to_string());
    out
}

/// Writes the header and one record per row.
pub fn write_csv<W: Write>(rows: &[SweepRow], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header())?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

/// CSV bytes of `rows`.
pub fn csv_bytes(rows: &[SweepRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    buf
}

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub version: &'static str,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
    pub workers: usize,
    pub rows: usize,
}

/// Sidecar location for a result file: `<path>.meta`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

/// Metadata as comment lines followed by the configuration echo, so the
/// sidecar is itself a loadable configuration file.
pub fn render_metadata(meta: &RunMetadata, config: &SimConfig) -> String {
    format!(
        "# turbmimo {}\n# started_unix_seconds = {}\n# wall_clock_seconds = {:.3}\n# workers = {}\n# rows = {}\n{}",
        meta.version,
        meta.started_unix_seconds,
        meta.wall_clock_seconds,
        meta.workers,
        meta.rows,
        render_config(config)
    )
}

fn create(path: &Path) -> AppResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::io(path, e))
}

/// Writes `rows` to `path` and the metadata sidecar next to it.
pub fn write_results(rows: &[SweepRow], path: &Path, config: &SimConfig, meta: &RunMetadata) -> AppResult<()> {
    let file = create(path)?;
    write_csv(rows, file).map_err(|source| AppError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let side = sidecar_path(path);
    let mut w = create(&side)?;
    w.write_all(render_metadata(meta, config).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| AppError::io(&side, e))
}
