use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::sweep::{ResultRecord, SweepOutput};
use crate::error::{Error, Result};

pub const RESULTS_CSV: &str = "results.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const REPORT_JSON: &str = "report.json";

/// Version string baked in at build time (`git describe` when available).
pub fn version() -> &'static str {
    env!("WAVEKIT_VERSION")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    if rows.is_empty() {
        w.write_record(header).map_err(csv_error)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_csv(path: &Path, records: &[ResultRecord]) -> Result<()> {
    write_rows(
        path,
        records,
        &[
            "scheme",
            "n_x",
            "n_y",
            "distance_m",
            "seed",
            "beta",
            "num_streams",
            "capacity_bits",
            "duration_s",
        ],
    )
}

#[derive(Serialize)]
struct Report<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    output: &'a SweepOutput,
}

/// Writes `results.csv`, `summary.csv` and `report.json` under `dir` and
/// returns their paths.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &SweepOutput) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let results = dir.join(RESULTS_CSV);
    write_results_csv(&results, &out.records)?;
    let summary = dir.join(SUMMARY_CSV);
    write_rows(
        &summary,
        &out.aggregates,
        &[
            "scheme",
            "sweep_value",
            "n_x",
            "n_y",
            "distance_m",
            "num_seeds",
            "mean_capacity_bits",
            "stderr_capacity_bits",
            "mean_num_streams",
        ],
    )?;
    let report = dir.join(REPORT_JSON);
    let mut w = BufWriter::new(File::create(&report)?);
    serde_json::to_writer_pretty(
        &mut w,
        &Report {
            version: version(),
            config: cfg,
            output: out,
        },
    )
    .map_err(|e| Error::Io(e.into()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(vec![results, summary, report])
}
