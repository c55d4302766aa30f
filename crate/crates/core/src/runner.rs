//! Grid execution and artifact output.
//!
//! Layout under the output directory:
//!
//! ```text
//! stream_manifest.txt
//! summary.csv                      cell,metric,mean,std
//! <cell>/report.txt                aggregated metrics
//! <cell>/seed_<r>/matrix.txt       accuracy matrix of run r
//! <cell>/seed_<r>/audit.log        train/eval events of run r
//! <cell>/error.txt                 only when the cell failed
//! ```
//!
//! Cells share nothing but the read-only stream and may run in parallel.
//! Seeds within a cell run sequentially.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{Cell, ExperimentGrid, StreamSource};
use crate::corpus::{bucketize, generate_drift_stream, load_feature_file, TemporalStream};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, compute_metrics, AggregateReport, CSV_HEADER};
use crate::protocol::{run_protocol, verify_streaming_order, AuditEvent, ProtocolKind, RunOutcome};

/// Builds the stream named by a grid.
pub fn load_stream(source: &StreamSource) -> Result<TemporalStream> {
    match source {
        StreamSource::Synthetic(cfg) => generate_drift_stream(cfg),
        StreamSource::File {
            path,
            normalize,
            buckets,
        } => {
            let file = load_feature_file(path, *normalize)?;
            bucketize(file.samples, *buckets)?.with_num_classes(file.num_classes)
        }
    }
}

/// What happened to one cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub name: String,
    pub outcome: std::result::Result<AggregateReport, String>,
}

/// Results of a whole grid, in cell order.
#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub cells: Vec<CellResult>,
    pub output_dir: PathBuf,
}

impl ExperimentSummary {
    pub fn failed(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.outcome.is_err())
    }

    pub fn all_ok(&self) -> bool {
        self.failed().next().is_none()
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Renders events one per line.
pub fn render_audit(events: &[AuditEvent]) -> String {
    events.iter().map(|e| format!("{e}\n")).collect()
}

/// Parses an audit log written by [`render_audit`].
pub fn parse_audit(text: &str) -> Result<Vec<AuditEvent>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(str::parse).collect()
}

/// Runs every seed of one cell and writes its artifacts.
pub fn run_cell(stream: &TemporalStream, cell: &Cell, cell_dir: &Path) -> Result<AggregateReport> {
    let mut reports = Vec::with_capacity(cell.run.n_seeds);
    for seed in cell.run.seeds() {
        let RunOutcome { matrix, events } = run_protocol(stream, &cell.run, seed)?;
        if cell.run.protocol == ProtocolKind::Streaming {
            verify_streaming_order(&events)?;
        }
        let run_dir = cell_dir.join(format!("seed_{seed}"));
        write(&run_dir.join("matrix.txt"), &matrix.render())?;
        write(&run_dir.join("audit.log"), &render_audit(&events))?;
        reports.push(compute_metrics(&matrix)?);
    }
    let agg = aggregate(&reports)?;
    write(&cell_dir.join("report.txt"), &agg.render())?;
    Ok(agg)
}

/// Executes a grid with up to `jobs` cells in flight and writes all artifacts
/// below `out`. A failing cell writes `error.txt` and is left out of the
/// summary; other cells are unaffected.
pub fn run_experiment(grid: &ExperimentGrid, out: &Path, jobs: usize) -> Result<ExperimentSummary> {
    let stream = load_stream(&grid.source)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join("stream_manifest.txt"), &stream.manifest())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let cells: Vec<CellResult> = pool.install(|| {
        grid.cells
            .par_iter()
            .map(|cell| {
                let dir = out.join(&cell.name);
                let _ = fs::remove_file(dir.join("error.txt"));
                let outcome = run_cell(&stream, cell, &dir).map_err(|e| e.to_string());
                if let Err(msg) = &outcome {
                    let _ = write(&dir.join("error.txt"), &format!("{msg}\n"));
                }
                CellResult {
                    name: cell.name.clone(),
                    outcome,
                }
            })
            .collect()
    });

    let mut csv = format!("{CSV_HEADER}\n");
    for c in &cells {
        if let Ok(report) = &c.outcome {
            for row in report.csv_rows(&c.name) {
                csv.push_str(&row);
                csv.push('\n');
            }
        }
    }
    write(&out.join("summary.csv"), &csv)?;
    Ok(ExperimentSummary {
        cells,
        output_dir: out.to_path_buf(),
    })
}
