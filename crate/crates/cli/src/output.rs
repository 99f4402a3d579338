use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use csit_core::lab::McSummary;
use serde::Serialize;

use crate::figures::Table;
use crate::spec::ExperimentSpec;
use crate::{CliError, VERSION};

/// Writes a table as CSV: header row, `.` decimals, LF line endings.
pub fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl(path: &Path, summaries: &[McSummary]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in summaries {
        s.write_line(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    version: &'a str,
    name: &'a str,
    seed: u64,
    spec: &'a ExperimentSpec,
    files: Vec<String>,
    wall_clock_s: f64,
}

pub fn write_sidecar(path: &Path, spec: &ExperimentSpec, files: &[PathBuf], wall_clock_s: f64) -> Result<(), CliError> {
    let side = Sidecar {
        version: VERSION,
        name: &spec.name,
        seed: spec.seed,
        spec,
        files: files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
        wall_clock_s,
    };
    let text = serde_json::to_string_pretty(&side).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
