//! Line-delimited JSON result files: one header object per run followed by
//! one object per iteration.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IterationRecord, RunHeader, RunResult};
use crate::acquisition::Strategy;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct IterationLine {
    run_id: String,
    function: String,
    dim: usize,
    strategy: Strategy,
    rep: usize,
    seed: u64,
    #[serde(flatten)]
    record: IterationRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(RunHeader),
    Iteration(IterationLine),
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

/// Append `results` to a writer.
pub fn write_results_to<W: Write>(results: &[RunResult], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    for r in results {
        serde_json::to_writer(&mut w, &Line::Header(r.header.clone())).map_err(json_error)?;
        w.write_all(b"\n")?;
        for rec in &r.records {
            let line = Line::Iteration(IterationLine {
                run_id: r.header.run_id.clone(),
                function: r.header.function.clone(),
                dim: r.header.dim,
                strategy: r.header.strategy,
                rep: r.header.rep,
                seed: r.header.seed,
                record: rec.clone(),
            });
            serde_json::to_writer(&mut w, &line).map_err(json_error)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write `results` to `path`, replacing any existing file.
pub fn write_results(results: &[RunResult], path: &Path) -> Result<()> {
    write_results_to(results, File::create(path)?)
}

/// Read every run from a reader.
pub fn read_results_from<R: BufRead>(input: R) -> Result<Vec<RunResult>> {
    let mut runs: Vec<RunResult> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let parsed: Line = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        match parsed {
            Line::Header(h) => {
                if h.schema_version != SCHEMA_VERSION {
                    return Err(parse_err(format!(
                        "schema version {} is not supported (expected {SCHEMA_VERSION})",
                        h.schema_version
                    )));
                }
                runs.push(RunResult {
                    header: h,
                    records: Vec::new(),
                });
            }
            Line::Iteration(it) => {
                let run = runs
                    .last_mut()
                    .ok_or_else(|| parse_err("iteration record before any run header".into()))?;
                if it.run_id != run.header.run_id {
                    return Err(parse_err(format!(
                        "record of run `{}` inside run `{}`",
                        it.run_id, run.header.run_id
                    )));
                }
                run.records.push(it.record);
            }
        }
    }
    Ok(runs)
}

pub fn read_results(path: &Path) -> Result<Vec<RunResult>> {
    read_results_from(BufReader::new(File::open(path)?))
}
