use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Dataset, DatasetError, DatasetMeta, RunRecord, SCHEMA_VERSION};

/// Writes the dataset as JSON lines: the meta object, then one line per run.
pub fn write_jsonl<W: Write>(dataset: &Dataset, mut out: W) -> Result<(), DatasetError> {
    let line = |e| DatasetError::Json { line: 0, source: e };
    serde_json::to_writer(&mut out, &dataset.meta).map_err(line)?;
    out.write_all(b"\n")?;
    for run in &dataset.runs {
        serde_json::to_writer(&mut out, run).map_err(line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn export_jsonl(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    write_jsonl(dataset, BufWriter::new(File::create(path)?))
}

pub fn read_jsonl<R: Read>(input: R) -> Result<Dataset, DatasetError> {
    let mut lines = BufReader::new(input).lines();
    let first = lines.next().ok_or_else(|| DatasetError::Invalid("empty file".into()))??;

    let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| DatasetError::Json { line: 1, source: e })?;
    let found = raw.get("schema_version").and_then(|v| v.as_u64());
    match found {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(DatasetError::SchemaVersion { found: v.min(u32::MAX as u64) as u32, expected: SCHEMA_VERSION })
        }
        None => return Err(DatasetError::Invalid("meta line lacks schema_version".into())),
    }
    // parse from the text, not the Value, so floats keep their exact bits
    let meta: DatasetMeta = serde_json::from_str(&first).map_err(|e| DatasetError::Json { line: 1, source: e })?;

    let mut runs = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let run: RunRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Json { line: i + 2, source: e })?;
        runs.push(run);
    }
    let dataset = Dataset { meta, runs };
    dataset.validate()?;
    Ok(dataset)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    read_jsonl(File::open(path)?)
}

/// One row per time sample: run_id, epoch, phase, t, then controls, states
/// and outputs.
pub fn export_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    if dataset.runs.is_empty() {
        return Err(DatasetError::Empty);
    }
    let m = &dataset.meta;
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["run_id", "epoch", "phase", "t"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=m.n_controls).map(|i| format!("u_{i}")));
    header.extend((1..=m.n_states).map(|i| format!("x_{i}")));
    header.extend((1..=m.n_outputs).map(|i| format!("y_{i}")));
    w.write_record(&header)?;

    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for run in &dataset.runs {
        let t = &run.trajectory;
        for k in 0..t.len() {
            row.clear();
            row.push(run.run_id.to_string());
            row.push(run.epoch.to_string());
            row.push(run.phase.to_string());
            row.push(t.times[k].to_string());
            for v in t.controls[k].iter().chain(&t.states[k]).chain(&t.outputs[k]) {
                row.push(v.to_string());
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
