mod common;

use std::collections::HashSet;

use dynsample::dataset::{
    coverage, coverage_in_box, export_csv, export_jsonl, load_jsonl, read_jsonl, write_jsonl, Dataset, DatasetError,
};

use common::toy_dataset;

fn jsonl(d: &Dataset) -> Vec<u8> {
    let mut buf = Vec::new();
    write_jsonl(d, &mut buf).unwrap();
    buf
}

#[test]
fn jsonl_round_trip_is_exact() {
    let d = toy_dataset(2, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    export_jsonl(&d, &path).unwrap();
    let back = load_jsonl(&path).unwrap();
    assert_eq!(back, d);
    assert_eq!(jsonl(&back), jsonl(&d));
    for (a, b) in d.runs.iter().zip(&back.runs) {
        for (ya, yb) in a.trajectory.outputs.iter().zip(&b.trajectory.outputs) {
            assert!(ya.iter().zip(yb).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}

#[test]
fn one_line_per_run_plus_meta() {
    let d = toy_dataset(1, 4);
    let text = String::from_utf8(jsonl(&d)).unwrap();
    assert_eq!(text.lines().count(), d.runs.len() + 1);
}

#[test]
fn meta_only_file_loads_as_empty_dataset() {
    let mut d = toy_dataset(1, 5);
    d.runs.clear();
    d.meta.epochs.iter_mut().for_each(|e| e.phase_counts = [0; 3]);
    let bytes = jsonl(&d);
    assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), 1);
    let back = read_jsonl(bytes.as_slice()).unwrap();
    assert!(back.runs.is_empty());
    assert!(matches!(coverage(&back, 4), Err(DatasetError::Empty)));
}

#[test]
fn schema_mismatch_is_rejected() {
    let d = toy_dataset(1, 6);
    let text = String::from_utf8(jsonl(&d)).unwrap();
    let bumped = text.replacen("\"schema_version\":1", "\"schema_version\":99", 1);
    assert_ne!(bumped, text);
    match read_jsonl(bumped.as_bytes()) {
        Err(DatasetError::SchemaVersion { found: 99, expected: 1 }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn malformed_run_line_reports_its_number() {
    let d = toy_dataset(1, 6);
    let mut text = String::from_utf8(jsonl(&d)).unwrap();
    text.push_str("{not json}\n");
    match read_jsonl(text.as_bytes()) {
        Err(DatasetError::Json { line, .. }) => assert_eq!(line, d.runs.len() + 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn csv_has_one_row_per_sample_and_exact_floats() {
    let d = toy_dataset(2, 7);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    export_csv(&d, &path).unwrap();

    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header = reader.headers().unwrap().clone();
    let width = 4 + d.meta.n_controls + d.meta.n_states + d.meta.n_outputs;
    assert_eq!(header.len(), width);
    assert_eq!(&header[0], "run_id");

    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), d.n_samples());
    let mut k = 0;
    for run in &d.runs {
        for (i, y) in run.trajectory.outputs.iter().enumerate() {
            let row = &rows[k];
            assert_eq!(row.len(), width);
            assert_eq!(row[0].parse::<usize>().unwrap(), run.run_id);
            let t: f64 = row[3].parse().unwrap();
            assert_eq!(t.to_bits(), run.trajectory.times[i].to_bits());
            for (j, v) in y.iter().enumerate() {
                let parsed: f64 = row[width - d.meta.n_outputs + j].parse().unwrap();
                assert_eq!(parsed.to_bits(), v.to_bits());
            }
            k += 1;
        }
    }
}

fn set_outputs(d: &mut Dataset, outputs: Vec<Vec<f64>>) {
    d.runs.truncate(1);
    d.runs[0].trajectory.outputs = outputs;
}

#[test]
fn identical_samples_fill_one_cell() {
    let mut d = toy_dataset(2, 8);
    set_outputs(&mut d, vec![vec![0.3, 0.3]; 5]);
    assert_eq!(coverage_in_box(&d, &[0.0, 0.0], &[1.0, 1.0], 10).unwrap(), 1.0 / 100.0);
}

#[test]
fn cell_centers_fill_the_grid() {
    let mut d = toy_dataset(2, 8);
    set_outputs(&mut d, vec![vec![0.25, 0.25], vec![0.25, 0.75], vec![0.75, 0.25], vec![0.75, 0.75]]);
    assert_eq!(coverage_in_box(&d, &[0.0, 0.0], &[1.0, 1.0], 2).unwrap(), 1.0);
}

#[test]
fn coverage_rejects_too_few_bins() {
    let d = toy_dataset(1, 8);
    assert!(coverage(&d, 1).is_err());
}

#[test]
fn coverage_matches_histogram_oracle() {
    let d = toy_dataset(2, 9);
    let norm = &d.meta.epochs[0].normalization;
    for bins in [2usize, 5, 20] {
        // independent histogram: cell index as one flat integer
        let mut flat = HashSet::new();
        for run in &d.runs {
            for y in &run.trajectory.outputs {
                let mut id = 0usize;
                for (k, &i) in d.meta.output_subset.iter().enumerate() {
                    let (lo, hi) = (norm.lower[k], norm.upper[k]);
                    let mut c = 0usize;
                    while c + 1 < bins && y[i] >= lo + (hi - lo) * (c + 1) as f64 / bins as f64 {
                        c += 1;
                    }
                    id = id * bins + c;
                }
                flat.insert(id);
            }
        }
        let expected = flat.len() as f64 / (bins * bins) as f64;
        let got = coverage(&d, bins).unwrap();
        assert!((got - expected).abs() < 1e-12, "bins {bins}: {got} vs {expected}");
    }
}

#[test]
fn coverage_never_drops_when_runs_are_added() {
    let d = toy_dataset(2, 10);
    let mut prefix = d.clone();
    prefix.runs.clear();
    let mut last = 0.0;
    for run in &d.runs {
        prefix.runs.push(run.clone());
        let c = coverage(&prefix, 20).unwrap();
        assert!(c >= last);
        last = c;
    }
}
