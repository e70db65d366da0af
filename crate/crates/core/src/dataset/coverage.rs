use std::collections::HashSet;

use super::{Dataset, DatasetError};

fn check_bins(bins: usize) -> Result<(), DatasetError> {
    if bins < 2 {
        return Err(DatasetError::Invalid(format!("coverage needs at least 2 bins, got {bins}")));
    }
    Ok(())
}

/// Fraction of occupied cells of a `bins^d` grid over the output subset,
/// normalized by the first epoch's output bounds. Samples outside those
/// bounds count toward the edge cells, so adding runs never lowers the value.
pub fn coverage(dataset: &Dataset, bins: usize) -> Result<f64, DatasetError> {
    check_bins(bins)?;
    let norm = &dataset.meta.epochs.first().ok_or(DatasetError::Empty)?.normalization;
    coverage_in_box(dataset, &norm.lower, &norm.upper, bins)
}

/// Coverage over the box `[lower, upper]` of output-subset coordinates.
pub fn coverage_in_box(dataset: &Dataset, lower: &[f64], upper: &[f64], bins: usize) -> Result<f64, DatasetError> {
    check_bins(bins)?;
    let subset = &dataset.meta.output_subset;
    if lower.len() != subset.len() || upper.len() != subset.len() {
        return Err(DatasetError::Invalid("coverage box does not match the output subset".into()));
    }
    let mut cells: HashSet<Vec<usize>> = HashSet::new();
    for y in dataset.runs.iter().flat_map(|r| r.trajectory.outputs.iter()) {
        let cell = subset
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let span = upper[k] - lower[k];
                if span > 0.0 {
                    let z = ((y[i] - lower[k]) / span * bins as f64).floor();
                    z.clamp(0.0, (bins - 1) as f64) as usize
                } else {
                    0
                }
            })
            .collect();
        cells.insert(cell);
    }
    if cells.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(cells.len() as f64 / (bins as f64).powi(subset.len() as i32))
}

/// Bounding box of the output subset over several datasets sharing it.
pub fn output_box(datasets: &[&Dataset]) -> Result<(Vec<f64>, Vec<f64>), DatasetError> {
    let subset = &datasets.first().ok_or(DatasetError::Empty)?.meta.output_subset;
    if datasets.iter().any(|d| &d.meta.output_subset != subset) {
        return Err(DatasetError::Invalid("datasets use different output subsets".into()));
    }
    let mut lo = vec![f64::INFINITY; subset.len()];
    let mut hi = vec![f64::NEG_INFINITY; subset.len()];
    let mut any = false;
    for y in datasets.iter().flat_map(|d| d.runs.iter()).flat_map(|r| r.trajectory.outputs.iter()) {
        any = true;
        for (k, &i) in subset.iter().enumerate() {
            lo[k] = lo[k].min(y[i]);
            hi[k] = hi[k].max(y[i]);
        }
    }
    if !any {
        return Err(DatasetError::Empty);
    }
    Ok((lo, hi))
}
