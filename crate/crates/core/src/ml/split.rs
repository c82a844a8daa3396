use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// Row indices per class, ascending.
fn by_class(y: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        out[c].push(i);
    }
    out
}

/// Per-class proportional split. Each class sends `round(n_c · test_fraction)`
/// rows to the test side, clamped so both sides keep at least one row.
/// Returns (train, test) indices in ascending order.
pub fn stratified_split(
    y: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut rows) in by_class(y, n_classes).into_iter().enumerate() {
        match rows.len() {
            0 => continue,
            1 => {
                return Err(Error::Stratification(format!(
                    "class {c} has a single row and cannot be split"
                )))
            }
            n => {
                rows.shuffle(&mut seed::rng(seed, &[c as u64]));
                let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
                test.extend_from_slice(&rows[..n_test]);
                train.extend_from_slice(&rows[n_test..]);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified k folds. Each class's shuffled rows are dealt round-robin,
/// continuing the deal position from the previous class so fold sizes differ
/// by at most one.
pub fn kfold_indices(y: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::config(format!("k = {k}: at least two folds are required")));
    }
    if k > y.len() {
        return Err(Error::config(format!("k = {k} exceeds the {} available rows", y.len())));
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (c, mut rows) in by_class(y, n_classes).into_iter().enumerate() {
        rows.shuffle(&mut seed::rng(seed, &[c as u64]));
        for r in rows {
            folds[next].push(r);
            next = (next + 1) % k;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Training rows for `fold`: every row not in it.
pub fn fold_complement(folds: &[Vec<usize>], fold: usize) -> Vec<usize> {
    let mut out: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != fold)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    out.sort_unstable();
    out
}
