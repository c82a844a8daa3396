use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::data(format!(
                "matrix data has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::data("ragged rows"));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn select(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn map_rows(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for (src, dst) in self.iter_rows().zip(data.chunks_exact_mut(self.cols.max(1))) {
            f(src, dst);
        }
        Matrix { data, ..*self }
    }
}

/// Features with class indices into `classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledData {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub classes: Vec<String>,
}

impl LabeledData {
    pub fn new(x: Matrix, y: Vec<usize>, classes: Vec<String>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::data(format!("{} rows but {} labels", x.rows(), y.len())));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= classes.len()) {
            return Err(Error::data(format!("class index {bad} out of range")));
        }
        Ok(Self { x, y, classes })
    }

    /// Encodes string labels against a fixed class order.
    pub fn from_labels<S: AsRef<str>>(x: Matrix, labels: &[S], classes: &[String]) -> Result<Self> {
        let y = labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                classes
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| Error::data(format!("label `{l}` is not a known class")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(x, y, classes.to_vec())
    }

    /// Uses the dataset's label scheme for the class order.
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        let rows: Vec<Vec<f64>> = ds.rows.iter().map(|s| s.feature_vec()).collect();
        let labels: Vec<&str> = ds.rows.iter().map(|s| s.label.as_str()).collect();
        Self::from_labels(Matrix::from_rows(&rows)?, &labels, &ds.scheme.classes())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.classes.len()];
        for &y in &self.y {
            c[y] += 1;
        }
        c
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledData {
        LabeledData {
            x: self.x.select(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            classes: self.classes.clone(),
        }
    }

    /// Drops classes with no rows, keeping the original order.
    pub fn compacted(&self) -> LabeledData {
        let counts = self.class_counts();
        let mut remap = vec![usize::MAX; counts.len()];
        let mut classes = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            if n > 0 {
                remap[c] = classes.len();
                classes.push(self.classes[c].clone());
            }
        }
        LabeledData {
            x: self.x.clone(),
            y: self.y.iter().map(|&c| remap[c]).collect(),
            classes,
        }
    }

    pub fn labels(&self) -> Vec<&str> {
        self.y.iter().map(|&c| self.classes[c].as_str()).collect()
    }
}

/// Index of the largest count; ties go to the lowest index.
pub(crate) fn argmax_first<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
