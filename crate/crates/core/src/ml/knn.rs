use serde::{Deserialize, Serialize};

use super::data::{argmax_first, Matrix};
use crate::error::{Error, Result};

/// Stored training set; prediction by uniform vote of the k nearest rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub n_classes: usize,
    pub x: Matrix,
    pub y: Vec<usize>,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, k: usize) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::data("cannot fit KNN on an empty training set"));
        }
        if k == 0 || k > x.rows() {
            return Err(Error::config(format!("k = {k} must be in 1..={}", x.rows())));
        }
        Ok(Self {
            k,
            n_classes,
            x: x.clone(),
            y: y.to_vec(),
        })
    }

    /// Indices of the k nearest rows, nearest first; equal distances keep
    /// the lower row index first.
    pub fn neighbors(&self, query: &[f64], k: usize) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k, cmp);
            d.truncate(k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    fn vote(&self, neighbors: &[usize]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for &i in neighbors {
            votes[self.y[i]] += 1;
        }
        argmax_first(&votes)
    }

    pub fn predict_row(&self, query: &[f64]) -> usize {
        self.vote(&self.neighbors(query, self.k))
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    /// Predictions for several k at once from one neighbor search per row.
    pub fn predict_many_k(&self, x: &Matrix, ks: &[usize]) -> Vec<Vec<usize>> {
        let k_max = ks.iter().copied().max().unwrap_or(0).min(self.x.rows());
        let mut out = vec![Vec::with_capacity(x.rows()); ks.len()];
        for r in x.iter_rows() {
            let nb = self.neighbors(r, k_max);
            for (o, &k) in out.iter_mut().zip(ks) {
                o.push(self.vote(&nb[..k.min(nb.len())]));
            }
        }
        out
    }
}
