use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{argmax_first, Matrix};
use super::tree::{DecisionTree, Presorted, TreeParams};
use crate::error::{Error, Result};
use crate::{par, seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree: TreeParams,
    pub n_estimators: usize,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
}

/// Tree `i` depends only on (`seed`, `i`), so a smaller forest with the same
/// seed is a prefix of a larger one.
fn fit_tree(pre: &Presorted, y: &[usize], n_classes: usize, params: &ForestParams, seed: u64, i: usize) -> Result<DecisionTree> {
    let mut rng = seed::rng(seed, &[i as u64]);
    let n = pre.n_rows();
    let weights = if params.bootstrap {
        let mut w = vec![0u32; n];
        for _ in 0..n {
            w[rng.random_range(0..n)] += 1;
        }
        w
    } else {
        vec![1u32; n]
    };
    DecisionTree::fit_weighted(pre, y, n_classes, &weights, &params.tree, &mut rng)
}

impl RandomForest {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> Result<Self> {
        Self::fit_presorted(&Presorted::new(x), y, n_classes, params, seed)
    }

    pub fn fit_presorted(
        pre: &Presorted,
        y: &[usize],
        n_classes: usize,
        params: &ForestParams,
        seed: u64,
    ) -> Result<Self> {
        if params.n_estimators == 0 {
            return Err(Error::config("a forest needs at least one tree"));
        }
        let trees = par::map_range(params.n_estimators, |i| fit_tree(pre, y, n_classes, params, seed, i))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_classes, trees })
    }

    /// Majority vote of the first `n_trees` trees; ties go to the lower class.
    pub fn predict_prefix(&self, x: &Matrix, n_trees: usize) -> Vec<usize> {
        let trees = &self.trees[..n_trees.min(self.trees.len())];
        let mut votes = vec![0u32; self.n_classes];
        x.iter_rows()
            .map(|r| {
                votes.iter_mut().for_each(|v| *v = 0);
                for t in trees {
                    votes[t.predict_row(r)] += 1;
                }
                argmax_first(&votes)
            })
            .collect()
    }

    /// Predictions of several prefix sizes from one pass over the trees.
    pub fn predict_prefixes(&self, x: &Matrix, sizes: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::with_capacity(x.rows()); sizes.len()];
        let mut votes = vec![0u32; self.n_classes];
        for r in x.iter_rows() {
            votes.iter_mut().for_each(|v| *v = 0);
            let mut done = 0;
            let mut order: Vec<(usize, usize)> = sizes.iter().copied().enumerate().map(|(i, s)| (s, i)).collect();
            order.sort_unstable();
            for (size, slot) in order {
                let size = size.min(self.trees.len());
                for t in &self.trees[done.min(size)..size] {
                    votes[t.predict_row(r)] += 1;
                }
                done = done.max(size);
                out[slot].push(argmax_first(&votes));
            }
        }
        out
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        self.predict_prefix(x, self.trees.len())
    }
}
