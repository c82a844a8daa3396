//! Exhaustive hyperparameter search scored by mean stratified k-fold accuracy.

use serde::{Deserialize, Serialize};

use super::data::{LabeledData, Matrix};
use super::forest::{ForestParams, RandomForest};
use super::knn::Knn;
use super::model::{Algorithm, Params, TrainedClassifier};
use super::scale::Standardizer;
use super::split::{fold_complement, kfold_indices};
use super::svm::{Svm, SvmParams};
use super::tree::{Criterion, DecisionTree, MaxFeatures, Presorted, Splitter, TreeParams};
use crate::error::{Error, Result};
use crate::{par, seed};

pub const DEFAULT_FOLDS: usize = 5;

const FOLD_STREAM: u64 = 1;
const REFIT_STREAM: u64 = 2;

/// Candidate lists per algorithm. Cells enumerate the Cartesian product with
/// the first field outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum HyperGrid {
    Knn {
        k: Vec<usize>,
    },
    Dt {
        max_depth: Vec<Option<usize>>,
        min_samples_leaf: Vec<usize>,
        min_samples_split: Vec<usize>,
        criterion: Vec<Criterion>,
        splitter: Vec<Splitter>,
    },
    Rf {
        max_depth: Vec<Option<usize>>,
        min_samples_leaf: Vec<usize>,
        min_samples_split: Vec<usize>,
        n_estimators: Vec<usize>,
    },
    Svm {
        gamma: Vec<f64>,
        c: Vec<f64>,
    },
}

impl HyperGrid {
    pub fn default_for(algorithm: Algorithm) -> Self {
        let depth = vec![Some(5), Some(10), Some(15), Some(20)];
        let leaf = vec![1, 2, 5, 10];
        let split = vec![2, 5, 10];
        match algorithm {
            Algorithm::Knn => HyperGrid::Knn { k: vec![3, 5, 7] },
            Algorithm::Dt => HyperGrid::Dt {
                max_depth: depth,
                min_samples_leaf: leaf,
                min_samples_split: split,
                criterion: vec![Criterion::Gini, Criterion::Entropy],
                splitter: vec![Splitter::Random, Splitter::Best],
            },
            Algorithm::Rf => HyperGrid::Rf {
                max_depth: depth,
                min_samples_leaf: leaf,
                min_samples_split: split,
                n_estimators: vec![50, 100, 150],
            },
            Algorithm::Svm => HyperGrid::Svm {
                gamma: vec![0.1, 1.0],
                c: vec![500.0, 1000.0],
            },
        }
    }

    /// A grid holding exactly `params`.
    pub fn single(params: &Params) -> Self {
        match *params {
            Params::Knn { k } => HyperGrid::Knn { k: vec![k] },
            Params::Dt(p) => HyperGrid::Dt {
                max_depth: vec![p.max_depth],
                min_samples_leaf: vec![p.min_samples_leaf],
                min_samples_split: vec![p.min_samples_split],
                criterion: vec![p.criterion],
                splitter: vec![p.splitter],
            },
            Params::Rf(p) => HyperGrid::Rf {
                max_depth: vec![p.tree.max_depth],
                min_samples_leaf: vec![p.tree.min_samples_leaf],
                min_samples_split: vec![p.tree.min_samples_split],
                n_estimators: vec![p.n_estimators],
            },
            Params::Svm(p) => HyperGrid::Svm {
                gamma: vec![p.gamma],
                c: vec![p.c],
            },
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            HyperGrid::Knn { .. } => Algorithm::Knn,
            HyperGrid::Dt { .. } => Algorithm::Dt,
            HyperGrid::Rf { .. } => Algorithm::Rf,
            HyperGrid::Svm { .. } => Algorithm::Svm,
        }
    }

    pub fn cells(&self) -> Vec<Params> {
        let mut out = Vec::new();
        match self {
            HyperGrid::Knn { k } => out.extend(k.iter().map(|&k| Params::Knn { k })),
            HyperGrid::Dt {
                max_depth,
                min_samples_leaf,
                min_samples_split,
                criterion,
                splitter,
            } => {
                for &d in max_depth {
                    for &l in min_samples_leaf {
                        for &s in min_samples_split {
                            for &c in criterion {
                                for &sp in splitter {
                                    out.push(Params::Dt(TreeParams {
                                        max_depth: d,
                                        min_samples_leaf: l,
                                        min_samples_split: s,
                                        criterion: c,
                                        splitter: sp,
                                        max_features: MaxFeatures::All,
                                    }));
                                }
                            }
                        }
                    }
                }
            }
            HyperGrid::Rf {
                max_depth,
                min_samples_leaf,
                min_samples_split,
                n_estimators,
            } => {
                for &d in max_depth {
                    for &l in min_samples_leaf {
                        for &s in min_samples_split {
                            for &n in n_estimators {
                                out.push(Params::Rf(ForestParams {
                                    tree: TreeParams {
                                        max_depth: d,
                                        min_samples_leaf: l,
                                        min_samples_split: s,
                                        max_features: MaxFeatures::Sqrt,
                                        ..TreeParams::default()
                                    },
                                    n_estimators: n,
                                    bootstrap: true,
                                }));
                            }
                        }
                    }
                }
            }
            HyperGrid::Svm { gamma, c } => {
                for &g in gamma {
                    for &c in c {
                        out.push(Params::Svm(SvmParams::new(c, g)));
                    }
                }
            }
        }
        out
    }

    /// Consecutive cells that can share one fitted model per fold: all KNN
    /// cells share a neighbour search, forest cells differing only in
    /// `n_estimators` share one forest.
    fn groups(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.cells().len();
        let width = match self {
            HyperGrid::Knn { .. } => n.max(1),
            HyperGrid::Rf { n_estimators, .. } => n_estimators.len().max(1),
            _ => 1,
        };
        (0..n).step_by(width).map(|s| s..(s + width).min(n)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub params: Params,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Set when training failed on some fold; the cell then scores 0.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_index: usize,
    pub best: Params,
    pub scores: Vec<CellScore>,
    pub model: TrainedClassifier,
}

struct Fold {
    train: LabeledData,
    validation: LabeledData,
    presorted: Option<Presorted>,
    seed: u64,
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len().max(1) as f64
}

fn scaled(train: &LabeledData, validation: &LabeledData) -> (LabeledData, LabeledData) {
    let s = Standardizer::fit(&train.x);
    let t = LabeledData {
        x: s.transform(&train.x),
        ..train.clone()
    };
    let v = LabeledData {
        x: s.transform(&validation.x),
        ..validation.clone()
    };
    (t, v)
}

/// Validation accuracy of every cell in `cells` on one fold.
fn score_group(cells: &[Params], fold: &Fold) -> Vec<Result<f64>> {
    let (tr, va) = (&fold.train, &fold.validation);
    let n = tr.n_classes();
    match cells[0] {
        Params::Knn { .. } => {
            let ks: Vec<usize> = cells
                .iter()
                .map(|c| match c {
                    Params::Knn { k } => *k,
                    _ => unreachable!("knn group"),
                })
                .collect();
            let k_max = ks.iter().copied().max().unwrap_or(1);
            match Knn::fit(&tr.x, &tr.y, n, k_max.min(tr.len())) {
                Ok(m) => {
                    let preds = m.predict_many_k(&va.x, &ks);
                    ks.iter()
                        .zip(preds)
                        .map(|(&k, p)| {
                            if k == 0 || k > tr.len() {
                                Err(Error::config(format!("k = {k} exceeds the fold size")))
                            } else {
                                Ok(accuracy(&p, &va.y))
                            }
                        })
                        .collect()
                }
                Err(e) => cells.iter().map(|_| Err(Error::Evaluation(e.to_string()))).collect(),
            }
        }
        Params::Dt(p) => {
            let pre = fold.presorted.as_ref().expect("trees presort");
            let weights = vec![1u32; tr.len()];
            let mut rng = seed::rng(fold.seed, &[]);
            vec![DecisionTree::fit_weighted(pre, &tr.y, n, &weights, &p, &mut rng)
                .map(|t| accuracy(&t.predict(&va.x), &va.y))]
        }
        Params::Rf(p) => {
            let sizes: Vec<usize> = cells
                .iter()
                .map(|c| match c {
                    Params::Rf(f) => f.n_estimators,
                    _ => unreachable!("forest group"),
                })
                .collect();
            let biggest = ForestParams {
                n_estimators: sizes.iter().copied().max().unwrap_or(1),
                ..p
            };
            let pre = fold.presorted.as_ref().expect("trees presort");
            match RandomForest::fit_presorted(pre, &tr.y, n, &biggest, fold.seed) {
                Ok(f) => f
                    .predict_prefixes(&va.x, &sizes)
                    .iter()
                    .map(|pred| Ok(accuracy(pred, &va.y)))
                    .collect(),
                Err(e) => cells.iter().map(|_| Err(Error::Evaluation(e.to_string()))).collect(),
            }
        }
        Params::Svm(p) => vec![Svm::fit(&tr.x, &tr.y, n, &p).map(|m| accuracy(&m.predict(&va.x), &va.y))],
    }
}

/// Scores every cell by mean k-fold accuracy on `train`, picks the first
/// best cell and refits it on all of `train`.
pub fn grid_search(grid: &HyperGrid, train: &LabeledData, k: usize, seed: u64) -> Result<GridResult> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::config("hyperparameter grid is empty"));
    }
    let folds_idx = kfold_indices(&train.y, train.n_classes(), k, seed::derive(seed, &[FOLD_STREAM]))?;
    let algorithm = grid.algorithm();
    let folds: Vec<Fold> = par::map_range(k, |f| {
        let tr = train.subset(&fold_complement(&folds_idx, f));
        let va = train.subset(&folds_idx[f]);
        let (tr, va) = if algorithm.uses_scaling() { scaled(&tr, &va) } else { (tr, va) };
        let presorted = matches!(algorithm, Algorithm::Dt | Algorithm::Rf).then(|| Presorted::new(&tr.x));
        Fold {
            train: tr,
            validation: va,
            presorted,
            seed: seed::derive(seed, &[FOLD_STREAM, f as u64]),
        }
    });

    let groups = grid.groups();
    let tasks: Vec<(usize, usize)> = (0..groups.len()).flat_map(|g| (0..k).map(move |f| (g, f))).collect();
    let results = par::map(&tasks, |&(g, f)| score_group(&cells[groups[g].clone()], &folds[f]));

    let mut per_cell: Vec<Vec<Result<f64>>> = (0..cells.len()).map(|_| Vec::with_capacity(k)).collect();
    for ((g, _), group_scores) in tasks.iter().zip(results) {
        for (offset, s) in group_scores.into_iter().enumerate() {
            per_cell[groups[*g].start + offset].push(s);
        }
    }
    let scores: Vec<CellScore> = cells
        .iter()
        .zip(per_cell)
        .map(|(params, fold_results)| {
            let failure = fold_results
                .iter()
                .find_map(|r| r.as_ref().err().map(|e| e.to_string()));
            let fold_accuracy: Vec<f64> = fold_results.into_iter().map(|r| r.unwrap_or(0.0)).collect();
            let mean_accuracy = if failure.is_some() {
                0.0
            } else {
                fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64
            };
            CellScore {
                params: *params,
                fold_accuracy,
                mean_accuracy,
                failure,
            }
        })
        .collect();

    let mut best_index = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.mean_accuracy > scores[best_index].mean_accuracy {
            best_index = i;
        }
    }
    let best = cells[best_index];
    let model = TrainedClassifier::fit(train, &best, seed::derive(seed, &[REFIT_STREAM]))?;
    Ok(GridResult {
        best_index,
        best,
        scores,
        model,
    })
}

/// Fits `params` directly with the seed a grid search would use for its refit.
pub fn fit_fixed(params: &Params, train: &LabeledData, seed: u64) -> Result<TrainedClassifier> {
    TrainedClassifier::fit(train, params, seed::derive(seed, &[REFIT_STREAM]))
}

/// Predictions for a matrix, helper for callers holding only a grid result.
pub fn predict(result: &GridResult, x: &Matrix) -> Vec<String> {
    result.model.predict_labels(x)
}
