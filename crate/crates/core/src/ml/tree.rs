//! CART classification tree over presorted feature columns.
//!
//! Rows carry integer weights so a bootstrap sample is a weight vector over
//! the original rows. Size limits (`min_samples_leaf`, `min_samples_split`)
//! count distinct rows; impurities use the weights.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{argmax_first, Matrix};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    #[default]
    Best,
    /// One uniform threshold per feature within the node's range.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    #[default]
    All,
    /// ⌈√d⌉ features drawn per split.
    Sqrt,
}

impl MaxFeatures {
    pub fn count(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().ceil() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// None grows until the other limits stop it.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            criterion: Criterion::Gini,
            splitter: Splitter::Best,
            max_features: MaxFeatures::All,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 || self.min_samples_split < 2 || self.max_depth == Some(0) {
            return Err(Error::config(format!("invalid tree parameters {self:?}")));
        }
        Ok(())
    }
}

/// Column-major copy of the features with each column's row order.
#[derive(Debug, Clone)]
pub struct Presorted {
    n_rows: usize,
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &Matrix) -> Self {
        let cols: Vec<Vec<f64>> = (0..x.cols())
            .map(|j| (0..x.rows()).map(|i| x.get(i, j)).collect())
            .collect();
        let order = cols
            .iter()
            .map(|c| {
                let mut o: Vec<u32> = (0..x.rows() as u32).collect();
                o.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                o
            })
            .collect();
        Self {
            n_rows: x.rows(),
            cols,
            order,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: usize,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_classes: usize,
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

#[derive(Clone, Copy)]
struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
    /// Distinct rows on the left side.
    n_left: usize,
}

struct Builder<'a> {
    pre: &'a Presorted,
    y: &'a [usize],
    weights: &'a [u32],
    n_classes: usize,
    params: TreeParams,
    /// ord[f][s..e] holds the node's rows sorted by feature f.
    ord: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    xlogx: Vec<f64>,
    features: Vec<usize>,
    left_counts: Vec<u64>,
    right_counts: Vec<u64>,
}

impl Builder<'_> {
    fn purity(&self, counts: &[u64], total: u64) -> f64 {
        match self.params.criterion {
            // Σ c² / W
            Criterion::Gini => {
                let ss: u64 = counts.iter().map(|c| c * c).sum();
                ss as f64 / total as f64
            }
            // Σ c ln c − W ln W
            Criterion::Entropy => {
                counts.iter().map(|&c| self.xlogx[c as usize]).sum::<f64>() - self.xlogx[total as usize]
            }
        }
    }

    fn best_threshold(&mut self, f: usize, s: usize, e: usize, counts: &[u64], total: u64, best: &mut Option<Candidate>) {
        let col = &self.pre.cols[f];
        let rows = &self.ord[f][s..e];
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf;
        self.left_counts.iter_mut().for_each(|c| *c = 0);
        self.right_counts.copy_from_slice(counts);
        let (mut wl, mut wr) = (0u64, total);
        let gini = self.params.criterion == Criterion::Gini;
        let (mut sl, mut sr) = if gini {
            (0.0, counts.iter().map(|c| (c * c) as f64).sum::<f64>())
        } else {
            (0.0, counts.iter().map(|&c| self.xlogx[c as usize]).sum::<f64>())
        };
        for i in 0..n - 1 {
            let r = rows[i] as usize;
            let (c, w) = (self.y[r], u64::from(self.weights[r]));
            let (l0, r0) = (self.left_counts[c], self.right_counts[c]);
            self.left_counts[c] = l0 + w;
            self.right_counts[c] = r0 - w;
            if gini {
                sl += ((l0 + w) * (l0 + w) - l0 * l0) as f64;
                sr -= (r0 * r0 - (r0 - w) * (r0 - w)) as f64;
            } else {
                sl += self.xlogx[(l0 + w) as usize] - self.xlogx[l0 as usize];
                sr += self.xlogx[(r0 - w) as usize] - self.xlogx[r0 as usize];
            }
            wl += w;
            wr -= w;
            let n_left = i + 1;
            if n_left < min_leaf {
                continue;
            }
            if n - n_left < min_leaf {
                break;
            }
            let (v, next) = (col[r], col[rows[i + 1] as usize]);
            if v >= next {
                continue;
            }
            let score = if gini {
                sl / wl as f64 + sr / wr as f64
            } else {
                sl - self.xlogx[wl as usize] + sr - self.xlogx[wr as usize]
            };
            if best.is_none_or(|b| score > b.score) {
                let mid = 0.5 * (v + next);
                *best = Some(Candidate {
                    score,
                    feature: f,
                    threshold: if mid < next { mid } else { v },
                    n_left,
                });
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn random_threshold(
        &mut self,
        f: usize,
        s: usize,
        e: usize,
        counts: &[u64],
        total: u64,
        rng: &mut ChaCha8Rng,
        best: &mut Option<Candidate>,
    ) {
        let col = &self.pre.cols[f];
        let rows = &self.ord[f][s..e];
        let (lo, hi) = (col[rows[0] as usize], col[rows[rows.len() - 1] as usize]);
        let mut t = lo + rng.random::<f64>() * (hi - lo);
        if t >= hi {
            t = lo;
        }
        self.left_counts.iter_mut().for_each(|c| *c = 0);
        let (mut n_left, mut wl) = (0, 0);
        while col[rows[n_left] as usize] <= t {
            let r = rows[n_left] as usize;
            self.left_counts[self.y[r]] += u64::from(self.weights[r]);
            wl += u64::from(self.weights[r]);
            n_left += 1;
        }
        let min_leaf = self.params.min_samples_leaf;
        if n_left < min_leaf || rows.len() - n_left < min_leaf {
            return;
        }
        for (r, (&c, &l)) in self.right_counts.iter_mut().zip(counts.iter().zip(&self.left_counts)) {
            *r = c - l;
        }
        let score = self.purity(&self.left_counts, wl) + self.purity(&self.right_counts, total - wl);
        if best.is_none_or(|b| score > b.score) {
            *best = Some(Candidate {
                score,
                feature: f,
                threshold: t,
                n_left,
            });
        }
    }

    fn find_split(&mut self, s: usize, e: usize, counts: &[u64], total: u64, rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let d = self.pre.n_features();
        let wanted = self.params.max_features.count(d);
        if self.params.max_features != MaxFeatures::All {
            self.features.shuffle(rng);
        }
        let mut best = None;
        let mut visited = 0;
        for k in 0..d {
            if visited >= wanted && best.is_some() {
                break;
            }
            let f = self.features[k];
            let col = &self.pre.cols[f];
            let rows = &self.ord[f][s..e];
            if col[rows[0] as usize] >= col[rows[rows.len() - 1] as usize] {
                continue;
            }
            visited += 1;
            match self.params.splitter {
                Splitter::Best => self.best_threshold(f, s, e, counts, total, &mut best),
                Splitter::Random => self.random_threshold(f, s, e, counts, total, rng, &mut best),
            }
        }
        best
    }

    /// Stable partition of every feature's node range; left rows first.
    fn partition(&mut self, s: usize, e: usize, split: &Candidate) {
        for &r in &self.ord[split.feature][s..s + split.n_left] {
            self.goes_left[r as usize] = true;
        }
        for f in 0..self.ord.len() {
            if f == split.feature {
                continue;
            }
            let range = &mut self.ord[f][s..e];
            self.scratch.clear();
            let mut w = 0;
            for i in 0..range.len() {
                let r = range[i];
                if self.goes_left[r as usize] {
                    range[w] = r;
                    w += 1;
                } else {
                    self.scratch.push(r);
                }
            }
            range[w..].copy_from_slice(&self.scratch);
            debug_assert_eq!(w, split.n_left);
        }
        for &r in &self.ord[split.feature][s..s + split.n_left] {
            self.goes_left[r as usize] = false;
        }
    }

    fn build(&mut self, rng: &mut ChaCha8Rng) -> Vec<Node> {
        struct Pending {
            node: usize,
            s: usize,
            e: usize,
            depth: usize,
            counts: Vec<u64>,
        }
        let m = self.ord[0].len();
        let mut root_counts = vec![0u64; self.n_classes];
        for &r in &self.ord[0] {
            root_counts[self.y[r as usize]] += u64::from(self.weights[r as usize]);
        }
        let mut nodes = vec![Node::Leaf { class: 0 }];
        let mut stack = vec![Pending {
            node: 0,
            s: 0,
            e: m,
            depth: 0,
            counts: root_counts,
        }];
        while let Some(p) = stack.pop() {
            let n = p.e - p.s;
            let total: u64 = p.counts.iter().sum();
            let majority = argmax_first(&p.counts);
            let pure = p.counts[majority] == total;
            let p_ = &self.params;
            let stop = pure
                || p_.max_depth.is_some_and(|d| p.depth >= d)
                || n < p_.min_samples_split
                || n < 2 * p_.min_samples_leaf;
            let split = if stop { None } else { self.find_split(p.s, p.e, &p.counts, total, rng) };
            let Some(split) = split else {
                nodes[p.node] = Node::Leaf { class: majority };
                continue;
            };
            self.partition(p.s, p.e, &split);
            let mut left_counts = vec![0u64; self.n_classes];
            for &r in &self.ord[split.feature][p.s..p.s + split.n_left] {
                left_counts[self.y[r as usize]] += u64::from(self.weights[r as usize]);
            }
            let right_counts: Vec<u64> = p.counts.iter().zip(&left_counts).map(|(a, b)| a - b).collect();
            let (left, right) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf { class: 0 });
            nodes.push(Node::Leaf { class: 0 });
            nodes[p.node] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            let mid = p.s + split.n_left;
            // Right pushed first so the left subtree is built first.
            stack.push(Pending {
                node: right,
                s: mid,
                e: p.e,
                depth: p.depth + 1,
                counts: right_counts,
            });
            stack.push(Pending {
                node: left,
                s: p.s,
                e: mid,
                depth: p.depth + 1,
                counts: left_counts,
            });
        }
        nodes
    }
}

impl DecisionTree {
    /// Unit weights; `seed` drives the random splitter and feature draws.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &TreeParams, seed: u64) -> Result<Self> {
        let pre = Presorted::new(x);
        let weights = vec![1u32; x.rows()];
        Self::fit_weighted(&pre, y, n_classes, &weights, params, &mut seed::rng(seed, &[]))
    }

    pub fn fit_weighted(
        pre: &Presorted,
        y: &[usize],
        n_classes: usize,
        weights: &[u32],
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        params.validate()?;
        if y.len() != pre.n_rows() || weights.len() != pre.n_rows() {
            return Err(Error::data("labels, weights and features differ in length"));
        }
        if pre.n_features() == 0 {
            return Err(Error::data("no features"));
        }
        if let Some(&c) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::data(format!("class index {c} out of range")));
        }
        let ord: Vec<Vec<u32>> = pre
            .order
            .iter()
            .map(|o| o.iter().copied().filter(|&r| weights[r as usize] > 0).collect())
            .collect();
        if ord[0].is_empty() {
            return Err(Error::data("cannot fit a tree on an empty sample"));
        }
        let total_weight: u64 = weights.iter().map(|&w| u64::from(w)).sum();
        let mut b = Builder {
            pre,
            y,
            weights,
            n_classes,
            params: *params,
            ord,
            goes_left: vec![false; pre.n_rows()],
            scratch: Vec::with_capacity(pre.n_rows()),
            xlogx: if params.criterion == Criterion::Entropy {
                (0..=total_weight).map(|v| if v == 0 { 0.0 } else { v as f64 * (v as f64).ln() }).collect()
            } else {
                Vec::new()
            },
            features: (0..pre.n_features()).collect(),
            left_counts: vec![0; n_classes],
            right_counts: vec![0; n_classes],
        };
        let nodes = b.build(rng);
        Ok(Self {
            n_classes,
            n_features: pre.n_features(),
            nodes,
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = *n {
                depth[left] = depth[i] + 1;
                depth[right] = depth[i] + 1;
                max = max.max(depth[i] + 1);
            }
        }
        max
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}
