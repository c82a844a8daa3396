//! Soft-margin SVM with an RBF kernel.
//!
//! Each binary problem is the dual
//!
//! ```text
//! min  ½ αᵀQα − Σα    s.t.  0 ≤ α ≤ C,  yᵀα = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! solved by SMO with second-order working-set selection. Iteration stops when
//! the maximal KKT violation drops below `tol`. Kernel rows are computed on
//! demand and kept in an LRU cache. Multiclass problems are decomposed one
//! versus one (default) or one versus rest.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::data::{argmax_first, Matrix};
use crate::error::{Error, Result};
use crate::par;

const TAU: f64 = 1e-12;
const DEFAULT_CACHE_BYTES: usize = 128 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiclass {
    #[default]
    OneVsOne,
    OneVsRest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// None uses max(10⁷, 100·n).
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub multiclass: Multiclass,
}

fn default_tol() -> f64 {
    1e-3
}

impl SvmParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self {
            c,
            gamma,
            tol: default_tol(),
            max_iter: None,
            multiclass: Multiclass::OneVsOne,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.gamma > 0.0 && self.tol > 0.0) {
            return Err(Error::config(format!("C, gamma and tol must be positive: {self:?}")));
        }
        Ok(())
    }
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

struct QMatrix<'a> {
    x: &'a Matrix,
    rows: &'a [usize],
    y: &'a [f64],
    gamma: f64,
    cache: Vec<Option<Rc<Vec<f64>>>>,
    last_used: Vec<u64>,
    clock: u64,
    cached: usize,
    capacity: usize,
}

impl<'a> QMatrix<'a> {
    fn new(x: &'a Matrix, rows: &'a [usize], y: &'a [f64], gamma: f64, cache_bytes: usize) -> Self {
        let n = rows.len();
        Self {
            x,
            rows,
            y,
            gamma,
            cache: vec![None; n],
            last_used: vec![0; n],
            clock: 0,
            cached: 0,
            capacity: (cache_bytes / (8 * n.max(1))).max(2),
        }
    }

    fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if let Some(r) = &self.cache[i] {
            return Rc::clone(r);
        }
        if self.cached >= self.capacity {
            let victim = (0..self.cache.len())
                .filter(|&k| k != i && self.cache[k].is_some())
                .min_by_key(|&k| self.last_used[k])
                .expect("cache is non-empty");
            self.cache[victim] = None;
            self.cached -= 1;
        }
        let xi = self.x.row(self.rows[i]);
        let yi = self.y[i];
        let r: Vec<f64> = self
            .rows
            .iter()
            .zip(self.y)
            .map(|(&rj, &yj)| yi * yj * rbf(self.gamma, xi, self.x.row(rj)))
            .collect();
        let r = Rc::new(r);
        self.cache[i] = Some(Rc::clone(&r));
        self.cached += 1;
        r
    }
}

/// (positive class, negative class or None for the rest, rows, ±1 labels)
type Problem = (usize, Option<usize>, Vec<usize>, Vec<f64>);

/// Dual solution of one binary problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    /// ½ αᵀQα − Σα
    pub objective: f64,
}

/// Solves the binary dual over `rows` of `x` with labels `y` ∈ {+1, −1}.
pub fn solve_binary(x: &Matrix, rows: &[usize], y: &[f64], params: &SvmParams) -> Result<BinarySolution> {
    params.validate()?;
    let n = rows.len();
    if n != y.len() || n < 2 {
        return Err(Error::data("a binary problem needs at least two labelled rows"));
    }
    let c = params.c;
    let eps = params.tol;
    let max_iter = params.max_iter.unwrap_or_else(|| (100 * n).max(10_000_000));
    let mut q = QMatrix::new(x, rows, y, params.gamma, DEFAULT_CACHE_BYTES);
    let qd = vec![1.0; n]; // K(x, x) = 1 for the RBF kernel.
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    loop {
        // i maximizes −y_t G_t over I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_opt = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !is_upper(alpha[t]) && -g[t] >= gmax {
                    gmax = -g[t];
                    i_opt = Some(t);
                }
            } else if !is_lower(alpha[t]) && g[t] >= gmax {
                gmax = g[t];
                i_opt = Some(t);
            }
        }
        let qi = i_opt.map(|i| q.row(i));
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_opt = None;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            let (grad_diff, quad) = if y[t] > 0.0 {
                if is_lower(alpha[t]) {
                    continue;
                }
                gmax2 = gmax2.max(g[t]);
                let Some(i) = i_opt else { continue };
                (gmax + g[t], qd[i] + qd[t] - 2.0 * y[i] * qi.as_ref().unwrap()[t])
            } else {
                if is_upper(alpha[t]) {
                    continue;
                }
                gmax2 = gmax2.max(-g[t]);
                let Some(i) = i_opt else { continue };
                (gmax - g[t], qd[i] + qd[t] + 2.0 * y[i] * qi.as_ref().unwrap()[t])
            };
            if grad_diff > 0.0 {
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j_opt = Some(t);
                }
            }
        }
        let gap = gmax + gmax2;
        let (Some(i), Some(j)) = (i_opt, j_opt) else { break };
        if gap < eps {
            break;
        }
        if iterations >= max_iter {
            let objective = 0.5 * alpha.iter().zip(&g).map(|(a, gi)| a * (gi - 1.0)).sum::<f64>();
            return Err(Error::NonConvergence {
                iterations,
                best: objective,
                residual: gap,
            });
        }
        iterations += 1;

        let qi = qi.unwrap();
        let qj = q.row(j);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_ai, old_aj);
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * qi[j]).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * qi[j]).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (da_i, da_j) = (ai - old_ai, aj - old_aj);
        for k in 0..n {
            g[k] += qi[k] * da_i + qj[k] * da_j;
        }
    }
    // Offset from free vectors, else the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * g[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { 0.5 * (ub + lb) };
    let objective = 0.5 * alpha.iter().zip(&g).map(|(a, gi)| a * (gi - 1.0)).sum::<f64>();
    Ok(BinarySolution {
        alpha,
        rho,
        iterations,
        objective,
    })
}

/// One binary machine; `coef` are α·y over support vectors indexed into the
/// model's support-vector matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    /// Class voted for by a positive decision value.
    pub positive: usize,
    /// Class voted for otherwise; None for one-vs-rest.
    pub negative: Option<usize>,
    pub support: Vec<u32>,
    pub coef: Vec<f64>,
    pub rho: f64,
}

impl Machine {
    fn decision(&self, kernel_row: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(&s, &c)| c * kernel_row[s as usize])
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub params: SvmParams,
    pub n_classes: usize,
    /// Union of all machines' support vectors.
    pub support_vectors: Matrix,
    pub machines: Vec<Machine>,
}

impl Svm {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &SvmParams) -> Result<Self> {
        params.validate()?;
        if x.rows() == 0 {
            return Err(Error::data("cannot fit an SVM on an empty training set"));
        }
        let mut by_class = vec![Vec::new(); n_classes];
        for (i, &c) in y.iter().enumerate() {
            by_class[c].push(i);
        }
        let present: Vec<usize> = (0..n_classes).filter(|&c| !by_class[c].is_empty()).collect();
        let mut problems: Vec<Problem> = Vec::new();
        match params.multiclass {
            Multiclass::OneVsOne => {
                for (a_pos, &a) in present.iter().enumerate() {
                    for &b in &present[a_pos + 1..] {
                        let rows = [by_class[a].as_slice(), by_class[b].as_slice()].concat();
                        let labels = rows.iter().map(|&r| if y[r] == a { 1.0 } else { -1.0 }).collect();
                        problems.push((a, Some(b), rows, labels));
                    }
                }
            }
            Multiclass::OneVsRest => {
                for &a in &present {
                    let rows: Vec<usize> = (0..y.len()).collect();
                    let labels = y.iter().map(|&c| if c == a { 1.0 } else { -1.0 }).collect();
                    problems.push((a, None, rows, labels));
                }
            }
        }

        let mut sv_slot = vec![u32::MAX; x.rows()];
        let mut sv_rows: Vec<usize> = Vec::new();
        let mut machines = Vec::with_capacity(problems.len());
        if present.len() == 1 {
            // A single class: one machine that always votes for it.
            machines.push(Machine {
                positive: present[0],
                negative: None,
                support: Vec::new(),
                coef: Vec::new(),
                rho: -1.0,
            });
        }
        let solutions = par::map(&problems, |(_, _, rows, labels)| solve_binary(x, rows, labels, params));
        for ((positive, negative, rows, labels), sol) in problems.into_iter().zip(solutions) {
            let sol = sol?;
            let mut support = Vec::new();
            let mut coef = Vec::new();
            for (k, &a) in sol.alpha.iter().enumerate() {
                if a > 0.0 {
                    let r = rows[k];
                    if sv_slot[r] == u32::MAX {
                        sv_slot[r] = sv_rows.len() as u32;
                        sv_rows.push(r);
                    }
                    support.push(sv_slot[r]);
                    coef.push(a * labels[k]);
                }
            }
            machines.push(Machine {
                positive,
                negative,
                support,
                coef,
                rho: sol.rho,
            });
        }
        Ok(Self {
            params: *params,
            n_classes,
            support_vectors: x.select(&sv_rows),
            machines,
        })
    }

    fn kernel_row(&self, query: &[f64]) -> Vec<f64> {
        self.support_vectors
            .iter_rows()
            .map(|s| rbf(self.params.gamma, s, query))
            .collect()
    }

    pub fn decision_values(&self, query: &[f64]) -> Vec<f64> {
        let k = self.kernel_row(query);
        self.machines.iter().map(|m| m.decision(&k)).collect()
    }

    pub fn predict_row(&self, query: &[f64]) -> usize {
        let dec = self.decision_values(query);
        match self.params.multiclass {
            Multiclass::OneVsOne => {
                let mut votes = vec![0u32; self.n_classes];
                for (m, d) in self.machines.iter().zip(&dec) {
                    let winner = match m.negative {
                        Some(neg) if *d <= 0.0 => neg,
                        _ => m.positive,
                    };
                    votes[winner] += 1;
                }
                argmax_first(&votes)
            }
            Multiclass::OneVsRest => {
                let best = argmax_first(&dec);
                self.machines[best].positive
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }
}
