//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use boiler_fdd::emulator::BoilerSpec;

pub fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

pub fn load_spec(id: &str) -> BoilerSpec {
    BoilerSpec::load(specs_dir().join(format!("{id}.json"))).unwrap()
}

pub fn all_specs() -> Vec<BoilerSpec> {
    let mut paths: Vec<_> = std::fs::read_dir(specs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| BoilerSpec::load(p).unwrap()).collect()
}

// ---------------------------------------------------------------------------
// Heat exchanger: RK4 march through a 1-shell / 2-tube-pass exchanger.

const MARCH_STEPS: usize = 4000;

/// State (T_shell, t_pass1, t_pass2) along x ∈ [0, 1]. Shell and pass 1 flow
/// in +x, pass 2 flows back in −x. Each pass sees half the conductance.
fn rhs(s: [f64; 3], ua: f64, c_shell: f64, c_tube: f64) -> [f64; 3] {
    let [t, t1, t2] = s;
    let h = ua / 2.0;
    [
        -h * ((t - t1) + (t - t2)) / c_shell,
        h * (t - t1) / c_tube,
        -h * (t - t2) / c_tube,
    ]
}

fn march(start: [f64; 3], ua: f64, c_shell: f64, c_tube: f64) -> [f64; 3] {
    let dx = 1.0 / MARCH_STEPS as f64;
    let add = |a: [f64; 3], b: [f64; 3], k: f64| [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]];
    let mut s = start;
    for _ in 0..MARCH_STEPS {
        let k1 = rhs(s, ua, c_shell, c_tube);
        let k2 = rhs(add(s, k1, dx / 2.0), ua, c_shell, c_tube);
        let k3 = rhs(add(s, k2, dx / 2.0), ua, c_shell, c_tube);
        let k4 = rhs(add(s, k3, dx), ua, c_shell, c_tube);
        for i in 0..3 {
            s[i] += dx / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    s
}

/// Outlet temperatures (shell, tube) of one shell. The turnaround condition
/// t2(1) = t1(1) is met by linear shooting on the tube outlet t2(0).
pub fn march_shell(t_shell_in: f64, c_shell: f64, t_tube_in: f64, c_tube: f64, ua: f64) -> (f64, f64) {
    let miss = |guess: f64| {
        let end = march([t_shell_in, t_tube_in, guess], ua, c_shell, c_tube);
        (end[2] - end[1], end)
    };
    let (g0, g1) = (t_tube_in, t_tube_in + 1.0);
    let (m0, _) = miss(g0);
    let (m1, _) = miss(g1);
    let guess = g0 - m0 * (g1 - g0) / (m1 - m0);
    let (_, end) = miss(guess);
    (end[0], guess)
}

/// Effectiveness of one or two shells in counterflow series. The C_min
/// stream (hot, unit inlet) is on the shell side; cold enters the last shell
/// at zero. Each shell carries `ntu / n_shells`.
pub fn marching_effectiveness(ntu: f64, c_ratio: f64, n_shells: usize) -> f64 {
    let c_hot = 1.0;
    let c_cold = 1.0 / c_ratio;
    let ua = ntu * c_hot / n_shells as f64;
    match n_shells {
        1 => 1.0 - march_shell(1.0, c_hot, 0.0, c_cold, ua).0,
        2 => {
            // Shoot on the cold temperature between the shells.
            let residual = |m: f64| {
                let (h_mid, _) = march_shell(1.0, c_hot, m, c_cold, ua);
                let (h_out, c_out) = march_shell(h_mid, c_hot, 0.0, c_cold, ua);
                (c_out - m, h_out)
            };
            let (r0, _) = residual(0.0);
            let (r1, _) = residual(1.0);
            let m = -r0 / (r1 - r0);
            1.0 - residual(m).1
        }
        _ => panic!("oracle covers one or two shells"),
    }
}

// ---------------------------------------------------------------------------
// SVM: exact dual by enumerating active sets.

/// Minimizes ½αᵀQα − Σα s.t. yᵀα = 0, 0 ≤ α ≤ C with Q_ij = y_i y_j K_ij.
/// Every α_i is fixed at 0, fixed at C, or free; for each assignment the
/// free block solves its KKT system, and the feasible candidate with the
/// lowest objective wins. Returns (α, objective).
pub fn brute_force_dual(k: &[Vec<f64>], y: &[f64], c: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j]).collect()).collect();
    let objective = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += 0.5 * a[i] * q[i][j] * a[j];
            }
            s -= a[i];
        }
        s
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut r = code;
        for s in state.iter_mut() {
            *s = (r % 3) as u8;
            r /= 3;
        }
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if free.is_empty() {
            let eq: f64 = (0..n).map(|i| y[i] * alpha[i]).sum();
            if eq.abs() > 1e-12 {
                continue;
            }
        } else {
            // [Q_FF y_F; y_Fᵀ 0] [α_F; λ] = [1 − Q_FB α_B; −y_Bᵀ α_B]
            let m = free.len() + 1;
            let mut a = vec![vec![0.0; m + 1]; m];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[r][cc] = q[i][j];
                }
                a[r][m - 1] = y[i];
                a[r][m] = 1.0 - (0..n).filter(|j| state[*j] != 2).map(|j| q[i][j] * alpha[j]).sum::<f64>();
            }
            for (cc, &j) in free.iter().enumerate() {
                a[m - 1][cc] = y[j];
            }
            a[m - 1][m] = -(0..n).filter(|j| state[*j] != 2).map(|j| y[j] * alpha[j]).sum::<f64>();
            let Some(sol) = gauss(a) else { continue };
            if free.iter().zip(&sol).any(|(_, &v)| !(-1e-12..=c + 1e-12).contains(&v)) {
                continue;
            }
            for (&i, &v) in free.iter().zip(&sol) {
                alpha[i] = v.clamp(0.0, c);
            }
        }
        let f = objective(&alpha);
        if best.as_ref().is_none_or(|(_, b)| f < *b) {
            best = Some((alpha, f));
        }
    }
    best.expect("α = 0 is always feasible")
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        let pivot = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot[col];
                for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    Some((0..m - 1).map(|i| a[i][m] / a[i][i]).collect())
}

// ---------------------------------------------------------------------------
// KNN: full sort, stable on row index, lowest class wins a tied vote.

pub fn knn_oracle(train: &[Vec<f64>], labels: &[usize], n_classes: usize, k: usize, query: &[f64]) -> usize {
    let mut order: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in &order[..k] {
        votes[labels[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap()
}
