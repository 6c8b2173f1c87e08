//! Independent reference implementations used to check the kernels.

#![allow(dead_code)]

use faer::Mat;
use nrsfm_core::Matrix;

pub fn soft_threshold_scalar(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

pub fn soft_threshold_loop(m: &Matrix, tau: f64) -> Matrix {
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = soft_threshold_scalar(m[(i, j)], tau);
        }
    }
    out
}

/// Minimizes `λ|e| + γe² + (β/2)(e − m)²` by bisection on the
/// (monotone) subgradient.
pub fn elastic_net_scalar(m: f64, lambda: f64, gamma: f64, beta: f64) -> f64 {
    if (beta * m).abs() <= lambda {
        return 0.0;
    }
    let sign = m.signum();
    let grad = |e: f64| lambda * sign + 2.0 * gamma * e + beta * (e - m);
    let (mut lo, mut hi) = if sign > 0.0 { (0.0, m) } else { (m, 0.0) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if grad(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `τ‖J‖* + ½‖J − M‖²` through its dual: projected gradient on
/// `½‖Z − M‖²` over the spectral-norm ball `‖Z‖₂ ≤ τ`, then `J = M − Z`.
pub fn svt_dual_projected_gradient(m: &Matrix, tau: f64, iters: usize) -> Matrix {
    let mut z = Mat::<f64>::zeros(m.nrows(), m.ncols());
    for _ in 0..iters {
        let step = &z - (&z - m) * 0.5;
        z = project_spectral_ball(&step, tau);
    }
    m - &z
}

fn project_spectral_ball(m: &Matrix, tau: f64) -> Matrix {
    let svd = m.thin_svd().unwrap();
    let s = svd.S().column_vector();
    let u = svd.U();
    let v = svd.V();
    let mut out = Mat::<f64>::zeros(m.nrows(), m.ncols());
    for k in 0..s.nrows() {
        let sk = s[k].min(tau);
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                out[(i, j)] += sk * u[(i, k)] * v[(j, k)];
            }
        }
    }
    out
}

pub fn prox_nuclear_objective(j: &Matrix, m: &Matrix, tau: f64) -> f64 {
    let sv = j.singular_values().unwrap();
    tau * sv.iter().sum::<f64>() + 0.5 * (j - m).squared_norm_l2()
}

/// Dense solve of `(I ⊗ A + Bᵀ ⊗ I) vec(X) = vec(C)` with column-major vec.
pub fn sylvester_kronecker(a: &Matrix, b: &Matrix, c: &Matrix) -> Matrix {
    let (n, p) = (a.nrows(), b.nrows());
    let k = Mat::from_fn(n * p, n * p, |row, col| {
        let (i, j) = (row % n, row / n);
        let (l, q) = (col % n, col / n);
        let mut v = 0.0;
        if j == q {
            v += a[(i, l)];
        }
        if i == l {
            v += b[(q, j)];
        }
        v
    });
    let rhs = Mat::from_fn(n * p, 1, |row, _| c[(row % n, row / n)]);
    let x = gauss_jordan_solve(&k, &rhs);
    Mat::from_fn(n, p, |i, j| x[(i + j * n, 0)])
}

/// Gaussian elimination with partial pivoting, written out directly.
pub fn gauss_jordan_solve(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).chain((0..m).map(|j| b[(i, j)])).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for row in 0..n {
            if row != col {
                let factor = aug[row][col];
                if factor != 0.0 {
                    for k in 0..n + m {
                        aug[row][k] -= factor * aug[col][k];
                    }
                }
            }
        }
    }
    Mat::from_fn(n, m, |i, j| aug[i][n + j])
}

pub fn explicit_inverse(g: &Matrix) -> Matrix {
    let n = g.nrows();
    gauss_jordan_solve(g, &Mat::<f64>::identity(n, n))
}

/// Per-frame loop over scalar entries.
pub fn e3d_loop(est: &Matrix, gt: &Matrix) -> f64 {
    let frames = gt.nrows() / 3;
    let mut total = 0.0;
    for f in 0..frames {
        let (mut num, mut den) = (0.0, 0.0);
        for d in 0..3 {
            for p in 0..gt.ncols() {
                let diff = est[(3 * f + d, p)] - gt[(3 * f + d, p)];
                num += diff * diff;
                den += gt[(3 * f + d, p)] * gt[(3 * f + d, p)];
            }
        }
        total += num.sqrt() / den.sqrt();
    }
    total / frames as f64
}

/// Enumerates every permutation recursively and keeps the best agreement.
pub fn ems_brute_force(est: &[usize], gt: &[usize], k: usize) -> f64 {
    fn go(depth: usize, k: usize, used: &mut Vec<bool>, perm: &mut Vec<usize>, est: &[usize], gt: &[usize], best: &mut usize) {
        if depth == k {
            let agree = est.iter().zip(gt).filter(|&(&e, &g)| perm[e] == g).count();
            *best = (*best).max(agree);
            return;
        }
        for c in 0..k {
            if !used[c] {
                used[c] = true;
                perm.push(c);
                go(depth + 1, k, used, perm, est, gt, best);
                perm.pop();
                used[c] = false;
            }
        }
    }
    let mut best = 0;
    go(0, k, &mut vec![false; k], &mut Vec::new(), est, gt, &mut best);
    (est.len() - best) as f64 / est.len() as f64
}

pub fn random_spd(rng: &mut impl rand::Rng, n: usize) -> Matrix {
    let x = super::gaussian(rng, n, n);
    let mut g = &x * x.transpose();
    for i in 0..n {
        g[(i, i)] += 0.5;
    }
    g
}

pub fn random_psd(rng: &mut impl rand::Rng, n: usize) -> Matrix {
    let x = super::gaussian(rng, n, n);
    let c = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }) - &x * 0.3;
    &c * c.transpose()
}
