//! Reconstruction and segmentation error metrics.

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Result};

/// Largest cluster count accepted by [`ems`].
pub const MAX_CLUSTERS: usize = 20;
/// Up to this many clusters the permutation search is exhaustive.
pub const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub e3d: f64,
    pub ems: f64,
    pub per_frame_e3d: Vec<f64>,
    /// `permutation[estimated_label] = ground_truth_label`.
    pub permutation: Vec<usize>,
}

/// Per-frame relative Frobenius errors `‖S_f^est − S_f^gt‖ / ‖S_f^gt‖`.
pub fn per_frame_e3d(s_est: MatRef<'_, f64>, s_gt: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if s_est.nrows() != s_gt.nrows() || s_est.ncols() != s_gt.ncols() {
        return dim_err(format!(
            "estimate is {}×{}, ground truth is {}×{}",
            s_est.nrows(),
            s_est.ncols(),
            s_gt.nrows(),
            s_gt.ncols()
        ));
    }
    if s_gt.nrows() % 3 != 0 || s_gt.nrows() == 0 {
        return dim_err(format!("shape stacks need 3F rows, got {}", s_gt.nrows()));
    }
    let frames = s_gt.nrows() / 3;
    (0..frames)
        .map(|f| {
            let est = s_est.subrows(3 * f, 3);
            let gt = s_gt.subrows(3 * f, 3);
            let denom = gt.norm_l2();
            if denom == 0.0 {
                return param_err(format!("ground-truth frame {f} has zero norm"));
            }
            Ok((est - gt).norm_l2() / denom)
        })
        .collect()
}

/// Mean per-frame relative reconstruction error.
pub fn e3d(s_est: MatRef<'_, f64>, s_gt: MatRef<'_, f64>) -> Result<f64> {
    let per = per_frame_e3d(s_est, s_gt)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

fn confusion(labels_est: &[usize], labels_gt: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    if labels_est.len() != labels_gt.len() {
        return dim_err(format!(
            "label vectors differ in length ({} vs {})",
            labels_est.len(),
            labels_gt.len()
        ));
    }
    if labels_est.is_empty() {
        return param_err("label vectors are empty");
    }
    if k == 0 {
        return param_err("K must be positive");
    }
    if k > MAX_CLUSTERS {
        return param_err(format!("K = {k} exceeds the limit of {MAX_CLUSTERS}"));
    }
    let mut m = vec![vec![0usize; k]; k];
    for (&e, &g) in labels_est.iter().zip(labels_gt) {
        if e >= k || g >= k {
            return param_err(format!("label {} outside [0, {k})", e.max(g)));
        }
        m[e][g] += 1;
    }
    Ok(m)
}

fn rate(n: usize, matched: usize) -> f64 {
    (n - matched) as f64 / n as f64
}

/// Best-permutation misclassification rate by exhaustive search over all
/// `K!` matchings (lexicographically first optimum).
pub fn ems_exhaustive(labels_est: &[usize], labels_gt: &[usize], k: usize) -> Result<(f64, Vec<usize>)> {
    let conf = confusion(labels_est, labels_gt, k)?;
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (0usize, perm.clone());
    let mut first = true;
    loop {
        let score: usize = (0..k).map(|i| conf[i][perm[i]]).sum();
        if first || score > best.0 {
            best = (score, perm.clone());
            first = false;
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok((rate(labels_est.len(), best.0), best.1))
}

/// Lexicographic successor; false when `perm` was the last permutation.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Best-permutation misclassification rate via the Hungarian algorithm on
/// the confusion matrix.
pub fn ems_hungarian(labels_est: &[usize], labels_gt: &[usize], k: usize) -> Result<(f64, Vec<usize>)> {
    let conf = confusion(labels_est, labels_gt, k)?;
    let max = conf.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost: Vec<Vec<i64>> = conf
        .iter()
        .map(|row| row.iter().map(|&c| max - c as i64).collect())
        .collect();
    let perm = hungarian_min(&cost);
    let matched: usize = (0..k).map(|i| conf[i][perm[i]]).sum();
    Ok((rate(labels_est.len(), matched), perm))
}

/// Square min-cost assignment (Kuhn–Munkres with potentials). Returns
/// `assignment[row] = column`.
fn hungarian_min(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = i64::MAX / 4;
    // 1-based arrays: p[col] = row matched to col.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

/// Fraction of misclassified trajectories under the best matching of
/// estimated to ground-truth cluster ids.
pub fn ems(labels_est: &[usize], labels_gt: &[usize], k: usize) -> Result<(f64, Vec<usize>)> {
    if k <= EXHAUSTIVE_LIMIT {
        ems_exhaustive(labels_est, labels_gt, k)
    } else {
        ems_hungarian(labels_est, labels_gt, k)
    }
}

/// Both metrics at once.
pub fn evaluate(
    s_est: MatRef<'_, f64>,
    s_gt: MatRef<'_, f64>,
    labels_est: &[usize],
    labels_gt: &[usize],
    k: usize,
) -> Result<EvalReport> {
    let per_frame = per_frame_e3d(s_est, s_gt)?;
    let e3d = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
    let (ems, permutation) = ems(labels_est, labels_gt, k)?;
    Ok(EvalReport {
        e3d,
        ems,
        per_frame_e3d: per_frame,
        permutation,
    })
}

/// Fraction of entries with magnitude below `tol`.
pub fn near_zero_fraction(m: MatRef<'_, f64>, tol: f64) -> f64 {
    let total = m.nrows() * m.ncols();
    if total == 0 {
        return 0.0;
    }
    let mut count = 0usize;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)].abs() < tol {
                count += 1;
            }
        }
    }
    count as f64 / total as f64
}
