//! Affinity construction and normalized spectral clustering.

use faer::{Mat, MatRef};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Result};
use crate::linalg::Matrix;
use crate::prox::SymmetricEigen;

/// Number of k-means restarts.
pub const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffinitySource {
    Trajectory,
    Frame,
}

/// Symmetric nonnegative affinity with zero diagonal.
#[derive(Debug, Clone)]
pub struct Affinity {
    pub a: Matrix,
    pub source: AffinitySource,
}

impl Affinity {
    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.a.nrows() == 0
    }

    /// Wraps an existing matrix after checking the affinity invariants.
    pub fn from_matrix(a: Matrix, source: AffinitySource) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return dim_err(format!("affinity must be square, got {}×{}", a.nrows(), a.ncols()));
        }
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                let v = a[(i, j)];
                if !(v >= 0.0) || v != a[(j, i)] {
                    return param_err(format!("affinity entry ({i}, {j}) breaks symmetry or nonnegativity"));
                }
            }
            if a[(j, j)] != 0.0 {
                return param_err(format!("affinity diagonal entry {j} is nonzero"));
            }
        }
        Ok(Self { a, source })
    }
}

/// `A = |C| + |Cᵀ|` with the diagonal forced to zero.
pub fn build_affinity(c: MatRef<'_, f64>, source: AffinitySource) -> Result<Affinity> {
    if c.nrows() != c.ncols() {
        return dim_err(format!("coefficient matrix must be square, got {}×{}", c.nrows(), c.ncols()));
    }
    let n = c.nrows();
    let a = Mat::from_fn(n, n, |i, j| if i == j { 0.0 } else { c[(i, j)].abs() + c[(j, i)].abs() });
    Ok(Affinity { a, source })
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub labels: Vec<usize>,
    pub k: usize,
    pub affinity: Affinity,
    /// Vertices with zero degree; their normalization weight was taken as 0.
    pub isolated: Vec<usize>,
    /// Cluster ids in `[0, k)` that received no member.
    pub empty_clusters: Vec<usize>,
}

/// Eigen-decomposition of `L = I − D^{-1/2} A D^{-1/2}` and the isolated vertices.
fn normalized_laplacian(aff: &Affinity) -> Result<(SymmetricEigen, Vec<usize>)> {
    let n = aff.len();
    let a = &aff.a;
    let mut isolated = Vec::new();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = (0..n).map(|j| a[(i, j)]).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                isolated.push(i);
                0.0
            }
        })
        .collect();
    let lap = Mat::from_fn(n, n, |i, j| {
        let m = inv_sqrt[i] * a[(i, j)] * inv_sqrt[j];
        if i == j {
            1.0 - m
        } else {
            -m
        }
    });
    Ok((SymmetricEigen::new(lap.as_ref())?, isolated))
}

/// Ng–Jordan–Weiss spectral clustering: bottom-`k` eigenvectors of the
/// symmetric normalized Laplacian, row-normalized, then k-means++ with
/// [`KMEANS_RESTARTS`] restarts keeping the lowest-inertia run.
pub fn spectral_cluster(aff: &Affinity, k: usize, seed: u64) -> Result<Segmentation> {
    let n = aff.len();
    if k == 0 {
        return param_err("K must be at least 1");
    }
    if k > n {
        return param_err(format!("K = {k} exceeds the number of vertices {n}"));
    }
    let (eig, isolated) = normalized_laplacian(aff)?;
    let mut embedding = Mat::from_fn(n, k, |i, j| eig.vectors[(i, j)]);
    for i in 0..n {
        let norm = (0..k).map(|j| embedding[(i, j)].powi(2)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for j in 0..k {
                embedding[(i, j)] /= norm;
            }
        }
    }
    let labels = kmeans(embedding.as_ref(), k, seed);
    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    let empty_clusters = (0..k).filter(|&c| counts[c] == 0).collect();
    Ok(Segmentation {
        labels,
        k,
        affinity: aff.clone(),
        isolated,
        empty_clusters,
    })
}

/// Number of clusters by the largest gap in the normalized Laplacian
/// spectrum among the first `k_max + 1` eigenvalues.
pub fn estimate_num_clusters(aff: &Affinity, k_max: usize) -> Result<usize> {
    let n = aff.len();
    if k_max == 0 {
        return param_err("k_max must be at least 1");
    }
    if k_max > n {
        return param_err(format!("k_max = {k_max} exceeds the number of vertices {n}"));
    }
    if n == 1 {
        return Ok(1);
    }
    let (eig, _) = normalized_laplacian(aff)?;
    let top = k_max.min(n - 1);
    let mut best = (1, f64::NEG_INFINITY);
    for k in 1..=top {
        let gap = eig.values[k] - eig.values[k - 1];
        if gap > best.1 {
            best = (k, gap);
        }
    }
    Ok(best.0)
}

fn sq_dist(x: MatRef<'_, f64>, i: usize, c: &[f64]) -> f64 {
    c.iter().enumerate().map(|(j, cj)| (x[(i, j)] - cj).powi(2)).sum()
}

/// Nearest centroid, ties to the lowest index.
fn nearest(x: MatRef<'_, f64>, i: usize, centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(x, i, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp_init(x: MatRef<'_, f64>, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = x.nrows();
    let row = |i: usize| (0..x.ncols()).map(|j| x[(i, j)]).collect::<Vec<f64>>();
    let mut centroids = vec![row(rng.random_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x, i, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(row(pick));
        let last = centroids.last().expect("nonempty");
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x, i, last));
        }
    }
    centroids
}

fn lloyd(x: MatRef<'_, f64>, mut centroids: Vec<Vec<f64>>) -> (Vec<usize>, f64) {
    let (n, dim) = (x.nrows(), x.ncols());
    let k = centroids.len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for i in 0..n {
            let (c, _) = nearest(x, i, &centroids);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..dim {
                sums[labels[i]][j] += x[(i, j)];
            }
        }
        for c in 0..k {
            // Empty clusters keep their previous centroid.
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = (0..n).map(|i| sq_dist(x, i, &centroids[labels[i]])).sum();
    (labels, inertia)
}

/// Deterministic k-means over the rows of `x`.
pub fn kmeans(x: MatRef<'_, f64>, k: usize, seed: u64) -> Vec<usize> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
        let init = kmeans_pp_init(x, k, &mut rng);
        let (labels, inertia) = lloyd(x, init);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    canonical_labels(&best.expect("at least one restart").0, k)
}

/// Relabels so cluster ids appear in order of first occurrence.
fn canonical_labels(labels: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_affinity(sizes: &[usize], off: f64) -> Affinity {
        let n: usize = sizes.iter().sum();
        let mut owner = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            owner.extend(std::iter::repeat_n(b, s));
        }
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else if owner[i] == owner[j] {
                1.0
            } else {
                off
            }
        });
        Affinity::from_matrix(a, AffinitySource::Trajectory).unwrap()
    }

    #[test]
    fn affinity_basics() {
        let z: Matrix = Mat::zeros(3, 3);
        assert_eq!(build_affinity(z.as_ref(), AffinitySource::Trajectory).unwrap().a, z);
        let mut c: Matrix = Mat::zeros(2, 2);
        c[(0, 1)] = 0.5;
        let a = build_affinity(c.as_ref(), AffinitySource::Trajectory).unwrap();
        assert_eq!((a.a[(0, 1)], a.a[(1, 0)]), (0.5, 0.5));
        assert!(build_affinity(Mat::<f64>::zeros(2, 3).as_ref(), AffinitySource::Frame).is_err());
    }

    #[test]
    fn two_blocks_recovered() {
        let aff = block_affinity(&[5, 7], 0.0);
        let seg = spectral_cluster(&aff, 2, 0).unwrap();
        assert_eq!(seg.labels, [vec![0; 5], vec![1; 7]].concat());
        assert!(seg.empty_clusters.is_empty());
    }

    #[test]
    fn k_one_is_all_zero() {
        let aff = block_affinity(&[4, 4], 0.2);
        assert_eq!(spectral_cluster(&aff, 1, 3).unwrap().labels, vec![0; 8]);
    }

    #[test]
    fn rejects_k_above_n() {
        let aff = block_affinity(&[2], 0.0);
        assert!(spectral_cluster(&aff, 3, 0).is_err());
    }

    #[test]
    fn isolated_vertex_reported() {
        let mut a = block_affinity(&[3, 3], 0.0).a;
        for j in 0..6 {
            a[(0, j)] = 0.0;
            a[(j, 0)] = 0.0;
        }
        let aff = Affinity::from_matrix(a, AffinitySource::Trajectory).unwrap();
        let seg = spectral_cluster(&aff, 2, 1).unwrap();
        assert_eq!(seg.isolated, vec![0]);
    }

    #[test]
    fn eigengap_counts_blocks() {
        assert_eq!(estimate_num_clusters(&block_affinity(&[6, 6], 0.0), 5).unwrap(), 2);
        assert_eq!(estimate_num_clusters(&block_affinity(&[4, 5, 6], 0.0), 6).unwrap(), 3);
    }

    #[test]
    fn from_matrix_checks_invariants() {
        let a = faer::mat![[0.0, 1.0], [0.5, 0.0]];
        assert!(Affinity::from_matrix(a, AffinitySource::Trajectory).is_err());
        let a = faer::mat![[1.0, 1.0], [1.0, 0.0]];
        assert!(Affinity::from_matrix(a, AffinitySource::Trajectory).is_err());
    }
}
