//! Two-stage comparison pipelines: reconstruct-then-cluster and
//! cluster-then-reconstruct, both assembled from the single-body
//! (nuclear-norm only) solver and the trajectory self-expression solve.

use faer::Mat;

use crate::admm::{self_expression, solve_shape_only};
use crate::cluster::{build_affinity, spectral_cluster, AffinitySource, Segmentation};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::model::{ProblemInput, SolveResult, SolverConfig};

/// Clusters the columns of `data` by affine elastic-net self-expression
/// followed by spectral clustering of `|C| + |Cᵀ|`.
pub fn cluster_columns(data: &Matrix, config: &SolverConfig, k: usize, seed: u64) -> Result<Segmentation> {
    if k == 1 {
        let affinity = build_affinity(Mat::<f64>::zeros(data.ncols(), data.ncols()).as_ref(), AffinitySource::Trajectory)?;
        return Ok(Segmentation {
            labels: vec![0; data.ncols()],
            k,
            affinity,
            isolated: Vec::new(),
            empty_clusters: Vec::new(),
        });
    }
    let expr = self_expression(data.as_ref(), config.lambda1, config)?;
    let aff = build_affinity(expr.c.as_ref(), AffinitySource::Trajectory)?;
    spectral_cluster(&aff, k, seed)
}

/// Single-body reconstruction of all tracks, then subspace clustering of
/// the recovered 3D trajectories.
pub fn reconstruct_then_cluster(
    input: &ProblemInput,
    config: &SolverConfig,
    k: usize,
    seed: u64,
) -> Result<(SolveResult, Segmentation)> {
    let recon = solve_shape_only(input, config)?;
    let seg = cluster_columns(&recon.s, config, k, seed)?;
    Ok((recon, seg))
}

/// Output of [`cluster_then_reconstruct`].
#[derive(Debug, Clone)]
pub struct ClusterThenReconstruct {
    /// Column indices and reconstruction of each non-empty cluster.
    pub clusters: Vec<(Vec<usize>, SolveResult)>,
    /// Per-cluster shapes placed back at their original columns (3F×P).
    pub s: Matrix,
    pub segmentation: Segmentation,
}

/// Subspace clustering of the 2D tracks, then an independent single-body
/// reconstruction of each cluster.
pub fn cluster_then_reconstruct(
    input: &ProblemInput,
    config: &SolverConfig,
    k: usize,
    seed: u64,
) -> Result<ClusterThenReconstruct> {
    let segmentation = cluster_columns(&input.w, config, k, seed)?;
    let mut s = Mat::<f64>::zeros(3 * input.frames(), input.points());
    let mut clusters = Vec::new();
    for c in 0..k {
        let cols: Vec<usize> = (0..input.points()).filter(|&j| segmentation.labels[j] == c).collect();
        if cols.is_empty() {
            continue;
        }
        let sub = input.with_columns(&cols)?;
        let result = solve_shape_only(&sub, config)?;
        for (local, &global) in cols.iter().enumerate() {
            for i in 0..s.nrows() {
                s[(i, global)] = result.s[(i, local)];
            }
        }
        clusters.push((cols, result));
    }
    Ok(ClusterThenReconstruct {
        clusters,
        s,
        segmentation,
    })
}
