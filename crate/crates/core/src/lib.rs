//! Joint multi-body non-rigid structure-from-motion and motion segmentation.
//!
//! Given 2D feature tracks `W` (2F×P) and per-frame orthographic cameras
//! `R`, the solver recovers per-frame 3D shapes `S` (3F×P) together with
//! trajectory-space (`C₁`, P×P) and shape-space (`C₂`, F×F) affine
//! self-expression coefficients. `S` is regularized by the nuclear norm of
//! its reshuffled per-frame layout `S♯`. Clustering `|C₁| + |C₁ᵀ|` segments
//! the objects.
//!
//! ```no_run
//! use nrsfm_core::{datagen, solve, SolverConfig};
//! # fn spec() -> datagen::SceneSpec { unimplemented!() }
//! let (scene, input) = datagen::generate(&spec()).unwrap();
//! let config = SolverConfig::for_size(input.frames(), input.points());
//! let result = solve(&input, &config).unwrap();
//! let seg = nrsfm_core::segment(&result, scene.num_objects, 0).unwrap();
//! ```

pub mod admm;
pub mod baselines;
pub mod cluster;
pub mod datagen;
mod error;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod prox;

pub use admm::{solve, solve_shape_only, Coupling, ResidualRecord, Solver};
pub use cluster::{build_affinity, spectral_cluster, Affinity, AffinitySource, Segmentation};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use metrics::{e3d, ems, EvalReport};
pub use model::{DiagonalMode, ProblemInput, ProjectionBlock, Scene, SolveResult, SolverConfig, SolverState};

/// Spectral clustering of the trajectory affinity of a solve.
pub fn segment(result: &SolveResult, k: usize, seed: u64) -> Result<Segmentation> {
    let aff = build_affinity(result.c1.as_ref(), AffinitySource::Trajectory)?;
    spectral_cluster(&aff, k, seed)
}
