//! Fixtures shared by the benchmarks.

use faer::Mat;
use nrsfm_core::datagen::{generate, BodySpec, Motif, RotationSpec, SceneSpec};
use nrsfm_core::{Matrix, ProblemInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `XᵀX + n·I`, symmetric positive definite.
pub fn spd(n: usize, seed: u64) -> Matrix {
    let x = gaussian(n, n, seed);
    let mut g = x.transpose() * &x;
    for i in 0..n {
        g[(i, i)] += n as f64;
    }
    g
}

/// Two-body scene with `points_per_body` trajectories per body.
pub fn two_body(points_per_body: usize, frames: usize) -> ProblemInput {
    let body = |motif, rank, offset| BodySpec {
        motif,
        points: points_per_body,
        rank,
        amplitude: 0.5,
        offset,
    };
    let spec = SceneSpec {
        bodies: vec![
            body(Motif::LowRankRandom, 3, [-0.5, 0.0, 0.0]),
            body(Motif::ArticulatedPendulum, 2, [0.5, 0.0, 0.25]),
        ],
        frames,
        rotation: RotationSpec::SmoothRandom { max_step_degrees: 90.0 },
        noise_sigma: 0.0,
        seed: 1,
    };
    generate(&spec).expect("valid spec").1
}
