//! Scenes and solver settings shared by the end-to-end tests.

#![allow(dead_code)]

use nrsfm_core::datagen::{generate, mean_trajectory_span, BodySpec, Motif, RotationSpec, SceneSpec};
use nrsfm_core::{DiagonalMode, ProblemInput, Scene, SolverConfig};

pub const ROTATION: RotationSpec = RotationSpec::SmoothRandom { max_step_degrees: 90.0 };

fn body(motif: Motif, points: usize, rank: usize, amplitude: f64, offset: [f64; 3]) -> BodySpec {
    BodySpec {
        motif,
        points,
        rank,
        amplitude,
        offset,
    }
}

/// Two bodies, 60 points, 50 frames.
pub fn two_body(seed: u64) -> SceneSpec {
    SceneSpec {
        bodies: vec![
            body(Motif::LowRankRandom, 30, 3, 0.5, [-0.5, 0.0, 0.0]),
            body(Motif::ArticulatedPendulum, 30, 2, 0.5, [0.5, 0.0, 0.25]),
        ],
        frames: 50,
        rotation: ROTATION,
        noise_sigma: 0.0,
        seed,
    }
}

/// Three bodies, 90 points, 50 frames.
pub fn three_body(seed: u64) -> SceneSpec {
    let mut spec = two_body(seed);
    spec.bodies[0].offset = [-0.6, 0.0, 0.0];
    spec.bodies[1].offset = [0.6, 0.0, 0.25];
    spec.bodies
        .push(body(Motif::ArticulatedPendulum, 30, 3, 0.4, [0.0, 0.6, -0.25]));
    spec
}

/// Two bodies of 500 points each.
pub fn large(seed: u64) -> SceneSpec {
    let mut spec = three_body(seed);
    spec.bodies.pop();
    for b in &mut spec.bodies {
        b.points = 500;
    }
    spec
}

/// Adds gaussian 2D noise with standard deviation `relative` times the mean
/// trajectory span of the noiseless tracks.
pub fn with_relative_noise(spec: &SceneSpec, relative: f64) -> SceneSpec {
    let (_, clean) = generate(spec).unwrap();
    SceneSpec {
        noise_sigma: relative * mean_trajectory_span(&clean.w),
        ..spec.clone()
    }
}

pub fn build(spec: &SceneSpec) -> (Scene, ProblemInput) {
    generate(spec).unwrap()
}

/// Paper weights and schedule start, with the exact zero-diagonal C-update
/// and a raised penalty cap.
pub fn tuned_config(frames: usize, points: usize) -> SolverConfig {
    SolverConfig {
        beta_max: 1e8,
        diagonal: DiagonalMode::Constrained,
        ..SolverConfig::for_size(frames, points)
    }
}
