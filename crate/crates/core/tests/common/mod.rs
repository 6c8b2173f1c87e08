#![allow(dead_code)]

use faer::Mat;
use nrsfm_core::datagen::generate_rotations;
use nrsfm_core::datagen::RotationSpec;
use nrsfm_core::{Matrix, ProblemInput, SolverConfig, SolverState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_input(rng: &mut impl Rng, frames: usize, points: usize) -> ProblemInput {
    let blocks = generate_rotations(RotationSpec::SmoothRandom { max_step_degrees: 40.0 }, frames, rng);
    ProblemInput::new(gaussian(rng, 2 * frames, points), blocks).unwrap()
}

pub fn random_config(rng: &mut impl Rng, frames: usize, points: usize) -> SolverConfig {
    let mut c = SolverConfig::for_size(frames, points);
    c.lambda1 = rng.random_range(0.0..0.9);
    c.lambda3 = rng.random_range(0.0..0.9);
    c.lambda2 = rng.random_range(0.01..1.0);
    c
}

pub fn random_state(rng: &mut impl Rng, frames: usize, points: usize) -> SolverState {
    let (f, p) = (frames, points);
    let mut st = SolverState::zeros(f, p, 10f64.powf(rng.random_range(-2.0..1.0)));
    st.s = gaussian(rng, 3 * f, p);
    st.s_sharp = gaussian(rng, 3 * p, f);
    st.c1 = gaussian(rng, p, p) * 0.3;
    st.e1 = gaussian(rng, p, p) * 0.3;
    st.c2 = gaussian(rng, f, f) * 0.3;
    st.e2 = gaussian(rng, f, f) * 0.3;
    st.j = gaussian(rng, 3 * p, f);
    st.y1 = gaussian(rng, 3 * p, f);
    st.y2 = gaussian(rng, 3 * f, p);
    st.y3 = gaussian(rng, 3 * p, f);
    st.y4 = gaussian(rng, 1, p);
    st.y5 = gaussian(rng, 1, f);
    st.y6 = gaussian(rng, p, p);
    st.y7 = gaussian(rng, f, f);
    st.y8 = gaussian(rng, 3 * p, f);
    for i in 0..p {
        st.c1[(i, i)] = 0.0;
    }
    for i in 0..f {
        st.c2[(i, i)] = 0.0;
    }
    st
}

pub fn random_dims(rng: &mut impl Rng) -> (usize, usize) {
    (rng.random_range(2..=10), rng.random_range(2..=15))
}
pub mod oracles;
pub mod scenes;
