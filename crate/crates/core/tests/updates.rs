//! Closed-form ADMM updates checked against substitution and hand-derived
//! solutions.

mod common;

use common::oracles::gauss_jordan_solve;
use common::*;
use faer::Mat;
use nrsfm_core::admm::AdmmProblem;
use nrsfm_core::linalg::{identity_minus, inf_norm};
use nrsfm_core::model::{reshuffle_g, reshuffle_g_inv};
use nrsfm_core::{Coupling, DiagonalMode, Matrix, ProblemInput, SolverConfig, SolverState};

fn rel(err: &Matrix, scale: &Matrix) -> f64 {
    inf_norm(err.as_ref()) / (1.0 + inf_norm(scale.as_ref()))
}

fn random_problem(seed: u64) -> (ProblemInput, SolverConfig, SolverState) {
    let mut rng = rng(seed);
    let (f, p) = random_dims(&mut rng);
    let input = random_input(&mut rng, f, p);
    let config = random_config(&mut rng, f, p);
    let st = random_state(&mut rng, f, p);
    (input, config, st)
}

#[test]
fn s_update_satisfies_its_sylvester_equation() {
    for seed in 0..30 {
        let (input, config, st) = random_problem(seed);
        let (f, p) = (input.frames(), input.points());
        let problem = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
        let s = problem.update_s(&st).unwrap();
        let b = st.beta;
        let imc = identity_minus(st.c1.as_ref());
        let rtr = input.r.transpose() * &input.r;
        let lhs = (&rtr * &s + &s * b) * (1.0 / b) + &s * &imc * imc.transpose();
        let rhs = input.r.transpose() * &input.w * (1.0 / b)
            + reshuffle_g_inv(st.s_sharp.as_ref(), f, p).unwrap()
            + reshuffle_g_inv(st.y1.as_ref(), f, p).unwrap() * (1.0 / b)
            - &st.y2 * imc.transpose() * (1.0 / b);
        assert!(rel(&(&lhs - &rhs), &rhs) <= 1e-8, "seed {seed}");
    }
}

#[test]
fn s_update_scalar_case() {
    let mut rng = rng(3);
    for _ in 0..20 {
        let input = random_input(&mut rng, 1, 1);
        let mut st = random_state(&mut rng, 1, 1);
        st.c1[(0, 0)] = 0.0;
        let config = SolverConfig::for_size(1, 1);
        let problem = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
        let s = problem.update_s(&st).unwrap();
        // Rows of R are orthonormal, so RᵀR is a projector Π and
        // (Π + 2βI)⁻¹ = Π/(1 + 2β) + (I − Π)/(2β).
        let b = st.beta;
        let pi = input.r.transpose() * &input.r;
        let v = input.r.transpose() * &input.w + &st.s_sharp * b + &st.y1 - &st.y2;
        let proj = &pi * &v;
        let expect = Mat::from_fn(3, 1, |i, _| proj[(i, 0)] / (1.0 + 2.0 * b) + (v[(i, 0)] - proj[(i, 0)]) / (2.0 * b));
        assert!(rel(&(&s - &expect), &expect) <= 1e-10);
    }
}

#[test]
fn s_update_consensus_limit() {
    let mut rng = rng(4);
    let (f, p) = (4, 5);
    let blocks = nrsfm_core::datagen::generate_rotations(
        nrsfm_core::datagen::RotationSpec::SmoothRandom { max_step_degrees: 30.0 },
        f,
        &mut rng,
    );
    let target = gaussian(&mut rng, 3 * f, p);
    let r = nrsfm_core::model::assemble_rotation(&blocks);
    let input = ProblemInput::new(&r * &target, blocks).unwrap();
    let config = SolverConfig::for_size(f, p);
    let mut errs = Vec::new();
    for beta in [1.0, 1e2, 1e4, 1e6] {
        let mut st = SolverState::zeros(f, p, beta);
        st.s_sharp = reshuffle_g(target.as_ref(), f, p).unwrap();
        let shape_only = AdmmProblem::new(&input, config, Coupling::ShapeOnly).unwrap();
        errs.push((shape_only.update_s(&st).unwrap() - &target).norm_max());
        // With C₁ = 0 the self-expression penalty pulls S toward zero with
        // the same weight as the consensus term, so the limit is halfway.
        let joint = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
        let half = &target * 0.5;
        let joint_err = (joint.update_s(&st).unwrap() - &half).norm_max();
        if beta >= 1e6 {
            assert!(joint_err < 1e-5, "{joint_err}");
        }
    }
    assert!(errs.iter().all(|&e| e < 1e-12), "{errs:?}");
}

#[test]
fn s_sharp_update_substitution_and_examples() {
    for seed in 0..30 {
        let (input, config, st) = random_problem(100 + seed);
        let (f, p) = (input.frames(), input.points());
        let problem = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
        let x = problem.update_s_sharp(&st).unwrap();
        let ib = 1.0 / st.beta;
        let imc = identity_minus(st.c2.as_ref());
        let g = Mat::<f64>::identity(f, f) * 2.0 + &imc * imc.transpose();
        let gs = reshuffle_g(st.s.as_ref(), f, p).unwrap();
        let rhs = &gs - &st.y1 * ib + &st.j - &st.y8 * ib - &st.y3 * imc.transpose() * ib;
        assert!(rel(&(&x * &g - &rhs), &rhs) <= 1e-9, "seed {seed}");
    }

    let (input, config, mut st) = random_problem(7);
    let (f, p) = (input.frames(), input.points());
    let problem = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
    st.c2 = Mat::zeros(f, f);
    for y in [&mut st.y1, &mut st.y3, &mut st.y8] {
        *y = Mat::zeros(y.nrows(), y.ncols());
    }
    let gs = reshuffle_g(st.s.as_ref(), f, p).unwrap();
    let x = problem.update_s_sharp(&st).unwrap();
    let expect = (&gs + &st.j) * (1.0 / 3.0);
    assert!((&x - &expect).norm_max() < 1e-12);
    st.j = gs.clone();
    let x = problem.update_s_sharp(&st).unwrap();
    assert!((&x - &gs * (2.0 / 3.0)).norm_max() < 1e-12);
}

fn c_system(data: &Matrix, y_self: &Matrix, y_aff: &Matrix, e: &Matrix, y_e: &Matrix, beta: f64) -> (Matrix, Matrix) {
    let n = data.ncols();
    let ib = 1.0 / beta;
    let mut g = data.transpose() * data;
    for j in 0..n {
        for i in 0..n {
            g[(i, j)] += 1.0 + if i == j { 1.0 } else { 0.0 };
        }
    }
    let proj = data.transpose() * (data + y_self * ib);
    let rhs = Mat::from_fn(n, n, |i, j| proj[(i, j)] + 1.0 - ib * y_aff[(0, j)] + e[(i, j)] - ib * y_e[(i, j)]);
    (g, rhs)
}

#[test]
fn c_updates_solve_the_normal_equations_up_to_the_diagonal() {
    for seed in 0..30 {
        let (input, config, st) = random_problem(200 + seed);
        for mode in [DiagonalMode::ZeroAfterSolve, DiagonalMode::Constrained] {
            let problem = AdmmProblem::new(&input, SolverConfig { diagonal: mode, ..config }, Coupling::Joint).unwrap();
            let cases = [
                (problem.update_c1(&st).unwrap(), c_system(&st.s, &st.y2, &st.y4, &st.e1, &st.y6, st.beta)),
                (problem.update_c2(&st).unwrap(), c_system(&st.s_sharp, &st.y3, &st.y5, &st.e2, &st.y7, st.beta)),
            ];
            for (c, (g, rhs)) in cases {
                let n = c.nrows();
                for i in 0..n {
                    assert_eq!(c[(i, i)], 0.0);
                }
                let defect = &rhs - &g * &c;
                // Zeroing after the solve leaves G·D; the constrained
                // minimizer leaves a diagonal multiplier.
                let d = match mode {
                    DiagonalMode::ZeroAfterSolve => gauss_jordan_solve(&g, &defect),
                    DiagonalMode::Constrained => defect,
                };
                let off = Mat::from_fn(n, n, |i, j| if i == j { 0.0 } else { d[(i, j)] });
                assert!(rel(&off, &rhs) <= 1e-9, "seed {seed} {mode:?}");
            }
        }
    }
}

#[test]
fn c_update_examples() {
    let mut rng = rng(11);
    let input = random_input(&mut rng, 3, 1);
    let st = random_state(&mut rng, 3, 1);
    let problem = AdmmProblem::new(&input, SolverConfig::for_size(3, 1), Coupling::Joint).unwrap();
    assert_eq!(problem.update_c1(&st).unwrap()[(0, 0)], 0.0);
    let input = random_input(&mut rng, 1, 4);
    let st = random_state(&mut rng, 1, 4);
    let problem = AdmmProblem::new(&input, SolverConfig::for_size(1, 4), Coupling::Joint).unwrap();
    assert_eq!(problem.update_c2(&st).unwrap()[(0, 0)], 0.0);

    // Two identical columns: the solution is invariant under swapping them.
    for mode in [DiagonalMode::ZeroAfterSolve, DiagonalMode::Constrained] {
        let (f, p) = (3, 5);
        let input = random_input(&mut rng, f, p);
        let mut st = SolverState::zeros(f, p, 0.7);
        st.s = gaussian(&mut rng, 3 * f, p);
        for i in 0..3 * f {
            st.s[(i, 1)] = st.s[(i, 0)];
        }
        let config = SolverConfig {
            diagonal: mode,
            ..SolverConfig::for_size(f, p)
        };
        let problem = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
        let c = problem.update_c1(&st).unwrap();
        let swap = |k: usize| match k {
            0 => 1,
            1 => 0,
            k => k,
        };
        let swapped = Mat::from_fn(p, p, |i, j| c[(swap(i), swap(j))]);
        assert!((&c - &swapped).norm_max() < 1e-9, "{mode:?}");
    }
}

#[test]
fn j_update_examples() {
    let (input, mut config, mut st) = random_problem(21);
    config.lambda2 = 0.0;
    let problem = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
    let j = problem.update_j(&st).unwrap();
    let expect = &st.s_sharp + &st.y8 * (1.0 / st.beta);
    assert!((&j - &expect).norm_max() < 1e-12);

    config.lambda2 = 1.0;
    let problem = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
    let (rows, cols) = (st.s_sharp.nrows(), st.s_sharp.ncols());
    let u = Mat::from_fn(rows, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let v = Mat::from_fn(1, cols, |_, j| if j == 0 { 1.0 } else { 0.0 });
    st.s_sharp = &u * &v * (0.5 / st.beta);
    st.y8 = Mat::zeros(rows, cols);
    assert_eq!(problem.update_j(&st).unwrap().norm_max(), 0.0);
}

#[test]
fn e_updates_delegate_to_the_elastic_net() {
    let (input, config, st) = random_problem(31);
    let problem = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
    let e1 = problem.update_e1(&st).unwrap();
    let m = &st.c1 + &st.y6 * (1.0 / st.beta);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let o = common::oracles::elastic_net_scalar(m[(i, j)], config.lambda1, config.gamma1(), st.beta);
            assert!((e1[(i, j)] - o).abs() <= 1e-12 * (1.0 + o.abs()));
        }
    }
}
