//! Each closed-form update must not increase the augmented Lagrangian when
//! every other block is held fixed.

mod common;

use common::*;
use nrsfm_core::admm::AdmmProblem;
use nrsfm_core::{Coupling, DiagonalMode, Matrix, SolverConfig, SolverState};

const SLACK: f64 = 1e-8;
const CASES: u64 = 50;

type Slot = fn(&mut SolverState) -> &mut Matrix;

fn check<U>(name: &str, update: U, slot: Slot, coupling: Coupling)
where
    U: Fn(&AdmmProblem<'_>, &SolverState) -> nrsfm_core::Result<Matrix>,
{
    check_with(name, update, slot, coupling, DiagonalMode::ZeroAfterSolve);
}

fn check_with<U>(name: &str, update: U, slot: Slot, coupling: Coupling, diagonal: DiagonalMode)
where
    U: Fn(&AdmmProblem<'_>, &SolverState) -> nrsfm_core::Result<Matrix>,
{
    let mut worst = f64::NEG_INFINITY;
    for case in 0..CASES {
        let mut rng = rng(1000 + case);
        let (f, p) = random_dims(&mut rng);
        let input = random_input(&mut rng, f, p);
        let config = SolverConfig {
            diagonal,
            ..random_config(&mut rng, f, p)
        };
        let problem = AdmmProblem::new(&input, config, coupling).unwrap();
        let mut st = random_state(&mut rng, f, p);
        let before = problem.augmented_lagrangian(&st).unwrap();
        let new = update(&problem, &st).unwrap();
        *slot(&mut st) = new;
        let after = problem.augmented_lagrangian(&st).unwrap();
        let scale = 1.0 + before.abs();
        worst = worst.max((after - before) / scale);
        assert!(
            after <= before + SLACK * scale,
            "{name}: case {case} (F={f}, P={p}) rose from {before} to {after}"
        );
    }
    eprintln!("{name}: worst relative change {worst:.3e}");
}

/// For the convex blocks the update is the exact minimizer, so no small
/// perturbation of it may lower the augmented Lagrangian.
fn check_minimizer<U>(name: &str, update: U, slot: Slot)
where
    U: Fn(&AdmmProblem<'_>, &SolverState) -> nrsfm_core::Result<Matrix>,
{
    check_minimizer_with(name, update, slot, DiagonalMode::ZeroAfterSolve, false);
}

fn check_minimizer_with<U>(name: &str, update: U, slot: Slot, diagonal: DiagonalMode, zero_diag_dirs: bool)
where
    U: Fn(&AdmmProblem<'_>, &SolverState) -> nrsfm_core::Result<Matrix>,
{
    for case in 0..CASES / 5 {
        let mut rng = rng(5000 + case);
        let (f, p) = random_dims(&mut rng);
        let input = random_input(&mut rng, f, p);
        let config = SolverConfig {
            diagonal,
            ..random_config(&mut rng, f, p)
        };
        let problem = AdmmProblem::new(&input, config, Coupling::Joint).unwrap();
        let mut st = random_state(&mut rng, f, p);
        let new = update(&problem, &st).unwrap();
        *slot(&mut st) = new.clone();
        let at_min = problem.augmented_lagrangian(&st).unwrap();
        for _ in 0..5 {
            let mut dir = gaussian(&mut rng, new.nrows(), new.ncols());
            if zero_diag_dirs {
                for i in 0..dir.nrows().min(dir.ncols()) {
                    dir[(i, i)] = 0.0;
                }
            }
            for t in [1e-3, -1e-3] {
                *slot(&mut st) = &new + &dir * t;
                let moved = problem.augmented_lagrangian(&st).unwrap();
                assert!(
                    moved >= at_min - 1e-9 * (1.0 + at_min.abs()),
                    "{name}: case {case} perturbation lowered {at_min} to {moved}"
                );
            }
        }
    }
}

#[test]
fn s_update_descends() {
    check("S", |p, st| p.update_s(st), |st| &mut st.s, Coupling::Joint);
    check("S shape-only", |p, st| p.update_s(st), |st| &mut st.s, Coupling::ShapeOnly);
    check_minimizer("S", |p, st| p.update_s(st), |st| &mut st.s);
}

#[test]
fn s_sharp_update_descends() {
    check("S_sharp", |p, st| p.update_s_sharp(st), |st| &mut st.s_sharp, Coupling::Joint);
    check("S_sharp shape-only", |p, st| p.update_s_sharp(st), |st| &mut st.s_sharp, Coupling::ShapeOnly);
    check_minimizer("S_sharp", |p, st| p.update_s_sharp(st), |st| &mut st.s_sharp);
}

#[test]
fn c1_update_descends() {
    check_with("C1 constrained", |p, st| p.update_c1(st), |st| &mut st.c1, Coupling::Joint, DiagonalMode::Constrained);
    check_minimizer_with("C1 constrained", |p, st| p.update_c1(st), |st| &mut st.c1, DiagonalMode::Constrained, true);
}

#[test]
fn c2_update_descends() {
    check_with("C2 constrained", |p, st| p.update_c2(st), |st| &mut st.c2, Coupling::Joint, DiagonalMode::Constrained);
    check_minimizer_with("C2 constrained", |p, st| p.update_c2(st), |st| &mut st.c2, DiagonalMode::Constrained, true);
}

#[test]
fn j_update_descends() {
    check("J", |p, st| p.update_j(st), |st| &mut st.j, Coupling::Joint);
    check_minimizer("J", |p, st| p.update_j(st), |st| &mut st.j);
}

#[test]
fn e_updates_descend() {
    check("E1", |p, st| p.update_e1(st), |st| &mut st.e1, Coupling::Joint);
    check("E2", |p, st| p.update_e2(st), |st| &mut st.e2, Coupling::Joint);
    check_minimizer("E1", |p, st| p.update_e1(st), |st| &mut st.e1);
    check_minimizer("E2", |p, st| p.update_e2(st), |st| &mut st.e2);
}
