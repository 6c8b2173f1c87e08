//! The ADMM loop: Gauss–Seidel primal updates in the order
//! `S → S♯ → C₁ → C₂ → J → E₁ → E₂`, then all eight multipliers with the
//! pre-update penalty, then `β ← min(β_max, ρβ)`, then the ∞-norm
//! convergence checks.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_sums, frobenius_sq, identity_minus, inf_norm, inner, l1_norm, zero_diagonal, Matrix};
use crate::model::{init_state, DiagonalMode, ProblemInput, Reshuffle, SolveResult, SolverConfig, SolverState};
use crate::prox::{elastic_net_prox, nuclear_norm, solve_sylvester_eigen, svt, SpdFactor, SymmetricEigen};

/// The eight constraint residuals of one iteration, plus objective and penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub iter: usize,
    /// `‖S♯ − g(S)‖∞`
    pub r_gmap: f64,
    /// `‖S − S C₁‖∞`
    pub r_self_s: f64,
    /// `‖S♯ − S♯ C₂‖∞`
    pub r_self_s_sharp: f64,
    /// `‖1ᵀC₁ − 1ᵀ‖∞`
    pub r_affine1: f64,
    pub r_affine2: f64,
    /// `‖C₁ − E₁‖∞`
    pub r_e1: f64,
    pub r_e2: f64,
    /// `‖S♯ − J‖∞`
    pub r_j: f64,
    pub objective: f64,
    pub beta: f64,
}

impl ResidualRecord {
    pub const RESIDUAL_NAMES: [&'static str; 8] = [
        "r_gmap",
        "r_selfS",
        "r_selfSsharp",
        "r_affine1",
        "r_affine2",
        "r_E1",
        "r_E2",
        "r_J",
    ];

    pub fn residuals(&self) -> [f64; 8] {
        [
            self.r_gmap,
            self.r_self_s,
            self.r_self_s_sharp,
            self.r_affine1,
            self.r_affine2,
            self.r_e1,
            self.r_e2,
            self.r_j,
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().into_iter().fold(0.0, f64::max)
    }

    pub fn all_within(&self, epsilon: f64) -> bool {
        self.residuals().iter().all(|&r| r <= epsilon)
    }
}

/// Which terms of the model are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Full joint model: self-expressiveness in trajectory and shape space.
    Joint,
    /// Data term and nuclear norm only; `C₁, C₂, E₁, E₂` stay at zero and
    /// their constraints are dropped. Used as a single-body reconstruction.
    ShapeOnly,
}

/// Input-derived quantities shared by every iteration.
pub struct AdmmProblem<'a> {
    input: &'a ProblemInput,
    config: SolverConfig,
    coupling: Coupling,
    reshuffle: Reshuffle,
    /// Eigendecomposition of the constant `RᵀR`.
    rtr_eigen: SymmetricEigen,
    /// `RᵀW`
    rtw: Matrix,
}

impl<'a> AdmmProblem<'a> {
    pub fn new(input: &'a ProblemInput, config: SolverConfig, coupling: Coupling) -> Result<Self> {
        config.validate()?;
        let rtr = input.r.transpose() * &input.r;
        let rtr_eigen = SymmetricEigen::new(rtr.as_ref())?;
        let rtw = input.r.transpose() * &input.w;
        Ok(Self {
            input,
            config,
            coupling,
            reshuffle: Reshuffle::new(input.frames(), input.points()),
            rtr_eigen,
            rtw,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn reshuffle(&self) -> &Reshuffle {
        &self.reshuffle
    }

    pub fn input(&self) -> &ProblemInput {
        self.input
    }

    /// Solves `(1/β)(RᵀR + βI)S + S(I − C₁)(I − C₁ᵀ)
    ///   = (1/β)RᵀW + g⁻¹(S♯) + g⁻¹(Y₁)/β − (Y₂/β)(I − C₁ᵀ)`.
    pub fn update_s(&self, st: &SolverState) -> Result<Matrix> {
        let beta = st.beta;
        let g_inv_sharp = self.reshuffle.inverse(st.s_sharp.as_ref())?;
        let g_inv_y1 = self.reshuffle.inverse(st.y1.as_ref())?;
        let mut rhs = &self.rtw * (1.0 / beta) + &g_inv_sharp + &g_inv_y1 * (1.0 / beta);
        let ea = self.rtr_eigen.map_values(|mu| mu / beta + 1.0);
        match self.coupling {
            Coupling::Joint => {
                let i_minus_c = identity_minus(st.c1.as_ref());
                rhs -= &st.y2 * i_minus_c.transpose() * (1.0 / beta);
                let b = &i_minus_c * i_minus_c.transpose();
                let eb = SymmetricEigen::new(b.as_ref())?;
                solve_sylvester_eigen(&ea, &eb, rhs.as_ref())
            }
            Coupling::ShapeOnly => {
                let q = &ea.vectors;
                let mut t = q.transpose() * &rhs;
                for j in 0..t.ncols() {
                    for i in 0..t.nrows() {
                        t[(i, j)] /= ea.values[i];
                    }
                }
                Ok(q * &t)
            }
        }
    }

    /// Solves `S♯(2I + (I − C₂)(I − C₂ᵀ)) = (g(S) − Y₁/β) + (J − Y₈/β) − (Y₃/β)(I − C₂ᵀ)`.
    pub fn update_s_sharp(&self, st: &SolverState) -> Result<Matrix> {
        let inv_beta = 1.0 / st.beta;
        let g_s = self.reshuffle.forward(st.s.as_ref())?;
        let mut rhs = &g_s - &st.y1 * inv_beta + &st.j - &st.y8 * inv_beta;
        match self.coupling {
            Coupling::Joint => {
                let i_minus_c = identity_minus(st.c2.as_ref());
                rhs -= &st.y3 * i_minus_c.transpose() * inv_beta;
                let f = st.c2.nrows();
                let g = Mat::<f64>::identity(f, f) * 2.0 + &i_minus_c * i_minus_c.transpose();
                SpdFactor::new(g.as_ref())?.solve_right(rhs.as_ref())
            }
            Coupling::ShapeOnly => Ok(rhs * 0.5),
        }
    }

    /// Solves `(XᵀX + 11ᵀ + I)C = Xᵀ(X + Y/β) + 1(1ᵀ − y/β) + (E − Z/β)` for
    /// the trajectory (`X = S`) or shape (`X = S♯`) self-expression and
    /// enforces `diag(C) = 0` according to `mode`.
    ///
    /// The problem decouples by column, so the constrained minimizer is
    /// `c_j − μ_j G⁻¹e_j` with `μ_j = (c_j)_j / (G⁻¹)_jj`.
    pub fn update_c(
        data: MatRef<'_, f64>,
        y_self: MatRef<'_, f64>,
        y_affine: MatRef<'_, f64>,
        e: MatRef<'_, f64>,
        y_e: MatRef<'_, f64>,
        beta: f64,
        mode: DiagonalMode,
    ) -> Result<Matrix> {
        let n = data.ncols();
        let inv_beta = 1.0 / beta;
        let gram = data.transpose() * data;
        let g = Mat::from_fn(n, n, |i, j| gram[(i, j)] + 1.0 + if i == j { 1.0 } else { 0.0 });
        let shifted = Mat::from_fn(data.nrows(), n, |i, j| data[(i, j)] + inv_beta * y_self[(i, j)]);
        let proj = data.transpose() * &shifted;
        let rhs = Mat::from_fn(n, n, |i, j| {
            proj[(i, j)] + (1.0 - inv_beta * y_affine[(0, j)]) + e[(i, j)] - inv_beta * y_e[(i, j)]
        });
        let factor = SpdFactor::new(g.as_ref())?;
        let mut c = factor.solve_left(rhs.as_ref())?;
        if mode == DiagonalMode::Constrained {
            let g_inv = factor.solve_left(Mat::<f64>::identity(n, n).as_ref())?;
            for j in 0..n {
                let mu = c[(j, j)] / g_inv[(j, j)];
                for i in 0..n {
                    c[(i, j)] -= mu * g_inv[(i, j)];
                }
            }
        }
        zero_diagonal(&mut c);
        Ok(c)
    }

    pub fn update_c1(&self, st: &SolverState) -> Result<Matrix> {
        if self.coupling == Coupling::ShapeOnly {
            return Ok(st.c1.clone());
        }
        Self::update_c(
            st.s.as_ref(),
            st.y2.as_ref(),
            st.y4.as_ref(),
            st.e1.as_ref(),
            st.y6.as_ref(),
            st.beta,
            self.config.diagonal,
        )
    }

    pub fn update_c2(&self, st: &SolverState) -> Result<Matrix> {
        if self.coupling == Coupling::ShapeOnly {
            return Ok(st.c2.clone());
        }
        Self::update_c(
            st.s_sharp.as_ref(),
            st.y3.as_ref(),
            st.y5.as_ref(),
            st.e2.as_ref(),
            st.y7.as_ref(),
            st.beta,
            self.config.diagonal,
        )
    }

    /// `J = svt(S♯ + Y₈/β, λ₂/β)`.
    pub fn update_j(&self, st: &SolverState) -> Result<Matrix> {
        let m = &st.s_sharp + &st.y8 * (1.0 / st.beta);
        svt(m.as_ref(), self.config.lambda2 / st.beta)
    }

    pub fn update_e1(&self, st: &SolverState) -> Result<Matrix> {
        if self.coupling == Coupling::ShapeOnly {
            return Ok(st.e1.clone());
        }
        let m = &st.c1 + &st.y6 * (1.0 / st.beta);
        elastic_net_prox(m.as_ref(), self.config.lambda1, self.config.gamma1(), st.beta)
    }

    pub fn update_e2(&self, st: &SolverState) -> Result<Matrix> {
        if self.coupling == Coupling::ShapeOnly {
            return Ok(st.e2.clone());
        }
        let m = &st.c2 + &st.y7 * (1.0 / st.beta);
        elastic_net_prox(m.as_ref(), self.config.lambda3, self.config.gamma3(), st.beta)
    }

    /// Dual ascent on every active multiplier with the current `β`, then the
    /// penalty schedule.
    pub fn update_duals_and_beta(&self, st: &mut SolverState) -> Result<()> {
        let beta = st.beta;
        let g_s = self.reshuffle.forward(st.s.as_ref())?;
        st.y1 += (&st.s_sharp - &g_s) * beta;
        st.y8 += (&st.s_sharp - &st.j) * beta;
        if self.coupling == Coupling::Joint {
            let r2 = &st.s - &st.s * &st.c1;
            let r3 = &st.s_sharp - &st.s_sharp * &st.c2;
            st.y2 += r2 * beta;
            st.y3 += r3 * beta;
            let a1 = column_sums(st.c1.as_ref());
            let a2 = column_sums(st.c2.as_ref());
            st.y4 += Mat::from_fn(1, a1.ncols(), |_, j| a1[(0, j)] - 1.0) * beta;
            st.y5 += Mat::from_fn(1, a2.ncols(), |_, j| a2[(0, j)] - 1.0) * beta;
            st.y6 += (&st.c1 - &st.e1) * beta;
            st.y7 += (&st.c2 - &st.e2) * beta;
        }
        st.beta = self.config.beta_max.min(beta * self.config.rho);
        Ok(())
    }

    /// Computes the eight residuals and the objective; converged iff every
    /// residual is at most `epsilon`. Residuals of constraints inactive under
    /// [`Coupling::ShapeOnly`] are reported as zero.
    pub fn check_convergence(&self, st: &SolverState, iter: usize) -> Result<(ResidualRecord, bool)> {
        let g_s = self.reshuffle.forward(st.s.as_ref())?;
        let r_gmap = inf_norm((&st.s_sharp - &g_s).as_ref());
        let r_j = inf_norm((&st.s_sharp - &st.j).as_ref());
        let (mut r_self_s, mut r_self_s_sharp, mut r_affine1, mut r_affine2, mut r_e1, mut r_e2) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        if self.coupling == Coupling::Joint {
            r_self_s = inf_norm((&st.s - &st.s * &st.c1).as_ref());
            r_self_s_sharp = inf_norm((&st.s_sharp - &st.s_sharp * &st.c2).as_ref());
            r_affine1 = affine_residual(st.c1.as_ref());
            r_affine2 = affine_residual(st.c2.as_ref());
            r_e1 = inf_norm((&st.c1 - &st.e1).as_ref());
            r_e2 = inf_norm((&st.c2 - &st.e2).as_ref());
        }
        let record = ResidualRecord {
            iter,
            r_gmap,
            r_self_s,
            r_self_s_sharp,
            r_affine1,
            r_affine2,
            r_e1,
            r_e2,
            r_j,
            objective: self.objective(st)?,
            beta: st.beta,
        };
        let converged = record.all_within(self.config.epsilon);
        Ok((record, converged))
    }

    /// The joint objective at the current iterate:
    /// `½‖W − RS‖² + λ₁‖C₁‖₁ + γ₁‖C₁‖² + λ₂‖S♯‖* + λ₃‖C₂‖₁ + γ₃‖C₂‖²`.
    pub fn objective(&self, st: &SolverState) -> Result<f64> {
        let c = &self.config;
        let data = 0.5 * frobenius_sq((&self.input.w - &self.input.r * &st.s).as_ref());
        let nuclear = c.lambda2 * nuclear_norm(st.s_sharp.as_ref())?;
        let mut total = data + nuclear;
        if self.coupling == Coupling::Joint {
            total += c.lambda1 * l1_norm(st.c1.as_ref()) + c.gamma1() * frobenius_sq(st.c1.as_ref());
            total += c.lambda3 * l1_norm(st.c2.as_ref()) + c.gamma3() * frobenius_sq(st.c2.as_ref());
        }
        Ok(total)
    }

    /// Value of the augmented Lagrangian for the active coupling.
    pub fn augmented_lagrangian(&self, st: &SolverState) -> Result<f64> {
        let c = &self.config;
        let beta = st.beta;
        let penalty = |y: MatRef<'_, f64>, r: MatRef<'_, f64>| inner(y, r) + 0.5 * beta * frobenius_sq(r);
        let mut total = 0.5 * frobenius_sq((&self.input.w - &self.input.r * &st.s).as_ref())
            + c.lambda2 * nuclear_norm(st.j.as_ref())?;
        let g_s = self.reshuffle.forward(st.s.as_ref())?;
        total += penalty(st.y1.as_ref(), (&st.s_sharp - &g_s).as_ref());
        total += penalty(st.y8.as_ref(), (&st.s_sharp - &st.j).as_ref());
        if self.coupling == Coupling::Joint {
            total += c.lambda1 * l1_norm(st.e1.as_ref()) + c.gamma1() * frobenius_sq(st.e1.as_ref());
            total += c.lambda3 * l1_norm(st.e2.as_ref()) + c.gamma3() * frobenius_sq(st.e2.as_ref());
            total += penalty(st.y2.as_ref(), (&st.s - &st.s * &st.c1).as_ref());
            total += penalty(st.y3.as_ref(), (&st.s_sharp - &st.s_sharp * &st.c2).as_ref());
            let a1 = column_sums(st.c1.as_ref());
            let a2 = column_sums(st.c2.as_ref());
            let a1 = Mat::from_fn(1, a1.ncols(), |_, j| a1[(0, j)] - 1.0);
            let a2 = Mat::from_fn(1, a2.ncols(), |_, j| a2[(0, j)] - 1.0);
            total += penalty(st.y4.as_ref(), a1.as_ref());
            total += penalty(st.y5.as_ref(), a2.as_ref());
            total += penalty(st.y6.as_ref(), (&st.c1 - &st.e1).as_ref());
            total += penalty(st.y7.as_ref(), (&st.c2 - &st.e2).as_ref());
        }
        Ok(total)
    }

    /// One full iteration in place; returns the post-iteration residuals.
    pub fn iterate(&self, st: &mut SolverState, iter: usize) -> Result<(ResidualRecord, bool)> {
        let wrap = |step: &'static str| move |e: Error| Error::SubProblem {
            iteration: iter,
            step,
            source: Box::new(e),
        };
        st.s = self.update_s(st).map_err(wrap("S"))?;
        st.s_sharp = self.update_s_sharp(st).map_err(wrap("S_sharp"))?;
        st.c1 = self.update_c1(st).map_err(wrap("C1"))?;
        st.c2 = self.update_c2(st).map_err(wrap("C2"))?;
        st.j = self.update_j(st).map_err(wrap("J"))?;
        st.e1 = self.update_e1(st).map_err(wrap("E1"))?;
        st.e2 = self.update_e2(st).map_err(wrap("E2"))?;
        self.update_duals_and_beta(st).map_err(wrap("duals"))?;
        self.check_convergence(st, iter).map_err(wrap("convergence"))
    }
}

fn affine_residual(c: MatRef<'_, f64>) -> f64 {
    let sums = column_sums(c);
    (0..sums.ncols()).map(|j| (sums[(0, j)] - 1.0).abs()).fold(0.0, f64::max)
}

/// Stepwise driver owning the iterate and the residual history.
pub struct Solver<'a> {
    problem: AdmmProblem<'a>,
    state: SolverState,
    history: Vec<ResidualRecord>,
    converged: bool,
}

impl<'a> Solver<'a> {
    pub fn new(input: &'a ProblemInput, config: SolverConfig) -> Result<Self> {
        Self::with_coupling(input, config, Coupling::Joint)
    }

    pub fn with_coupling(input: &'a ProblemInput, config: SolverConfig, coupling: Coupling) -> Result<Self> {
        let problem = AdmmProblem::new(input, config, coupling)?;
        let state = init_state(input, &config)?;
        Ok(Self {
            problem,
            state,
            history: Vec::with_capacity(config.max_iters),
            converged: false,
        })
    }

    pub fn problem(&self) -> &AdmmProblem<'a> {
        &self.problem
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn history(&self) -> &[ResidualRecord] {
        &self.history
    }

    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Whether another [`step`](Self::step) would run.
    pub fn can_step(&self) -> bool {
        !self.converged && self.history.len() < self.problem.config.max_iters
    }

    /// Runs one iteration and records its residuals.
    pub fn step(&mut self) -> Result<&ResidualRecord> {
        let iter = self.history.len() + 1;
        let (record, converged) = self.problem.iterate(&mut self.state, iter)?;
        self.converged = converged;
        self.history.push(record);
        Ok(self.history.last().expect("just pushed"))
    }

    /// Iterates until convergence or the iteration cap.
    pub fn run(mut self) -> Result<SolveResult> {
        while self.can_step() {
            self.step()?;
        }
        Ok(self.into_result())
    }

    pub fn into_result(self) -> SolveResult {
        SolveResult {
            iterations: self.history.len(),
            converged: self.converged,
            pinv_fallback: self.state.pinv_fallback,
            s: self.state.s,
            c1: self.state.c1,
            c2: self.state.c2,
            residual_history: self.history,
        }
    }
}

/// Runs the joint reconstruction-and-segmentation solver.
pub fn solve(input: &ProblemInput, config: &SolverConfig) -> Result<SolveResult> {
    Solver::new(input, *config)?.run()
}

/// Nuclear-norm-regularized reconstruction with self-expressiveness disabled.
pub fn solve_shape_only(input: &ProblemInput, config: &SolverConfig) -> Result<SolveResult> {
    Solver::with_coupling(input, *config, Coupling::ShapeOnly)?.run()
}

/// Affine elastic-net self-expression of fixed data columns.
#[derive(Debug, Clone)]
pub struct SelfExpression {
    pub c: Matrix,
    pub e: Matrix,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `min λ‖E‖₁ + γ‖E‖²` subject to `X = XC`, `1ᵀC = 1ᵀ`,
/// `diag(C) = 0`, `C = E` with the same C/E updates and penalty schedule as
/// the joint solver, holding the data `X` fixed.
pub fn self_expression(data: MatRef<'_, f64>, lambda: f64, config: &SolverConfig) -> Result<SelfExpression> {
    config.validate()?;
    if !(0.0..=1.0).contains(&lambda) {
        return crate::error::param_err(format!("lambda = {lambda} must lie in [0, 1]"));
    }
    let n = data.ncols();
    let gamma = (1.0 - lambda) / 2.0;
    let mut c = Mat::<f64>::zeros(n, n);
    let mut e = Mat::<f64>::zeros(n, n);
    let mut y_self = Mat::<f64>::zeros(data.nrows(), n);
    let mut y_affine = Mat::<f64>::zeros(1, n);
    let mut y_e = Mat::<f64>::zeros(n, n);
    let mut beta = config.beta0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iters && !converged {
        iterations += 1;
        c = AdmmProblem::update_c(data, y_self.as_ref(), y_affine.as_ref(), e.as_ref(), y_e.as_ref(), beta, config.diagonal)?;
        let m = &c + &y_e * (1.0 / beta);
        e = elastic_net_prox(m.as_ref(), lambda, gamma, beta)?;
        let r_self = data - data * &c;
        let sums = column_sums(c.as_ref());
        let r_aff = Mat::from_fn(1, n, |_, j| sums[(0, j)] - 1.0);
        let r_e = &c - &e;
        y_self += &r_self * beta;
        y_affine += &r_aff * beta;
        y_e += &r_e * beta;
        beta = config.beta_max.min(beta * config.rho);
        converged = inf_norm(r_self.as_ref()) <= config.epsilon
            && inf_norm(r_aff.as_ref()) <= config.epsilon
            && inf_norm(r_e.as_ref()) <= config.epsilon;
    }
    Ok(SelfExpression {
        c,
        e,
        iterations,
        converged,
    })
}
