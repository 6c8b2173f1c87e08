//! Problem data: scenes, measurement/rotation inputs, solver configuration
//! and state, the reshuffle map between the trajectory stack `S` (3F×P) and
//! the per-frame shape layout `S♯` (3P×F), and solver initialization.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::admm::ResidualRecord;
use crate::error::{dim_err, param_err, Result};
use crate::linalg::Matrix;

/// Tolerance on `RᵢRᵢᵀ = I₂` used by validation.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// One orthographic camera: a 2×3 matrix, normally with orthonormal rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBlock(pub [[f64; 3]; 2]);

impl ProjectionBlock {
    pub const IDENTITY: Self = Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);

    /// Row-major entries `r00 r01 r02 r10 r11 r12`.
    pub fn to_row_major(&self) -> [f64; 6] {
        let [a, b] = self.0;
        [a[0], a[1], a[2], b[0], b[1], b[2]]
    }

    pub fn from_row_major(v: &[f64]) -> Result<Self> {
        if v.len() != 6 {
            return dim_err(format!("rotation block needs 6 entries, got {}", v.len()));
        }
        Ok(Self([[v[0], v[1], v[2]], [v[3], v[4], v[5]]]))
    }

    /// Largest deviation of `R Rᵀ` from `I₂`.
    pub fn orthonormality_error(&self) -> f64 {
        let [a, b] = self.0;
        let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        let aa = (dot(a, a) - 1.0).abs();
        let bb = (dot(b, b) - 1.0).abs();
        let ab = dot(a, b).abs();
        aa.max(bb).max(ab)
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        self.orthonormality_error() <= tol
    }

    fn as_matrix(&self) -> Matrix {
        Mat::from_fn(2, 3, |i, j| self.0[i][j])
    }
}

/// Ground truth for a synthetic (or annotated) sequence.
#[derive(Debug, Clone)]
pub struct Scene {
    /// 3F×P stacked per-frame 3D coordinates.
    pub shapes_gt: Matrix,
    pub rotations: Vec<ProjectionBlock>,
    /// Object id per trajectory, in `[0, num_objects)`.
    pub labels_gt: Vec<usize>,
    pub frame_labels_gt: Option<Vec<usize>>,
    pub num_objects: usize,
}

impl Scene {
    pub fn frames(&self) -> usize {
        self.rotations.len()
    }

    pub fn points(&self) -> usize {
        self.shapes_gt.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.frames();
        if self.shapes_gt.nrows() != 3 * f {
            return dim_err(format!(
                "shapes_gt has {} rows, expected 3F = {}",
                self.shapes_gt.nrows(),
                3 * f
            ));
        }
        if self.labels_gt.len() != self.points() {
            return dim_err(format!(
                "labels_gt has length {}, expected P = {}",
                self.labels_gt.len(),
                self.points()
            ));
        }
        if self.num_objects == 0 {
            return param_err("num_objects must be positive");
        }
        if let Some(&bad) = self.labels_gt.iter().find(|&&l| l >= self.num_objects) {
            return param_err(format!("label {bad} outside [0, {})", self.num_objects));
        }
        if let Some(fl) = &self.frame_labels_gt {
            if fl.len() != f {
                return dim_err(format!("frame_labels_gt has length {}, expected F = {f}", fl.len()));
            }
        }
        validate_rotations(&self.rotations)
    }
}

/// Rejects blocks whose rows are not orthonormal to [`ORTHONORMAL_TOL`].
pub fn validate_rotations(blocks: &[ProjectionBlock]) -> Result<()> {
    for (i, b) in blocks.iter().enumerate() {
        let err = b.orthonormality_error();
        if !(err <= ORTHONORMAL_TOL) {
            return param_err(format!(
                "rotation block {i} is not orthonormal (|RRᵀ - I| = {err:.3e})"
            ));
        }
    }
    Ok(())
}

/// The solver's givens: the 2F×P measurement matrix and the block-diagonal
/// 2F×3F camera matrix.
#[derive(Debug, Clone)]
pub struct ProblemInput {
    pub w: Matrix,
    pub r: Matrix,
    blocks: Vec<ProjectionBlock>,
}

impl ProblemInput {
    pub fn new(w: Matrix, blocks: Vec<ProjectionBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return param_err("at least one frame is required");
        }
        if w.nrows() != 2 * blocks.len() {
            return dim_err(format!(
                "W has {} rows, expected 2F = {}",
                w.nrows(),
                2 * blocks.len()
            ));
        }
        if w.ncols() == 0 {
            return param_err("at least one trajectory is required");
        }
        let r = assemble_rotation(&blocks);
        Ok(Self { w, r, blocks })
    }

    pub fn frames(&self) -> usize {
        self.blocks.len()
    }

    pub fn points(&self) -> usize {
        self.w.ncols()
    }

    pub fn blocks(&self) -> &[ProjectionBlock] {
        &self.blocks
    }

    /// Same cameras, subset of trajectories.
    pub fn with_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.points()) {
            return dim_err(format!("column {bad} out of range for P = {}", self.points()));
        }
        Self::new(
            crate::linalg::select_columns(self.w.as_ref(), columns),
            self.blocks.clone(),
        )
    }
}

/// How the C-updates enforce `diag(C) = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalMode {
    /// Solve the unconstrained linear system, then zero the diagonal.
    #[default]
    ZeroAfterSolve,
    /// Minimize the same quadratic exactly over zero-diagonal matrices.
    Constrained,
}

/// Trade-off weights and penalty schedule of the ADMM solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub beta0: f64,
    pub beta_max: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    #[serde(default)]
    pub diagonal: DiagonalMode,
}

impl SolverConfig {
    /// Defaults for a problem of the given size. `lambda2` follows the usual
    /// `1/sqrt(max dimension)` nuclear-norm scaling of the 3P×F shape matrix.
    pub fn for_size(frames: usize, points: usize) -> Self {
        let dim = 3 * frames.max(points).max(1);
        Self {
            lambda1: 0.1,
            lambda2: 1.0 / (dim as f64).sqrt(),
            lambda3: 0.1,
            beta0: 1e-3,
            beta_max: 1e3,
            rho: 1.1,
            epsilon: 1e-6,
            max_iters: 500,
            diagonal: DiagonalMode::ZeroAfterSolve,
        }
    }

    pub fn gamma1(&self) -> f64 {
        (1.0 - self.lambda1) / 2.0
    }

    pub fn gamma3(&self) -> f64 {
        (1.0 - self.lambda3) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                param_err(format!("{name} = {v} must lie in [0, 1]"))
            }
        };
        unit("lambda1", self.lambda1)?;
        unit("lambda3", self.lambda3)?;
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return param_err(format!("lambda2 = {} must be nonnegative", self.lambda2));
        }
        if !(self.beta0 > 0.0 && self.beta_max > 0.0) {
            return param_err("beta0 and beta_max must be positive");
        }
        if self.beta0 > self.beta_max {
            return param_err(format!(
                "beta0 = {} exceeds beta_max = {}",
                self.beta0, self.beta_max
            ));
        }
        if !(self.rho > 1.0) {
            return param_err(format!("rho = {} must exceed 1", self.rho));
        }
        if !(self.epsilon > 0.0) {
            return param_err("epsilon must be positive");
        }
        Ok(())
    }
}

/// All primal and dual variables of the augmented Lagrangian plus the penalty.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// 3F×P
    pub s: Matrix,
    /// 3P×F
    pub s_sharp: Matrix,
    /// P×P
    pub c1: Matrix,
    pub e1: Matrix,
    /// F×F
    pub c2: Matrix,
    pub e2: Matrix,
    /// 3P×F
    pub j: Matrix,
    /// Multiplier for `S♯ = g(S)` (3P×F).
    pub y1: Matrix,
    /// `S = S C₁` (3F×P).
    pub y2: Matrix,
    /// `S♯ = S♯ C₂` (3P×F).
    pub y3: Matrix,
    /// `1ᵀC₁ = 1ᵀ` (1×P).
    pub y4: Matrix,
    /// `1ᵀC₂ = 1ᵀ` (1×F).
    pub y5: Matrix,
    /// `C₁ = E₁` (P×P).
    pub y6: Matrix,
    /// `C₂ = E₂` (F×F).
    pub y7: Matrix,
    /// `S♯ = J` (3P×F).
    pub y8: Matrix,
    pub beta: f64,
    /// Set when some camera block was not orthonormal and initialization fell
    /// back to a generic per-block pseudo-inverse.
    pub pinv_fallback: bool,
}

impl SolverState {
    /// All-zero state of the right shape.
    pub fn zeros(frames: usize, points: usize, beta: f64) -> Self {
        let (f, p) = (frames, points);
        Self {
            s: Mat::zeros(3 * f, p),
            s_sharp: Mat::zeros(3 * p, f),
            c1: Mat::zeros(p, p),
            e1: Mat::zeros(p, p),
            c2: Mat::zeros(f, f),
            e2: Mat::zeros(f, f),
            j: Mat::zeros(3 * p, f),
            y1: Mat::zeros(3 * p, f),
            y2: Mat::zeros(3 * f, p),
            y3: Mat::zeros(3 * p, f),
            y4: Mat::zeros(1, p),
            y5: Mat::zeros(1, f),
            y6: Mat::zeros(p, p),
            y7: Mat::zeros(f, f),
            y8: Mat::zeros(3 * p, f),
            beta,
            pinv_fallback: false,
        }
    }

    pub fn frames(&self) -> usize {
        self.c2.nrows()
    }

    pub fn points(&self) -> usize {
        self.c1.nrows()
    }

    pub fn check_dimensions(&self, frames: usize, points: usize) -> Result<()> {
        let (f, p) = (frames, points);
        let expect: [(&str, &Matrix, usize, usize); 15] = [
            ("S", &self.s, 3 * f, p),
            ("S_sharp", &self.s_sharp, 3 * p, f),
            ("C1", &self.c1, p, p),
            ("E1", &self.e1, p, p),
            ("C2", &self.c2, f, f),
            ("E2", &self.e2, f, f),
            ("J", &self.j, 3 * p, f),
            ("Y1", &self.y1, 3 * p, f),
            ("Y2", &self.y2, 3 * f, p),
            ("Y3", &self.y3, 3 * p, f),
            ("Y4", &self.y4, 1, p),
            ("Y5", &self.y5, 1, f),
            ("Y6", &self.y6, p, p),
            ("Y7", &self.y7, f, f),
            ("Y8", &self.y8, 3 * p, f),
        ];
        for (name, m, r, c) in expect {
            if m.nrows() != r || m.ncols() != c {
                return dim_err(format!(
                    "{name} is {}×{}, expected {r}×{c}",
                    m.nrows(),
                    m.ncols()
                ));
            }
        }
        if !(self.beta > 0.0) {
            return param_err("beta must be positive");
        }
        Ok(())
    }
}

/// Output of a full solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub s: Matrix,
    pub c1: Matrix,
    pub c2: Matrix,
    pub residual_history: Vec<ResidualRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub pinv_fallback: bool,
}

/// Explicit index permutation between `S` (3F×P) and `S♯` (3P×F).
///
/// Row `3f + d` / column `p` of `S` (coordinate `d` of point `p` in frame
/// `f`) maps to row `d·P + p` / column `f` of `S♯`, so each column of `S♯`
/// is one frame's shape `(X_f1…X_fP, Y_f1…Y_fP, Z_f1…Z_fP)ᵀ`.
#[derive(Debug, Clone)]
pub struct Reshuffle {
    frames: usize,
    points: usize,
    /// For each entry of `S` in column-major order, its `(row, col)` in `S♯`.
    table: Vec<(usize, usize)>,
}

impl Reshuffle {
    pub fn new(frames: usize, points: usize) -> Self {
        let rows = 3 * frames;
        let mut table = Vec::with_capacity(rows * points);
        for p in 0..points {
            for row in 0..rows {
                let (f, d) = (row / 3, row % 3);
                table.push((d * points + p, f));
            }
        }
        Self {
            frames,
            points,
            table,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// `g(S)`.
    pub fn forward(&self, s: MatRef<'_, f64>) -> Result<Matrix> {
        let rows = 3 * self.frames;
        if s.nrows() != rows || s.ncols() != self.points {
            return dim_err(format!(
                "g expects a {}×{} matrix, got {}×{}",
                rows,
                self.points,
                s.nrows(),
                s.ncols()
            ));
        }
        let mut out = Mat::zeros(3 * self.points, self.frames);
        for (k, &(r, c)) in self.table.iter().enumerate() {
            out[(r, c)] = s[(k % rows, k / rows)];
        }
        Ok(out)
    }

    /// `g⁻¹(S♯)`.
    pub fn inverse(&self, s_sharp: MatRef<'_, f64>) -> Result<Matrix> {
        let rows = 3 * self.frames;
        if s_sharp.nrows() != 3 * self.points || s_sharp.ncols() != self.frames {
            return dim_err(format!(
                "g⁻¹ expects a {}×{} matrix, got {}×{}",
                3 * self.points,
                self.frames,
                s_sharp.nrows(),
                s_sharp.ncols()
            ));
        }
        let mut out = Mat::zeros(rows, self.points);
        for (k, &(r, c)) in self.table.iter().enumerate() {
            out[(k % rows, k / rows)] = s_sharp[(r, c)];
        }
        Ok(out)
    }
}

fn check_shape_rows(rows: usize, what: &str) -> Result<usize> {
    if rows % 3 != 0 {
        return dim_err(format!("{what} has {rows} rows, not a multiple of 3"));
    }
    Ok(rows / 3)
}

/// Reshuffles a 3F×P shape stack into its 3P×F per-frame-column layout.
pub fn reshuffle_g(s: MatRef<'_, f64>, frames: usize, points: usize) -> Result<Matrix> {
    check_shape_rows(s.nrows(), "S")?;
    Reshuffle::new(frames, points).forward(s)
}

pub fn reshuffle_g_inv(s_sharp: MatRef<'_, f64>, frames: usize, points: usize) -> Result<Matrix> {
    check_shape_rows(s_sharp.nrows(), "S_sharp")?;
    Reshuffle::new(frames, points).inverse(s_sharp)
}

/// `blkdiag(R₁, …, R_F)` as a dense 2F×3F matrix.
pub fn assemble_rotation(blocks: &[ProjectionBlock]) -> Matrix {
    let f = blocks.len();
    let mut r = Mat::zeros(2 * f, 3 * f);
    for (k, b) in blocks.iter().enumerate() {
        for i in 0..2 {
            for j in 0..3 {
                r[(2 * k + i, 3 * k + j)] = b.0[i][j];
            }
        }
    }
    r
}

/// Assembles from dense 2×3 matrices, rejecting any other shape.
pub fn assemble_rotation_from_matrices(blocks: &[Matrix]) -> Result<Matrix> {
    let mut out = Vec::with_capacity(blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        if b.nrows() != 2 || b.ncols() != 3 {
            return dim_err(format!(
                "rotation block {k} is {}×{}, expected 2×3",
                b.nrows(),
                b.ncols()
            ));
        }
        out.push(ProjectionBlock([
            [b[(0, 0)], b[(0, 1)], b[(0, 2)]],
            [b[(1, 0)], b[(1, 1)], b[(1, 2)]],
        ]));
    }
    Ok(assemble_rotation(&out))
}

/// Orthographic projection `W = R S`.
pub fn project(s: MatRef<'_, f64>, r: MatRef<'_, f64>) -> Result<Matrix> {
    if r.ncols() != s.nrows() || r.nrows() * 3 != r.ncols() * 2 {
        return dim_err(format!(
            "cannot project {}×{} shapes with a {}×{} camera matrix",
            s.nrows(),
            s.ncols(),
            r.nrows(),
            r.ncols()
        ));
    }
    Ok(r * s)
}

/// Per-block pseudo-inverse of `R` applied to `W`. Orthonormal blocks use
/// `Rᶠᵀ`; others use the SVD pseudo-inverse. Returns whether any block fell
/// back.
pub fn block_pinv_apply(blocks: &[ProjectionBlock], w: MatRef<'_, f64>) -> Result<(Matrix, bool)> {
    let f = blocks.len();
    if w.nrows() != 2 * f {
        return dim_err(format!("W has {} rows, expected {}", w.nrows(), 2 * f));
    }
    let p = w.ncols();
    let mut s = Mat::zeros(3 * f, p);
    let mut fallback = false;
    for (k, b) in blocks.iter().enumerate() {
        let pinv = if b.is_orthonormal(ORTHONORMAL_TOL) {
            b.as_matrix().transpose().to_owned()
        } else {
            fallback = true;
            general_pinv(b.as_matrix().as_ref())?
        };
        let wk = w.subrows(2 * k, 2);
        let sk = &pinv * wk;
        s.as_mut().subrows_mut(3 * k, 3).copy_from(&sk);
    }
    Ok((s, fallback))
}

fn general_pinv(m: MatRef<'_, f64>) -> Result<Matrix> {
    let svd = m
        .thin_svd()
        .map_err(|e| crate::Error::Numerical(format!("pseudo-inverse SVD failed: {e:?}")))?;
    let sv = svd.S().column_vector();
    let smax = (0..sv.nrows()).map(|i| sv[i]).fold(0.0, f64::max);
    let cutoff = smax * 1e-12 * (m.nrows().max(m.ncols()) as f64);
    let k = sv.nrows();
    let inv = Mat::from_fn(k, k, |i, j| {
        if i == j && sv[i] > cutoff {
            1.0 / sv[i]
        } else {
            0.0
        }
    });
    Ok(svd.V() * &inv * svd.U().transpose())
}

/// Initial iterate: `S = pinv(R)·W`, `S♯ = J = g(S)`, all other primal
/// variables and every multiplier zero, `β = β₀`.
pub fn init_state(input: &ProblemInput, config: &SolverConfig) -> Result<SolverState> {
    config.validate()?;
    let (f, p) = (input.frames(), input.points());
    let (s, fallback) = block_pinv_apply(input.blocks(), input.w.as_ref())?;
    let s_sharp = Reshuffle::new(f, p).forward(s.as_ref())?;
    let mut state = SolverState::zeros(f, p, config.beta0);
    state.j = s_sharp.clone();
    state.s_sharp = s_sharp;
    state.s = s;
    state.pinv_fallback = fallback;
    Ok(state)
}
