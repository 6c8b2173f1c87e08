//! Proximal and linear-solve kernels used by the ADMM sub-problems.

use faer::{Mat, MatRef, Side};
use faer::linalg::solvers::Solve;

use crate::error::{dim_err, param_err, Error, Result};
use crate::linalg::{symmetrize, Matrix};

/// Shrinkage `sign(x)·max(|x| − τ, 0)` applied after scaling by `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftThresholdParams {
    pub tau: f64,
    pub scale: f64,
}

impl SoftThresholdParams {
    pub fn new(tau: f64, scale: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return param_err(format!("threshold tau = {tau} must be nonnegative"));
        }
        if !(scale > 0.0 && scale <= 1.0) {
            return param_err(format!("scale = {scale} must lie in (0, 1]"));
        }
        Ok(Self { tau, scale })
    }

    #[inline]
    pub fn apply_scalar(&self, x: f64) -> f64 {
        shrink(self.scale * x, self.tau)
    }

    pub fn apply(&self, m: MatRef<'_, f64>) -> Matrix {
        Mat::from_fn(m.nrows(), m.ncols(), |i, j| self.apply_scalar(m[(i, j)]))
    }
}

#[inline]
fn shrink(x: f64, tau: f64) -> f64 {
    let mag = x.abs() - tau;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

/// Elementwise soft-thresholding.
pub fn soft_threshold(x: MatRef<'_, f64>, tau: f64) -> Result<Matrix> {
    Ok(SoftThresholdParams::new(tau, 1.0)?.apply(x))
}

/// Minimizer of `λ‖E‖₁ + γ‖E‖_F² + (β/2)‖E − M‖_F²`.
///
/// Setting the subgradient to zero gives `(2γ + β)E = βM − λ·sign(E)`, i.e.
/// `E = S_{λ/(2γ+β)}(β/(2γ+β)·M)`.
pub fn elastic_net_prox(m: MatRef<'_, f64>, lambda: f64, gamma: f64, beta: f64) -> Result<Matrix> {
    if !(beta > 0.0) {
        return param_err(format!("beta = {beta} must be positive"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return param_err(format!("lambda = {lambda} must lie in [0, 1]"));
    }
    if !(gamma >= 0.0) {
        return param_err(format!("gamma = {gamma} must be nonnegative"));
    }
    let denom = 2.0 * gamma + beta;
    let params = SoftThresholdParams::new(lambda / denom, beta / denom)?;
    Ok(params.apply(m))
}

/// Singular-value thresholding: the prox of `τ‖·‖*`.
pub fn svt(m: MatRef<'_, f64>, tau: f64) -> Result<Matrix> {
    if !(tau >= 0.0) {
        return param_err(format!("threshold tau = {tau} must be nonnegative"));
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Mat::zeros(m.nrows(), m.ncols()));
    }
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let sv = svd.S().column_vector();
    let k = sv.nrows();
    let smax = if k > 0 { sv[0] } else { 0.0 };
    let floor = 1e-12 * smax;
    let kept: Vec<f64> = (0..k)
        .map(|i| {
            let s = if sv[i] <= floor { 0.0 } else { sv[i] };
            (s - tau).max(0.0)
        })
        .collect();
    let rank = kept.iter().take_while(|&&s| s > 0.0).count();
    if rank == 0 {
        return Ok(Mat::zeros(m.nrows(), m.ncols()));
    }
    let u = svd.U().subcols(0, rank);
    let v = svd.V().subcols(0, rank);
    let us = Mat::from_fn(u.nrows(), rank, |i, j| u[(i, j)] * kept[j]);
    Ok(&us * v.transpose())
}

/// Nuclear norm (sum of singular values).
pub fn nuclear_norm(m: MatRef<'_, f64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    Ok(sv.iter().sum())
}

/// Eigendecomposition `M = Q diag(values) Qᵀ` of a symmetric matrix,
/// eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn new(m: MatRef<'_, f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return dim_err(format!("eigendecomposition needs a square matrix, got {}×{}", m.nrows(), m.ncols()));
        }
        let sym = symmetrize(m);
        let evd = sym
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("symmetric eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let values = (0..s.nrows()).map(|i| s[i]).collect();
        Ok(Self {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    /// Same eigenvectors, eigenvalues mapped through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            vectors: self.vectors.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn check_symmetric(m: MatRef<'_, f64>, name: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return dim_err(format!("{name} must be square, got {}×{}", m.nrows(), m.ncols()));
    }
    let scale = 1.0 + crate::linalg::inf_norm(m);
    for j in 0..m.ncols() {
        for i in 0..j {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return param_err(format!("{name} is not symmetric at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

/// Solves `A X + X B = C` for symmetric `A` (n×n) and `B` (p×p).
///
/// Both matrices are diagonalized, `Qₐᵀ C Q_b` is divided entrywise by
/// `αᵢ + βⱼ`, and the result mapped back.
pub fn solve_sylvester(a: MatRef<'_, f64>, b: MatRef<'_, f64>, c: MatRef<'_, f64>) -> Result<Matrix> {
    check_symmetric(a, "A")?;
    check_symmetric(b, "B")?;
    if c.nrows() != a.nrows() || c.ncols() != b.nrows() {
        return dim_err(format!(
            "C is {}×{}, expected {}×{}",
            c.nrows(),
            c.ncols(),
            a.nrows(),
            b.nrows()
        ));
    }
    let ea = SymmetricEigen::new(a)?;
    let eb = SymmetricEigen::new(b)?;
    solve_sylvester_eigen(&ea, &eb, c)
}

/// [`solve_sylvester`] with precomputed eigendecompositions.
pub fn solve_sylvester_eigen(ea: &SymmetricEigen, eb: &SymmetricEigen, c: MatRef<'_, f64>) -> Result<Matrix> {
    if c.nrows() != ea.dim() || c.ncols() != eb.dim() {
        return dim_err(format!(
            "C is {}×{}, expected {}×{}",
            c.nrows(),
            c.ncols(),
            ea.dim(),
            eb.dim()
        ));
    }
    let scale = ea
        .values
        .iter()
        .chain(eb.values.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let guard = 1e-14 * scale.max(f64::MIN_POSITIVE);
    let mut t = ea.vectors.transpose() * c * &eb.vectors;
    for j in 0..eb.dim() {
        for i in 0..ea.dim() {
            let sum = ea.values[i] + eb.values[j];
            if sum.abs() <= guard {
                return Err(Error::Numerical(format!(
                    "singular Sylvester system: eigenvalue sum α[{i}] + β[{j}] = {sum:.3e}"
                )));
            }
            t[(i, j)] /= sum;
        }
    }
    Ok(&ea.vectors * &t * eb.vectors.transpose())
}

/// Cholesky factor of an SPD matrix, reusable across right-hand sides.
pub struct SpdFactor {
    llt: faer::linalg::solvers::Llt<f64>,
    dim: usize,
}

impl SpdFactor {
    pub fn new(g: MatRef<'_, f64>) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return dim_err(format!("SPD matrix must be square, got {}×{}", g.nrows(), g.ncols()));
        }
        let llt = g
            .llt(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Cholesky factorization failed (matrix not positive definite): {e:?}")))?;
        Ok(Self { llt, dim: g.nrows() })
    }

    /// `G X = rhs`.
    pub fn solve_left(&self, rhs: MatRef<'_, f64>) -> Result<Matrix> {
        if rhs.nrows() != self.dim {
            return dim_err(format!("right-hand side has {} rows, expected {}", rhs.nrows(), self.dim));
        }
        Ok(self.llt.solve(rhs))
    }

    /// `X G = rhs`, using the symmetry of `G`.
    pub fn solve_right(&self, rhs: MatRef<'_, f64>) -> Result<Matrix> {
        if rhs.ncols() != self.dim {
            return dim_err(format!("right-hand side has {} columns, expected {}", rhs.ncols(), self.dim));
        }
        Ok(self.llt.solve(rhs.transpose()).transpose().to_owned())
    }
}

/// Solves `X·G = Rhs` for symmetric positive-definite `G`.
pub fn solve_spd_right(g: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Result<Matrix> {
    SpdFactor::new(g)?.solve_right(rhs)
}

/// Solves `G·X = Rhs` for symmetric positive-definite `G`.
pub fn solve_spd_left(g: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Result<Matrix> {
    SpdFactor::new(g)?.solve_left(rhs)
}
