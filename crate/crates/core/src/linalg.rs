//! Small dense-matrix helpers shared by the solver modules.

use faer::{Mat, MatRef};

/// Dense column-major real matrix used throughout the crate.
pub type Matrix = Mat<f64>;

/// Largest absolute entry; zero for empty matrices.
pub fn inf_norm(m: MatRef<'_, f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.norm_max()
}

/// Sum of absolute entries.
pub fn l1_norm(m: MatRef<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].abs();
        }
    }
    acc
}

pub fn frobenius_sq(m: MatRef<'_, f64>) -> f64 {
    m.squared_norm_l2()
}

/// Frobenius inner product `tr(AᵀB)`.
pub fn inner(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    debug_assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)] * b[(i, j)];
        }
    }
    acc
}

/// Column sums as a `1×n` row matrix, i.e. `1ᵀM`.
pub fn column_sums(m: MatRef<'_, f64>) -> Matrix {
    Mat::from_fn(1, m.ncols(), |_, j| (0..m.nrows()).map(|i| m[(i, j)]).sum())
}

/// `I - M` for square `M`.
pub fn identity_minus(m: MatRef<'_, f64>) -> Matrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j {
            1.0 - m[(i, j)]
        } else {
            -m[(i, j)]
        }
    })
}

/// Zeroes the diagonal in place.
pub fn zero_diagonal(m: &mut Matrix) {
    let n = m.nrows().min(m.ncols());
    for i in 0..n {
        m[(i, i)] = 0.0;
    }
}

/// Builds a matrix from row-major nested data.
pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    Mat::from_fn(nrows, ncols, |i, j| rows[i][j])
}

/// Symmetric part `(M + Mᵀ)/2`.
pub fn symmetrize(m: MatRef<'_, f64>) -> Matrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Returns the columns listed in `indices`, in order.
pub fn select_columns(m: MatRef<'_, f64>, indices: &[usize]) -> Matrix {
    Mat::from_fn(m.nrows(), indices.len(), |i, j| m[(i, indices[j])])
}
