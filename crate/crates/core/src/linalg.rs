//! Small dense linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOL: f64 = 1e-9;

/// Largest condition number of `I - D*delta` accepted when closing an LFT.
pub const MAX_FEEDBACK_CONDITION: f64 = 1e12;

/// Contiguous index range inside a partitioned matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Span {
    pub start: usize,
    pub len: usize,
}

impl Span {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }
}

pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack: row count mismatch");
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack: column count mismatch");
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Copy of the sub-block addressed by a row span and a column span.
pub fn sub(m: &DMatrix<f64>, rows: Span, cols: Span) -> DMatrix<f64> {
    m.view((rows.start, cols.start), (rows.len, cols.len)).into_owned()
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// `(sigma_min, sigma_max)` where `sigma_min` is the n-th singular value of
/// an `n x N` matrix, i.e. zero whenever the matrix is wider in rows than columns.
pub fn row_singular_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = singular_values(m);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = if m.nrows() == 0 {
        f64::INFINITY
    } else if m.ncols() < m.nrows() {
        0.0
    } else {
        sv.iter().copied().fold(f64::INFINITY, f64::min)
    };
    (min, max)
}

/// Same as [`row_singular_extremes`] for the transpose.
pub fn column_singular_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    row_singular_extremes(&m.transpose())
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = singular_values(m);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    dev
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn max_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Symmetric square root of a positive semidefinite matrix (negative
/// eigenvalues are clipped to zero).
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Closes the feedback loop `w = delta z` around the partitioned operator
/// `[a b; c d]`, returning `a + b delta (I - d delta)^{-1} c`.
pub fn close_feedback(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    delta: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if delta.nrows() != b.ncols() || delta.ncols() != c.nrows() {
        return Err(Error::Dimension(format!(
            "delta is {}x{}, expected {}x{}",
            delta.nrows(),
            delta.ncols(),
            b.ncols(),
            c.nrows()
        )));
    }
    if delta.is_empty() {
        return Ok(a.clone());
    }
    let k = DMatrix::identity(d.nrows(), d.nrows()) - d * delta;
    let condition = condition_number(&k);
    if !(condition < MAX_FEEDBACK_CONDITION) {
        return Err(Error::IllPosed { condition });
    }
    let kinv_c = k
        .lu()
        .solve(c)
        .ok_or(Error::IllPosed { condition: f64::INFINITY })?;
    Ok(a + b * delta * kinv_c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stacking_shapes() {
        let a = DMatrix::from_element(2, 1, 1.0);
        let b = DMatrix::from_element(2, 3, 2.0);
        let h = hstack(&[&a, &b]);
        assert_eq!(h.shape(), (2, 4));
        assert_eq!(h[(1, 3)], 2.0);
        let v = vstack(&[&a.transpose(), &DMatrix::zeros(2, 2)]);
        assert_eq!(v.shape(), (3, 2));
        let d = block_diag(&[&a, &b]);
        assert_eq!(d.shape(), (4, 4));
        assert_eq!(d[(0, 1)], 0.0);
        assert_eq!(d[(3, 3)], 2.0);
    }

    #[test]
    fn scalar_feedback_closure() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let d = DMatrix::from_element(1, 1, 0.5);
        let out = close_feedback(&one, &one, &one, &d, &one).unwrap();
        assert!((out[(0, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn singular_feedback_is_rejected() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let err = close_feedback(&one, &one, &one, &one, &one).unwrap_err();
        assert!(matches!(err, Error::IllPosed { .. }));
    }

    #[test]
    fn wide_row_extremes() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert_eq!(row_singular_extremes(&x).0, 0.0);
    }
}
