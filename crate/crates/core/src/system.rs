//! Discrete-time LTI systems with a performance channel and a known
//! disturbance input, plus Gramian-based H2 norms.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative residual accepted from [`discrete_lyapunov`].
pub const LYAPUNOV_TOL: f64 = 1e-10;

/// `x+ = A x + Bp wp + Bd d`, `zp = Cp x + Dp wp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiSystem {
    #[serde(with = "crate::matrix_json")]
    pub a: DMatrix<f64>,
    #[serde(with = "crate::matrix_json")]
    pub bp: DMatrix<f64>,
    #[serde(with = "crate::matrix_json")]
    pub bd: DMatrix<f64>,
    #[serde(with = "crate::matrix_json")]
    pub cp: DMatrix<f64>,
    #[serde(with = "crate::matrix_json")]
    pub dp: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(
        a: DMatrix<f64>,
        bp: DMatrix<f64>,
        bd: DMatrix<f64>,
        cp: DMatrix<f64>,
        dp: DMatrix<f64>,
    ) -> Result<Self> {
        let sys = Self { a, bp, bd, cp, dp };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        let bad = |what: &str| Err(Error::Dimension(format!("{what} does not conform")));
        if !self.a.is_square() {
            return bad("A");
        }
        if self.bp.nrows() != n {
            return bad("Bp");
        }
        if self.bd.nrows() != n {
            return bad("Bd");
        }
        if self.cp.ncols() != n {
            return bad("Cp");
        }
        if self.dp.shape() != (self.cp.nrows(), self.bp.ncols()) {
            return bad("Dp");
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m_p(&self) -> usize {
        self.bp.ncols()
    }
    pub fn m_d(&self) -> usize {
        self.bd.ncols()
    }
    pub fn p_p(&self) -> usize {
        self.cp.nrows()
    }

    /// `Theta = [A Bp; Cp Dp]`, the parameter matrix of the one-step regression.
    pub fn theta(&self) -> DMatrix<f64> {
        linalg::vstack(&[
            &linalg::hstack(&[&self.a, &self.bp]),
            &linalg::hstack(&[&self.cp, &self.dp]),
        ])
    }
}

/// The four-state, two-input, two-output benchmark plant with a scalar
/// disturbance entering the last state.
pub fn example_system() -> LtiSystem {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
         1.0, 0.2,   0.0, 0.0,
        -1.0, 0.5,   0.6, 0.3,
         0.0, 0.0,   1.0, 0.2,
         0.3, 0.15, -0.3, 0.85,
    ]);
    #[rustfmt::skip]
    let bp = DMatrix::from_row_slice(4, 2, &[
        0.0, 0.0,
        0.2, 0.0,
        0.0, 0.0,
        0.0, 0.1,
    ]);
    let bd = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 0.0, 0.2]);
    #[rustfmt::skip]
    let cp = DMatrix::from_row_slice(2, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
    ]);
    let dp = DMatrix::zeros(2, 2);
    LtiSystem { a, bp, bd, cp, dp }
}

/// Solves `A W A^T - W + Q = 0` through the Kronecker form
/// `(I - A (x) A) vec(W) = vec(Q)` with one refinement step.
pub fn discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || q.shape() != (n, n) {
        return Err(Error::Dimension("Lyapunov operands must be square and conform".into()));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let k = DMatrix::identity(n * n, n * n) - a.kronecker(a);
    let lu = k.clone().lu();
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
    let mut vec_w = lu
        .solve(&rhs)
        .ok_or(Error::Unstable { spectral_radius: linalg::spectral_radius(a) })?;
    let r = &rhs - &k * &vec_w;
    if let Some(correction) = lu.solve(&r) {
        vec_w += correction;
    }
    let w = linalg::symmetrize(&DMatrix::from_column_slice(n, n, vec_w.as_slice()));
    let residual = (a * &w * a.transpose() - &w + q).norm();
    if !(residual <= LYAPUNOV_TOL * w.norm().max(1.0)) {
        return Err(Error::LyapunovResidual { residual });
    }
    Ok(w)
}

/// H2 norm of `(A, B, C, D)` from the controllability Gramian.
pub fn h2_norm(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<f64> {
    let spectral_radius = linalg::spectral_radius(a);
    if !(spectral_radius < 1.0) {
        return Err(Error::Unstable { spectral_radius });
    }
    let w = discrete_lyapunov(a, &(b * b.transpose()))?;
    let energy = (c * w * c.transpose() + d * d.transpose()).trace();
    Ok(energy.max(0.0).sqrt())
}

/// H2 norm of the performance channel `wp -> zp`.
pub fn true_h2(sys: &LtiSystem) -> Result<f64> {
    h2_norm(&sys.a, &sys.bp, &sys.cp, &sys.dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_dimensions() {
        let s = example_system();
        assert_eq!((s.n(), s.m_p(), s.m_d(), s.p_p()), (4, 2, 1, 2));
        assert_eq!(s.bd[(3, 0)], 0.2);
        assert_eq!(s.a[(0, 1)], 0.2);
        assert!(linalg::spectral_radius(&s.a) < 1.0);
        s.validate().unwrap();
    }

    #[test]
    fn scalar_h2_closed_form() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let a = DMatrix::from_element(1, 1, 0.5);
        let g = h2_norm(&a, &one, &one, &DMatrix::zeros(1, 1)).unwrap();
        assert!((g - (1.0f64 / 0.75).sqrt()).abs() < 1e-12);
        assert!((g - 1.154700).abs() < 1e-6);
    }

    #[test]
    fn static_gain_h2() {
        let a = DMatrix::zeros(2, 2);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let c = DMatrix::from_row_slice(1, 2, &[3.0, -1.0]);
        let d = DMatrix::from_element(1, 1, 0.5);
        let g = h2_norm(&a, &b, &c, &d).unwrap();
        let expected = ((&c * &b * b.transpose() * c.transpose())[(0, 0)] + 0.25).sqrt();
        assert!((g - expected).abs() < 1e-12);
    }

    #[test]
    fn unstable_is_an_error() {
        let a = DMatrix::identity(2, 2) * 2.0;
        let b = DMatrix::identity(2, 2);
        assert!(matches!(
            h2_norm(&a, &b, &b, &DMatrix::zeros(2, 2)),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn lyapunov_residual_is_small() {
        let s = example_system();
        let q = &s.bp * s.bp.transpose();
        let w = discrete_lyapunov(&s.a, &q).unwrap();
        let r = (&s.a * &w * s.a.transpose() - &w + &q).norm();
        assert!(r < 1e-10 * w.norm());
    }
}
