//! Errors-in-variables regression and its exact LFT parametrization.
//!
//! The data obey `Y - L2 V2 R2 = Theta (X - L1 V1 R1)` for unknown noise
//! `(V1, V2)`. Given a right inverse `G` of `X`, every consistent parameter
//! matrix is
//!
//! ```text
//! Theta = (Y - L2 V2 R2) G (I - L1 V1 R1 G)^{-1}
//! ```
//!
//! which the Woodbury identity turns into a feedback interconnection of a
//! known coefficient matrix with `delta = blockdiag(V1, V2)`:
//!
//! ```text
//! [ y  ]   [ YG    YG L1    -L2 ] [ x  ]
//! [ z1 ] = [ R1G   R1G L1    0  ] [ w1 ]     w1 = V1 z1,  w2 = V2 z2
//! [ z2 ]   [ R2G   R2G L1    0  ] [ w2 ]
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Span, RANK_TOL};

/// Default tolerance on `||XG - I||_F` accepted by [`build_lft`].
pub const RIGHT_INVERSE_TOL: f64 = 1e-8;

/// Regressand/regressor data together with the factors that shape the noise.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredRegression {
    y: DMatrix<f64>,
    x: DMatrix<f64>,
    l1: DMatrix<f64>,
    r1: DMatrix<f64>,
    l2: DMatrix<f64>,
    r2: DMatrix<f64>,
}

impl StructuredRegression {
    pub fn new(
        y: DMatrix<f64>,
        x: DMatrix<f64>,
        l1: DMatrix<f64>,
        r1: DMatrix<f64>,
        l2: DMatrix<f64>,
        r2: DMatrix<f64>,
    ) -> Result<Self> {
        let samples = x.ncols();
        if samples == 0 {
            return Err(Error::Dimension("regression needs at least one sample".into()));
        }
        if y.ncols() != samples {
            return Err(Error::Dimension(format!(
                "Y has {} columns but X has {samples}",
                y.ncols()
            )));
        }
        if l1.nrows() != x.nrows() {
            return Err(Error::Dimension(format!(
                "L1 has {} rows, regressor has {}",
                l1.nrows(),
                x.nrows()
            )));
        }
        if l2.nrows() != y.nrows() {
            return Err(Error::Dimension(format!(
                "L2 has {} rows, regressand has {}",
                l2.nrows(),
                y.nrows()
            )));
        }
        if r1.ncols() != samples || r2.ncols() != samples {
            return Err(Error::Dimension(format!(
                "R1/R2 need {samples} columns, got {} and {}",
                r1.ncols(),
                r2.ncols()
            )));
        }
        Ok(Self { y, x, l1, r1, l2, r2 })
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }
    pub fn l1(&self) -> &DMatrix<f64> {
        &self.l1
    }
    pub fn r1(&self) -> &DMatrix<f64> {
        &self.r1
    }
    pub fn l2(&self) -> &DMatrix<f64> {
        &self.l2
    }
    pub fn r2(&self) -> &DMatrix<f64> {
        &self.r2
    }

    pub fn samples(&self) -> usize {
        self.x.ncols()
    }
    pub fn regressor_dim(&self) -> usize {
        self.x.nrows()
    }
    pub fn regressand_dim(&self) -> usize {
        self.y.nrows()
    }

    /// `[R1; R2]`, the column-side factor of the stacked noise channel.
    pub fn stacked_r(&self) -> DMatrix<f64> {
        linalg::vstack(&[&self.r1, &self.r2])
    }

    fn check_noise_dims(&self, v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> Result<()> {
        if v1.shape() != (self.l1.ncols(), self.r1.nrows()) {
            return Err(Error::Dimension(format!(
                "V1 is {:?}, expected {:?}",
                v1.shape(),
                (self.l1.ncols(), self.r1.nrows())
            )));
        }
        if v2.shape() != (self.l2.ncols(), self.r2.nrows()) {
            return Err(Error::Dimension(format!(
                "V2 is {:?}, expected {:?}",
                v2.shape(),
                (self.l2.ncols(), self.r2.nrows())
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowBlock {
    Y,
    Z1,
    Z2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColBlock {
    X,
    W1,
    W2,
}

/// Named row spans `(y, z1, z2)` and column spans `(x, w1, w2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LftIndex {
    pub y: Span,
    pub z1: Span,
    pub z2: Span,
    pub x: Span,
    pub w1: Span,
    pub w2: Span,
}

impl LftIndex {
    pub fn row(&self, b: RowBlock) -> Span {
        match b {
            RowBlock::Y => self.y,
            RowBlock::Z1 => self.z1,
            RowBlock::Z2 => self.z2,
        }
    }

    pub fn col(&self, b: ColBlock) -> Span {
        match b {
            ColBlock::X => self.x,
            ColBlock::W1 => self.w1,
            ColBlock::W2 => self.w2,
        }
    }

    /// All uncertainty outputs `z = (z1, z2)`.
    pub fn z(&self) -> Span {
        Span::new(self.z1.start, self.z1.len + self.z2.len)
    }

    /// All uncertainty inputs `w = (w1, w2)`.
    pub fn w(&self) -> Span {
        Span::new(self.w1.start, self.w1.len + self.w2.len)
    }
}

/// Coefficient matrix of the parametrization together with its block map.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionLft {
    matrix: DMatrix<f64>,
    index: LftIndex,
}

impl RegressionLft {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn index(&self) -> &LftIndex {
        &self.index
    }

    pub fn block(&self, row: RowBlock, col: ColBlock) -> DMatrix<f64> {
        linalg::sub(&self.matrix, self.index.row(row), self.index.col(col))
    }

    /// Nominal part (block `(y, x)`).
    pub fn nominal(&self) -> DMatrix<f64> {
        self.block(RowBlock::Y, ColBlock::X)
    }

    fn partition(&self) -> [DMatrix<f64>; 4] {
        let i = &self.index;
        [
            linalg::sub(&self.matrix, i.y, i.x),
            linalg::sub(&self.matrix, i.y, i.w()),
            linalg::sub(&self.matrix, i.z(), i.x),
            linalg::sub(&self.matrix, i.z(), i.w()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub ok: bool,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Full-row-rank check of the regressor with the relative threshold
/// `sigma_min > 1e-9 * sigma_max`.
pub fn check_data_rank(x: &DMatrix<f64>) -> RankReport {
    let (sigma_min, sigma_max) = linalg::row_singular_extremes(x);
    let ok = sigma_max > 0.0 && sigma_min > RANK_TOL * sigma_max;
    RankReport {
        ok,
        sigma_min: if sigma_min.is_finite() { sigma_min } else { 0.0 },
        sigma_max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub ok: bool,
    pub margin: f64,
}

/// Sufficient signal-to-noise test for invertibility of `I - L1 V1 R1 G`:
/// `sigma_min(X) - sigma_max(L1) * v_bound * sigma_max(R1) > 0`, valid for
/// every right inverse `G` and every `V1` with `sigma_max(V1) <= v_bound`.
pub fn check_signal_to_noise(
    x: &DMatrix<f64>,
    l1: &DMatrix<f64>,
    r1: &DMatrix<f64>,
    v_bound: f64,
) -> SnrReport {
    let (sigma_min, _) = linalg::row_singular_extremes(x);
    let sigma_min = if sigma_min.is_finite() { sigma_min } else { 0.0 };
    let margin = sigma_min - linalg::spectral_norm(l1) * v_bound * linalg::spectral_norm(r1);
    SnrReport {
        ok: margin > 0.0,
        margin,
    }
}

fn require_full_row_rank(x: &DMatrix<f64>) -> Result<()> {
    let report = check_data_rank(x);
    if !report.ok {
        return Err(Error::RankDeficient {
            sigma_min: report.sigma_min,
            sigma_max: report.sigma_max,
        });
    }
    Ok(())
}

/// Minimum-norm right inverse `X^T (X X^T)^{-1}`, computed from the SVD.
pub fn right_inverse_moore_penrose(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_full_row_rank(x)?;
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let inv_s = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s));
    Ok(v_t.transpose() * inv_s * u.transpose())
}

/// Weighted right inverse `R^{-1} X^T (X R^{-1} X^T)^{-1}`.
pub fn right_inverse_weighted(x: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.ncols();
    if r.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "weight is {:?}, expected {n}x{n}",
            r.shape()
        )));
    }
    let deviation = linalg::max_asymmetry(r);
    if deviation > 1e-12 * r.amax().max(1.0) {
        return Err(Error::Asymmetric {
            what: "weight R",
            deviation,
        });
    }
    require_full_row_rank(x)?;
    let chol = r.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        what: "weight R",
        min_eig: linalg::min_eig(r),
    })?;
    let rinv_xt = chol.solve(&x.transpose());
    let gram = x * &rinv_xt;
    let gram_chol = linalg::symmetrize(&gram)
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite {
            what: "X R^-1 X^T",
            min_eig: linalg::min_eig(&gram),
        })?;
    // G = S M^{-1} = (M^{-1} S^T)^T with M symmetric.
    Ok(gram_chol.solve(&rinv_xt.transpose()).transpose())
}

pub fn right_inverse_residual(x: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    (x * g - DMatrix::identity(x.nrows(), x.nrows())).norm()
}

/// Builds the coefficient matrix of the parametrization for a right inverse `g`.
pub fn build_lft(reg: &StructuredRegression, g: &DMatrix<f64>) -> Result<RegressionLft> {
    build_lft_with_tol(reg, g, RIGHT_INVERSE_TOL)
}

pub fn build_lft_with_tol(
    reg: &StructuredRegression,
    g: &DMatrix<f64>,
    tol: f64,
) -> Result<RegressionLft> {
    let (n, samples) = reg.x.shape();
    if g.shape() != (samples, n) {
        return Err(Error::Dimension(format!(
            "G is {:?}, expected {samples}x{n}",
            g.shape()
        )));
    }
    let residual = right_inverse_residual(&reg.x, g);
    if !(residual <= tol) {
        return Err(Error::NotRightInverse { residual });
    }

    let p = reg.y.nrows();
    let (r1_dim, c1) = (reg.l1.ncols(), reg.r1.nrows());
    let (r2_dim, c2) = (reg.l2.ncols(), reg.r2.nrows());

    let yg = &reg.y * g;
    let r1g = &reg.r1 * g;
    let r2g = &reg.r2 * g;

    let index = LftIndex {
        y: Span::new(0, p),
        z1: Span::new(p, c1),
        z2: Span::new(p + c1, c2),
        x: Span::new(0, n),
        w1: Span::new(n, r1_dim),
        w2: Span::new(n + r1_dim, r2_dim),
    };
    let mut m = DMatrix::zeros(p + c1 + c2, n + r1_dim + r2_dim);
    let mut put = |row: Span, col: Span, block: &DMatrix<f64>| {
        m.view_mut((row.start, col.start), (row.len, col.len)).copy_from(block);
    };
    put(index.y, index.x, &yg);
    put(index.y, index.w1, &(&yg * &reg.l1));
    put(index.y, index.w2, &(-&reg.l2));
    put(index.z1, index.x, &r1g);
    put(index.z1, index.w1, &(&r1g * &reg.l1));
    put(index.z2, index.x, &r2g);
    put(index.z2, index.w1, &(&r2g * &reg.l1));
    // (z1, w2) and (z2, w2) stay exactly zero.

    Ok(RegressionLft { matrix: m, index })
}

/// `A + B delta (I - D delta)^{-1} C` over the lft's `(y, z) x (x, w)` partition.
pub fn close_lft(lft: &RegressionLft, delta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let [a, b, c, d] = lft.partition();
    linalg::close_feedback(&a, &b, &c, &d, delta)
}

/// `blockdiag(V1, V2)`, the uncertainty matching [`RegressionLft`]'s channels.
pub fn noise_delta(v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> DMatrix<f64> {
    linalg::block_diag(&[v1, v2])
}

/// Explicit consistent parameter `(Y - L2 V2 R2) G (I - L1 V1 R1 G)^{-1}`.
pub fn explicit_parameter(
    reg: &StructuredRegression,
    g: &DMatrix<f64>,
    v1: &DMatrix<f64>,
    v2: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    reg.check_noise_dims(v1, v2)?;
    let n = reg.x.nrows();
    let lhs = &reg.y - &reg.l2 * v2 * &reg.r2;
    let k = DMatrix::identity(n, n) - &reg.l1 * v1 * &reg.r1 * g;
    let condition = linalg::condition_number(&k);
    if !(condition < linalg::MAX_FEEDBACK_CONDITION) {
        return Err(Error::IllPosed { condition });
    }
    // Theta K = lhs G  <=>  K^T Theta^T = (lhs G)^T
    let theta_t = k
        .transpose()
        .lu()
        .solve(&(lhs * g).transpose())
        .ok_or(Error::IllPosed { condition })?;
    Ok(theta_t.transpose())
}

/// `||(Y - L2 V2 R2) - Theta (X - L1 V1 R1)||_F`.
pub fn consistency_residual(
    theta: &DMatrix<f64>,
    reg: &StructuredRegression,
    v1: &DMatrix<f64>,
    v2: &DMatrix<f64>,
) -> Result<f64> {
    reg.check_noise_dims(v1, v2)?;
    if theta.shape() != (reg.y.nrows(), reg.x.nrows()) {
        return Err(Error::Dimension(format!(
            "Theta is {:?}, expected {:?}",
            theta.shape(),
            (reg.y.nrows(), reg.x.nrows())
        )));
    }
    let lhs = &reg.y - &reg.l2 * v2 * &reg.r2;
    let rhs = theta * (&reg.x - &reg.l1 * v1 * &reg.r1);
    Ok((lhs - rhs).norm())
}
