//! Bounded error sources described by quadratic matrix inequalities
//! `V^T Q V + R >= 0`, their stacking into a block-diagonal uncertainty, and
//! the per-source scalar multipliers used by the robust analysis.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Span, RANK_TOL};

/// Minimum eigenvalue accepted by [`membership`].
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// One error block `V` (rows x cols) with `V^T Q V + R >= 0`.
///
/// `Q` is negative semidefinite. `R` is positive definite, or exactly zero for
/// a degenerate source whose only admissible value is `V = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmiSource {
    label: String,
    #[serde(with = "crate::matrix_json")]
    q: DMatrix<f64>,
    #[serde(with = "crate::matrix_json")]
    r: DMatrix<f64>,
}

impl QmiSource {
    pub fn new(label: impl Into<String>, q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || !r.is_square() {
            return Err(Error::Dimension("Q and R must be square".into()));
        }
        for (what, m) in [("Q", &q), ("R", &r)] {
            let deviation = linalg::max_asymmetry(m);
            if deviation > 1e-12 * m.amax().max(1.0) {
                return Err(Error::Asymmetric { what, deviation });
            }
        }
        let q_max = linalg::max_eig(&q);
        if q_max > 1e-12 * q.amax().max(1.0) {
            return Err(Error::NotNegativeSemidefinite { what: "Q", max_eig: q_max });
        }
        let degenerate = r.iter().all(|&v| v == 0.0);
        if degenerate {
            // Only V = 0 is admissible, which needs Q strictly negative.
            let q_max = linalg::max_eig(&q);
            if r.nrows() > 0 && q.nrows() > 0 && q_max >= 0.0 {
                return Err(Error::NotPositiveDefinite {
                    what: "-Q of a degenerate source",
                    min_eig: -q_max,
                });
            }
        } else {
            let r_min = linalg::min_eig(&r);
            if r_min <= 0.0 {
                return Err(Error::NotPositiveDefinite { what: "R", min_eig: r_min });
            }
        }
        Ok(Self {
            label: label.into(),
            q,
            r,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn rows(&self) -> usize {
        self.q.nrows()
    }
    pub fn cols(&self) -> usize {
        self.r.nrows()
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// True when `R = 0`, i.e. the source is pinned to `V = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.r.iter().all(|&v| v == 0.0)
    }
}

/// Spectral-norm ball `{V : sigma_max(V) <= bound}` as `Q = -I`, `R = bound^2 I`.
pub fn spectral_ball(label: impl Into<String>, rows: usize, cols: usize, bound: f64) -> Result<QmiSource> {
    if !(bound >= 0.0) || !bound.is_finite() {
        return Err(Error::InvalidArgument(format!("bound must be >= 0, got {bound}")));
    }
    QmiSource::new(
        label,
        -DMatrix::identity(rows, rows),
        DMatrix::identity(cols, cols) * (bound * bound),
    )
}

/// Interval `[-bound, bound]` as the 1x1 QMI `(-1, bound^2)`.
pub fn scalar_interval(label: impl Into<String>, bound: f64) -> Result<QmiSource> {
    spectral_ball(label, 1, 1, bound)
}

/// Replaces the column side of a source by `V E`: the admissible set of the
/// result is exactly `{V E : V admissible}` (the Q-block is unchanged and `R`
/// becomes `E^T R E`). `E` must have full column rank.
pub fn reduce_source(source: &QmiSource, e: &DMatrix<f64>) -> Result<QmiSource> {
    if e.nrows() != source.cols() {
        return Err(Error::Dimension(format!(
            "E has {} rows, source has {} columns",
            e.nrows(),
            source.cols()
        )));
    }
    let (sigma_min, sigma_max) = linalg::column_singular_extremes(e);
    if !(sigma_max > 0.0 && sigma_min > RANK_TOL * sigma_max) {
        return Err(Error::ColumnRankDeficient { sigma_min, sigma_max });
    }
    let r = linalg::symmetrize(&(e.transpose() * &source.r * e));
    QmiSource::new(source.label.clone(), source.q.clone(), r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub ok: bool,
    pub min_eig: f64,
}

/// Evaluates `lambda_min(V^T Q V + R)`.
pub fn membership(source: &QmiSource, v: &DMatrix<f64>) -> Result<Membership> {
    if v.shape() != (source.rows(), source.cols()) {
        return Err(Error::Dimension(format!(
            "V is {:?}, source expects {:?}",
            v.shape(),
            (source.rows(), source.cols())
        )));
    }
    let min_eig = linalg::min_eig(&(v.transpose() * &source.q * v + &source.r));
    Ok(Membership {
        ok: min_eig >= -MEMBERSHIP_TOL,
        min_eig,
    })
}

/// Where a source lives inside `blockdiag(delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    /// Rows of delta, i.e. entries of the channel input `w`.
    pub w: Span,
    /// Columns of delta, i.e. entries of the channel output `z`.
    pub z: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySet {
    sources: Vec<QmiSource>,
    spans: Vec<SourceSpan>,
    w_dim: usize,
    z_dim: usize,
}

/// Stacks sources in the given order into `delta = blockdiag(V_1, ..., V_k)`.
pub fn stack_sources(sources: Vec<QmiSource>) -> UncertaintySet {
    let mut spans = Vec::with_capacity(sources.len());
    let (mut w, mut z) = (0, 0);
    for s in &sources {
        spans.push(SourceSpan {
            w: Span::new(w, s.rows()),
            z: Span::new(z, s.cols()),
        });
        w += s.rows();
        z += s.cols();
    }
    UncertaintySet {
        sources,
        spans,
        w_dim: w,
        z_dim: z,
    }
}

impl UncertaintySet {
    pub fn sources(&self) -> &[QmiSource] {
        &self.sources
    }
    pub fn spans(&self) -> &[SourceSpan] {
        &self.spans
    }
    pub fn w_dim(&self) -> usize {
        self.w_dim
    }
    pub fn z_dim(&self) -> usize {
        self.z_dim
    }
    pub fn len(&self) -> usize {
        self.sources.len()
    }
    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.label == label)
    }

    /// Assembles `blockdiag(blocks)` after checking each block's shape.
    pub fn delta_from_blocks(&self, blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        if blocks.len() != self.sources.len() {
            return Err(Error::Dimension(format!(
                "{} blocks for {} sources",
                blocks.len(),
                self.sources.len()
            )));
        }
        for (b, s) in blocks.iter().zip(&self.sources) {
            if b.shape() != (s.rows(), s.cols()) {
                return Err(Error::Dimension(format!(
                    "block for {} is {:?}, expected {:?}",
                    s.label,
                    b.shape(),
                    (s.rows(), s.cols())
                )));
            }
        }
        let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
        Ok(linalg::block_diag(&refs))
    }

    /// Splits a block-diagonal delta back into its per-source blocks.
    pub fn blocks_of(&self, delta: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        self.spans.iter().map(|sp| linalg::sub(delta, sp.w, sp.z)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Interior,
    Boundary,
}

/// Random block-diagonal delta whose blocks each satisfy their source QMI.
pub fn sample_delta(set: &UncertaintySet, seed: u64, mode: SampleMode) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_delta_with(set, &mut rng, mode)
}

pub fn sample_delta_with<R: Rng + ?Sized>(set: &UncertaintySet, rng: &mut R, mode: SampleMode) -> DMatrix<f64> {
    let blocks: Vec<DMatrix<f64>> = set
        .sources
        .iter()
        .map(|s| sample_source(s, rng, mode))
        .collect();
    set.delta_from_blocks(&blocks).expect("sampled blocks conform")
}

/// Draws `V = H^+ U F` with `-Q = H^2`, `R = F^T F` and `||U|| <= 1`; then
/// `V^T Q V + R = F^T (I - U^T P U) F >= 0` where `P` projects onto range(H).
/// Boundary samples use a rank-one `U` of unit norm.
pub fn sample_source<R: Rng + ?Sized>(source: &QmiSource, rng: &mut R, mode: SampleMode) -> DMatrix<f64> {
    let (rows, cols) = (source.rows(), source.cols());
    if source.is_degenerate() || rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, cols);
    }
    let h = linalg::psd_sqrt(&(-source.q()));
    let h_pinv = h
        .clone()
        .pseudo_inverse(1e-12 * h.amax().max(1e-300))
        .expect("pseudo-inverse of symmetric matrix");
    let f = linalg::psd_sqrt(source.r());

    let unit = |rng: &mut R, len: usize| -> DVector<f64> {
        let v = DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 0.0 {
            v / norm
        } else {
            let mut e = DVector::zeros(len);
            e[0] = 1.0;
            e
        }
    };
    let u = match mode {
        SampleMode::Boundary => {
            let a = unit(rng, rows);
            let b = unit(rng, cols);
            &a * b.transpose()
        }
        SampleMode::Interior => {
            let g = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = linalg::spectral_norm(&g);
            let radius: f64 = rng.random_range(0.0..1.0);
            if norm > 0.0 {
                g * (radius / norm)
            } else {
                g
            }
        }
    };
    h_pinv * u * f
}

/// Per-source scalar multiplier class over an uncertainty set:
/// `P(tau) = blockdiag(diag_s(tau_s Q_s), diag_s(tau_s R_s))` acting on `[w; z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierFamily {
    set: UncertaintySet,
}

impl MultiplierFamily {
    pub fn new(set: UncertaintySet) -> Self {
        Self { set }
    }

    pub fn set(&self) -> &UncertaintySet {
        &self.set
    }

    /// Number of scalars per LMI instance.
    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn side(&self) -> usize {
        self.set.w_dim + self.set.z_dim
    }

    /// `P(e_s)`: the coefficient of `tau_s`.
    pub fn basis(&self, s: usize) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.side(), self.side());
        let sp = self.set.spans[s];
        let src = &self.set.sources[s];
        let w0 = sp.w.start;
        let z0 = self.set.w_dim + sp.z.start;
        p.view_mut((w0, w0), (sp.w.len, sp.w.len)).copy_from(&src.q);
        p.view_mut((z0, z0), (sp.z.len, sp.z.len)).copy_from(&src.r);
        p
    }

    pub fn multiplier_matrix(&self, tau: &[f64]) -> Result<DMatrix<f64>> {
        if tau.len() != self.set.len() {
            return Err(Error::Dimension(format!(
                "{} multipliers for {} sources",
                tau.len(),
                self.set.len()
            )));
        }
        if let Some((index, &value)) = tau.iter().enumerate().find(|(_, &t)| !(t >= 0.0)) {
            return Err(Error::NegativeMultiplier { index, value });
        }
        let mut p = DMatrix::zeros(self.side(), self.side());
        for (s, &t) in tau.iter().enumerate() {
            if t != 0.0 {
                p += self.basis(s) * t;
            }
        }
        Ok(p)
    }
}

/// `[delta; I]^T P [delta; I]`.
pub fn multiplier_form(p: &DMatrix<f64>, delta: &DMatrix<f64>) -> DMatrix<f64> {
    let outer = linalg::vstack(&[delta, &DMatrix::identity(delta.ncols(), delta.ncols())]);
    outer.transpose() * p * outer
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bound_admits_only_zero() {
        let s = spectral_ball("v", 2, 3, 0.0).unwrap();
        assert!(s.is_degenerate());
        assert!(membership(&s, &DMatrix::zeros(2, 3)).unwrap().ok);
        let mut v = DMatrix::zeros(2, 3);
        v[(0, 0)] = 1e-3;
        assert!(!membership(&s, &v).unwrap().ok);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_source(&s, &mut rng, SampleMode::Interior), DMatrix::zeros(2, 3));
    }

    #[test]
    fn negative_bound_rejected() {
        assert!(spectral_ball("v", 1, 1, -1.0).is_err());
        assert!(scalar_interval("d", -0.1).is_err());
    }

    #[test]
    fn invalid_qmi_rejected_at_construction() {
        let q = DMatrix::identity(2, 2);
        assert!(matches!(
            QmiSource::new("bad", q, DMatrix::identity(1, 1)),
            Err(Error::NotNegativeSemidefinite { .. })
        ));
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            QmiSource::new("bad", -DMatrix::identity(1, 1), r),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn ball_boundary_membership() {
        let b = 0.3;
        let s = spectral_ball("v", 3, 4, b).unwrap();
        let mut v = DMatrix::zeros(3, 4);
        v[(1, 2)] = b;
        let m = membership(&s, &v).unwrap();
        assert!(m.ok);
        assert!(m.min_eig.abs() < 1e-10);
        v[(1, 2)] = 2.0 * b;
        assert!(!membership(&s, &v).unwrap().ok);
        let zero = membership(&s, &DMatrix::zeros(3, 4)).unwrap();
        assert!((zero.min_eig - b * b).abs() < 1e-15);
    }

    #[test]
    fn interval_membership() {
        let s = scalar_interval("d", 0.01).unwrap();
        assert!(membership(&s, &DMatrix::from_element(1, 1, 0.01)).unwrap().ok);
        assert!(!membership(&s, &DMatrix::from_element(1, 1, 0.015)).unwrap().ok);
    }

    #[test]
    fn identity_reduction_is_noop() {
        let s = spectral_ball("v", 2, 3, 0.5).unwrap();
        let r = reduce_source(&s, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn reduction_to_single_column() {
        let b = 0.7;
        let s = spectral_ball("v", 1, 3, b).unwrap();
        let e = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let r = reduce_source(&s, &e).unwrap();
        assert_eq!(r.cols(), 1);
        assert!((r.r()[(0, 0)] - b * b).abs() < 1e-15);
    }

    #[test]
    fn reduction_rejects_rank_deficient_e() {
        let s = spectral_ball("v", 1, 3, 1.0).unwrap();
        let e = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(reduce_source(&s, &e), Err(Error::ColumnRankDeficient { .. })));
    }

    #[test]
    fn stacking_dimensions() {
        let set = stack_sources(vec![
            scalar_interval("a", 1.0).unwrap(),
            scalar_interval("b", 2.0).unwrap(),
        ]);
        assert_eq!((set.w_dim(), set.z_dim()), (2, 2));
        assert_eq!(set.spans()[1].w, Span::new(1, 1));
        let single = stack_sources(vec![spectral_ball("v", 2, 5, 1.0).unwrap()]);
        assert_eq!(single.spans()[0].z, Span::new(0, 5));
    }

    #[test]
    fn boundary_samples_touch_the_boundary() {
        let set = stack_sources(vec![
            spectral_ball("v", 3, 5, 0.2).unwrap(),
            scalar_interval("d", 0.01).unwrap(),
        ]);
        let delta = sample_delta(&set, 9, SampleMode::Boundary);
        for (block, src) in set.blocks_of(&delta).iter().zip(set.sources()) {
            let m = membership(src, block).unwrap();
            assert!(m.min_eig.abs() < 1e-8, "min_eig {}", m.min_eig);
        }
        assert_eq!(delta, sample_delta(&set, 9, SampleMode::Boundary));
    }

    #[test]
    fn multiplier_basics() {
        let set = stack_sources(vec![spectral_ball("v", 2, 3, 0.5).unwrap()]);
        let fam = MultiplierFamily::new(set);
        assert_eq!(fam.multiplier_matrix(&[0.0]).unwrap(), DMatrix::zeros(5, 5));
        let p = fam.multiplier_matrix(&[1.0]).unwrap();
        let expected = linalg::block_diag(&[&(-DMatrix::identity(2, 2)), &(DMatrix::identity(3, 3) * 0.25)]);
        assert_eq!(p, expected);
        assert!(matches!(
            fam.multiplier_matrix(&[-1.0]),
            Err(Error::NegativeMultiplier { index: 0, .. })
        ));
    }
}
