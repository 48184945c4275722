//! Robust H2 analysis from noisy trajectory data.
//!
//! The one-step relation `[x+; zp] = Theta [x; wp] + [Bd d; 0]` over `N' = N - 1`
//! samples is an errors-in-variables regression with regressor `[X; Wp]` and
//! regressand `[X+; Zp]`. Its exact parametrization is rewritten as an uncertain
//! discrete-time system
//!
//! ```text
//! x+ = A  x + B1  wp + B2  w
//! zp = C1 x + D1  wp + D12 w
//! z  = C2 x + D21 wp + D2  w,      w = delta z
//! ```
//!
//! and an upper bound on the H2 norm over every admissible `delta` follows from
//! two LMIs with per-source scalar multipliers.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Span, MAX_FEEDBACK_CONDITION};
use crate::param::{self, SnrReport, StructuredRegression};
use crate::sdp::{self, ConicProblem, ConicSolver, Sense, SolveStatus, SolverOptions, VarId};
use crate::sim::{NoiseBounds, NoiseRealization, NoisyDataset};
use crate::system;
use crate::uncertainty::{
    self, reduce_source, sample_delta_with, scalar_interval, spectral_ball, MultiplierFamily, QmiSource,
    SampleMode, UncertaintySet,
};

/// Default margin turning the strict LMIs into `<= -eps I`.
pub const DEFAULT_EPS: f64 = 1e-7;

/// Relative slack allowed between a sampled closed-loop H2 norm and the bound.
pub const H2_BOUND_SLACK: f64 = 1e-6;

pub const LABEL_X: &str = "V_X";
pub const LABEL_X_PLUS: &str = "V_X+";
pub const LABEL_ZP: &str = "V_Zp";
pub const LABEL_D: &str = "d";

/// Where one noise source enters the regression: its columns of the full
/// channel input `w = (w1, w2)` and its rows of `[R1; R2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub w: Span,
    pub r_rows: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRegression {
    pub reg: StructuredRegression,
    /// All sources in the order `(V_X, V_X+, V_Zp, d)`, degenerate ones included.
    pub set: UncertaintySet,
    pub channels: Vec<ChannelSpec>,
    pub snr: SnrReport,
    pub n: usize,
    pub m_p: usize,
    pub p_p: usize,
}

impl AnalysisRegression {
    /// `sum_s S_s^T R_s S_s` with `S_s` the source's rows of `[R1; R2]`.
    pub fn combined_weight(&self) -> DMatrix<f64> {
        let stacked = self.reg.stacked_r();
        let samples = self.reg.samples();
        let mut r = DMatrix::zeros(samples, samples);
        for (src, ch) in self.set.sources().iter().zip(&self.channels) {
            let s = stacked.rows(ch.r_rows.start, ch.r_rows.len);
            r += s.transpose() * src.r() * s;
        }
        linalg::symmetrize(&r)
    }
}

/// Stacks the measured trajectory into the analysis regression. `bd` is the
/// known disturbance input matrix; `m_d = 0` drops the disturbance source.
pub fn build_analysis_regression(
    dataset: &NoisyDataset,
    bd: &DMatrix<f64>,
    bounds: &NoiseBounds,
) -> Result<AnalysisRegression> {
    bounds.validate()?;
    let (n, samples) = dataset.states.shape();
    let m_p = dataset.inputs.nrows();
    let p_p = dataset.outputs.nrows();
    let m_d = bd.ncols();
    let min = n + m_p + 1;
    if samples < min {
        return Err(Error::TooFewSamples { min, got: samples });
    }
    let np = samples - 1;
    if dataset.inputs.ncols() != np || dataset.outputs.ncols() != np {
        return Err(Error::Dimension(format!(
            "inputs/outputs need {np} columns, got {} and {}",
            dataset.inputs.ncols(),
            dataset.outputs.ncols()
        )));
    }
    if bd.nrows() != n {
        return Err(Error::Dimension(format!("Bd has {} rows, state has {n}", bd.nrows())));
    }

    let x_now = dataset.states.columns(0, np).into_owned();
    let x_next = dataset.states.columns(1, np).into_owned();
    let regressor = linalg::vstack(&[&x_now, &dataset.inputs]);
    let regressand = linalg::vstack(&[&x_next, &dataset.outputs]);

    let l1 = linalg::vstack(&[&DMatrix::identity(n, n), &DMatrix::zeros(m_p, n)]);
    let r1 = DMatrix::identity(np, np);
    let mut l2 = DMatrix::zeros(n + p_p, n + p_p + m_d);
    l2.view_mut((0, 0), (n, n)).fill_with_identity();
    l2.view_mut((n, n), (p_p, p_p)).fill_with_identity();
    l2.view_mut((0, n + p_p), (n, m_d)).copy_from(bd);
    let eye = DMatrix::identity(np, np);
    let ones = DMatrix::from_element(1, np, 1.0);
    let r2 = if m_d > 0 {
        linalg::vstack(&[&eye, &eye, &ones])
    } else {
        linalg::vstack(&[&eye, &eye])
    };

    let scale = (np as f64).sqrt();
    let mut sources = vec![
        spectral_ball(LABEL_X, n, np, bounds.v_x * scale)?,
        spectral_ball(LABEL_X_PLUS, n, np, bounds.v_x * scale)?,
        spectral_ball(LABEL_ZP, p_p, np, bounds.v_zp * scale)?,
    ];
    let mut channels = vec![
        ChannelSpec {
            w: Span::new(0, n),
            r_rows: Span::new(0, np),
        },
        ChannelSpec {
            w: Span::new(n, n),
            r_rows: Span::new(np, np),
        },
        ChannelSpec {
            w: Span::new(2 * n, p_p),
            r_rows: Span::new(2 * np, np),
        },
    ];
    if m_d > 0 {
        // Componentwise |d_i| <= d_bar implies ||d||_2 <= d_bar sqrt(m_d).
        let source = if m_d == 1 {
            scalar_interval(LABEL_D, bounds.d_bar)?
        } else {
            spectral_ball(LABEL_D, m_d, 1, bounds.d_bar * (m_d as f64).sqrt())?
        };
        sources.push(source);
        channels.push(ChannelSpec {
            w: Span::new(2 * n + p_p, m_d),
            r_rows: Span::new(3 * np, 1),
        });
    }

    let snr = param::check_signal_to_noise(&regressor, &l1, &r1, bounds.v_x * scale);
    let rank = param::check_data_rank(&regressor);
    if !rank.ok {
        return Err(Error::RankDeficient {
            sigma_min: rank.sigma_min,
            sigma_max: rank.sigma_max,
        });
    }
    let reg = StructuredRegression::new(regressand, regressor, l1, r1, l2, r2)?;
    Ok(AnalysisRegression {
        reg,
        set: uncertainty::stack_sources(sources),
        channels,
        snr,
        n,
        m_p,
        p_p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GChoice {
    MoorePenrose,
    Weighted,
}

impl GChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            GChoice::MoorePenrose => "moore_penrose",
            GChoice::Weighted => "weighted",
        }
    }
}

impl std::str::FromStr for GChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moore_penrose" => Ok(GChoice::MoorePenrose),
            "weighted" => Ok(GChoice::Weighted),
            other => Err(Error::InvalidArgument(format!(
                "unknown right inverse `{other}` (expected moore_penrose or weighted)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RightInverse {
    pub g: DMatrix<f64>,
    pub requested: GChoice,
    pub used: GChoice,
}

/// Computes the requested right inverse of the regressor. The weighted
/// choice uses the combined source weight and falls back to Moore-Penrose
/// when that weight is singular (for instance when every bound is zero).
pub fn right_inverse(ar: &AnalysisRegression, choice: GChoice) -> Result<RightInverse> {
    let x = ar.reg.x();
    let (g, used) = match choice {
        GChoice::MoorePenrose => (param::right_inverse_moore_penrose(x)?, GChoice::MoorePenrose),
        GChoice::Weighted => match param::right_inverse_weighted(x, &ar.combined_weight()) {
            Ok(g) => (g, GChoice::Weighted),
            Err(Error::NotPositiveDefinite { .. }) => {
                (param::right_inverse_moore_penrose(x)?, GChoice::MoorePenrose)
            }
            Err(e) => return Err(e),
        },
    };
    Ok(RightInverse {
        g,
        requested: choice,
        used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ReductionOutcome {
    /// Channel replaced by the shared `n + m_p` dimensional one.
    Reduced { from: usize, to: usize },
    /// Reduction would not shrink the channel.
    NotSmaller { cols: usize },
    /// `E` lacks full column rank; the unreduced channel is kept.
    RankFallback { sigma_min: f64, sigma_max: f64 },
    /// Zero bound: the source is pinned to zero and its channel removed.
    Dropped,
    /// Reduction switched off.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionEntry {
    pub label: String,
    #[serde(flatten)]
    pub outcome: ReductionOutcome,
}

/// One retained uncertainty channel of the analysis LFT.
#[derive(Debug, Clone, PartialEq)]
pub struct LftChannel {
    /// Index of the source in [`AnalysisRegression::set`].
    pub origin: usize,
    /// `E_s = S_s G` when the channel was reduced.
    pub reduction: Option<DMatrix<f64>>,
}

/// The closed realization `(A, B1, C1, D1)` for a fixed delta.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub d1: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisLft {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d12: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d21: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub uncertainty: UncertaintySet,
    pub g: DMatrix<f64>,
    pub channels: Vec<LftChannel>,
    pub reduction_log: Vec<ReductionEntry>,
}

impl AnalysisLft {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m_p(&self) -> usize {
        self.b1.ncols()
    }
    pub fn p_p(&self) -> usize {
        self.c1.nrows()
    }
    pub fn w_dim(&self) -> usize {
        self.b2.ncols()
    }
    pub fn z_dim(&self) -> usize {
        self.c2.nrows()
    }

    /// Closes `w = delta z` and returns the resulting realization.
    pub fn close(&self, delta: &DMatrix<f64>) -> Result<ClosedLoop> {
        let n = self.n();
        let m = linalg::vstack(&[
            &linalg::hstack(&[&self.a, &self.b1]),
            &linalg::hstack(&[&self.c1, &self.d1]),
        ]);
        let b = linalg::vstack(&[&self.b2, &self.d12]);
        let c = linalg::hstack(&[&self.c2, &self.d21]);
        let closed = linalg::close_feedback(&m, &b, &c, &self.d2, delta)?;
        let (rows, cols) = closed.shape();
        Ok(ClosedLoop {
            a: closed.view((0, 0), (n, n)).into_owned(),
            b1: closed.view((0, n), (n, cols - n)).into_owned(),
            c1: closed.view((n, 0), (rows - n, n)).into_owned(),
            d1: closed.view((n, n), (rows - n, cols - n)).into_owned(),
        })
    }

    /// Maps a noise realization onto this LFT's delta: the raw block for an
    /// unreduced channel, `V_s E_s` for a reduced one.
    pub fn channel_delta(&self, ar: &AnalysisRegression, noise: &NoiseRealization) -> Result<DMatrix<f64>> {
        let raw = [&noise.v_x, &noise.v_x_plus, &noise.v_zp, &noise.d];
        let blocks: Vec<DMatrix<f64>> = self
            .channels
            .iter()
            .map(|ch| {
                let label = ar.set.sources()[ch.origin].label();
                let v = match label {
                    LABEL_X => raw[0],
                    LABEL_X_PLUS => raw[1],
                    LABEL_ZP => raw[2],
                    _ => raw[3],
                };
                match &ch.reduction {
                    Some(e) if v.ncols() == e.nrows() => Ok(v * e),
                    Some(_) => Err(Error::Dimension(format!("noise block {label} does not match E"))),
                    None => Ok(v.clone()),
                }
            })
            .collect::<Result<_>>()?;
        self.uncertainty.delta_from_blocks(&blocks)
    }
}

/// Rewrites the regression's parametrization as the analysis LFT, optionally
/// shrinking each source's channel to dimension `n + m_p`.
pub fn assemble_analysis_lft(ar: &AnalysisRegression, g: &DMatrix<f64>, reduce: bool) -> Result<AnalysisLft> {
    let reg = &ar.reg;
    let (n, m_p, p_p) = (ar.n, ar.m_p, ar.p_p);
    let nx = n + m_p;
    if g.shape() != (reg.samples(), nx) {
        return Err(Error::Dimension(format!(
            "G is {:?}, expected {}x{nx}",
            g.shape(),
            reg.samples()
        )));
    }
    let residual = param::right_inverse_residual(reg.x(), g);
    if !(residual <= param::RIGHT_INVERSE_TOL) {
        return Err(Error::NotRightInverse { residual });
    }

    let yg = reg.y() * g;
    let l1 = reg.l1();
    let w_full = l1.ncols() + reg.l2().ncols();
    let bw = linalg::hstack(&[&(&yg * l1), &(-reg.l2())]);
    // zhat = xbar + L1 w1 as a map from (xbar, w_full)
    let lift = linalg::hstack(&[&DMatrix::identity(nx, nx), l1, &DMatrix::zeros(nx, reg.l2().ncols())]);
    let stacked = reg.stacked_r();

    let mut kept_sources: Vec<QmiSource> = Vec::new();
    let mut kept_k: Vec<DMatrix<f64>> = Vec::new();
    let mut channels = Vec::new();
    let mut w_cols: Vec<usize> = Vec::new();
    let mut log = Vec::new();
    for (s, (src, spec)) in ar.set.sources().iter().zip(&ar.channels).enumerate() {
        let label = src.label().to_string();
        if src.is_degenerate() {
            log.push(ReductionEntry {
                label,
                outcome: ReductionOutcome::Dropped,
            });
            continue;
        }
        let e = stacked.rows(spec.r_rows.start, spec.r_rows.len) * g;
        let (source, k, reduction, outcome) = if !reduce {
            (src.clone(), e, None, ReductionOutcome::Disabled)
        } else if e.nrows() <= e.ncols() {
            let cols = e.nrows();
            (src.clone(), e, None, ReductionOutcome::NotSmaller { cols })
        } else {
            match reduce_source(src, &e) {
                Ok(reduced) => {
                    let outcome = ReductionOutcome::Reduced {
                        from: e.nrows(),
                        to: nx,
                    };
                    (reduced, DMatrix::identity(nx, nx), Some(e), outcome)
                }
                Err(Error::ColumnRankDeficient { sigma_min, sigma_max }) => (
                    src.clone(),
                    e,
                    None,
                    ReductionOutcome::RankFallback { sigma_min, sigma_max },
                ),
                Err(err) => return Err(err),
            }
        };
        log.push(ReductionEntry { label, outcome });
        kept_sources.push(source);
        kept_k.push(k);
        channels.push(LftChannel { origin: s, reduction });
        w_cols.extend(spec.w.range());
    }
    debug_assert!(w_cols.iter().all(|&c| c < w_full));

    let b2_full = bw.select_columns(&w_cols);
    let k_refs: Vec<&DMatrix<f64>> = kept_k.iter().collect();
    let k_all = if k_refs.is_empty() {
        DMatrix::zeros(0, nx)
    } else {
        linalg::vstack(&k_refs)
    };
    let chan = &k_all * &lift;
    let w_lift_cols: Vec<usize> = w_cols.iter().map(|c| nx + c).collect();

    Ok(AnalysisLft {
        a: yg.view((0, 0), (n, n)).into_owned(),
        b1: yg.view((0, n), (n, m_p)).into_owned(),
        b2: b2_full.rows(0, n).into_owned(),
        c1: yg.view((n, 0), (p_p, n)).into_owned(),
        d1: yg.view((n, n), (p_p, m_p)).into_owned(),
        d12: b2_full.rows(n, p_p).into_owned(),
        c2: chan.columns(0, n).into_owned(),
        d21: chan.columns(n, m_p).into_owned(),
        d2: chan.select_columns(&w_lift_cols),
        uncertainty: uncertainty::stack_sources(kept_sources),
        g: g.clone(),
        channels,
        reduction_log: log,
    })
}

/// The H2 bound program and handles to its variables.
#[derive(Debug, Clone)]
pub struct H2Sdp {
    pub problem: ConicProblem,
    pub x: VarId,
    pub z: VarId,
    pub tau1: Vec<VarId>,
    pub tau2: Vec<VarId>,
    pub eps: f64,
}

/// `[0 I; C2 D2]` style outer factors of the two LMIs.
struct OuterFactors {
    /// `[I 0]` and `[A B2]` (rows n, cols n + w)
    lyap_top: DMatrix<f64>,
    lyap_next: DMatrix<f64>,
    /// `[0 I; C2 D2]`
    mult1: DMatrix<f64>,
    /// `[C1 D12]`
    perf1: DMatrix<f64>,
    /// `[0 I]` (rows m_p) and `[B2 B1]`
    z_sel: DMatrix<f64>,
    x_next: DMatrix<f64>,
    /// `[I 0; D2 D21]`
    mult2: DMatrix<f64>,
    /// `[D12 D1]`
    perf2: DMatrix<f64>,
}

fn outer_factors(lft: &AnalysisLft) -> OuterFactors {
    let (n, w, m) = (lft.n(), lft.w_dim(), lft.m_p());
    let lyap_top = linalg::hstack(&[&DMatrix::identity(n, n), &DMatrix::zeros(n, w)]);
    let lyap_next = linalg::hstack(&[&lft.a, &lft.b2]);
    let mult1 = linalg::vstack(&[
        &linalg::hstack(&[&DMatrix::zeros(w, n), &DMatrix::identity(w, w)]),
        &linalg::hstack(&[&lft.c2, &lft.d2]),
    ]);
    let perf1 = linalg::hstack(&[&lft.c1, &lft.d12]);
    let z_sel = linalg::hstack(&[&DMatrix::zeros(m, w), &DMatrix::identity(m, m)]);
    let x_next = linalg::hstack(&[&lft.b2, &lft.b1]);
    let mult2 = linalg::vstack(&[
        &linalg::hstack(&[&DMatrix::identity(w, w), &DMatrix::zeros(w, m)]),
        &linalg::hstack(&[&lft.d2, &lft.d21]),
    ]);
    let perf2 = linalg::hstack(&[&lft.d12, &lft.d1]);
    OuterFactors {
        lyap_top,
        lyap_next,
        mult1,
        perf1,
        z_sel,
        x_next,
        mult2,
        perf2,
    }
}

/// Builds: minimize `tr Z` subject to `X >= eps I`, `Z >= eps I` and both
/// robust performance LMIs `<= -eps I`.
pub fn assemble_h2_sdp(lft: &AnalysisLft, eps: f64) -> Result<H2Sdp> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    let (n, w, m) = (lft.n(), lft.w_dim(), lft.m_p());
    let set = &lft.uncertainty;
    if set.w_dim() != w || set.z_dim() != lft.z_dim() {
        return Err(Error::Dimension(format!(
            "uncertainty is {}x{}, channel is {}x{}",
            set.w_dim(),
            set.z_dim(),
            w,
            lft.z_dim()
        )));
    }
    let family = MultiplierFamily::new(set.clone());
    let f = outer_factors(lft);

    let mut problem = ConicProblem::new();
    let x = problem.add_symmetric("X", n);
    let z = problem.add_symmetric("Z", m);
    let labels: Vec<String> = set.sources().iter().map(|s| s.label().to_string()).collect();
    let tau1: Vec<VarId> = labels.iter().map(|l| problem.add_nonneg(format!("tau1[{l}]"))).collect();
    let tau2: Vec<VarId> = labels.iter().map(|l| problem.add_nonneg(format!("tau2[{l}]"))).collect();

    let x_pd = problem
        .lmi("X_pd", n, Sense::PosSemidef)
        .add_congruence(x, &DMatrix::identity(n, n), 1.0)
        .add_constant(&(-DMatrix::identity(n, n) * eps))
        .finish();
    let z_pd = problem
        .lmi("Z_pd", m, Sense::PosSemidef)
        .add_congruence(z, &DMatrix::identity(m, m), 1.0)
        .add_constant(&(-DMatrix::identity(m, m) * eps))
        .finish();

    let side1 = n + w;
    let mut lmi1 = problem
        .lmi("lmi1", side1, Sense::NegSemidef)
        .add_congruence(x, &f.lyap_top, -1.0)
        .add_congruence(x, &f.lyap_next, 1.0)
        .add_constant(&(f.perf1.transpose() * &f.perf1 + DMatrix::identity(side1, side1) * eps));
    for (s, &t) in tau1.iter().enumerate() {
        lmi1 = lmi1.add_scalar(t, &(f.mult1.transpose() * family.basis(s) * &f.mult1));
    }
    let lmi1 = lmi1.finish();

    let side2 = w + m;
    let mut lmi2 = problem
        .lmi("lmi2", side2, Sense::NegSemidef)
        .add_congruence(z, &f.z_sel, -1.0)
        .add_congruence(x, &f.x_next, 1.0)
        .add_constant(&(f.perf2.transpose() * &f.perf2 + DMatrix::identity(side2, side2) * eps));
    for (s, &t) in tau2.iter().enumerate() {
        lmi2 = lmi2.add_scalar(t, &(f.mult2.transpose() * family.basis(s) * &f.mult2));
    }
    let lmi2 = lmi2.finish();

    for c in [x_pd, z_pd, lmi1, lmi2] {
        problem.push_constraint(c);
    }
    problem.minimize_inner(z, &DMatrix::identity(m, m))?;
    Ok(H2Sdp {
        problem,
        x,
        z,
        tau1,
        tau2,
        eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Certificate {
    pub status: SolveStatus,
    pub gamma: Option<f64>,
    #[serde(rename = "X_lyap", with = "crate::matrix_json::option")]
    pub x_lyap: Option<DMatrix<f64>>,
    #[serde(rename = "Z", with = "crate::matrix_json::option")]
    pub z: Option<DMatrix<f64>>,
    pub tau1: Vec<f64>,
    pub tau2: Vec<f64>,
    pub solve_time_s: f64,
}

impl H2Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Solves the bound program. Only an optimal solve yields `gamma`.
pub fn solve_h2_bound(sdp: &H2Sdp, backend: &dyn ConicSolver, options: &SolverOptions) -> Result<H2Certificate> {
    let sol = sdp::solve_with(backend, &sdp.problem, options)?;
    if sol.status != SolveStatus::Optimal {
        return Ok(H2Certificate {
            status: sol.status,
            gamma: None,
            x_lyap: None,
            z: None,
            tau1: Vec::new(),
            tau2: Vec::new(),
            solve_time_s: sol.solve_time_s,
        });
    }
    let z = sol.matrix(sdp.z);
    Ok(H2Certificate {
        status: SolveStatus::Optimal,
        gamma: Some(z.trace().max(0.0).sqrt()),
        x_lyap: Some(sol.matrix(sdp.x)),
        z: Some(z),
        tau1: sdp.tau1.iter().map(|&t| sol.scalar(t)).collect(),
        tau2: sdp.tau2.iter().map(|&t| sol.scalar(t)).collect(),
        solve_time_s: sol.solve_time_s,
    })
}

/// Assembles, solves and returns the certificate with its program.
pub fn robust_h2_bound(
    lft: &AnalysisLft,
    eps: f64,
    backend: &dyn ConicSolver,
    options: &SolverOptions,
) -> Result<(H2Sdp, H2Certificate)> {
    let sdp = assemble_h2_sdp(lft, eps)?;
    let cert = solve_h2_bound(&sdp, backend, options)?;
    Ok((sdp, cert))
}

/// Both LMIs evaluated from the LFT matrices at a candidate solution.
pub fn lmi_values(
    lft: &AnalysisLft,
    x: &DMatrix<f64>,
    z: &DMatrix<f64>,
    tau1: &[f64],
    tau2: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, m) = (lft.n(), lft.m_p());
    if x.shape() != (n, n) || z.shape() != (m, m) {
        return Err(Error::Dimension("X or Z does not match the LFT".into()));
    }
    let family = MultiplierFamily::new(lft.uncertainty.clone());
    let p1 = family.multiplier_matrix(tau1)?;
    let p2 = family.multiplier_matrix(tau2)?;
    let f = outer_factors(lft);
    let lyap1 = linalg::vstack(&[&f.lyap_top, &f.lyap_next]);
    let l1 = lyap1.transpose() * linalg::block_diag(&[&(-x), x]) * &lyap1
        + f.mult1.transpose() * p1 * &f.mult1
        + f.perf1.transpose() * &f.perf1;
    let lyap2 = linalg::vstack(&[&f.z_sel, &f.x_next]);
    let l2 = lyap2.transpose() * linalg::block_diag(&[&(-z), x]) * &lyap2
        + f.mult2.transpose() * p2 * &f.mult2
        + f.perf2.transpose() * &f.perf2;
    Ok((linalg::symmetrize(&l1), linalg::symmetrize(&l2)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub lmi1_max_eig: f64,
    pub lmi2_max_eig: f64,
    pub x_min_eig: f64,
    pub z_min_eig: f64,
    pub gamma: f64,
    pub samples: usize,
    pub worst_condition: f64,
    pub worst_spectral_radius: f64,
    /// Largest `H2(delta) / gamma` over the samples.
    pub worst_h2_ratio: f64,
    pub failures: Vec<String>,
}

/// Checks an optimal certificate a posteriori: plug-back of both LMIs,
/// definiteness of `X` and `Z`, and well-posedness, stability and the H2
/// bound at `delta = 0` plus sampled interior and boundary deltas.
pub fn verify_certificate(
    lft: &AnalysisLft,
    cert: &H2Certificate,
    eps: f64,
    n_samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let (Some(gamma), Some(x), Some(z)) = (cert.gamma, cert.x_lyap.as_ref(), cert.z.as_ref()) else {
        return Err(Error::InvalidArgument(format!(
            "certificate has status {} and cannot be verified",
            cert.status.as_str()
        )));
    };
    let mut failures = Vec::new();
    let (l1, l2) = lmi_values(lft, x, z, &cert.tau1, &cert.tau2)?;
    let lmi1_max_eig = linalg::max_eig(&l1);
    let lmi2_max_eig = if l2.is_empty() { f64::NEG_INFINITY } else { linalg::max_eig(&l2) };
    for (name, v) in [("lmi1", lmi1_max_eig), ("lmi2", lmi2_max_eig)] {
        if !(v <= -eps / 2.0) {
            failures.push(format!("{name}: max eigenvalue {v:e} > -eps/2"));
        }
    }
    let x_min_eig = linalg::min_eig(x);
    let z_min_eig = linalg::min_eig(z);
    if !(x_min_eig > 0.0) {
        failures.push(format!("X: min eigenvalue {x_min_eig:e}"));
    }
    if !(z_min_eig > 0.0) {
        failures.push(format!("Z: min eigenvalue {z_min_eig:e}"));
    }
    if !(gamma * gamma >= z.trace() - 1e-9) {
        failures.push(format!("gamma^2 = {} below tr Z = {}", gamma * gamma, z.trace()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = &lft.uncertainty;
    let mut worst_condition: f64 = 0.0;
    let mut worst_spectral_radius: f64 = 0.0;
    let mut worst_h2_ratio: f64 = 0.0;
    let total = n_samples.max(1);
    for i in 0..total {
        let delta = if i == 0 {
            DMatrix::zeros(set.w_dim(), set.z_dim())
        } else {
            let mode = if i % 2 == 1 { SampleMode::Boundary } else { SampleMode::Interior };
            sample_delta_with(set, &mut rng, mode)
        };
        if !delta.is_empty() {
            let k = DMatrix::identity(lft.z_dim(), lft.z_dim()) - &lft.d2 * &delta;
            let condition = linalg::condition_number(&k);
            worst_condition = worst_condition.max(condition);
            if !(condition < MAX_FEEDBACK_CONDITION) {
                failures.push(format!("sample {i}: cond(I - D2 delta) = {condition:e}"));
                continue;
            }
        } else {
            worst_condition = worst_condition.max(1.0);
        }
        let cl = match lft.close(&delta) {
            Ok(cl) => cl,
            Err(e) => {
                failures.push(format!("sample {i}: {e}"));
                continue;
            }
        };
        let rho = linalg::spectral_radius(&cl.a);
        worst_spectral_radius = worst_spectral_radius.max(rho);
        if !(rho < 1.0) {
            failures.push(format!("sample {i}: spectral radius {rho}"));
            continue;
        }
        match system::h2_norm(&cl.a, &cl.b1, &cl.c1, &cl.d1) {
            Ok(h2) => {
                let ratio = h2 / gamma;
                worst_h2_ratio = worst_h2_ratio.max(ratio);
                if !(h2 <= gamma * (1.0 + H2_BOUND_SLACK)) {
                    failures.push(format!("sample {i}: H2 {h2} exceeds gamma {gamma}"));
                }
            }
            Err(e) => failures.push(format!("sample {i}: {e}")),
        }
    }

    Ok(VerificationReport {
        ok: failures.is_empty(),
        lmi1_max_eig,
        lmi2_max_eig,
        x_min_eig,
        z_min_eig,
        gamma,
        samples: total,
        worst_condition,
        worst_spectral_radius,
        worst_h2_ratio,
        failures,
    })
}
