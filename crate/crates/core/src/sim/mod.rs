//! Ground-truth simulation, bounded measurement noise and closed-loop H2
//! evaluation of the analysis LFT.

mod dataset;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisLft;
use crate::error::{Error, Result};
use crate::system::{self, LtiSystem};

pub use self::dataset::{read_dataset, sidecar_path, write_dataset};

/// Noise-free trajectory: `N` states, `N - 1` inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanTrajectory {
    pub states: DMatrix<f64>,
    pub inputs: DMatrix<f64>,
    pub outputs: DMatrix<f64>,
    /// Constant disturbance value held over the whole experiment.
    pub disturbance: DVector<f64>,
}

/// Per-instant Euclidean ball radii for state and output noise, and the
/// interval bound of the constant disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBounds {
    pub v_x: f64,
    pub v_zp: f64,
    pub d_bar: f64,
}

impl NoiseBounds {
    pub const ZERO: NoiseBounds = NoiseBounds {
        v_x: 0.0,
        v_zp: 0.0,
        d_bar: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("v_x", self.v_x), ("v_zp", self.v_zp), ("d_bar", self.d_bar)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for NoiseBounds {
    fn default() -> Self {
        Self {
            v_x: 5e-4,
            v_zp: 5e-4,
            d_bar: 0.01,
        }
    }
}

/// The noise actually added to a trajectory, stored in the regression layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    /// Noise on `x_0 .. x_{N-2}`.
    #[serde(with = "crate::matrix_json")]
    pub v_x: DMatrix<f64>,
    /// Noise on `x_1 .. x_{N-1}`.
    #[serde(with = "crate::matrix_json")]
    pub v_x_plus: DMatrix<f64>,
    #[serde(with = "crate::matrix_json")]
    pub v_zp: DMatrix<f64>,
    /// Disturbance value as an `m_d x 1` block.
    #[serde(with = "crate::matrix_json")]
    pub d: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(default)]
    pub system: Option<LtiSystem>,
    #[serde(default)]
    pub bounds: Option<NoiseBounds>,
    pub noise: NoiseRealization,
}

/// Measured data: states are noisy, inputs exact, outputs noisy.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    pub states: DMatrix<f64>,
    pub inputs: DMatrix<f64>,
    pub outputs: DMatrix<f64>,
    pub truth: Option<GroundTruth>,
}

impl NoisyDataset {
    pub fn samples(&self) -> usize {
        self.states.ncols()
    }

    pub fn with_system(mut self, sys: &LtiSystem) -> Self {
        if let Some(t) = self.truth.as_mut() {
            t.system = Some(sys.clone());
        }
        self
    }
}

/// Runs the recursion `x_{k+1} = A x_k + Bp wp_k + Bd d`, `zp_k = Cp x_k + Dp wp_k`.
pub fn simulate(sys: &LtiSystem, x0: &DVector<f64>, wp: &DMatrix<f64>, d: &DVector<f64>) -> Result<CleanTrajectory> {
    sys.validate()?;
    if x0.len() != sys.n() || wp.nrows() != sys.m_p() || d.len() != sys.m_d() {
        return Err(Error::Dimension("initial state, inputs or disturbance do not match the system".into()));
    }
    let steps = wp.ncols();
    if steps == 0 {
        return Err(Error::InvalidArgument("simulation needs N >= 2".into()));
    }
    let mut states = DMatrix::zeros(sys.n(), steps + 1);
    let mut outputs = DMatrix::zeros(sys.p_p(), steps);
    states.set_column(0, x0);
    let bd_d = &sys.bd * d;
    for k in 0..steps {
        let x = states.column(k).into_owned();
        let w = wp.column(k);
        outputs.set_column(k, &(&sys.cp * &x + &sys.dp * w));
        states.set_column(k + 1, &(&sys.a * &x + &sys.bp * w + &bd_d));
    }
    Ok(CleanTrajectory {
        states,
        inputs: wp.clone(),
        outputs,
        disturbance: d.clone(),
    })
}

/// Largest residual of the defining recursion over a trajectory.
pub fn recursion_residual(sys: &LtiSystem, traj: &CleanTrajectory) -> f64 {
    let bd_d = &sys.bd * &traj.disturbance;
    (0..traj.inputs.ncols())
        .map(|k| {
            let x = traj.states.column(k);
            let w = traj.inputs.column(k);
            let rx = traj.states.column(k + 1) - (&sys.a * x + &sys.bp * w + &bd_d);
            let rz = traj.outputs.column(k) - (&sys.cp * x + &sys.dp * w);
            rx.amax().max(rz.amax())
        })
        .fold(0.0, f64::max)
}

/// Uniform sample from the Euclidean ball of the given radius.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> DVector<f64> {
    if dim == 0 || radius == 0.0 {
        return DVector::zeros(dim);
    }
    let dir = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = dir.norm();
    if norm == 0.0 {
        return DVector::zeros(dim);
    }
    let u: f64 = rng.random_range(0.0..1.0);
    dir * (radius * u.powf(1.0 / dim as f64) / norm)
}

/// Adds per-instant ball noise to every measured state and output; inputs are
/// left exact. The retained blocks satisfy `sigma_max <= bound * sqrt(N - 1)`.
pub fn corrupt(traj: &CleanTrajectory, bounds: &NoiseBounds, seed: u64) -> Result<NoisyDataset> {
    bounds.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, samples) = traj.states.shape();
    let p = traj.outputs.nrows();
    let mut state_noise = DMatrix::zeros(n, samples);
    for k in 0..samples {
        state_noise.set_column(k, &sample_ball(&mut rng, n, bounds.v_x));
    }
    let mut output_noise = DMatrix::zeros(p, samples - 1);
    for k in 0..samples - 1 {
        output_noise.set_column(k, &sample_ball(&mut rng, p, bounds.v_zp));
    }
    let noise = NoiseRealization {
        v_x: state_noise.columns(0, samples - 1).into_owned(),
        v_x_plus: state_noise.columns(1, samples - 1).into_owned(),
        v_zp: output_noise.clone(),
        d: DMatrix::from_column_slice(traj.disturbance.len(), 1, traj.disturbance.as_slice()),
    };
    Ok(NoisyDataset {
        states: &traj.states + state_noise,
        inputs: traj.inputs.clone(),
        outputs: &traj.outputs + output_noise,
        truth: Some(GroundTruth {
            system: None,
            bounds: Some(*bounds),
            noise,
        }),
    })
}

/// Draws the random experiment used by the numerical study: initial state
/// uniform in `[-1, 1]^n`, inputs uniform in `[-1, 1]^{m_p}`, and a constant
/// disturbance uniform in `[-d_bar, d_bar]^{m_d}`.
pub fn random_experiment(sys: &LtiSystem, samples: usize, d_bar: f64, seed: u64) -> Result<CleanTrajectory> {
    if samples < 2 {
        return Err(Error::InvalidArgument("simulation needs N >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = DVector::from_fn(sys.n(), |_, _| rng.random_range(-1.0..=1.0));
    let wp = DMatrix::from_fn(sys.m_p(), samples - 1, |_, _| rng.random_range(-1.0..=1.0));
    let d = DVector::from_fn(sys.m_d(), |_, _| {
        if d_bar > 0.0 {
            rng.random_range(-d_bar..=d_bar)
        } else {
            0.0
        }
    });
    simulate(sys, &x0, &wp, &d)
}

/// H2 norm (`wp -> zp`) of the realization obtained by closing the analysis
/// LFT with `delta`.
pub fn closed_loop_h2(lft: &AnalysisLft, delta: &DMatrix<f64>) -> Result<f64> {
    let cl = lft.close(delta)?;
    system::h2_norm(&cl.a, &cl.b1, &cl.c1, &cl.d1)
}
