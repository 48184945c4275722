//! Errors-in-variables LFT parametrization of data-consistent systems and
//! robust H2 bounds computed from noisy trajectory data.

use openblas_src as _;

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod matrix_json;
pub mod montecarlo;
pub mod param;
pub mod sdp;
pub mod sim;
pub mod system;
pub mod uncertainty;

pub use analysis::{
    assemble_analysis_lft, assemble_h2_sdp, build_analysis_regression, right_inverse, robust_h2_bound,
    solve_h2_bound, verify_certificate, AnalysisLft, AnalysisRegression, GChoice, H2Certificate, H2Sdp,
    VerificationReport, DEFAULT_EPS,
};
pub use error::{Error, Result};
pub use montecarlo::{run_montecarlo, run_single, ExperimentConfig, Execution, RunRecord, RunStatus, SummaryTable};
pub use param::{build_lft, RegressionLft, StructuredRegression};
pub use sim::{corrupt, random_experiment, simulate, NoiseBounds, NoisyDataset};
pub use system::{example_system, true_h2, LtiSystem};
pub use uncertainty::{QmiSource, UncertaintySet};
