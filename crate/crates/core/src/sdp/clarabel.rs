use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::lower::{Cone, LoweredProblem};
use super::{BackendOutput, ConicSolver, SolveStatus, SolverOptions};

/// Interior-point backend using the Clarabel homogeneous-embedding solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

impl ConicSolver for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, program: &LoweredProblem, options: &SolverOptions) -> BackendOutput {
        let n = program.num_vars();
        let failure = |iterations| BackendOutput {
            status: SolveStatus::NumericalFailure,
            x: vec![f64::NAN; n],
            iterations,
        };

        let settings = match DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(options.max_iter)
            .tol_gap_abs(options.tol)
            .tol_gap_rel(options.tol)
            .tol_feas(options.tol)
            .tol_infeas_abs(options.tol)
            .tol_infeas_rel(options.tol)
            .max_threads(1)
            .build()
        {
            Ok(s) => s,
            Err(_) => return failure(0),
        };

        let p = CscMatrix::<f64>::zeros((n, n));
        let a = CscMatrix::new_from_triplets(
            program.a.nrows,
            program.a.ncols,
            program.a.rows.clone(),
            program.a.cols.clone(),
            program.a.vals.clone(),
        );
        let cones: Vec<SupportedConeT<f64>> = program
            .cones
            .iter()
            .map(|c| match *c {
                Cone::Nonneg { dim } => SupportedConeT::NonnegativeConeT(dim),
                Cone::Psd { side } => SupportedConeT::PSDTriangleConeT(side),
            })
            .collect();

        let mut solver = match DefaultSolver::new(&p, &program.c, &a, &program.b, &cones, settings) {
            Ok(s) => s,
            Err(_) => return failure(0),
        };
        solver.solve();

        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            _ => SolveStatus::NumericalFailure,
        };
        BackendOutput {
            status,
            x: sol.x.clone(),
            iterations: sol.iterations,
        }
    }
}
