//! Conic-program model, lowering to standard form, and the solver contract.

mod clarabel;
mod lower;
mod problem;

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use self::clarabel::ClarabelBackend;
pub use self::lower::{lower, Cone, ConstraintRows, LoweredProblem, Triplets, VarLayout};
pub use self::problem::{
    smat, svec, svec_len, ConicProblem, LmiBuilder, LmiConstraint, LmiTerm, Sense, VarId, VarKind,
    Variable,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

/// What a backend reports for a lowered program.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendOutput {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub iterations: u32,
}

/// Backend contract: deterministic for identical inputs, never panics on
/// divergence (report [`SolveStatus::NumericalFailure`] instead), and keeps
/// no state between calls.
pub trait ConicSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, program: &LoweredProblem, options: &SolverOptions) -> BackendOutput;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Symmetric(DMatrix<f64>),
    Scalar(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Per-variable coordinates (svec for symmetric variables), in declaration order.
    pub coords: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub kinds: Vec<VarKind>,
    pub objective: f64,
    /// Cone violation of the returned point, relative to `max(1, ||b||_inf)`.
    pub primal_residual: f64,
    pub iterations: u32,
    pub solve_time_s: f64,
}

impl Solution {
    pub fn value(&self, name: &str) -> Option<Value> {
        let k = self.names.iter().position(|n| n == name)?;
        let c = &self.coords[k];
        Some(match self.kinds[k] {
            VarKind::ScalarNonneg => Value::Scalar(c[0]),
            VarKind::Symmetric(_) => Value::Symmetric(smat(c).ok()?),
        })
    }

    pub fn matrix(&self, var: VarId) -> DMatrix<f64> {
        smat(&self.coords[var.0]).expect("symmetric variable coordinates")
    }

    pub fn scalar(&self, var: VarId) -> f64 {
        self.coords[var.0][0]
    }
}

/// Lowers and solves with the default backend.
pub fn solve(problem: &ConicProblem, options: &SolverOptions) -> crate::Result<Solution> {
    solve_with(&ClarabelBackend, problem, options)
}

pub fn solve_with(
    backend: &dyn ConicSolver,
    problem: &ConicProblem,
    options: &SolverOptions,
) -> crate::Result<Solution> {
    let program = lower(problem)?;
    Ok(solve_lowered(backend, &program, options))
}

pub fn solve_lowered(backend: &dyn ConicSolver, program: &LoweredProblem, options: &SolverOptions) -> Solution {
    let start = Instant::now();
    let out = backend.solve(program, options);
    let solve_time_s = start.elapsed().as_secs_f64();

    let names = program.variables.iter().map(|v| v.name.clone()).collect();
    let kinds = program.variables.iter().map(|v| v.kind).collect();
    let finite = out.x.len() == program.num_vars() && out.x.iter().all(|v| v.is_finite());
    if !finite {
        return Solution {
            status: match out.status {
                SolveStatus::Optimal => SolveStatus::NumericalFailure,
                s => s,
            },
            coords: program.reconstruct(&vec![0.0; program.num_vars()]),
            names,
            kinds,
            objective: f64::NAN,
            primal_residual: f64::INFINITY,
            iterations: out.iterations,
            solve_time_s,
        };
    }

    let scale = program.b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let primal_residual = program.cone_violation(&out.x) / scale;
    let objective = program.c.iter().zip(&out.x).map(|(c, x)| c * x).sum();
    let status = match out.status {
        SolveStatus::Optimal if primal_residual > options.tol => SolveStatus::NumericalFailure,
        s => s,
    };
    Solution {
        status,
        coords: program.reconstruct(&out.x),
        names,
        kinds,
        objective,
        primal_residual,
        iterations: out.iterations,
        solve_time_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(d: usize) -> DMatrix<f64> {
        DMatrix::identity(d, d)
    }

    #[test]
    fn scalar_times_identity_above_identity() {
        let mut p = ConicProblem::new();
        let t = p.add_nonneg("t");
        let lmi = p.lmi("tI_ge_I", 2, Sense::PosSemidef).add_scalar(t, &eye(2)).add_constant(&(-eye(2))).finish();
        p.push_constraint(lmi);
        p.minimize_scalar(t, 1.0);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.scalar(t) - 1.0).abs() < 1e-7);
        assert_eq!(sol.value("t"), Some(Value::Scalar(sol.scalar(t))));
    }

    #[test]
    fn constant_infeasible_lmi() {
        let eps = 1e-7;
        let mut p = ConicProblem::new();
        let t = p.add_nonneg("t");
        let lmi = p.lmi("neg_I", 2, Sense::PosSemidef).add_constant(&(-eye(2) * (1.0 + eps))).finish();
        p.push_constraint(lmi);
        p.minimize_scalar(t, 1.0);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn scalar_lyapunov_is_feasible() {
        let (a, eps) = (0.5, 1e-7);
        let mut p = ConicProblem::new();
        let x = p.add_symmetric("x", 1);
        let decay = p
            .lmi("decay", 1, Sense::NegSemidef)
            .add_congruence(x, &eye(1), a * a - 1.0)
            .add_constant(&(eye(1) * eps))
            .finish();
        let pos = p.lmi("pos", 1, Sense::PosSemidef).add_congruence(x, &eye(1), 1.0).add_constant(&(-eye(1) * eps)).finish();
        p.push_constraint(decay);
        p.push_constraint(pos);
        p.minimize_inner(x, &eye(1)).unwrap();
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let v = sol.matrix(x)[(0, 0)];
        assert!(v >= eps - 1e-8 && v * (a * a - 1.0) <= -eps + 1e-8, "x = {v}");
        assert!(sol.primal_residual <= 1e-8);
    }

    #[test]
    fn unstable_scalar_lyapunov_is_infeasible() {
        let mut p = ConicProblem::new();
        let x = p.add_symmetric("x", 1);
        let decay = p
            .lmi("decay", 1, Sense::NegSemidef)
            .add_congruence(x, &eye(1), 4.0 - 1.0)
            .add_constant(&(eye(1) * 1e-7))
            .finish();
        let pos = p.lmi("pos", 1, Sense::PosSemidef).add_congruence(x, &eye(1), 1.0).add_constant(&(-eye(1) * 1e-7)).finish();
        p.push_constraint(decay);
        p.push_constraint(pos);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    struct Diverging;
    impl ConicSolver for Diverging {
        fn name(&self) -> &'static str {
            "diverging"
        }
        fn solve(&self, program: &LoweredProblem, _: &SolverOptions) -> BackendOutput {
            BackendOutput {
                status: SolveStatus::Optimal,
                x: vec![f64::NAN; program.num_vars()],
                iterations: 7,
            }
        }
    }

    #[test]
    fn non_finite_output_is_numerical_failure() {
        let mut p = ConicProblem::new();
        let t = p.add_nonneg("t");
        p.minimize_scalar(t, 1.0);
        let sol = solve_with(&Diverging, &p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::NumericalFailure);
    }
}
