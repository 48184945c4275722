//! Lowering of a [`ConicProblem`] to the standard primal form
//!
//! ```text
//! minimize c^T x   subject to   A x + s = b,   s in K
//! ```
//!
//! `x` concatenates the variables in declaration order (svec coordinates for
//! symmetric variables). `K` is one nonnegative orthant holding every scalar
//! variable, followed by one PSD cone (svec coordinates) per LMI in order.

use serde::{Deserialize, Serialize};

use super::problem::{svec_unchecked, ConicProblem, Sense, VarKind};
use crate::error::Result;
use crate::linalg::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Cone {
    Nonneg { dim: usize },
    Psd { side: usize },
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonneg { dim } => dim,
            Cone::Psd { side } => side * (side + 1) / 2,
        }
    }
}

/// Sparse matrix in coordinate form.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Triplets {
    fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.rows.push(r);
            self.cols.push(c);
            self.vals.push(v);
        }
    }

    /// `A x`
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            y[r] += v * x[c];
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarLayout {
    pub name: String,
    pub kind: VarKind,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRows {
    pub name: String,
    pub rows: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoweredProblem {
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Triplets,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
    pub variables: Vec<VarLayout>,
    pub constraints: Vec<ConstraintRows>,
}

impl LoweredProblem {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    /// Splits a flat primal vector into per-variable coordinate vectors.
    pub fn reconstruct(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.variables
            .iter()
            .map(|v| x[v.offset..v.offset + v.len].to_vec())
            .collect()
    }

    /// Inverse of [`reconstruct`](Self::reconstruct).
    pub fn flatten(&self, coords: &[Vec<f64>]) -> Vec<f64> {
        let mut x = vec![0.0; self.num_vars()];
        for (v, c) in self.variables.iter().zip(coords) {
            x[v.offset..v.offset + v.len].copy_from_slice(c);
        }
        x
    }

    /// The slack `b - A x` implied by a primal point.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.mul(x);
        self.b.iter().zip(ax).map(|(b, ax)| b - ax).collect()
    }

    /// Largest cone violation of `b - A x`: the most negative orthant entry or
    /// PSD eigenvalue, reported as a nonnegative number.
    pub fn cone_violation(&self, x: &[f64]) -> f64 {
        let s = self.slack(x);
        let mut offset = 0;
        let mut worst: f64 = 0.0;
        for cone in &self.cones {
            let part = &s[offset..offset + cone.dim()];
            let v = match cone {
                Cone::Nonneg { .. } => part.iter().copied().fold(0.0_f64, |acc, e| acc.max(-e)),
                Cone::Psd { .. } => {
                    let m = super::problem::smat(part).expect("cone dimension is triangular");
                    (-crate::linalg::min_eig(&m)).max(0.0)
                }
            };
            worst = worst.max(v);
            offset += cone.dim();
        }
        worst
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lowered problem serializes")
    }
}

pub fn lower(problem: &ConicProblem) -> Result<LoweredProblem> {
    problem.validate()?;

    let mut variables = Vec::with_capacity(problem.variables.len());
    let mut offset = 0;
    for v in &problem.variables {
        let len = v.kind.len();
        variables.push(VarLayout {
            name: v.name.clone(),
            kind: v.kind,
            offset,
            len,
        });
        offset += len;
    }
    let nvars = offset;

    let mut c = vec![0.0; nvars];
    for (var, coeffs) in &problem.objective {
        let base = variables[var.0].offset;
        for (k, &w) in coeffs.iter().enumerate() {
            c[base + k] += w;
        }
    }

    let mut a = Triplets {
        ncols: nvars,
        ..Default::default()
    };
    let mut b = Vec::new();
    let mut cones = Vec::new();
    let mut constraints = Vec::new();

    let scalars: Vec<&VarLayout> = variables
        .iter()
        .filter(|v| matches!(v.kind, VarKind::ScalarNonneg))
        .collect();
    if !scalars.is_empty() {
        for v in &scalars {
            a.push(b.len(), v.offset, -1.0);
            b.push(0.0);
        }
        cones.push(Cone::Nonneg { dim: scalars.len() });
        constraints.push(ConstraintRows {
            name: "nonneg".into(),
            rows: Span::new(0, scalars.len()),
        });
    }

    for lmi in &problem.constraints {
        let side = lmi.side();
        if side == 0 {
            continue;
        }
        let row0 = b.len();
        // s = -F(x) for F <= 0, s = F(x) for F >= 0.
        let sign = match lmi.sense {
            Sense::NegSemidef => -1.0,
            Sense::PosSemidef => 1.0,
        };
        b.extend(svec_unchecked(&lmi.constant).into_iter().map(|v| sign * v));
        for term in &lmi.terms {
            let base = variables[term.var.0].offset;
            for (k, coeff) in term.coeffs.iter().enumerate() {
                for (r, v) in svec_unchecked(coeff).into_iter().enumerate() {
                    a.push(row0 + r, base + k, -sign * v);
                }
            }
        }
        cones.push(Cone::Psd { side });
        constraints.push(ConstraintRows {
            name: lmi.name.clone(),
            rows: Span::new(row0, b.len() - row0),
        });
    }
    a.nrows = b.len();

    Ok(LoweredProblem {
        c,
        a,
        b,
        cones,
        variables,
        constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn single_scalar_objective() {
        let mut p = ConicProblem::new();
        let t = p.add_nonneg("t");
        p.minimize_scalar(t, 1.0);
        let low = lower(&p).unwrap();
        assert_eq!(low.c, vec![1.0]);
        assert_eq!(low.cones, vec![Cone::Nonneg { dim: 1 }]);
        assert_eq!(low.b, vec![0.0]);
    }

    #[test]
    fn feasible_point_maps_into_the_cone() {
        // X >= I (2x2) and t >= 0
        let mut p = ConicProblem::new();
        let x = p.add_symmetric("X", 2);
        let t = p.add_nonneg("t");
        let lmi = p
            .lmi("x_ge_i", 2, Sense::PosSemidef)
            .add_congruence(x, &DMatrix::identity(2, 2), 1.0)
            .add_constant(&(-DMatrix::identity(2, 2)))
            .finish();
        p.push_constraint(lmi);
        let neg = p
            .lmi("x_le_t", 2, Sense::NegSemidef)
            .add_congruence(x, &DMatrix::identity(2, 2), 1.0)
            .add_scalar(t, &(-DMatrix::identity(2, 2)))
            .finish();
        p.push_constraint(neg);
        let low = lower(&p).unwrap();
        let xval = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
        let coords = vec![super::super::problem::svec(&xval).unwrap(), vec![3.0]];
        let flat = low.flatten(&coords);
        assert_eq!(low.reconstruct(&flat), coords);
        assert!(low.cone_violation(&flat) < 1e-12);
        // and an infeasible point is flagged
        let bad = vec![vec![0.5, 0.0, 0.5], vec![3.0]];
        assert!(low.cone_violation(&low.flatten(&bad)) > 0.4);
    }
}
