use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Symmetry tolerance accepted by [`svec`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Number of svec coordinates of a `d x d` symmetric matrix.
pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// `(i, j)` pairs with `i <= j` in svec order: upper triangle, column by column.
fn svec_index(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(|j| (0..=j).map(move |i| (i, j)))
}

/// Isometric vectorization: upper triangle column-wise, off-diagonal entries
/// scaled by `sqrt(2)` so that `<S, T>_F = svec(S) . svec(T)`.
pub fn svec(s: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !s.is_square() {
        return Err(Error::Dimension(format!("svec of a {:?} matrix", s.shape())));
    }
    let deviation = linalg::max_asymmetry(s);
    if deviation > SYMMETRY_TOL * s.amax().max(1.0) {
        return Err(Error::Asymmetric { what: "svec input", deviation });
    }
    Ok(svec_unchecked(s))
}

/// [`svec`] of the upper triangle without the symmetry check.
pub(crate) fn svec_unchecked(s: &DMatrix<f64>) -> Vec<f64> {
    let sqrt2 = std::f64::consts::SQRT_2;
    svec_index(s.nrows())
        .map(|(i, j)| if i == j { s[(i, j)] } else { sqrt2 * s[(i, j)] })
        .collect()
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64]) -> Result<DMatrix<f64>> {
    let d = triangular_side(v.len())
        .ok_or_else(|| Error::Dimension(format!("length {} is not a triangular number", v.len())))?;
    let mut s = DMatrix::zeros(d, d);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for ((i, j), &x) in svec_index(d).zip(v) {
        if i == j {
            s[(i, i)] = x;
        } else {
            s[(i, j)] = x * inv_sqrt2;
            s[(j, i)] = x * inv_sqrt2;
        }
    }
    Ok(s)
}

fn triangular_side(len: usize) -> Option<usize> {
    let d = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (d.saturating_sub(1)..=d + 1).find(|&k| svec_len(k) == len)
}

/// Basis matrix of svec coordinate `k`: `smat(e_k)`.
pub(crate) fn svec_basis(d: usize, k: usize) -> DMatrix<f64> {
    let (i, j) = svec_index(d).nth(k).expect("coordinate in range");
    let mut b = DMatrix::zeros(d, d);
    if i == j {
        b[(i, i)] = 1.0;
    } else {
        b[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
        b[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    /// Symmetric `d x d` matrix, parametrized by its svec coordinates.
    Symmetric(usize),
    ScalarNonneg,
}

impl VarKind {
    /// Number of scalar coordinates.
    pub fn len(&self) -> usize {
        match self {
            VarKind::Symmetric(d) => svec_len(*d),
            VarKind::ScalarNonneg => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

/// Handle into [`ConicProblem::variables`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `F(x) <= 0`
    NegSemidef,
    /// `F(x) >= 0`
    PosSemidef,
}

/// Coefficients of one variable inside an LMI: one symmetric block per svec
/// coordinate of the variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiTerm {
    pub var: VarId,
    pub coeffs: Vec<DMatrix<f64>>,
}

/// Affine symmetric map `F(x) = F_0 + sum_k x_k F_k` with a definiteness sense.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiConstraint {
    pub name: String,
    pub sense: Sense,
    pub constant: DMatrix<f64>,
    pub terms: Vec<LmiTerm>,
}

impl LmiConstraint {
    pub fn side(&self) -> usize {
        self.constant.nrows()
    }

    /// Evaluates `F(x)` at the given per-variable coordinates.
    pub fn evaluate(&self, coords: &[Vec<f64>]) -> DMatrix<f64> {
        let mut f = self.constant.clone();
        for t in &self.terms {
            for (c, &x) in t.coeffs.iter().zip(&coords[t.var.0]) {
                if x != 0.0 {
                    f += c * x;
                }
            }
        }
        f
    }
}

/// Builder for one LMI; terms on the same variable are accumulated.
#[derive(Debug, Clone)]
pub struct LmiBuilder<'p> {
    problem: &'p ConicProblem,
    lmi: LmiConstraint,
}

impl<'p> LmiBuilder<'p> {
    fn term_mut(&mut self, var: VarId) -> &mut LmiTerm {
        if let Some(pos) = self.lmi.terms.iter().position(|t| t.var == var) {
            return &mut self.lmi.terms[pos];
        }
        let side = self.lmi.side();
        let n = self.problem.variables[var.0].kind.len();
        self.lmi.terms.push(LmiTerm {
            var,
            coeffs: vec![DMatrix::zeros(side, side); n],
        });
        self.lmi.terms.last_mut().expect("just pushed")
    }

    pub fn add_constant(mut self, c: &DMatrix<f64>) -> Self {
        assert_eq!(c.shape(), self.lmi.constant.shape(), "constant block shape");
        self.lmi.constant += linalg::symmetrize(c);
        self
    }

    /// Adds `scale * M^T X M` for a symmetric matrix variable `X`.
    pub fn add_congruence(mut self, var: VarId, m: &DMatrix<f64>, scale: f64) -> Self {
        let VarKind::Symmetric(d) = self.problem.variables[var.0].kind else {
            panic!("congruence term on a scalar variable");
        };
        let side = self.lmi.side();
        assert_eq!(m.shape(), (d, side), "congruence factor shape");
        let term = self.term_mut(var);
        for (k, coeff) in term.coeffs.iter_mut().enumerate() {
            let b = svec_basis(d, k);
            *coeff += linalg::symmetrize(&(m.transpose() * b * m)) * scale;
        }
        self
    }

    /// Adds `x * F` for a scalar variable `x`.
    pub fn add_scalar(mut self, var: VarId, f: &DMatrix<f64>) -> Self {
        assert!(
            matches!(self.problem.variables[var.0].kind, VarKind::ScalarNonneg),
            "scalar term on a matrix variable"
        );
        assert_eq!(f.shape(), self.lmi.constant.shape(), "scalar coefficient shape");
        let f = linalg::symmetrize(f);
        self.term_mut(var).coeffs[0] += f;
        self
    }

    pub fn finish(self) -> LmiConstraint {
        self.lmi
    }
}

/// Linear objective and LMI constraints over symmetric-matrix and nonnegative
/// scalar variables. The objective is minimized.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConicProblem {
    pub variables: Vec<Variable>,
    /// Per-variable objective coefficients in svec coordinates.
    pub objective: Vec<(VarId, Vec<f64>)>,
    pub constraints: Vec<LmiConstraint>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_symmetric(&mut self, name: impl Into<String>, d: usize) -> VarId {
        self.push_var(name.into(), VarKind::Symmetric(d))
    }

    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.push_var(name.into(), VarKind::ScalarNonneg)
    }

    fn push_var(&mut self, name: String, kind: VarKind) -> VarId {
        self.variables.push(Variable { name, kind });
        VarId(self.variables.len() - 1)
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn lmi(&self, name: impl Into<String>, side: usize, sense: Sense) -> LmiBuilder<'_> {
        LmiBuilder {
            problem: self,
            lmi: LmiConstraint {
                name: name.into(),
                sense,
                constant: DMatrix::zeros(side, side),
                terms: Vec::new(),
            },
        }
    }

    pub fn push_constraint(&mut self, lmi: LmiConstraint) {
        self.constraints.push(lmi);
    }

    /// Adds `<C, X>` to the objective for a symmetric variable.
    pub fn minimize_inner(&mut self, var: VarId, c: &DMatrix<f64>) -> Result<()> {
        let coords = svec(&linalg::symmetrize(c))?;
        if coords.len() != self.variables[var.0].kind.len() {
            return Err(Error::Dimension("objective block does not match variable".into()));
        }
        self.objective.push((var, coords));
        Ok(())
    }

    pub fn minimize_scalar(&mut self, var: VarId, weight: f64) {
        self.objective.push((var, vec![weight]));
    }

    pub fn num_coordinates(&self) -> usize {
        self.variables.iter().map(|v| v.kind.len()).sum()
    }

    /// Checks block dimensions and variable references.
    pub fn validate(&self) -> Result<()> {
        let nvars = self.variables.len();
        for (var, c) in &self.objective {
            if var.0 >= nvars {
                return Err(Error::InvalidArgument(format!("objective references unknown variable {}", var.0)));
            }
            if c.len() != self.variables[var.0].kind.len() {
                return Err(Error::Dimension(format!(
                    "objective coefficients for {} have length {}",
                    self.variables[var.0].name,
                    c.len()
                )));
            }
        }
        for lmi in &self.constraints {
            if !lmi.constant.is_square() {
                return Err(Error::Dimension(format!("constraint {} is not square", lmi.name)));
            }
            for t in &lmi.terms {
                if t.var.0 >= nvars {
                    return Err(Error::InvalidArgument(format!(
                        "constraint {} references unknown variable {}",
                        lmi.name, t.var.0
                    )));
                }
                if t.coeffs.len() != self.variables[t.var.0].kind.len() {
                    return Err(Error::Dimension(format!(
                        "constraint {}: wrong coefficient count for {}",
                        lmi.name, self.variables[t.var.0].name
                    )));
                }
                if t.coeffs.iter().any(|c| c.shape() != lmi.constant.shape()) {
                    return Err(Error::Dimension(format!(
                        "constraint {}: coefficient block does not match side {}",
                        lmi.name,
                        lmi.side()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, coords: &[Vec<f64>]) -> f64 {
        self.objective
            .iter()
            .map(|(v, c)| c.iter().zip(&coords[v.0]).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_examples() {
        assert_eq!(svec(&DMatrix::identity(2, 2)).unwrap(), vec![1.0, 0.0, 1.0]);
        let off = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let v = svec(&off).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn smat_examples() {
        assert_eq!(smat(&[1.0, 0.0, 1.0]).unwrap(), DMatrix::identity(2, 2));
        assert_eq!(smat(&[0.0; 6]).unwrap(), DMatrix::zeros(3, 3));
        assert!(smat(&[1.0, 2.0]).is_err());
        assert_eq!(smat(&[]).unwrap().shape(), (0, 0));
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(svec(&m), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn basis_matches_smat() {
        for k in 0..6 {
            let mut e = vec![0.0; 6];
            e[k] = 1.0;
            assert_eq!(smat(&e).unwrap(), svec_basis(3, k));
        }
    }

    #[test]
    fn validate_catches_bad_blocks() {
        let mut p = ConicProblem::new();
        let t = p.add_nonneg("t");
        let mut lmi = p.lmi("c", 2, Sense::PosSemidef).add_scalar(t, &DMatrix::identity(2, 2)).finish();
        lmi.terms[0].coeffs[0] = DMatrix::identity(3, 3);
        p.push_constraint(lmi);
        assert!(p.validate().is_err());
    }
}
