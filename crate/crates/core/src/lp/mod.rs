//! Dense linear programming with certificates.
//!
//! Problems are maximizations over nonnegative variables with equality and
//! `>=` rows:
//!
//! ```text
//! max  c'x   s.t.  A x = b,  G x >= h,  x >= 0
//! ```
//!
//! The dual used by the certificates is `min b'y + h'z` subject to
//! `A'y + G'z >= c`, `y` free and `z <= 0`.

mod certificate;
mod dump;
mod simplex;

pub use certificate::check_certificate;
pub use dump::write_lp;
pub use simplex::solve_lp;

use serde::Serialize;

use crate::error::LpError;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearRow<S> {
    pub name: String,
    pub coeffs: Vec<S>,
    pub rhs: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem<S> {
    pub var_names: Vec<String>,
    pub objective: Vec<S>,
    pub eq: Vec<LinearRow<S>>,
    pub ge: Vec<LinearRow<S>>,
}

impl<S: Scalar> LpProblem<S> {
    pub fn new(n_vars: usize) -> Self {
        Self {
            var_names: (0..n_vars).map(|j| format!("x{j}")).collect(),
            objective: vec![S::zero(); n_vars],
            eq: Vec::new(),
            ge: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn add_eq(&mut self, name: impl Into<String>, coeffs: Vec<S>, rhs: S) {
        self.eq.push(LinearRow { name: name.into(), coeffs, rhs });
    }

    pub fn add_ge(&mut self, name: impl Into<String>, coeffs: Vec<S>, rhs: S) {
        self.ge.push(LinearRow { name: name.into(), coeffs, rhs });
    }

    pub fn check_dimensions(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.objective.len() != n {
            return Err(LpError::DimensionMismatch { row: "objective".into(), expected: n, got: self.objective.len() });
        }
        for r in self.eq.iter().chain(&self.ge) {
            if r.coeffs.len() != n {
                return Err(LpError::DimensionMismatch { row: r.name.clone(), expected: n, got: r.coeffs.len() });
            }
        }
        Ok(())
    }

    /// `c'x`.
    pub fn objective_value(&self, x: &[S]) -> S {
        dot(&self.objective, x)
    }
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .filter(|(u, v)| !u.is_zero() && !v.is_zero())
        .fold(S::zero(), |acc, (u, v)| acc + u.clone() * v.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate<S> {
    /// Dual solution `(y, z)` with equal objective.
    Optimal { eq_duals: Vec<S>, ge_duals: Vec<S> },
    /// Improving ray `d` from the feasible point in [`LpSolution::primal`].
    Unbounded { ray: Vec<S> },
    /// Farkas multipliers: `A'y + G'z >= 0`, `z <= 0`, `b'y + h'z < 0`.
    Infeasible { eq_farkas: Vec<S>, ge_farkas: Vec<S> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    /// Optimal vertex, or a feasible point when unbounded; empty when
    /// infeasible.
    pub primal: Vec<S>,
    pub objective: Option<S>,
    pub certificate: Certificate<S>,
    pub iterations: usize,
}

impl<S: Scalar> LpSolution<S> {
    pub fn eq_duals(&self) -> Option<&[S]> {
        match &self.certificate {
            Certificate::Optimal { eq_duals, .. } => Some(eq_duals),
            _ => None,
        }
    }

    pub fn ge_duals(&self) -> Option<&[S]> {
        match &self.certificate {
            Certificate::Optimal { ge_duals, .. } => Some(ge_duals),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpOptions {
    /// Smallest magnitude accepted as a pivot (float mode).
    pub pivot_tol: f64,
    /// Reduced-cost and feasibility threshold (float mode).
    pub feas_tol: f64,
    pub max_iterations: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { pivot_tol: 1e-12, feas_tol: 1e-9, max_iterations: 200_000 }
    }
}
