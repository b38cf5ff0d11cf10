//! Pivot-free verification of simplex certificates.

use super::{dot, Certificate, LpProblem, LpSolution, LpStatus};
use crate::scalar::Scalar;

fn feasible<S: Scalar>(p: &LpProblem<S>, x: &[S], tol: f64) -> bool {
    x.len() == p.n_vars()
        && x.iter().all(|v| !v.is_neg_tol(tol))
        && p.eq.iter().all(|r| (dot(&r.coeffs, x) - r.rhs.clone()).is_zero_tol(tol))
        && p.ge.iter().all(|r| !(dot(&r.coeffs, x) - r.rhs.clone()).is_neg_tol(tol))
}

/// `A'y + G'z`, one entry per variable.
fn transpose_apply<S: Scalar>(p: &LpProblem<S>, y: &[S], z: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); p.n_vars()];
    for (r, w) in p.eq.iter().zip(y).chain(p.ge.iter().zip(z)) {
        if w.is_zero() {
            continue;
        }
        for (o, c) in out.iter_mut().zip(&r.coeffs) {
            if !c.is_zero() {
                *o = o.clone() + c.clone() * w.clone();
            }
        }
    }
    out
}

fn rhs_value<S: Scalar>(p: &LpProblem<S>, y: &[S], z: &[S]) -> S {
    p.eq.iter().zip(y).chain(p.ge.iter().zip(z)).fold(S::zero(), |acc, (r, w)| acc + r.rhs.clone() * w.clone())
}

/// Re-verifies `sol` against `prob` using arithmetic only. `tol` is ignored
/// in exact arithmetic.
pub fn check_certificate<S: Scalar>(prob: &LpProblem<S>, sol: &LpSolution<S>, tol: f64) -> bool {
    if prob.check_dimensions().is_err() {
        return false;
    }
    match (&sol.status, &sol.certificate) {
        (LpStatus::Optimal, Certificate::Optimal { eq_duals, ge_duals }) => {
            if eq_duals.len() != prob.eq.len() || ge_duals.len() != prob.ge.len() {
                return false;
            }
            let Some(value) = &sol.objective else { return false };
            if !feasible(prob, &sol.primal, tol) {
                return false;
            }
            let primal_value = prob.objective_value(&sol.primal);
            if !(primal_value.clone() - value.clone()).is_zero_tol(tol) {
                return false;
            }
            if ge_duals.iter().any(|z| z.is_pos_tol(tol)) {
                return false;
            }
            let reduced = transpose_apply(prob, eq_duals, ge_duals);
            if reduced.iter().zip(&prob.objective).any(|(a, c)| (c.clone() - a.clone()).is_pos_tol(tol)) {
                return false;
            }
            (rhs_value(prob, eq_duals, ge_duals) - primal_value).is_zero_tol(tol)
        }
        (LpStatus::Unbounded, Certificate::Unbounded { ray }) => {
            if ray.len() != prob.n_vars() || !feasible(prob, &sol.primal, tol) {
                return false;
            }
            ray.iter().all(|v| !v.is_neg_tol(tol))
                && prob.eq.iter().all(|r| dot(&r.coeffs, ray).is_zero_tol(tol))
                && prob.ge.iter().all(|r| !dot(&r.coeffs, ray).is_neg_tol(tol))
                && prob.objective_value(ray).is_pos_tol(tol)
        }
        (LpStatus::Infeasible, Certificate::Infeasible { eq_farkas, ge_farkas }) => {
            if eq_farkas.len() != prob.eq.len() || ge_farkas.len() != prob.ge.len() {
                return false;
            }
            ge_farkas.iter().all(|z| !z.is_pos_tol(tol))
                && transpose_apply(prob, eq_farkas, ge_farkas).iter().all(|v| !v.is_neg_tol(tol))
                && rhs_value(prob, eq_farkas, ge_farkas).is_neg_tol(tol)
        }
        _ => false,
    }
}
