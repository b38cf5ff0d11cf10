//! Dominating reference kernel `P` and the base probability measure
//! `p = sum_k 2^-(k+1) nu P^k`.
//!
//! Every occupation marginal is absolutely continuous with respect to `p`,
//! so the support of `p` bounds where any feasible measure may put mass.

use std::collections::BTreeSet;

use serde_json::{Map, Value};

use crate::error::ReferenceError;
use crate::linalg;
use crate::model::{FiniteMdp, Pair, MODEL_TOL};
use crate::scalar::{half_pow, sum, Scalar};

/// A Markov kernel on the state space, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceKernel<S> {
    pub rows: Vec<Vec<S>>,
}

impl<S: Scalar> ReferenceKernel<S> {
    pub fn convert<T: Scalar>(&self) -> ReferenceKernel<T> {
        ReferenceKernel {
            rows: self.rows.iter().map(|r| r.iter().map(|v| T::from_rational(&v.to_rational())).collect()).collect(),
        }
    }
}

/// How mixture weights over the admissible actions are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightRule {
    /// `|A(x)|^-1` on every admissible action.
    #[default]
    Uniform,
    /// `2^-k` on the `k`-th admissible action, renormalized over the list.
    Dyadic,
}

/// Where the reference kernel comes from.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum KernelSource<S> {
    /// The model file's `reference_kernel` if present, otherwise uniform.
    #[default]
    Auto,
    Construct(WeightRule),
    Supplied(ReferenceKernel<S>),
}

/// Mixes `Q(.|x,a)` over the admissible actions with strictly positive
/// weights, which dominates each `Q(.|x,a)`.
pub fn construct_reference_kernel<S: Scalar>(m: &FiniteMdp<S>, rule: WeightRule) -> ReferenceKernel<S> {
    let n = m.n_states();
    let mut rows = vec![vec![S::zero(); n]; n];
    for (x, acts) in m.admissible.iter().enumerate() {
        let weights: Vec<S> = match rule {
            WeightRule::Uniform => vec![S::one() / S::from_i64(acts.len() as i64); acts.len()],
            WeightRule::Dyadic => {
                let raw: Vec<S> = (1..=acts.len()).map(|k| half_pow::<S>(k as u32)).collect();
                let total = sum(raw.iter().cloned());
                raw.into_iter().map(|w| w / total.clone()).collect()
            }
        };
        for (&a, w) in acts.iter().zip(weights) {
            for (y, q) in m.row(Pair::new(x, a)) {
                rows[x][*y] = rows[x][*y].clone() + w.clone() * q.clone();
            }
        }
    }
    ReferenceKernel { rows }
}

/// Checks that `k` is stochastic and dominates every transition row.
pub fn validate_reference_kernel<S: Scalar>(m: &FiniteMdp<S>, k: &ReferenceKernel<S>) -> Result<(), ReferenceError> {
    let n = m.n_states();
    if k.rows.len() != n || k.rows.iter().any(|r| r.len() != n) {
        return Err(ReferenceError::Shape { expected: n, got: k.rows.len() });
    }
    for (x, row) in k.rows.iter().enumerate() {
        let s = sum(row.iter().cloned());
        if !(s.clone() - S::one()).is_zero_tol(MODEL_TOL) || row.iter().any(|v| v.is_neg_tol(MODEL_TOL)) {
            return Err(ReferenceError::RowSum { state: m.states[x].clone(), sum: s.render() });
        }
    }
    for p in m.pairs() {
        for y in m.successors(p) {
            if !k.rows[p.state][y].is_pos_tol(0.0) {
                return Err(ReferenceError::NotDominating {
                    state: m.states[p.state].clone(),
                    action: m.actions[p.action].clone(),
                    to: m.states[y].clone(),
                });
            }
        }
    }
    Ok(())
}

/// Builds or validates the kernel selected by `source`.
pub fn resolve_kernel<S: Scalar>(m: &FiniteMdp<S>, source: &KernelSource<S>) -> Result<ReferenceKernel<S>, ReferenceError> {
    let k = match source {
        KernelSource::Auto => match &m.reference_kernel {
            Some(k) => k.clone(),
            None => construct_reference_kernel(m, WeightRule::Uniform),
        },
        KernelSource::Construct(rule) => construct_reference_kernel(m, *rule),
        KernelSource::Supplied(k) => k.clone(),
    };
    validate_reference_kernel(m, &k)?;
    Ok(k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseMeasure<S> {
    pub p: Vec<S>,
    /// States with `p > 0`, computed combinatorially (reachability from
    /// `supp nu` along positive entries of `P`), so float rounding never
    /// drops a state.
    pub support: BTreeSet<usize>,
}

impl<S: Scalar> BaseMeasure<S> {
    pub fn contains(&self, x: usize) -> bool {
        self.support.contains(&x)
    }

    /// JSON object `state -> value`.
    pub fn to_json(&self, m: &FiniteMdp<S>) -> Value {
        let mut out = Map::new();
        for (x, v) in self.p.iter().enumerate() {
            out.insert(m.states[x].clone(), Value::String(v.render()));
        }
        Value::Object(out)
    }
}

/// Solves `p (I - P/2) = nu/2`, the closed form of the geometric series.
pub fn compute_base_measure<S: Scalar>(m: &FiniteMdp<S>, k: &ReferenceKernel<S>) -> Result<BaseMeasure<S>, ReferenceError> {
    let n = m.n_states();
    let half = S::ratio(1, 2);
    // Transposed system: (I - P^T/2) p^T = nu^T/2.
    let a: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { S::one() } else { S::zero() };
                    id - half.clone() * k.rows[j][i].clone()
                })
                .collect()
        })
        .collect();
    let rhs: Vec<S> = m.initial.iter().map(|v| half.clone() * v.clone()).collect();
    let p = linalg::solve(a, rhs).ok_or(ReferenceError::Singular)?;

    let mut support = m.initial_support();
    let mut frontier: Vec<usize> = support.iter().copied().collect();
    while let Some(x) = frontier.pop() {
        for (y, v) in k.rows[x].iter().enumerate() {
            if v.is_pos_tol(0.0) && support.insert(y) {
                frontier.push(y);
            }
        }
    }
    Ok(BaseMeasure { p, support })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SupportReport {
    /// Human-readable violations; empty whenever `P` dominates `Q`.
    pub violations: Vec<String>,
    pub support: Vec<String>,
}

impl SupportReport {
    pub fn is_closed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `supp nu ⊆ supp p` and forward closure of `supp p` under every
/// admissible transition.
pub fn check_support_closure<S: Scalar>(m: &FiniteMdp<S>, b: &BaseMeasure<S>) -> SupportReport {
    let mut violations = Vec::new();
    for x in m.initial_support() {
        if !b.contains(x) {
            violations.push(format!("initial state `{}` outside supp p", m.states[x]));
        }
    }
    for p in m.pairs().into_iter().filter(|p| b.contains(p.state)) {
        for y in m.successors(p) {
            if !b.contains(y) {
                violations.push(format!("{} reaches `{}` outside supp p", m.pair_label(p), m.states[y]));
            }
        }
    }
    SupportReport { violations, support: b.support.iter().map(|&x| m.states[x].clone()).collect() }
}
