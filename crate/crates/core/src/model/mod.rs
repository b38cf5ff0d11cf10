//! Finite constrained MDPs, policies and occupation measures.

mod ext;
pub mod format;
pub mod generators;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

pub use ext::{ext_combine, ExtReal};
pub use format::{load_model, load_model_str, parse_policy, serialize_model};
pub use generators::{build_example_model, build_phantom_demo, ExampleOptions, CEMETERY};

use crate::reference::ReferenceKernel;
use crate::scalar::{sum, Scalar};

/// Tolerance used by float-mode model validation (row sums, signs).
pub const MODEL_TOL: f64 = 1e-9;

/// An admissible state-action pair, by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Pair {
    pub state: usize,
    pub action: usize,
}

impl Pair {
    pub fn new(state: usize, action: usize) -> Self {
        Self { state, action }
    }
}

/// Values of a function on admissible pairs (reward or a constraint function).
pub type PairValues<S> = BTreeMap<Pair, S>;

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<S> {
    pub name: String,
    pub values: PairValues<S>,
    pub limit: S,
}

/// A finite constrained MDP with the expected-total-reward criterion.
///
/// Fields are public so that tests and generators can build models directly;
/// every algorithm assumes [`validate_model`] returned no violations.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMdp<S> {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    /// Admissible action indices per state, in declaration order.
    pub admissible: Vec<Vec<usize>>,
    /// Sparse transition rows `(target, probability)` per admissible pair.
    pub transition: BTreeMap<Pair, Vec<(usize, S)>>,
    pub reward: PairValues<S>,
    pub constraints: Vec<Constraint<S>>,
    pub initial: Vec<S>,
    /// Deterministic selector used wherever a policy is otherwise undefined.
    pub fallback: Vec<usize>,
    /// Optional user-supplied dominating kernel carried by the model file.
    pub reference_kernel: Option<ReferenceKernel<S>>,
}

impl<S: Scalar> FiniteMdp<S> {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Admissible pairs, state-major, actions in declaration order.
    pub fn pairs(&self) -> Vec<Pair> {
        self.admissible
            .iter()
            .enumerate()
            .flat_map(|(x, acts)| acts.iter().map(move |&a| Pair::new(x, a)))
            .collect()
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s == id)
    }

    pub fn action_index(&self, id: &str) -> Option<usize> {
        self.actions.iter().position(|s| s == id)
    }

    pub fn pair_label(&self, p: Pair) -> String {
        format!("({},{})", self.states[p.state], self.actions[p.action])
    }

    pub fn row(&self, p: Pair) -> &[(usize, S)] {
        self.transition.get(&p).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Successor states of a pair with strictly positive probability.
    pub fn successors(&self, p: Pair) -> impl Iterator<Item = usize> + '_ {
        self.row(p).iter().filter(|(_, q)| q.is_pos_tol(0.0)).map(|(y, _)| *y)
    }

    pub fn q(&self, p: Pair, y: usize) -> S {
        self.row(p).iter().filter(|(t, _)| *t == y).map(|(_, q)| q.clone()).fold(S::zero(), |a, b| a + b)
    }

    pub fn reward_of(&self, p: Pair) -> S {
        self.reward.get(&p).cloned().unwrap_or_else(S::zero)
    }

    /// The reward function followed by each constraint function.
    pub fn criteria(&self) -> Vec<&PairValues<S>> {
        std::iter::once(&self.reward).chain(self.constraints.iter().map(|c| &c.values)).collect()
    }

    pub fn initial_support(&self) -> BTreeSet<usize> {
        self.initial.iter().enumerate().filter(|(_, v)| v.is_pos_tol(0.0)).map(|(i, _)| i).collect()
    }

    /// Same model in another arithmetic.
    pub fn convert<T: Scalar>(&self) -> FiniteMdp<T> {
        let c = |v: &S| T::from_rational(&v.to_rational());
        let cmap = |m: &PairValues<S>| m.iter().map(|(k, v)| (*k, c(v))).collect();
        FiniteMdp {
            states: self.states.clone(),
            actions: self.actions.clone(),
            admissible: self.admissible.clone(),
            transition: self
                .transition
                .iter()
                .map(|(k, row)| (*k, row.iter().map(|(y, q)| (*y, c(q))).collect()))
                .collect(),
            reward: cmap(&self.reward),
            constraints: self
                .constraints
                .iter()
                .map(|k| Constraint { name: k.name.clone(), values: cmap(&k.values), limit: c(&k.limit) })
                .collect(),
            initial: self.initial.iter().map(c).collect(),
            fallback: self.fallback.clone(),
            reference_kernel: self.reference_kernel.as_ref().map(|k| k.convert()),
        }
    }

    /// Replaces every constraint limit (single-constraint convenience).
    pub fn with_limits(mut self, limits: &[S]) -> Self {
        for (c, l) in self.constraints.iter_mut().zip(limits) {
            c.limit = l.clone();
        }
        self
    }
}

/// A stationary randomized policy. `rows[x][k]` is the probability of the
/// `k`-th admissible action at state `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryPolicy<S> {
    pub rows: Vec<Vec<S>>,
}

impl<S: Scalar> StationaryPolicy<S> {
    /// Deterministic policy from one chosen admissible action per state.
    pub fn deterministic(m: &FiniteMdp<S>, choice: &[usize]) -> Self {
        let rows = m
            .admissible
            .iter()
            .zip(choice)
            .map(|(acts, &a)| acts.iter().map(|&b| if a == b { S::one() } else { S::zero() }).collect())
            .collect();
        Self { rows }
    }

    pub fn prob(&self, m: &FiniteMdp<S>, p: Pair) -> S {
        m.admissible[p.state]
            .iter()
            .position(|&a| a == p.action)
            .map(|k| self.rows[p.state][k].clone())
            .unwrap_or_else(S::zero)
    }

    /// Problems with the policy relative to `m`; empty when valid.
    pub fn check(&self, m: &FiniteMdp<S>) -> Vec<String> {
        let mut out = Vec::new();
        if self.rows.len() != m.n_states() {
            out.push(format!("policy has {} rows, model has {} states", self.rows.len(), m.n_states()));
            return out;
        }
        for (x, row) in self.rows.iter().enumerate() {
            if row.len() != m.admissible[x].len() {
                out.push(format!("policy row for state `{}` has wrong length", m.states[x]));
                continue;
            }
            if row.iter().any(|v| v.is_neg_tol(MODEL_TOL)) {
                out.push(format!("policy row for state `{}` has a negative entry", m.states[x]));
            }
            let s = sum(row.iter().cloned());
            if !(s.clone() - S::one()).is_zero_tol(MODEL_TOL) {
                out.push(format!("policy row for state `{}` sums to {}", m.states[x], s.render()));
            }
        }
        out
    }

    /// Policy-averaged transition matrix `Q^phi` (dense).
    pub fn chain(&self, m: &FiniteMdp<S>) -> Vec<Vec<S>> {
        let n = m.n_states();
        let mut out = vec![vec![S::zero(); n]; n];
        for (x, acts) in m.admissible.iter().enumerate() {
            for (k, &a) in acts.iter().enumerate() {
                let w = &self.rows[x][k];
                if w.is_zero() {
                    continue;
                }
                for (y, q) in m.row(Pair::new(x, a)) {
                    out[x][*y] = out[x][*y].clone() + w.clone() * q.clone();
                }
            }
        }
        out
    }
}

/// Expected visit counts per pair; entries may be `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationMeasure<S> {
    pub mass: BTreeMap<Pair, ExtReal<S>>,
}

impl<S: Scalar> OccupationMeasure<S> {
    pub fn get(&self, p: Pair) -> ExtReal<S> {
        self.mass.get(&p).cloned().unwrap_or_else(ExtReal::zero)
    }

    /// `mu(h) = mu(h+) - mu(h-)` with `0 * inf = 0`.
    pub fn evaluate(&self, h: &PairValues<S>) -> ExtReal<S> {
        integrate(self.mass.iter().map(|(p, v)| (v.clone(), h.get(p).cloned().unwrap_or_else(S::zero))))
    }

    /// State marginal.
    pub fn marginal(&self, n_states: usize) -> Vec<ExtReal<S>> {
        let mut out = vec![ExtReal::zero(); n_states];
        for (p, v) in &self.mass {
            out[p.state] = out[p.state].add(v);
        }
        out
    }
}

/// Integral of `h` against extended masses, split into positive and negative
/// parts and recombined with [`ext_combine`].
pub fn integrate<S: Scalar>(terms: impl IntoIterator<Item = (ExtReal<S>, S)>) -> ExtReal<S> {
    let mut pos = ExtReal::zero();
    let mut neg = ExtReal::zero();
    for (mass, h) in terms {
        pos = pos.add(&mass.scale(&h.pos_part()));
        neg = neg.add(&mass.scale(&h.neg_part()));
    }
    ext_combine(&pos, &neg)
}

/// One violated model invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

const CONTINUITY_NOTE: &str = "finite state and action spaces: continuity-compactness conditions (W) and (S) hold trivially";

/// Checks every structural invariant of a [`FiniteMdp`]. Problems are
/// collected rather than reported one at a time.
pub fn validate_model<S: Scalar>(m: &FiniteMdp<S>) -> ValidationReport {
    let mut v = Vec::new();
    let n = m.n_states();
    let label = |p: &Pair| {
        format!(
            "({},{})",
            m.states.get(p.state).map(String::as_str).unwrap_or("?"),
            m.actions.get(p.action).map(String::as_str).unwrap_or("?")
        )
    };

    if n == 0 {
        v.push(Violation::new("states", "no states declared"));
    }
    let distinct: BTreeSet<&String> = m.states.iter().collect();
    if distinct.len() != n {
        v.push(Violation::new("states", "duplicate state ids"));
    }
    let distinct: BTreeSet<&String> = m.actions.iter().collect();
    if distinct.len() != m.actions.len() {
        v.push(Violation::new("actions", "duplicate action ids"));
    }
    if m.admissible.len() != n {
        v.push(Violation::new("admissible", format!("{} rows for {} states", m.admissible.len(), n)));
        return ValidationReport { violations: v, notes: vec![CONTINUITY_NOTE.into()] };
    }

    let mut admissible = BTreeSet::new();
    for (x, acts) in m.admissible.iter().enumerate() {
        if acts.is_empty() {
            v.push(Violation::new(format!("admissible[{}]", m.states[x]), "no admissible action"));
        }
        let set: BTreeSet<_> = acts.iter().collect();
        if set.len() != acts.len() {
            v.push(Violation::new(format!("admissible[{}]", m.states[x]), "duplicate action"));
        }
        for &a in acts {
            if a >= m.actions.len() {
                v.push(Violation::new(format!("admissible[{}]", m.states[x]), "unknown action index"));
            } else {
                admissible.insert(Pair::new(x, a));
            }
        }
    }

    for p in &admissible {
        match m.transition.get(p) {
            None => v.push(Violation::new(format!("transitions{}", label(p)), "missing transition row")),
            Some(row) => {
                if row.iter().any(|(y, _)| *y >= n) {
                    v.push(Violation::new(format!("transitions{}", label(p)), "target outside the state list"));
                }
                if row.iter().any(|(_, q)| q.is_neg_tol(MODEL_TOL)) {
                    v.push(Violation::new(format!("transitions{}", label(p)), "negative probability"));
                }
                let targets: BTreeSet<_> = row.iter().map(|(y, _)| y).collect();
                if targets.len() != row.len() {
                    v.push(Violation::new(format!("transitions{}", label(p)), "duplicate target"));
                }
                let s = sum(row.iter().map(|(_, q)| q.clone()));
                if !(s.clone() - S::one()).is_zero_tol(MODEL_TOL) {
                    v.push(Violation::new(
                        format!("transitions{}", label(p)),
                        format!("row sums to {}, expected 1", s.render()),
                    ));
                }
            }
        }
        if !m.reward.contains_key(p) {
            v.push(Violation::new(format!("reward{}", label(p)), "missing value"));
        }
        for c in &m.constraints {
            if !c.values.contains_key(p) {
                v.push(Violation::new(format!("constraints[{}]{}", c.name, label(p)), "missing value"));
            }
        }
    }
    for p in m.transition.keys().filter(|p| !admissible.contains(p)) {
        v.push(Violation::new(format!("transitions{}", label(p)), "defined on an inadmissible pair"));
    }
    for p in m.reward.keys().filter(|p| !admissible.contains(p)) {
        v.push(Violation::new(format!("reward{}", label(p)), "defined on an inadmissible pair"));
    }
    for c in &m.constraints {
        for p in c.values.keys().filter(|p| !admissible.contains(p)) {
            v.push(Violation::new(format!("constraints[{}]{}", c.name, label(p)), "defined on an inadmissible pair"));
        }
    }

    if m.initial.len() != n {
        v.push(Violation::new("initial", format!("{} entries for {} states", m.initial.len(), n)));
    } else {
        if m.initial.iter().any(|q| q.is_neg_tol(MODEL_TOL)) {
            v.push(Violation::new("initial", "negative probability"));
        }
        let s = sum(m.initial.iter().cloned());
        if !(s.clone() - S::one()).is_zero_tol(MODEL_TOL) {
            v.push(Violation::new("initial", format!("sums to {}, expected 1", s.render())));
        }
    }

    if m.fallback.len() != n {
        v.push(Violation::new("fallback", format!("{} entries for {} states", m.fallback.len(), n)));
    } else {
        for (x, &a) in m.fallback.iter().enumerate() {
            if !m.admissible[x].contains(&a) {
                let name = m.actions.get(a).map(String::as_str).unwrap_or("?");
                v.push(Violation::new(
                    format!("fallback[{}]", m.states[x]),
                    format!("action `{name}` is not admissible"),
                ));
            }
        }
    }

    if let Some(k) = &m.reference_kernel {
        if k.rows.len() != n || k.rows.iter().any(|r| r.len() != n) {
            v.push(Violation::new("reference_kernel", "shape does not match the state list"));
        }
    }

    ValidationReport { violations: v, notes: vec![CONTINUITY_NOTE.into()] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn absorbing() -> FiniteMdp<Rational> {
        let p = Pair::new(0, 0);
        FiniteMdp {
            states: vec!["s".into()],
            actions: vec!["a".into()],
            admissible: vec![vec![0]],
            transition: [(p, vec![(0, q(1, 1))])].into(),
            reward: [(p, q(0, 1))].into(),
            constraints: vec![],
            initial: vec![q(1, 1)],
            fallback: vec![0],
            reference_kernel: None,
        }
    }

    #[test]
    fn single_absorbing_state_is_valid() {
        let r = validate_model(&absorbing());
        assert!(r.is_valid(), "{:?}", r.violations);
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn inadmissible_fallback_is_one_violation() {
        let mut m = absorbing();
        m.actions.push("b".into());
        m.fallback = vec![1];
        let r = validate_model(&m);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].field.starts_with("fallback"));
    }

    #[test]
    fn missing_constraint_pair_is_one_violation() {
        let mut m = absorbing();
        m.constraints.push(Constraint { name: "c1".into(), values: BTreeMap::new(), limit: q(0, 1) });
        let r = validate_model(&m);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].field.contains("c1"));
    }

    #[test]
    fn short_row_names_the_pair() {
        let mut m = absorbing();
        m.transition.insert(Pair::new(0, 0), vec![(0, q(99, 100))]);
        let r = validate_model(&m);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].field, "transitions(s,a)");
        assert!(r.violations[0].message.contains("99/100"));
    }

    #[test]
    fn integrate_uses_zero_times_infinity() {
        let t = vec![(ExtReal::PosInf, q(0, 1)), (ExtReal::Finite(q(1, 2)), q(3, 1))];
        assert_eq!(integrate(t), ExtReal::Finite(q(3, 2)));
        let t = vec![(ExtReal::PosInf, q(1, 1)), (ExtReal::PosInf, q(-1, 1))];
        assert_eq!(integrate(t), ExtReal::NegInf);
    }
}
