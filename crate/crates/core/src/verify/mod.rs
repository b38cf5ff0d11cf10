//! Ground-truth policy evaluation: exact occupation measures of stationary
//! policies, the total-reward values they induce, the dominance check for
//! induced policies, and Monte Carlo simulation.

mod simulate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde_json::{json, Value};

use crate::kp::{eta_evaluate, extract_policy, FeasibleVariable};
use crate::linalg::solve;
use crate::model::{ExtReal, FiniteMdp, OccupationMeasure, Pair, StationaryPolicy};
use crate::scalar::Scalar;

pub use simulate::{
    simulate_policy, tail_bound, CriterionEstimate, FnPolicy, PolicyProgram, SimulationEstimate, SimulationOptions,
    StationaryProgram,
};

/// States reachable from `from` along positive entries of `chain`.
pub(crate) fn reachable<S: Scalar>(chain: &[Vec<S>], from: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    for x in from {
        if seen.insert(x) {
            queue.push_back(x);
        }
    }
    while let Some(x) = queue.pop_front() {
        for (y, q) in chain[x].iter().enumerate() {
            if !q.is_zero() && seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    seen
}

/// Recurrent states of a finite chain: `x` is recurrent iff every state
/// reachable from `x` reaches `x` back.
pub fn recurrent_states<S: Scalar>(chain: &[Vec<S>]) -> BTreeSet<usize> {
    let n = chain.len();
    let reach: Vec<BTreeSet<usize>> = (0..n).map(|x| reachable(chain, [x])).collect();
    (0..n).filter(|&x| reach[x].iter().all(|&y| reach[y].contains(&x))).collect()
}

/// Exact expected visit counts of a stationary policy.
///
/// Recurrent states reachable from the initial distribution are visited
/// infinitely often; transient states solve `beta = nu + beta Q` on the
/// transient block. Unreachable recurrent states get zero.
pub fn occupation_of_policy<S: Scalar>(m: &FiniteMdp<S>, phi: &StationaryPolicy<S>) -> OccupationMeasure<S> {
    let n = m.n_states();
    let chain = phi.chain(m);
    let recurrent = recurrent_states(&chain);
    let reached = reachable(&chain, m.initial_support());
    let transient: Vec<usize> = (0..n).filter(|x| !recurrent.contains(x)).collect();

    let mut visits = vec![ExtReal::zero(); n];
    for &x in &recurrent {
        if reached.contains(&x) {
            visits[x] = ExtReal::PosInf;
        }
    }
    if !transient.is_empty() {
        // (I - Q_TT)^T beta_T = nu_T
        let k = transient.len();
        let a: Vec<Vec<S>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let id = if i == j { S::one() } else { S::zero() };
                        id - chain[transient[j]][transient[i]].clone()
                    })
                    .collect()
            })
            .collect();
        let b: Vec<S> = transient.iter().map(|&x| m.initial[x].clone()).collect();
        let beta = solve(a, b).expect("transient block of a finite chain is invertible");
        for (&x, v) in transient.iter().zip(beta) {
            visits[x] = ExtReal::Finite(v);
        }
    }

    let mut mass = BTreeMap::new();
    for p in m.pairs() {
        let w = phi.prob(m, p);
        mass.insert(p, visits[p.state].scale(&w));
    }
    OccupationMeasure { mass }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationResult<S> {
    pub occupation: OccupationMeasure<S>,
    pub reward_value: ExtReal<S>,
    pub constraint_values: Vec<ExtReal<S>>,
    /// States with infinite expected visits.
    pub divergent_states: BTreeSet<usize>,
}

impl<S: Scalar> EvaluationResult<S> {
    pub fn to_json(&self, m: &FiniteMdp<S>) -> Value {
        let occupation: serde_json::Map<String, Value> = self
            .occupation
            .mass
            .iter()
            .filter(|(_, v)| **v != ExtReal::zero())
            .map(|(p, v)| (m.pair_label(*p), Value::String(v.render())))
            .collect();
        json!({
            "mode": S::MODE,
            "reward_value": self.reward_value,
            "constraint_values": m.constraints.iter().zip(&self.constraint_values)
                .map(|(c, v)| json!({"name": c.name, "value": v, "limit": c.limit.render(), "satisfied": v.ge_tol(&ExtReal::Finite(c.limit.clone()), 0.0)}))
                .collect::<Vec<_>>(),
            "divergent_states": self.divergent_states.iter().map(|&x| m.states[x].clone()).collect::<Vec<_>>(),
            "occupation": occupation,
        })
    }
}

/// Total-reward values `J(r, phi)` and `J(c_i, phi)` from the exact
/// occupation measure.
pub fn evaluate_policy<S: Scalar>(m: &FiniteMdp<S>, phi: &StationaryPolicy<S>) -> EvaluationResult<S> {
    let occupation = occupation_of_policy(m, phi);
    let divergent_states = occupation
        .marginal(m.n_states())
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == ExtReal::PosInf)
        .map(|(x, _)| x)
        .collect();
    EvaluationResult {
        reward_value: occupation.evaluate(&m.reward),
        constraint_values: m.constraints.iter().map(|c| occupation.evaluate(&c.values)).collect(),
        occupation,
        divergent_states,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominanceEntry<S> {
    pub criterion: String,
    pub policy_value: ExtReal<S>,
    pub eta_value: ExtReal<S>,
    /// `policy_value - eta_value`.
    pub margin: ExtReal<S>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominanceReport<S> {
    pub pass: bool,
    pub entries: Vec<DominanceEntry<S>>,
}

impl<S: Scalar> DominanceReport<S> {
    pub fn to_json(&self, _m: &FiniteMdp<S>) -> Value {
        json!({
            "pass": self.pass,
            "entries": self.entries.iter().map(|e| json!({
                "criterion": e.criterion,
                "policy_value": e.policy_value,
                "eta_value": e.eta_value,
                "margin": e.margin,
                "pass": e.pass,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Checks that the policy induced by `v` earns at least `eta(h)` for the
/// reward and every constraint function.
pub fn check_dominance<S: Scalar>(m: &FiniteMdp<S>, v: &FeasibleVariable<S>, tol: f64) -> DominanceReport<S> {
    let eval = evaluate_policy(m, &extract_policy(m, v));
    let names = std::iter::once("reward".to_string()).chain(m.constraints.iter().map(|c| c.name.clone()));
    let values = std::iter::once(&eval.reward_value).chain(&eval.constraint_values);
    let entries: Vec<DominanceEntry<S>> = names
        .zip(values)
        .zip(m.criteria())
        .map(|((criterion, policy_value), h)| {
            let eta_value = eta_evaluate(v, h);
            DominanceEntry {
                criterion,
                pass: policy_value.ge_tol(&eta_value, tol),
                margin: policy_value.margin_over(&eta_value),
                policy_value: policy_value.clone(),
                eta_value,
            }
        })
        .collect();
    DominanceReport { pass: entries.iter().all(|e| e.pass), entries }
}

/// Pairs carrying infinite mass under `phi`.
pub fn infinite_pairs<S: Scalar>(occ: &OccupationMeasure<S>) -> Vec<Pair> {
    occ.mass.iter().filter(|(_, v)| **v == ExtReal::PosInf).map(|(p, _)| *p).collect()
}
