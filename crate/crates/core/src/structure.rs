//! Infinite-mass structures.
//!
//! A pair `(I, C)` describes where a feasible measure may carry `+inf`: the
//! states `I` with infinite marginal and the pairs `C` carrying the infinite
//! part. Consistency with the characteristic equation requires
//!
//! * cover: every state of `I` has a pair in `C`;
//! * feed: every state of `I` is reached with positive probability from a
//!   pair in `C`;
//! * closure: every pair in `C` moves only into `I`;
//! * `I ⊆ supp p`.
//!
//! Valid structures are closed under union, so the greatest fixed point of
//! the pruning below is the unique maximal one.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::{FiniteMdp, Pair};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InfiniteStructure {
    pub states: BTreeSet<usize>,
    pub pairs: BTreeSet<Pair>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureJson {
    pub infinite_states: Vec<String>,
    pub infinite_pairs: Vec<String>,
}

impl InfiniteStructure {
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains_state(&self, x: usize) -> bool {
        self.states.contains(&x)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.states.is_subset(&other.states) && self.pairs.is_subset(&other.pairs)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            states: self.states.union(&other.states).copied().collect(),
            pairs: self.pairs.union(&other.pairs).copied().collect(),
        }
    }

    pub fn to_json<S: Scalar>(&self, m: &FiniteMdp<S>) -> StructureJson {
        StructureJson {
            infinite_states: self.states.iter().map(|&x| m.states[x].clone()).collect(),
            infinite_pairs: self.pairs.iter().map(|&p| m.pair_label(p)).collect(),
        }
    }

    /// Violated structure invariants relative to `allowed` (normally
    /// `supp p`); empty when valid.
    pub fn violations<S: Scalar>(&self, m: &FiniteMdp<S>, allowed: &BTreeSet<usize>) -> Vec<String> {
        let mut out = Vec::new();
        for &x in &self.states {
            if !allowed.contains(&x) {
                out.push(format!("state `{}` outside the allowed support", m.states[x]));
            }
            if !self.pairs.iter().any(|p| p.state == x) {
                out.push(format!("cover: state `{}` has no infinite pair", m.states[x]));
            }
            if !self.pairs.iter().any(|&p| m.successors(p).any(|y| y == x)) {
                out.push(format!("feed: state `{}` has no infinite predecessor", m.states[x]));
            }
        }
        for &p in &self.pairs {
            if !self.states.contains(&p.state) || !m.admissible[p.state].contains(&p.action) {
                out.push(format!("pair {} is not admissible at an infinite state", m.pair_label(p)));
            }
            if let Some(y) = m.successors(p).find(|y| !self.states.contains(y)) {
                out.push(format!("closure: pair {} reaches finite state `{}`", m.pair_label(p), m.states[y]));
            }
        }
        out
    }
}

/// Greatest fixed point of cover/feed/closure pruning over the pairs
/// accepted by `keep`.
pub fn prune_structure<S: Scalar>(
    m: &FiniteMdp<S>,
    allowed: &BTreeSet<usize>,
    keep: impl Fn(Pair) -> bool,
) -> InfiniteStructure {
    let mut states = allowed.clone();
    let mut pairs: BTreeSet<Pair> = m.pairs().into_iter().filter(|p| states.contains(&p.state) && keep(*p)).collect();
    loop {
        let before = (states.len(), pairs.len());
        pairs.retain(|&p| states.contains(&p.state) && m.successors(p).all(|y| states.contains(&y)));
        let fed: BTreeSet<usize> = pairs.iter().flat_map(|&p| m.successors(p)).collect();
        let covered: BTreeSet<usize> = pairs.iter().map(|p| p.state).collect();
        states.retain(|x| fed.contains(x) && covered.contains(x));
        if (states.len(), pairs.len()) == before {
            break;
        }
    }
    InfiniteStructure { states, pairs }
}

/// The maximal structure inside `supp_p`, ignoring reward and constraint
/// values.
pub fn max_sustainable_structure<S: Scalar>(m: &FiniteMdp<S>, supp_p: &BTreeSet<usize>) -> InfiniteStructure {
    prune_structure(m, supp_p, |_| true)
}

/// The maximal structure whose pairs have zero reward and zero value under
/// every constraint function. This is the structure of the main program.
pub fn zero_value_structure<S: Scalar>(m: &FiniteMdp<S>, supp_p: &BTreeSet<usize>) -> InfiniteStructure {
    prune_structure(m, supp_p, |p| m.criteria().iter().all(|h| h.get(&p).is_none_or(|v| v.is_zero())))
}
