//! Random small models for property tests and the browser demo.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Constraint, FiniteMdp, Pair};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug)]
pub struct RandomModelSpec {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_constraints: usize,
    /// Make the last state an absorbing zero-valued sink and route some
    /// probability into it from most rows.
    pub sink: bool,
    /// Probability that a reward/constraint entry is exactly zero.
    pub zero_prob: f64,
    /// Valued states only move forward in index order; the remaining
    /// "silent" states carry zero values and move among themselves and into
    /// the sink. Such models always satisfy the assumption checks while still
    /// having infinite-mass cycles. Requires `sink`.
    pub layered: bool,
}

impl Default for RandomModelSpec {
    fn default() -> Self {
        Self { max_states: 6, max_actions: 3, max_constraints: 2, sink: true, zero_prob: 0.25, layered: false }
    }
}

fn small_value(rng: &mut impl Rng, zero_prob: f64) -> Rational {
    if rng.random_bool(zero_prob) {
        return Rational::from_integer(0.into());
    }
    let num: i64 = rng.random_range(-4..=4);
    let den: i64 = rng.random_range(1..=3);
    Rational::new(num.into(), den.into())
}

fn distribution(rng: &mut impl Rng, support: &[usize]) -> Vec<(usize, Rational)> {
    let weights: Vec<i64> = support.iter().map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    support.iter().zip(weights).map(|(&y, w)| (y, Rational::new(w.into(), total.into()))).collect()
}

pub fn random_model<S: Scalar>(rng: &mut impl Rng, spec: &RandomModelSpec) -> FiniteMdp<S> {
    let n = rng.random_range(2..=spec.max_states.max(2));
    let n_actions = spec.max_actions.max(1);
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let actions: Vec<String> = (0..n_actions).map(|i| format!("a{i}")).collect();
    let sink = spec.sink.then_some(n - 1);

    let mut admissible = Vec::with_capacity(n);
    for x in 0..n {
        if Some(x) == sink {
            admissible.push(vec![0]);
            continue;
        }
        let k = rng.random_range(1..=n_actions);
        let mut acts: Vec<usize> = (0..n_actions).collect();
        acts.shuffle(rng);
        acts.truncate(k);
        acts.sort_unstable();
        admissible.push(acts);
    }

    let silent_state: Vec<bool> = (0..n).map(|x| Some(x) != sink && spec.layered && rng.random_bool(0.3)).collect();
    let n_constraints = rng.random_range(0..=spec.max_constraints);
    let mut transition = BTreeMap::new();
    let mut reward = BTreeMap::new();
    let mut cvals: Vec<BTreeMap<Pair, Rational>> = vec![BTreeMap::new(); n_constraints];
    for (x, acts) in admissible.iter().enumerate() {
        for &a in acts {
            let p = Pair::new(x, a);
            if Some(x) == sink {
                transition.insert(p, vec![(x, Rational::from_integer(1.into()))]);
                reward.insert(p, Rational::from_integer(0.into()));
                for c in cvals.iter_mut() {
                    c.insert(p, Rational::from_integer(0.into()));
                }
                continue;
            }
            if let (true, Some(s)) = (spec.layered, sink) {
                let pool: Vec<usize> = if silent_state[x] {
                    (0..n).filter(|&y| silent_state[y] || y == s).collect()
                } else {
                    (x + 1..n).collect()
                };
                let mut targets = pool;
                targets.shuffle(rng);
                targets.truncate(rng.random_range(1..=3.min(targets.len())));
                if !silent_state[x] && !targets.contains(&s) && rng.random_bool(0.5) {
                    targets.push(s);
                }
                targets.sort_unstable();
                transition.insert(p, distribution(rng, &targets));
                let zero_prob = if silent_state[x] { 1.0 } else { spec.zero_prob };
                reward.insert(p, small_value(rng, zero_prob));
                for c in cvals.iter_mut() {
                    c.insert(p, small_value(rng, zero_prob));
                }
                continue;
            }
            let mut targets: Vec<usize> = (0..n).collect();
            targets.shuffle(rng);
            targets.truncate(rng.random_range(1..=3.min(n)));
            // Zero-valued pairs may stay away from the sink and form cycles
            // that carry infinite mass; valued pairs usually leak into it.
            let silent = rng.random_bool(0.15);
            if let Some(s) = sink {
                if !silent && !targets.contains(&s) && rng.random_bool(0.9) {
                    targets.push(s);
                }
            }
            targets.sort_unstable();
            transition.insert(p, distribution(rng, &targets));
            let zero_prob = if silent { 1.0 } else { spec.zero_prob };
            reward.insert(p, small_value(rng, zero_prob));
            for c in cvals.iter_mut() {
                c.insert(p, small_value(rng, zero_prob));
            }
        }
    }

    let mut init_support: Vec<usize> = (0..n).filter(|&x| Some(x) != sink).collect();
    init_support.shuffle(rng);
    init_support.truncate(rng.random_range(1..=2.min(init_support.len())));
    init_support.sort_unstable();
    let mut initial = vec![Rational::from_integer(0.into()); n];
    for (y, v) in distribution(rng, &init_support) {
        initial[y] = v;
    }

    let constraints = cvals
        .into_iter()
        .enumerate()
        .map(|(i, values)| Constraint { name: format!("c{}", i + 1), values, limit: small_value(rng, 0.2) })
        .collect();

    let m = FiniteMdp {
        fallback: admissible.iter().map(|a| a[0]).collect(),
        states,
        actions,
        admissible,
        transition,
        reward,
        constraints,
        initial,
        reference_kernel: None,
    };
    m.convert()
}

/// Random stationary policy with small-denominator rational probabilities.
pub fn random_policy<S: Scalar>(rng: &mut impl Rng, m: &FiniteMdp<S>) -> crate::model::StationaryPolicy<S> {
    let rows = m
        .admissible
        .iter()
        .map(|acts| {
            let idx: Vec<usize> = (0..acts.len()).collect();
            let mut dist = vec![S::zero(); acts.len()];
            // sometimes deterministic, sometimes mixed
            if rng.random_bool(0.4) {
                dist[rng.random_range(0..acts.len())] = S::one();
            } else {
                for (k, v) in distribution(rng, &idx) {
                    dist[k] = S::from_rational(&v);
                }
            }
            dist
        })
        .collect();
    crate::model::StationaryPolicy { rows }
}

/// Relabels states by a seeded random permutation. Returns the new model
/// and `perm` with `perm[old] = new`.
pub fn permute_states<S: Scalar>(m: &FiniteMdp<S>, seed: u64) -> (FiniteMdp<S>, Vec<usize>) {
    let n = m.n_states();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut inv = vec![0; n];
    for (old, &new) in perm.iter().enumerate() {
        inv[new] = old;
    }
    let mp = |p: &Pair| Pair::new(perm[p.state], p.action);
    let remap = |v: &BTreeMap<Pair, S>| v.iter().map(|(p, x)| (mp(p), x.clone())).collect();
    let out = FiniteMdp {
        states: inv.iter().map(|&o| m.states[o].clone()).collect(),
        actions: m.actions.clone(),
        admissible: inv.iter().map(|&o| m.admissible[o].clone()).collect(),
        transition: m
            .transition
            .iter()
            .map(|(p, row)| (mp(p), row.iter().map(|(y, q)| (perm[*y], q.clone())).collect()))
            .collect(),
        reward: remap(&m.reward),
        constraints: m
            .constraints
            .iter()
            .map(|c| Constraint { name: c.name.clone(), values: remap(&c.values), limit: c.limit.clone() })
            .collect(),
        initial: inv.iter().map(|&o| m.initial[o].clone()).collect(),
        fallback: inv.iter().map(|&o| m.fallback[o]).collect(),
        reference_kernel: m.reference_kernel.as_ref().map(|k| crate::reference::ReferenceKernel {
            rows: inv.iter().map(|&o| inv.iter().map(|&o2| k.rows[o][o2].clone()).collect()).collect(),
        }),
    };
    (out, perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    #[test]
    fn random_models_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m: FiniteMdp<Rational> = random_model(&mut rng, &RandomModelSpec::default());
            assert!(validate_model(&m).is_valid(), "{:?}", validate_model(&m).violations);
            let pol = random_policy(&mut rng, &m);
            assert!(pol.check(&m).is_empty());
            let (pm, _) = permute_states(&m, 3);
            assert!(validate_model(&pm).is_valid());
        }
    }
}
