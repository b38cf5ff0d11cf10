//! Built-in models: the truncated two-action chain with one constraint, and a
//! three-state model whose characteristic equation has an unbounded family of
//! spurious solutions.

use std::collections::BTreeMap;

use super::{Constraint, FiniteMdp, Pair};
use crate::error::ModelError;
use crate::reference::ReferenceKernel;
use crate::scalar::{half_pow, Scalar};

/// Name of the absorbing cemetery state in the example chain.
pub const CEMETERY: &str = "D";

#[derive(Clone, Debug)]
pub struct ExampleOptions<S> {
    /// Truncation depth: states `1..=n` plus the cemetery.
    pub n: usize,
    pub theta: S,
    /// Also build the hand-made dominating kernel with mass 1/3 on
    /// `2`, `3` and the cemetery from state 1.
    pub handmade_kernel: bool,
    /// Prepend the unreachable left chain `-m..=0`.
    pub include_negative: Option<usize>,
}

impl<S: Scalar> ExampleOptions<S> {
    pub fn new(n: usize, theta: S) -> Self {
        Self { n, theta, handmade_kernel: false, include_negative: None }
    }
}

fn signed_half_pow<S: Scalar>(k: u32) -> S {
    let v = half_pow::<S>(k);
    if k % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Builds the two-action example chain.
///
/// State 1 chooses between `a` (move up by one or two with probability 1/2
/// each) and `b` (jump to the cemetery). Every other state has the single
/// action `a`. Upward moves that would leave `1..=n` land in the cemetery.
pub fn build_example_model<S: Scalar>(
    opts: &ExampleOptions<S>,
) -> Result<(FiniteMdp<S>, Option<ReferenceKernel<S>>), ModelError> {
    let n = opts.n;
    if n < 3 {
        return Err(ModelError::field("N", format!("truncation depth must be at least 3, got {n}")));
    }
    let neg = opts.include_negative.unwrap_or(0) as i64;
    let labels: Vec<i64> = if opts.include_negative.is_some() { (-neg..=0).chain(1..=n as i64).collect() } else { (1..=n as i64).collect() };
    let mut states: Vec<String> = labels.iter().map(|x| x.to_string()).collect();
    states.push(CEMETERY.to_string());
    let cemetery = states.len() - 1;
    let index_of = |x: i64| -> usize {
        if x > n as i64 {
            cemetery
        } else {
            (x - labels[0]) as usize
        }
    };
    let (a, b) = (0usize, 1usize);

    let mut admissible = vec![vec![a]; states.len()];
    admissible[index_of(1)] = vec![a, b];

    let half = S::ratio(1, 2);
    let mut transition = BTreeMap::new();
    let mut reward = BTreeMap::new();
    let mut cost = BTreeMap::new();
    let push = |row: &mut Vec<(usize, S)>, y: usize, q: S| match row.iter_mut().find(|(t, _)| *t == y) {
        Some((_, v)) => *v = v.clone() + q,
        None => row.push((y, q)),
    };

    for &x in &labels {
        let i = index_of(x);
        let pa = Pair::new(i, a);
        let mut row = Vec::new();
        if x <= 0 {
            push(&mut row, index_of(x + 1), S::one());
        } else {
            push(&mut row, index_of(x + 1), half.clone());
            push(&mut row, index_of(x + 2), half.clone());
        }
        transition.insert(pa, row);
        let k = x.unsigned_abs() as u32;
        if x == 1 {
            reward.insert(pa, half.clone());
            reward.insert(Pair::new(i, b), half.clone());
            cost.insert(pa, S::ratio(-1, 18));
            cost.insert(Pair::new(i, b), S::one());
            transition.insert(Pair::new(i, b), vec![(cemetery, S::one())]);
        } else {
            reward.insert(pa, half_pow::<S>(k));
            cost.insert(pa, signed_half_pow::<S>(k));
        }
    }
    let pd = Pair::new(cemetery, a);
    transition.insert(pd, vec![(cemetery, S::one())]);
    reward.insert(pd, S::zero());
    cost.insert(pd, S::zero());

    let mut initial = vec![S::zero(); states.len()];
    initial[index_of(1)] = half.clone();
    initial[cemetery] = half;

    let m = FiniteMdp {
        fallback: admissible.iter().map(|acts| acts[0]).collect(),
        states,
        actions: vec!["a".into(), "b".into()],
        admissible,
        transition,
        reward,
        constraints: vec![Constraint { name: "c1".into(), values: cost, limit: opts.theta.clone() }],
        initial,
        reference_kernel: None,
    };

    let kernel = opts.handmade_kernel.then(|| {
        let ns = m.n_states();
        let mut rows = vec![vec![S::zero(); ns]; ns];
        for (x, row) in rows.iter_mut().enumerate() {
            if x == index_of(1) {
                let third = S::ratio(1, 3);
                row[index_of(2)] = third.clone();
                row[index_of(3)] = third.clone();
                row[cemetery] = third;
            } else {
                for (y, q) in m.row(Pair::new(x, a)) {
                    row[*y] = q.clone();
                }
            }
        }
        ReferenceKernel { rows }
    });
    Ok((m, kernel))
}

/// Start state `s` is absorbing with zero reward and carries all initial
/// mass; the two-cycle `u <-> v` is unreachable and pays 1 at `u`.
pub fn build_phantom_demo<S: Scalar>() -> FiniteMdp<S> {
    let (s, u, v) = (0, 1, 2);
    let a = 0;
    let p = |x| Pair::new(x, a);
    FiniteMdp {
        states: vec!["s".into(), "u".into(), "v".into()],
        actions: vec!["a".into()],
        admissible: vec![vec![a]; 3],
        transition: [(p(s), vec![(s, S::one())]), (p(u), vec![(v, S::one())]), (p(v), vec![(u, S::one())])].into(),
        reward: [(p(s), S::zero()), (p(u), S::one()), (p(v), S::zero())].into(),
        constraints: vec![],
        initial: vec![S::one(), S::zero(), S::zero()],
        fallback: vec![a; 3],
        reference_kernel: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;
    use crate::scalar::{sum, Rational};
    use std::collections::BTreeSet;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn example(n: usize, handmade: bool) -> (FiniteMdp<Rational>, Option<ReferenceKernel<Rational>>) {
        let mut o = ExampleOptions::new(n, q(1, 4));
        o.handmade_kernel = handmade;
        build_example_model(&o).unwrap()
    }

    #[test]
    fn handmade_kernel_splits_state_one_in_thirds() {
        let (m, k) = example(60, true);
        let k = k.unwrap();
        let one = m.state_index("1").unwrap();
        for y in ["2", "3", CEMETERY] {
            assert_eq!(k.rows[one][m.state_index(y).unwrap()], q(1, 3));
        }
        assert!(validate_model(&m).is_valid());
    }

    #[test]
    fn state_one_rewards_and_actions() {
        let (m, _) = example(60, false);
        let one = m.state_index("1").unwrap();
        assert_eq!(m.admissible[one].len(), 2);
        assert!(m.admissible.iter().enumerate().all(|(x, a)| x == one || a.len() == 1));
        assert_eq!(m.reward_of(Pair::new(one, 0)), q(1, 2));
        assert_eq!(m.reward_of(Pair::new(one, 1)), q(1, 2));
        assert_eq!(m.constraints[0].values[&Pair::new(one, 0)], q(-1, 18));
        let two = m.state_index("2").unwrap();
        assert_eq!(m.constraints[0].values[&Pair::new(two, 0)], q(1, 4));
        let three = m.state_index("3").unwrap();
        assert_eq!(m.constraints[0].values[&Pair::new(three, 0)], q(-1, 8));
    }

    #[test]
    fn smallest_truncation_is_valid() {
        let (m, _) = example(3, false);
        assert_eq!(m.n_states(), 4);
        assert!(validate_model(&m).is_valid(), "{:?}", validate_model(&m).violations);
        assert!(build_example_model(&ExampleOptions::new(2, q(0, 1))).is_err());
    }

    #[test]
    fn redirected_mass_is_conserved() {
        // Probability that would leave 1..=N equals the extra inflow into D.
        for n in [3, 7, 20] {
            let (m, _) = example(n, false);
            let d = m.state_index(CEMETERY).unwrap();
            let leaving: Rational = sum((1..=n as i64).flat_map(|x| {
                let x2 = x;
                let i = m.state_index(&x.to_string()).unwrap();
                [1, 2].into_iter().filter(move |k| x2 + k > n as i64).map(move |_| (i, q(1, 2)))
            })
            .map(|(_, v)| v));
            let inflow: Rational = sum(
                m.transition
                    .iter()
                    .filter(|(p, _)| p.state != d && p.action == 0)
                    .flat_map(|(_, row)| row.iter().filter(|(y, _)| *y == d).map(|(_, v)| v.clone())),
            );
            assert_eq!(leaving, inflow);
        }
    }

    #[test]
    fn negative_states_are_optional_and_valid() {
        let mut o = ExampleOptions::new(5, q(1, 4));
        o.include_negative = Some(3);
        o.handmade_kernel = true;
        let (m, k) = build_example_model(&o).unwrap();
        assert_eq!(m.n_states(), 4 + 5 + 1);
        assert!(validate_model(&m).is_valid());
        assert!(k.is_some());
        let zero = m.state_index("0").unwrap();
        assert_eq!(m.row(Pair::new(zero, 0)), &[(m.state_index("1").unwrap(), q(1, 1))]);
    }

    #[test]
    fn phantom_cycle_unreachable_from_start() {
        let m = build_phantom_demo::<Rational>();
        assert!(validate_model(&m).is_valid());
        let mut seen: BTreeSet<usize> = m.initial_support();
        let mut frontier: Vec<usize> = seen.iter().copied().collect();
        while let Some(x) = frontier.pop() {
            for &a in &m.admissible[x] {
                for y in m.successors(Pair::new(x, a)) {
                    if seen.insert(y) {
                        frontier.push(y);
                    }
                }
            }
        }
        assert_eq!(seen, BTreeSet::from([0]));
    }
}
