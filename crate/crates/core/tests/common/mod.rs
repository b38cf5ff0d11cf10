//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cmdp_core::diagnostics::run_checks;
use cmdp_core::kp::{BalanceProgram, FeasibleVariable};
use cmdp_core::lp::{LpOptions, LpProblem};
use cmdp_core::model::{build_example_model, ExampleOptions, FiniteMdp, StationaryPolicy};
use cmdp_core::random::{random_model, RandomModelSpec};
use cmdp_core::reference::{KernelSource, ReferenceKernel};
use cmdp_core::{ExtReal, Rational, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn example<S: Scalar>(n: usize, theta: S, handmade: bool) -> (FiniteMdp<S>, Option<ReferenceKernel<S>>) {
    let mut o = ExampleOptions::new(n, theta);
    o.handmade_kernel = handmade;
    build_example_model(&o).unwrap()
}

pub fn supplied_kernel<S: Scalar>(k: Option<ReferenceKernel<S>>) -> KernelSource<S> {
    KernelSource::Supplied(k.expect("hand-made kernel requested"))
}

/// Policy that plays `a` with probability `wa` at state 1 and the only
/// action elsewhere.
pub fn example_policy(m: &FiniteMdp<Rational>, wa: Rational) -> StationaryPolicy<Rational> {
    let one = m.state_index("1").unwrap();
    let mut p = StationaryPolicy::deterministic(m, &vec![0; m.n_states()]);
    p.rows[one] = vec![wa.clone(), q(1, 1) - wa];
    p
}

/// Every deterministic stationary policy of `m`.
pub fn deterministic_policies<S: Scalar>(m: &FiniteMdp<S>) -> Vec<StationaryPolicy<S>> {
    let mut out = vec![Vec::new()];
    for acts in &m.admissible {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                acts.iter().map(move |&a| {
                    let mut c = prefix.clone();
                    c.push(a);
                    c
                })
            })
            .collect();
    }
    out.into_iter().map(|choice| StationaryPolicy::deterministic(m, &choice)).collect()
}

/// Expected total of `h` under `phi` by summing `nu Q^t h_phi` for
/// `t < steps` in floating point. Independent of the linear-solve
/// evaluator; only meaningful when the divergent part carries no value.
pub fn series_value(m: &FiniteMdp<Rational>, phi: &StationaryPolicy<Rational>, h_index: usize, steps: usize) -> f64 {
    let mf: FiniteMdp<f64> = m.convert();
    let pf = StationaryPolicy { rows: phi.rows.iter().map(|r| r.iter().map(|v| v.to_f64()).collect()).collect() };
    let chain = pf.chain(&mf);
    let h = mf.criteria()[h_index].clone();
    let per_state: Vec<f64> = (0..mf.n_states())
        .map(|x| {
            mf.admissible[x]
                .iter()
                .enumerate()
                .map(|(k, &a)| pf.rows[x][k] * h.get(&cmdp_core::Pair::new(x, a)).copied().unwrap_or(0.0))
                .sum()
        })
        .collect();
    let mut dist = mf.initial.clone();
    let mut total = 0.0;
    for _ in 0..steps {
        total += dist.iter().zip(&per_state).map(|(d, v)| d * v).sum::<f64>();
        let mut next = vec![0.0; dist.len()];
        for (x, d) in dist.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            for (y, p) in chain[x].iter().enumerate() {
                next[y] += d * p;
            }
        }
        dist = next;
    }
    total
}

/// Random models whose assumption checks pass, deterministic in `seed`.
pub fn checked_models(seed: u64, count: usize, spec: &RandomModelSpec) -> Vec<FiniteMdp<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let lp = LpOptions::default();
    let layered = RandomModelSpec { layered: spec.sink, ..spec.clone() };
    let mut attempt = 0usize;
    while out.len() < count {
        // Three in four models are layered so the suites see non-trivial
        // programs; the rest are unrestricted models that happen to pass.
        attempt += 1;
        let s = if attempt.is_multiple_of(4) { spec } else { &layered };
        let m: FiniteMdp<Rational> = random_model(&mut rng, s);
        let Ok(r) = run_checks(&m, &KernelSource::Auto, &lp) else { continue };
        if r.pass() {
            out.push(m);
        }
    }
    out
}

fn rank_rows(rows: &[Vec<Rational>]) -> Vec<usize> {
    // Indices of a maximal independent subset of rows, by elimination.
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut kept = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut v = r.clone();
        for (b, &pc) in basis.iter().zip(&pivots) {
            if v[pc] != q(0, 1) {
                let f = v[pc].clone() / b[pc].clone();
                for (x, y) in v.iter_mut().zip(b) {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
        }
        if let Some(pc) = v.iter().position(|x| *x != q(0, 1)) {
            basis.push(v);
            pivots.push(pc);
            kept.push(i);
        }
    }
    kept
}

fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).find(|&r| a[r][col] != q(0, 1))?;
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col && a[r][col] != q(0, 1) {
                let f = a[r][col].clone() / a[col][col].clone();
                for c in col..n {
                    let v = a[col][c].clone();
                    a[r][c] = a[r][c].clone() - f.clone() * v;
                }
                b[r] = b[r].clone() - f * b[col].clone();
            }
        }
    }
    Some((0..n).map(|i| b[i].clone() / a[i][i].clone()).collect())
}

/// Partial-pivoting solve; `None` when a pivot is tiny.
fn solve_float(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// All vertices of `{A x = b, G x >= h, x >= 0}` by basis enumeration over
/// structural and surplus columns. Returns the structural part of each
/// distinct vertex.
pub fn vertices(lp: &LpProblem<Rational>) -> Vec<Vec<Rational>> {
    let n = lp.n_vars();
    let n_ge = lp.ge.len();
    let cols = n + n_ge;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut rhs = Vec::new();
    for r in &lp.eq {
        let mut row = r.coeffs.clone();
        row.extend(std::iter::repeat_n(q(0, 1), n_ge));
        rows.push(row);
        rhs.push(r.rhs.clone());
    }
    for (i, r) in lp.ge.iter().enumerate() {
        let mut row = r.coeffs.clone();
        row.extend((0..n_ge).map(|j| if i == j { q(-1, 1) } else { q(0, 1) }));
        rows.push(row);
        rhs.push(r.rhs.clone());
    }
    let keep = rank_rows(&rows);
    let rows: Vec<Vec<Rational>> = keep.iter().map(|&i| rows[i].clone()).collect();
    let rhs: Vec<Rational> = keep.iter().map(|&i| rhs[i].clone()).collect();
    let k = rows.len();

    let rows_f: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v.to_f64()).collect()).collect();
    let rhs_f: Vec<f64> = rhs.iter().map(|v| v.to_f64()).collect();
    let mut found: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let mut subset: Vec<usize> = (0..k).collect();
    if k == 0 {
        found.insert(vec![q(0, 1); n]);
        return found.into_iter().collect();
    }
    if k > cols {
        return Vec::new();
    }
    loop {
        // Float screening; bases that look feasible or ill-conditioned are
        // re-solved exactly.
        let af: Vec<Vec<f64>> = rows_f.iter().map(|r| subset.iter().map(|&j| r[j]).collect()).collect();
        let screen = solve_float(af, rhs_f.clone());
        let candidate = match &screen {
            Some(x) => x.iter().all(|v| *v > -1e-7),
            None => true,
        };
        if candidate {
            let a: Vec<Vec<Rational>> = rows.iter().map(|r| subset.iter().map(|&j| r[j].clone()).collect()).collect();
            if let Some(xb) = solve_square(a, rhs.clone()) {
                if xb.iter().all(|v| *v >= q(0, 1)) {
                    let mut full = vec![q(0, 1); cols];
                    for (&j, v) in subset.iter().zip(xb) {
                        full[j] = v;
                    }
                    found.insert(full[..n].to_vec());
                }
            }
        }
        // Next k-subset in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return found.into_iter().collect();
            }
            i -= 1;
            if subset[i] < cols - k + i {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Feasible variable of a balance program at a given vertex.
pub fn variable_at(prog: &BalanceProgram<Rational>, x: &[Rational]) -> FeasibleVariable<Rational> {
    prog.variable(x)
}

pub fn finite(v: &ExtReal<Rational>) -> f64 {
    match v {
        ExtReal::Finite(x) => x.to_f64(),
        ExtReal::PosInf => f64::INFINITY,
        ExtReal::NegInf => f64::NEG_INFINITY,
    }
}
