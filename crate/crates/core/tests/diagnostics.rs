mod common;

use cmdp_core::diagnostics::{
    check_assumption_b1, lagrangian_dual, lagrangian_value, run_checks, solve_naive_program, DualOptions,
    PhantomVerdict, WitnessKind,
};
use cmdp_core::kp::prepare;
use cmdp_core::lp::{LpOptions, LpStatus};
use cmdp_core::model::build_phantom_demo;
use cmdp_core::random::{random_model, RandomModelSpec};
use cmdp_core::reference::KernelSource;
use cmdp_core::verify::evaluate_policy;
use cmdp_core::{solve_constrained, ExtReal, FiniteMdp, Rational, Scalar, SolveOptions, SolveStatus};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `L(u)` on the example via the two deterministic policies, which are
/// the vertices of the unconstrained feasible set.
fn example_dual_oracle(m: &FiniteMdp<Rational>, theta: f64, u: f64) -> f64 {
    [q(0, 1), q(1, 1)]
        .into_iter()
        .map(|wa| {
            let e = evaluate_policy(m, &example_policy(m, wa));
            e.reward_value.to_f64() + u * (e.constraint_values[0].to_f64() - theta)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn dual_matches_grid_oracle_on_example() {
    let (m, k) = example(40, q(1, 4), true);
    let grid_min = (0..=10_000)
        .map(|i| {
            let u = i as f64 * 1e-4;
            (example_dual_oracle(&m, 0.25, u), u)
        })
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    let mut opts = SolveOptions::new();
    opts.kernel = supplied_kernel(k);
    opts.dual = Some(DualOptions::default());
    let r = solve_constrained(&m, &opts).unwrap();
    let d = r.dual.unwrap();
    assert!((d.lambda_star[0].to_f64() + grid_min.1).abs() < 2e-4);
    assert!((d.dual_value.to_f64() - grid_min.0).abs() < 1e-6);
    assert!(d.gap.to_f64().abs() < 1e-12);
}

#[test]
fn dual_function_is_convex() {
    let (m, k) = example(20, q(1, 4), true);
    let prep = prepare(&m, &supplied_kernel(k)).unwrap();
    let lp = LpOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let a: i64 = rng.random_range(-100..=0);
        let b: i64 = rng.random_range(-100..=0);
        let la = lagrangian_value(&m, &prep, &[q(a, 100)], &lp).unwrap();
        let lb = lagrangian_value(&m, &prep, &[q(b, 100)], &lp).unwrap();
        let mid = lagrangian_value(&m, &prep, &[q(a + b, 200)], &lp).unwrap();
        assert!(mid <= (la + lb) / q(2, 1));
    }
}

#[test]
fn weak_duality_and_zero_gap_under_slater() {
    let models = checked_models(21, 40, &RandomModelSpec::default());
    let mut slater_cases = 0;
    for m in &models {
        let mut opts = SolveOptions::new();
        opts.dual = Some(DualOptions::default());
        let r = solve_constrained(m, &opts).unwrap();
        let Some(d) = r.dual else { continue };
        assert!(d.dual_value >= r.value, "weak duality");
        assert!(d.lambda_star.iter().all(|l| *l <= q(0, 1)));
        let slater = r.slater.unwrap();
        if slater.pass && r.status == SolveStatus::Optimal {
            slater_cases += 1;
            assert!(d.gap.to_f64() <= 1e-6, "gap {}", d.gap);
        }
    }
    assert!(slater_cases > 5);
}

#[test]
fn unconstrained_value_equals_best_deterministic_policy() {
    let spec = RandomModelSpec { max_constraints: 0, ..Default::default() };
    for m in checked_models(22, 30, &spec) {
        let r = solve_constrained(&m, &SolveOptions::new()).unwrap();
        let best = deterministic_policies(&m)
            .iter()
            .map(|p| evaluate_policy(&m, p).reward_value)
            .fold(ExtReal::NegInf, |a, b| if b > a { b } else { a });
        assert_eq!(r.value, best);
    }
}

#[test]
fn b1_witnesses_are_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let lp = LpOptions::default();
    let mut failures = 0;
    for _ in 0..200 {
        let m: FiniteMdp<Rational> = random_model(&mut rng, &RandomModelSpec::default());
        let prep = prepare(&m, &KernelSource::Auto).unwrap();
        let r = check_assumption_b1(&m, &prep.base, &prep.max_structure, &lp).unwrap();
        if r.pass {
            assert!(r.witnesses.is_empty());
            continue;
        }
        failures += 1;
        assert!(!r.witnesses.is_empty());
        for w in r.witnesses.iter().filter(|w| w.kind == WitnessKind::Pair) {
            let h = if w.criterion == "reward" {
                &m.reward
            } else {
                &m.constraints.iter().find(|c| c.name == w.criterion).unwrap().values
            };
            for p in &w.pairs {
                assert!(prep.max_structure.pairs.contains(p));
                assert!(h[p] > q(0, 1));
            }
        }
    }
    assert!(failures > 0);
}

#[test]
fn phantom_demo_and_truncated_example() {
    let m = build_phantom_demo::<Rational>();
    let r = solve_naive_program(&m, &KernelSource::Auto, &LpOptions::default()).unwrap();
    assert_eq!(r.naive.status, LpStatus::Unbounded);
    assert_eq!(r.verdict, PhantomVerdict::Phantom);

    let mut o = cmdp_core::model::ExampleOptions::new(20, q(1, 4));
    o.include_negative = Some(5);
    let (m, _) = cmdp_core::model::build_example_model(&o).unwrap();
    let r = solve_naive_program(&m, &KernelSource::Auto, &LpOptions::default()).unwrap();
    assert_eq!(r.verdict, PhantomVerdict::NoGap);
    assert_eq!(r.naive_value, r.kp_value);
}

#[test]
fn checks_on_example_pass() {
    let (m, k) = example(60, q(1, 4), true);
    let r = run_checks(&m, &supplied_kernel(k), &LpOptions::default()).unwrap();
    assert!(r.pass());
    assert_eq!(r.prepared.base.p[m.state_index("1").unwrap()], q(1, 4));
}

#[test]
fn golden_section_matches_cutting_plane() {
    let (m, k) = example(20, q(1, 4), true);
    let prep = prepare(&m, &supplied_kernel(k)).unwrap();
    let lp = LpOptions::default();
    let slater = cmdp_core::diagnostics::check_slater(&m, &prep.base, &prep.zero_structure, &lp).unwrap();
    let primal = ExtReal::Finite(q(0, 1));
    let run = |method| {
        let opts = DualOptions { method, ..Default::default() };
        lagrangian_dual(&m, &prep, &primal, Some(&slater), &opts, &lp).unwrap().dual_value.to_f64()
    };
    let exact = run(cmdp_core::DualMethod::CuttingPlane);
    assert!((run(cmdp_core::DualMethod::GoldenSection) - exact).abs() < 1e-7);
}
