mod common;

use cmdp_core::random::{random_policy, RandomModelSpec};
use cmdp_core::verify::{evaluate_policy, simulate_policy, FnPolicy, SimulationOptions, StationaryProgram};
use cmdp_core::{solve_constrained, FiniteMdp, SolveOptions};
use common::*;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[test]
fn history_dependent_policies_never_beat_the_program() {
    // With theta = -1 the constraint is inactive for every policy, so the
    // program value bounds all of them.
    let (m, k) = example(30, q(-1, 1), true);
    let mut opts = SolveOptions::new();
    opts.kernel = supplied_kernel(k);
    let v = solve_constrained(&m, &opts).unwrap().value.to_f64();
    let one = m.state_index("1").unwrap();
    for seed in 0..10u64 {
        let bias = (seed as f64) / 10.0;
        // Plays `a` at state 1 with a probability depending on the path length.
        let mut pol = FnPolicy(move |m: &FiniteMdp<f64>, path: &[usize], rng: &mut dyn RngCore| {
            let x = *path.last().unwrap();
            if x == one && m.admissible[x].len() == 2 {
                let p = (bias + 0.05 * path.len() as f64).min(1.0);
                if rng.random_bool(p) {
                    0
                } else {
                    1
                }
            } else {
                m.admissible[x][0]
            }
        });
        let est = simulate_policy(&m, &mut pol, &SimulationOptions::new(200, 20_000, seed));
        let r = &est.estimates[0];
        assert!(r.mean <= v + 3.0 * r.half_width, "seed {seed}: {} > {v}", r.mean);
    }
}

#[test]
fn simulation_agrees_with_exact_evaluation_on_random_models() {
    let models = checked_models(31, 100, &RandomModelSpec::default());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cases: Vec<_> = models
        .into_iter()
        .map(|m| {
            let phi = random_policy(&mut rng, &m);
            (m, phi)
        })
        .collect();
    let results: Vec<Option<bool>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (m, phi))| {
            let e = evaluate_policy(m, phi);
            if !e.reward_value.is_finite() {
                return None;
            }
            let est = simulate_policy(m, &mut StationaryProgram::new(phi), &SimulationOptions::new(400, 4000, i as u64));
            // Models with slowly mixing transient parts are skipped via the tail certificate.
            let tail = est.estimates[0].truncation_bound?;
            if tail > 1e-6 {
                return None;
            }
            Some(est.estimates[0].covers(e.reward_value.to_f64()))
        })
        .collect();
    let checked: Vec<bool> = results.into_iter().flatten().collect();
    let covered = checked.iter().filter(|c| **c).count();
    assert!(checked.len() >= 50, "only {} finite cases", checked.len());
    assert!(covered as f64 >= 0.9 * checked.len() as f64, "{covered}/{}", checked.len());
}

#[test]
fn seeds_make_runs_reproducible() {
    let (m, _) = example(20, q(1, 4), false);
    let phi = example_policy(&m, q(1, 2));
    let a = simulate_policy(&m, &mut StationaryProgram::new(&phi), &SimulationOptions::new(100, 1000, 42));
    let b = simulate_policy(&m, &mut StationaryProgram::new(&phi), &SimulationOptions::new(100, 1000, 42));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
