//! Browser bindings: the value-versus-limit curve of the worked example,
//! Monte Carlo checks of its optimal policy and the phantom-solution
//! comparison on a pasted model.
//!
//! Every export returns a JSON string. The plain functions below the
//! bindings do the work so they can be tested natively.

use cmdp_core::diagnostics::solve_naive_program;
use cmdp_core::lp::LpOptions;
use cmdp_core::model::{build_example_model, build_phantom_demo, load_model_str, serialize_model, ExampleOptions};
use cmdp_core::reference::KernelSource;
use cmdp_core::verify::{evaluate_policy, simulate_policy, SimulationOptions, StationaryProgram};
use cmdp_core::{solve_constrained, DualOptions, FiniteMdp, Rational, SolveOptions};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = valueCurve)]
pub fn value_curve_js(n: usize, theta_from: f64, theta_to: f64, points: usize, handmade: bool) -> Result<String, JsValue> {
    to_js(value_curve(n, theta_from, theta_to, points, handmade))
}

#[wasm_bindgen(js_name = simulateExample)]
pub fn simulate_example_js(n: usize, theta: f64, horizon: usize, samples: usize, seed: u64) -> Result<String, JsValue> {
    to_js(simulate_example(n, theta, horizon, samples, seed))
}

#[wasm_bindgen(js_name = phantomCheck)]
pub fn phantom_check_js(model: &str) -> Result<String, JsValue> {
    to_js(phantom_check(model))
}

#[wasm_bindgen(js_name = phantomDemoModel)]
pub fn phantom_demo_model() -> String {
    serialize_model(&build_phantom_demo::<Rational>())
}

fn example(n: usize, theta: f64, handmade: bool) -> Result<(FiniteMdp<f64>, SolveOptions<f64>), String> {
    if n == 0 || n > 200 {
        return Err("N must be between 1 and 200".into());
    }
    let mut o = ExampleOptions::new(n, theta);
    o.handmade_kernel = handmade;
    let (m, k) = build_example_model(&o).map_err(|e| e.to_string())?;
    let mut opts = SolveOptions::new();
    if let Some(k) = k {
        opts.kernel = KernelSource::Supplied(k);
    }
    Ok((m, opts))
}

/// Optimal value, multiplier and probability of `a` at state 1 for evenly
/// spaced constraint limits.
pub fn value_curve(n: usize, theta_from: f64, theta_to: f64, points: usize, handmade: bool) -> Result<Value, String> {
    if !(2..=400).contains(&points) {
        return Err("points must be between 2 and 400".into());
    }
    let mut out = Vec::with_capacity(points);
    for i in 0..points {
        let theta = theta_from + (theta_to - theta_from) * i as f64 / (points - 1) as f64;
        let (m, mut opts) = example(n, theta, handmade)?;
        opts.dual = Some(DualOptions::default());
        let r = solve_constrained(&m, &opts).map_err(|e| e.to_string())?;
        let one = m.state_index("1").expect("example has state 1");
        out.push(json!({
            "theta": theta,
            "status": r.status,
            "value": r.value.is_finite().then(|| r.value.to_f64()),
            "lambda": r.dual.as_ref().map(|d| d.lambda_star[0]),
            "slater_slack": r.slater.as_ref().map(|s| s.slack.to_f64()),
            "phi_a": r.policy.as_ref().map(|p| p.rows[one][0]),
        }));
    }
    Ok(Value::Array(out))
}

/// Simulates the optimal policy of the example and compares the estimates
/// with its exact values.
pub fn simulate_example(n: usize, theta: f64, horizon: usize, samples: usize, seed: u64) -> Result<Value, String> {
    if samples == 0 || samples > 1_000_000 || horizon == 0 || horizon > 10_000 {
        return Err("samples must be in 1..=1e6 and horizon in 1..=1e4".into());
    }
    let (m, opts) = example(n, theta, true)?;
    let r = solve_constrained(&m, &opts).map_err(|e| e.to_string())?;
    let phi = r.policy.ok_or_else(|| format!("no optimal policy (status {:?})", r.status))?;
    let exact = evaluate_policy(&m, &phi);
    let exact: Vec<f64> = std::iter::once(&exact.reward_value).chain(&exact.constraint_values).map(|v| v.to_f64()).collect();
    let est = simulate_policy(&m, &mut StationaryProgram::new(&phi), &SimulationOptions::new(horizon, samples, seed));
    let one = m.state_index("1").expect("example has state 1");
    let rows: Vec<Value> = est
        .estimates
        .iter()
        .zip(&exact)
        .map(|(e, v)| {
            json!({
                "criterion": e.criterion,
                "mean": e.mean,
                "half_width": e.half_width,
                "exact": v,
                "covered": e.covers(*v),
                "truncation_bound": e.truncation_bound,
            })
        })
        .collect();
    Ok(json!({ "phi_a": phi.rows[one][0], "estimates": rows }))
}

/// Naive program against the solver's program on a model file.
pub fn phantom_check(model: &str) -> Result<Value, String> {
    let m: FiniteMdp<Rational> = load_model_str(model).map_err(|e| e.to_string())?;
    let r = solve_naive_program(&m, &KernelSource::Auto, &LpOptions::default()).map_err(|e| e.to_string())?;
    Ok(r.to_json())
}
