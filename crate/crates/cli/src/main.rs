//! `cmdp`: solve, check and simulate constrained MDPs under the
//! expected-total-reward criterion.

mod table;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cmdp_core::diagnostics::{check_slater, run_checks, solve_naive_program};
use cmdp_core::kp::{policy_json, prepare};
use cmdp_core::lp::LpOptions;
use cmdp_core::model::{
    build_example_model, build_phantom_demo, load_model_str, parse_policy, serialize_model, validate_model,
    ExampleOptions,
};
use cmdp_core::reference::{KernelSource, WeightRule};
use cmdp_core::scalar::parse_rational;
use cmdp_core::verify::{evaluate_policy, simulate_policy, SimulationOptions, StationaryProgram};
use cmdp_core::{
    solve_constrained, DualMethod, DualOptions, ExtReal, FiniteMdp, Mode, ModelError, Rational, Scalar, SolveOptions,
    SolveStatus,
};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "cmdp", version, about = "Constrained MDPs under the expected-total-reward criterion")]
struct Cli {
    /// Arithmetic: exact rationals or f64.
    #[arg(long, global = true, default_value = "rational")]
    mode: Mode,
    /// Random seed (required by `simulate`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Float-mode tolerance for LP feasibility and dominance checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Print JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include wall-clock timings in solve reports.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ModelArg {
    /// Model file; `-` or nothing reads stdin.
    model: Option<PathBuf>,
    /// Reference kernel: the model's own (or uniform), uniform or dyadic.
    #[arg(long, default_value = "auto")]
    kernel: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model file against every structural invariant.
    Validate(ModelArg),
    /// Solve the constrained program and extract an optimal policy.
    Solve {
        #[command(flatten)]
        model: ModelArg,
        /// Also compute the Lagrangian dual.
        #[arg(long)]
        dual: bool,
    },
    /// Base measure, structures and the assumption checks.
    Check(ModelArg),
    /// Slater slack of the constraints.
    Slater(ModelArg),
    /// Exact values of a stationary policy.
    Evaluate {
        #[command(flatten)]
        model: ModelArg,
        /// Policy file `{state: {action: prob}}` or a solve report.
        #[arg(long)]
        policy: PathBuf,
    },
    /// Monte Carlo estimate of a policy's values (optimal policy by default).
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Naive characteristic-equation program against the solver's program.
    Phantom(ModelArg),
    /// Lagrangian dual: multipliers, dual value and duality gap.
    Dual {
        #[command(flatten)]
        model: ModelArg,
        /// cutting-plane, golden or subgradient.
        #[arg(long, default_value = "cutting-plane")]
        method: DualMethod,
        /// Multiplier box |lambda_i| <= bound.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Print the truncated worked example as a model file.
    Example {
        #[arg(long = "N", default_value_t = 60)]
        n: usize,
        #[arg(long, default_value = "1/4", allow_hyphen_values = true)]
        theta: String,
        /// Embed the hand-made reference kernel.
        #[arg(long = "paper-p")]
        handmade_p: bool,
        /// Prepend an unreachable left chain of this length.
        #[arg(long, value_name = "M")]
        include_negative: Option<usize>,
    },
    /// Print the phantom-solution demonstration model.
    PhantomDemo,
}

/// Failure with the exit code to report.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn data(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<cmdp_core::SolveError> for Failure {
    fn from(e: cmdp_core::SolveError) -> Self {
        Failure::data(e.to_string())
    }
}

/// Report plus exit status.
struct Output {
    json: Value,
    ok: bool,
}

fn read_source(path: Option<&PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read_to_string(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))
        }
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::data(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn load<S: Scalar>(arg: &ModelArg) -> Result<FiniteMdp<S>, Failure> {
    let text = read_source(arg.model.as_ref())?;
    load_model_str(&text).map_err(|e| Failure::data(e.to_string()))
}

fn kernel<S: Scalar>(arg: &ModelArg) -> Result<KernelSource<S>, Failure> {
    match arg.kernel.as_str() {
        "auto" => Ok(KernelSource::Auto),
        "uniform" => Ok(KernelSource::Construct(WeightRule::Uniform)),
        "dyadic" => Ok(KernelSource::Construct(WeightRule::Dyadic)),
        other => Err(Failure::usage(format!("unknown kernel `{other}` (expected auto|uniform|dyadic)"))),
    }
}

fn lp_options(cli: &Cli) -> LpOptions {
    let mut lp = LpOptions::default();
    if let Some(t) = cli.tol {
        lp.feas_tol = t;
    }
    lp
}

fn solve_options<S: Scalar>(cli: &Cli, arg: &ModelArg) -> Result<SolveOptions<S>, Failure> {
    let mut opts = SolveOptions::new();
    opts.kernel = kernel(arg)?;
    opts.lp = lp_options(cli);
    if let Some(t) = cli.tol {
        opts.tol = t;
    }
    Ok(opts)
}

fn validate(arg: &ModelArg) -> Result<Output, Failure> {
    let text = read_source(arg.model.as_ref())?;
    // Violations are reported against the rational reading of the file.
    let (violations, notes) = match load_model_str::<Rational>(&text) {
        Ok(m) => (Vec::new(), validate_model(&m).notes),
        Err(ModelError::Validation(v)) => {
            (v.iter().map(|x| json!({"field": x.field, "message": x.message})).collect(), Vec::new())
        }
        Err(e) => (vec![json!({"field": "file", "message": e.to_string()})], Vec::new()),
    };
    let ok = violations.is_empty();
    Ok(Output { json: json!({"valid": ok, "violations": violations, "notes": notes}), ok })
}

fn run<S: Scalar>(cli: &Cli) -> Result<Output, Failure> {
    let lp = lp_options(cli);
    match &cli.command {
        Command::Validate(arg) => validate(arg),
        Command::Solve { model, dual } => {
            let m: FiniteMdp<S> = load(model)?;
            let mut opts = solve_options(cli, model)?;
            if *dual {
                opts.dual = Some(DualOptions::default());
            }
            let r = solve_constrained(&m, &opts)?;
            Ok(Output { json: r.to_json(&m, cli.timings), ok: r.status == SolveStatus::Optimal })
        }
        Command::Check(arg) => {
            let m: FiniteMdp<S> = load(arg)?;
            let r = run_checks(&m, &kernel(arg)?, &lp)?;
            let mut json = r.to_json(&m);
            json["pass"] = json!(r.pass());
            Ok(Output { json, ok: r.pass() })
        }
        Command::Slater(arg) => {
            let m: FiniteMdp<S> = load(arg)?;
            let prep = prepare(&m, &kernel(arg)?)?;
            let r = check_slater(&m, &prep.base, &prep.zero_structure, &lp)?;
            Ok(Output { json: r.to_json(), ok: r.pass })
        }
        Command::Evaluate { model, policy } => {
            let m: FiniteMdp<S> = load(model)?;
            let text = read_source(Some(policy))?;
            let phi = parse_policy(&m, &text).map_err(|e| Failure::data(e.to_string()))?;
            let e = evaluate_policy(&m, &phi);
            let ok = m
                .constraints
                .iter()
                .zip(&e.constraint_values)
                .all(|(c, v)| v.ge_tol(&ExtReal::Finite(c.limit.clone()), 0.0));
            Ok(Output { json: e.to_json(&m), ok })
        }
        Command::Simulate { model, policy, horizon, samples } => {
            let seed = cli.seed.ok_or_else(|| Failure::usage("`simulate` requires --seed"))?;
            let m: FiniteMdp<S> = load(model)?;
            let phi = match policy {
                Some(p) => parse_policy(&m, &read_source(Some(p))?).map_err(|e| Failure::data(e.to_string()))?,
                None => {
                    let r = solve_constrained(&m, &solve_options(cli, model)?)?;
                    r.policy.ok_or_else(|| Failure::data(format!("no optimal policy (status {:?})", r.status)))?
                }
            };
            let exact = evaluate_policy(&m, &phi);
            let est = simulate_policy(&m, &mut StationaryProgram::new(&phi), &SimulationOptions::new(*horizon, *samples, seed));
            let exact_values: Vec<&ExtReal<S>> = std::iter::once(&exact.reward_value).chain(&exact.constraint_values).collect();
            let estimates: Vec<Value> = est
                .estimates
                .iter()
                .zip(exact_values)
                .map(|(e, v)| {
                    json!({
                        "criterion": e.criterion,
                        "mean": e.mean,
                        "ci95": [e.mean - e.half_width, e.mean + e.half_width],
                        "truncation_bound": e.truncation_bound,
                        "exact": v,
                        "covered": e.covers(v.to_f64()),
                    })
                })
                .collect();
            let json = json!({
                "horizon": est.horizon,
                "samples": est.samples,
                "seed": est.seed,
                "policy": policy_json(&m, &phi),
                "estimates": estimates,
            });
            Ok(Output { json, ok: true })
        }
        Command::Phantom(arg) => {
            let m: FiniteMdp<S> = load(arg)?;
            let r = solve_naive_program(&m, &kernel(arg)?, &lp)?;
            Ok(Output { json: r.to_json(), ok: true })
        }
        Command::Dual { model, method, bound } => {
            let m: FiniteMdp<S> = load(model)?;
            let mut opts = solve_options(cli, model)?;
            opts.dual = Some(DualOptions { method: *method, bound: *bound, ..Default::default() });
            let r = solve_constrained(&m, &opts)?;
            let dual = r.dual.as_ref().map(|d| d.to_json());
            let ok = dual.is_some();
            let json = json!({
                "status": r.status,
                "primal_value": r.value,
                "dual": dual,
                "warnings": r.warnings,
            });
            Ok(Output { json, ok })
        }
        Command::Example { .. } | Command::PhantomDemo => unreachable!("handled without a model"),
    }
}

fn generate(cli: &Cli) -> Result<Option<String>, Failure> {
    match &cli.command {
        Command::Example { n, theta, handmade_p, include_negative } => {
            let theta = parse_rational(theta).map_err(|e| Failure::usage(e.to_string()))?;
            let mut o = ExampleOptions::new(*n, theta);
            o.handmade_kernel = *handmade_p;
            o.include_negative = *include_negative;
            let (mut m, k) = build_example_model::<Rational>(&o).map_err(|e| Failure::usage(e.to_string()))?;
            m.reference_kernel = k;
            Ok(Some(serialize_model(&m)))
        }
        Command::PhantomDemo => Ok(Some(serialize_model(&build_phantom_demo::<Rational>()))),
        _ => Ok(None),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::data(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = generate(&cli).and_then(|generated| match generated {
        Some(model) => emit(&cli, &(model + "\n")).map(|_| true),
        None => {
            let out = match cli.mode {
                Mode::Rational => run::<Rational>(&cli),
                Mode::Float => run::<f64>(&cli),
            }?;
            let text = if cli.json {
                serde_json::to_string_pretty(&out.json).expect("report serializes") + "\n"
            } else {
                table::render(&out.json)
            };
            emit(&cli, &text).map(|_| out.ok)
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
