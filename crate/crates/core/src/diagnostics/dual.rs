//! Lagrangian dual of the constrained program.
//!
//! With `u = -lambda >= 0` the dual function is
//! `L(u) = max { eta(r + <u, c>) } - <u, theta>` over the feasible variables
//! without constraint rows. It is convex and piecewise linear; a maximizer
//! `eta*` at `u` gives the subgradient `eta*(c) - theta`.

use serde::Serialize;
use serde_json::{json, Value};

use super::SlaterReport;
use crate::error::SolveError;
use crate::kp::{BalanceProgram, Prepared};
use crate::lp::{solve_lp, LpOptions, LpProblem, LpStatus};
use crate::model::{ExtReal, FiniteMdp};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualMethod {
    /// Kelley cutting planes with an exact LP master; terminates finitely.
    #[default]
    CuttingPlane,
    /// Golden-section search; one constraint only.
    GoldenSection,
    /// Projected subgradient with diminishing steps.
    Subgradient,
}

impl std::str::FromStr for DualMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cutting-plane" => Ok(DualMethod::CuttingPlane),
            "golden" => Ok(DualMethod::GoldenSection),
            "subgradient" => Ok(DualMethod::Subgradient),
            other => Err(format!("unknown dual method `{other}` (expected cutting-plane|golden|subgradient)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DualOptions {
    pub method: DualMethod,
    /// Box on each `|lambda_i|`. Derived from the Slater point when the
    /// slack is positive and this is unset.
    pub bound: Option<f64>,
    pub max_iterations: usize,
    /// Outer tolerance for the float-driven methods.
    pub tol: f64,
    pub step: f64,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self { method: DualMethod::CuttingPlane, bound: None, max_iterations: 500, tol: 1e-8, step: 1.0 }
    }
}

const FALLBACK_BOUND: i64 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct DualStep<S> {
    pub lambda: Vec<S>,
    pub value: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualReport<S> {
    pub method: DualMethod,
    /// Componentwise `<= 0`.
    pub lambda_star: Vec<S>,
    pub dual_value: ExtReal<S>,
    pub primal_value: ExtReal<S>,
    /// `dual_value - primal_value`.
    pub gap: ExtReal<S>,
    pub theta: Vec<S>,
    pub bound: S,
    pub trace: Vec<DualStep<S>>,
    pub notes: Vec<String>,
}

impl<S: Scalar> DualReport<S> {
    pub fn to_json(&self) -> Value {
        json!({
            "method": self.method,
            "lambda_star": self.lambda_star.iter().map(|v| v.render()).collect::<Vec<_>>(),
            "dual_value": self.dual_value,
            "primal_value": self.primal_value,
            "gap": self.gap,
            "theta": self.theta.iter().map(|v| v.render()).collect::<Vec<_>>(),
            "bound": self.bound.render(),
            "trace": self.trace.iter().map(|s| json!({
                "lambda": s.lambda.iter().map(|v| v.render()).collect::<Vec<_>>(),
                "value": s.value.render(),
            })).collect::<Vec<_>>(),
            "notes": self.notes,
        })
    }
}

/// Inner program shared by every evaluation of `L`.
pub struct DualFunction<'a, S> {
    m: &'a FiniteMdp<S>,
    prog: BalanceProgram<S>,
    reward: Vec<S>,
    costs: Vec<Vec<S>>,
    lp: LpOptions,
}

impl<'a, S: Scalar> DualFunction<'a, S> {
    pub fn new(m: &'a FiniteMdp<S>, prepared: &Prepared<S>, lp: &LpOptions) -> Self {
        let prog = BalanceProgram::new(m, &prepared.base.support, &prepared.zero_structure);
        let reward = prog.coefficients(&m.reward);
        let costs = m.constraints.iter().map(|c| prog.coefficients(&c.values)).collect();
        Self { m, prog, reward, costs, lp: *lp }
    }

    /// `(L(u), subgradient)` for `u = -lambda >= 0`.
    pub fn eval(&mut self, u: &[S]) -> Result<(S, Vec<S>), SolveError> {
        let mut obj = self.reward.clone();
        for (ui, ci) in u.iter().zip(&self.costs) {
            for (o, c) in obj.iter_mut().zip(ci) {
                *o = o.clone() + ui.clone() * c.clone();
            }
        }
        self.prog.lp.objective = obj;
        let sol = solve_lp(&self.prog.lp, &self.lp)?;
        match sol.status {
            LpStatus::Optimal => {
                let theta: Vec<S> = self.m.constraints.iter().map(|c| c.limit.clone()).collect();
                let g: Vec<S> = self
                    .costs
                    .iter()
                    .zip(&theta)
                    .map(|(ci, t)| crate::lp::dot(ci, &sol.primal) - t.clone())
                    .collect();
                let shift = u.iter().zip(&theta).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
                Ok((sol.objective.expect("optimal") - shift, g))
            }
            LpStatus::Unbounded => Err(SolveError::Stage {
                stage: "dual",
                message: "inner program unbounded for this multiplier; the finiteness assumptions fail".into(),
            }),
            LpStatus::Infeasible => {
                Err(SolveError::Stage { stage: "dual", message: "no feasible variable exists".into() })
            }
        }
    }
}

/// `L(lambda)` for `lambda <= 0`.
pub fn lagrangian_value<S: Scalar>(
    m: &FiniteMdp<S>,
    prepared: &Prepared<S>,
    lambda: &[S],
    lp: &LpOptions,
) -> Result<S, SolveError> {
    let u: Vec<S> = lambda.iter().map(|l| -l.clone()).collect();
    Ok(DualFunction::new(m, prepared, lp).eval(&u)?.0)
}

fn from_f64<S: Scalar>(v: f64) -> S {
    S::from_rational(&Rational::from_float(v).expect("finite"))
}

struct Tracker<S> {
    best: Option<(Vec<S>, S)>,
    trace: Vec<DualStep<S>>,
}

impl<S: Scalar> Tracker<S> {
    fn record(&mut self, u: &[S], value: &S) {
        self.trace.push(DualStep { lambda: u.iter().map(|v| -v.clone()).collect(), value: value.clone() });
        if self.best.as_ref().is_none_or(|(_, b)| value < b) {
            self.best = Some((u.to_vec(), value.clone()));
        }
    }
}

/// Minimizes the dual function over `lambda <= 0` and compares with the
/// primal value. Weak duality holds at every evaluated point.
pub fn lagrangian_dual<S: Scalar>(
    m: &FiniteMdp<S>,
    prepared: &Prepared<S>,
    primal_value: &ExtReal<S>,
    slater: Option<&SlaterReport<S>>,
    opts: &DualOptions,
    lp: &LpOptions,
) -> Result<DualReport<S>, SolveError> {
    let q = m.constraints.len();
    let theta: Vec<S> = m.constraints.iter().map(|c| c.limit.clone()).collect();
    let mut f = DualFunction::new(m, prepared, lp);
    let mut tr = Tracker { best: None, trace: Vec::new() };
    let mut notes = Vec::new();

    let zero = vec![S::zero(); q];
    let (l0, g0) = f.eval(&zero)?;
    tr.record(&zero, &l0);

    // With slack t > 0 at a point of reward r0, any minimizer satisfies
    // sum u_i <= (L(0) - r0) / t.
    let bound: S = match (opts.bound, slater) {
        (Some(b), _) => from_f64(b),
        (None, Some(SlaterReport { slack: ExtReal::Finite(t), pass: true, point_reward: Some(r0), .. })) => {
            let b = (l0.clone() - r0.clone()) / t.clone();
            if b < S::zero() {
                S::zero()
            } else {
                b
            }
        }
        _ => {
            notes.push(format!("no Slater point: multipliers searched in the box |lambda_i| <= {FALLBACK_BOUND}"));
            S::from_i64(FALLBACK_BOUND)
        }
    };

    if q > 0 {
        match opts.method {
            DualMethod::CuttingPlane => cutting_plane(&mut f, &mut tr, (l0, g0), &bound, opts, lp)?,
            DualMethod::GoldenSection => {
                if q != 1 {
                    return Err(SolveError::Stage {
                        stage: "dual",
                        message: format!("golden-section search needs exactly one constraint, model has {q}"),
                    });
                }
                golden(&mut f, &mut tr, &bound, opts)?
            }
            DualMethod::Subgradient => subgradient(&mut f, &mut tr, g0, &bound, opts)?,
        }
    }

    let (u_star, best) = tr.best.clone().expect("at least one evaluation");
    let dual_value = ExtReal::Finite(best);
    let gap = dual_value.margin_over(primal_value);
    if slater.is_some_and(|s| !s.pass) {
        notes.push("Slater condition fails: only weak duality is guaranteed".into());
    }
    Ok(DualReport {
        method: opts.method,
        lambda_star: u_star.iter().map(|v| -v.clone()).collect(),
        dual_value,
        primal_value: primal_value.clone(),
        gap,
        theta,
        bound,
        trace: tr.trace,
        notes,
    })
}

/// Kelley's method: the master LP minimizes `w` over `0 <= u <= bound`
/// subject to every collected cut `w >= L(u_k) + g_k (u - u_k)`.
fn cutting_plane<S: Scalar>(
    f: &mut DualFunction<S>,
    tr: &mut Tracker<S>,
    first: (S, Vec<S>),
    bound: &S,
    opts: &DualOptions,
    lp: &LpOptions,
) -> Result<(), SolveError> {
    let q = first.1.len();
    // Columns: u_1..u_q, w+, w-.
    let mut master = LpProblem::new(q + 2);
    master.objective[q] = -S::one();
    master.objective[q + 1] = S::one();
    for i in 0..q {
        let mut row = vec![S::zero(); q + 2];
        row[i] = -S::one();
        master.add_ge(format!("box{i}"), row, -bound.clone());
    }
    let add_cut = |master: &mut LpProblem<S>, u: &[S], value: &S, g: &[S]| {
        let mut row: Vec<S> = g.iter().map(|v| -v.clone()).collect();
        row.push(S::one());
        row.push(-S::one());
        let rhs = value.clone() - crate::lp::dot(g, u);
        let k = master.ge.len();
        master.add_ge(format!("cut{k}"), row, rhs);
    };
    add_cut(&mut master, &vec![S::zero(); q], &first.0, &first.1);
    let tol = if S::MODE == crate::scalar::Mode::Rational { 0.0 } else { opts.tol };
    for _ in 0..opts.max_iterations {
        let sol = solve_lp(&master, lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(SolveError::Stage { stage: "dual", message: format!("cutting-plane master is {:?}", sol.status) });
        }
        let lower = sol.primal[q].clone() - sol.primal[q + 1].clone();
        let upper = tr.best.as_ref().expect("seeded").1.clone();
        if !(upper - lower).is_pos_tol(tol) {
            return Ok(());
        }
        let u: Vec<S> = sol.primal[..q].to_vec();
        let (value, g) = f.eval(&u)?;
        tr.record(&u, &value);
        add_cut(&mut master, &u, &value, &g);
    }
    Ok(())
}

fn golden<S: Scalar>(
    f: &mut DualFunction<S>,
    tr: &mut Tracker<S>,
    bound: &S,
    opts: &DualOptions,
) -> Result<(), SolveError> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, bound.to_f64());
    let mut eval = |x: f64, tr: &mut Tracker<S>| -> Result<f64, SolveError> {
        let u = [from_f64::<S>(x)];
        let (v, _) = f.eval(&u)?;
        tr.record(&u, &v);
        Ok(v.to_f64())
    };
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = eval(c, tr)?;
    let mut fd = eval(d, tr)?;
    let mut it = 0;
    while b - a > opts.tol && it < opts.max_iterations {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c, tr)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d, tr)?;
        }
        it += 1;
    }
    eval(b, tr)?;
    Ok(())
}

fn subgradient<S: Scalar>(
    f: &mut DualFunction<S>,
    tr: &mut Tracker<S>,
    g0: Vec<S>,
    bound: &S,
    opts: &DualOptions,
) -> Result<(), SolveError> {
    let ub = bound.to_f64();
    let mut u = vec![0.0f64; g0.len()];
    let mut g: Vec<f64> = g0.iter().map(|v| v.to_f64()).collect();
    for k in 0..opts.max_iterations {
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let step = opts.step / ((k + 1) as f64).sqrt();
        for (ui, gi) in u.iter_mut().zip(&g) {
            *ui = (*ui - step * gi / norm).clamp(0.0, ub);
        }
        let us: Vec<S> = u.iter().map(|v| from_f64(*v)).collect();
        let (v, gs) = f.eval(&us)?;
        tr.record(&us, &v);
        g = gs.iter().map(|v| v.to_f64()).collect();
    }
    Ok(())
}
