//! Standing-assumption checks, the Slater condition, the naive program over
//! all solutions of the characteristic equation, and the Lagrangian dual.

mod dual;

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::SolveError;
use crate::kp::{assemble_kp, prepare, BalanceProgram, Prepared};
use crate::lp::{solve_lp, Certificate, LpOptions, LpProblem, LpSolution, LpStatus};
use crate::model::{ExtReal, FiniteMdp, Pair, PairValues};
use crate::reference::{BaseMeasure, KernelSource};
use crate::scalar::Scalar;
use crate::structure::{zero_value_structure, InfiniteStructure};

pub use dual::{lagrangian_dual, lagrangian_value, DualMethod, DualOptions, DualReport, DualStep};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// Pairs of the maximal structure with a positive value.
    Pair,
    /// Support of an unbounded direction of the relaxed program.
    Ray,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub criterion: String,
    pub kind: WitnessKind,
    #[serde(skip)]
    pub pairs: Vec<Pair>,
    #[serde(rename = "pairs")]
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AssumptionReport {
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

fn criterion_names<S: Scalar>(m: &FiniteMdp<S>) -> Vec<String> {
    std::iter::once("reward".to_string()).chain(m.constraints.iter().map(|c| c.name.clone())).collect()
}

fn part<S: Scalar>(h: &PairValues<S>, positive: bool) -> PairValues<S> {
    h.iter().map(|(p, v)| (*p, if positive { v.pos_part() } else { v.neg_part() })).collect()
}

/// Maximizes every criterion part over the program with balance relaxed at
/// the states of `s`; records a ray witness for each unbounded one.
fn relaxed_boundedness<S: Scalar>(
    m: &FiniteMdp<S>,
    b: &BaseMeasure<S>,
    s: &InfiniteStructure,
    positive: bool,
    lp: &LpOptions,
    report: &mut AssumptionReport,
) -> Result<(), SolveError> {
    let mut prog = BalanceProgram::new(m, &b.support, s);
    for (name, h) in criterion_names(m).into_iter().zip(m.criteria()) {
        let hp = part(h, positive);
        if hp.values().all(|v| v.is_zero()) {
            continue;
        }
        prog.set_objective(&hp);
        let sol = solve_lp(&prog.lp, lp)?;
        if let (LpStatus::Unbounded, Certificate::Unbounded { ray }) = (&sol.status, &sol.certificate) {
            let pairs: Vec<Pair> =
                prog.vars.iter().zip(ray).filter(|(_, r)| r.is_pos_tol(lp.feas_tol)).map(|(p, _)| *p).collect();
            report.pass = false;
            report.witnesses.push(Witness {
                criterion: name,
                kind: WitnessKind::Ray,
                labels: pairs.iter().map(|p| m.pair_label(*p)).collect(),
                pairs,
            });
        }
    }
    Ok(())
}

/// Finiteness of positive parts over feasible variables: no pair of the
/// maximal structure has a positive value, and the program with balance
/// relaxed on the maximal structure is bounded for every `h+`.
pub fn check_assumption_b1<S: Scalar>(
    m: &FiniteMdp<S>,
    b: &BaseMeasure<S>,
    s_max: &InfiniteStructure,
    lp: &LpOptions,
) -> Result<AssumptionReport, SolveError> {
    let mut report = AssumptionReport { pass: true, ..Default::default() };
    for (name, h) in criterion_names(m).into_iter().zip(m.criteria()) {
        let pairs: Vec<Pair> =
            s_max.pairs.iter().copied().filter(|p| h.get(p).is_some_and(|v| v.is_pos_tol(0.0))).collect();
        if !pairs.is_empty() {
            report.pass = false;
            report.witnesses.push(Witness {
                criterion: name,
                kind: WitnessKind::Pair,
                labels: pairs.iter().map(|p| m.pair_label(*p)).collect(),
                pairs,
            });
        }
    }
    relaxed_boundedness(m, b, s_max, true, lp, &mut report)?;
    Ok(report)
}

/// Sufficient check for finiteness of negative parts: the program with
/// balance relaxed on the maximal structure contains every occupation
/// measure, so boundedness of `h-` there is sound. A failure does not prove
/// the assumption fails.
pub fn check_assumption_b2<S: Scalar>(
    m: &FiniteMdp<S>,
    b: &BaseMeasure<S>,
    s_max: &InfiniteStructure,
    lp: &LpOptions,
) -> Result<AssumptionReport, SolveError> {
    let mut report = AssumptionReport { pass: true, ..Default::default() };
    relaxed_boundedness(m, b, s_max, false, lp, &mut report)?;
    if !report.pass {
        report.notes.push("sufficient condition only: a failure here does not prove the assumption fails".into());
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlaterReport<S> {
    /// Largest `t` with `eta(c_i) >= theta_i + t` for all `i`.
    pub slack: ExtReal<S>,
    pub pass: bool,
    /// Finite masses attaining the slack, when finite.
    pub point: Option<Vec<(Pair, S)>>,
    /// Reward of that point.
    pub point_reward: Option<S>,
}

impl<S: Scalar> SlaterReport<S> {
    pub fn to_json(&self) -> Value {
        json!({"slack": self.slack, "pass": self.pass})
    }
}

fn append_column<S: Scalar>(lp: &mut LpProblem<S>, name: &str, cost: S, ge: impl Fn(usize) -> S) {
    lp.var_names.push(name.to_string());
    lp.objective.push(cost);
    for r in lp.eq.iter_mut() {
        r.coeffs.push(S::zero());
    }
    for (i, r) in lp.ge.iter_mut().enumerate() {
        r.coeffs.push(ge(i));
    }
}

/// Max-min constraint slack over the feasible variables of the main
/// program. Passes iff the slack is positive; with no constraints the slack
/// is `+inf`.
pub fn check_slater<S: Scalar>(
    m: &FiniteMdp<S>,
    b: &BaseMeasure<S>,
    s_zero: &InfiniteStructure,
    lp: &LpOptions,
) -> Result<SlaterReport<S>, SolveError> {
    if m.constraints.is_empty() {
        return Ok(SlaterReport { slack: ExtReal::PosInf, pass: true, point: None, point_reward: None });
    }
    let mut prog = assemble_kp(m, b, s_zero)?;
    let n = prog.vars.len();
    prog.lp.objective = vec![S::zero(); n];
    append_column(&mut prog.lp, "t_plus", S::one(), |_| -S::one());
    append_column(&mut prog.lp, "t_minus", -S::one(), |_| S::one());
    let sol = solve_lp(&prog.lp, lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => {
            let t = sol.primal[n].clone() - sol.primal[n + 1].clone();
            let point: Vec<(Pair, S)> = prog.vars.iter().copied().zip(sol.primal[..n].iter().cloned()).collect();
            let reward = prog.coefficients(&m.reward).iter().zip(&sol.primal[..n]).fold(S::zero(), |acc, (c, x)| {
                acc + c.clone() * x.clone()
            });
            SlaterReport {
                pass: t.is_pos_tol(lp.feas_tol),
                slack: ExtReal::Finite(t),
                point: Some(point),
                point_reward: Some(reward),
            }
        }
        LpStatus::Unbounded => SlaterReport { slack: ExtReal::PosInf, pass: true, point: None, point_reward: None },
        LpStatus::Infeasible => SlaterReport { slack: ExtReal::NegInf, pass: false, point: None, point_reward: None },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PhantomVerdict {
    /// The naive program strictly exceeds the main program.
    Phantom,
    NoGap,
}

#[derive(Clone, Debug)]
pub struct NaiveReport<S> {
    pub naive: LpSolution<S>,
    pub naive_value: ExtReal<S>,
    pub kp_value: ExtReal<S>,
    pub verdict: PhantomVerdict,
    pub notes: Vec<String>,
}

impl<S: Scalar> NaiveReport<S> {
    pub fn to_json(&self) -> Value {
        json!({
            "naive_status": self.naive.status,
            "naive_value": self.naive_value,
            "kp_value": self.kp_value,
            "phantom_verdict": self.verdict,
            "notes": self.notes,
        })
    }
}

fn lp_value<S: Scalar>(sol: &LpSolution<S>) -> ExtReal<S> {
    match sol.status {
        LpStatus::Optimal => ExtReal::Finite(sol.objective.clone().expect("optimal solution has a value")),
        LpStatus::Unbounded => ExtReal::PosInf,
        LpStatus::Infeasible => ExtReal::NegInf,
    }
}

/// The same program as the main one but over every state, with the
/// zero-valued structure recomputed without the support restriction, and
/// its comparison with the main program's value.
pub fn solve_naive_program<S: Scalar>(
    m: &FiniteMdp<S>,
    kernel: &KernelSource<S>,
    lp: &LpOptions,
) -> Result<NaiveReport<S>, SolveError> {
    let prepared = prepare(m, kernel)?;
    let kp = assemble_kp(m, &prepared.base, &prepared.zero_structure)?;
    let kp_value = lp_value(&solve_lp(&kp.lp, lp)?);

    let all: BTreeSet<usize> = (0..m.n_states()).collect();
    let structure = zero_value_structure(m, &all);
    let mut prog = BalanceProgram::new(m, &all, &structure);
    prog.set_objective(&m.reward);
    prog.add_constraints(m);
    let naive = solve_lp(&prog.lp, lp)?;
    let naive_value = lp_value(&naive);

    let verdict = if naive_value > kp_value { PhantomVerdict::Phantom } else { PhantomVerdict::NoGap };
    let mut notes = Vec::new();
    if verdict == PhantomVerdict::Phantom {
        notes.push("the characteristic equation admits solutions that no policy generates".to_string());
    } else {
        notes.push(
            "no gap on this finite model; phantom families fed from an infinite unreachable chain do not survive truncation"
                .to_string(),
        );
    }
    Ok(NaiveReport { naive, naive_value, kp_value, verdict, notes })
}

/// Diagnostic bundle for the `check` command.
#[derive(Clone, Debug)]
pub struct CheckReport<S> {
    pub prepared: Prepared<S>,
    pub b1: AssumptionReport,
    pub b2: AssumptionReport,
    pub slater: Option<SlaterReport<S>>,
}

pub fn run_checks<S: Scalar>(
    m: &FiniteMdp<S>,
    kernel: &KernelSource<S>,
    lp: &LpOptions,
) -> Result<CheckReport<S>, SolveError> {
    let prepared = prepare(m, kernel)?;
    let b1 = check_assumption_b1(m, &prepared.base, &prepared.max_structure, lp)?;
    let b2 = check_assumption_b2(m, &prepared.base, &prepared.max_structure, lp)?;
    let slater = if b1.pass { Some(check_slater(m, &prepared.base, &prepared.zero_structure, lp)?) } else { None };
    Ok(CheckReport { prepared, b1, b2, slater })
}

impl<S: Scalar> CheckReport<S> {
    pub fn pass(&self) -> bool {
        self.b1.pass && self.b2.pass && self.prepared.support.is_closed()
    }

    pub fn to_json(&self, m: &FiniteMdp<S>) -> Value {
        json!({
            "mode": S::MODE,
            "base_measure": self.prepared.base.to_json(m),
            "support_closure": self.prepared.support,
            "max_structure": self.prepared.max_structure.to_json(m),
            "zero_structure": self.prepared.zero_structure.to_json(m),
            "b1": self.b1,
            "b2": self.b2,
            "slater_slack": self.slater.as_ref().map(|s| s.slack.clone()),
            "slater_pass": self.slater.as_ref().map(|s| s.pass),
        })
    }
}
