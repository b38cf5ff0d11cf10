//! The measure program over feasible variables, reduced to a finite LP.
//!
//! A feasible variable is a finite mass `m(x,a)` on admissible pairs inside
//! `supp p` together with an infinite structure `(I, C)`. Pairs in `C` carry
//! `+inf`; the characteristic equation `eta_X = nu + eta Q` is imposed as a
//! linear balance row at every state of `supp p` outside `I` and holds
//! trivially (`inf = inf`) on `I`.
//!
//! The main program fixes `(I, C)` to the maximal zero-valued structure: an
//! infinite pair with nonzero reward or constraint value either breaks the
//! finiteness assumption or sends a criterion to `-inf`. Enlarging `I` only
//! drops balance rows, so the maximal structure is never worse than a
//! smaller one.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use crate::diagnostics::{
    check_assumption_b1, check_assumption_b2, check_slater, lagrangian_dual, AssumptionReport, DualOptions,
    DualReport, SlaterReport,
};
use crate::error::SolveError;
use crate::lp::{solve_lp, LpOptions, LpProblem, LpSolution, LpStatus};
use crate::model::{integrate, validate_model, ExtReal, FiniteMdp, OccupationMeasure, Pair, PairValues, StationaryPolicy};
use crate::reference::{
    check_support_closure, compute_base_measure, resolve_kernel, BaseMeasure, KernelSource, ReferenceKernel,
    SupportReport,
};
use crate::scalar::{sum, Scalar};
use crate::structure::{max_sustainable_structure, zero_value_structure, InfiniteStructure};
use crate::verify::{check_dominance, DominanceReport};

/// Finite encoding of a feasible variable and its measure.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleVariable<S> {
    /// Finite part of the measure on pairs.
    pub finite_mass: BTreeMap<Pair, S>,
    pub structure: InfiniteStructure,
    /// Normalized weights of the infinite part on each state of `I`.
    pub infinite_weights: BTreeMap<Pair, S>,
}

impl<S: Scalar> FeasibleVariable<S> {
    /// Variable with uniform infinite weights over the pairs of `structure`.
    pub fn with_uniform_weights(finite_mass: BTreeMap<Pair, S>, structure: InfiniteStructure) -> Self {
        let mut infinite_weights = BTreeMap::new();
        for &x in &structure.states {
            let at: Vec<Pair> = structure.pairs.iter().filter(|p| p.state == x).copied().collect();
            let w = S::one() / S::from_i64(at.len() as i64);
            for p in at {
                infinite_weights.insert(p, w.clone());
            }
        }
        Self { finite_mass, structure, infinite_weights }
    }

    pub fn mass(&self, p: Pair) -> ExtReal<S> {
        if self.structure.pairs.contains(&p) {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(self.finite_mass.get(&p).cloned().unwrap_or_else(S::zero))
        }
    }

    /// The measure as an extended-valued table on pairs. A pair that is
    /// both infinite and has finite mass is infinite.
    pub fn eta(&self) -> OccupationMeasure<S> {
        let mut mass: BTreeMap<Pair, ExtReal<S>> =
            self.finite_mass.iter().map(|(p, v)| (*p, ExtReal::Finite(v.clone()))).collect();
        for p in &self.structure.pairs {
            mass.insert(*p, ExtReal::PosInf);
        }
        OccupationMeasure { mass }
    }

    /// Characteristic-equation residual `sum_a m(x,a) - nu(x) - (m Q)(x)`
    /// at every state outside `I`.
    pub fn residuals(&self, m: &FiniteMdp<S>) -> Vec<(usize, S)> {
        let n = m.n_states();
        let mut lhs = vec![S::zero(); n];
        let mut inflow = vec![S::zero(); n];
        for (p, v) in &self.finite_mass {
            if v.is_zero() {
                continue;
            }
            lhs[p.state] = lhs[p.state].clone() + v.clone();
            for (y, q) in m.row(*p) {
                inflow[*y] = inflow[*y].clone() + q.clone() * v.clone();
            }
        }
        (0..n)
            .filter(|x| !self.structure.contains_state(*x))
            .map(|x| (x, lhs[x].clone() - m.initial[x].clone() - inflow[x].clone()))
            .collect()
    }

    /// Every violated feasibility condition relative to `supp`; empty when
    /// feasible. `tol` only matters in float mode.
    pub fn violations(&self, m: &FiniteMdp<S>, supp: &BTreeSet<usize>, tol: f64) -> Vec<String> {
        let mut out = self.structure.violations(m, supp);
        for (p, v) in &self.finite_mass {
            if v.is_neg_tol(tol) {
                out.push(format!("negative mass on {}", m.pair_label(*p)));
            }
            if !v.is_zero_tol(tol) && !supp.contains(&p.state) {
                out.push(format!("mass on {} outside supp p", m.pair_label(*p)));
            }
        }
        for (x, r) in self.residuals(m) {
            if !r.is_zero_tol(tol) {
                out.push(format!("characteristic equation fails at `{}` (residual {})", m.states[x], r.render()));
            }
        }
        for &x in &self.structure.states {
            let w: Vec<&S> = self.infinite_weights.iter().filter(|(p, _)| p.state == x).map(|(_, w)| w).collect();
            if w.iter().any(|v| !v.is_pos_tol(0.0)) || !(sum(w.into_iter().cloned()) - S::one()).is_zero_tol(tol) {
                out.push(format!("infinite weights at `{}` are not a positive distribution", m.states[x]));
            }
        }
        out
    }

    /// `alpha * self + (1 - alpha) * other`, with the union structure.
    pub fn mix(&self, other: &Self, alpha: &S) -> Self {
        let beta = S::one() - alpha.clone();
        let keys: BTreeSet<Pair> = self.finite_mass.keys().chain(other.finite_mass.keys()).copied().collect();
        let get = |v: &Self, p: &Pair| v.finite_mass.get(p).cloned().unwrap_or_else(S::zero);
        let finite_mass =
            keys.iter().map(|p| (*p, alpha.clone() * get(self, p) + beta.clone() * get(other, p))).collect();
        Self::with_uniform_weights(finite_mass, self.structure.union(&other.structure))
    }

    /// Variable reproducing the occupation measure of a stationary policy:
    /// finite visits become finite mass, states visited infinitely often
    /// form `I` with the policy's support as `C`.
    pub fn from_policy(m: &FiniteMdp<S>, policy: &StationaryPolicy<S>, occupation: &OccupationMeasure<S>) -> Self {
        let marginal = occupation.marginal(m.n_states());
        let states: BTreeSet<usize> =
            marginal.iter().enumerate().filter(|(_, v)| **v == ExtReal::PosInf).map(|(x, _)| x).collect();
        let mut finite_mass = BTreeMap::new();
        let mut pairs = BTreeSet::new();
        let mut infinite_weights = BTreeMap::new();
        for p in m.pairs() {
            let w = policy.prob(m, p);
            if states.contains(&p.state) {
                if w.is_pos_tol(0.0) {
                    pairs.insert(p);
                    infinite_weights.insert(p, w);
                }
            } else if let ExtReal::Finite(v) = occupation.get(p) {
                finite_mass.insert(p, v);
            }
        }
        Self { finite_mass, structure: InfiniteStructure { states, pairs }, infinite_weights }
    }
}

/// `eta(h) = eta(h+) - eta(h-)` with `0 * inf = 0`.
pub fn eta_evaluate<S: Scalar>(v: &FeasibleVariable<S>, h: &PairValues<S>) -> ExtReal<S> {
    let value = |p: &Pair| h.get(p).cloned().unwrap_or_else(S::zero);
    let finite = v
        .finite_mass
        .iter()
        .filter(|(p, _)| !v.structure.pairs.contains(p))
        .map(|(p, m)| (ExtReal::Finite(m.clone()), value(p)));
    let infinite = v.structure.pairs.iter().map(|p| (ExtReal::PosInf, value(p)));
    integrate(finite.chain(infinite))
}

/// The induced stationary policy: infinite weights on `I`, normalized
/// finite mass elsewhere, and the fallback action where there is no mass.
pub fn extract_policy<S: Scalar>(m: &FiniteMdp<S>, v: &FeasibleVariable<S>) -> StationaryPolicy<S> {
    let rows = m
        .admissible
        .iter()
        .enumerate()
        .map(|(x, acts)| {
            let source = |a: usize| -> S {
                let p = Pair::new(x, a);
                let raw = if v.structure.contains_state(x) {
                    v.infinite_weights.get(&p).cloned()
                } else {
                    v.finite_mass.get(&p).cloned()
                };
                raw.map(|w| w.pos_part()).unwrap_or_else(S::zero)
            };
            let weights: Vec<S> = acts.iter().map(|&a| source(a)).collect();
            let total = sum(weights.iter().cloned());
            if total.is_pos_tol(0.0) {
                weights.into_iter().map(|w| w / total.clone()).collect()
            } else {
                acts.iter().map(|&a| if a == m.fallback[x] { S::one() } else { S::zero() }).collect()
            }
        })
        .collect();
    StationaryPolicy { rows }
}

/// A finite balance program: variables are the admissible pairs inside a
/// support set; balance rows sit at support states outside `structure`.
#[derive(Clone, Debug)]
pub struct BalanceProgram<S> {
    pub lp: LpProblem<S>,
    pub vars: Vec<Pair>,
    pub balance_states: Vec<usize>,
    pub structure: InfiniteStructure,
}

impl<S: Scalar> BalanceProgram<S> {
    /// Variables, balance rows and no objective.
    pub fn new(m: &FiniteMdp<S>, support: &BTreeSet<usize>, structure: &InfiniteStructure) -> Self {
        let vars: Vec<Pair> = m.pairs().into_iter().filter(|p| support.contains(&p.state)).collect();
        let index: BTreeMap<Pair, usize> = vars.iter().enumerate().map(|(j, p)| (*p, j)).collect();
        let mut lp = LpProblem::new(vars.len());
        lp.var_names = vars.iter().map(|p| format!("m[{},{}]", m.states[p.state], m.actions[p.action])).collect();
        let balance_states: Vec<usize> = support.iter().copied().filter(|x| !structure.contains_state(*x)).collect();
        for &x in &balance_states {
            let mut row = vec![S::zero(); vars.len()];
            for &a in &m.admissible[x] {
                row[index[&Pair::new(x, a)]] = S::one();
            }
            for (j, p) in vars.iter().enumerate() {
                let q = m.q(*p, x);
                if !q.is_zero() {
                    row[j] = row[j].clone() - q;
                }
            }
            lp.add_eq(format!("balance[{}]", m.states[x]), row, m.initial[x].clone());
        }
        Self { lp, vars, balance_states, structure: structure.clone() }
    }

    pub fn coefficients(&self, h: &PairValues<S>) -> Vec<S> {
        self.vars.iter().map(|p| h.get(p).cloned().unwrap_or_else(S::zero)).collect()
    }

    pub fn set_objective(&mut self, h: &PairValues<S>) {
        self.lp.objective = self.coefficients(h);
    }

    /// Adds `h(m) >= limit` rows for every constraint of the model.
    pub fn add_constraints(&mut self, m: &FiniteMdp<S>) {
        for c in &m.constraints {
            let coeffs = self.coefficients(&c.values);
            self.lp.add_ge(c.name.clone(), coeffs, c.limit.clone());
        }
    }

    pub fn variable(&self, primal: &[S]) -> FeasibleVariable<S> {
        let finite_mass = self.vars.iter().zip(primal).map(|(p, v)| (*p, v.clone())).collect();
        FeasibleVariable::with_uniform_weights(finite_mass, self.structure.clone())
    }
}

/// Assembles the constrained program for a zero-valued structure.
pub fn assemble_kp<S: Scalar>(
    m: &FiniteMdp<S>,
    b: &BaseMeasure<S>,
    s: &InfiniteStructure,
) -> Result<BalanceProgram<S>, SolveError> {
    for p in &s.pairs {
        if m.criteria().iter().any(|h| h.get(p).is_some_and(|v| !v.is_zero())) {
            return Err(SolveError::Stage {
                stage: "assemble",
                message: format!("infinite pair {} has a nonzero reward or constraint value", m.pair_label(*p)),
            });
        }
    }
    let mut prog = BalanceProgram::new(m, &b.support, s);
    prog.set_objective(&m.reward);
    prog.add_constraints(m);
    Ok(prog)
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions<S> {
    pub kernel: KernelSource<S>,
    pub lp: LpOptions,
    /// Float-mode comparison tolerance for feasibility and dominance checks.
    pub tol: f64,
    /// Run the Lagrangian dual after solving.
    pub dual: Option<DualOptions>,
}

impl<S: Scalar> SolveOptions<S> {
    pub fn new() -> Self {
        Self { kernel: KernelSource::Auto, lp: LpOptions::default(), tol: 1e-9, dual: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// The finiteness assumption on positive parts fails; the program value
    /// is not defined.
    AssumptionViolated,
}

/// Everything computed before the main LP.
#[derive(Clone, Debug)]
pub struct Prepared<S> {
    pub kernel: ReferenceKernel<S>,
    pub base: BaseMeasure<S>,
    pub support: SupportReport,
    pub max_structure: InfiniteStructure,
    pub zero_structure: InfiniteStructure,
}

pub fn prepare<S: Scalar>(m: &FiniteMdp<S>, kernel: &KernelSource<S>) -> Result<Prepared<S>, SolveError> {
    let report = validate_model(m);
    if !report.is_valid() {
        return Err(crate::error::ModelError::Validation(report.violations).into());
    }
    let kernel = resolve_kernel(m, kernel)?;
    let base = compute_base_measure(m, &kernel)?;
    let support = check_support_closure(m, &base);
    if !support.is_closed() {
        return Err(SolveError::Stage { stage: "support", message: support.violations.join("; ") });
    }
    let max_structure = max_sustainable_structure(m, &base.support);
    let zero_structure = zero_value_structure(m, &base.support);
    Ok(Prepared { kernel, base, support, max_structure, zero_structure })
}

#[derive(Clone, Debug)]
pub struct SolveReport<S> {
    pub status: SolveStatus,
    pub value: ExtReal<S>,
    pub variable: Option<FeasibleVariable<S>>,
    pub policy: Option<StationaryPolicy<S>>,
    pub constraint_values: Vec<ExtReal<S>>,
    pub prepared: Prepared<S>,
    pub b1: AssumptionReport,
    pub b2: AssumptionReport,
    pub slater: Option<SlaterReport<S>>,
    pub dominance: Option<DominanceReport<S>>,
    pub lp: Option<LpSolution<S>>,
    pub dual: Option<DualReport<S>>,
    pub warnings: Vec<String>,
    pub elapsed_ms: f64,
}

/// Wall clock where one exists; wasm32 without a host clock reports zero.
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed_ms(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed().as_secs_f64() * 1e3;
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}

/// Full pipeline: reference measure, structures, assumption checks, the
/// constrained LP, policy extraction, dominance verification and optionally
/// the Lagrangian dual.
pub fn solve_constrained<S: Scalar>(m: &FiniteMdp<S>, opts: &SolveOptions<S>) -> Result<SolveReport<S>, SolveError> {
    let start = Stopwatch::start();
    let prepared = prepare(m, &opts.kernel)?;
    let b1 = check_assumption_b1(m, &prepared.base, &prepared.max_structure, &opts.lp)?;
    let b2 = check_assumption_b2(m, &prepared.base, &prepared.max_structure, &opts.lp)?;
    let mut warnings = Vec::new();
    if !b2.pass {
        warnings.push("negative-part finiteness could not be certified (conservative check)".to_string());
    }

    let mut report = SolveReport {
        status: SolveStatus::AssumptionViolated,
        value: ExtReal::NegInf,
        variable: None,
        policy: None,
        constraint_values: Vec::new(),
        prepared,
        b1,
        b2,
        slater: None,
        dominance: None,
        lp: None,
        dual: None,
        warnings,
        elapsed_ms: 0.0,
    };
    if !report.b1.pass {
        report.warnings.push("positive parts are not bounded over feasible variables; program value undefined".into());
        report.elapsed_ms = start.elapsed_ms();
        return Ok(report);
    }

    let slater = check_slater(m, &report.prepared.base, &report.prepared.zero_structure, &opts.lp)?;
    if !slater.pass && !m.constraints.is_empty() {
        report.warnings.push(format!(
            "Slater condition fails (max-min slack {}); strong duality is not guaranteed",
            slater.slack.render()
        ));
    }
    report.slater = Some(slater);

    let program = assemble_kp(m, &report.prepared.base, &report.prepared.zero_structure)?;
    let sol = solve_lp(&program.lp, &opts.lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let v = program.variable(&sol.primal);
            report.status = SolveStatus::Optimal;
            report.value = eta_evaluate(&v, &m.reward);
            report.constraint_values = m.constraints.iter().map(|c| eta_evaluate(&v, &c.values)).collect();
            report.policy = Some(extract_policy(m, &v));
            report.dominance = Some(check_dominance(m, &v, opts.tol));
            report.variable = Some(v);
        }
        LpStatus::Infeasible => {
            report.status = SolveStatus::Infeasible;
            report.value = ExtReal::NegInf;
        }
        LpStatus::Unbounded => {
            report.status = SolveStatus::AssumptionViolated;
            report.value = ExtReal::PosInf;
            report.warnings.push("assembled program is unbounded: finiteness assumption violated".into());
        }
    }
    report.lp = Some(sol);

    if let Some(dopts) = &opts.dual {
        if report.status != SolveStatus::AssumptionViolated {
            report.dual = Some(lagrangian_dual(m, &report.prepared, &report.value, report.slater.as_ref(), dopts, &opts.lp)?);
        }
    }
    report.elapsed_ms = start.elapsed_ms();
    Ok(report)
}

/// `{state: {action: probability}}`, the format read by `parse_policy`.
pub fn policy_json<S: Scalar>(m: &FiniteMdp<S>, p: &StationaryPolicy<S>) -> Value {
    let mut rows = Map::new();
    for (x, acts) in m.admissible.iter().enumerate() {
        let mut row = Map::new();
        for (k, &a) in acts.iter().enumerate() {
            row.insert(m.actions[a].clone(), Value::String(p.rows[x][k].render()));
        }
        rows.insert(m.states[x].clone(), Value::Object(row));
    }
    Value::Object(rows)
}

impl<S: Scalar> SolveReport<S> {
    /// Machine-readable report. Deterministic for a given model and
    /// options; `elapsed_ms` is only included when `timings` is set.
    pub fn to_json(&self, m: &FiniteMdp<S>, timings: bool) -> Value {
        let mut out = json!({
            "mode": S::MODE,
            "status": self.status,
            "value": self.value,
            "constraint_values": m.constraints.iter().zip(&self.constraint_values)
                .map(|(c, v)| json!({"name": c.name, "value": v, "limit": c.limit.render()}))
                .collect::<Vec<_>>(),
            "policy": self.policy.as_ref().map(|p| policy_json(m, p)),
            "base_measure": self.prepared.base.to_json(m),
            "support_closure": self.prepared.support,
            "max_structure": self.prepared.max_structure.to_json(m),
            "zero_structure": self.prepared.zero_structure.to_json(m),
            "b1": self.b1,
            "b2": self.b2,
            "slater": self.slater.as_ref().map(|s| s.to_json()),
            "dominance": self.dominance.as_ref().map(|d| d.to_json(m)),
            "lp_iterations": self.lp.as_ref().map(|l| l.iterations),
            "dual": self.dual.as_ref().map(|d| d.to_json()),
            "warnings": self.warnings,
            "notes": ["finite state and action spaces: continuity-compactness conditions (W) and (S) hold trivially"],
        });
        if let Some(v) = &self.variable {
            let mass: Map<String, Value> = v
                .finite_mass
                .iter()
                .filter(|(_, x)| !x.is_zero())
                .map(|(p, x)| (m.pair_label(*p), Value::String(x.render())))
                .collect();
            out["finite_mass"] = Value::Object(mass);
        }
        if timings {
            out["elapsed_ms"] = json!(self.elapsed_ms);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_example_model, build_phantom_demo, ExampleOptions};
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn example(n: usize, theta: Rational) -> (FiniteMdp<Rational>, ReferenceKernel<Rational>) {
        let mut o = ExampleOptions::new(n, theta);
        o.handmade_kernel = true;
        let (m, k) = build_example_model(&o).unwrap();
        (m, k.unwrap())
    }

    #[test]
    fn balance_dropped_only_at_cemetery() {
        let (m, k) = example(60, q(1, 4));
        let prep = prepare(&m, &KernelSource::Supplied(k)).unwrap();
        let prog = assemble_kp(&m, &prep.base, &prep.zero_structure).unwrap();
        assert_eq!(prog.vars.len(), m.pairs().len());
        assert_eq!(prog.vars.len(), 62);
        assert_eq!(prog.balance_states.len(), 60);
        assert!(!prog.balance_states.contains(&m.state_index("D").unwrap()));
    }

    #[test]
    fn state_one_masses_sum_to_half() {
        // Every feasible point has m(1,a) + m(1,b) = 1/2; sweep z = m(1,a).
        let (m, k) = example(12, q(-10, 1));
        let prep = prepare(&m, &KernelSource::Supplied(k)).unwrap();
        let mut prog = assemble_kp(&m, &prep.base, &prep.zero_structure).unwrap();
        let one = m.state_index("1").unwrap();
        let ja = prog.vars.iter().position(|p| *p == Pair::new(one, 0)).unwrap();
        let jb = prog.vars.iter().position(|p| *p == Pair::new(one, 1)).unwrap();
        for z in [q(0, 1), q(1, 8), q(1, 2)] {
            let mut row = vec![q(0, 1); prog.vars.len()];
            row[ja] = q(1, 1);
            prog.lp.eq.truncate(prog.balance_states.len());
            prog.lp.add_eq("fix", row, z.clone());
            let s = solve_lp(&prog.lp, &LpOptions::default()).unwrap();
            assert_eq!(s.status, LpStatus::Optimal);
            assert_eq!(s.primal[ja].clone() + s.primal[jb].clone(), q(1, 2));
        }
        let mut row = vec![q(0, 1); prog.vars.len()];
        row[ja] = q(1, 1);
        prog.lp.eq.truncate(prog.balance_states.len());
        prog.lp.add_eq("fix", row, q(3, 5));
        assert_eq!(solve_lp(&prog.lp, &LpOptions::default()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn phantom_demo_has_no_cycle_variables() {
        let m = build_phantom_demo::<Rational>();
        let prep = prepare(&m, &KernelSource::Auto).unwrap();
        let prog = assemble_kp(&m, &prep.base, &prep.zero_structure).unwrap();
        assert!(prog.vars.iter().all(|p| p.state == 0));
    }

    #[test]
    fn eta_of_optimum_and_zero_function() {
        let (m, k) = example(60, q(1, 4));
        let mut opts = SolveOptions::new();
        opts.kernel = KernelSource::Supplied(k);
        let r = solve_constrained(&m, &opts).unwrap();
        let v = r.variable.unwrap();
        let c = eta_evaluate(&v, &m.constraints[0].values);
        assert!((c.to_f64() - 0.25).abs() < 1e-15);
        let zero: PairValues<Rational> = m.pairs().into_iter().map(|p| (p, q(0, 1))).collect();
        assert!(!v.structure.pairs.is_empty());
        assert_eq!(eta_evaluate(&v, &zero), ExtReal::Finite(q(0, 1)));
        assert!(v.violations(&m, &r.prepared.base.support, 0.0).is_empty());
        assert!(v.residuals(&m).iter().all(|(_, r)| r == &q(0, 1)));
    }

    #[test]
    fn zero_mass_transient_state_uses_fallback() {
        let (m, k) = example(6, q(1, 2));
        let mut opts = SolveOptions::new();
        opts.kernel = KernelSource::Supplied(k);
        let r = solve_constrained(&m, &opts).unwrap();
        let pol = r.policy.unwrap();
        let v = r.variable.unwrap();
        let four = m.state_index("4").unwrap();
        assert_eq!(v.finite_mass[&Pair::new(four, 0)], q(0, 1));
        assert_eq!(pol.rows[four], vec![q(1, 1)]);
        let one = m.state_index("1").unwrap();
        assert_eq!(pol.rows[one], vec![q(0, 1), q(1, 1)]);
    }

    #[test]
    fn nonzero_structure_is_rejected_by_assembly() {
        let (m, k) = example(6, q(1, 4));
        let prep = prepare(&m, &KernelSource::Supplied(k)).unwrap();
        let mut s = prep.zero_structure.clone();
        let two = m.state_index("2").unwrap();
        s.pairs.insert(Pair::new(two, 0));
        assert!(assemble_kp(&m, &prep.base, &s).is_err());
    }

    #[test]
    fn convex_combination_stays_feasible_and_eta_is_affine() {
        let (m, k) = example(10, q(1, 4));
        let prep = prepare(&m, &KernelSource::Supplied(k)).unwrap();
        let mut prog = assemble_kp(&m, &prep.base, &prep.zero_structure).unwrap();
        let hi = prog.variable(&solve_lp(&prog.lp, &LpOptions::default()).unwrap().primal);
        prog.lp.objective = prog.lp.objective.iter().map(|c| -c.clone()).collect();
        let lo = prog.variable(&solve_lp(&prog.lp, &LpOptions::default()).unwrap().primal);
        for alpha in [q(0, 1), q(1, 3), q(1, 2), q(1, 1)] {
            let mix = hi.mix(&lo, &alpha);
            assert!(mix.violations(&m, &prep.base.support, 0.0).is_empty());
            for h in m.criteria() {
                let (a, b, c) = (eta_evaluate(&hi, h), eta_evaluate(&lo, h), eta_evaluate(&mix, h));
                let expect = alpha.clone() * a.finite().unwrap().clone()
                    + (q(1, 1) - alpha.clone()) * b.finite().unwrap().clone();
                assert_eq!(c, ExtReal::Finite(expect));
            }
        }
    }
}
