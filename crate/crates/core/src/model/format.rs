//! JSON model files.
//!
//! ```json
//! {
//!   "states": ["1", "2", "D"],
//!   "actions": ["a", "b"],
//!   "admissible": {"1": ["a", "b"], "2": ["a"], "D": ["a"]},
//!   "transitions": [{"from": "1", "action": "a", "to": "2", "prob": "1/2"}, ...],
//!   "reward": {"1": {"a": "1/2", "b": "1/2"}, ...},
//!   "constraints": [{"name": "c1", "values": {"1": {"a": "-1/18"}, ...}, "limit": "1/4"}],
//!   "initial": {"1": "1/2", "D": "1/2"},
//!   "reference_kernel": {"1": {"2": "1/3", "3": "1/3", "D": "1/3"}, ...},
//!   "fallback": {"1": "a"}
//! }
//! ```
//!
//! Numbers are strings holding exact fractions (`"-1/18"`) or decimals
//! (`"0.25"`). In rational mode a file may not mix the two notations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{validate_model, Constraint, FiniteMdp, Pair, PairValues, StationaryPolicy};
use crate::error::ModelError;
use crate::reference::ReferenceKernel;
use crate::scalar::{classify_literal, LiteralKind, Mode, Scalar};

type Nested = BTreeMap<String, BTreeMap<String, Literal>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Literal {
    Text(String),
    Number(serde_json::Number),
}

impl Literal {
    fn text(&self) -> String {
        match self {
            Literal::Text(s) => s.clone(),
            Literal::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntry {
    from: String,
    action: String,
    to: String,
    prob: Literal,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintEntry {
    name: String,
    values: Nested,
    limit: Literal,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    states: Vec<String>,
    actions: Vec<String>,
    admissible: BTreeMap<String, Vec<String>>,
    transitions: Vec<TransitionEntry>,
    reward: Nested,
    #[serde(default)]
    constraints: Vec<ConstraintEntry>,
    initial: BTreeMap<String, Literal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference_kernel: Option<Nested>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fallback: Option<BTreeMap<String, String>>,
}

struct Resolver<'a> {
    states: &'a [String],
    actions: &'a [String],
    kinds: Vec<(String, LiteralKind)>,
}

impl Resolver<'_> {
    fn state(&self, field: &str, id: &str) -> Result<usize, ModelError> {
        self.states
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| ModelError::field(field, format!("unknown state `{id}`")))
    }

    fn action(&self, field: &str, id: &str) -> Result<usize, ModelError> {
        self.actions
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| ModelError::field(field, format!("unknown action `{id}`")))
    }

    fn number<S: Scalar>(&mut self, field: &str, lit: &Literal) -> Result<S, ModelError> {
        let text = lit.text();
        let kind = classify_literal(&text).map_err(|e| ModelError::field(field, e.to_string()))?;
        self.kinds.push((field.to_string(), kind));
        S::parse_literal(&text).map_err(|e| ModelError::field(field, e.to_string()))
    }

    fn pair_values<S: Scalar>(&mut self, field: &str, nested: &Nested) -> Result<PairValues<S>, ModelError> {
        let mut out = BTreeMap::new();
        for (x, row) in nested {
            let xi = self.state(field, x)?;
            for (a, lit) in row {
                let f = format!("{field}[{x}][{a}]");
                let ai = self.action(&f, a)?;
                out.insert(Pair::new(xi, ai), self.number(&f, lit)?);
            }
        }
        Ok(out)
    }
}

/// Parses and validates a model file.
pub fn load_model_str<S: Scalar>(text: &str) -> Result<FiniteMdp<S>, ModelError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let m = from_file::<S>(&file)?;
    let report = validate_model(&m);
    if !report.is_valid() {
        return Err(ModelError::Validation(report.violations));
    }
    Ok(m)
}

/// Parses a stationary policy `{state: {action: probability}}`. A solve
/// report is accepted too, in which case its `policy` field is used. States
/// left out play their fallback action.
pub fn parse_policy<S: Scalar>(m: &FiniteMdp<S>, text: &str) -> Result<StationaryPolicy<S>, ModelError> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Some(p) = value.get("policy").cloned() {
        value = p;
    }
    let rows: Nested = serde_json::from_value(value).map_err(|e| ModelError::field("policy", e.to_string()))?;
    let mut resolver = Resolver { states: &m.states, actions: &m.actions, kinds: Vec::new() };
    let mut policy = StationaryPolicy::deterministic(m, &m.fallback);
    for (x, row) in &rows {
        let xi = resolver.state("policy", x)?;
        let mut probs = vec![S::zero(); m.admissible[xi].len()];
        for (a, lit) in row {
            let field = format!("policy[{x}][{a}]");
            let ai = resolver.action(&field, a)?;
            let k = m.admissible[xi]
                .iter()
                .position(|&b| b == ai)
                .ok_or_else(|| ModelError::field(&field, format!("action `{a}` is not admissible at `{x}`")))?;
            probs[k] = resolver.number(&field, lit)?;
        }
        policy.rows[xi] = probs;
    }
    let problems = policy.check(m);
    if !problems.is_empty() {
        return Err(ModelError::field("policy", problems.join("; ")));
    }
    Ok(policy)
}

/// Reads a model file from disk.
pub fn load_model<S: Scalar>(path: &std::path::Path) -> Result<FiniteMdp<S>, ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::field("<file>", format!("{}: {e}", path.display())))?;
    load_model_str(&text)
}

fn from_file<S: Scalar>(f: &ModelFile) -> Result<FiniteMdp<S>, ModelError> {
    let mut r = Resolver { states: &f.states, actions: &f.actions, kinds: Vec::new() };
    let n = f.states.len();

    let mut admissible = vec![Vec::new(); n];
    for (x, acts) in &f.admissible {
        let xi = r.state("admissible", x)?;
        for a in acts {
            admissible[xi].push(r.action(&format!("admissible[{x}]"), a)?);
        }
    }

    let mut transition: BTreeMap<Pair, Vec<(usize, S)>> = BTreeMap::new();
    for (i, t) in f.transitions.iter().enumerate() {
        let field = format!("transitions[{i}]");
        let p = Pair::new(r.state(&field, &t.from)?, r.action(&field, &t.action)?);
        let y = r.state(&field, &t.to)?;
        let q = r.number(&format!("{field}.prob"), &t.prob)?;
        transition.entry(p).or_default().push((y, q));
    }

    let reward = r.pair_values("reward", &f.reward)?;
    let mut constraints = Vec::new();
    for c in &f.constraints {
        let field = format!("constraints[{}]", c.name);
        let values = r.pair_values(&field, &c.values)?;
        let limit = r.number(&format!("{field}.limit"), &c.limit)?;
        constraints.push(Constraint { name: c.name.clone(), values, limit });
    }

    let mut initial = vec![S::zero(); n];
    for (x, lit) in &f.initial {
        let xi = r.state("initial", x)?;
        initial[xi] = r.number(&format!("initial[{x}]"), lit)?;
    }

    let reference_kernel = match &f.reference_kernel {
        None => None,
        Some(nested) => {
            let mut rows = vec![vec![S::zero(); n]; n];
            for (x, row) in nested {
                let xi = r.state("reference_kernel", x)?;
                for (y, lit) in row {
                    let yi = r.state(&format!("reference_kernel[{x}]"), y)?;
                    rows[xi][yi] = r.number(&format!("reference_kernel[{x}][{y}]"), lit)?;
                }
            }
            Some(ReferenceKernel { rows })
        }
    };

    let mut fallback: Vec<usize> = admissible.iter().map(|a| a.first().copied().unwrap_or(usize::MAX)).collect();
    if let Some(fb) = &f.fallback {
        for (x, a) in fb {
            let xi = r.state("fallback", x)?;
            fallback[xi] = r.action(&format!("fallback[{x}]"), a)?;
        }
    }

    if S::MODE == Mode::Rational {
        let frac = r.kinds.iter().find(|(_, k)| *k == LiteralKind::Fraction);
        let dec = r.kinds.iter().find(|(_, k)| *k == LiteralKind::Decimal);
        if let (Some((ff, _)), Some((df, _))) = (frac, dec) {
            return Err(ModelError::field(
                df.clone(),
                format!("decimal literal mixed with fraction literals (first fraction at {ff}); rational mode requires one notation"),
            ));
        }
    }

    Ok(FiniteMdp {
        states: f.states.clone(),
        actions: f.actions.clone(),
        admissible,
        transition,
        reward,
        constraints,
        initial,
        fallback,
        reference_kernel,
    })
}

fn nested<S: Scalar>(m: &FiniteMdp<S>, values: &PairValues<S>) -> Nested {
    let mut out: Nested = BTreeMap::new();
    for (p, v) in values {
        out.entry(m.states[p.state].clone())
            .or_default()
            .insert(m.actions[p.action].clone(), Literal::Text(v.render()));
    }
    out
}

/// Renders a model as a JSON model file. `load_model_str` inverts it.
pub fn serialize_model<S: Scalar>(m: &FiniteMdp<S>) -> String {
    let file = ModelFile {
        states: m.states.clone(),
        actions: m.actions.clone(),
        admissible: m
            .admissible
            .iter()
            .enumerate()
            .map(|(x, acts)| (m.states[x].clone(), acts.iter().map(|&a| m.actions[a].clone()).collect()))
            .collect(),
        transitions: m
            .transition
            .iter()
            .flat_map(|(p, row)| {
                row.iter().map(move |(y, q)| TransitionEntry {
                    from: m.states[p.state].clone(),
                    action: m.actions[p.action].clone(),
                    to: m.states[*y].clone(),
                    prob: Literal::Text(q.render()),
                })
            })
            .collect(),
        reward: nested(m, &m.reward),
        constraints: m
            .constraints
            .iter()
            .map(|c| ConstraintEntry {
                name: c.name.clone(),
                values: nested(m, &c.values),
                limit: Literal::Text(c.limit.render()),
            })
            .collect(),
        initial: m
            .initial
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(x, v)| (m.states[x].clone(), Literal::Text(v.render())))
            .collect(),
        reference_kernel: m.reference_kernel.as_ref().map(|k| {
            k.rows
                .iter()
                .enumerate()
                .map(|(x, row)| {
                    let cells = row
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| !v.is_zero())
                        .map(|(y, v)| (m.states[y].clone(), Literal::Text(v.render())))
                        .collect();
                    (m.states[x].clone(), cells)
                })
                .collect()
        }),
        fallback: Some(
            m.fallback
                .iter()
                .enumerate()
                .map(|(x, &a)| (m.states[x].clone(), m.actions[a].clone()))
                .collect(),
        ),
    };
    serde_json::to_string_pretty(&file).expect("model file serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    const ABSORBING: &str = r#"{
        "states": ["s"], "actions": ["a"],
        "admissible": {"s": ["a"]},
        "transitions": [{"from": "s", "action": "a", "to": "s", "prob": "1"}],
        "reward": {"s": {"a": "0"}},
        "initial": {"s": "1"}
    }"#;

    #[test]
    fn loads_minimal_model() {
        let m: FiniteMdp<Rational> = load_model_str(ABSORBING).unwrap();
        assert_eq!(m.states, vec!["s"]);
        assert_eq!(m.fallback, vec![0]);
    }

    #[test]
    fn policy_round_trip_and_defaults() {
        let o = crate::model::ExampleOptions::new(6, Rational::new(1.into(), 4.into()));
        let (m, _) = crate::model::build_example_model::<Rational>(&o).unwrap();
        let p = parse_policy(&m, r#"{"1": {"a": "1/3", "b": "2/3"}}"#).unwrap();
        let one = m.state_index("1").unwrap();
        assert_eq!(p.rows[one], vec![Rational::new(1.into(), 3.into()), Rational::new(2.into(), 3.into())]);
        assert_eq!(p.rows[m.state_index("2").unwrap()], vec![Rational::from_integer(1.into())]);
        let text = crate::kp::policy_json(&m, &p).to_string();
        assert_eq!(parse_policy(&m, &text).unwrap(), p);
        assert!(parse_policy(&m, r#"{"1": {"a": "1/2"}}"#).is_err());
        assert!(parse_policy(&m, r#"{"2": {"b": "1"}}"#).is_err());
    }

    #[test]
    fn syntax_error_has_location() {
        let err = load_model_str::<Rational>("{\n \"states\": [,]\n}").unwrap_err();
        match err {
            ModelError::Syntax { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_state_names_field() {
        let text = ABSORBING.replace(r#""to": "s""#, r#""to": "t""#);
        let err = load_model_str::<Rational>(&text).unwrap_err();
        assert!(matches!(err, ModelError::Field { ref field, .. } if field == "transitions[0]"), "{err}");
    }

    #[test]
    fn row_not_summing_to_one_is_rejected() {
        let text = ABSORBING.replace(r#""prob": "1""#, r#""prob": "0.99""#);
        match load_model_str::<Rational>(&text).unwrap_err() {
            ModelError::Validation(v) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].field, "transitions(s,a)");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn mixed_notation_rejected_only_in_rational_mode() {
        let text = ABSORBING
            .replace(r#""prob": "1""#, r#""prob": "1/1""#)
            .replace(r#""a": "0""#, r#""a": "0.0""#);
        assert!(matches!(load_model_str::<Rational>(&text), Err(ModelError::Field { .. })));
        assert!(load_model_str::<f64>(&text).is_ok());
    }
}
