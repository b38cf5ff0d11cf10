use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid number `{literal}`: {reason}")]
pub struct ParseNumberError {
    pub literal: String,
    pub reason: String,
}

impl ParseNumberError {
    pub fn new(literal: &str, reason: &str) -> Self {
        Self { literal: literal.to_string(), reason: reason.to_string() }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}, column {column}: malformed model JSON: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("model violates {} invariant(s):\n{}", .0.len(), render_violations(.0))]
    Validation(Vec<Violation>),
}

fn render_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  - {x}")).collect::<Vec<_>>().join("\n")
}

impl ModelError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Field { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReferenceError {
    #[error("reference kernel does not dominate Q: Q({to}|{state},{action}) > 0 but P({to}|{state}) = 0")]
    NotDominating { state: String, action: String, to: String },

    #[error("reference kernel row for state `{state}` sums to {sum}, expected 1")]
    RowSum { state: String, sum: String },

    #[error("reference kernel has {got} rows, model has {expected} states")]
    Shape { expected: usize, got: usize },

    #[error("singular system while solving for the base measure")]
    Singular,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    DimensionMismatch { row: String, expected: usize, got: usize },

    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model: {0}")]
    Model(#[from] ModelError),

    #[error("reference: {0}")]
    Reference(#[from] ReferenceError),

    #[error("lp: {0}")]
    Lp(#[from] LpError),

    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}
