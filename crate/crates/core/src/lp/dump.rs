use std::fmt::Write;

use super::{LinearRow, LpProblem};
use crate::scalar::Scalar;

fn terms<S: Scalar>(names: &[String], coeffs: &[S]) -> String {
    let mut out = String::new();
    for (name, c) in names.iter().zip(coeffs).filter(|(_, c)| !c.is_zero()) {
        let neg = *c < S::zero();
        let mag = c.abs_val();
        let sign = match (out.is_empty(), neg) {
            (true, false) => "",
            (true, true) => "- ",
            (false, false) => " + ",
            (false, true) => " - ",
        };
        if mag == S::one() {
            let _ = write!(out, "{sign}{name}");
        } else {
            let _ = write!(out, "{sign}{} {name}", mag.render());
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn row<S: Scalar>(out: &mut String, names: &[String], r: &LinearRow<S>, op: &str) {
    let _ = writeln!(out, " {}: {} {op} {}", r.name, terms(names, &r.coeffs), r.rhs.render());
}

/// Plain-text dump in an LP-file style (`maximize` / `subject to` /
/// `bounds` / `end`) for cross-checking with external solvers.
pub fn write_lp<S: Scalar>(p: &LpProblem<S>) -> String {
    let mut out = String::from("maximize\n");
    let _ = writeln!(out, " obj: {}", terms(&p.var_names, &p.objective));
    out.push_str("subject to\n");
    for r in &p.eq {
        row(&mut out, &p.var_names, r, "=");
    }
    for r in &p.ge {
        row(&mut out, &p.var_names, r, ">=");
    }
    out.push_str("bounds\n");
    for v in &p.var_names {
        let _ = writeln!(out, " {v} >= 0");
    }
    out.push_str("end\n");
    out
}
