//! Plain-text rendering of the JSON reports.

use serde_json::Value;

/// Fractions longer than this are shown as decimals; the exact value stays
/// in the JSON output.
const MAX_FRACTION: usize = 24;

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => number_text(s),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        _ => unreachable!(),
    }
}

fn number_text(s: &str) -> String {
    if s.len() <= MAX_FRACTION {
        return s.to_string();
    }
    let Some((num, den)) = s.split_once('/') else { return s.to_string() };
    let digits = |t: &str| !t.is_empty() && t.trim_start_matches('-').bytes().all(|b| b.is_ascii_digit());
    if !digits(num) || !digits(den) {
        return s.to_string();
    }
    match (num.parse::<f64>(), den.parse::<f64>()) {
        (Ok(n), Ok(d)) if d.is_finite() && n.is_finite() => format!("~{:.15}", n / d),
        _ => s.to_string(),
    }
}

fn is_leaf(v: &Value) -> bool {
    !matches!(v, Value::Object(_) | Value::Array(_))
}

fn walk(key: &str, v: &Value, depth: usize, out: &mut Vec<String>) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) if map.is_empty() => out.push(format!("{pad}{key}: {{}}")),
        Value::Array(items) if items.is_empty() => out.push(format!("{pad}{key}: []")),
        Value::Object(map) => {
            if map.values().all(is_leaf) && map.len() <= 4 && depth > 0 {
                let cells: Vec<String> = map.iter().map(|(k, x)| format!("{k}={}", scalar(x))).collect();
                out.push(format!("{pad}{key}: {}", cells.join("  ")));
                return;
            }
            out.push(format!("{pad}{key}:"));
            for (k, x) in map {
                walk(k, x, depth + 1, out);
            }
        }
        Value::Array(items) => {
            if items.iter().all(is_leaf) {
                let cells: Vec<String> = items.iter().map(scalar).collect();
                out.push(format!("{pad}{key}: {}", cells.join(", ")));
                return;
            }
            out.push(format!("{pad}{key}:"));
            for (i, x) in items.iter().enumerate() {
                walk(&format!("[{i}]"), x, depth + 1, out);
            }
        }
        leaf => out.push(format!("{pad}{key}: {}", scalar(leaf))),
    }
}

/// One line per leaf: top-level scalars first, then nested objects
/// indented under their key.
pub fn render(v: &Value) -> String {
    let mut out = Vec::new();
    match v {
        Value::Object(map) => {
            let width = map.iter().filter(|(_, x)| is_leaf(x)).map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, x) in map.iter().filter(|(_, x)| is_leaf(x)) {
                out.push(format!("{k:<width$}  {}", scalar(x)));
            }
            for (k, x) in map.iter().filter(|(_, x)| !is_leaf(x)) {
                walk(k, x, 0, &mut out);
            }
        }
        other => walk("value", other, 0, &mut out),
    }
    out.join("\n") + "\n"
}
