use serde_json::{json, Map, Value};

/// JSON has no infinities or NaN; those travel as the strings `"inf"`,
/// `"-inf"` and `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Formats with 6 significant digits, switching to exponent form outside
/// `[1e-4, 1e6)` like C's `%g`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Default)]
pub struct LedgerSummary {
    pub iterations: usize,
    pub diagnostics: Vec<f64>,
    pub spilled: usize,
}

impl LedgerSummary {
    pub fn from_ledger<S>(ledger: &foldstat::IterationLedger<S>) -> Self {
        Self {
            iterations: ledger.len(),
            diagnostics: ledger.diagnostics(),
            spilled: ledger.spilled_count(),
        }
    }
}

/// One command run: everything printed to stdout on success.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: String,
    pub args: Map<String, Value>,
    pub n: usize,
    pub d: usize,
    pub workers: usize,
    pub wall_clock_ms: f64,
    pub result: Value,
    pub ledger: LedgerSummary,
    pub converged: bool,
}

impl RunReport {
    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "args": self.args,
            "dataset": { "n": self.n, "d": self.d },
            "workers": self.workers,
            "wall_clock_ms": num(self.wall_clock_ms),
            "result": self.result,
            "ledger": {
                "iterations": self.ledger.iterations,
                "diagnostics": nums(&self.ledger.diagnostics),
                "spilled": self.ledger.spilled,
            },
            "converged": self.converged,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{}: n={} d={} workers={} converged={} ({} ms)\n",
            self.command,
            self.n,
            self.d,
            self.workers,
            self.converged,
            sig6(self.wall_clock_ms)
        );
        if self.ledger.iterations > 0 {
            out.push_str(&format!("iterations: {}\n", self.ledger.iterations));
        }
        if let Value::Object(fields) = &self.result {
            for (key, value) in fields {
                out.push_str(&format!("{key}: {}\n", text_value(value)));
            }
        }
        out
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if !(n.is_i64() || n.is_u64()) => sig6(x),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(text_value).collect();
            format!("[{}]", inner.join(", "))
        }
        Value::Object(fields) => {
            let inner: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={}", text_value(v))).collect();
            format!("{{{}}}", inner.join(", "))
        }
        other => other.to_string(),
    }
}
