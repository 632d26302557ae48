//! Residual report and its JSON form.

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// `None` when some sample produced a non-finite value or an error.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub subcommand: String,
    pub seed: u64,
    pub samples: usize,
    pub h: f64,
    pub input: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
    pub metadata: Metadata,
    pub pass: bool,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> String {
        // serde_json::Map is ordered by key
        let v = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let r = c.max_residual.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
            out.push_str(&format!(
                "{:4} {:<28} {:>10} (tol {:.0e}){}\n",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                r,
                c.tolerance,
                c.error.as_ref().map_or(String::new(), |e| format!("  {e}"))
            ));
        }
        out
    }
}

/// Running max over samples for one named check.
#[derive(Clone, Debug)]
pub struct Accumulator {
    name: String,
    tolerance: f64,
    max: f64,
    bad: bool,
    error: Option<String>,
}

impl Accumulator {
    pub fn new(name: &str, tolerance: f64) -> Self {
        Accumulator { name: name.to_string(), tolerance, max: 0.0, bad: false, error: None }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_tolerance(&mut self, t: f64) {
        self.tolerance = t;
    }

    pub fn push(&mut self, v: f64) {
        if v.is_finite() {
            self.max = self.max.max(v);
        } else {
            self.bad = true;
            self.error.get_or_insert_with(|| "non-finite residual".to_string());
        }
    }

    pub fn push_result<E: std::fmt::Debug>(&mut self, r: Result<f64, E>) {
        match r {
            Ok(v) => self.push(v),
            Err(e) => {
                self.bad = true;
                self.error.get_or_insert_with(|| format!("{e:?}"));
            }
        }
    }

    /// Associative merge of two partial results.
    pub fn merge(&mut self, o: &Accumulator) {
        self.max = self.max.max(o.max);
        self.bad |= o.bad;
        if self.error.is_none() {
            self.error = o.error.clone();
        }
    }

    pub fn finish(&self) -> CheckResult {
        let max_residual = if self.bad { None } else { Some(self.max) };
        let pass = max_residual.is_some_and(|v| v <= self.tolerance);
        CheckResult { name: self.name.clone(), max_residual, tolerance: self.tolerance, pass, error: self.error.clone() }
    }
}
