//! Tab-delimited report rows with a trailing JSON summary.

use std::collections::BTreeMap;

use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub computed: f64,
    pub bound: Option<f64>,
    /// Signed slack, nonnegative when the check holds outright.
    pub margin: Option<f64>,
    pub tolerance: Option<f64>,
}

impl Row {
    pub fn info(name: impl Into<String>, computed: f64) -> Self {
        Self { name: name.into(), computed, bound: None, margin: None, tolerance: None }
    }

    /// `computed ≤ bound`.
    pub fn upper(name: impl Into<String>, computed: f64, bound: f64, tolerance: f64) -> Self {
        Self::check(name, computed, bound, bound - computed, tolerance)
    }

    /// `computed ≥ bound`.
    pub fn lower(name: impl Into<String>, computed: f64, bound: f64, tolerance: f64) -> Self {
        Self::check(name, computed, bound, computed - bound, tolerance)
    }

    /// `computed = expected`.
    pub fn equal(name: impl Into<String>, computed: f64, expected: f64, tolerance: f64) -> Self {
        Self::check(name, computed, expected, -(computed - expected).abs(), tolerance)
    }

    fn check(name: impl Into<String>, computed: f64, bound: f64, margin: f64, tolerance: f64) -> Self {
        Self { name: name.into(), computed, bound: Some(bound), margin: Some(margin + 0.0), tolerance: Some(tolerance) }
    }

    /// `None` for information rows; NaN margins fail.
    pub fn pass(&self) -> Option<bool> {
        Some(self.margin? >= -self.tolerance?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config_hash: String,
    pub rows: Vec<Row>,
    pub notes: BTreeMap<String, Value>,
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), num)
}

impl Report {
    pub fn new(command: &str, config_hash: String) -> Self {
        Self { command: command.to_string(), config_hash, rows: Vec::new(), notes: BTreeMap::new() }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.notes.insert(key.to_string(), value.into());
    }

    pub fn counts(&self) -> (usize, usize) {
        let checks: Vec<bool> = self.rows.iter().filter_map(Row::pass).collect();
        let pass = checks.iter().filter(|&&p| p).count();
        (pass, checks.len() - pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.counts().1 == 0 { 0 } else { 1 }
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "# wass-hj {} command={} config_sha256={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.config_hash
        );
        s.push_str("name\tcomputed\tbound\tmargin\ttolerance\tpass\n");
        for r in &self.rows {
            let verdict = match r.pass() {
                None => "-",
                Some(true) => "pass",
                Some(false) => "fail",
            };
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{verdict}\n",
                r.name,
                num(r.computed),
                opt(r.bound),
                opt(r.margin),
                opt(r.tolerance)
            ));
        }
        let (pass, fail) = self.counts();
        let summary = json!({
            "command": self.command,
            "config_sha256": self.config_hash,
            "version": env!("CARGO_PKG_VERSION"),
            "rows": self.rows.len(),
            "pass": pass,
            "fail": fail,
            "notes": self.notes,
        });
        s.push_str(&format!("#summary pass={pass} fail={fail} {summary}\n"));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_has_header_and_summary() {
        let r = Report::new("w2", "00".into());
        let text = r.render();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().last().unwrap().starts_with("#summary pass=0 fail=0 "));
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn one_failure() {
        let mut r = Report::new("w2", "00".into());
        r.push(Row::info("distance", 5.0));
        r.push(Row::upper("residual", 2.0, 1.0, 0.5));
        let text = r.render();
        assert!(text.contains("#summary pass=0 fail=1"));
        assert!(text.contains("distance\t5.000000000000e0\t-\t-\t-\t-"));
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn row_semantics() {
        assert_eq!(Row::upper("a", 1.0, 1.0, 0.0).pass(), Some(true));
        assert_eq!(Row::lower("a", 0.9, 1.0, 0.05).pass(), Some(false));
        assert_eq!(Row::equal("a", 1.0 + 1e-10, 1.0, 1e-9).pass(), Some(true));
        assert_eq!(Row::upper("a", f64::NAN, 1.0, 0.1).pass(), Some(false));
    }
}
