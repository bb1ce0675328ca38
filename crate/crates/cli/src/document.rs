//! Report documents and their JSON, CSV and text renderings.

use qchan::entropy::LogBase;
use qchan::PropositionReport;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One verified claim as it appears in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub id: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub margin: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub witness: Value,
    pub seed: Option<u64>,
    pub elapsed_ms: f64,
}

/// Ids whose numeric fields are entropies and follow `--log-base`.
const ENTROPY_BEARING: &[&str] = &[
    "prop1",
    "prop2",
    "prop3",
    "theorem.s_min",
    "theorem.entropy_order",
    "theorem.additivity",
    "monotonicity",
    "entropy_increase",
    "additivity",
    "min_entropy",
    "capacity",
];

fn entropy_bearing(id: &str) -> bool {
    ENTROPY_BEARING
        .iter()
        .any(|p| id == *p || id.strip_prefix(p).is_some_and(|rest| rest.starts_with('.')))
}

/// JSON cannot carry non-finite numbers; they are written as `null`.
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl CheckEntry {
    pub fn from_report(r: &PropositionReport, base: LogBase, elapsed_ms: f64) -> Self {
        let conv = |v: f64| if entropy_bearing(&r.claim_id) { base.from_nats(v) } else { v };
        Self {
            id: r.claim_id.clone(),
            lhs: finite(conv(r.lhs)),
            rhs: finite(conv(r.rhs)),
            margin: finite(conv(r.margin)),
            tolerance: finite(conv(r.tolerance)),
            pass: r.pass,
            witness: r.witness.clone(),
            seed: r.seed,
            elapsed_ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: String,
    pub config: Value,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub result: Value,
    pub checks: Vec<CheckEntry>,
    pub pass: bool,
}

impl ReportDocument {
    pub fn new(config: Value, result: Value, checks: Vec<CheckEntry>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            result,
            checks,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per check.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "lhs", "rhs", "margin", "tolerance", "pass", "seed", "elapsed_ms", "witness"])
            .expect("in-memory write");
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.checks {
            let witness = if c.witness.is_null() { String::new() } else { c.witness.to_string() };
            w.write_record([
                c.id.clone(),
                num(c.lhs),
                num(c.rhs),
                num(c.margin),
                num(c.tolerance),
                c.pass.to_string(),
                c.seed.map(|s| s.to_string()).unwrap_or_default(),
                c.elapsed_ms.to_string(),
                witness,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(obj) = self.result.as_object() {
            for (k, v) in obj {
                out.push_str(&format!("{k}: {v}\n"));
            }
        }
        for c in &self.checks {
            let show = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "inf".into());
            out.push_str(&format!(
                "{} {:<32} lhs={} rhs={} margin={}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.id,
                show(c.lhs),
                show(c.rhs),
                show(c.margin),
            ));
        }
        out.push_str(if self.pass { "overall: PASS\n" } else { "overall: FAIL\n" });
        out
    }

    /// The JSON document with every `elapsed_ms` removed.
    pub fn without_timings(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(checks) = v.get_mut("checks").and_then(Value::as_array_mut) {
            for c in checks {
                if let Some(o) = c.as_object_mut() {
                    o.remove("elapsed_ms");
                }
            }
        }
        v
    }
}
