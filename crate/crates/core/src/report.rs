use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Verdict for one numerically checked claim.
///
/// `pass` holds exactly when `margin >= -tolerance`. Inequalities
/// `lhs >= rhs` use `margin = lhs - rhs`; equalities use
/// `margin = -|lhs - rhs|`; residual checks put the residual in `lhs`,
/// zero in `rhs` and `-residual` in `margin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub claim_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub witness: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PropositionReport {
    fn build(claim_id: impl Into<String>, lhs: f64, rhs: f64, margin: f64, tolerance: f64) -> Self {
        Self {
            claim_id: claim_id.into(),
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin >= -tolerance,
            witness: Value::Null,
            seed: None,
        }
    }

    /// Claim `lhs >= rhs`, allowed to miss by `tolerance`.
    pub fn inequality(claim_id: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = if lhs == f64::INFINITY && rhs.is_finite() {
            f64::INFINITY
        } else {
            lhs - rhs
        };
        Self::build(claim_id, lhs, rhs, margin, tolerance)
    }

    /// Claim `lhs == rhs` within `tolerance`.
    pub fn equality(claim_id: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(claim_id, lhs, rhs, -(lhs - rhs).abs(), tolerance)
    }

    /// Claim `residual <= tolerance`.
    pub fn residual(claim_id: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self::build(claim_id, residual, 0.0, -residual, tolerance)
    }

    pub fn with_witness(mut self, witness: Value) -> Self {
        self.witness = witness;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Folds a batch into its worst member; ties keep the lowest index.
    pub fn worst_of(claim_id: impl Into<String>, batch: &[PropositionReport]) -> Option<Self> {
        let (idx, worst) = batch
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| a.margin.total_cmp(&b.margin).then(i.cmp(j)))?;
        let failures = batch.iter().filter(|r| !r.pass).count();
        let mut out = worst.clone();
        out.claim_id = claim_id.into();
        out.pass = batch.iter().all(|r| r.pass);
        out.witness = serde_json::json!({
            "instances": batch.len(),
            "failures": failures,
            "worst_index": idx,
            "worst": worst.witness,
        });
        Some(out)
    }
}
