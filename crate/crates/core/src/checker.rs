//! Per-trial verdicts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::ExecutionOutcome;
use crate::mr::{expected_relation, MrId, Relation};
use crate::runner::ExecutionRecord;
use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Relative comparison tolerance, floored at an absolute scale of 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance(f64);

impl Tolerance {
    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(Tolerance(t))
        } else {
            Err(Error::Config(format!("tolerance must be positive, got {t}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    fn slack(self, s: f64, f: f64) -> f64 {
        self.0 * 1f64.max(s.abs()).max(f.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance(DEFAULT_TOLERANCE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictStatus {
    NonViolation,
    Violation,
    Invalid,
}

impl VerdictStatus {
    pub const ALL: [VerdictStatus; 3] = [
        VerdictStatus::NonViolation,
        VerdictStatus::Violation,
        VerdictStatus::Invalid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VerdictStatus::NonViolation => "NON_VIOLATION",
            VerdictStatus::Violation => "VIOLATION",
            VerdictStatus::Invalid => "INVALID",
        }
    }
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Status and explanation, as stored alongside a record in an execution
/// artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub status: VerdictStatus,
    /// Empty for non-violations, the observed relation (`LESS`/`GREATER`)
    /// for violations, the failing side(s) for invalid trials.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub exec_id: u64,
    pub method: String,
    pub mr: MrId,
    pub status: VerdictStatus,
    pub detail: String,
}

impl Verdict {
    pub fn result(&self) -> CheckResult {
        CheckResult {
            status: self.status,
            detail: self.detail.clone(),
        }
    }
}

/// Compare two finite outputs under `relation`.
pub fn compare(s: f64, f: f64, relation: Relation, tolerance: Tolerance) -> CheckResult {
    let slack = tolerance.slack(s, f);
    let holds = match relation {
        Relation::Equal => (f - s).abs() <= slack,
        Relation::Geq => f >= s - slack,
        Relation::Leq => f <= s + slack,
    };
    if holds {
        CheckResult {
            status: VerdictStatus::NonViolation,
            detail: String::new(),
        }
    } else {
        let observed = if f < s { "LESS" } else { "GREATER" };
        CheckResult {
            status: VerdictStatus::Violation,
            detail: observed.to_string(),
        }
    }
}

fn failure_detail(side: &str, outcome: &ExecutionOutcome) -> Option<String> {
    outcome.failure_kind().map(|k| format!("{side}:{k}"))
}

pub fn check(record: &ExecutionRecord, relation: Relation, tolerance: Tolerance) -> Verdict {
    let result = match (&record.source_outcome, &record.followup_outcome) {
        (ExecutionOutcome::Value(s), Some(ExecutionOutcome::Value(f))) => {
            compare(*s, *f, relation, tolerance)
        }
        (source, followup) => {
            let mut parts: Vec<String> = failure_detail("source", source).into_iter().collect();
            match followup {
                Some(out) => parts.extend(failure_detail("followup", out)),
                None => parts.push("followup:TRANSFORM_SKIPPED".to_string()),
            }
            CheckResult {
                status: VerdictStatus::Invalid,
                detail: parts.join(","),
            }
        }
    };
    Verdict {
        exec_id: record.exec_id,
        method: record.method.clone(),
        mr: record.mr,
        status: result.status,
        detail: result.detail,
    }
}

/// Check every record against its relation's expected output change.
pub fn check_all(records: &[ExecutionRecord], tolerance: Tolerance) -> Vec<Verdict> {
    records
        .iter()
        .map(|r| check(r, expected_relation(r.mr), tolerance))
        .collect()
}
