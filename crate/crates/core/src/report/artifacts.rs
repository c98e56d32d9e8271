use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Artifact, ArtifactKind};
use crate::analyzer::{Classification, GtAssessment, MethodMrReport};
use crate::miner::ConstraintRule;
use crate::mr::{MrId, MrParams};
use crate::runner::{ExecutionRecord, TransformedRow};
use crate::tdgen::{FuzzConfig, TestDatum};

type Invalid = (String, String);

fn invalid(at: impl Into<String>, msg: impl Into<String>) -> Invalid {
    (at.into(), msg.into())
}

fn check_ids(ids: impl Iterator<Item = u64>, field: &str) -> Result<(), Invalid> {
    for (i, id) in ids.enumerate() {
        if id != i as u64 {
            return Err(invalid(
                format!("{field}[{i}].id"),
                format!("ids must run 0..n in order, found {id}"),
            ));
        }
    }
    Ok(())
}

/// Generated test data and the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdArtifact {
    pub config: FuzzConfig,
    pub data: Vec<TestDatum>,
}

impl Artifact for TdArtifact {
    const KIND: ArtifactKind = ArtifactKind::Td;

    fn validate(&self) -> Result<(), Invalid> {
        self.config.validate().map_err(|e| invalid("config", e.to_string()))?;
        check_ids(self.data.iter().map(|d| d.id), "data")?;
        let range = self.config.range();
        for (i, d) in self.data.iter().enumerate() {
            let len = d.values.len() as u64;
            if len < self.config.min_len || len > self.config.max_len {
                return Err(invalid(format!("data[{i}].td"), format!("length {len} outside configured bounds")));
            }
            if let Some(j) = d.values.iter().position(|&v| !range.contains(v)) {
                return Err(invalid(
                    format!("data[{i}].td[{j}]"),
                    format!("value {} outside the configured domain", d.values[j]),
                ));
            }
        }
        Ok(())
    }
}

/// Settings shared by every artifact downstream of generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunContext {
    pub fuzz: FuzzConfig,
    pub mr_params: MrParams,
    pub mrs: Vec<MrId>,
    /// Master seed of the transformation streams.
    pub transform_seed: u64,
}

impl RunContext {
    fn validate(&self, at: &str) -> Result<(), Invalid> {
        self.fuzz.validate().map_err(|e| invalid(format!("{at}.fuzz"), e.to_string()))?;
        self.mr_params.validate().map_err(|e| invalid(format!("{at}.mr_params"), e.to_string()))?;
        let distinct: BTreeSet<_> = self.mrs.iter().collect();
        if self.mrs.is_empty() || distinct.len() != self.mrs.len() {
            return Err(invalid(format!("{at}.mrs"), "relations must be non-empty and distinct"));
        }
        Ok(())
    }
}

/// Test data plus one follow-up input per relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedArtifact {
    pub context: RunContext,
    /// File name of the test data artifact this was built from.
    pub source: String,
    pub data: Vec<TransformedRow>,
}

impl Artifact for TransformedArtifact {
    const KIND: ArtifactKind = ArtifactKind::Transformed;

    fn validate(&self) -> Result<(), Invalid> {
        self.context.validate("context")?;
        check_ids(self.data.iter().map(|d| d.id), "data")?;
        let expected: BTreeSet<MrId> = self.context.mrs.iter().copied().collect();
        for (i, row) in self.data.iter().enumerate() {
            let present: BTreeSet<MrId> = row.followups.keys().copied().collect();
            if present != expected {
                return Err(invalid(
                    format!("data[{i}]"),
                    "each datum needs exactly one field per configured relation",
                ));
            }
        }
        Ok(())
    }
}

/// Execution records of one method, with verdicts once checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionArtifact {
    pub context: RunContext,
    pub method: String,
    /// File name of the transformed artifact this was built from.
    pub source: String,
    /// File name of the test data behind `source`.
    pub td_source: String,
    /// Tolerance used by the checker, once checked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub records: Vec<ExecutionRecord>,
}

impl ExecutionArtifact {
    pub fn is_checked(&self) -> bool {
        self.tolerance.is_some() && self.records.iter().all(|r| r.verdict.is_some())
    }
}

impl Artifact for ExecutionArtifact {
    const KIND: ArtifactKind = ArtifactKind::Execution;

    fn validate(&self) -> Result<(), Invalid> {
        self.context.validate("context")?;
        let mut seen = BTreeSet::new();
        for (i, r) in self.records.iter().enumerate() {
            if r.method != self.method {
                return Err(invalid(format!("records[{i}].method"), "record belongs to another method"));
            }
            if !seen.insert(r.exec_id) {
                return Err(invalid(format!("records[{i}].exec_id"), "duplicate exec_id"));
            }
            if r.followup_input.is_some() != r.followup_outcome.is_some() {
                return Err(invalid(
                    format!("records[{i}]"),
                    "follow-up input and outcome must be both present or both absent",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub td: String,
    pub transformed: String,
    pub executions: Vec<String>,
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub context: RunContext,
    pub methods: Vec<String>,
    pub tolerance: f64,
    /// Unix seconds; ignored when comparing replays.
    pub created_at: u64,
    pub artifacts: ArtifactPaths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miner: Option<MinerSettings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinerSettings {
    pub min_precision: f64,
    pub min_support: u64,
    #[serde(default)]
    pub max_thresholds: Option<u64>,
    pub top_k: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtEntry {
    pub label: u8,
    pub assessment: GtAssessment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub n_trials: u64,
    pub n_nonviolation: u64,
    pub n_violation: u64,
    pub n_invalid: u64,
    pub pct_nonviolation: f64,
    pub pct_violation: f64,
    pub pct_invalid: f64,
    pub classification: Classification,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<GtEntry>,
}

impl ReportEntry {
    pub fn from_report(r: &MethodMrReport) -> Self {
        ReportEntry {
            n_trials: r.n_trials,
            n_nonviolation: r.n_nonviolation,
            n_violation: r.n_violation,
            n_invalid: r.n_invalid,
            pct_nonviolation: r.pct_nonviolation,
            pct_violation: r.pct_violation,
            pct_invalid: r.pct_invalid,
            classification: r.classification,
            gt: None,
        }
    }

    pub fn to_report(&self, method: &str, mr: MrId) -> MethodMrReport {
        MethodMrReport {
            method: method.to_string(),
            mr,
            n_trials: self.n_trials,
            n_nonviolation: self.n_nonviolation,
            n_violation: self.n_violation,
            n_invalid: self.n_invalid,
            pct_nonviolation: self.pct_nonviolation,
            pct_violation: self.pct_violation,
            pct_invalid: self.pct_invalid,
            classification: self.classification,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    /// e.g. `has_negative → VIOLATION`
    pub text: String,
    /// e.g. `MR_MUL applies to add_values when all_positive`
    pub description: String,
    pub rule: ConstraintRule,
}

/// Frequencies, classifications and mined constraints of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisArtifact {
    pub manifest: RunManifest,
    pub reports: BTreeMap<String, BTreeMap<MrId, ReportEntry>>,
    /// Filled for mixed pairs by the mining stage.
    #[serde(default)]
    pub constraints: BTreeMap<String, BTreeMap<MrId, Vec<RuleEntry>>>,
}

impl AnalysisArtifact {
    pub fn report_list(&self) -> Vec<MethodMrReport> {
        self.reports
            .iter()
            .flat_map(|(m, row)| row.iter().map(move |(mr, e)| e.to_report(m, *mr)))
            .collect()
    }

    pub fn entry(&self, method: &str, mr: MrId) -> Option<&ReportEntry> {
        self.reports.get(method)?.get(&mr)
    }

    /// Zero the manifest timestamp so replays compare byte for byte.
    pub fn normalize_timestamps(&mut self) {
        self.manifest.created_at = 0;
    }
}

impl Artifact for AnalysisArtifact {
    const KIND: ArtifactKind = ArtifactKind::Analysis;

    fn validate(&self) -> Result<(), Invalid> {
        self.manifest.context.validate("manifest.context")?;
        for (method, row) in &self.reports {
            for (mr, e) in row {
                let at = format!("reports.{method}.{mr}");
                if e.n_nonviolation + e.n_violation + e.n_invalid != e.n_trials {
                    return Err(invalid(at, "counts do not sum to n_trials"));
                }
                let sum = e.pct_nonviolation + e.pct_violation + e.pct_invalid;
                if (sum - 100.0).abs() > 0.01 {
                    return Err(invalid(at, format!("percentages sum to {sum}")));
                }
            }
        }
        Ok(())
    }
}
