//! Stage functions over artifacts.
//!
//! Each stage consumes the previous stage's artifact and produces its own,
//! so running the stages one by one through files gives the same result as
//! [`Pipeline::run`].

use std::collections::BTreeMap;

use crate::analyzer::{self, GroundTruth};
use crate::checker::{self, Tolerance, Verdict};
use crate::miner::{self, MinerConfig};
use crate::mr::{MrId, MrParams, MrSpec};
use crate::report::{
    AnalysisArtifact, ArtifactPaths, ExecutionArtifact, GtEntry, MinerSettings, ReportEntry, RuleEntry, RunContext, RunManifest,
    TdArtifact, TransformedArtifact,
};

use crate::runner::{self, ExternalSut};
use crate::tdgen::{self, FuzzConfig};
use crate::{Error, Result, TOOL_VERSION};

pub fn generate_stage(config: &FuzzConfig) -> Result<TdArtifact> {
    Ok(TdArtifact {
        config: config.clone(),
        data: tdgen::generate(config)?,
    })
}

pub fn transform_stage(
    td: &TdArtifact,
    params: MrParams,
    mrs: &[MrId],
    seed: u64,
    source: &str,
) -> Result<TransformedArtifact> {
    let specs: Vec<MrSpec> = mrs.iter().map(|&id| MrSpec::new(id, params)).collect::<Result<_>>()?;
    if specs.is_empty() {
        return Err(Error::Config("no metamorphic relations selected".into()));
    }
    Ok(TransformedArtifact {
        context: RunContext {
            fuzz: td.config.clone(),
            mr_params: params,
            mrs: mrs.to_vec(),
            transform_seed: seed,
        },
        source: source.to_string(),
        data: runner::transform_all(&specs, &td.data, &td.config.range(), seed),
    })
}

/// Execute built-in methods; one artifact per method, in the given order.
pub fn run_stage(t: &TransformedArtifact, methods: &[String], source: &str) -> Result<Vec<ExecutionArtifact>> {
    let records = runner::execute(methods, &t.context.mrs, &t.data)?;
    let per_method = t.context.mrs.len() * t.data.len();
    let mut chunks = records.chunks(per_method.max(1));
    Ok(methods
        .iter()
        .map(|m| ExecutionArtifact {
            context: t.context.clone(),
            method: m.clone(),
            source: source.to_string(),
            td_source: t.source.clone(),
            tolerance: None,
            records: chunks.next().map(<[_]>::to_vec).unwrap_or_default(),
        })
        .collect())
}

pub fn run_external_stage(t: &TransformedArtifact, sut: &ExternalSut, source: &str) -> Result<ExecutionArtifact> {
    let records = runner::external::execute_external(sut, &t.context.mrs, &t.data)?;
    Ok(ExecutionArtifact {
        context: t.context.clone(),
        method: sut.name.clone(),
        source: source.to_string(),
        td_source: t.source.clone(),
        tolerance: None,
        records,
    })
}

/// Attach a verdict to every record.
pub fn check_stage(e: &mut ExecutionArtifact, tolerance: Tolerance) {
    let verdicts = checker::check_all(&e.records, tolerance);
    for (r, v) in e.records.iter_mut().zip(verdicts) {
        r.verdict = Some(v.result());
    }
    e.tolerance = Some(tolerance.get());
}

fn stored_verdicts(e: &ExecutionArtifact) -> Result<Vec<Verdict>> {
    e.records
        .iter()
        .map(|r| {
            let v = r.verdict.as_ref().ok_or_else(|| {
                Error::Config(format!("execution artifact for `{}` has not been checked", e.method))
            })?;
            Ok(Verdict {
                exec_id: r.exec_id,
                method: r.method.clone(),
                mr: r.mr,
                status: v.status,
                detail: v.detail.clone(),
            })
        })
        .collect()
}

/// Sort checked artifacts into run order and make sure they belong together.
fn ordered(execs: &[ExecutionArtifact]) -> Result<Vec<&ExecutionArtifact>> {
    let first = execs
        .first()
        .ok_or_else(|| Error::Config("no execution artifacts to analyze".into()))?;
    let mut out: Vec<&ExecutionArtifact> = execs.iter().collect();
    for e in &out {
        if e.context != first.context || e.tolerance != first.tolerance || e.source != first.source || e.td_source != first.td_source {
            return Err(Error::Config(format!(
                "execution artifact for `{}` comes from a different run",
                e.method
            )));
        }
        if !e.is_checked() {
            return Err(Error::Config(format!("execution artifact for `{}` has not been checked", e.method)));
        }
    }
    out.sort_by_key(|e| (e.records.first().map_or(u64::MAX, |r| r.exec_id), e.method.clone()));
    Ok(out)
}

/// Aggregate checked execution artifacts. The manifest records file names
/// taken from the artifacts themselves, so the result does not depend on
/// where the files were read from.
pub fn analyze_stage(execs: &[ExecutionArtifact], gt: Option<&GroundTruth>, created_at: u64) -> Result<AnalysisArtifact> {
    let execs = ordered(execs)?;
    let artifacts = ArtifactPaths {
        td: execs[0].td_source.clone(),
        transformed: execs[0].source.clone(),
        executions: execs.iter().map(|e| execution_file_name(&e.method)).collect(),
    };
    let mut verdicts = Vec::new();
    for e in &execs {
        verdicts.extend(stored_verdicts(e)?);
    }
    let reports = analyzer::aggregate(&verdicts);
    let mut table: BTreeMap<String, BTreeMap<MrId, ReportEntry>> = BTreeMap::new();
    for r in &reports {
        table
            .entry(r.method.clone())
            .or_default()
            .insert(r.mr, ReportEntry::from_report(r));
    }
    if let Some(gt) = gt {
        for c in analyzer::compare_to_groundtruth(&reports, gt)? {
            if let Some(entry) = table.get_mut(&c.method).and_then(|row| row.get_mut(&c.mr)) {
                entry.gt = Some(GtEntry {
                    label: c.gt,
                    assessment: c.assessment,
                });
            }
        }
    }
    Ok(AnalysisArtifact {
        manifest: RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            context: execs[0].context.clone(),
            methods: execs.iter().map(|e| e.method.clone()).collect(),
            tolerance: execs[0].tolerance.unwrap_or(checker::DEFAULT_TOLERANCE),
            created_at,
            artifacts,
            miner: None,
        },
        reports: table,
        constraints: BTreeMap::new(),
    })
}

/// Mine constraints for every mixed pair and keep the best `top_k` rules.
pub fn mine_stage(
    analysis: &mut AnalysisArtifact,
    execs: &[ExecutionArtifact],
    config: &MinerConfig,
    top_k: usize,
) -> Result<()> {
    config.validate()?;
    let execs = ordered(execs)?;
    let mut constraints: BTreeMap<String, BTreeMap<MrId, Vec<RuleEntry>>> = BTreeMap::new();
    for e in execs {
        let Some(row) = analysis.reports.get(&e.method) else {
            return Err(Error::Config(format!("analysis has no reports for `{}`", e.method)));
        };
        for (&mr, entry) in row {
            if entry.classification != analyzer::Classification::Mixed {
                continue;
            }
            let trials: Vec<_> = e
                .records
                .iter()
                .filter(|r| r.mr == mr)
                .filter_map(|r| Some((miner::featurize(&r.source_input), r.verdict.as_ref()?.status)))
                .collect();
            if trials.is_empty() {
                continue;
            }
            let rules = miner::mine(&trials, config)?;
            let entries: Vec<RuleEntry> = miner::distinct_top(&rules, &trials, top_k)
                .into_iter()
                .map(|rule| RuleEntry {
                    text: rule.text(),
                    description: rule.describe(&e.method, mr),
                    rule,
                })
                .collect();
            if !entries.is_empty() {
                constraints.entry(e.method.clone()).or_default().insert(mr, entries);
            }
        }
    }
    analysis.constraints = constraints;
    analysis.manifest.miner = Some(MinerSettings {
        min_precision: config.min_precision,
        min_support: config.min_support,
        max_thresholds: config.max_thresholds.map(|k| k as u64),
        top_k: top_k as u64,
    });
    Ok(())
}

/// Where the runner sends inputs.
#[derive(Debug, Clone)]
pub enum Target {
    Builtin(Vec<String>),
    External(ExternalSut),
}

/// File names recorded in manifests.
#[derive(Debug, Clone)]
pub struct FileNames {
    pub td: String,
    pub transformed: String,
}

impl Default for FileNames {
    fn default() -> Self {
        FileNames {
            td: "td.json".into(),
            transformed: "transformed.json".into(),
        }
    }
}

/// File name of a method's execution artifact.
pub fn execution_file_name(method: &str) -> String {
    format!("{method}.json")
}

/// All settings of an end-to-end run.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub fuzz: FuzzConfig,
    pub mr_params: MrParams,
    pub mrs: Vec<MrId>,
    /// Defaults to the fuzzer seed.
    pub transform_seed: Option<u64>,
    pub target: Target,
    pub tolerance: Tolerance,
    pub miner: MinerConfig,
    pub top_k: usize,
    pub ground_truth: Option<GroundTruth>,
    pub names: FileNames,
    pub created_at: u64,
}

impl Pipeline {
    /// Every corpus method against every relation.
    pub fn new(fuzz: FuzzConfig) -> Self {
        Pipeline {
            fuzz,
            mr_params: MrParams::default(),
            mrs: MrId::ALL.to_vec(),
            transform_seed: None,
            target: Target::Builtin(crate::corpus::list_methods().iter().map(|m| m.name.to_string()).collect()),
            tolerance: Tolerance::default(),
            miner: MinerConfig::default(),
            top_k: 3,
            ground_truth: None,
            names: FileNames::default(),
            created_at: 0,
        }
    }

    pub fn run(&self) -> Result<PipelineOutput> {
        let td = generate_stage(&self.fuzz)?;
        let seed = self.transform_seed.unwrap_or(self.fuzz.seed);
        let transformed = transform_stage(&td, self.mr_params, &self.mrs, seed, &self.names.td)?;
        let mut executions = match &self.target {
            Target::Builtin(methods) => run_stage(&transformed, methods, &self.names.transformed)?,
            Target::External(sut) => vec![run_external_stage(&transformed, sut, &self.names.transformed)?],
        };
        for e in &mut executions {
            check_stage(e, self.tolerance);
        }
        let mut analysis = analyze_stage(&executions, self.ground_truth.as_ref(), self.created_at)?;
        mine_stage(&mut analysis, &executions, &self.miner, self.top_k)?;
        Ok(PipelineOutput {
            td,
            transformed,
            executions,
            analysis,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub td: TdArtifact,
    pub transformed: TransformedArtifact,
    pub executions: Vec<ExecutionArtifact>,
    pub analysis: AnalysisArtifact,
}
