//! Metamorphic test execution.
//!
//! Records are ordered method-major, then by relation, then by datum id, and
//! `exec_id` is the position in that order. Transformation streams depend on
//! `(seed, relation, datum id)` only, so the result is the same whatever the
//! worker count.

pub mod external;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::checker::CheckResult;
use crate::corpus::{self, ExecutionOutcome, Method};
use crate::mr::{self, MrId, MrSpec};
use crate::report::numbers;
use crate::tdgen::{TestDatum, ValueRange};
use crate::{Error, Result};

pub use external::{run_external, serve, ExternalSut, DEFAULT_TIMEOUT};

/// One (method, relation, datum) trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub exec_id: u64,
    pub method: String,
    pub mr: MrId,
    pub datum_id: u64,
    #[serde(with = "numbers")]
    pub source_input: Vec<f64>,
    /// Absent when the transformation was skipped.
    #[serde(with = "numbers::option", default)]
    pub followup_input: Option<Vec<f64>>,
    pub source_outcome: ExecutionOutcome,
    #[serde(default)]
    pub followup_outcome: Option<ExecutionOutcome>,
    /// Filled in by the checker stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<CheckResult>,
}

/// A source datum and its follow-up inputs, one per relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedRow {
    pub id: u64,
    #[serde(with = "numbers")]
    pub td: Vec<f64>,
    /// `None` where the transformation was skipped.
    #[serde(flatten, with = "numbers::mr_map")]
    pub followups: BTreeMap<MrId, Option<Vec<f64>>>,
}

/// Apply every relation in `mrs` to every datum.
pub fn transform_all(
    mrs: &[MrSpec],
    data: &[TestDatum],
    range: &ValueRange,
    seed: u64,
) -> Vec<TransformedRow> {
    data.iter()
        .map(|d| {
            let followups = mrs
                .iter()
                .map(|spec| {
                    let mut rng = mr::transform_stream(seed, spec.id(), d.id);
                    let out = mr::transform(spec, d, range, &mut rng).ok().map(|t| t.values);
                    (spec.id(), out)
                })
                .collect();
            TransformedRow {
                id: d.id,
                td: d.values.clone(),
                followups,
            }
        })
        .collect()
}

/// Resolve all names up front so a bad name aborts before any execution.
pub fn resolve_methods(methods: &[String]) -> Result<Vec<Method>> {
    methods.iter().map(|m| corpus::resolve(m)).collect()
}

fn trial(method: &Method, mr: MrId, row: &TransformedRow) -> ExecutionRecord {
    let followup_input = row.followups.get(&mr).cloned().flatten();
    ExecutionRecord {
        exec_id: 0,
        method: method.name().to_string(),
        mr,
        datum_id: row.id,
        source_outcome: method.evaluate(&row.td),
        followup_outcome: followup_input.as_ref().map(|f| method.evaluate(f)),
        source_input: row.td.clone(),
        followup_input,
        verdict: None,
    }
}

/// Run built-in methods over already transformed data.
///
/// Work is split over (method, relation) pairs; with the `parallel` feature
/// the pairs run on the current rayon pool.
pub fn execute(methods: &[String], mrs: &[MrId], rows: &[TransformedRow]) -> Result<Vec<ExecutionRecord>> {
    if rows.is_empty() {
        return Err(Error::Config("no test data to execute".into()));
    }
    let resolved = resolve_methods(methods)?;
    let pairs: Vec<(Method, MrId)> = resolved
        .iter()
        .flat_map(|m| mrs.iter().map(move |&r| (*m, r)))
        .collect();
    let run_pair = |(method, mr): &(Method, MrId)| -> Vec<ExecutionRecord> {
        rows.iter().map(|row| trial(method, *mr, row)).collect()
    };

    #[cfg(feature = "parallel")]
    let chunks: Vec<Vec<ExecutionRecord>> = {
        use rayon::prelude::*;
        pairs.par_iter().map(run_pair).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Vec<ExecutionRecord>> = pairs.iter().map(run_pair).collect();

    Ok(number(chunks.into_iter().flatten()))
}

pub(crate) fn number(records: impl IntoIterator<Item = ExecutionRecord>) -> Vec<ExecutionRecord> {
    records
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            r.exec_id = i as u64;
            r
        })
        .collect()
}

/// Transform and execute in one step.
pub fn run_mt(
    methods: &[String],
    mrs: &[MrSpec],
    data: &[TestDatum],
    range: &ValueRange,
    seed: u64,
) -> Result<Vec<ExecutionRecord>> {
    resolve_methods(methods)?;
    let rows = transform_all(mrs, data, range, seed);
    let ids: Vec<MrId> = mrs.iter().map(|m| m.id()).collect();
    execute(methods, &ids, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FailureKind;
    use crate::mr::MrParams;
    use crate::tdgen::InputType;

    const RANGE: ValueRange = ValueRange {
        low: 1.0,
        high: 50.0,
        input_type: InputType::Int,
    };

    fn data(values: &[&[f64]]) -> Vec<TestDatum> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| TestDatum {
                id: i as u64,
                values: v.to_vec(),
            })
            .collect()
    }

    fn specs(ids: &[MrId]) -> Vec<MrSpec> {
        ids.iter().map(|&id| MrSpec::new(id, MrParams::default()).unwrap()).collect()
    }

    #[test]
    fn average_shifts_by_constant() {
        let recs = run_mt(&["average".into()], &specs(&[MrId::Add]), &data(&[&[1.0, 2.0, 3.0]]), &RANGE, 0).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].source_outcome, ExecutionOutcome::Value(2.0));
        assert_eq!(recs[0].followup_outcome, Some(ExecutionOutcome::Value(5.0)));
        assert_eq!(recs[0].followup_input, Some(vec![4.0, 5.0, 6.0]));
    }

    #[test]
    fn variance_of_singleton_fails_both_sides() {
        let recs = run_mt(&["sampleVariance".into()], &specs(&[MrId::Per]), &data(&[&[4.0]]), &RANGE, 0).unwrap();
        assert_eq!(recs[0].source_outcome.failure_kind(), Some(FailureKind::ArityError));
        assert_eq!(
            recs[0].followup_outcome.as_ref().and_then(|o| o.failure_kind()),
            Some(FailureKind::ArityError)
        );
    }

    #[test]
    fn skipped_transform_keeps_a_record() {
        let recs = run_mt(&["add_values".into()], &specs(&[MrId::Exc]), &data(&[&[], &[1.0]]), &RANGE, 0).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].followup_input.is_none() && recs[0].followup_outcome.is_none());
        assert_eq!(recs[1].followup_input, Some(vec![]));
    }

    #[test]
    fn ordering_is_method_major() {
        let methods: Vec<String> = vec!["average".into(), "median".into()];
        let recs = run_mt(&methods, &specs(&MrId::ALL), &data(&[&[1.0, 2.0], &[3.0, 4.0]]), &RANGE, 1).unwrap();
        assert_eq!(recs.len(), 24);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.exec_id, i as u64);
            assert_eq!(r.method, methods[i / 12]);
            assert_eq!(r.mr, MrId::ALL[(i / 2) % 6]);
            assert_eq!(r.datum_id, (i % 2) as u64);
        }
    }

    #[test]
    fn unknown_method_aborts() {
        let err = run_mt(&["average".into(), "bogus".into()], &specs(&[MrId::Add]), &data(&[&[1.0]]), &RANGE, 0);
        assert!(matches!(err, Err(Error::UnknownMethod(name)) if name == "bogus"));
    }

    #[test]
    fn empty_data_is_rejected() {
        assert!(run_mt(&["average".into()], &specs(&[MrId::Add]), &[], &RANGE, 0).is_err());
    }
}
