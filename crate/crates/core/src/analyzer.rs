//! Violation frequencies and applicability classification.
//!
//! A relation applies to a method when not a single trial violated it and
//! none was invalid; it does not apply when every trial violated it. All
//! other pairs are mixed. Invalid trials count toward the total and are
//! reported as their own percentage.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::checker::{Verdict, VerdictStatus};
use crate::mr::MrId;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Applicable,
    NotApplicable,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub n_nonviolation: u64,
    pub n_violation: u64,
    pub n_invalid: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.n_nonviolation + self.n_violation + self.n_invalid
    }

    pub fn add(&mut self, status: VerdictStatus) {
        match status {
            VerdictStatus::NonViolation => self.n_nonviolation += 1,
            VerdictStatus::Violation => self.n_violation += 1,
            VerdictStatus::Invalid => self.n_invalid += 1,
        }
    }

    pub fn merge(&self, other: &Counts) -> Counts {
        Counts {
            n_nonviolation: self.n_nonviolation + other.n_nonviolation,
            n_violation: self.n_violation + other.n_violation,
            n_invalid: self.n_invalid + other.n_invalid,
        }
    }

    /// Exact count comparisons; a single counterexample demotes a pair to
    /// mixed.
    pub fn classify(&self) -> Classification {
        let n = self.total();
        if n > 0 && self.n_nonviolation == n {
            Classification::Applicable
        } else if n > 0 && self.n_violation == n {
            Classification::NotApplicable
        } else {
            Classification::Mixed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMrReport {
    pub method: String,
    pub mr: MrId,
    pub n_trials: u64,
    pub n_nonviolation: u64,
    pub n_violation: u64,
    pub n_invalid: u64,
    pub pct_nonviolation: f64,
    pub pct_violation: f64,
    pub pct_invalid: f64,
    pub classification: Classification,
}

/// Percentage rounded to 4 decimal places.
fn pct(part: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    (part as f64 * 100.0 / total as f64 * 1e4).round() / 1e4
}

impl MethodMrReport {
    pub fn from_counts(method: impl Into<String>, mr: MrId, c: Counts) -> Self {
        let n = c.total();
        MethodMrReport {
            method: method.into(),
            mr,
            n_trials: n,
            n_nonviolation: c.n_nonviolation,
            n_violation: c.n_violation,
            n_invalid: c.n_invalid,
            pct_nonviolation: pct(c.n_nonviolation, n),
            pct_violation: pct(c.n_violation, n),
            pct_invalid: pct(c.n_invalid, n),
            classification: c.classify(),
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            n_nonviolation: self.n_nonviolation,
            n_violation: self.n_violation,
            n_invalid: self.n_invalid,
        }
    }
}

/// Count verdicts per (method, relation), sorted by method name then
/// relation.
pub fn tally(verdicts: &[Verdict]) -> BTreeMap<(String, MrId), Counts> {
    let mut table: BTreeMap<(String, MrId), Counts> = BTreeMap::new();
    for v in verdicts {
        table.entry((v.method.clone(), v.mr)).or_default().add(v.status);
    }
    table
}

pub fn aggregate(verdicts: &[Verdict]) -> Vec<MethodMrReport> {
    tally(verdicts)
        .into_iter()
        .map(|((method, mr), c)| MethodMrReport::from_counts(method, mr, c))
        .collect()
}

/// Method × relation grid. Each cell shows the non-violation and violation
/// percentages, with the invalid share in parentheses when there is one.
/// Cells are marked `A` (applicable), `N` (not applicable) or `M` (mixed).
pub fn render_table(reports: &[MethodMrReport]) -> String {
    let mut mrs: Vec<MrId> = reports.iter().map(|r| r.mr).collect();
    mrs.sort();
    mrs.dedup();
    let mut rows: BTreeMap<&str, BTreeMap<MrId, &MethodMrReport>> = BTreeMap::new();
    for r in reports {
        rows.entry(&r.method).or_default().insert(r.mr, r);
    }
    let cell = |r: &MethodMrReport| {
        let tag = match r.classification {
            Classification::Applicable => 'A',
            Classification::NotApplicable => 'N',
            Classification::Mixed => 'M',
        };
        let mut s = format!("{tag} {:.1}/{:.1}", r.pct_nonviolation, r.pct_violation);
        if r.n_invalid > 0 {
            s.push_str(&format!(" ({:.1})", r.pct_invalid));
        }
        s
    };
    let cells: Vec<Vec<String>> = rows
        .values()
        .map(|row| mrs.iter().map(|mr| row.get(mr).map_or_else(String::new, |r| cell(r))).collect())
        .collect();
    let name_w = rows.keys().map(|m| m.len()).chain([6]).max().unwrap_or(6);
    let cell_w = cells.iter().flatten().map(String::len).chain([6]).max().unwrap_or(6);

    let mut out = format!("{:<name_w$}", "method");
    for mr in &mrs {
        out.push_str(&format!("  {:>cell_w$}", mr.to_string()));
    }
    out.push('\n');
    for (method, row) in rows.keys().zip(&cells) {
        out.push_str(&format!("{method:<name_w$}"));
        for c in row {
            out.push_str(&format!("  {c:>cell_w$}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GtAssessment {
    GtConfirmed,
    GtFullyIncorrect,
    GtPartiallyIncorrectMixed,
}

/// Ground-truth label: 1 when the relation is claimed to always apply.
pub type GroundTruth = BTreeMap<(String, MrId), u8>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtComparison {
    pub method: String,
    pub mr: MrId,
    pub gt: u8,
    pub assessment: GtAssessment,
}

/// Assess one label against observed counts.
///
/// Label 1 is confirmed when every trial passed and fully wrong when none
/// did. Label 0 is confirmed when every trial violated and wrong when none
/// did. Anything in between is a mixed case.
pub fn assess(gt: u8, counts: &Counts) -> GtAssessment {
    let n = counts.total();
    let hits = if gt == 1 {
        counts.n_nonviolation
    } else {
        counts.n_violation
    };
    if n > 0 && hits == n {
        GtAssessment::GtConfirmed
    } else if hits == 0 {
        GtAssessment::GtFullyIncorrect
    } else {
        GtAssessment::GtPartiallyIncorrectMixed
    }
}

pub fn compare_to_groundtruth(reports: &[MethodMrReport], gt: &GroundTruth) -> Result<Vec<GtComparison>> {
    gt.iter()
        .map(|((method, mr), &label)| {
            if label > 1 {
                return Err(Error::Config(format!(
                    "ground truth for {method}/{mr} must be 0 or 1, got {label}"
                )));
            }
            let report = reports
                .iter()
                .find(|r| &r.method == method && r.mr == *mr)
                .ok_or_else(|| Error::MissingReport {
                    method: method.clone(),
                    mr: mr.to_string(),
                })?;
            Ok(GtComparison {
                method: method.clone(),
                mr: *mr,
                gt: label,
                assessment: assess(label, &report.counts()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdicts(method: &str, mr: MrId, nv: usize, v: usize, inv: usize) -> Vec<Verdict> {
        let statuses = std::iter::repeat(VerdictStatus::NonViolation)
            .take(nv)
            .chain(std::iter::repeat(VerdictStatus::Violation).take(v))
            .chain(std::iter::repeat(VerdictStatus::Invalid).take(inv));
        statuses
            .enumerate()
            .map(|(i, status)| Verdict {
                exec_id: i as u64,
                method: method.into(),
                mr,
                status,
                detail: String::new(),
            })
            .collect()
    }

    #[test]
    fn mixed_kurtosis_counts() {
        let r = &aggregate(&verdicts("kurtosis", MrId::Inc, 48, 52, 0))[0];
        assert_eq!(r.n_trials, 100);
        assert_eq!(r.pct_violation, 52.0);
        assert_eq!(r.pct_nonviolation, 48.0);
        assert_eq!(r.classification, Classification::Mixed);
    }

    #[test]
    fn all_pass_is_applicable() {
        let r = &aggregate(&verdicts("average", MrId::Add, 100, 0, 0))[0];
        assert_eq!(r.classification, Classification::Applicable);
        let r = &aggregate(&verdicts("durbinWatson", MrId::Add, 0, 100, 0))[0];
        assert_eq!(r.classification, Classification::NotApplicable);
    }

    #[test]
    fn invalid_data_is_its_own_share() {
        let r = &aggregate(&verdicts("geometric_mean", MrId::Per, 59, 0, 41))[0];
        assert_eq!(r.classification, Classification::Mixed);
        assert_eq!(r.pct_invalid, 41.0);
        assert_eq!(r.pct_violation, 0.0);
    }

    #[test]
    fn one_counterexample_demotes() {
        let r = &aggregate(&verdicts("m", MrId::Add, 9999, 1, 0))[0];
        assert_eq!(r.classification, Classification::Mixed);
        assert_eq!(r.pct_nonviolation, 99.99);
    }

    #[test]
    fn percentages_sum_to_100() {
        let r = &aggregate(&verdicts("m", MrId::Add, 1, 1, 1))[0];
        let sum = r.pct_nonviolation + r.pct_violation + r.pct_invalid;
        assert!((sum - 100.0).abs() <= 0.01);
    }

    fn report(nv: usize, v: usize, inv: usize) -> MethodMrReport {
        aggregate(&verdicts("m", MrId::Add, nv, v, inv)).remove(0)
    }

    #[test]
    fn ground_truth_table() {
        let cases = [
            (1, report(100, 0, 0), GtAssessment::GtConfirmed),
            (1, report(0, 100, 0), GtAssessment::GtFullyIncorrect),
            (1, report(40, 60, 0), GtAssessment::GtPartiallyIncorrectMixed),
            (0, report(0, 100, 0), GtAssessment::GtConfirmed),
            (0, report(48, 52, 0), GtAssessment::GtPartiallyIncorrectMixed),
            (0, report(100, 0, 0), GtAssessment::GtFullyIncorrect),
        ];
        for (gt, r, expected) in cases {
            let table = GroundTruth::from([(("m".to_string(), MrId::Add), gt)]);
            let got = compare_to_groundtruth(&[r], &table).unwrap();
            assert_eq!(got[0].assessment, expected);
        }
    }

    #[test]
    fn table_marks_cells() {
        let mut reports = aggregate(&verdicts("geometric_mean", MrId::Per, 59, 0, 41));
        reports.extend(aggregate(&verdicts("average", MrId::Add, 100, 0, 0)));
        let text = render_table(&reports);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("method"));
        assert!(lines[1].starts_with("average") && lines[1].contains("A 100.0/0.0"));
        assert!(lines[2].contains("M 59.0/0.0 (41.0)"), "{text}");
    }

    #[test]
    fn missing_report_is_a_lookup_error() {
        let table = GroundTruth::from([(("other".to_string(), MrId::Add), 1)]);
        assert!(matches!(
            compare_to_groundtruth(&[report(1, 0, 0)], &table),
            Err(Error::MissingReport { .. })
        ));
    }
}
