//! Constraint mining over labeled trials.
//!
//! Each trial's source input is reduced to a fixed set of [`DataFeatures`].
//! The miner enumerates every atom (boolean feature or its negation, and
//! `feature < c` / `feature >= c` for each observed value `c` of a numeric
//! feature) and every conjunction of two atoms on different features, then
//! scores each candidate against each verdict status:
//!
//! - support: trials where the predicate holds and the status matches
//! - precision: support / trials where the predicate holds
//! - recall: support / trials with that status
//!
//! A conjunction is kept only when its precision beats both of its atoms.
//! Candidates are evaluated as bitsets over the trials.

use std::cmp::Reverse;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::checker::VerdictStatus;
use crate::mr::MrId;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataFeatures {
    pub length: u64,
    pub min_val: Option<f64>,
    pub max_val: Option<f64>,
    pub sum_val: Option<f64>,
    pub has_negative: bool,
    pub has_zero: bool,
    pub has_duplicates: bool,
    pub is_empty: bool,
    pub all_positive: bool,
    pub is_sorted: bool,
}

pub fn featurize(input: &[f64]) -> DataFeatures {
    let mut sorted = input.to_vec();
    sorted.sort_by(f64::total_cmp);
    let is_empty = input.is_empty();
    DataFeatures {
        length: input.len() as u64,
        min_val: sorted.first().copied(),
        max_val: sorted.last().copied(),
        sum_val: (!is_empty).then(|| input.iter().sum()),
        has_negative: input.iter().any(|&v| v < 0.0),
        has_zero: input.iter().any(|&v| v == 0.0),
        has_duplicates: sorted.windows(2).any(|w| w[0] == w[1]),
        is_empty,
        all_positive: !is_empty && input.iter().all(|&v| v > 0.0),
        is_sorted: input.windows(2).all(|w| w[0] <= w[1]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoolFeature {
    HasNegative,
    HasZero,
    HasDuplicates,
    IsEmpty,
    AllPositive,
    IsSorted,
}

impl BoolFeature {
    pub const ALL: [BoolFeature; 6] = [
        BoolFeature::HasNegative,
        BoolFeature::HasZero,
        BoolFeature::HasDuplicates,
        BoolFeature::IsEmpty,
        BoolFeature::AllPositive,
        BoolFeature::IsSorted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoolFeature::HasNegative => "has_negative",
            BoolFeature::HasZero => "has_zero",
            BoolFeature::HasDuplicates => "has_duplicates",
            BoolFeature::IsEmpty => "is_empty",
            BoolFeature::AllPositive => "all_positive",
            BoolFeature::IsSorted => "is_sorted",
        }
    }

    pub fn get(self, f: &DataFeatures) -> bool {
        match self {
            BoolFeature::HasNegative => f.has_negative,
            BoolFeature::HasZero => f.has_zero,
            BoolFeature::HasDuplicates => f.has_duplicates,
            BoolFeature::IsEmpty => f.is_empty,
            BoolFeature::AllPositive => f.all_positive,
            BoolFeature::IsSorted => f.is_sorted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumFeature {
    Length,
    MinVal,
    MaxVal,
    SumVal,
}

impl NumFeature {
    pub const ALL: [NumFeature; 4] = [NumFeature::Length, NumFeature::MinVal, NumFeature::MaxVal, NumFeature::SumVal];

    pub fn name(self) -> &'static str {
        match self {
            NumFeature::Length => "length",
            NumFeature::MinVal => "min_val",
            NumFeature::MaxVal => "max_val",
            NumFeature::SumVal => "sum_val",
        }
    }

    /// `None` for min/max/sum of an empty input.
    pub fn get(self, f: &DataFeatures) -> Option<f64> {
        match self {
            NumFeature::Length => Some(f.length as f64),
            NumFeature::MinVal => f.min_val,
            NumFeature::MaxVal => f.max_val,
            NumFeature::SumVal => f.sum_val,
        }
    }
}

/// A predicate over [`DataFeatures`]. Threshold atoms are false when the
/// feature is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Predicate {
    True,
    Is { feature: BoolFeature, value: bool },
    Lt { feature: NumFeature, threshold: f64 },
    Ge { feature: NumFeature, threshold: f64 },
    And { args: Vec<Predicate> },
}

impl Predicate {
    pub fn eval(&self, f: &DataFeatures) -> bool {
        match self {
            Predicate::True => true,
            Predicate::Is { feature, value } => feature.get(f) == *value,
            Predicate::Lt { feature, threshold } => feature.get(f).is_some_and(|v| v < *threshold),
            Predicate::Ge { feature, threshold } => feature.get(f).is_some_and(|v| v >= *threshold),
            Predicate::And { args } => args.iter().all(|p| p.eval(f)),
        }
    }

    /// Number of atoms; 0 for `true`.
    pub fn complexity(&self) -> usize {
        match self {
            Predicate::True => 0,
            Predicate::And { args } => args.iter().map(Predicate::complexity).sum(),
            _ => 1,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::True => f.write_str("true"),
            Predicate::Is { feature, value: true } => f.write_str(feature.name()),
            Predicate::Is { feature, value: false } => write!(f, "not {}", feature.name()),
            Predicate::Lt { feature, threshold } => write!(f, "{} < {}", feature.name(), threshold),
            Predicate::Ge { feature, threshold } => write!(f, "{} >= {}", feature.name(), threshold),
            Predicate::And { args } => {
                let parts: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                f.write_str(&parts.join(" and "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRule {
    pub predicate: Predicate,
    pub predicted_status: VerdictStatus,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
}

impl ConstraintRule {
    /// `"<predicate> → <status>"`
    pub fn text(&self) -> String {
        format!("{} → {}", self.predicate, self.predicted_status)
    }

    /// A sentence such as "MR_MUL applies to add_values when all_positive".
    pub fn describe(&self, method: &str, mr: MrId) -> String {
        let verb = match self.predicted_status {
            VerdictStatus::NonViolation => "applies to",
            VerdictStatus::Violation => "is violated by",
            VerdictStatus::Invalid => "yields invalid data for",
        };
        match self.predicate {
            Predicate::True => format!("{mr} {verb} {method}"),
            ref p => format!("{mr} {verb} {method} when {p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinerConfig {
    pub min_precision: f64,
    pub min_support: u64,
    /// Cap on thresholds per numeric feature, picked at evenly spaced ranks
    /// of the distinct observed values. `None` uses every observed value.
    pub max_thresholds: Option<usize>,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            min_precision: 0.95,
            min_support: 5,
            max_thresholds: None,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_precision > 0.0 && self.min_precision <= 1.0) {
            return Err(Error::Config(format!(
                "min precision must lie in (0, 1], got {}",
                self.min_precision
            )));
        }
        if self.min_support == 0 {
            return Err(Error::Config("min support must be at least 1".into()));
        }
        if self.max_thresholds == Some(0) {
            return Err(Error::Config("max thresholds must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn from_fn(n: usize, mut f: impl FnMut(usize) -> bool) -> Bits {
        let mut words = vec![0u64; n.div_ceil(64)];
        for i in 0..n {
            if f(i) {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Bits(words)
    }

    fn count(&self) -> u64 {
        self.0.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    fn and_count(&self, other: &Bits) -> u64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| u64::from((a & b).count_ones()))
            .sum()
    }
}

struct Atom {
    predicate: Predicate,
    /// Atoms sharing a feature are never conjoined.
    feature: usize,
    bits: Bits,
    covered: u64,
    /// Precision per status, in `VerdictStatus::ALL` order.
    precision: [f64; 3],
}

fn thresholds(values: Vec<f64>, cap: Option<usize>) -> Vec<f64> {
    let mut distinct = values;
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    match cap {
        Some(k) if distinct.len() > k => {
            let last = distinct.len() - 1;
            let mut picked: Vec<f64> = (0..k)
                .map(|i| distinct[if k == 1 { 0 } else { i * last / (k - 1) }])
                .collect();
            picked.dedup();
            picked
        }
        _ => distinct,
    }
}

fn build_atoms(features: &[&DataFeatures], labels: &[Bits; 3], cap: Option<usize>) -> Vec<Atom> {
    let n = features.len();
    let mut candidates: Vec<(Predicate, usize)> = Vec::new();
    for (k, &bf) in BoolFeature::ALL.iter().enumerate() {
        for value in [true, false] {
            candidates.push((Predicate::Is { feature: bf, value }, k));
        }
    }
    for (k, &nf) in NumFeature::ALL.iter().enumerate() {
        let observed: Vec<f64> = features.iter().filter_map(|f| nf.get(f)).collect();
        for c in thresholds(observed, cap) {
            let key = BoolFeature::ALL.len() + k;
            candidates.push((Predicate::Lt { feature: nf, threshold: c }, key));
            candidates.push((Predicate::Ge { feature: nf, threshold: c }, key));
        }
    }
    candidates
        .into_iter()
        .filter_map(|(predicate, feature)| {
            let bits = Bits::from_fn(n, |i| predicate.eval(features[i]));
            let covered = bits.count();
            // constant atoms carry no information beyond `true`
            if covered == 0 || covered == n as u64 {
                return None;
            }
            let precision = labels.each_ref().map(|l| bits.and_count(l) as f64 / covered as f64);
            Some(Atom {
                predicate,
                feature,
                bits,
                covered,
                precision,
            })
        })
        .collect()
}

/// Sort key: precision and recall descending (both are non-negative, so
/// their bit patterns order like the values), then fewer atoms, then text.
fn rank_key(r: &ConstraintRule) -> (Reverse<u64>, Reverse<u64>, usize, String, VerdictStatus) {
    (
        Reverse(r.precision.to_bits()),
        Reverse(r.recall.to_bits()),
        r.predicate.complexity(),
        r.predicate.to_string(),
        r.predicted_status,
    )
}

/// Mine rules that predict a trial's status from its input features.
///
/// Returned rules meet `min_precision` and `min_support`, best first:
/// higher precision, then higher recall, then fewer atoms, then predicate
/// text. When every trial has the same status the single rule
/// `true → status` is returned.
pub fn mine(trials: &[(DataFeatures, VerdictStatus)], config: &MinerConfig) -> Result<Vec<ConstraintRule>> {
    config.validate()?;
    let Some((_, first)) = trials.first() else {
        return Err(Error::Config("cannot mine constraints from zero trials".into()));
    };
    let n = trials.len();
    if trials.iter().all(|(_, s)| s == first) {
        return Ok(vec![ConstraintRule {
            predicate: Predicate::True,
            predicted_status: *first,
            support: n as u64,
            precision: 1.0,
            recall: 1.0,
        }]);
    }

    let labels = VerdictStatus::ALL.map(|s| Bits::from_fn(n, |i| trials[i].1 == s));
    let class_sizes = labels.each_ref().map(Bits::count);
    let features: Vec<&DataFeatures> = trials.iter().map(|(f, _)| f).collect();
    let atoms = build_atoms(&features, &labels, config.max_thresholds);

    // support per status for a coverage set; returns rules passing the bars
    let emit = |predicate: &dyn Fn() -> Predicate, covered: u64, support: [u64; 3], floor: [f64; 3], out: &mut Vec<ConstraintRule>| {
        for (k, status) in VerdictStatus::ALL.into_iter().enumerate() {
            if class_sizes[k] == 0 || support[k] < config.min_support {
                continue;
            }
            let precision = support[k] as f64 / covered as f64;
            if precision < config.min_precision || precision <= floor[k] {
                continue;
            }
            out.push(ConstraintRule {
                predicate: predicate(),
                predicted_status: status,
                support: support[k],
                precision,
                recall: support[k] as f64 / class_sizes[k] as f64,
            });
        }
    };

    let mut rules = Vec::new();
    emit(&|| Predicate::True, n as u64, class_sizes, [-1.0; 3], &mut rules);
    for atom in &atoms {
        let support = labels.each_ref().map(|l| atom.bits.and_count(l));
        emit(&|| atom.predicate.clone(), atom.covered, support, [-1.0; 3], &mut rules);
    }

    let pair_rules = |i: usize| -> Vec<ConstraintRule> {
        let mut out = Vec::new();
        let a = &atoms[i];
        for b in &atoms[i + 1..] {
            if a.feature == b.feature {
                continue;
            }
            let mut covered = 0u64;
            let mut support = [0u64; 3];
            for (w, (x, y)) in a.bits.0.iter().zip(&b.bits.0).enumerate() {
                let both = x & y;
                if both == 0 {
                    continue;
                }
                covered += u64::from(both.count_ones());
                for k in 0..3 {
                    support[k] += u64::from((both & labels[k].0[w]).count_ones());
                }
            }
            if covered == 0 {
                continue;
            }
            let floor = [0, 1, 2].map(|k| a.precision[k].max(b.precision[k]));
            let conj = || {
                let mut args = [a.predicate.clone(), b.predicate.clone()];
                args.sort_by_key(|p| p.to_string());
                Predicate::And { args: args.to_vec() }
            };
            emit(&conj, covered, support, floor, &mut out);
        }
        out
    };

    #[cfg(feature = "parallel")]
    let pairs: Vec<Vec<ConstraintRule>> = {
        use rayon::prelude::*;
        (0..atoms.len()).into_par_iter().map(pair_rules).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let pairs: Vec<Vec<ConstraintRule>> = (0..atoms.len()).map(pair_rules).collect();

    rules.extend(pairs.into_iter().flatten());
    rules.sort_by_cached_key(rank_key);
    Ok(rules)
}

/// The first `k` rules that each add something: a rule is skipped when the
/// trials it covers are a subset of those covered by an already picked rule
/// with the same predicted status. Since rules arrive best first, such a rule
/// can only repeat a narrower version of an earlier one.
pub fn distinct_top(rules: &[ConstraintRule], trials: &[(DataFeatures, VerdictStatus)], k: usize) -> Vec<ConstraintRule> {
    let mut picked: Vec<(Vec<bool>, VerdictStatus)> = Vec::new();
    let mut out = Vec::new();
    for rule in rules {
        if out.len() == k {
            break;
        }
        let coverage: Vec<bool> = trials.iter().map(|(f, _)| rule.predicate.eval(f)).collect();
        let redundant = picked.iter().any(|(seen, status)| {
            *status == rule.predicted_status && coverage.iter().zip(seen).all(|(&c, &s)| !c || s)
        });
        if !redundant {
            picked.push((coverage, rule.predicted_status));
            out.push(rule.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn featurize_definitions() {
        let f = featurize(&[-3.0, 5.0]);
        assert!(f.has_negative && !f.all_positive);
        assert_eq!(f.length, 2);
        assert_eq!((f.min_val, f.max_val, f.sum_val), (Some(-3.0), Some(5.0), Some(2.0)));

        let e = featurize(&[]);
        assert!(e.is_empty && e.is_sorted && !e.all_positive);
        assert_eq!((e.min_val, e.max_val, e.sum_val), (None, None, None));

        let d = featurize(&[2.0, 2.0, 7.0]);
        assert!(d.has_duplicates && d.is_sorted && d.all_positive && !d.has_zero);

        let z = featurize(&[3.0, 0.0]);
        assert!(z.has_zero && !z.all_positive && !z.is_sorted && !z.has_negative);
    }

    #[test]
    fn single_status_yields_true_rule() {
        let trials: Vec<_> = (0..10)
            .map(|i| (featurize(&[i as f64]), VerdictStatus::NonViolation))
            .collect();
        let rules = mine(&trials, &MinerConfig::default()).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].text(), "true → NON_VIOLATION");
        assert_eq!(rules[0].precision, 1.0);
    }

    #[test]
    fn recovers_planted_length_rule() {
        let mut trials = Vec::new();
        for len in 0..12usize {
            for k in 0..8 {
                let input: Vec<f64> = (0..len).map(|i| ((i * 7 + k * 3) % 11) as f64 - 3.0).collect();
                let status = if len < 2 {
                    VerdictStatus::Invalid
                } else if k % 2 == 0 {
                    VerdictStatus::Violation
                } else {
                    VerdictStatus::NonViolation
                };
                trials.push((featurize(&input), status));
            }
        }
        let rules = mine(&trials, &MinerConfig::default()).unwrap();
        let top = &rules[0];
        assert_eq!(top.text(), "length < 2 → INVALID");
        assert_eq!((top.precision, top.recall, top.support), (1.0, 1.0, 16));
    }

    #[test]
    fn rendering() {
        let p = Predicate::And {
            args: vec![
                Predicate::Is {
                    feature: BoolFeature::AllPositive,
                    value: false,
                },
                Predicate::Ge {
                    feature: NumFeature::SumVal,
                    threshold: 2.5,
                },
            ],
        };
        assert_eq!(p.to_string(), "not all_positive and sum_val >= 2.5");
        assert_eq!(p.complexity(), 2);
        let rule = ConstraintRule {
            predicate: Predicate::Is {
                feature: BoolFeature::AllPositive,
                value: true,
            },
            predicted_status: VerdictStatus::NonViolation,
            support: 5,
            precision: 1.0,
            recall: 1.0,
        };
        assert_eq!(rule.describe("add_values", MrId::Mul), "MR_MUL applies to add_values when all_positive");
    }

    #[test]
    fn threshold_cap_keeps_extremes() {
        let t = thresholds((0..100).map(f64::from).collect(), Some(5));
        assert_eq!(t, vec![0.0, 24.0, 49.0, 74.0, 99.0]);
        assert_eq!(thresholds(vec![3.0, 1.0, 3.0], Some(5)), vec![1.0, 3.0]);
    }

    #[test]
    fn rejects_bad_config() {
        let trials = vec![(featurize(&[1.0]), VerdictStatus::Violation)];
        let bad = MinerConfig {
            min_precision: 0.0,
            ..MinerConfig::default()
        };
        assert!(mine(&trials, &bad).is_err());
        assert!(mine(&[], &MinerConfig::default()).is_err());
    }
}
