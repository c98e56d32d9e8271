//! Built-in numeric methods under test.
//!
//! Each method maps a list of numbers to one number, or fails with a
//! [`FailureKind`]. Arity is checked before the formula runs; a formula that
//! leaves the finite range yields `OVERFLOW` (infinite) or `NONFINITE` (NaN).
//!
//! Notation: `n` is the list length, `m` the arithmetic mean,
//! `s` the sample standard deviation `sqrt(sum((x - m)^2) / (n - 1))`.
//!
//! | method                     | formula                                               | min n | domain errors               |
//! |----------------------------|-------------------------------------------------------|-------|-----------------------------|
//! | `add_values`               | `sum(x)`                                              | 0     |                             |
//! | `average`                  | `m`                                                   | 1     |                             |
//! | `geometric_mean`           | `exp(mean(ln x))`                                     | 1     | any `x <= 0`                |
//! | `harmonic_mean`            | `n / sum(1/x)`                                        | 1     | any `x == 0`, `sum(1/x) == 0` |
//! | `sampleVariance`           | `sum((x - m)^2) / (n - 1)`                            | 2     |                             |
//! | `populationVariance`       | `sum((x - m)^2) / n`                                  | 1     |                             |
//! | `standardDeviation`        | `s`                                                   | 2     |                             |
//! | `kurtosis`                 | `n(n+1)/((n-1)(n-2)(n-3)) sum(((x-m)/s)^4) - 3(n-1)^2/((n-2)(n-3))` | 4 | zero variance |
//! | `skewness`                 | `n/((n-1)(n-2)) sum(((x-m)/s)^3)`                     | 3     | zero variance               |
//! | `durbinWatson`             | `sum_{i>=1}(x_i - x_{i-1})^2 / sum(x^2)`              | 1     | all elements zero           |
//! | `min_value`                | `min(x)`                                              | 1     |                             |
//! | `max_value`                | `max(x)`                                              | 1     |                             |
//! | `range_value`              | `max(x) - min(x)`                                     | 1     |                             |
//! | `median`                   | middle of sorted `x` (mean of two middles if even)    | 1     |                             |
//! | `product`                  | `prod(x)`                                             | 0     |                             |
//! | `sumOfSquares`             | `sum(x^2)`                                            | 0     |                             |
//! | `sumOfLogs`                | `sum(ln x)`                                           | 0     | any `x <= 0`                |
//! | `meanDeviation`            | `mean(abs(x - m))`                                    | 1     |                             |
//! | `rootMeanSquare`           | `sqrt(sum(x^2) / n)`                                  | 1     |                             |
//! | `autoCorrelation_lag1`     | `sum_{i>=1}(x_i - m)(x_{i-1} - m) / sum((x - m)^2)`   | 2     | zero variance               |
//! | `weightedMeanEqualWeights` | `sum(w x) / sum(w)`, `w = 1`                          | 1     |                             |
//! | `midrange`                 | `(min(x) + max(x)) / 2`                               | 1     |                             |
//! | `trimmedMean10`            | mean after dropping `floor(n/10)` from each end       | 1     |                             |
//! | `coefficientOfVariation`   | `s / m`                                               | 2     | `m == 0`                    |
//! | `lag1Difference_sum`       | `sum_{i>=1}(x_i - x_{i-1})`                           | 2     |                             |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureKind {
    DomainError,
    ArityError,
    Overflow,
    Nonfinite,
    /// External programs only: no response within the deadline.
    Timeout,
}

impl FailureKind {
    pub fn name(self) -> &'static str {
        match self {
            FailureKind::DomainError => "DOMAIN_ERROR",
            FailureKind::ArityError => "ARITY_ERROR",
            FailureKind::Overflow => "OVERFLOW",
            FailureKind::Nonfinite => "NONFINITE",
            FailureKind::Timeout => "TIMEOUT",
        }
    }
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of running one input through a method. `Value` is always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionOutcome {
    Value(f64),
    Failure { kind: FailureKind, message: String },
}

impl ExecutionOutcome {
    pub fn failure(kind: FailureKind, message: impl Into<String>) -> Self {
        ExecutionOutcome::Failure {
            kind,
            message: message.into(),
        }
    }

    /// Wrap a raw result, mapping non-finite values to failures.
    pub fn from_value(v: f64) -> Self {
        if v.is_finite() {
            ExecutionOutcome::Value(v)
        } else if v.is_nan() {
            Self::failure(FailureKind::Nonfinite, "result is NaN")
        } else {
            Self::failure(FailureKind::Overflow, "result is infinite")
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ExecutionOutcome::Value(v) => Some(*v),
            ExecutionOutcome::Failure { .. } => None,
        }
    }

    pub fn failure_kind(&self) -> Option<FailureKind> {
        match self {
            ExecutionOutcome::Value(_) => None,
            ExecutionOutcome::Failure { kind, .. } => Some(*kind),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MethodDescriptor {
    pub name: &'static str,
    pub min_arity: usize,
    pub permutation_invariant: bool,
    pub domain_note: &'static str,
}

type Formula = fn(&[f64]) -> std::result::Result<f64, &'static str>;

/// A resolved corpus method.
#[derive(Clone, Copy)]
pub struct Method {
    descriptor: MethodDescriptor,
    formula: Formula,
}

impl fmt::Debug for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Method").field(&self.descriptor.name).finish()
    }
}

impl Method {
    pub fn descriptor(&self) -> &MethodDescriptor {
        &self.descriptor
    }

    pub fn name(&self) -> &'static str {
        self.descriptor.name
    }

    pub fn evaluate(&self, input: &[f64]) -> ExecutionOutcome {
        let d = &self.descriptor;
        if input.len() < d.min_arity {
            return ExecutionOutcome::failure(
                FailureKind::ArityError,
                format!(
                    "{} needs at least {} element(s), got {}",
                    d.name,
                    d.min_arity,
                    input.len()
                ),
            );
        }
        match (self.formula)(input) {
            Ok(v) => ExecutionOutcome::from_value(v),
            Err(msg) => ExecutionOutcome::failure(FailureKind::DomainError, msg),
        }
    }
}

macro_rules! method {
    ($name:literal, $arity:expr, $perm:expr, $note:literal, $f:expr) => {
        Method {
            descriptor: MethodDescriptor {
                name: $name,
                min_arity: $arity,
                permutation_invariant: $perm,
                domain_note: $note,
            },
            formula: $f,
        }
    };
}

static CORPUS: [Method; 25] = [
    method!("add_values", 0, true, "any list", |x| Ok(sum(x))),
    method!("average", 1, true, "at least 1 element", |x| Ok(mean(x))),
    method!(
        "geometric_mean",
        1,
        true,
        "at least 1 element; all elements must be > 0",
        geometric_mean
    ),
    method!(
        "harmonic_mean",
        1,
        true,
        "at least 1 element; no element may be 0; reciprocals must not sum to 0",
        harmonic_mean
    ),
    method!("sampleVariance", 2, true, "at least 2 elements", |x| Ok(
        central_sq(x) / (x.len() - 1) as f64
    )),
    method!("populationVariance", 1, true, "at least 1 element", |x| Ok(
        central_sq(x) / x.len() as f64
    )),
    method!("standardDeviation", 2, true, "at least 2 elements", |x| Ok(
        sample_sd(x)
    )),
    method!(
        "kurtosis",
        4,
        true,
        "at least 4 elements; variance must be non-zero",
        kurtosis
    ),
    method!(
        "skewness",
        3,
        true,
        "at least 3 elements; variance must be non-zero",
        skewness
    ),
    method!(
        "durbinWatson",
        1,
        false,
        "at least 1 element; not all elements 0",
        durbin_watson
    ),
    method!("min_value", 1, true, "at least 1 element", |x| Ok(
        x.iter().copied().fold(f64::INFINITY, f64::min)
    )),
    method!("max_value", 1, true, "at least 1 element", |x| Ok(
        x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    )),
    method!("range_value", 1, true, "at least 1 element", |x| {
        let (lo, hi) = min_max(x);
        Ok(hi - lo)
    }),
    method!("median", 1, true, "at least 1 element", median),
    method!("product", 0, true, "any list", |x| Ok(x.iter().product())),
    method!("sumOfSquares", 0, true, "any list", |x| Ok(
        x.iter().map(|v| v * v).sum()
    )),
    method!(
        "sumOfLogs",
        0,
        true,
        "all elements must be > 0",
        sum_of_logs
    ),
    method!("meanDeviation", 1, true, "at least 1 element", |x| {
        let m = mean(x);
        Ok(x.iter().map(|v| (v - m).abs()).sum::<f64>() / x.len() as f64)
    }),
    method!("rootMeanSquare", 1, true, "at least 1 element", |x| Ok(
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    )),
    method!(
        "autoCorrelation_lag1",
        2,
        false,
        "at least 2 elements; variance must be non-zero",
        autocorrelation_lag1
    ),
    method!(
        "weightedMeanEqualWeights",
        1,
        true,
        "at least 1 element",
        |x| {
            let (num, den) = x.iter().fold((0.0, 0.0), |(n, d), v| (n + v, d + 1.0));
            Ok(num / den)
        }
    ),
    method!("midrange", 1, true, "at least 1 element", |x| {
        let (lo, hi) = min_max(x);
        Ok((lo + hi) / 2.0)
    }),
    method!("trimmedMean10", 1, true, "at least 1 element", |x| {
        let sorted = sorted(x);
        let cut = sorted.len() / 10;
        Ok(mean(&sorted[cut..sorted.len() - cut]))
    }),
    method!(
        "coefficientOfVariation",
        2,
        true,
        "at least 2 elements; mean must be non-zero",
        coefficient_of_variation
    ),
    method!(
        "lag1Difference_sum",
        2,
        false,
        "at least 2 elements",
        |x| Ok(x.windows(2).map(|w| w[1] - w[0]).sum())
    ),
];

/// The corpus in its fixed order.
pub fn list_methods() -> Vec<MethodDescriptor> {
    CORPUS.iter().map(|m| m.descriptor).collect()
}

pub fn resolve(name: &str) -> Result<Method> {
    CORPUS
        .iter()
        .find(|m| m.descriptor.name == name)
        .copied()
        .ok_or_else(|| Error::UnknownMethod(name.to_string()))
}

pub fn evaluate(name: &str, input: &[f64]) -> Result<ExecutionOutcome> {
    Ok(resolve(name)?.evaluate(input))
}

fn sum(x: &[f64]) -> f64 {
    x.iter().sum()
}

fn mean(x: &[f64]) -> f64 {
    sum(x) / x.len() as f64
}

fn central_sq(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum()
}

fn sample_sd(x: &[f64]) -> f64 {
    (central_sq(x) / (x.len() - 1) as f64).sqrt()
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

type FormulaResult = std::result::Result<f64, &'static str>;

fn geometric_mean(x: &[f64]) -> FormulaResult {
    if x.iter().any(|&v| v <= 0.0) {
        return Err("geometric mean requires all elements > 0");
    }
    Ok((x.iter().map(|v| v.ln()).sum::<f64>() / x.len() as f64).exp())
}

fn harmonic_mean(x: &[f64]) -> FormulaResult {
    if x.iter().any(|&v| v == 0.0) {
        return Err("harmonic mean is undefined with a zero element");
    }
    let recip: f64 = x.iter().map(|v| 1.0 / v).sum();
    if recip == 0.0 {
        return Err("harmonic mean is undefined when reciprocals sum to zero");
    }
    Ok(x.len() as f64 / recip)
}

fn standardized_moment_sum(x: &[f64], power: i32) -> std::result::Result<f64, &'static str> {
    let m = mean(x);
    let s = sample_sd(x);
    if s == 0.0 {
        return Err("variance is zero");
    }
    Ok(x.iter().map(|v| ((v - m) / s).powi(power)).sum())
}

fn kurtosis(x: &[f64]) -> FormulaResult {
    let n = x.len() as f64;
    let fourth = standardized_moment_sum(x, 4)?;
    let scale = n * (n + 1.0) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    let correction = 3.0 * (n - 1.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));
    Ok(scale * fourth - correction)
}

fn skewness(x: &[f64]) -> FormulaResult {
    let n = x.len() as f64;
    let third = standardized_moment_sum(x, 3)?;
    Ok(n / ((n - 1.0) * (n - 2.0)) * third)
}

fn durbin_watson(x: &[f64]) -> FormulaResult {
    let den: f64 = x.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err("Durbin-Watson statistic is undefined for an all-zero series");
    }
    let num: f64 = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(num / den)
}

fn median(x: &[f64]) -> FormulaResult {
    let s = sorted(x);
    let n = s.len();
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    })
}

fn sum_of_logs(x: &[f64]) -> FormulaResult {
    if x.iter().any(|&v| v <= 0.0) {
        return Err("logarithm requires all elements > 0");
    }
    Ok(x.iter().map(|v| v.ln()).sum())
}

fn autocorrelation_lag1(x: &[f64]) -> FormulaResult {
    let den = central_sq(x);
    if den == 0.0 {
        return Err("autocorrelation is undefined for zero variance");
    }
    let m = mean(x);
    let num: f64 = x.windows(2).map(|w| (w[1] - m) * (w[0] - m)).sum();
    Ok(num / den)
}

fn coefficient_of_variation(x: &[f64]) -> FormulaResult {
    let m = mean(x);
    if m == 0.0 {
        return Err("coefficient of variation is undefined for zero mean");
    }
    Ok(sample_sd(x) / m)
}
