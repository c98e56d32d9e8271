//! The metamorphic relation catalog.
//!
//! Each relation pairs an input transformation with the expected change in
//! output:
//!
//! | id  | transformation                          | expected follow-up output |
//! |-----|-----------------------------------------|---------------------------|
//! | ADD | add `add_constant` to every element     | `>=` source               |
//! | MUL | multiply every element by `mul_factor`  | `>=` source               |
//! | PER | random non-identity permutation         | `==` source               |
//! | INV | negate every element                    | `<=` source               |
//! | INC | append one element drawn from the range | `>=` source               |
//! | EXC | remove the element at a random index    | `<=` source               |

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, StreamRng};
use crate::tdgen::{TestDatum, ValueRange};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MrId {
    #[serde(rename = "MR_ADD")]
    Add,
    #[serde(rename = "MR_MUL")]
    Mul,
    #[serde(rename = "MR_PER")]
    Per,
    #[serde(rename = "MR_INV")]
    Inv,
    #[serde(rename = "MR_INC")]
    Inc,
    #[serde(rename = "MR_EXC")]
    Exc,
}

impl MrId {
    pub const ALL: [MrId; 6] = [MrId::Add, MrId::Mul, MrId::Per, MrId::Inv, MrId::Inc, MrId::Exc];

    pub fn name(self) -> &'static str {
        match self {
            MrId::Add => "MR_ADD",
            MrId::Mul => "MR_MUL",
            MrId::Per => "MR_PER",
            MrId::Inv => "MR_INV",
            MrId::Inc => "MR_INC",
            MrId::Exc => "MR_EXC",
        }
    }
}

impl fmt::Display for MrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MrId {
    type Err = Error;

    /// Accepts `MR_ADD`, `ADD` or `add`.
    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        let short = upper.strip_prefix("MR_").unwrap_or(&upper);
        MrId::ALL
            .into_iter()
            .find(|id| &id.name()[3..] == short)
            .ok_or_else(|| Error::Config(format!("unknown metamorphic relation `{s}`")))
    }
}

/// Expected relation of the follow-up output `f` to the source output `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    /// `f == s`
    Equal,
    /// `f >= s`
    Geq,
    /// `f <= s`
    Leq,
}

pub fn expected_relation(id: MrId) -> Relation {
    match id {
        MrId::Per => Relation::Equal,
        MrId::Add | MrId::Mul | MrId::Inc => Relation::Geq,
        MrId::Inv | MrId::Exc => Relation::Leq,
    }
}

/// Constants used by the ADD and MUL transformations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrParams {
    pub add_constant: f64,
    pub mul_factor: f64,
}

impl Default for MrParams {
    fn default() -> Self {
        MrParams {
            add_constant: 3.0,
            mul_factor: 2.0,
        }
    }
}

impl MrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.add_constant > 0.0 && self.add_constant.is_finite()) {
            return Err(Error::Config(format!(
                "add constant must be positive and finite, got {}",
                self.add_constant
            )));
        }
        if !(self.mul_factor > 1.0 && self.mul_factor.is_finite()) {
            return Err(Error::Config(format!(
                "mul factor must exceed 1, got {}",
                self.mul_factor
            )));
        }
        Ok(())
    }
}

/// One relation of the catalog. The relation is fixed by the id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrSpec {
    id: MrId,
    params: MrParams,
}

impl MrSpec {
    pub fn new(id: MrId, params: MrParams) -> Result<Self> {
        params.validate()?;
        Ok(MrSpec { id, params })
    }

    /// The six relations with shared parameters.
    pub fn catalog(params: MrParams) -> Result<Vec<MrSpec>> {
        MrId::ALL.into_iter().map(|id| MrSpec::new(id, params)).collect()
    }

    pub fn id(&self) -> MrId {
        self.id
    }

    pub fn params(&self) -> MrParams {
        self.params
    }

    pub fn relation(&self) -> Relation {
        expected_relation(self.id)
    }
}

/// A follow-up input.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedDatum {
    pub source_id: u64,
    pub mr: MrId,
    pub values: Vec<f64>,
}

/// The transformation cannot be applied to this input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{mr} cannot transform datum {source_id}: {reason}")]
pub struct TransformSkipped {
    pub source_id: u64,
    pub mr: MrId,
    pub reason: &'static str,
}

/// The stream used to transform datum `datum_id` under `mr`.
///
/// It does not depend on the method under test, so one transformed artifact
/// serves every method.
pub fn transform_stream(seed: u64, mr: MrId, datum_id: u64) -> StreamRng {
    rng::stream(seed, &["transform", mr.name(), &datum_id.to_string()])
}

pub fn transform(
    spec: &MrSpec,
    datum: &TestDatum,
    range: &ValueRange,
    rng: &mut StreamRng,
) -> std::result::Result<TransformedDatum, TransformSkipped> {
    let src = &datum.values;
    let values = match spec.id {
        MrId::Add => src.iter().map(|v| v + spec.params.add_constant).collect(),
        MrId::Mul => src.iter().map(|v| v * spec.params.mul_factor).collect(),
        MrId::Inv => src.iter().map(|v| -v).collect(),
        MrId::Per => permute(src, rng),
        MrId::Inc => {
            let mut out = src.clone();
            out.push(range.draw(rng));
            out
        }
        MrId::Exc => {
            if src.is_empty() {
                return Err(TransformSkipped {
                    source_id: datum.id,
                    mr: spec.id,
                    reason: "cannot remove an element from an empty list",
                });
            }
            let at = rng.gen_range(0..src.len() as u64) as usize;
            let mut out = src.clone();
            out.remove(at);
            out
        }
    };
    Ok(TransformedDatum {
        source_id: datum.id,
        mr: spec.id,
        values,
    })
}

/// Fisher-Yates with a `u64` index draw so results match across pointer
/// widths. An identity result is rotated left by one.
fn permute(src: &[f64], rng: &mut StreamRng) -> Vec<f64> {
    let n = src.len();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        order.swap(i, j);
    }
    if n >= 2 && order.iter().enumerate().all(|(i, &o)| i == o) {
        order.rotate_left(1);
    }
    order.into_iter().map(|i| src[i]).collect()
}
