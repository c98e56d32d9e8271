//! Random test data generation.
//!
//! A purely random fuzzer: each datum is a list whose length is uniform on
//! `[min_len, max_len]` and whose elements are uniform on `[low, high]`.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::report::numbers;
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// Element type produced by the fuzzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputType {
    Int,
    Float,
}

impl std::str::FromStr for InputType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "int" => Ok(InputType::Int),
            "float" => Ok(InputType::Float),
            other => Err(Error::Config(format!(
                "input type must be `int` or `float`, got `{other}`"
            ))),
        }
    }
}

/// When to stop generating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Exactly `n` data. Reproducible.
    Count(u64),
    /// Stop at the first datum completed after this many seconds. The number
    /// of data depends on the machine.
    DurationSecs(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub low: f64,
    pub high: f64,
    pub input_type: InputType,
    pub budget: Budget,
    pub min_len: u64,
    pub max_len: u64,
    pub seed: u64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            low: 1.0,
            high: 50.0,
            input_type: InputType::Int,
            budget: Budget::Count(1000),
            min_len: 2,
            max_len: 20,
            seed: 0,
        }
    }
}

impl FuzzConfig {
    /// Positive integers only, lists long enough for every corpus method.
    pub fn rq1(seed: u64) -> Self {
        FuzzConfig {
            low: 1.0,
            high: 50.0,
            min_len: 4,
            seed,
            ..FuzzConfig::default()
        }
    }

    /// Signed integers and possibly empty lists.
    pub fn rq2(seed: u64) -> Self {
        FuzzConfig {
            low: -15.0,
            high: 15.0,
            min_len: 0,
            seed,
            ..FuzzConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.low.is_finite() || !self.high.is_finite() {
            return Err(Error::Config("low and high must be finite".into()));
        }
        if self.low > self.high {
            return Err(Error::Config(format!(
                "low ({}) must not exceed high ({})",
                self.low, self.high
            )));
        }
        if self.min_len > self.max_len {
            return Err(Error::Config(format!(
                "min_len ({}) must not exceed max_len ({})",
                self.min_len, self.max_len
            )));
        }
        match self.budget {
            Budget::Count(0) => return Err(Error::Config("count must be positive".into())),
            Budget::DurationSecs(s) if !(s > 0.0 && s.is_finite()) => {
                return Err(Error::Config("duration must be a positive number of seconds".into()))
            }
            _ => {}
        }
        self.range().validate()
    }

    pub fn range(&self) -> ValueRange {
        ValueRange {
            low: self.low,
            high: self.high,
            input_type: self.input_type,
        }
    }
}

/// The element domain of a fuzzer run, shared with transformations that
/// draw fresh elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub low: f64,
    pub high: f64,
    pub input_type: InputType,
}

impl ValueRange {
    fn int_bounds(&self) -> (i64, i64) {
        (self.low.ceil() as i64, self.high.floor() as i64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_type == InputType::Int {
            let (lo, hi) = self.int_bounds();
            if lo > hi {
                return Err(Error::Config(format!(
                    "no integer lies in [{}, {}]",
                    self.low, self.high
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, v: f64) -> bool {
        let in_bounds = self.low <= v && v <= self.high;
        match self.input_type {
            InputType::Int => in_bounds && v.fract() == 0.0,
            InputType::Float => in_bounds,
        }
    }

    /// Draw one element. Floats are rounded to 6 decimal places.
    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        match self.input_type {
            InputType::Int => {
                let (lo, hi) = self.int_bounds();
                rng.gen_range(lo..=hi) as f64
            }
            InputType::Float => {
                let raw = if self.low == self.high {
                    self.low
                } else {
                    rng.gen_range(self.low..=self.high)
                };
                let rounded = (raw * 1e6).round() / 1e6;
                rounded.clamp(self.low, self.high)
            }
        }
    }
}

/// One generated input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDatum {
    pub id: u64,
    #[serde(rename = "td", with = "numbers")]
    pub values: Vec<f64>,
}

/// Run the fuzzer.
pub fn generate(config: &FuzzConfig) -> Result<Vec<TestDatum>> {
    config.validate()?;
    let range = config.range();
    let mut stream = rng::stream(config.seed, &["generate"]);
    let mut next = |id: u64| {
        let len = stream.gen_range(config.min_len..=config.max_len);
        let values = (0..len).map(|_| range.draw(&mut stream)).collect();
        TestDatum { id, values }
    };

    match config.budget {
        Budget::Count(n) => Ok((0..n).map(&mut next).collect()),
        Budget::DurationSecs(secs) => {
            let limit = Duration::from_secs_f64(secs);
            let start = Instant::now();
            let mut data = Vec::new();
            loop {
                data.push(next(data.len() as u64));
                if start.elapsed() >= limit {
                    return Ok(data);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(low: f64, high: f64, n: u64, min_len: u64, max_len: u64, seed: u64) -> FuzzConfig {
        FuzzConfig {
            low,
            high,
            input_type: InputType::Int,
            budget: Budget::Count(n),
            min_len,
            max_len,
            seed,
        }
    }

    #[test]
    fn small_int_run_is_bounded_and_repeatable() {
        let c = cfg(1.0, 50.0, 3, 2, 2, 7);
        let a = generate(&c).unwrap();
        assert_eq!(a.len(), 3);
        for (i, d) in a.iter().enumerate() {
            assert_eq!(d.id, i as u64);
            assert_eq!(d.values.len(), 2);
            assert!(d.values.iter().all(|&v| (1.0..=50.0).contains(&v) && v.fract() == 0.0));
        }
        assert_eq!(a, generate(&c).unwrap());
    }

    #[test]
    fn degenerate_range() {
        let data = generate(&cfg(5.0, 5.0, 1, 4, 4, 0)).unwrap();
        assert_eq!(
            data,
            vec![TestDatum {
                id: 0,
                values: vec![5.0; 4]
            }]
        );
    }

    #[test]
    fn symmetric_range_has_zero_mean() {
        let data = generate(&cfg(-15.0, 15.0, 1000, 0, 20, 42)).unwrap();
        assert_eq!(data.len(), 1000);
        let (mut sum, mut n) = (0.0, 0usize);
        for v in data.iter().flat_map(|d| &d.values) {
            sum += v;
            n += 1;
        }
        let mean = sum / n as f64;
        assert!(mean.abs() <= 0.5, "mean {mean}");
        assert!(data.iter().any(|d| d.values.is_empty()));
    }

    #[test]
    fn uniform_frequencies() {
        let data = generate(&cfg(1.0, 50.0, 2000, 5, 15, 3)).unwrap();
        let mut counts = [0usize; 50];
        let mut total = 0usize;
        for v in data.iter().flat_map(|d| &d.values) {
            counts[*v as usize - 1] += 1;
            total += 1;
        }
        assert!(total >= 10_000);
        let expected = total as f64 / 50.0;
        for (i, &c) in counts.iter().enumerate() {
            let rel = (c as f64 - expected).abs() / expected;
            assert!(rel <= 0.3, "value {} freq off by {rel}", i + 1);
        }
    }

    #[test]
    fn float_values_are_rounded() {
        let c = FuzzConfig {
            input_type: InputType::Float,
            low: -1.5,
            high: 2.25,
            ..cfg(0.0, 0.0, 200, 1, 5, 9)
        };
        for v in generate(&c).unwrap().iter().flat_map(|d| d.values.clone()) {
            assert!((-1.5..=2.25).contains(&v));
            assert_eq!((v * 1e6).round() / 1e6, v);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(generate(&cfg(2.0, 1.0, 1, 0, 1, 0)), Err(Error::Config(_))));
        assert!(matches!(generate(&cfg(1.0, 2.0, 1, 3, 1, 0)), Err(Error::Config(_))));
        assert!(matches!(generate(&cfg(1.0, 2.0, 0, 0, 1, 0)), Err(Error::Config(_))));
        assert!(matches!(generate(&cfg(1.2, 1.8, 1, 0, 1, 0)), Err(Error::Config(_))));
    }

    #[test]
    fn duration_budget_produces_data() {
        let c = FuzzConfig {
            budget: Budget::DurationSecs(0.01),
            ..FuzzConfig::default()
        };
        let data = generate(&c).unwrap();
        assert!(!data.is_empty());
        assert!(data.iter().enumerate().all(|(i, d)| d.id == i as u64));
    }
}
