//! Mergeable sample moments.
//!
//! Values are quantized to a fixed-point grid of step `2^-60` and summed in
//! 128-bit integers, so accumulation is associative: merging partial
//! accumulators in any grouping gives bit-identical results to a single pass.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const SCALE: f64 = (1u128 << 60) as f64;
/// Largest magnitude accepted by [`MomentAccumulator::push`].
pub const MAX_ABS_VALUE: f64 = (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    count: u64,
    sum: i128,
    sum_sq: i128,
}

fn quantize(x: f64) -> i128 {
    (x * SCALE).round() as i128
}

fn overflow() -> Error {
    invalid("moment accumulator overflow")
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite { at: x });
        }
        if x.abs() > MAX_ABS_VALUE {
            return Err(invalid(format!(
                "value {x} exceeds the accumulator range {MAX_ABS_VALUE}"
            )));
        }
        self.count = self.count.checked_add(1).ok_or_else(overflow)?;
        self.sum = self.sum.checked_add(quantize(x)).ok_or_else(overflow)?;
        self.sum_sq = self.sum_sq.checked_add(quantize(x * x)).ok_or_else(overflow)?;
        Ok(())
    }

    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        self.count = self.count.checked_add(other.count).ok_or_else(overflow)?;
        self.sum = self.sum.checked_add(other.sum).ok_or_else(overflow)?;
        self.sum_sq = self.sum_sq.checked_add(other.sum_sq).ok_or_else(overflow)?;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum as f64 / SCALE / self.count as f64
    }

    /// Unbiased sample variance; `NaN` with fewer than two values.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let s = self.sum as f64 / SCALE;
        let ss = self.sum_sq as f64 / SCALE;
        ((ss - s * s / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}
