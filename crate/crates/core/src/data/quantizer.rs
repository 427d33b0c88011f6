use log::warn;

use super::Dataset;
use crate::error::{HdcError, Result};

/// Uniform per-feature quantizer calibrated on a training split.
///
/// Level indices are 0-based: index `m` is level `m + 1` of `1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    levels: usize,
}

impl Quantizer {
    pub fn new(mins: Vec<f64>, maxs: Vec<f64>, levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(HdcError::InvalidLevels(format!(
                "need at least 2 levels, got {levels}"
            )));
        }
        if mins.is_empty() || mins.len() != maxs.len() {
            return Err(HdcError::Shape(format!(
                "{} minima vs {} maxima",
                mins.len(),
                maxs.len()
            )));
        }
        for (n, (lo, hi)) in mins.iter().zip(&maxs).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(HdcError::Data(format!(
                    "feature {n} has invalid range [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { mins, maxs, levels })
    }

    pub fn features(&self) -> usize {
        self.mins.len()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    pub fn is_degenerate(&self, n: usize) -> bool {
        self.mins[n] == self.maxs[n]
    }

    /// `clamp(floor((x - min) * M / (max - min)), 0, M - 1)`. The last
    /// interval is closed and out-of-range values clamp to the end levels.
    pub fn quantize_value(&self, x: f64, n: usize) -> Result<usize> {
        if n >= self.features() {
            return Err(HdcError::Index(format!(
                "feature {n} of {}",
                self.features()
            )));
        }
        if !x.is_finite() {
            return Err(HdcError::Data(format!(
                "non-finite value {x} for feature {n}"
            )));
        }
        if self.is_degenerate(n) {
            return Ok(0);
        }
        let span = self.maxs[n] - self.mins[n];
        let pos = ((x - self.mins[n]) * self.levels as f64 / span).floor();
        Ok(pos.clamp(0.0, (self.levels - 1) as f64) as usize)
    }

    pub fn quantize_sample(&self, x: &[f64]) -> Result<Vec<usize>> {
        if x.len() != self.features() {
            return Err(HdcError::Shape(format!(
                "sample has {} features, quantizer expects {}",
                x.len(),
                self.features()
            )));
        }
        x.iter()
            .enumerate()
            .map(|(n, &v)| self.quantize_value(v, n))
            .collect()
    }
}

/// Per-feature min/max over the training split.
pub fn calibrate_quantizer(train: &Dataset, levels: usize) -> Result<Quantizer> {
    let n = train.features();
    let mut mins = vec![f64::INFINITY; n];
    let mut maxs = vec![f64::NEG_INFINITY; n];
    for row in train.rows() {
        for (j, &v) in row.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    let q = Quantizer::new(mins, maxs, levels)?;
    for j in 0..n {
        if q.is_degenerate(j) {
            warn!(
                "feature {} is constant ({}); all its values map to the first level",
                train.feature_names()[j],
                q.mins[j]
            );
        }
    }
    Ok(q)
}
