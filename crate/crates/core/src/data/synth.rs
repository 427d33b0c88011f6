//! Four-class, two-feature synthetic dataset whose class boundaries sit on
//! specific quantization levels of a 20-level quantizer.
//!
//! Both features live on `[0, 1]`. With `M = 20` uniform levels, feature 1
//! changes class at level indices 5, 10 and 15 (levels 6, 11, 16) and
//! feature 2 at indices 5 and 15 (levels 6, 16). That cuts the square into
//! a 4 x 3 grid of rectangles; `REGION_CLASS` assigns a class to each.

use rand::seq::SliceRandom;

use super::{Dataset, Split};
use crate::error::{HdcError, Result};
use crate::rng::{substream, Domain};

/// Quantization levels the region boundaries are aligned to.
pub const MOTIVATIONAL_LEVELS: usize = 20;

/// Region lookup, `REGION_CLASS[band of f2][band of f1]`, classes 0..4
/// (named `C1`..`C4`). Feature-1 bands: level indices `0..5`, `5..10`,
/// `10..15`, `15..20`. Feature-2 bands: `0..5`, `5..15`, `15..20`.
///
/// ```text
///   f2 high  | C4 C4 C3 C3
///   f2 mid   | C1 C2 C2 C3
///   f2 low   | C1 C1 C2 C2
///              f1 ->
/// ```
const REGION_CLASS: [[usize; 4]; 3] = [[0, 0, 1, 1], [0, 1, 1, 2], [3, 3, 2, 2]];

fn level_of(x: f64) -> usize {
    ((x * MOTIVATIONAL_LEVELS as f64).floor() as usize).min(MOTIVATIONAL_LEVELS - 1)
}

/// Class index for a point of the unit square.
pub fn motivational_class(f1: f64, f2: f64) -> usize {
    let b1 = match level_of(f1) {
        0..=4 => 0,
        5..=9 => 1,
        10..=14 => 2,
        _ => 3,
    };
    let b2 = match level_of(f2) {
        0..=4 => 0,
        5..=14 => 1,
        _ => 2,
    };
    REGION_CLASS[b2][b1]
}

/// `grid_per_axis^2` points at `i / (grid_per_axis - 1)` on both axes, so
/// the calibrated range is exactly `[0, 1]`. The seed only fixes the row
/// order.
pub fn generate_motivational(grid_per_axis: usize, seed: u64) -> Result<Dataset> {
    if grid_per_axis < 20 {
        return Err(HdcError::InvalidArgument(format!(
            "grid needs at least 20 points per axis, got {grid_per_axis}"
        )));
    }
    let step = (grid_per_axis - 1) as f64;
    let mut points: Vec<(f64, f64)> = (0..grid_per_axis)
        .flat_map(|i| (0..grid_per_axis).map(move |j| (i as f64 / step, j as f64 / step)))
        .collect();
    points.shuffle(&mut substream(seed, Domain::Synthetic, grid_per_axis as u64));

    let mut features = Vec::with_capacity(points.len() * 2);
    let mut labels = Vec::with_capacity(points.len());
    for (x, y) in points {
        features.push(x);
        features.push(y);
        labels.push(motivational_class(x, y));
    }
    Dataset::new(
        features,
        2,
        labels,
        (1..=4).map(|k| format!("C{k}")).collect(),
        Some(vec!["f1".into(), "f2".into()]),
        Split::Train,
    )
}
