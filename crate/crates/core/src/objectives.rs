//! Accuracy and robustness objectives plus the candidate-evaluation
//! pipeline `budget -> level table -> sample vectors -> encoders -> scores`.

use std::collections::BTreeMap;

use log::warn;

use crate::data::{Dataset, Quantizer};
use crate::error::{HdcError, Result};
use crate::hv::{build_level_table, FlipBudget, IntVector};
use crate::model::{cosine_from_parts, cosine_similarity, predict_encoded};

/// Lower clamp applied to each pairwise similarity before the geometric mean.
pub const SIMILARITY_FLOOR: f64 = 1e-12;

/// `K x K` counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionCounts {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(HdcError::Shape("confusion matrix must be square".into()));
        }
        Ok(Self {
            classes: k,
            counts: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(HdcError::Shape(format!(
                "{} labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut c = Self::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= classes || p >= classes {
                return Err(HdcError::Data(format!("class index outside {classes} classes")));
            }
            c.add(t, p, 1);
        }
        Ok(c)
    }

    pub fn add(&mut self, truth: usize, predicted: usize, count: u64) {
        self.counts[truth * self.classes + predicted] += count;
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.classes..(truth + 1) * self.classes]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|k| self.get(k, k)).sum()
    }

    /// `TP_k / (TP_k + FN_k)` per class, `None` for classes with no samples.
    pub fn recalls(&self) -> Vec<Option<f64>> {
        (0..self.classes)
            .map(|k| {
                let support: u64 = self.row(k).iter().sum();
                (support > 0).then(|| self.get(k, k) as f64 / support as f64)
            })
            .collect()
    }

    /// Classes with no true samples; they are left out of [`weighted_accuracy`].
    pub fn empty_classes(&self) -> Vec<usize> {
        self.recalls()
            .iter()
            .enumerate()
            .filter_map(|(k, r)| r.is_none().then_some(k))
            .collect()
    }

    pub fn total_accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }
}

/// Macro-averaged recall over classes that have at least one true sample.
pub fn weighted_accuracy(confusion: &ConfusionCounts) -> f64 {
    let recalls: Vec<f64> = confusion.recalls().into_iter().flatten().collect();
    if recalls.len() < confusion.classes() {
        warn!(
            "classes {:?} have no samples and are excluded from the weighted accuracy",
            confusion.empty_classes()
        );
    }
    if recalls.is_empty() {
        return 0.0;
    }
    recalls.iter().sum::<f64>() / recalls.len() as f64
}

/// Raw cosine similarity between every ordered encoder pair.
pub fn pairwise_similarities(encoders: &[IntVector]) -> Result<Vec<Vec<f64>>> {
    encoders
        .iter()
        .map(|a| encoders.iter().map(|b| cosine_similarity(a, b)).collect())
        .collect()
}

/// Geometric-mean similarity: the product of the clamped cosine over all
/// ordered pairs `k != k'`, raised to `1 / K`.
pub fn avg_similarity(encoders: &[IntVector]) -> Result<f64> {
    let k = encoders.len();
    if k < 2 {
        return Err(HdcError::InvalidArgument(format!(
            "average similarity needs at least 2 encoders, got {k}"
        )));
    }
    let norms: Vec<i64> = encoders.iter().map(IntVector::norm_squared).collect();
    let mut log_sum = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let s = cosine_from_parts(encoders[i].dot(&encoders[j])?, norms[i], norms[j]);
                log_sum += s.max(SIMILARITY_FLOOR).ln();
            }
        }
    }
    Ok((log_sum / k as f64).exp().min(1.0))
}

/// Row-sum constraint: every feature flips at most `D / 2` bits in total.
pub fn feasibility(budget: &FlipBudget) -> bool {
    budget.is_feasible()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveScores {
    pub wacc: f64,
    pub avg_sim: f64,
    pub robustness: f64,
    pub feasible: bool,
}

impl ObjectiveScores {
    pub fn new(wacc: f64, avg_sim: f64, feasible: bool) -> Self {
        Self {
            wacc,
            avg_sim,
            robustness: 1.0 - avg_sim,
            feasible,
        }
    }
}

/// Full breakdown of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub scores: ObjectiveScores,
    pub confusion: ConfusionCounts,
    pub encoders: Vec<IntVector>,
}

/// Training split reduced to its distinct quantized level tuples with
/// per-class multiplicities. Samples sharing a tuple share a hypervector,
/// so encoders and predictions only need computing once per tuple.
#[derive(Debug, Clone)]
pub struct TrainingProblem {
    features: usize,
    levels: usize,
    classes: usize,
    samples: usize,
    seed: u64,
    patterns: Vec<(Vec<usize>, Vec<u64>)>,
    fingerprint: String,
}

impl TrainingProblem {
    pub fn new(train: &Dataset, quantizer: &Quantizer, seed: u64) -> Result<Self> {
        if quantizer.features() != train.features() {
            return Err(HdcError::Shape(format!(
                "quantizer has {} features, data has {}",
                quantizer.features(),
                train.features()
            )));
        }
        let k = train.classes();
        if k < 2 {
            return Err(HdcError::Data(format!("need at least 2 classes, found {k}")));
        }
        let mut grouped: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
        for (row, &label) in train.rows().zip(train.labels()) {
            let lv = quantizer.quantize_sample(row)?;
            grouped.entry(lv).or_insert_with(|| vec![0; k])[label] += 1;
        }
        Ok(Self {
            features: train.features(),
            levels: quantizer.levels(),
            classes: k,
            samples: train.samples(),
            seed,
            patterns: grouped.into_iter().collect(),
            fingerprint: train.fingerprint(),
        })
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distinct_patterns(&self) -> usize {
        self.patterns.len()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Runs the pipeline for `budget`. An infeasible budget is evaluated on
    /// its repaired table and reported with `feasible = false`.
    pub fn evaluate_detailed(&self, budget: &FlipBudget) -> Result<Evaluation> {
        if budget.features() != self.features || budget.levels() != self.levels {
            return Err(HdcError::Shape(format!(
                "budget is {}x{} levels, problem is {}x{}",
                budget.features(),
                budget.levels(),
                self.features,
                self.levels
            )));
        }
        let feasible = feasibility(budget);
        let repaired;
        let usable = if feasible {
            budget
        } else {
            repaired = crate::evolve::repair(budget);
            &repaired
        };
        let table = build_level_table(self.seed, usable)?;
        let dim = table.dim();

        let mut vectors = Vec::with_capacity(self.patterns.len());
        let mut encoders = vec![IntVector::zeros(dim); self.classes];
        for (levels, counts) in &self.patterns {
            let mut x = IntVector::zeros(dim);
            for (n, &m) in levels.iter().enumerate() {
                x.add_hypervector(table.level_unchecked(n, m));
            }
            for (k, &c) in counts.iter().enumerate() {
                if c > 0 {
                    encoders[k].add_scaled(&x, c as i32)?;
                }
            }
            vectors.push(x);
        }

        let mut confusion = ConfusionCounts::new(self.classes);
        for (x, (_, counts)) in vectors.iter().zip(&self.patterns) {
            let predicted = predict_encoded(x, &encoders)?.label;
            for (k, &c) in counts.iter().enumerate() {
                if c > 0 {
                    confusion.add(k, predicted, c);
                }
            }
        }
        let scores = ObjectiveScores::new(
            weighted_accuracy(&confusion),
            avg_similarity(&encoders)?,
            feasible,
        );
        Ok(Evaluation {
            scores,
            confusion,
            encoders,
        })
    }

    pub fn evaluate(&self, budget: &FlipBudget) -> Result<ObjectiveScores> {
        Ok(self.evaluate_detailed(budget)?.scores)
    }
}

/// Scores of `budget` on the training split under level seed `seed`.
pub fn evaluate_candidate(
    budget: &FlipBudget,
    train: &Dataset,
    quantizer: &Quantizer,
    seed: u64,
) -> Result<ObjectiveScores> {
    TrainingProblem::new(train, quantizer, seed)?.evaluate(budget)
}
