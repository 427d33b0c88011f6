//! Single-pass class-encoder training and cosine-similarity inference.

use log::warn;
use rayon::prelude::*;

use crate::data::{Dataset, Quantizer};
use crate::error::{HdcError, Result};
use crate::hv::{build_level_table, encode_sample, uniform_flip_budget, FlipBudget, Hypervector, IntVector, LevelTable};
use crate::objectives::ConfusionCounts;
use crate::rng::{substream, Domain};

/// `E_k = sum of X_s over samples with label k`. Labels are 0-based.
pub fn train_encoders(samples: &[IntVector], labels: &[usize], classes: usize) -> Result<Vec<IntVector>> {
    if samples.is_empty() {
        return Err(HdcError::Data("empty training set".into()));
    }
    if samples.len() != labels.len() {
        return Err(HdcError::Shape(format!(
            "{} samples but {} labels",
            samples.len(),
            labels.len()
        )));
    }
    let dim = samples[0].dim();
    let mut encoders = vec![IntVector::zeros(dim); classes];
    for (x, &y) in samples.iter().zip(labels) {
        if y >= classes {
            return Err(HdcError::Data(format!("label {y} outside {classes} classes")));
        }
        encoders[y].add_scaled(x, 1)?;
    }
    let counts = labels.iter().fold(vec![0usize; classes], |mut c, &y| {
        c[y] += 1;
        c
    });
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            warn!("class {k} has no training samples; its encoder is all zeros");
        }
    }
    Ok(encoders)
}

/// `a . b / (|a| |b|)`, or 0 when either norm is zero.
pub fn cosine_similarity(a: &IntVector, b: &IntVector) -> Result<f64> {
    let dot = a.dot(b)?;
    Ok(cosine_from_parts(dot, a.norm_squared(), b.norm_squared()))
}

pub(crate) fn cosine_from_parts(dot: i64, norm_sq_a: i64, norm_sq_b: i64) -> f64 {
    if norm_sq_a == 0 || norm_sq_b == 0 {
        return 0.0;
    }
    let c = dot as f64 / ((norm_sq_a as f64).sqrt() * (norm_sq_b as f64).sqrt());
    c.clamp(-1.0, 1.0)
}

/// Index of the largest value; the earliest index wins ties.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub similarities: Vec<f64>,
}

/// Similarities of `query` against every encoder plus the argmax.
pub fn predict_encoded(query: &IntVector, encoders: &[IntVector]) -> Result<Prediction> {
    let q_norm = query.norm_squared();
    let similarities = encoders
        .iter()
        .map(|e| Ok(cosine_from_parts(query.dot(e)?, q_norm, e.norm_squared())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prediction {
        label: argmax_first(&similarities),
        similarities,
    })
}

/// Quantizer, level table and class encoders: everything inference needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    quantizer: Quantizer,
    table: LevelTable,
    encoders: Vec<IntVector>,
    labels: Vec<String>,
    class_counts: Vec<u64>,
    feature_names: Vec<String>,
}

impl TrainedModel {
    /// Encodes every training sample once and bundles per class.
    pub fn train(train: &Dataset, quantizer: Quantizer, table: LevelTable) -> Result<Self> {
        if quantizer.features() != train.features() {
            return Err(HdcError::Shape(format!(
                "quantizer has {} features, data has {}",
                quantizer.features(),
                train.features()
            )));
        }
        if train.classes() < 2 {
            return Err(HdcError::Data(format!(
                "need at least 2 classes, found {}",
                train.classes()
            )));
        }
        let samples = train
            .rows()
            .map(|row| encode_sample(row, &quantizer, &table))
            .collect::<Result<Vec<_>>>()?;
        let encoders = train_encoders(&samples, train.labels(), train.classes())?;
        Ok(Self {
            quantizer,
            table,
            encoders,
            labels: train.label_names().to_vec(),
            class_counts: train.class_counts(),
            feature_names: train.feature_names().to_vec(),
        })
    }

    /// Baseline model: uniform flip budget over a quantizer calibrated elsewhere.
    pub fn train_baseline(train: &Dataset, quantizer: Quantizer, dim: usize, seed: u64) -> Result<Self> {
        let budget = uniform_flip_budget(dim, quantizer.features(), quantizer.levels())?;
        let table = build_level_table(seed, &budget)?;
        Self::train(train, quantizer, table)
    }

    pub fn from_parts(
        quantizer: Quantizer,
        table: LevelTable,
        encoders: Vec<IntVector>,
        labels: Vec<String>,
        class_counts: Vec<u64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let k = encoders.len();
        if k < 2 || labels.len() != k || class_counts.len() != k {
            return Err(HdcError::Shape(format!(
                "{k} encoders, {} labels, {} class counts",
                labels.len(),
                class_counts.len()
            )));
        }
        if encoders.iter().any(|e| e.dim() != table.dim()) {
            return Err(HdcError::Shape("encoder dimension differs from level table".into()));
        }
        if quantizer.features() != table.features()
            || quantizer.levels() != table.levels()
            || feature_names.len() != table.features()
        {
            return Err(HdcError::Shape("quantizer and level table disagree".into()));
        }
        Ok(Self {
            quantizer,
            table,
            encoders,
            labels,
            class_counts,
            feature_names,
        })
    }

    pub fn classify(&self, query: &[f64]) -> Result<Prediction> {
        let q = encode_sample(query, &self.quantizer, &self.table)?;
        predict_encoded(&q, &self.encoders)
    }

    /// Predictions for every row, in row order.
    pub fn classify_dataset(&self, data: &Dataset) -> Result<Vec<Prediction>> {
        let rows: Vec<&[f64]> = data.rows().collect();
        rows.par_iter().map(|row| self.classify(row)).collect()
    }

    /// Confusion counts of this model on `data`, whose label indices must
    /// follow this model's class order.
    pub fn confusion(&self, data: &Dataset) -> Result<ConfusionCounts> {
        let predicted: Vec<usize> = self.classify_dataset(data)?.iter().map(|p| p.label).collect();
        ConfusionCounts::from_predictions(data.labels(), &predicted, self.classes())
    }

    /// Size in bytes of this model's serialized file.
    pub fn serialized_size(&self) -> usize {
        let names = self.labels.iter().chain(&self.feature_names).map(String::len).sum();
        crate::data::model_file_size(self.dim(), self.table.features(), self.table.levels(), self.classes(), names)
    }

    pub fn encode(&self, x: &[f64]) -> Result<IntVector> {
        encode_sample(x, &self.quantizer, &self.table)
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn table(&self) -> &LevelTable {
        &self.table
    }

    pub fn budget(&self) -> &FlipBudget {
        self.table.budget()
    }

    pub fn encoders(&self) -> &[IntVector] {
        &self.encoders
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.class_counts
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn classes(&self) -> usize {
        self.encoders.len()
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn seed(&self) -> u64 {
        self.table.seed()
    }
}

/// How the level hypervectors of the 1-D boundary experiment are made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelMode {
    /// Independent random vector per level.
    Orthogonal,
    /// Uniform flip schedule, neighbouring levels stay similar.
    Chained,
}

const APPENDIX_LEVELS: usize = 10;

/// One run of the 1-D binary task: ten points evenly spread over `[0, 10]`
/// (`0, 10/9, ..., 10`), class 1 for values `<= 5` and class 2 above, the
/// first nine used for training and the last (value 10) as query. Returns
/// whether the query lands in class 2.
pub fn appendix_trial(dim: usize, mode: LevelMode, seed: u64) -> Result<bool> {
    let quantizer = Quantizer::new(vec![0.0], vec![10.0], APPENDIX_LEVELS)?;
    let levels: Vec<Hypervector> = match mode {
        LevelMode::Chained => {
            let budget = uniform_flip_budget(dim, 1, APPENDIX_LEVELS)?;
            let table = build_level_table(seed, &budget)?;
            (0..APPENDIX_LEVELS)
                .map(|m| table.level_vector(0, m).cloned())
                .collect::<Result<_>>()?
        }
        LevelMode::Orthogonal => {
            let mut rng = substream(seed, Domain::Appendix, 0);
            (0..APPENDIX_LEVELS)
                .map(|_| Hypervector::random(&mut rng, dim))
                .collect::<Result<_>>()?
        }
    };
    let points: Vec<f64> = (0..10).map(|i| i as f64 * 10.0 / 9.0).collect();
    let encode = |x: f64| -> Result<IntVector> {
        Ok(levels[quantizer.quantize_value(x, 0)?].to_int_vector())
    };
    let samples = points[..9].iter().map(|&x| encode(x)).collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = points[..9].iter().map(|&x| usize::from(x > 5.0)).collect();
    let encoders = train_encoders(&samples, &labels, 2)?;
    let query = encode(points[9])?;
    Ok(predict_encoded(&query, &encoders)?.label == 1)
}

/// Fraction of `trials` independent seeds on which the boundary query is
/// classified correctly.
pub fn appendix_experiment(dim: usize, trials: usize, mode: LevelMode, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(HdcError::InvalidArgument("trials must be at least 1".into()));
    }
    let correct = (0..trials as u64)
        .into_par_iter()
        .map(|t| appendix_trial(dim, mode, seed.wrapping_add(t)))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&c| c)
        .count();
    Ok(correct as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Split;
    use crate::hv::random_bipolar;
    use proptest::prelude::*;

    fn iv(v: &[i32]) -> IntVector {
        IntVector::from_entries(v.to_vec())
    }

    #[test]
    fn encoders_are_class_sums() {
        let xs = vec![iv(&[1, -1, 1]), iv(&[1, 1, 1]), iv(&[-1, -1, 1])];
        let e = train_encoders(&xs, &[0, 0, 1], 2).unwrap();
        assert_eq!(e[0], iv(&[2, 0, 2]));
        assert_eq!(e[1], iv(&[-1, -1, 1]));

        let e = train_encoders(&xs, &[2, 0, 1], 3).unwrap();
        assert_eq!(e, vec![xs[1].clone(), xs[2].clone(), xs[0].clone()]);
    }

    #[test]
    fn encoder_errors_and_empty_class() {
        assert!(matches!(train_encoders(&[], &[], 2), Err(HdcError::Data(_))));
        assert!(matches!(
            train_encoders(&[iv(&[1])], &[3], 2),
            Err(HdcError::Data(_))
        ));
        let e = train_encoders(&[iv(&[1, 1])], &[0], 2).unwrap();
        assert!(e[1].is_zero());
    }

    #[test]
    fn cosine_conventions() {
        let v = iv(&[3, -1, 2]);
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_similarity(&v, &v.scaled(-1)).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&v, &IntVector::zeros(3)).unwrap(), 0.0);
        assert!(matches!(
            cosine_similarity(&v, &IntVector::zeros(2)),
            Err(HdcError::Shape(_))
        ));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let q = iv(&[1, 1, 1, 1]);
        let e = vec![iv(&[1, -1, 1, 1]), iv(&[1, 1, -1, 1])];
        let p = predict_encoded(&q, &e).unwrap();
        assert_eq!(p.similarities[0], p.similarities[1]);
        assert_eq!(p.label, 0);
    }

    #[test]
    fn query_matching_an_encoder_exactly() {
        let e = vec![iv(&[1, -1, 1, -1]), iv(&[2, 2, 0, -2]), iv(&[0, 0, 2, 2])];
        let p = predict_encoded(&iv(&[2, 2, 0, -2]), &e).unwrap();
        assert_eq!(p.label, 1);
        assert!((p.similarities[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classify_checks_feature_count() {
        let d = Dataset::new(
            vec![0.0, 1.0, 1.0, 0.0],
            2,
            vec![0, 1],
            vec!["a".into(), "b".into()],
            None,
            Split::Train,
        )
        .unwrap();
        let q = crate::data::calibrate_quantizer(&d, 4).unwrap();
        let m = TrainedModel::train_baseline(&d, q, 64, 1).unwrap();
        assert!(matches!(m.classify(&[0.0]), Err(HdcError::Shape(_))));
        assert_eq!(m.classify(&[0.0, 1.0]).unwrap().label, 0);
        assert_eq!(m.classify(&[1.0, 0.0]).unwrap().label, 1);
        // Retraining reproduces identical encoders.
        let q = crate::data::calibrate_quantizer(&d, 4).unwrap();
        assert_eq!(TrainedModel::train_baseline(&d, q, 64, 1).unwrap(), m);
    }

    #[test]
    fn chained_boundary_query_is_class_two() {
        assert!(appendix_trial(1024, LevelMode::Chained, 0).unwrap());
        assert_eq!(
            appendix_experiment(1024, 1, LevelMode::Chained, 17).unwrap(),
            appendix_experiment(1024, 1, LevelMode::Chained, 17).unwrap()
        );
        assert!(appendix_experiment(64, 0, LevelMode::Chained, 0).is_err());
    }

    proptest! {
        #[test]
        fn positive_scaling_keeps_argmax(seed in any::<u64>(), k in 2usize..5, which in 0usize..5, factor in 1i32..20) {
            let which = which % k;
            let dim = 64;
            let encoders: Vec<IntVector> = (0..k)
                .map(|i| {
                    let mut e = IntVector::zeros(dim);
                    for j in 0..3 {
                        e.add_hypervector(&random_bipolar(seed.wrapping_add((i * 3 + j) as u64), dim).unwrap());
                    }
                    e
                })
                .collect();
            let q = random_bipolar(seed ^ 0xABCD, dim).unwrap().to_int_vector();
            let before = predict_encoded(&q, &encoders).unwrap();
            let mut scaled = encoders.clone();
            scaled[which] = scaled[which].scaled(factor);
            let after = predict_encoded(&q, &scaled).unwrap();
            for s in &after.similarities {
                prop_assert!(s.abs() <= 1.0 + 1e-12);
            }
            // Scaling leaves each cosine unchanged up to rounding; compare argmax
            // only where the decision is not a near tie.
            let mut sorted = before.similarities.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if sorted[0] - sorted[1] > 1e-9 {
                prop_assert_eq!(before.label, after.label);
            }
        }

        #[test]
        fn training_ignores_sample_order(seed in any::<u64>(), perm_seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let xs: Vec<IntVector> = (0..8)
                .map(|i| random_bipolar(seed.wrapping_add(i), 32).unwrap().to_int_vector())
                .collect();
            let ys: Vec<usize> = (0..8).map(|i| i % 3).collect();
            let mut idx: Vec<usize> = (0..8).collect();
            idx.shuffle(&mut substream(perm_seed, Domain::Standalone, 0));
            let xs2: Vec<IntVector> = idx.iter().map(|&i| xs[i].clone()).collect();
            let ys2: Vec<usize> = idx.iter().map(|&i| ys[i]).collect();
            prop_assert_eq!(train_encoders(&xs, &ys, 3).unwrap(), train_encoders(&xs2, &ys2, 3).unwrap());
        }
    }
}
