//! Datasets, quantization, synthetic data and file formats.

mod csv_io;
mod export;
mod model_file;
mod quantizer;
mod synth;

pub use csv_io::{load_dataset_csv, write_dataset_csv, LabelColumn};
pub use export::export_sample_hypervectors;
pub use model_file::{load_model, model_file_size, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use quantizer::{calibrate_quantizer, Quantizer};
pub use synth::{generate_motivational, motivational_class, MOTIVATIONAL_LEVELS};

use sha2::{Digest, Sha256};

use crate::error::{HdcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// `S x N` feature matrix with dense class indices `0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    label_names: Vec<String>,
    feature_names: Vec<String>,
    split: Split,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        label_names: Vec<String>,
        feature_names: Option<Vec<String>>,
        split: Split,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(HdcError::Data("dataset needs at least one feature".into()));
        }
        if labels.is_empty() {
            return Err(HdcError::Data("dataset has no samples".into()));
        }
        if features.len() != labels.len() * n_features {
            return Err(HdcError::Shape(format!(
                "{} values for {} samples of {n_features} features",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(HdcError::Data(format!(
                "non-finite value at sample {}, feature {}",
                i / n_features,
                i % n_features
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_names.len()) {
            return Err(HdcError::Data(format!(
                "label index {bad} outside {} classes",
                label_names.len()
            )));
        }
        let feature_names = match feature_names {
            Some(names) if names.len() != n_features => {
                return Err(HdcError::Shape(format!(
                    "{} feature names for {n_features} features",
                    names.len()
                )))
            }
            Some(names) => names,
            None => (1..=n_features).map(|i| format!("f{i}")).collect(),
        };
        Ok(Self {
            features,
            n_features,
            labels,
            label_names,
            feature_names,
            split,
        })
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    pub fn features(&self) -> usize {
        self.n_features
    }

    pub fn classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.features[s * self.n_features..(s + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks(self.n_features)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// SHA-256 over the numeric content, labels and class names.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_features as u64).to_le_bytes());
        for v in &self.features {
            h.update(v.to_bits().to_le_bytes());
        }
        for &l in &self.labels {
            h.update((l as u64).to_le_bytes());
        }
        for name in &self.label_names {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
        }
        h.finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Writes via a temporary sibling file and renames it into place.
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;

    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => std::path::Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HdcError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| HdcError::io(path, e))?;
    tmp.persist(path).map_err(|e| HdcError::io(path, e.error))?;
    Ok(())
}
