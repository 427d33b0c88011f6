use std::fmt::Write as _;
use std::time::Instant;

use hdc_core::objectives::{avg_similarity, weighted_accuracy};
use hdc_core::{ConfusionCounts, Dataset, Result, TrainedModel};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub split: String,
    pub samples: usize,
    pub w_acc: f64,
    pub total_accuracy: f64,
    pub recalls: Vec<Option<f64>>,
    pub confusion: Vec<Vec<u64>>,
    pub inference_ms_per_sample: f64,
}

/// Classifies `data` one sample at a time so the per-sample time is
/// meaningful, then tallies the confusion matrix.
pub fn measure(model: &TrainedModel, data: &Dataset, split: &str) -> Result<Metrics> {
    let start = Instant::now();
    let mut confusion = ConfusionCounts::new(model.classes());
    for (row, &label) in data.rows().zip(data.labels()) {
        confusion.add(label, model.classify(row)?.label, 1);
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    Ok(Metrics {
        split: split.into(),
        samples: data.samples(),
        w_acc: weighted_accuracy(&confusion),
        total_accuracy: confusion.total_accuracy(),
        recalls: confusion.recalls(),
        confusion: (0..model.classes()).map(|k| confusion.row(k).to_vec()).collect(),
        inference_ms_per_sample: elapsed / data.samples().max(1) as f64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub dim: usize,
    pub avg_sim: f64,
    pub robustness: f64,
    pub model_bytes: usize,
    pub metrics: Vec<Metrics>,
}

impl ModelSummary {
    pub fn new(model: &TrainedModel, metrics: Vec<Metrics>) -> Result<Self> {
        let avg_sim = avg_similarity(model.encoders())?;
        Ok(Self {
            dim: model.dim(),
            avg_sim,
            robustness: 1.0 - avg_sim,
            model_bytes: model.serialized_size(),
            metrics,
        })
    }

    pub fn text(&self, labels: &[String]) -> String {
        let mut out = String::new();
        writeln!(out, "D = {}  avgSim = {:.6}  robustness = {:.6}  model size = {} bytes",
            self.dim, self.avg_sim, self.robustness, self.model_bytes).unwrap();
        for m in &self.metrics {
            out.push_str(&metrics_text(m, labels));
        }
        out
    }
}

pub fn metrics_text(m: &Metrics, labels: &[String]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "[{}] samples = {}  wAcc = {:.6}  total accuracy = {:.6}  inference = {:.4} ms/sample",
        m.split, m.samples, m.w_acc, m.total_accuracy, m.inference_ms_per_sample
    )
    .unwrap();
    let width = labels.iter().map(String::len).max().unwrap_or(0).max(5);
    for (k, r) in m.recalls.iter().enumerate() {
        let recall = r.map_or("n/a (no samples)".to_string(), |v| format!("{v:.6}"));
        writeln!(out, "  recall {:>width$}: {recall}", labels[k]).unwrap();
    }
    write!(out, "  confusion (rows true, columns predicted):\n  {:>width$}", "").unwrap();
    for l in labels {
        write!(out, " {l:>width$}").unwrap();
    }
    out.push('\n');
    for (k, row) in m.confusion.iter().enumerate() {
        write!(out, "  {:>width$}", labels[k]).unwrap();
        for c in row {
            write!(out, " {c:>width$}").unwrap();
        }
        out.push('\n');
    }
    out
}
