use std::fmt::Write as _;
use std::path::Path;

use super::{write_atomic, Dataset};
use crate::error::{HdcError, Result};
use crate::model::TrainedModel;

/// Writes one row per sample: `D` integer hypervector entries then the
/// class name. Header: `d1,...,dD,label`.
pub fn export_sample_hypervectors(model: &TrainedModel, data: &Dataset, path: &Path) -> Result<()> {
    if data.features() != model.table().features() {
        return Err(HdcError::Shape(format!(
            "model expects {} features, data has {}",
            model.table().features(),
            data.features()
        )));
    }
    let mut out = String::new();
    for i in 1..=model.dim() {
        write!(out, "d{i},").unwrap();
    }
    out.push_str("label\n");
    for (row, &label) in data.rows().zip(data.labels()) {
        for v in model.encode(row)?.entries() {
            write!(out, "{v},").unwrap();
        }
        out.push_str(&data.label_names()[label]);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
