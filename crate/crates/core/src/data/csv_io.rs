use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{write_atomic, Dataset, Split};
use crate::error::{HdcError, Result};

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// A bare integer selects by 0-based index, anything else by name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Reads a headed CSV. Labels map to dense indices in first-appearance
/// order, unless `known_labels` is given (test/query data), in which case
/// that mapping is reused and unseen labels are an error.
pub fn load_dataset_csv(
    path: &Path,
    label: &LabelColumn,
    known_labels: Option<&[String]>,
    split: Split,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => HdcError::io(path, io),
                _ => unreachable!(),
            },
            _ => HdcError::parse(path, e.to_string()),
        })?;

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| HdcError::parse(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 || header.iter().all(String::is_empty) {
        return Err(HdcError::parse(
            path,
            "header must name at least one feature and a label column",
        ));
    }
    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(HdcError::parse(path, format!("duplicate header name '{name}'")));
        }
    }
    let label_idx = match label {
        LabelColumn::Last => header.len() - 1,
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => {
            return Err(HdcError::parse(
                path,
                format!("label column index {i} but only {} columns", header.len()),
            ))
        }
        LabelColumn::Name(name) => header.iter().position(|h| h == name).ok_or_else(|| {
            HdcError::parse(path, format!("no column named '{name}' in header"))
        })?,
    };
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut label_names: Vec<String> = known_labels.map(<[String]>::to_vec).unwrap_or_default();
    let mut label_map: HashMap<String, usize> = label_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HdcError::parse(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(HdcError::parse(
                path,
                format!(
                    "line {line}: expected {} fields, found {}",
                    header.len(),
                    record.len()
                ),
            ));
        }
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                let idx = match label_map.get(cell) {
                    Some(&idx) => idx,
                    None if known_labels.is_some() => {
                        return Err(HdcError::Data(format!(
                            "{}: line {line}: label '{cell}' was not seen in training",
                            path.display()
                        )))
                    }
                    None => {
                        label_names.push(cell.to_string());
                        label_map.insert(cell.to_string(), label_names.len() - 1);
                        label_names.len() - 1
                    }
                };
                labels.push(idx);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    HdcError::parse(
                        path,
                        format!("line {line}, column '{}': '{cell}' is not a number", header[i]),
                    )
                })?;
                if !v.is_finite() {
                    return Err(HdcError::parse(
                        path,
                        format!("line {line}, column '{}': non-finite value '{cell}'", header[i]),
                    ));
                }
                features.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(HdcError::Data(format!("{} has no samples", path.display())));
    }
    Dataset::new(
        features,
        feature_names.len(),
        labels,
        label_names,
        Some(feature_names),
        split,
    )
}

/// Writes features followed by a `label` column, atomically.
pub fn write_dataset_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for name in dataset.feature_names() {
        write!(out, "{name},").unwrap();
    }
    out.push_str("label\n");
    for (row, &label) in dataset.rows().zip(dataset.labels()) {
        for v in row {
            write!(out, "{v},").unwrap();
        }
        out.push_str(&dataset.label_names()[label]);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
