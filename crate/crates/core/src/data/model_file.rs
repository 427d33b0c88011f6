//! Binary model format, little-endian throughout:
//!
//! | field              | type / size                                  |
//! |--------------------|----------------------------------------------|
//! | magic              | `b"HDCM"`                                    |
//! | version            | u32 (= 1)                                    |
//! | D, N, M, K         | 4 x u32                                      |
//! | level seed         | u64                                          |
//! | feature minima     | N x f64                                      |
//! | feature maxima     | N x f64                                      |
//! | level table        | N x M vectors, `ceil(D / 8)` bytes each,     |
//! |                    | feature-major; bit `i % 8` of byte `i / 8`   |
//! |                    | set means entry `i` is -1                    |
//! | class encoders     | K x D x i32                                  |
//! | flip budgets       | N x (M - 1) x u32, row-major                 |
//! | class sample counts| K x u64                                      |
//! | class names        | K x (u32 byte length + UTF-8)                |
//! | feature names      | N x (u32 byte length + UTF-8)                |
//!
//! On load the level table is rebuilt from seed and budgets and must match
//! the stored bits exactly.

use std::path::Path;

use super::{write_atomic, Quantizer};
use crate::error::{HdcError, Result};
use crate::hv::{build_level_table, FlipBudget, Hypervector, IntVector};
use crate::model::TrainedModel;

pub const MODEL_MAGIC: [u8; 4] = *b"HDCM";
pub const MODEL_VERSION: u32 = 1;

const FIXED_HEADER: usize = 4 + 4 + 4 * 4 + 8;

/// Serialized size in bytes of a model with the given shape and names.
pub fn model_file_size(
    dim: usize,
    features: usize,
    levels: usize,
    classes: usize,
    name_bytes: usize,
) -> usize {
    FIXED_HEADER
        + 16 * features
        + features * levels * dim.div_ceil(8)
        + 4 * classes * dim
        + 4 * features * (levels - 1)
        + 8 * classes
        + 4 * (classes + features)
        + name_bytes
}

fn encode(model: &TrainedModel) -> Vec<u8> {
    let table = model.table();
    let (d, n, m, k) = (model.dim(), table.features(), table.levels(), model.classes());
    let name_bytes: usize = model
        .labels()
        .iter()
        .chain(model.feature_names())
        .map(String::len)
        .sum();
    let mut out = Vec::with_capacity(model_file_size(d, n, m, k, name_bytes));
    out.extend_from_slice(&MODEL_MAGIC);
    for v in [MODEL_VERSION, d as u32, n as u32, m as u32, k as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&model.seed().to_le_bytes());
    for v in model.quantizer().mins().iter().chain(model.quantizer().maxs()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in 0..n {
        for l in 0..m {
            out.extend_from_slice(&table.level_vector(f, l).unwrap().to_packed_bytes());
        }
    }
    for e in model.encoders() {
        for v in e.entries() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for b in model.budget().flat() {
        out.extend_from_slice(&b.to_le_bytes());
    }
    for c in model.class_counts() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for name in model.labels().iter().chain(model.feature_names()) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    out
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    write_atomic(path, &encode(model))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            HdcError::Format(format!(
                "truncated file: needed {n} bytes at offset {}, file has {}",
                self.pos,
                self.buf.len()
            ))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| HdcError::Format("name is not valid UTF-8".into()))
    }
}

fn decode(buf: &[u8]) -> Result<TrainedModel> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(HdcError::Format("bad magic bytes, not an HDCM model".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(HdcError::Format(format!(
            "unsupported version {version}, expected {MODEL_VERSION}"
        )));
    }
    let d = r.u32()? as usize;
    let n = r.u32()? as usize;
    let m = r.u32()? as usize;
    let k = r.u32()? as usize;
    if d == 0 || !d.is_multiple_of(2) || n == 0 || m < 2 || k < 2 {
        return Err(HdcError::Format(format!(
            "invalid shape D={d} N={n} M={m} K={k}"
        )));
    }
    // Reject shapes the remaining bytes cannot possibly hold before allocating.
    if model_file_size(d, n, m, k, 0) > buf.len() {
        return Err(HdcError::Format(format!(
            "truncated file: shape needs at least {} bytes, file has {}",
            model_file_size(d, n, m, k, 0),
            buf.len()
        )));
    }
    let seed = r.u64()?;
    let mins = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let maxs = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let packed = d.div_ceil(8);
    let stored = (0..n * m)
        .map(|_| Hypervector::from_packed_bytes(d, r.take(packed)?))
        .collect::<Result<Vec<_>>>()?;
    let encoders = (0..k)
        .map(|_| (0..d).map(|_| r.i32()).collect::<Result<Vec<_>>>().map(IntVector::from_entries))
        .collect::<Result<Vec<_>>>()?;
    let budgets = (0..n * (m - 1)).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let class_counts = (0..k).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    let labels = (0..k).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let feature_names = (0..n).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    if r.pos != buf.len() {
        return Err(HdcError::Format(format!(
            "{} trailing bytes after model",
            buf.len() - r.pos
        )));
    }

    let budget = FlipBudget::from_flat(d, n, m, budgets)
        .map_err(|e| HdcError::Format(format!("bad flip budget: {e}")))?;
    let table = build_level_table(seed, &budget)
        .map_err(|e| HdcError::Format(format!("bad flip budget: {e}")))?;
    for f in 0..n {
        for l in 0..m {
            if table.level_vector(f, l)? != &stored[f * m + l] {
                return Err(HdcError::Format(format!(
                    "stored level vector ({f}, {l}) does not match its seed and budget"
                )));
            }
        }
    }
    let quantizer =
        Quantizer::new(mins, maxs, m).map_err(|e| HdcError::Format(format!("bad quantizer: {e}")))?;
    TrainedModel::from_parts(quantizer, table, encoders, labels, class_counts, feature_names)
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let buf = std::fs::read(path).map_err(|e| HdcError::io(path, e))?;
    decode(&buf)
}
