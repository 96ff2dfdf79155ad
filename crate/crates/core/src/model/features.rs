//! Deep-feature matrices and the FVEC binary container.
//!
//! Layout (little-endian): magic `R2SF`, `u32` version (= 1), `u32` N,
//! `u32` D, then N·D `f32` values row-major. Image ids live in a JSON
//! sidecar next to the payload: `feats.fvec` pairs with `feats.ids.json`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const FVEC_MAGIC: &[u8; 4] = b"R2SF";
pub const FVEC_VERSION: u32 = 1;
pub const FVEC_HEADER_LEN: usize = 16;

/// N×D matrix of per-image features plus the row-to-image mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    dim: usize,
    data: Vec<f32>,
    ids: Vec<String>,
}

impl FeatureSet {
    pub fn new(dim: usize, data: Vec<f32>, ids: Vec<String>) -> Result<Self> {
        let expected = ids.len().checked_mul(dim);
        if expected != Some(data.len()) {
            return Err(Error::validation(
                "feature set",
                format!(
                    "{} values do not form {} rows of width {dim}",
                    data.len(),
                    ids.len()
                ),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            let row = if dim == 0 { 0 } else { i / dim };
            return Err(Error::validation(
                format!("feature row {row}"),
                "non-finite value",
            ));
        }
        Ok(FeatureSet { dim, data, ids })
    }

    pub fn from_rows(rows: &[Vec<f32>], ids: Vec<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::validation("feature set", "ragged rows"));
        }
        if rows.len() != ids.len() {
            return Err(Error::validation(
                "feature set",
                format!("{} rows but {} ids", rows.len(), ids.len()),
            ));
        }
        Self::new(dim, rows.concat(), ids)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        (0..self.len()).map(move |i| self.row(i))
    }
}

pub fn encode_fvec(n: usize, dim: usize, data: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(FVEC_HEADER_LEN + 4 * data.len());
    out.extend_from_slice(FVEC_MAGIC);
    out.extend_from_slice(&FVEC_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes an FVEC payload into `(n, dim, values)`.
pub fn decode_fvec(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < FVEC_HEADER_LEN {
        return Err(Error::Truncation {
            expected: FVEC_HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != FVEC_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != FVEC_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = word(8) as usize;
    let dim = word(12) as usize;
    let expected = n
        .checked_mul(dim)
        .and_then(|c| c.checked_mul(4))
        .and_then(|c| c.checked_add(FVEC_HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("header size {n}x{dim} overflows")))?;
    if bytes.len() < expected {
        return Err(Error::Truncation {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let values = bytes[FVEC_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((n, dim, values))
}

/// `feats.fvec` → `feats.ids.json`.
pub fn ids_sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("ids.json")
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum IdsSidecar {
    Plain(Vec<String>),
    WithMetadata { ids: Vec<String> },
}

/// Accepts a bare JSON array of ids, or an object whose `ids` field holds that
/// array next to free-form extraction metadata.
fn parse_ids_sidecar(text: &str) -> serde_json::Result<Vec<String>> {
    Ok(match serde_json::from_str(text)? {
        IdsSidecar::Plain(ids) | IdsSidecar::WithMetadata { ids } => ids,
    })
}

pub fn load_feature_set(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (n, dim, values) = decode_fvec(&bytes)?;
    let sidecar = ids_sidecar_path(path);
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let ids = parse_ids_sidecar(&text).map_err(|e| Error::parse(sidecar.display().to_string(), e))?;
    if ids.len() != n {
        return Err(Error::validation(
            sidecar.display().to_string(),
            format!("{} ids for {n} rows", ids.len()),
        ));
    }
    FeatureSet::new(dim, values, ids)
}

pub fn save_feature_set(path: impl AsRef<Path>, set: &FeatureSet) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_fvec(set.len(), set.dim(), set.data())).map_err(|e| Error::io(path, e))?;
    let sidecar = ids_sidecar_path(path);
    let ids = serde_json::to_string(set.ids()).expect("ids serialize");
    fs::write(&sidecar, ids).map_err(|e| Error::io(&sidecar, e))
}
