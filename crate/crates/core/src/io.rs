//! Reading and writing embedding matrices, label files and dataset manifests.
//!
//! Binary matrix layout: the magic bytes `CORE`, then `rows` and `cols` as
//! little-endian `u32`, then `rows * cols` little-endian `f32` values in
//! row-major order. Values are widened to `f64` on load.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;

pub const MATRIX_MAGIC: &[u8; 4] = b"CORE";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv { header: bool },
    Binary,
}

impl MatrixFormat {
    /// `.csv` files are CSV without a header row; everything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv { header: false },
            _ => MatrixFormat::Binary,
        }
    }
}

/// Class ids per document, assigned densely in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabelVector {
    /// Builds a label vector from raw tokens, numbering classes by first appearance.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut class_names = Vec::new();
        let labels = tokens
            .iter()
            .map(|t| {
                let t = t.as_ref();
                *index.entry(t).or_insert_with(|| {
                    class_names.push(t.to_string());
                    class_names.len() - 1
                })
            })
            .collect();
        Self { labels, class_names }
    }

    /// Builds from ids directly. Every id in `0..class_names.len()` must occur at least once.
    pub fn from_ids(labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let n = class_names.len();
        let mut seen = vec![false; n];
        for &l in &labels {
            if l >= n {
                return Err(Error::InvalidParameter(format!("label id {l} outside 0..{n}")));
            }
            seen[l] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!("class {:?} has no members", class_names[c])));
        }
        Ok(Self { labels, class_names })
    }

    /// Predictions over a fixed class set; classes need not all occur.
    pub(crate) fn predictions(labels: Vec<usize>, class_names: Vec<String>) -> Self {
        Self { labels, class_names }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub embeddings: PathBuf,
    pub labels: PathBuf,
    pub representation: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut names = HashSet::new();
        for e in &entries {
            if e.name.is_empty() {
                return Err(Error::Manifest("entry with empty name".into()));
            }
            if !names.insert(e.name.as_str()) {
                return Err(Error::Manifest(format!("duplicate dataset name {:?}", e.name)));
            }
            if e.embeddings.as_os_str().is_empty() || e.labels.as_os_str().is_empty() {
                return Err(Error::Manifest(format!("dataset {:?} has an empty path", e.name)));
            }
        }
        Ok(Self { entries })
    }

    /// Loads a JSON manifest. Relative paths are resolved against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries: Vec<ManifestEntry> = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for e in &mut entries {
            if e.embeddings.is_relative() && !e.embeddings.as_os_str().is_empty() {
                e.embeddings = base.join(&e.embeddings);
            }
            if e.labels.is_relative() && !e.labels.as_os_str().is_empty() {
                e.labels = base.join(&e.labels);
            }
        }
        Self::new(entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.entries)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub rows: usize,
    pub cols: usize,
    pub classes: usize,
    pub min_class_count: usize,
}

pub fn load_embeddings(path: &Path, format: MatrixFormat) -> Result<EmbeddingMatrix> {
    match format {
        MatrixFormat::Binary => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_binary(&bytes)
        }
        MatrixFormat::Csv { header } => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv(&text, header)
        }
    }
}

pub fn parse_csv(text: &str, header: bool) -> Result<EmbeddingMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut cols = None;
    for line in text.lines().skip(usize::from(header)) {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row_no = rows.len() + 1;
        let mut row = Vec::with_capacity(cols.unwrap_or(0));
        for (j, tok) in line.split(',').enumerate() {
            let tok = tok.trim();
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                row: row_no,
                col: j + 1,
                token: tok.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: row_no, col: j + 1 });
            }
            row.push(v);
        }
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::RaggedRow { row: row_no, expected: c, found: row.len() });
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::MalformedHeader("csv contains no data rows".into()));
    }
    EmbeddingMatrix::from_rows(&rows)
}

pub fn decode_binary(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader(format!("file is {} bytes, header needs {HEADER_LEN}", bytes.len())));
    }
    if &bytes[..4] != MATRIX_MAGIC {
        return Err(Error::MalformedHeader(format!("bad magic {:?}", &bytes[..4])));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::MalformedHeader(format!("empty shape {rows}x{cols}")));
    }
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::MalformedHeader(format!("shape {rows}x{cols} overflows")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::MalformedHeader(format!(
            "{rows}x{cols} payload needs {expected} bytes, found {}",
            payload.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFinite { row: i / cols + 1, col: i % cols + 1 });
        }
        data.push(f64::from(v));
    }
    EmbeddingMatrix::new(rows, cols, data)
}

pub fn encode_binary(m: &EmbeddingMatrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::Shape("row count exceeds u32".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::Shape("column count exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.as_slice().len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for &v in m.as_slice() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::Shape(format!("value {v} overflows f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

/// Renders CSV with Rust's shortest round-trip float formatting.
pub fn format_csv(m: &EmbeddingMatrix) -> String {
    let mut s = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn save_matrix(m: &EmbeddingMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let bytes = match format {
        MatrixFormat::Binary => encode_binary(m)?,
        MatrixFormat::Csv { .. } => format_csv(m).into_bytes(),
    };
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_labels(path: &Path) -> Result<LabelVector> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

pub fn parse_labels(text: &str) -> Result<LabelVector> {
    if text.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let mut tokens = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tok = line.trim_end_matches('\r').trim();
        if tok.is_empty() {
            return Err(Error::BlankLabel { line: i + 1 });
        }
        tokens.push(tok);
    }
    Ok(LabelVector::from_tokens(&tokens))
}

pub fn save_labels(y: &LabelVector, path: &Path) -> Result<()> {
    let mut s = String::new();
    for &l in y.ids() {
        s.push_str(&y.class_names()[l]);
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Checks that `e` and `y` pair up and that every class can be spread over `k` folds.
pub fn validate_dataset(e: &EmbeddingMatrix, y: &LabelVector, k: usize) -> Result<DatasetInfo> {
    if e.rows() != y.len() {
        return Err(Error::LengthMismatch { rows: e.rows(), labels: y.len() });
    }
    let counts = y.class_counts();
    // report the smallest class
    if let Some((c, &n)) = counts.iter().enumerate().min_by_key(|&(c, &n)| (n, c)) {
        if n < k {
            return Err(Error::UndersizedClass {
                class: y.class_names()[c].clone(),
                count: n,
                required: k,
            });
        }
    }
    Ok(DatasetInfo {
        rows: e.rows(),
        cols: e.cols(),
        classes: y.num_classes(),
        min_class_count: counts.iter().copied().min().unwrap_or(0),
    })
}
