//! File formats: SSP1 binary matrices, headerless CSV matrices, JSON sensor
//! sets, basis directories, and JSON/CSV reports.
//!
//! SSP1 layout: the ASCII magic `SSP1`, then `rows` and `cols` as
//! little-endian `u64`, then `rows·cols` little-endian IEEE-754 doubles in
//! column-major order. Sensor indices are 1-based in every file.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{BasisSource, TailoredBasis};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Real;

pub const SSP_MAGIC: &[u8; 4] = b"SSP1";
pub const FORMAT_VERSION: &str = "SSP1+json1";

/// `n × m` snapshot data, one state per column.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMatrix<T> {
    pub values: Mat<T>,
    /// `(height, width)` when each state is an image.
    pub grid: Option<(usize, usize)>,
    /// Stored temporal mean, length `rows`.
    pub mean: Option<Vec<T>>,
}

impl<T: Real> SnapshotMatrix<T> {
    pub fn new(values: Mat<T>) -> Result<Self> {
        let s = Self {
            values,
            grid: None,
            mean: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_grid(mut self, height: usize, width: usize) -> Result<Self> {
        self.grid = Some((height, width));
        self.validate()?;
        Ok(self)
    }

    pub fn with_mean(mut self, mean: Vec<T>) -> Result<Self> {
        self.mean = Some(mean);
        self.validate()?;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = self.values.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if let Some((row, col)) = self.values.first_non_finite() {
            return Err(Error::NonFiniteValue { row, col });
        }
        if let Some((h, w)) = self.grid {
            if h * w != rows {
                return Err(Error::dims(format!("grid {h}x{w} does not cover {rows} rows")));
            }
        }
        if let Some(mean) = &self.mean {
            if mean.len() != rows {
                return Err(Error::dims(format!(
                    "mean has length {} but matrix has {rows} rows",
                    mean.len()
                )));
            }
            if let Some(row) = mean.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { row, col: 0 });
            }
        }
        Ok(())
    }

    /// Columns at the given indices, keeping grid metadata.
    pub fn select_snapshots(&self, cols: &[usize]) -> Result<Self> {
        Ok(Self {
            values: self.values.select_cols(cols),
            grid: self.grid,
            mean: self.mean.clone(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Binary,
    Csv,
}

impl MatrixFormat {
    /// `.csv` selects CSV; anything else is SSP1 binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Binary,
        }
    }
}

pub fn encode_ssp(m: &Mat<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * m.as_slice().len());
    out.extend_from_slice(SSP_MAGIC);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_ssp(bytes: &[u8]) -> Result<Mat<f64>> {
    if bytes.len() < 20 || &bytes[..4] != SSP_MAGIC {
        return Err(Error::MalformedHeader("missing SSP1 magic".into()));
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let payload = &bytes[20..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::MalformedHeader(format!("dimensions {rows}x{cols} overflow")))?;
    if payload.len() as u64 != expected {
        return Err(Error::MalformedHeader(format!(
            "header declares {rows}x{cols} ({} values) but payload holds {} bytes",
            rows * cols,
            payload.len()
        )));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix { rows, cols });
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let m = Mat::from_col_major(rows, cols, data);
    if let Some((row, col)) = m.first_non_finite() {
        return Err(Error::NonFiniteValue { row, col });
    }
    Ok(m)
}

fn format_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// One matrix row per line, comma separated, shortest round-trip decimals.
pub fn encode_csv(m: &Mat<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_value(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> Result<Mat<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, field)| {
                field.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}: field {} is not a number", lineno + 1, col + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyMatrix { rows: 0, cols: 0 });
    }
    let m = Mat::from_rows(&rows);
    if let Some((row, col)) = m.first_non_finite() {
        return Err(Error::NonFiniteValue { row, col });
    }
    Ok(m)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<SnapshotMatrix<f64>> {
    let bytes = read_bytes(path)?;
    let values = match format {
        MatrixFormat::Binary => decode_ssp(&bytes)?,
        MatrixFormat::Csv => {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))?;
            decode_csv(&text)?
        }
    };
    SnapshotMatrix::new(values)
}

pub fn save_matrix(m: &Mat<f64>, path: &Path, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Binary => write_bytes(path, &encode_ssp(m)),
        MatrixFormat::Csv => write_bytes(path, encode_csv(m).as_bytes()),
    }
}

/// Format chosen from the file extension.
pub fn load_matrix_auto(path: &Path) -> Result<SnapshotMatrix<f64>> {
    load_matrix(path, MatrixFormat::from_path(path))
}

pub fn save_matrix_auto(m: &Mat<f64>, path: &Path) -> Result<()> {
    save_matrix(m, path, MatrixFormat::from_path(path))
}

/// Who produced a file, and how.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub format_version: String,
    pub command: Vec<String>,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl Provenance {
    pub fn new(command: Vec<String>, seed: Option<u64>, with_timestamp: bool) -> Self {
        let timestamp_unix = with_timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Self {
            tool: "ssense".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            format_version: FORMAT_VERSION.into(),
            command,
            seed,
            timestamp_unix,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMethod {
    Qr,
    QrOversampled,
    Deim,
    Random,
    BruteForce,
}

/// An ordered set of point sensors. Indices are 0-based in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorSetRecord {
    pub indices: Vec<usize>,
    pub n: usize,
    pub method: PlacementMethod,
    pub r: usize,
    pub seed: Option<u64>,
    /// Generator used for seeded draws.
    pub rng: Option<String>,
    pub provenance: Option<Provenance>,
}

impl SensorSetRecord {
    pub fn new(indices: Vec<usize>, n: usize, method: PlacementMethod, r: usize) -> Self {
        Self {
            indices,
            n,
            method,
            r,
            seed: None,
            rng: None,
            provenance: None,
        }
    }

    pub fn p(&self) -> usize {
        self.indices.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.indices.is_empty() {
            return Err(Error::invalid("sensor set is empty"));
        }
        let mut seen = HashSet::with_capacity(self.indices.len());
        for &i in &self.indices {
            if i >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: i + 1,
                    n: self.n,
                });
            }
            if !seen.insert(i) {
                return Err(Error::DuplicateIndex(i + 1));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let wire = SensorSetWire {
            indices: self.indices.iter().map(|i| i + 1).collect(),
            n: self.n,
            method: self.method,
            r: self.r,
            seed: self.seed,
            rng: self.rng.clone(),
            provenance: self.provenance.clone(),
        };
        Ok(to_json_pretty(&wire))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: SensorSetWire =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("sensor set: {e}")))?;
        let mut indices = Vec::with_capacity(wire.indices.len());
        for &i in &wire.indices {
            if i == 0 || i > wire.n {
                return Err(Error::IndexOutOfRange { index: i, n: wire.n });
            }
            indices.push(i - 1);
        }
        let rec = Self {
            indices,
            n: wire.n,
            method: wire.method,
            r: wire.r,
            seed: wire.seed,
            rng: wire.rng,
            provenance: wire.provenance,
        };
        rec.validate()?;
        Ok(rec)
    }
}

#[derive(Serialize, Deserialize)]
struct SensorSetWire {
    indices: Vec<usize>,
    n: usize,
    method: PlacementMethod,
    r: usize,
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

pub fn save_sensors(record: &SensorSetRecord, path: &Path) -> Result<()> {
    let text = record.to_json()?;
    write_bytes(path, text.as_bytes())
}

pub fn load_sensors(path: &Path) -> Result<SensorSetRecord> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))?;
    SensorSetRecord::from_json(&text)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<S: Serialize>(value: &S, path: &Path) -> Result<()> {
    write_bytes(path, to_json_pretty(value).as_bytes())
}

/// CSV table with a header row.
pub fn encode_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

pub const BASIS_MODES_FILE: &str = "modes.ssp";
pub const BASIS_META_FILE: &str = "basis.json";

#[derive(Serialize, Deserialize)]
struct BasisMeta {
    source: BasisSource,
    n: usize,
    r: usize,
    sigmas: Vec<f64>,
    mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

/// Writes `modes.ssp` and `basis.json` into `dir`.
pub fn save_basis(basis: &TailoredBasis<f64>, dir: &Path, provenance: Option<Provenance>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_matrix(&basis.modes, &dir.join(BASIS_MODES_FILE), MatrixFormat::Binary)?;
    let meta = BasisMeta {
        source: basis.source,
        n: basis.n(),
        r: basis.r(),
        sigmas: basis.sigmas.clone(),
        mean: basis.mean.clone(),
        provenance,
    };
    write_json(&meta, &dir.join(BASIS_META_FILE))
}

pub fn load_basis(dir: &Path) -> Result<TailoredBasis<f64>> {
    let modes = decode_ssp(&read_bytes(&dir.join(BASIS_MODES_FILE))?)?;
    let meta_path = dir.join(BASIS_META_FILE);
    let meta: BasisMeta = serde_json::from_slice(&read_bytes(&meta_path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", meta_path.display())))?;
    if meta.n != modes.rows() || meta.r != modes.cols() {
        return Err(Error::MalformedHeader(format!(
            "basis metadata says {}x{} but modes are {}x{}",
            meta.n,
            meta.r,
            modes.rows(),
            modes.cols()
        )));
    }
    TailoredBasis::from_parts(modes, meta.sigmas, meta.mean, meta.source)
}
