//! CSV matrix ingestion, JSON result documents and density-sample output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bipartite::BipartiteMatrix;
use crate::bounds::{CellBounds, IntervalBound};
use crate::error::{Error, Result};
use crate::spectra::OutcomeMatrix;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Number of points of the optional Gaussian density grid.
pub const KDE_POINTS: usize = 401;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatrixKind {
    /// Square grids become outcome matrices, rectangular ones bipartite.
    #[default]
    Auto,
    Square,
    Bipartite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsvOptions {
    pub header: bool,
    pub delimiter: u8,
    /// Relative asymmetry tolerated (and averaged away) on square input.
    pub symmetrize_tol: f64,
    pub kind: MatrixKind,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            header: false,
            delimiter: b',',
            symmetrize_tol: 1e-12,
            kind: MatrixKind::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LoadedMatrix {
    Outcome(OutcomeMatrix<f64>),
    Bipartite(BipartiteMatrix<f64>),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_err(path, e))
}

/// Parses a numeric grid; rows and columns in error messages are 1-based.
pub fn parse_grid(bytes: &[u8], header: bool, delimiter: u8) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let row_no = r + 1 + usize::from(header);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Csv(format!("non-numeric cell {cell:?} at row {row_no}, column {}", c + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Csv(format!(
                    "non-finite cell {cell:?} at row {row_no}, column {}",
                    c + 1
                )));
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Csv(format!(
                    "ragged row {row_no}: {} cells, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("csv grid"));
    }
    Ok(rows)
}

pub fn parse_matrix_csv(bytes: &[u8], opts: &CsvOptions) -> Result<LoadedMatrix> {
    let rows = parse_grid(bytes, opts.header, opts.delimiter)?;
    let (r, c) = (rows.len(), rows[0].len());
    let a = Array2::from_shape_fn((r, c), |(i, j)| rows[i][j]);
    let square = match opts.kind {
        MatrixKind::Auto => r == c,
        MatrixKind::Square => true,
        MatrixKind::Bipartite => false,
    };
    if square {
        Ok(LoadedMatrix::Outcome(OutcomeMatrix::with_tolerance(a, opts.symmetrize_tol)?))
    } else {
        Ok(LoadedMatrix::Bipartite(BipartiteMatrix::new(a)?))
    }
}

pub fn read_matrix_csv(path: &Path, opts: &CsvOptions) -> Result<LoadedMatrix> {
    parse_matrix_csv(&read_bytes(path)?, opts)
}

pub fn read_outcome_csv(path: &Path, opts: &CsvOptions) -> Result<OutcomeMatrix<f64>> {
    let o = CsvOptions {
        kind: MatrixKind::Square,
        ..*opts
    };
    match read_matrix_csv(path, &o)? {
        LoadedMatrix::Outcome(m) => Ok(m),
        LoadedMatrix::Bipartite(_) => unreachable!("square kind forced"),
    }
}

pub fn read_bipartite_csv(path: &Path, opts: &CsvOptions) -> Result<BipartiteMatrix<f64>> {
    let o = CsvOptions {
        kind: MatrixKind::Bipartite,
        ..*opts
    };
    match read_matrix_csv(path, &o)? {
        LoadedMatrix::Bipartite(m) => Ok(m),
        LoadedMatrix::Outcome(_) => unreachable!("bipartite kind forced"),
    }
}

/// All cells of a CSV in row order (labels, weights, grids).
pub fn read_values_csv(path: &Path, header: bool) -> Result<Vec<f64>> {
    Ok(parse_grid(&read_bytes(path)?, header, b',')?.into_iter().flatten().collect())
}

pub fn matrix_to_csv(a: &Array2<f64>) -> String {
    let mut s = String::new();
    for row in a.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn write_matrix_csv(a: &Array2<f64>, path: &Path) -> Result<()> {
    atomic_write(path, matrix_to_csv(a).as_bytes())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest over several inputs; each is length-prefixed so boundaries count.
pub fn digest_inputs(inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for b in inputs {
        h.update((b.len() as u64).to_le_bytes());
        h.update(b);
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub kind: String,
    pub inputs_digest: String,
    pub parameters: BTreeMap<String, Value>,
    pub payload: Value,
    pub library_version: String,
}

impl ResultDocument {
    pub fn new(kind: &str, inputs_digest: String, payload: Value) -> Self {
        Self {
            kind: kind.to_string(),
            inputs_digest,
            parameters: BTreeMap::new(),
            payload,
            library_version: LIBRARY_VERSION.to_string(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }
}

fn first_null(v: &Value, path: &mut String) -> bool {
    match v {
        Value::Null => true,
        Value::Array(a) => a.iter().enumerate().any(|(i, x)| {
            let len = path.len();
            path.push_str(&format!("[{i}]"));
            let hit = first_null(x, path);
            if !hit {
                path.truncate(len);
            }
            hit
        }),
        Value::Object(m) => m.iter().any(|(k, x)| {
            let len = path.len();
            path.push_str(&format!(".{k}"));
            let hit = first_null(x, path);
            if !hit {
                path.truncate(len);
            }
            hit
        }),
        _ => false,
    }
}

/// Serializes a document; non-finite numbers (which become `null`) are rejected.
pub fn to_json_string(doc: &ResultDocument) -> Result<String> {
    let v = serde_json::to_value(doc).map_err(|e| Error::Json(e.to_string()))?;
    let mut at = String::new();
    if first_null(&v, &mut at) {
        return Err(Error::Json(format!("non-finite or missing value at {at}")));
    }
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Json(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_result_json(doc: &ResultDocument, path: &Path) -> Result<()> {
    atomic_write(path, to_json_string(doc)?.as_bytes())
}

pub fn parse_result_json(s: &str) -> Result<ResultDocument> {
    serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))
}

pub fn read_result_json(path: &Path) -> Result<ResultDocument> {
    let b = read_bytes(path)?;
    parse_result_json(&String::from_utf8_lossy(&b))
}

/// JSON number, or `null` for non-finite values (caught on serialization).
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Bounds object; binding tags are omitted when the bound has none.
pub fn interval_json(b: &IntervalBound<f64>) -> Value {
    let mut v = json!({
        "lower": num(b.lower),
        "upper": num(b.upper),
        "clipped": b.clipped,
    });
    if let Some(t) = b.binding_lower {
        v["bindingLower"] = json!(t);
    }
    if let Some(t) = b.binding_upper {
        v["bindingUpper"] = json!(t);
    }
    v
}

pub fn cells_json(c: &CellBounds<f64>) -> Value {
    Value::Array(
        c.cells()
            .iter()
            .map(|(name, b)| json!({"cell": name, "lower": num(b.lower), "upper": num(b.upper)}))
            .collect(),
    )
}

pub fn matrix_json(a: &Array2<f64>) -> Value {
    Value::Array(
        a.rows()
            .into_iter()
            .map(|r| Value::Array(r.iter().map(|&x| num(x)).collect()))
            .collect(),
    )
}

pub fn vec_json(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

fn normalized(weights: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument(format!("weight {i} is negative or not finite")));
    }
    let total: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Ok(Vec::new());
    }
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("weights must have a positive sum".into()));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

pub fn density_csv(values: &[f64], weights: &[f64]) -> Result<String> {
    if values.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let w = normalized(weights)?;
    let mut s = String::from("value,weight\n");
    for (v, w) in values.iter().zip(&w) {
        s.push_str(&format!("{v:?},{w:?}\n"));
    }
    Ok(s)
}

/// Two-column `value,weight` CSV with weights normalized to sum one.
pub fn write_density_samples(values: &[f64], weights: &[f64], path: &Path) -> Result<()> {
    atomic_write(path, density_csv(values, weights)?.as_bytes())
}

/// Weighted Gaussian kernel density on [`KDE_POINTS`] points spanning
/// `min - 3h` to `max + 3h`.
pub fn kde_grid(values: &[f64], weights: &[f64], h: f64) -> Result<Vec<(f64, f64)>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("bandwidth must be positive".into()));
    }
    if values.len() != weights.len() {
        return Err(Error::Dimension("values and weights differ in length".into()));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let w = normalized(weights)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    Ok((0..KDE_POINTS)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / (KDE_POINTS - 1) as f64;
            let d: f64 = values
                .iter()
                .zip(&w)
                .map(|(&v, &wi)| {
                    let z = (x - v) / h;
                    wi * norm * (-0.5 * z * z).exp()
                })
                .sum();
            (x, d)
        })
        .collect())
}

pub fn write_density_grid(grid: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut s = String::from("x,density\n");
    for (x, d) in grid {
        s.push_str(&format!("{x:?},{d:?}\n"));
    }
    atomic_write(path, s.as_bytes())
}
