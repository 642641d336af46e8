//! File formats: problem JSON, view data (CSV or JSON bundle), and serde
//! adapters for matrix-valued report fields.
//!
//! The problem file is JSON of the form
//!
//! ```json
//! { "blocks": [2, 2, 1], "matrix": [[...], ...] }
//! ```
//!
//! with `matrix` given row by row (`N x N` numbers for `N` the sum of the
//! block sizes). Non-finite entries are rejected. View samples are either
//! one headerless CSV per view (rows = dimensions, columns = observations)
//! or a single JSON bundle `{"views": [{"rows": n_i, "cols": s, "data":
//! [...]}]}` with row-major `data`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::block::BlockStructure;
use crate::error::{Error, Result};
use crate::model::{QcqpProblem, SumcorProblem};
use crate::tolerances::IDENTITY_DIAG_TOL;

/// Serde adapter storing a `DMatrix<f64>` as `{rows, cols, data}` with
/// row-major `data`. Use with `#[serde(with = "crate::io::serde_matrix")]`.
pub mod serde_matrix {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    /// Serializes the matrix in row-major order.
    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        Repr { rows: m.nrows(), cols: m.ncols(), data }.serialize(s)
    }

    /// Deserializes a row-major matrix, validating the entry count.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let repr = Repr::deserialize(d)?;
        if repr.data.len() != repr.rows * repr.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix data has {} entries, expected {}x{}",
                repr.data.len(),
                repr.rows,
                repr.cols
            )));
        }
        if repr.data.iter().any(|v| !v.is_finite()) {
            return Err(serde::de::Error::custom("matrix contains non-finite entries"));
        }
        Ok(DMatrix::from_row_iterator(repr.rows, repr.cols, repr.data))
    }
}

/// Serde adapter storing a `DVector<f64>` as a plain JSON array. Use with
/// `#[serde(with = "crate::io::serde_vector")]`.
pub mod serde_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    /// Serializes the vector as an array.
    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.iter().copied().collect::<Vec<f64>>().serialize(s)
    }

    /// Deserializes an array into a vector, rejecting non-finite entries.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let data = Vec::<f64>::deserialize(d)?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(serde::de::Error::custom("vector contains non-finite entries"));
        }
        Ok(DVector::from_vec(data))
    }
}

/// On-disk representation of a problem: block sizes plus the joint matrix,
/// row by row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    /// Block sizes `n_1, ..., n_m`.
    pub blocks: Vec<usize>,
    /// The `N x N` matrix, one row per inner list.
    pub matrix: Vec<Vec<f64>>,
}

impl ProblemFile {
    /// Captures a raw covariance problem.
    pub fn from_sumcor(p: &SumcorProblem) -> Self {
        Self::from_parts(p.covariance(), p.structure())
    }

    /// Captures a whitened problem.
    pub fn from_qcqp(p: &QcqpProblem) -> Self {
        Self::from_parts(p.matrix(), p.structure())
    }

    fn from_parts(m: &DMatrix<f64>, structure: &BlockStructure) -> Self {
        let matrix =
            (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect();
        Self { blocks: structure.sizes().to_vec(), matrix }
    }

    /// Validates shapes and entries and returns the matrix with its block
    /// structure.
    pub fn into_parts(self) -> Result<(DMatrix<f64>, BlockStructure)> {
        let structure = BlockStructure::new(self.blocks)?;
        let n = structure.total_dim();
        if self.matrix.len() != n {
            return Err(Error::InvalidInput(format!(
                "matrix has {} rows, expected {n}",
                self.matrix.len()
            )));
        }
        let mut m = DMatrix::zeros(n, n);
        for (r, row) in self.matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "matrix row {r} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "matrix entry ({r}, {c}) is not finite"
                    )));
                }
                m[(r, c)] = v;
            }
        }
        Ok((m, structure))
    }
}

/// How a problem file was interpreted by [`load_problem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadedKind {
    /// Diagonal blocks were identity: the file already held a whitened
    /// problem.
    AlreadyWhitened,
    /// Diagonal blocks were general covariances: the problem was whitened on
    /// load.
    WhitenedOnLoad,
}

/// Reads a problem file and returns it in whitened form.
///
/// Files whose diagonal blocks are already the identity are taken as
/// whitened problems verbatim; anything else is treated as a raw covariance
/// and whitened on load. The returned flag says which happened.
pub fn load_problem(path: &Path) -> Result<(QcqpProblem, LoadedKind)> {
    let file: ProblemFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let (m, structure) = file.into_parts()?;

    let mut identity_diag = true;
    'outer: for i in 0..structure.num_blocks() {
        let block = structure.matrix_block(&m, i, i);
        for r in 0..block.nrows() {
            for c in 0..block.ncols() {
                let expected = if r == c { 1.0 } else { 0.0 };
                if (block[(r, c)] - expected).abs() > IDENTITY_DIAG_TOL {
                    identity_diag = false;
                    break 'outer;
                }
            }
        }
    }

    if identity_diag {
        Ok((QcqpProblem::new(m, structure)?, LoadedKind::AlreadyWhitened))
    } else {
        let problem = SumcorProblem::new(m, structure)?;
        Ok((crate::transform::whiten(&problem)?.into_problem(), LoadedKind::WhitenedOnLoad))
    }
}

/// Writes a problem file as pretty-printed JSON.
pub fn save_problem(path: &Path, file: &ProblemFile) -> Result<()> {
    write_json(path, file)
}

/// Serializes any report as pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads a JSON value from a file.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// JSON bundle of views: `{"views": [{"rows", "cols", "data"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewBundle {
    /// The views, each with row-major `data`.
    pub views: Vec<ViewData>,
}

/// One view inside a [`ViewBundle`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewData {
    /// Dimensions of the view.
    pub rows: usize,
    /// Observations.
    pub cols: usize,
    /// Row-major entries, `rows * cols` of them.
    pub data: Vec<f64>,
}

impl ViewData {
    /// Captures a view matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    /// Validates and converts to a matrix.
    pub fn into_matrix(self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidInput(format!(
                "view data has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("view contains non-finite entries".into()));
        }
        Ok(DMatrix::from_row_iterator(self.rows, self.cols, self.data))
    }
}

/// Reads one view from a headerless CSV file (rows = dimensions, columns =
/// observations).
pub fn read_view_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("unparsable CSV field {field:?} in {path:?}"))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::InvalidInput(format!(
                    "ragged CSV: row {} has {} fields, expected {}",
                    rows.len(),
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::InvalidInput(format!("view file {path:?} is empty")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("view contains non-finite entries".into()));
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_row_iterator(nr, nc, rows.into_iter().flatten()))
}

/// Writes one view as a headerless CSV file.
pub fn write_view_csv(path: &Path, view: &DMatrix<f64>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for r in 0..view.nrows() {
        let row: Vec<String> = view.row(r).iter().map(|v| format!("{v}")).collect();
        writer.write_record(&row)?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

/// Reads views from either a list of CSV paths or a single `.json` bundle.
pub fn read_views(paths: &[&Path]) -> Result<Vec<DMatrix<f64>>> {
    if paths.is_empty() {
        return Err(Error::InvalidInput("no view files given".into()));
    }
    if paths.len() == 1 && paths[0].extension().is_some_and(|e| e == "json") {
        let bundle: ViewBundle = read_json(paths[0])?;
        if bundle.views.is_empty() {
            return Err(Error::InvalidInput("view bundle is empty".into()));
        }
        return bundle.views.into_iter().map(ViewData::into_matrix).collect();
    }
    paths.iter().map(|p| read_view_csv(p)).collect()
}
