//! Feature extraction: sparse application-sequence features (CV/TF/TF-IDF),
//! dense spatio-temporal features with one-hot/z-score encoding, pluscode
//! location encoding, and multi-device feature union.
//!
//! Fitted state (vocabularies, category sets, standardization statistics) is
//! always derived from training rows only and is immutable afterwards.

mod dense;
mod pluscode;
mod sparse;
mod vocab;

use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

pub use dense::{
    combine_device_features, combined_schema, dense_features, dense_features_for_device,
    single_row, single_schema, DenseEncoder, DenseFeatures, DenseRow, DenseSchema, PartOfDay,
    SENSOR_CAT_NAMES, SENSOR_NUMERIC_NAMES,
};
pub use pluscode::encode_pluscode;
pub use sparse::{NamedMatrix, SparseMatrix};
pub use vocab::{fit_vocabulary, sequence_column_names, vectorize, VectorizeMode, Vocabulary};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on zero sequences")]
    EmptyCorpus,
    #[error("row count mismatch: {left} vs {right}")]
    RowMismatch { left: usize, right: usize },
    #[error("coordinate ({lat}, {lon}) out of range")]
    OutOfRange { lat: f64, lon: f64 },
    #[error("unsupported pluscode length {0} (expected 8 or 10)")]
    UnsupportedCodeLength(u8),
    #[error("bad matrix format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Appends encoded dense columns to a sparse sequence block. Column order is
/// the sparse block's columns followed by the dense block's.
pub fn combine(sparse: &NamedMatrix, dense: &NamedMatrix) -> Result<NamedMatrix, FeatureError> {
    sparse.hstack(dense)
}

/// Writes a named matrix as the triplet text format plus a sidecar
/// column-name manifest (`<path>` and `<path>.cols`).
pub fn export_matrix(matrix: &NamedMatrix, path: &Path) -> Result<(), FeatureError> {
    let file = std::fs::File::create(path)?;
    matrix.matrix.write_triplets(std::io::BufWriter::new(file))?;
    let cols_path = sidecar_columns_path(path);
    let mut cols = std::io::BufWriter::new(std::fs::File::create(cols_path)?);
    for name in &matrix.columns {
        writeln!(cols, "{name}")?;
    }
    Ok(())
}

/// Reads a matrix exported by [`export_matrix`].
pub fn import_matrix(path: &Path) -> Result<NamedMatrix, FeatureError> {
    let file = std::fs::File::open(path)?;
    let matrix = SparseMatrix::read_triplets(std::io::BufReader::new(file))?;
    let cols_file = std::fs::File::open(sidecar_columns_path(path))?;
    let mut columns = Vec::new();
    for line in std::io::BufReader::new(cols_file).lines() {
        columns.push(line?);
    }
    if columns.len() != matrix.n_cols() {
        return Err(FeatureError::Format(format!(
            "column manifest has {} names for {} columns",
            columns.len(),
            matrix.n_cols()
        )));
    }
    Ok(NamedMatrix { matrix, columns })
}

fn sidecar_columns_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".cols");
    std::path::PathBuf::from(os)
}
