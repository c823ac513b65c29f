//! Row-major sparse matrix used for sequence and combined feature blocks.

use std::io::{BufRead, Write};

use super::FeatureError;

/// Sparse matrix stored as per-row (column, value) entries, sorted by column,
/// zero values omitted.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SparseMatrix {
    n_cols: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseMatrix {
    pub fn new(n_cols: usize) -> Self {
        SparseMatrix {
            n_cols,
            rows: Vec::new(),
        }
    }

    pub fn with_rows(n_cols: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut m = SparseMatrix { n_cols, rows };
        for row in &mut m.rows {
            row.retain(|&(_, v)| v != 0.0);
            row.sort_by_key(|&(c, _)| c);
        }
        m
    }

    /// Appends a row given unsorted (col, value) entries; zeros are dropped
    /// and duplicate columns are rejected by debug assertion.
    pub fn push_row(&mut self, mut entries: Vec<(u32, f64)>) {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_by_key(|&(c, _)| c);
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0), "duplicate column");
        debug_assert!(entries.iter().all(|&(c, _)| (c as usize) < self.n_cols));
        debug_assert!(entries.iter().all(|&(_, v)| v.is_finite()));
        self.rows.push(entries);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, row: usize, col: u32) -> f64 {
        match self.rows[row].binary_search_by_key(&col, |&(c, _)| c) {
            Ok(pos) => self.rows[row][pos].1,
            Err(_) => 0.0,
        }
    }

    /// Horizontal concatenation; `other` columns are shifted right.
    pub fn hstack(&self, other: &SparseMatrix) -> Result<SparseMatrix, FeatureError> {
        if self.n_rows() != other.n_rows() {
            return Err(FeatureError::RowMismatch {
                left: self.n_rows(),
                right: other.n_rows(),
            });
        }
        let offset = self.n_cols as u32;
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut row = a.clone();
                row.extend(b.iter().map(|&(c, v)| (c + offset, v)));
                row
            })
            .collect();
        Ok(SparseMatrix {
            n_cols: self.n_cols + other.n_cols,
            rows,
        })
    }

    /// Squared Euclidean distance between two rows of (possibly different)
    /// matrices, via a sorted merge join.
    pub fn row_sq_distance(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    acc += a[i].1 * a[i].1;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    acc += b[j].1 * b[j].1;
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let d = a[i].1 - b[j].1;
                    acc += d * d;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc += a[i..].iter().map(|&(_, v)| v * v).sum::<f64>();
        acc += b[j..].iter().map(|&(_, v)| v * v).sum::<f64>();
        acc
    }

    /// Dot product of a sparse row with a dense weight vector.
    pub fn row_dot_dense(row: &[(u32, f64)], weights: &[f64]) -> f64 {
        row.iter().map(|&(c, v)| v * weights[c as usize]).sum()
    }

    /// Writes the triplet text format: header `n d`, then `row col value`
    /// lines in row-major order.
    pub fn write_triplets(&self, mut writer: impl Write) -> std::io::Result<()> {
        writeln!(writer, "{} {}", self.n_rows(), self.n_cols)?;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                writeln!(writer, "{r} {c} {v}")?;
            }
        }
        Ok(())
    }

    /// Parses the triplet text format written by [`write_triplets`].
    ///
    /// [`write_triplets`]: SparseMatrix::write_triplets
    pub fn read_triplets(reader: impl BufRead) -> Result<SparseMatrix, FeatureError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| FeatureError::Format("missing header".into()))??;
        let mut parts = header.split_whitespace();
        let n_rows: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FeatureError::Format("bad header row count".into()))?;
        let n_cols: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FeatureError::Format("bad header col count".into()))?;
        let mut rows = vec![Vec::new(); n_rows];
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let r: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| FeatureError::Format(format!("line {}: bad row", idx + 2)))?;
            let c: u32 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| FeatureError::Format(format!("line {}: bad col", idx + 2)))?;
            let v: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| FeatureError::Format(format!("line {}: bad value", idx + 2)))?;
            if r >= n_rows || c as usize >= n_cols {
                return Err(FeatureError::Format(format!(
                    "line {}: entry ({r}, {c}) outside {n_rows}x{n_cols}",
                    idx + 2
                )));
            }
            rows[r].push((c, v));
        }
        Ok(SparseMatrix::with_rows(n_cols, rows))
    }
}

/// A sparse matrix with its column names (the sidecar manifest content).
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix {
    pub matrix: SparseMatrix,
    pub columns: Vec<String>,
}

impl NamedMatrix {
    pub fn new(matrix: SparseMatrix, columns: Vec<String>) -> Self {
        debug_assert_eq!(matrix.n_cols(), columns.len());
        NamedMatrix { matrix, columns }
    }

    pub fn hstack(&self, other: &NamedMatrix) -> Result<NamedMatrix, FeatureError> {
        let matrix = self.matrix.hstack(&other.matrix)?;
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        Ok(NamedMatrix { matrix, columns })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn get_and_distance_work_on_sparse_rows() {
        let mut m = SparseMatrix::new(4);
        m.push_row(vec![(2, 1.0), (0, 3.0)]);
        m.push_row(vec![(1, 2.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(0, 2), 1.0);
        // (3-0)^2 + (0-2)^2 + (1-0)^2 = 14
        assert_eq!(SparseMatrix::row_sq_distance(m.row(0), m.row(1)), 14.0);
    }

    #[test]
    fn hstack_shifts_columns() {
        let mut a = SparseMatrix::new(2);
        a.push_row(vec![(0, 1.0)]);
        let mut b = SparseMatrix::new(3);
        b.push_row(vec![(1, 5.0)]);
        let c = a.hstack(&b).unwrap();
        assert_eq!(c.n_cols(), 5);
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(0, 3), 5.0);
    }

    #[test]
    fn hstack_rejects_row_mismatch() {
        let a = SparseMatrix::new(1);
        let mut b = SparseMatrix::new(1);
        b.push_row(vec![]);
        assert!(matches!(
            a.hstack(&b),
            Err(FeatureError::RowMismatch { .. })
        ));
    }

    #[test]
    fn triplet_round_trip_is_exact() {
        let mut m = SparseMatrix::new(3);
        m.push_row(vec![(0, 0.1), (2, -23.595448194471846)]);
        m.push_row(vec![]);
        m.push_row(vec![(1, 1.0 / 3.0)]);
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        let back = SparseMatrix::read_triplets(buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }
}
