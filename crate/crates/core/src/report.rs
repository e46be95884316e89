//! Tabular export and import.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every finite `f64`. Matrices are flattened row-major.

use std::path::Path;

use nalgebra::DMatrix;
use serde::ser::{SerializeSeq, Serializer};

use crate::connection::Coefficients;
use crate::error::{Error, Result};
use crate::holonomy::{HolonomySample, InvariantDecomposition, LoopFamily};

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Serializes a matrix as a list of rows.
pub fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows = rows_of(m);
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in &rows {
        seq.serialize_element(r)?;
    }
    seq.end()
}

pub fn serialize_matrices<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(ms.len()))?;
    for m in ms {
        seq.serialize_element(&rows_of(m))?;
    }
    seq.end()
}

/// Row-major entry names `prefix_r_c`, 1-based.
pub fn matrix_headers(prefix: &str, k: usize) -> Vec<String> {
    (1..=k)
        .flat_map(|r| (1..=k).map(move |c| format!("{prefix}_{r}_{c}")))
        .collect()
}

pub fn matrix_cells(m: &DMatrix<f64>) -> impl Iterator<Item = String> + '_ {
    (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |c| fmt_float(m[(r, c)])))
}

/// A CSV table with fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: Vec<String>) -> Self {
        Table {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes the table; an empty table yields a header-only file.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}

/// Columns `k,i,j,value,x1..xn` (indices 1-based, `i` the direction index).
///
/// Directions beyond the fiber dimension (the Reeb direction of an adapted
/// connection) are written with value 0.
pub fn coefficients_table(points: &[(Vec<f64>, Coefficients)], directions: usize) -> Table {
    let n = points.first().map_or(0, |(p, _)| p.len());
    let mut headers: Vec<String> = ["k", "i", "j", "value"].iter().map(|s| s.to_string()).collect();
    headers.extend((1..=n).map(|c| format!("x{c}")));
    let mut t = Table::new(headers);
    for (p, coeffs) in points {
        let d = coeffs.dim();
        for k in 0..d {
            for i in 0..directions.max(d) {
                for j in 0..d {
                    let value = if i < d { coeffs.get(k, i, j) } else { 0.0 };
                    let mut row = vec![
                        (k + 1).to_string(),
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        fmt_float(value),
                    ];
                    row.extend(p.iter().map(|x| fmt_float(*x)));
                    t.push(row);
                }
            }
        }
    }
    t
}

/// One row per loop: loop parameters, drift, flag and the matrix entries.
///
/// User curves have empty plane/offset/side cells.
pub fn holonomy_table(family: &LoopFamily, sample: &HolonomySample) -> Table {
    let k = sample.dim();
    let mut headers: Vec<String> = ["loop", "plane_a", "plane_b", "width", "height"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    headers.extend((1..=family.horizontal_dim).map(|c| format!("offset_{c}")));
    headers.push("drift".into());
    headers.push("flagged".into());
    headers.extend(matrix_headers("m", k));
    let mut t = Table::new(headers);
    for (idx, m) in sample.matrices.iter().enumerate() {
        let mut row = vec![idx.to_string()];
        match family.loops.get(idx) {
            Some(l) => {
                row.extend([
                    l.plane.0.to_string(),
                    l.plane.1.to_string(),
                    fmt_float(l.width),
                    fmt_float(l.height),
                ]);
                row.extend(l.corner_offset.iter().map(|x| fmt_float(*x)));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 4 + family.horizontal_dim)),
        }
        row.push(fmt_float(sample.drifts[idx]));
        row.push(sample.flagged.contains(&idx).to_string());
        row.extend(matrix_cells(m));
        t.push(row);
    }
    t
}

/// One row per projector, both in the orthonormal frame (`p_r_c`) and in
/// frame components (`pi_r_c`).
pub fn decomposition_table(d: &InvariantDecomposition) -> Table {
    let k = d.dims.iter().sum();
    let mut headers: Vec<String> = ["subspace", "dim", "commutant_dim", "symmetric_commutant_dim"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    headers.extend(matrix_headers("p", k));
    headers.extend(matrix_headers("pi", k));
    let mut t = Table::new(headers);
    for (s, (p, pi)) in d.projectors.iter().zip(&d.frame_projectors).enumerate() {
        let mut row = vec![
            (s + 1).to_string(),
            d.dims[s].to_string(),
            d.commutant_dim.to_string(),
            d.symmetric_commutant_dim.to_string(),
        ];
        row.extend(matrix_cells(p));
        row.extend(matrix_cells(pi));
        t.push(row);
    }
    t
}

/// Reads matrices from a CSV whose `m_r_c` columns hold row-major entries.
///
/// Other columns are ignored, so files written by [`holonomy_table`] load
/// directly.
pub fn read_matrices(path: &Path) -> Result<Vec<DMatrix<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("m_"))
        .map(|(i, _)| i)
        .collect();
    let k = (cols.len() as f64).sqrt().round() as usize;
    if k == 0 || k * k != cols.len() {
        return Err(Error::Config(format!(
            "{}: expected k² columns named m_r_c, found {}",
            path.display(),
            cols.len()
        )));
    }
    let expected = matrix_headers("m", k);
    for (c, name) in cols.iter().zip(&expected) {
        if &headers[*c] != name {
            return Err(Error::Config(format!(
                "{}: matrix columns must be in row-major order; expected {name}, found {}",
                path.display(),
                &headers[*c]
            )));
        }
    }
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let values = cols
            .iter()
            .map(|c| {
                record[*c].trim().parse::<f64>().map_err(|e| {
                    Error::Config(format!("{}: row {}: {e}", path.display(), line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(DMatrix::from_row_slice(k, k, &values));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(vec!["a".into(), "b".into()]);
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n");
    }

    #[test]
    fn matrices_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, -0.2, 1.0 / 3.0]);
        let mut t = Table::new(["loop".to_string()].into_iter().chain(matrix_headers("m", 2)).collect());
        t.push(std::iter::once("0".to_string()).chain(matrix_cells(&m)).collect());
        t.write(&path).unwrap();
        assert_eq!(read_matrices(&path).unwrap(), vec![m]);
    }

    #[test]
    fn matrix_serializes_row_major() {
        #[derive(serde::Serialize)]
        struct W {
            #[serde(serialize_with = "serialize_matrix")]
            m: DMatrix<f64>,
        }
        let w = W {
            m: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
        };
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"{"m":[[1.0,2.0],[3.0,4.0]]}"#);
    }
}
