//! Record storage, CSV ingestion, min-max normalization and the moment
//! identities that relate a dataset to its unbounded neighbors.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symmat::{MatrixError, SymmetricMatrix};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column \"{column}\": cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column \"{column}\": missing value")]
    MissingValue { row: usize, column: String },
    #[error("row {row} has {got} fields, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("column \"{0}\" not found in header")]
    UnknownColumn(String),
    #[error("input has no data rows")]
    Empty,
    #[error("record {index} has {got} coordinates, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("record {index}, coordinate {coord}: {value} is outside [-1, 1]")]
    OutOfRange {
        index: usize,
        coord: usize,
        value: f64,
    },
    #[error("covariance needs at least 2 records, dataset has {0}")]
    TooFewRecords(usize),
    #[error("record index {index} out of range for {n} records")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("record to remove is not part of the dataset")]
    NotARecord,
    #[error("covariance is singular (minimum eigenvalue {min_eigenvalue:e})")]
    SingularCovariance { min_eigenvalue: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Rectangular numeric table as read from disk, before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Reads a CSV file, keeping only `columns` (all columns when empty).
pub fn load_csv(path: impl AsRef<Path>, columns: &[String]) -> Result<RawTable, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, columns)
}

/// Like [`load_csv`] but from any reader.
///
/// A first row containing any non-numeric cell is taken as the header.
/// Without a header, columns are named `c1`, `c2`, ... Row numbers in
/// errors are 1-based line positions, counting the header.
pub fn read_csv<R: Read>(reader: R, columns: &[String]) -> Result<RawTable, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r?,
        None => return Err(DatasetError::Empty),
    };
    let width = first.len();
    let has_header = first.iter().any(|c| c.parse::<f64>().is_err());
    let names: Vec<String> = if has_header {
        first.iter().map(str::to_owned).collect()
    } else {
        (1..=width).map(|i| format!("c{i}")).collect()
    };

    let selected: Vec<usize> = if columns.is_empty() {
        (0..width).collect()
    } else {
        columns
            .iter()
            .map(|c| {
                names
                    .iter()
                    .position(|n| n == c)
                    .ok_or_else(|| DatasetError::UnknownColumn(c.clone()))
            })
            .collect::<Result<_, _>>()?
    };

    let parse_row = |row_no: usize, rec: &csv::StringRecord| -> Result<Vec<f64>, DatasetError> {
        if rec.len() != width {
            return Err(DatasetError::Ragged {
                row: row_no,
                expected: width,
                got: rec.len(),
            });
        }
        selected
            .iter()
            .map(|&j| {
                let cell = &rec[j];
                if cell.is_empty() {
                    return Err(DatasetError::MissingValue {
                        row: row_no,
                        column: names[j].clone(),
                    });
                }
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DatasetError::Parse {
                        row: row_no,
                        column: names[j].clone(),
                        value: cell.to_owned(),
                    })
            })
            .collect()
    };

    let mut rows = Vec::new();
    if !has_header {
        rows.push(parse_row(1, &first)?);
    }
    for (k, rec) in records.enumerate() {
        rows.push(parse_row(k + 2, &rec?)?);
    }
    if rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(RawTable {
        columns: selected.iter().map(|&j| names[j].clone()).collect(),
        rows,
    })
}

/// Writes `records` as CSV with a header row.
pub fn write_csv<W: Write>(
    writer: W,
    columns: &[String],
    records: &[Vec<f64>],
) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(columns)?;
    for r in records {
        wtr.write_record(r.iter().map(|v| v.to_string()))?;
    }
    wtr.flush().map_err(|source| DatasetError::Io {
        path: PathBuf::from("<output>"),
        source,
    })?;
    Ok(())
}

/// Per-column range used by the min-max normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

impl ColumnRange {
    pub fn forward(&self, x: f64) -> f64 {
        if self.max > self.min {
            (2.0 * (x - self.min) / (self.max - self.min) - 1.0).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        if self.max > self.min {
            self.min + (y + 1.0) * 0.5 * (self.max - self.min)
        } else {
            self.min
        }
    }
}

/// How raw columns were mapped into `[-1, 1]`. Serializes as a JSON array
/// of `{column, min, max}` objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Provenance {
    pub columns: Vec<ColumnRange>,
}

impl Provenance {
    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.column.clone()).collect()
    }

    /// Maps a model-space record back to raw units.
    pub fn inverse_transform(&self, record: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .zip(record)
            .map(|(c, &y)| c.inverse(y))
            .collect()
    }
}

/// An ordered collection of `d`-dimensional records in `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    records: Vec<Vec<f64>>,
    provenance: Option<Provenance>,
}

impl Dataset {
    pub fn new(dim: usize, records: Vec<Vec<f64>>) -> Result<Self, DatasetError> {
        if dim == 0 {
            return Err(DatasetError::Matrix(MatrixError::EmptyDimension));
        }
        for (index, r) in records.iter().enumerate() {
            check_record(dim, r).map_err(|e| match e {
                DatasetError::DimensionMismatch { expected, got, .. } => {
                    DatasetError::DimensionMismatch {
                        index,
                        expected,
                        got,
                    }
                }
                DatasetError::OutOfRange { coord, value, .. } => DatasetError::OutOfRange {
                    index,
                    coord,
                    value,
                },
                other => other,
            })?;
        }
        Ok(Self {
            dim,
            records,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }

    pub fn record(&self, index: usize) -> Option<&[f64]> {
        self.records.get(index).map(Vec::as_slice)
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Population mean and covariance, `(1/n) Σ x xᵗ − μ μᵗ`.
    pub fn mean_cov(&self) -> Result<GaussianParams, DatasetError> {
        let n = self.records.len();
        if n < 2 {
            return Err(DatasetError::TooFewRecords(n));
        }
        let d = self.dim;
        let inv_n = 1.0 / n as f64;
        let mut mean = vec![0.0; d];
        let mut second = vec![0.0; d * d];
        for x in &self.records {
            for i in 0..d {
                mean[i] += x[i];
                for j in i..d {
                    second[i * d + j] += x[i] * x[j];
                }
            }
        }
        mean.iter_mut().for_each(|m| *m *= inv_n);
        let covariance =
            SymmetricMatrix::from_upper_fn(d, |i, j| second[i * d + j] * inv_n - mean[i] * mean[j]);
        Ok(GaussianParams { mean, covariance })
    }

    /// Membership in the family of datasets whose covariance has minimum
    /// eigenvalue at least `sigma`.
    pub fn in_sigma_floor(&self, sigma: f64) -> Result<SigmaFloorReport, DatasetError> {
        let min_eigenvalue = self.mean_cov()?.covariance.min_eigenvalue()?;
        Ok(SigmaFloorReport {
            sigma,
            min_eigenvalue,
            member: min_eigenvalue >= sigma,
        })
    }

    /// Returns the neighbor produced by `edit`; `self` is left untouched.
    pub fn neighbor(&self, edit: &Edit) -> Result<Dataset, DatasetError> {
        let n = self.records.len();
        let mut records = self.records.clone();
        match edit {
            Edit::Add(x) => {
                check_record(self.dim, x)?;
                records.push(x.clone());
            }
            Edit::Remove(index) => {
                if *index >= n {
                    return Err(DatasetError::IndexOutOfRange { index: *index, n });
                }
                records.remove(*index);
            }
            Edit::Replace(index, x) => {
                if *index >= n {
                    return Err(DatasetError::IndexOutOfRange { index: *index, n });
                }
                check_record(self.dim, x)?;
                records[*index] = x.clone();
            }
        }
        Ok(Dataset {
            dim: self.dim,
            records,
            provenance: None,
        })
    }

    /// The mean shift, rank-one covariance change and its eigenvalue
    /// relative to `Σ_1` when `x` is added (`Add`) or removed (`Remove`).
    ///
    /// For `Remove`, `x` must equal one of the records.
    pub fn neighbor_delta(
        &self,
        x: &[f64],
        sign: NeighborSign,
    ) -> Result<NeighborDelta, DatasetError> {
        check_record(self.dim, x)?;
        if sign == NeighborSign::Remove && !self.records.iter().any(|r| r.as_slice() == x) {
            return Err(DatasetError::NotARecord);
        }
        let params = self.mean_cov()?;
        let eig = params.covariance.spectral()?;
        let floor = params.covariance.pd_tolerance();
        if eig.min_eigenvalue() <= floor {
            return Err(DatasetError::SingularCovariance {
                min_eigenvalue: eig.min_eigenvalue(),
            });
        }

        let n = self.records.len() as f64;
        let s = sign.value();
        let d = self.dim;
        let mut total = vec![0.0; d];
        for r in &self.records {
            for (t, v) in total.iter_mut().zip(r) {
                *t += v;
            }
        }
        let mean_shift: Vec<f64> = (0..d)
            .map(|i| s / (n + s) * x[i] - s / (n * (n + s)) * total[i])
            .collect();

        let coeff = n * s / ((n + s) * (n + s));
        let centered: Vec<f64> = x.iter().zip(&params.mean).map(|(a, m)| a - m).collect();
        let rank_one = SymmetricMatrix::outer(&centered, coeff);
        let lambda = coeff
            * eig
                .coordinates(&centered)
                .iter()
                .zip(&eig.eigenvalues)
                .map(|(r, sig)| r * r / sig)
                .sum::<f64>();

        Ok(NeighborDelta {
            sign,
            n: self.records.len(),
            mean_shift,
            rank_one,
            lambda,
        })
    }
}

fn check_record(dim: usize, x: &[f64]) -> Result<(), DatasetError> {
    if x.len() != dim {
        return Err(DatasetError::DimensionMismatch {
            index: 0,
            expected: dim,
            got: x.len(),
        });
    }
    for (coord, &value) in x.iter().enumerate() {
        if !(-1.0..=1.0).contains(&value) {
            return Err(DatasetError::OutOfRange {
                index: 0,
                coord,
                value,
            });
        }
    }
    Ok(())
}

/// Min-max maps every column of `table` into `[-1, 1]`. Constant columns map
/// to 0.
pub fn normalize(table: &RawTable) -> Result<Dataset, DatasetError> {
    let first = table.rows.first().ok_or(DatasetError::Empty)?;
    let d = first.len();
    let ranges: Vec<ColumnRange> = (0..d)
        .map(|j| {
            let (min, max) = table
                .rows
                .iter()
                .map(|r| r[j])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            ColumnRange {
                column: table
                    .columns
                    .get(j)
                    .cloned()
                    .unwrap_or_else(|| format!("c{}", j + 1)),
                min,
                max,
            }
        })
        .collect();
    let records = table
        .rows
        .iter()
        .map(|r| r.iter().zip(&ranges).map(|(&v, c)| c.forward(v)).collect())
        .collect();
    Ok(Dataset::new(d, records)?.with_provenance(Provenance { columns: ranges }))
}

/// Mean vector and covariance of a multivariate normal.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub mean: Vec<f64>,
    pub covariance: SymmetricMatrix,
}

impl GaussianParams {
    pub fn new(mean: Vec<f64>, covariance: SymmetricMatrix) -> Result<Self, MatrixError> {
        if mean.len() != covariance.dim() {
            return Err(MatrixError::DimensionMismatch {
                left: mean.len(),
                right: covariance.dim(),
            });
        }
        Ok(Self { mean, covariance })
    }

    /// One-dimensional `N(mean, variance)`.
    pub fn univariate(mean: f64, variance: f64) -> Self {
        Self {
            mean: vec![mean],
            covariance: SymmetricMatrix::from_diagonal(&[variance]),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaFloorReport {
    pub sigma: f64,
    pub min_eigenvalue: f64,
    pub member: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    Add(Vec<f64>),
    Remove(usize),
    Replace(usize, Vec<f64>),
}

/// Direction of an unbounded-neighbor edit: `+1` adds a record, `-1`
/// removes one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborSign {
    Add,
    Remove,
}

impl NeighborSign {
    pub fn value(self) -> f64 {
        match self {
            NeighborSign::Add => 1.0,
            NeighborSign::Remove => -1.0,
        }
    }
}

/// Difference between a dataset's moments and those of a neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborDelta {
    pub sign: NeighborSign,
    /// Size of the original dataset.
    pub n: usize,
    /// `μ_2 − μ_1`.
    pub mean_shift: Vec<f64>,
    /// `Σ_2 − n/(n+s) Σ_1`, rank one.
    pub rank_one: SymmetricMatrix,
    /// The only non-zero eigenvalue of `Σ_1^{-1} X`.
    pub lambda: f64,
}

impl NeighborDelta {
    /// Interval that `lambda` must fall in for a dataset whose covariance
    /// has minimum eigenvalue at least `sigma`.
    pub fn lambda_range(&self, dim: usize, sigma: f64) -> (f64, f64) {
        let n = self.n as f64;
        let d = dim as f64;
        match self.sign {
            NeighborSign::Add => (0.0, 4.0 * d * n / ((n + 1.0).powi(2) * sigma)),
            NeighborSign::Remove => (-4.0 * d * n / ((n - 1.0).powi(2) * sigma), 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(dim: usize, rows: &[&[f64]]) -> Dataset {
        Dataset::new(dim, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn reads_headerless_single_column() {
        let t = read_csv("1.0\n-1.0\n".as_bytes(), &[]).unwrap();
        assert_eq!(t.rows, vec![vec![1.0], vec![-1.0]]);
        assert_eq!(t.columns, vec!["c1"]);
    }

    #[test]
    fn reads_header_and_six_columns() {
        let text = "age,fnlwgt,edu,gain,loss,hours\n39,77516,13,2174,0,40\n50,83311,13,0,0,13\n";
        let t = read_csv(text.as_bytes(), &[]).unwrap();
        assert_eq!(t.columns.len(), 6);
        assert!(t.rows.iter().all(|r| r.len() == 6));
        let sel = read_csv(text.as_bytes(), &["hours".into(), "age".into()]).unwrap();
        assert_eq!(sel.rows[1], vec![13.0, 50.0]);
    }

    #[test]
    fn parse_error_names_row_and_column() {
        let text = "age,hours\n39,40\nabc,13\n";
        let err = read_csv(text.as_bytes(), &[]).unwrap_err();
        match err {
            DatasetError::Parse { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (3, "age", "abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_ragged_missing_and_unknown() {
        let err = read_csv("a,b\n1,2\n3\n".as_bytes(), &[]).unwrap_err();
        assert!(matches!(err, DatasetError::Ragged { row: 3, expected: 2, got: 1 }));
        let err = read_csv("a,b\n1,\n".as_bytes(), &[]).unwrap_err();
        assert!(matches!(err, DatasetError::MissingValue { row: 2, .. }));
        let err = read_csv("a,b\n1,2\n".as_bytes(), &["zzz".into()]).unwrap_err();
        assert!(matches!(err, DatasetError::UnknownColumn(_)));
        assert!(matches!(read_csv("".as_bytes(), &[]), Err(DatasetError::Empty)));
        assert!(matches!(read_csv("a,b\n".as_bytes(), &[]), Err(DatasetError::Empty)));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv("/definitely/not/here.csv", &[]).unwrap_err();
        assert!(matches!(err, DatasetError::Io { .. }));
    }

    #[test]
    fn normalize_examples() {
        let t = |col: &[f64]| RawTable {
            columns: vec!["x".into()],
            rows: col.iter().map(|v| vec![*v]).collect(),
        };
        let col = |d: &Dataset| d.records().iter().map(|r| r[0]).collect::<Vec<_>>();
        assert_eq!(col(&normalize(&t(&[0.0, 10.0])).unwrap()), vec![-1.0, 1.0]);
        assert_eq!(col(&normalize(&t(&[5.0, 5.0, 5.0])).unwrap()), vec![0.0; 3]);
        let mid = normalize(&t(&[0.0, 5.0, 10.0])).unwrap();
        assert_eq!(col(&mid), vec![-1.0, 0.0, 1.0]);
        let prov = mid.provenance().unwrap();
        assert_eq!(prov.inverse_transform(&[0.0]), vec![5.0]);
        let json = serde_json::to_string(prov).unwrap();
        assert_eq!(json, r#"[{"column":"x","min":0.0,"max":10.0}]"#);
        let back: Provenance = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, prov);
    }

    #[test]
    fn dataset_rejects_out_of_range() {
        let err = Dataset::new(2, vec![vec![0.0, 0.0], vec![0.5, 1.5]]).unwrap_err();
        assert!(matches!(err, DatasetError::OutOfRange { index: 1, coord: 1, .. }));
        let err = Dataset::new(2, vec![vec![0.0]]).unwrap_err();
        assert!(matches!(err, DatasetError::DimensionMismatch { index: 0, .. }));
    }

    #[test]
    fn mean_cov_examples() {
        let p = ds(1, &[&[1.0], &[-1.0]]).mean_cov().unwrap();
        assert_eq!(p.mean, vec![0.0]);
        assert_eq!(p.covariance.get(0, 0), 1.0);
        let p = ds(2, &[&[1.0, 1.0], &[-1.0, -1.0]]).mean_cov().unwrap();
        assert_eq!(p.mean, vec![0.0, 0.0]);
        assert_eq!(p.covariance.to_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            ds(1, &[&[0.3]]).mean_cov(),
            Err(DatasetError::TooFewRecords(1))
        ));
    }

    #[test]
    fn min_eigenvalue_of_two_point_dataset() {
        let p = ds(1, &[&[1.0], &[-1.0]]).mean_cov().unwrap();
        assert_eq!(p.covariance.min_eigenvalue().unwrap(), 1.0);
    }

    #[test]
    fn sigma_floor_examples() {
        let r = ds(1, &[&[1.0], &[-1.0]]).in_sigma_floor(0.5).unwrap();
        assert!(r.member);
        assert_eq!(r.min_eigenvalue, 1.0);
        let r = ds(1, &[&[0.1], &[0.1]]).in_sigma_floor(0.01).unwrap();
        assert!(!r.member);
        let dup = ds(2, &[&[0.3, 0.3], &[-0.7, -0.7], &[0.9, 0.9], &[0.1, 0.1]]);
        for sigma in [1e-9, 1e-3, 0.5] {
            assert!(!dup.in_sigma_floor(sigma).unwrap().member);
        }
    }

    #[test]
    fn neighbor_edits() {
        let d = ds(1, &[&[0.1], &[0.2], &[0.3]]);
        assert_eq!(d.neighbor(&Edit::Add(vec![0.5])).unwrap().len(), 4);
        let removed = d.neighbor(&Edit::Remove(0)).unwrap();
        assert_eq!(removed.records(), &[vec![0.2], vec![0.3]]);
        let replaced = d.neighbor(&Edit::Replace(1, vec![-0.4])).unwrap();
        assert_eq!(replaced.len(), 3);
        assert_eq!(replaced.record(1), Some(&[-0.4][..]));
        assert_eq!(d.len(), 3);
        assert!(matches!(
            d.neighbor(&Edit::Remove(3)),
            Err(DatasetError::IndexOutOfRange { index: 3, n: 3 })
        ));
        assert!(d.neighbor(&Edit::Add(vec![1.2])).is_err());
        assert!(d.neighbor(&Edit::Replace(0, vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn delta_vanishes_when_adding_the_mean() {
        let d = ds(2, &[&[0.5, -0.5], &[-0.5, 0.5], &[0.5, 0.5], &[-0.5, -0.5]]);
        let delta = d.neighbor_delta(&[0.0, 0.0], NeighborSign::Add).unwrap();
        assert!(delta.mean_shift.iter().all(|v| *v == 0.0));
        assert_eq!(delta.rank_one.max_abs(), 0.0);
        assert_eq!(delta.lambda, 0.0);
    }

    #[test]
    fn delta_hand_computation_one_dimension() {
        let d = ds(1, &[&[1.0], &[-1.0]]);
        let delta = d.neighbor_delta(&[0.0], NeighborSign::Add).unwrap();
        assert_eq!(delta.mean_shift, vec![0.0]);
        assert_eq!(delta.rank_one.get(0, 0), 0.0);
        // Adding x = 1 instead: X = (2/9)(1 - 0)^2, λ = X / Σ_1 = 2/9.
        let delta = d.neighbor_delta(&[1.0], NeighborSign::Add).unwrap();
        assert!((delta.rank_one.get(0, 0) - 2.0 / 9.0).abs() < 1e-15);
        assert!((delta.lambda - 2.0 / 9.0).abs() < 1e-15);
        assert!((delta.mean_shift[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn delta_errors() {
        let d = ds(1, &[&[0.2], &[0.2], &[0.2]]);
        assert!(matches!(
            d.neighbor_delta(&[0.5], NeighborSign::Add),
            Err(DatasetError::SingularCovariance { .. })
        ));
        let d = ds(1, &[&[1.0], &[-1.0], &[0.0]]);
        assert!(matches!(
            d.neighbor_delta(&[0.5], NeighborSign::Remove),
            Err(DatasetError::NotARecord)
        ));
    }

    fn two_pass(d: &Dataset) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = d.len() as f64;
        let dim = d.dim();
        let mut mu = vec![0.0; dim];
        for r in d.records() {
            for i in 0..dim {
                mu[i] += r[i] / n;
            }
        }
        let mut cov = vec![vec![0.0; dim]; dim];
        for r in d.records() {
            for i in 0..dim {
                for j in 0..dim {
                    cov[i][j] += (r[i] - mu[i]) * (r[j] - mu[j]) / n;
                }
            }
        }
        (mu, cov)
    }

    fn dataset_strategy() -> impl Strategy<Value = Dataset> {
        (1usize..=4, 3usize..40).prop_flat_map(|(dim, n)| {
            prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, dim), n)
                .prop_map(move |rows| Dataset::new(dim, rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn mean_cov_matches_two_pass(d in dataset_strategy()) {
            let p = d.mean_cov().unwrap();
            let (mu, cov) = two_pass(&d);
            for i in 0..d.dim() {
                prop_assert!((p.mean[i] - mu[i]).abs() <= 1e-12);
                prop_assert!(p.mean[i].abs() <= 1.0);
                for j in 0..d.dim() {
                    prop_assert!((p.covariance.get(i, j) - cov[i][j]).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn normalize_stays_in_unit_box(
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..30)
        ) {
            let t = RawTable { columns: vec!["a".into(), "b".into(), "c".into()], rows };
            let d = normalize(&t).unwrap();
            for r in d.records() {
                prop_assert!(r.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }

        #[test]
        fn delta_matches_direct_moments(
            d in dataset_strategy(),
            x in prop::collection::vec(-1.0f64..=1.0, 4),
            pick in 0usize..1000,
            remove in any::<bool>(),
        ) {
            let dim = d.dim();
            let x: Vec<f64> = x[..dim].to_vec();
            let p1 = d.mean_cov().unwrap();
            prop_assume!(p1.covariance.min_eigenvalue().unwrap() > 1e-6);
            let (sign, x, d2) = if remove {
                let i = pick % d.len();
                let x = d.records()[i].clone();
                (NeighborSign::Remove, x, d.neighbor(&Edit::Remove(i)).unwrap())
            } else {
                (NeighborSign::Add, x.clone(), d.neighbor(&Edit::Add(x)).unwrap())
            };
            let delta = d.neighbor_delta(&x, sign).unwrap();
            let p2 = d2.mean_cov().unwrap();
            let n = d.len() as f64;
            let s = sign.value();
            for i in 0..dim {
                prop_assert!((delta.mean_shift[i] - (p2.mean[i] - p1.mean[i])).abs() <= 1e-10);
                for j in 0..dim {
                    let direct = p2.covariance.get(i, j) - n / (n + s) * p1.covariance.get(i, j);
                    prop_assert!((delta.rank_one.get(i, j) - direct).abs() <= 1e-10);
                }
            }
            // λ against the eigenvalue of Σ_1^{-1} X computed from its trace
            // (rank one, so the trace is the only non-zero eigenvalue).
            let inv = p1.covariance.inverse().unwrap();
            let trace: f64 = (0..dim)
                .map(|i| (0..dim).map(|k| inv.get(i, k) * delta.rank_one.get(k, i)).sum::<f64>())
                .sum();
            prop_assert!((delta.lambda - trace).abs() <= 1e-9 * (1.0 + trace.abs()));
        }
    }
}
