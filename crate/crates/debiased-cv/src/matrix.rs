//! The validation error matrix.
//!
//! An [`ErrorMatrix`] holds the per-observation, per-model losses produced by
//! a validation pass: entry `(i, j)` is the loss of model `j` on held-out
//! observation `i`. Matrices coming from K-fold cross-validation additionally
//! carry a fold label per row, in which case row `i` was scored by the model
//! trained with row `i`'s fold left out.
//!
//! # CSV format
//!
//! One row per validation observation, one numeric column per model; a header
//! row is required and the column order defines the model index. An optional
//! leading integer column named `fold` (labels `1..=K`) marks cross-validation
//! structure:
//!
//! ```text
//! fold,lambda_small,lambda_large
//! 1,0.0,1.0
//! 1,1.0,0.0
//! 2,0.0,0.0
//! 2,1.0,1.0
//! ```

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::folds::FoldPartition;

/// Per-observation, per-model validation losses, with optional CV fold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    losses: Array2<f64>,
    fold_of_row: Option<Vec<usize>>,
    column_names: Option<Vec<String>>,
}

impl ErrorMatrix {
    /// Build from a dense loss matrix. Rejects matrices smaller than 2x1 and
    /// any non-finite entry.
    pub fn new(losses: Array2<f64>) -> Result<Self> {
        Self::with_parts(losses, None, None)
    }

    /// Build a cross-validation matrix: `fold_of_row[i]` is the 0-based fold
    /// that held out row `i`. Every fold `0..k` must appear and all folds
    /// must have equal size.
    pub fn with_folds(losses: Array2<f64>, fold_of_row: Vec<usize>) -> Result<Self> {
        Self::with_parts(losses, Some(fold_of_row), None)
    }

    pub(crate) fn with_parts(
        losses: Array2<f64>,
        fold_of_row: Option<Vec<usize>>,
        column_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, m) = losses.dim();
        if n < 2 || m < 1 {
            return Err(Error::MatrixTooSmall { n, m });
        }
        for ((i, j), &v) in losses.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: match &column_names {
                        Some(names) => names[j].clone(),
                        None => format!("{}", j + 1),
                    },
                });
            }
        }
        if let Some(folds) = &fold_of_row {
            validate_fold_labels(folds, n)?;
        }
        Ok(Self {
            losses,
            fold_of_row,
            column_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.losses.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.losses.ncols()
    }

    pub fn losses(&self) -> &Array2<f64> {
        &self.losses
    }

    /// CV fold labels (0-based), if this matrix came from cross-validation.
    pub fn fold_of_row(&self) -> Option<&[usize]> {
        self.fold_of_row.as_deref()
    }

    /// Number of CV folds, if fold labels are present.
    pub fn n_folds(&self) -> Option<usize> {
        self.fold_of_row
            .as_ref()
            .map(|f| f.iter().max().map_or(0, |&k| k + 1))
    }

    /// Model column names from the CSV header, when the matrix was read from
    /// a file.
    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// The fold labels as a [`FoldPartition`], if present.
    pub fn cv_partition(&self) -> Option<FoldPartition> {
        let folds = self.fold_of_row.as_ref()?;
        let k = self.n_folds()?;
        Some(FoldPartition::from_assignment(folds.clone(), k).expect("validated on construction"))
    }

    /// Mean loss of each model over all rows: the nominal validation error
    /// curve the selection rule minimizes.
    pub fn column_means(&self) -> Array1<f64> {
        self.losses
            .mean_axis(Axis(0))
            .expect("matrix has at least one row")
    }

    /// Per-fold mean losses: entry `(k, j)` is the mean of column `j` over
    /// the rows of fold `k`.
    pub fn fold_means(&self, partition: &FoldPartition) -> Result<Array2<f64>> {
        let n = self.n_rows();
        let m = self.n_models();
        if partition.len() != n {
            return Err(Error::PartitionMismatch {
                partition_rows: partition.len(),
                matrix_rows: n,
            });
        }
        let k = partition.n_folds();
        let fold_size = (n / k) as f64;
        let mut sums = Array2::<f64>::zeros((k, m));
        for (i, row) in self.losses.rows().into_iter().enumerate() {
            let f = partition.fold_of(i);
            let mut out = sums.row_mut(f);
            out += &row;
        }
        sums /= fold_size;
        Ok(sums)
    }

    /// New matrix keeping only the given rows, in order. Fold labels are
    /// carried over (used by within-fold resampling); the caller is
    /// responsible for keeping fold sizes equal.
    pub(crate) fn select_rows(&self, rows: &[usize]) -> ErrorMatrix {
        let m = self.n_models();
        let mut losses = Array2::<f64>::zeros((rows.len(), m));
        for (out, &src) in rows.iter().enumerate() {
            losses.row_mut(out).assign(&self.losses.row(src));
        }
        let fold_of_row = self
            .fold_of_row
            .as_ref()
            .map(|f| rows.iter().map(|&i| f[i]).collect());
        ErrorMatrix {
            losses,
            fold_of_row,
            column_names: self.column_names.clone(),
        }
    }

    /// Read from CSV (see module docs for the format).
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::CsvFormat {
                line: 1,
                msg: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(Error::MissingHeader);
        }
        let has_fold = headers.first().map(String::as_str) == Some("fold");
        let model_names: Vec<String> = if has_fold {
            headers[1..].to_vec()
        } else {
            headers.clone()
        };
        if model_names.is_empty() {
            return Err(Error::CsvFormat {
                line: 1,
                msg: "no model columns after the fold column".into(),
            });
        }
        if model_names.iter().any(|h| h.is_empty()) {
            return Err(Error::MissingHeader);
        }
        // A header of bare numbers is almost certainly a missing header row.
        if model_names.iter().all(|h| h.parse::<f64>().is_ok()) {
            return Err(Error::MissingHeader);
        }

        let m = model_names.len();
        let mut values: Vec<f64> = Vec::new();
        let mut folds_1based: Vec<usize> = Vec::new();
        let mut n = 0usize;
        for (idx, record) in rdr.records().enumerate() {
            let line = idx + 2; // 1-based, after the header
            let record = record.map_err(|e| Error::CsvFormat {
                line,
                msg: e.to_string(),
            })?;
            let expected = m + usize::from(has_fold);
            if record.len() != expected {
                return Err(Error::CsvFormat {
                    line,
                    msg: format!("expected {} fields, got {}", expected, record.len()),
                });
            }
            let mut fields = record.iter();
            if has_fold {
                let raw = fields.next().expect("length checked");
                let fold: usize = raw.parse().map_err(|_| Error::CsvFormat {
                    line,
                    msg: format!("fold label {raw:?} is not a positive integer"),
                })?;
                if fold == 0 {
                    return Err(Error::CsvFormat {
                        line,
                        msg: "fold labels are 1-based; got 0".into(),
                    });
                }
                folds_1based.push(fold);
            }
            for (j, raw) in fields.enumerate() {
                let v: f64 = raw.parse().map_err(|_| Error::CsvFormat {
                    line,
                    msg: format!("column {:?}: {raw:?} is not a number", model_names[j]),
                })?;
                values.push(v);
            }
            n += 1;
        }

        let losses = Array2::from_shape_vec((n, m), values).expect("shape matches row count");
        let fold_of_row = if has_fold {
            Some(folds_1based.iter().map(|&f| f - 1).collect())
        } else {
            None
        };
        Self::with_parts(losses, fold_of_row, Some(model_names))
    }

    /// Write in the same CSV format `from_csv_reader` accepts.
    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let names: Vec<String> = match &self.column_names {
            Some(names) => names.clone(),
            None => (1..=self.n_models()).map(|j| format!("model_{j}")).collect(),
        };
        let mut header: Vec<String> = Vec::new();
        if self.fold_of_row.is_some() {
            header.push("fold".into());
        }
        header.extend(names);
        wtr.write_record(&header).map_err(csv_io)?;
        for (i, row) in self.losses.rows().into_iter().enumerate() {
            let mut record: Vec<String> = Vec::with_capacity(header.len());
            if let Some(folds) = &self.fold_of_row {
                record.push((folds[i] + 1).to_string());
            }
            record.extend(row.iter().map(|v| format!("{v}")));
            wtr.write_record(&record).map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::CsvFormat {
        line: 0,
        msg: e.to_string(),
    }
}

fn validate_fold_labels(folds: &[usize], n: usize) -> Result<()> {
    if folds.len() != n {
        return Err(Error::BadFoldLabels {
            k: 0,
            detail: format!("{} labels for {} rows", folds.len(), n),
        });
    }
    let k = folds.iter().max().map_or(0, |&f| f + 1);
    if k < 2 {
        return Err(Error::FoldCountTooSmall { k });
    }
    let mut counts = vec![0usize; k];
    for &f in folds {
        counts[f] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::BadFoldLabels {
            k,
            detail: format!("fold {} never occurs", missing + 1),
        });
    }
    if counts.iter().any(|&c| c != counts[0]) {
        return Err(Error::BadFoldLabels {
            k,
            detail: format!("unequal fold sizes {counts:?}"),
        });
    }
    Ok(())
}
