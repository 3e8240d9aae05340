//! Column-grouped sparse matrices, block-column partitioning and the
//! transpose product `M^T x` that every worker evaluates.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Real sparse matrix stored in compressed sparse column form.
///
/// Row indices inside each column are strictly increasing and no stored value
/// is exactly zero. Column grouping makes `M^T x` a sequence of sparse dot
/// products and block-column slicing a pointer offset.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            col_ptr: vec![0; cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    ///
    /// Fails on out-of-range indices and repeated coordinates. Explicit zeros
    /// are accepted and dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::IndexOutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::DuplicateEntry {
                    row: pair[0].0,
                    col: pair[0].1,
                });
            }
        }

        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if v == 0.0 {
                continue;
            }
            col_ptr[c + 1] += 1;
            row_idx.push(r);
            values.push(v);
        }
        for c in 0..cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(SparseMatrix {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Assembles a matrix from per-column `(row, value)` lists that are
    /// already sorted by row, deduplicated and free of zeros.
    pub(crate) fn from_sorted_columns(rows: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        let cols = columns.len();
        let nnz = columns.iter().map(Vec::len).sum();
        let mut col_ptr = Vec::with_capacity(cols + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for column in columns {
            for (r, v) in column {
                debug_assert!(r < rows && v != 0.0);
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        SparseMatrix {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Fraction of stored entries; zero for an empty shape.
    pub fn density(&self) -> f64 {
        let cells = self.rows as f64 * self.cols as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.nnz() as f64 / cells
        }
    }

    /// Row indices and values of column `c`.
    pub fn column(&self, c: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// Entries in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |c| {
            let (rows, vals) = self.column(c);
            rows.iter().zip(vals).map(move |(&r, &v)| (r, c, v))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (rows, vals) = self.column(col);
        match rows.binary_search(&row) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Columns `start..end` as a new matrix; columns past `self.cols` are
    /// empty padding.
    pub fn column_block(&self, start: usize, end: usize) -> SparseMatrix {
        let columns = (start..end)
            .map(|c| {
                if c < self.cols {
                    let (rows, vals) = self.column(c);
                    rows.iter().copied().zip(vals.iter().copied()).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        SparseMatrix::from_sorted_columns(self.rows, columns)
    }

    /// Computes `M^T x`.
    pub fn spmv_transpose(&self, x: &DenseVector) -> Result<DenseVector> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against matrix with {} rows",
                x.len(),
                self.rows
            )));
        }
        let x = x.as_slice();
        let out = (0..self.cols)
            .map(|c| {
                let (rows, vals) = self.column(c);
                rows.iter().zip(vals).map(|(&r, &v)| v * x[r]).sum()
            })
            .collect();
        Ok(DenseVector::new(out))
    }
}

/// Dense real vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Self {
        DenseVector(values)
    }

    pub fn zeros(len: usize) -> Self {
        DenseVector(vec![0.0; len])
    }

    /// Standard normal entries drawn from the vector substream of `seed`.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut rng = rng::substream(seed, rng::VECTOR, 0);
        DenseVector((0..len).map(|_| rng.sample(StandardNormal)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other| / max |other|`, or the absolute error when `other`
    /// is identically zero.
    pub fn rel_max_error(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.len(), other.len(), "length mismatch");
        let err = self
            .0
            .iter()
            .zip(&other.0)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = other.max_abs();
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    }
}

/// Geometry of a split of `original_cols` columns into `k_a` equal
/// block-columns after right zero-padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub k_a: usize,
    pub original_cols: usize,
    pub padded_cols: usize,
    pub block_width: usize,
}

impl PartitionSpec {
    pub fn new(original_cols: usize, k_a: usize) -> Result<Self> {
        if k_a == 0 {
            return Err(Error::InvalidParams("k_A must be at least 1".into()));
        }
        if original_cols == 0 {
            return Err(Error::InvalidParams("matrix has no columns".into()));
        }
        if k_a > original_cols {
            return Err(Error::InvalidParams(format!(
                "cannot split {original_cols} columns into {k_a} blocks"
            )));
        }
        let block_width = original_cols.div_ceil(k_a);
        Ok(PartitionSpec {
            k_a,
            original_cols,
            padded_cols: block_width * k_a,
            block_width,
        })
    }

    /// Drops the padding tail of a concatenated product.
    pub fn truncate(&self, mut padded: Vec<f64>) -> DenseVector {
        padded.truncate(self.original_cols);
        DenseVector::new(padded)
    }
}

/// Splits `a` into `k_a` block-columns of equal width, padding on the right.
pub fn partition(a: &SparseMatrix, k_a: usize) -> Result<(PartitionSpec, Vec<SparseMatrix>)> {
    let spec = PartitionSpec::new(a.cols(), k_a)?;
    let blocks = (0..k_a)
        .map(|q| a.column_block(q * spec.block_width, (q + 1) * spec.block_width))
        .collect();
    Ok((spec, blocks))
}

/// Random sparse matrix with i.i.d. Bernoulli(`density`) support and
/// standard normal values.
///
/// The support mask and the values come from separate substreams, visited
/// column-major. For a fixed seed the support is therefore monotone in
/// `density`: raising it only adds entries.
pub fn gen_random_sparse(
    rows: usize,
    cols: usize,
    density: f64,
    seed: u64,
) -> Result<SparseMatrix> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParams(format!(
            "density {density} outside [0, 1]"
        )));
    }
    let mut mask = rng::substream(seed, rng::SPARSE, 0);
    let mut vals = rng::substream(seed, rng::SPARSE, 1);
    let mut columns = Vec::with_capacity(cols);
    for _ in 0..cols {
        let mut column = Vec::new();
        for r in 0..rows {
            if mask.random::<f64>() < density {
                let v = loop {
                    let v: f64 = vals.sample(StandardNormal);
                    if v != 0.0 {
                        break v;
                    }
                };
                column.push((r, v));
            }
        }
        columns.push(column);
    }
    Ok(SparseMatrix::from_sorted_columns(rows, columns))
}
