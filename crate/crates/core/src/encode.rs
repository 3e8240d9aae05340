//! Materialized encoded shares and the closed-form density/complexity
//! estimates for weight-`w` sparse combinations.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::write_matrix_market;
use crate::scheme::{min_weight, CodingPlan, SchemeParams};
use crate::sparse::SparseMatrix;

/// The matrix held by one worker.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedShare {
    pub worker_id: usize,
    pub matrix: SparseMatrix,
}

impl EncodedShare {
    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }
}

/// Builds every worker's share: the coefficient-weighted sum of its support
/// blocks, plus `r_i * noise` for private plans.
///
/// Per-worker encodes run in parallel; the result is ordered by worker id and
/// is identical to a sequential run.
pub fn encode_shares(
    blocks: &[SparseMatrix],
    plan: &CodingPlan,
    noise: Option<&SparseMatrix>,
) -> Result<Vec<EncodedShare>> {
    let k = plan.params().k_a();
    if blocks.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} blocks for k_A={k}",
            blocks.len()
        )));
    }
    let (rows, width) = (blocks[0].rows(), blocks[0].cols());
    if blocks.iter().any(|b| b.rows() != rows || b.cols() != width) {
        return Err(Error::DimensionMismatch(
            "blocks have unequal shapes".into(),
        ));
    }
    let noise = if plan.is_private() {
        let s = noise.ok_or(Error::MissingNoise)?;
        if s.rows() != rows || s.cols() != width {
            return Err(Error::DimensionMismatch(format!(
                "noise is {}x{}, blocks are {rows}x{width}",
                s.rows(),
                s.cols()
            )));
        }
        Some(s)
    } else {
        None
    };

    Ok(plan
        .workers()
        .par_iter()
        .map(|w| {
            let mut terms: Vec<(f64, &SparseMatrix)> = w
                .support
                .iter()
                .zip(&w.coeffs)
                .map(|(&q, &c)| (c, &blocks[q]))
                .collect();
            if let (Some(s), Some(r)) = (noise, w.noise_coeff) {
                terms.push((r, s));
            }
            EncodedShare {
                worker_id: w.id,
                matrix: linear_combination(rows, width, &terms),
            }
        })
        .collect())
}

/// `sum_j c_j M_j` column by column. Terms are accumulated in the order
/// given; entries that cancel to exactly zero are dropped.
fn linear_combination(rows: usize, cols: usize, terms: &[(f64, &SparseMatrix)]) -> SparseMatrix {
    let mut scratch: Vec<(usize, f64)> = Vec::new();
    let columns = (0..cols)
        .map(|c| {
            scratch.clear();
            for &(coef, m) in terms {
                let (idx, vals) = m.column(c);
                scratch.extend(idx.iter().zip(vals).map(|(&r, &v)| (r, coef * v)));
            }
            // Stable, so equal rows keep term order.
            scratch.sort_by_key(|&(r, _)| r);
            let mut column: Vec<(usize, f64)> = Vec::with_capacity(scratch.len());
            for &(r, v) in &scratch {
                match column.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => column.push((r, v)),
                }
            }
            column.retain(|&(_, v)| v != 0.0);
            column
        })
        .collect();
    SparseMatrix::from_sorted_columns(rows, columns)
}

/// Writes each share as `share_<id>.mtx` under `dir`.
pub fn dump_shares(dir: impl AsRef<Path>, shares: &[EncodedShare]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for share in shares {
        write_matrix_market(dir.join(share_file_name(share.worker_id)), &share.matrix)?;
    }
    Ok(())
}

pub fn share_file_name(worker_id: usize) -> String {
    format!("share_{worker_id}.mtx")
}

/// Expected density `1 - (1 - eta)^weight` of a combination of `weight`
/// independent blocks of density `eta`.
pub fn encoded_density(eta: f64, weight: usize) -> f64 {
    1.0 - (1.0 - eta).powi(weight as i32)
}

/// Per-worker cost of dense coding relative to the minimum-weight scheme:
/// `k_A / w_hat`.
pub fn complexity_ratio_dense(params: &SchemeParams) -> f64 {
    let w = min_weight(params.n(), params.s()).expect("params validated");
    params.k_a() as f64 / w as f64
}

/// Per-worker cost of the cyclic comparator relative to the minimum-weight
/// scheme: `min(s + 1, k_A) / w_hat`.
pub fn complexity_ratio_cyclic(params: &SchemeParams) -> f64 {
    let w = min_weight(params.n(), params.s()).expect("params validated");
    (params.s() + 1).min(params.k_a()) as f64 / w as f64
}
