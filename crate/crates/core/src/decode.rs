//! Decoding `A^T x` from the outputs of a survivor set.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scheme::CodingPlan;
use crate::sparse::{DenseVector, PartitionSpec};

/// Smallest-to-largest singular value ratio below which a decoding matrix is
/// treated as singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Strictly increasing list of worker ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurvivorSet(Vec<usize>);

impl SurvivorSet {
    /// Sorts `ids` and validates them against `n` workers.
    pub fn new(mut ids: Vec<usize>, n: usize) -> Result<Self> {
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams(
                "repeated worker in survivor set".into(),
            ));
        }
        if let Some(&last) = ids.last() {
            if last >= n {
                return Err(Error::InvalidParams(format!(
                    "worker {last} out of range for n={n}"
                )));
            }
        }
        Ok(SurvivorSet(ids))
    }

    /// Wraps ids already known to be strictly increasing and in range.
    pub(crate) fn from_sorted(ids: Vec<usize>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        SurvivorSet(ids)
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Coefficient matrix of the survivors' equations.
///
/// Row `j` belongs to the `j`-th survivor, column `q < k_A` to the unknown
/// `A_q^T x` and, for private plans, the last column to `S^T x`.
pub fn decoding_matrix(plan: &CodingPlan, survivors: &SurvivorSet) -> Result<DMatrix<f64>> {
    let tau = plan.recovery_threshold();
    if survivors.len() != tau {
        return Err(Error::SurvivorCount {
            expected: tau,
            got: survivors.len(),
        });
    }
    let k = plan.params().k_a();
    let mut h = DMatrix::zeros(tau, tau);
    for (row, &id) in survivors.ids().iter().enumerate() {
        let w = plan.worker(id);
        for (&q, &c) in w.support.iter().zip(&w.coeffs) {
            h[(row, q)] = c;
        }
        if let Some(r) = w.noise_coeff {
            h[(row, k)] = r;
        }
    }
    Ok(h)
}

/// Extreme singular values of a square matrix.
#[derive(Clone, Copy, Debug)]
pub struct Conditioning {
    pub sigma_max: f64,
    pub sigma_min: f64,
}

impl Conditioning {
    pub fn of(h: &DMatrix<f64>) -> Self {
        let sv = h.clone().singular_values();
        let sigma_max = sv.iter().copied().fold(0.0, f64::max);
        let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        Conditioning {
            sigma_max,
            sigma_min,
        }
    }

    /// 2-norm condition number; infinite for an exactly singular matrix.
    pub fn kappa(&self) -> f64 {
        if self.sigma_min == 0.0 {
            f64::INFINITY
        } else {
            self.sigma_max / self.sigma_min
        }
    }

    // NaN singular values count as singular.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn is_singular(&self) -> bool {
        !(self.sigma_min >= SINGULAR_RTOL * self.sigma_max) || self.sigma_max == 0.0
    }
}

/// Result of one decode.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeReport {
    /// `A^T x`, padding removed.
    pub recovered: DenseVector,
    /// Max-norm of `H U - B` over the solved system.
    pub residual: f64,
    pub kappa: f64,
    pub used_workers: SurvivorSet,
}

impl Serialize for DecodeReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            residual: f64,
            kappa: f64,
            used_workers: &'a SurvivorSet,
            length: usize,
        }
        Doc {
            residual: self.residual,
            kappa: self.kappa,
            used_workers: &self.used_workers,
            length: self.recovered.len(),
        }
        .serialize(serializer)
    }
}

/// Solves for the block products from exactly `tau` worker outputs, aligned
/// with `survivors`, and concatenates them into `A^T x`.
pub fn decode(
    plan: &CodingPlan,
    survivors: &SurvivorSet,
    results: &[DenseVector],
    partition: &PartitionSpec,
) -> Result<DecodeReport> {
    let k = plan.params().k_a();
    if partition.k_a != k {
        return Err(Error::DimensionMismatch(format!(
            "partition has {} blocks, plan has k_A={k}",
            partition.k_a
        )));
    }
    if results.len() != survivors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} results for {} survivors",
            results.len(),
            survivors.len()
        )));
    }
    let width = partition.block_width;
    if let Some(bad) = results.iter().find(|r| r.len() != width) {
        return Err(Error::DimensionMismatch(format!(
            "worker output of length {}, expected {width}",
            bad.len()
        )));
    }

    let h = decoding_matrix(plan, survivors)?;
    let cond = Conditioning::of(&h);
    if cond.is_singular() {
        return Err(Error::Singular {
            survivors: survivors.ids().to_vec(),
        });
    }

    let tau = h.nrows();
    let b = DMatrix::from_fn(tau, width, |j, c| results[j].as_slice()[c]);
    let u = h.clone().lu().solve(&b).ok_or_else(|| Error::Singular {
        survivors: survivors.ids().to_vec(),
    })?;
    let residual = (&h * &u - &b).amax();

    let mut out = Vec::with_capacity(partition.padded_cols);
    for q in 0..k {
        out.extend(u.row(q).iter());
    }
    Ok(DecodeReport {
        recovered: partition.truncate(out),
        residual,
        kappa: cond.kappa(),
        used_workers: survivors.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::encode_shares;
    use crate::scheme::{build_plan, build_private_plan, SchemeParams};
    use crate::sparse::{gen_random_sparse, partition};

    fn params(n: usize, s: usize) -> SchemeParams {
        SchemeParams::new(n, s).unwrap()
    }

    #[test]
    fn survivor_set_validation() {
        assert_eq!(
            SurvivorSet::new(vec![3, 1, 2], 4).unwrap().ids(),
            &[1, 2, 3]
        );
        assert!(SurvivorSet::new(vec![1, 1], 4).is_err());
        assert!(SurvivorSet::new(vec![4], 4).is_err());
    }

    #[test]
    fn identity_plan_matrix_is_diagonal() {
        let plan = build_plan(&params(4, 0), 2);
        let surv = SurvivorSet::new(vec![0, 1, 2, 3], 4).unwrap();
        let h = decoding_matrix(&plan, &surv).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h[(i, j)] != 0.0, i == j);
            }
        }
    }

    #[test]
    fn banded_pattern_six_two() {
        let plan = build_plan(&params(6, 2), 1);
        let surv = SurvivorSet::new(vec![0, 1, 2, 3], 6).unwrap();
        let h = decoding_matrix(&plan, &surv).unwrap();
        let pattern: Vec<Vec<usize>> = (0..4)
            .map(|i| (0..4).filter(|&j| h[(i, j)] != 0.0).collect())
            .collect();
        assert_eq!(
            pattern,
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]]
        );
        let too_few = SurvivorSet::new(vec![0, 1, 2], 6).unwrap();
        assert!(matches!(
            decoding_matrix(&plan, &too_few),
            Err(Error::SurvivorCount {
                expected: 4,
                got: 3
            })
        ));
    }

    #[test]
    fn private_matrix_has_full_noise_column() {
        let plan = build_private_plan(&params(12, 3), 4).unwrap();
        let surv = SurvivorSet::new((1..11).collect(), 12).unwrap();
        let h = decoding_matrix(&plan, &surv).unwrap();
        assert_eq!(h.shape(), (10, 10));
        assert!(h.column(9).iter().all(|&r| r != 0.0));
    }

    #[test]
    fn uncoded_decode_copies_outputs() {
        let p = params(3, 0);
        let plan = build_plan(&p, 0);
        let a = gen_random_sparse(10, 6, 0.4, 2).unwrap();
        let (spec, blocks) = partition(&a, 3).unwrap();
        let x = DenseVector::random(10, 1);
        let shares = encode_shares(&blocks, &plan, None).unwrap();
        let outs: Vec<_> = shares
            .iter()
            .map(|s| s.matrix.spmv_transpose(&x).unwrap())
            .collect();
        let surv = SurvivorSet::new(vec![0, 1, 2], 3).unwrap();
        let rep = decode(&plan, &surv, &outs, &spec).unwrap();
        assert!(rep.recovered.rel_max_error(&a.spmv_transpose(&x).unwrap()) <= 1e-14);
    }

    #[test]
    fn singular_subset_is_reported() {
        // Two workers holding only block 0 cannot recover block 1.
        use crate::scheme::{CodingPlan, WorkerCode};
        let p = params(3, 1);
        let code = |id, q| WorkerCode {
            id,
            support: vec![q],
            coeffs: vec![1.0],
            noise_coeff: None,
        };
        let plan =
            CodingPlan::from_parts(p, 0, false, vec![code(0, 0), code(1, 0), code(2, 1)]).unwrap();
        let spec = PartitionSpec::new(2, 2).unwrap();
        let surv = SurvivorSet::new(vec![0, 1], 3).unwrap();
        let outs = vec![DenseVector::new(vec![1.0]), DenseVector::new(vec![1.0])];
        assert!(matches!(
            decode(&plan, &surv, &outs, &spec),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn report_json_fields() {
        let rep = DecodeReport {
            recovered: DenseVector::new(vec![1.0, 2.0]),
            residual: 0.0,
            kappa: 1.0,
            used_workers: SurvivorSet::new(vec![0, 2], 3).unwrap(),
        };
        assert_eq!(
            serde_json::to_string(&rep).unwrap(),
            r#"{"residual":0.0,"kappa":1.0,"used_workers":[0,2],"length":2}"#
        );
    }
}
