//! Straggler-resilient coded matrix-vector multiplication that keeps the
//! encoded shares sparse.
//!
//! The input `A` is split into `k_A` block-columns. Each of `n` workers holds
//! a random linear combination of only `w` of them, with `w` the smallest
//! homogeneous weight that still lets the central node recover `A^T x` from
//! any `k_A` workers. An optional sparse noise matrix trades sparsity for
//! protection of `A` against curious workers, at the cost of one extra
//! worker in the recovery threshold.
//!
//! - [`sparse`], [`io`]: matrices, partitioning, Matrix Market files.
//! - [`scheme`]: weight bounds, supports and coding plans.
//! - [`encode`] / [`decode`]: shares and recovery.
//! - [`certify`]: matching and condition-number scans over straggler sets.
//! - [`sim`]: cost-model simulation and privacy sweeps.

pub mod certify;
pub mod decode;
pub mod encode;
pub mod error;
pub mod io;
mod matching;
pub mod rng;
pub mod scheme;
pub mod sim;
pub mod sparse;
pub mod subsets;

pub use certify::{
    certify_resilience, hall_check, kappa_worst, scan_sampled, trial_search, CertificationReport,
    TrialConfig, TrialOutcome,
};
pub use decode::{decode, decoding_matrix, DecodeReport, SurvivorSet};
pub use encode::{encode_shares, encoded_density, EncodedShare};
pub use error::{Error, Result};
pub use scheme::{
    baseline_cyclic_plan, baseline_dense_plan, build_plan, build_private_plan,
    classify_weight_regime, coverage_counts, min_weight, support_set, CodingPlan, SchemeKind,
    SchemeParams,
};
pub use sparse::{gen_random_sparse, partition, DenseVector, PartitionSpec, SparseMatrix};
