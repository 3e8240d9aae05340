//! Structural and numerical certification of coding plans over straggler
//! patterns.
//!
//! Every survivor set of size `tau` is checked two ways: a perfect matching
//! between survivor equations and unknowns (structural full rank), and the
//! singular values of its decoding matrix (numerical rank and condition
//! number). Scans run in parallel over rank-addressed chunks and are merged in
//! rank order, so reports do not depend on the thread count.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::decode::{decoding_matrix, Conditioning, SurvivorSet};
use crate::error::{Error, Result};
use crate::matching::max_matching;
use crate::rng;
use crate::scheme::{CodingPlan, SchemeKind, SchemeParams};
use crate::subsets::{binomial, next_combination, unrank};

pub const DEFAULT_BUDGET: u128 = 1_000_000;
const CHUNK: u128 = 2048;

/// True iff the survivors' equations can be perfectly matched to the
/// unknowns they involve.
pub fn hall_check(plan: &CodingPlan, survivors: &SurvivorSet) -> Result<bool> {
    let tau = plan.recovery_threshold();
    if survivors.len() != tau {
        return Err(Error::SurvivorCount {
            expected: tau,
            got: survivors.len(),
        });
    }
    Ok(has_perfect_matching(plan, survivors.ids()))
}

fn has_perfect_matching(plan: &CodingPlan, ids: &[usize]) -> bool {
    let k = plan.params().k_a();
    let adj: Vec<Vec<usize>> = ids
        .iter()
        .map(|&i| {
            let w = plan.worker(i);
            let mut nb = w.support.clone();
            if w.noise_coeff.is_some() {
                nb.push(k);
            }
            nb
        })
        .collect();
    max_matching(&adj, plan.unknowns()) == ids.len()
}

fn serialize_kappa<S: Serializer>(k: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if k.is_finite() {
        s.serialize_f64(*k)
    } else {
        s.serialize_none()
    }
}

fn deserialize_kappa<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Outcome of a scan over survivor sets. `kappa_worst` is `null` in JSON when
/// some scanned subset is singular.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub total_subsets: u128,
    pub scanned_subsets: u128,
    /// Set when only a random sample of subsets was scanned.
    pub approximate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_seed: Option<u64>,
    pub matching_failures: Vec<SurvivorSet>,
    pub rank_failures: Vec<SurvivorSet>,
    #[serde(
        serialize_with = "serialize_kappa",
        deserialize_with = "deserialize_kappa"
    )]
    pub kappa_worst: f64,
    pub argmax_subset: Option<SurvivorSet>,
}

impl CertificationReport {
    pub fn is_resilient(&self) -> bool {
        self.matching_failures.is_empty() && self.rank_failures.is_empty()
    }
}

/// Partial scan result over a contiguous run of subsets.
struct Tally {
    matching_failures: Vec<SurvivorSet>,
    rank_failures: Vec<SurvivorSet>,
    scanned: u128,
    worst: Option<(f64, SurvivorSet)>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            matching_failures: Vec::new(),
            rank_failures: Vec::new(),
            scanned: 0,
            worst: None,
        }
    }

    fn visit(&mut self, plan: &CodingPlan, ids: &[usize]) {
        self.scanned += 1;
        let set = || SurvivorSet::from_sorted(ids.to_vec());
        if !has_perfect_matching(plan, ids) {
            self.matching_failures.push(set());
        }
        let h = decoding_matrix(plan, &set()).expect("subset has tau members");
        let cond = Conditioning::of(&h);
        let kappa = if cond.is_singular() {
            self.rank_failures.push(set());
            f64::INFINITY
        } else {
            cond.kappa()
        };
        // Strict comparison keeps the lowest-rank maximiser.
        if self.worst.as_ref().is_none_or(|(w, _)| kappa > *w) {
            self.worst = Some((kappa, set()));
        }
    }

    /// Appends a tally covering strictly later ranks.
    fn absorb(mut self, later: Tally) -> Self {
        self.matching_failures.extend(later.matching_failures);
        self.rank_failures.extend(later.rank_failures);
        self.scanned += later.scanned;
        self.worst = match (self.worst, later.worst) {
            (Some(a), Some(b)) => Some(if b.0 > a.0 { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }

    fn into_report(
        self,
        total: u128,
        approximate: bool,
        sample_seed: Option<u64>,
    ) -> CertificationReport {
        let (kappa_worst, argmax_subset) = match self.worst {
            Some((k, s)) => (k, Some(s)),
            None => (1.0, None),
        };
        CertificationReport {
            total_subsets: total,
            scanned_subsets: self.scanned,
            approximate,
            sample_seed,
            matching_failures: self.matching_failures,
            rank_failures: self.rank_failures,
            kappa_worst,
            argmax_subset,
        }
    }
}

fn subset_count(plan: &CodingPlan) -> Result<u128> {
    let n = plan.params().n();
    binomial(n, plan.recovery_threshold()).ok_or(Error::BudgetExceeded {
        subsets: u128::MAX,
        budget: 0,
    })
}

fn scan_all(plan: &CodingPlan, total: u128) -> Tally {
    let n = plan.params().n();
    let tau = plan.recovery_threshold();
    let chunks: Vec<u128> = (0..total.div_ceil(CHUNK)).collect();
    let tallies: Vec<Tally> = chunks
        .par_iter()
        .map(|&c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            let mut comb = unrank(lo, n, tau);
            let mut tally = Tally::new();
            for r in lo..hi {
                tally.visit(plan, &comb);
                if r + 1 < hi {
                    next_combination(&mut comb, n);
                }
            }
            tally
        })
        .collect();
    tallies.into_iter().fold(Tally::new(), Tally::absorb)
}

/// Exhaustive scan of all `C(n, tau)` survivor sets, refused when that count
/// exceeds `budget`.
pub fn certify_resilience(plan: &CodingPlan, budget: u128) -> Result<CertificationReport> {
    let total = subset_count(plan)?;
    if total > budget {
        return Err(Error::BudgetExceeded {
            subsets: total,
            budget,
        });
    }
    Ok(scan_all(plan, total).into_report(total, false, None))
}

/// Worst-case condition number over all survivor sets; infinite if any is
/// singular.
pub fn kappa_worst(plan: &CodingPlan, budget: u128) -> Result<f64> {
    Ok(certify_resilience(plan, budget)?.kappa_worst)
}

/// Scans `sample_count` distinct survivor sets drawn uniformly without
/// replacement. Falls back to the exhaustive scan when the sample would cover
/// every subset.
pub fn scan_sampled(
    plan: &CodingPlan,
    sample_count: usize,
    seed: u64,
) -> Result<CertificationReport> {
    if sample_count == 0 {
        return Err(Error::InvalidParams(
            "sample_count must be at least 1".into(),
        ));
    }
    let total = subset_count(plan)?;
    let want = sample_count as u128;
    if want >= total {
        let mut rep = scan_all(plan, total).into_report(total, false, Some(seed));
        rep.sample_seed = Some(seed);
        return Ok(rep);
    }

    // Floyd's algorithm: `want` distinct ranks in [0, total).
    let mut rng = rng::substream(seed, rng::SAMPLE, 0);
    let mut ranks = BTreeSet::new();
    for j in total - want..total {
        let t = rng.random_range(0..=j);
        if !ranks.insert(t) {
            ranks.insert(j);
        }
    }

    let n = plan.params().n();
    let tau = plan.recovery_threshold();
    let ranks: Vec<u128> = ranks.into_iter().collect();
    let tallies: Vec<Tally> = ranks
        .par_chunks(CHUNK as usize)
        .map(|chunk| {
            let mut tally = Tally::new();
            for &r in chunk {
                tally.visit(plan, &unrank(r, n, tau));
            }
            tally
        })
        .collect();
    Ok(tallies
        .into_iter()
        .fold(Tally::new(), Tally::absorb)
        .into_report(total, true, Some(seed)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub trials: usize,
    pub base_seed: u64,
    pub budget: u128,
    /// Scan this many sampled subsets per trial instead of all of them.
    pub sample: Option<usize>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            trials: 10,
            base_seed: 0,
            budget: DEFAULT_BUDGET,
            sample: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialStat {
    pub seed: u64,
    #[serde(serialize_with = "serialize_kappa")]
    pub kappa_worst: f64,
    pub singular_subsets: usize,
    pub subsets_scanned: u128,
    #[serde(skip)]
    pub elapsed_secs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialOutcome {
    pub best: CodingPlan,
    pub kappa_worst: f64,
    pub report: CertificationReport,
    pub trials: Vec<TrialStat>,
}

/// Builds `config.trials` plans with seeds `base_seed + j` and keeps the one
/// with the smallest worst-case condition number (lowest seed on ties).
pub fn trial_search(
    params: &SchemeParams,
    kind: SchemeKind,
    config: &TrialConfig,
) -> Result<TrialOutcome> {
    if config.trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let mut stats = Vec::with_capacity(config.trials);
    let mut best: Option<(CodingPlan, CertificationReport)> = None;
    for j in 0..config.trials {
        let seed = config.base_seed.wrapping_add(j as u64);
        let start = Instant::now();
        let plan = kind.build(params, seed)?;
        let report = match config.sample {
            Some(count) => scan_sampled(&plan, count, seed)?,
            None => certify_resilience(&plan, config.budget)?,
        };
        stats.push(TrialStat {
            seed,
            kappa_worst: report.kappa_worst,
            singular_subsets: report.rank_failures.len(),
            subsets_scanned: report.scanned_subsets,
            elapsed_secs: start.elapsed().as_secs_f64(),
        });
        if !report.kappa_worst.is_finite() || !report.is_resilient() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, r)) => {
                report.kappa_worst < r.kappa_worst
                    || (report.kappa_worst == r.kappa_worst && seed < b.seed())
            }
        };
        if better {
            best = Some((plan, report));
        }
    }
    let (best, report) = best.ok_or(Error::AllTrialsSingular(config.trials))?;
    Ok(TrialOutcome {
        kappa_worst: report.kappa_worst,
        best,
        report,
        trials: stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{
        baseline_dense_plan, build_plan, build_private_plan, coverage_counts, WorkerCode,
    };

    fn params(n: usize, s: usize) -> SchemeParams {
        SchemeParams::new(n, s).unwrap()
    }

    fn custom_plan(n: usize, s: usize, supports: &[&[usize]]) -> CodingPlan {
        let workers = supports
            .iter()
            .enumerate()
            .map(|(id, sup)| WorkerCode {
                id,
                support: sup.to_vec(),
                coeffs: (0..sup.len())
                    .map(|j| 1.0 + (id * 7 + j * 3) as f64 * 0.37)
                    .collect(),
                noise_coeff: None,
            })
            .collect();
        CodingPlan::from_parts(params(n, s), 0, false, workers).unwrap()
    }

    #[test]
    fn hall_on_small_bipartite_instance() {
        let plan = custom_plan(
            5,
            0,
            &[&[0, 1, 2], &[0, 1, 3], &[0, 3, 4], &[1, 2, 4], &[2, 3, 4]],
        );
        let all = SurvivorSet::new((0..5).collect(), 5).unwrap();
        assert!(hall_check(&plan, &all).unwrap());
    }

    #[test]
    fn hall_fails_on_shared_singleton() {
        let plan = custom_plan(3, 1, &[&[0], &[0], &[1]]);
        let bad = SurvivorSet::new(vec![0, 1], 3).unwrap();
        assert!(!hall_check(&plan, &bad).unwrap());
        // Structural failure forces a singular decoding matrix.
        let h = decoding_matrix(&plan, &bad).unwrap();
        assert!(h.column(1).iter().all(|&v| v == 0.0));
        assert!(Conditioning::of(&h).is_singular());

        let rep = certify_resilience(&plan, DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.matching_failures, vec![bad.clone()]);
        assert_eq!(rep.rank_failures, vec![bad.clone()]);
        assert_eq!(rep.kappa_worst, f64::INFINITY);
        assert_eq!(rep.argmax_subset, Some(bad));
        assert_eq!(kappa_worst(&plan, DEFAULT_BUDGET).unwrap(), f64::INFINITY);
        assert!(hall_check(&plan, &SurvivorSet::new(vec![0], 3).unwrap()).is_err());
    }

    #[test]
    fn exhaustive_small_plans() {
        let rep = certify_resilience(&build_plan(&params(12, 3), 0), DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.total_subsets, 220);
        assert_eq!(rep.scanned_subsets, 220);
        assert!(rep.is_resilient());
        assert!(rep.kappa_worst.is_finite() && rep.kappa_worst >= 1.0);

        let rep = certify_resilience(&build_plan(&params(6, 2), 0), DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.total_subsets, 15);
        assert!(rep.is_resilient());

        let rep =
            certify_resilience(&baseline_dense_plan(&params(6, 2), 0), DEFAULT_BUDGET).unwrap();
        assert!(rep.is_resilient());

        let rep = certify_resilience(
            &build_private_plan(&params(12, 3), 0).unwrap(),
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert_eq!(rep.total_subsets, 66);
        assert!(rep.is_resilient());
    }

    #[test]
    fn identity_plan_is_perfectly_conditioned() {
        // Uncoded coefficients are random scalars, so force unit weights.
        let plan = custom_plan(4, 0, &[&[0], &[1], &[2], &[3]]);
        let mut workers = plan.workers().to_vec();
        for w in &mut workers {
            w.coeffs = vec![1.0];
        }
        let plan = CodingPlan::from_parts(params(4, 0), 0, false, workers).unwrap();
        assert_eq!(kappa_worst(&plan, DEFAULT_BUDGET).unwrap(), 1.0);
    }

    #[test]
    fn budget_is_enforced() {
        let plan = build_plan(&params(12, 3), 0);
        assert!(matches!(
            certify_resilience(&plan, 100),
            Err(Error::BudgetExceeded {
                subsets: 220,
                budget: 100
            })
        ));
    }

    #[test]
    fn sampled_scan_properties() {
        let plan = build_plan(&params(12, 3), 3);
        let full = certify_resilience(&plan, DEFAULT_BUDGET).unwrap();
        let sample = scan_sampled(&plan, 50, 9).unwrap();
        assert!(sample.approximate);
        assert_eq!(sample.scanned_subsets, 50);
        assert!(sample.kappa_worst <= full.kappa_worst);
        assert_eq!(scan_sampled(&plan, 50, 9).unwrap(), sample);

        let complete = scan_sampled(&plan, 220, 9).unwrap();
        assert!(!complete.approximate);
        assert_eq!(complete.kappa_worst, full.kappa_worst);
        assert_eq!(complete.argmax_subset, full.argmax_subset);
        assert!(scan_sampled(&plan, 0, 0).is_err());
    }

    #[test]
    fn trial_search_picks_minimum() {
        let p = params(12, 3);
        let cfg = TrialConfig {
            trials: 6,
            base_seed: 40,
            ..TrialConfig::default()
        };
        let out = trial_search(&p, SchemeKind::Proposed, &cfg).unwrap();
        let direct: Vec<f64> = (40..46)
            .map(|s| kappa_worst(&build_plan(&p, s), DEFAULT_BUDGET).unwrap())
            .collect();
        let min = direct.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(out.kappa_worst, min);
        assert!(out.kappa_worst <= direct[0]);
        assert_eq!(out.trials.len(), 6);
        assert!(coverage_counts(&out.best).min() > p.s());

        let one = trial_search(
            &p,
            SchemeKind::Proposed,
            &TrialConfig {
                trials: 1,
                base_seed: 5,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(one.best, build_plan(&p, 5));
    }

    #[test]
    fn report_json_encodes_infinite_kappa_as_null() {
        let plan = custom_plan(3, 1, &[&[0], &[0], &[1]]);
        let rep = certify_resilience(&plan, DEFAULT_BUDGET).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"kappa_worst\":null"));
        let back: CertificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
    }
}
