//! Weight bounds, support-set construction and coding plans.
//!
//! A plan assigns worker `i` a random linear combination of the block-columns
//! listed in its support. The proposed plan meets the lower bound
//! `ceil((n - s)(s + 1) / n)` on the homogeneous weight while staying
//! resilient to any `s` stragglers.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// System description: `n` workers tolerating `s` stragglers, each storing a
/// `1/k_A` fraction of the matrix with `k_A = n - s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeParams {
    n: usize,
    s: usize,
}

impl SchemeParams {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if s >= n {
            return Err(Error::InvalidParams(format!(
                "s={s} must be smaller than n={n}"
            )));
        }
        if n - s < s {
            return Err(Error::InvalidParams(
                "k_A < s violates scheme precondition".into(),
            ));
        }
        Ok(SchemeParams { n, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn k_a(&self) -> usize {
        self.n - self.s
    }

    /// `gamma_A = 1 / k_A`.
    pub fn storage_fraction(&self) -> f64 {
        1.0 / self.k_a() as f64
    }
}

impl fmt::Display for SchemeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} s={} k_A={}", self.n, self.s, self.k_a())
    }
}

/// Smallest homogeneous weight compatible with resilience to `s` of `n`.
pub fn min_weight(n: usize, s: usize) -> Result<usize> {
    if s >= n {
        return Err(Error::InvalidParams(format!(
            "s={s} must be smaller than n={n}"
        )));
    }
    Ok(((n - s) * (s + 1)).div_ceil(n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRegime {
    /// `k_A > s^2`: the bound is exactly `s + 1`.
    AboveSSquared,
    /// `s <= k_A <= s^2`: the bound lies in `[ceil((s+1)/2), s]`.
    BetweenSAndSSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightBounds {
    pub regime: WeightRegime,
    pub lower: usize,
    pub upper: usize,
}

impl WeightBounds {
    pub fn contains(&self, w: usize) -> bool {
        self.lower <= w && w <= self.upper
    }
}

pub fn classify_weight_regime(k_a: usize, s: usize) -> Result<WeightBounds> {
    if k_a < s {
        return Err(Error::InvalidParams(
            "k_A < s violates scheme precondition".into(),
        ));
    }
    if k_a > s * s {
        Ok(WeightBounds {
            regime: WeightRegime::AboveSSquared,
            lower: s + 1,
            upper: s + 1,
        })
    } else {
        Ok(WeightBounds {
            regime: WeightRegime::BetweenSAndSSquared,
            lower: (s + 1).div_ceil(2),
            upper: s,
        })
    }
}

/// Block-column indices combined by worker `i`.
///
/// The first `k_A` workers take a cyclic window starting at `i`; the
/// remaining `s` workers take consecutive runs of `weight` indices starting at
/// `i * weight`, all reduced modulo `k_A`.
pub fn support_set(i: usize, params: &SchemeParams, weight: usize) -> Vec<usize> {
    let k = params.k_a();
    let start = if i < k { i } else { i * weight };
    (start..start + weight).map(|q| q % k).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Minimum-weight scheme.
    Proposed,
    /// Minimum-weight scheme with an additive sparse noise share.
    Private,
    /// Every worker combines all `k_A` blocks.
    Dense,
    /// Cyclic windows of weight `min(s + 1, k_A)`.
    Cyclic,
}

impl SchemeKind {
    pub fn build(self, params: &SchemeParams, seed: u64) -> Result<CodingPlan> {
        match self {
            SchemeKind::Proposed => Ok(build_plan(params, seed)),
            SchemeKind::Private => build_private_plan(params, seed),
            SchemeKind::Dense => Ok(baseline_dense_plan(params, seed)),
            SchemeKind::Cyclic => Ok(baseline_cyclic_plan(params, seed)),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Proposed => "proposed",
            SchemeKind::Private => "private",
            SchemeKind::Dense => "dense",
            SchemeKind::Cyclic => "cyclic",
        })
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(SchemeKind::Proposed),
            "private" => Ok(SchemeKind::Private),
            "dense" => Ok(SchemeKind::Dense),
            "cyclic" => Ok(SchemeKind::Cyclic),
            other => Err(Error::InvalidParams(format!("unknown scheme '{other}'"))),
        }
    }
}

/// One worker's encoding: `sum_j coeffs[j] * A_{support[j]}`, plus
/// `noise_coeff * S` for private plans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerCode {
    pub id: usize,
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_coeff: Option<f64>,
}

/// Per-worker supports and coefficients for one `SchemeParams`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodingPlan {
    params: SchemeParams,
    weight: usize,
    seed: u64,
    private: bool,
    workers: Vec<WorkerCode>,
}

impl CodingPlan {
    /// Validates and assembles a plan from explicit worker codes.
    pub fn from_parts(
        params: SchemeParams,
        seed: u64,
        private: bool,
        workers: Vec<WorkerCode>,
    ) -> Result<Self> {
        let k = params.k_a();
        if workers.len() != params.n() {
            return Err(Error::InvalidPlan(format!(
                "{} worker codes for n={}",
                workers.len(),
                params.n()
            )));
        }
        let weight = workers[0].support.len();
        if weight == 0 || weight > k {
            return Err(Error::InvalidPlan(format!(
                "weight {weight} outside [1, {k}]"
            )));
        }
        for (i, w) in workers.iter().enumerate() {
            if w.id != i {
                return Err(Error::InvalidPlan(format!(
                    "worker {i} carries id {}",
                    w.id
                )));
            }
            if w.support.len() != weight {
                return Err(Error::InvalidPlan(format!(
                    "worker {i} has weight {} but plan weight is {weight}",
                    w.support.len()
                )));
            }
            if w.coeffs.len() != weight {
                return Err(Error::InvalidPlan(format!(
                    "worker {i} has {} coefficients for {weight} supports",
                    w.coeffs.len()
                )));
            }
            if w.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidPlan(format!(
                    "worker {i} has a non-finite coefficient"
                )));
            }
            let mut seen = vec![false; k];
            for &q in &w.support {
                if q >= k {
                    return Err(Error::InvalidPlan(format!(
                        "worker {i} references block {q} >= k_A={k}"
                    )));
                }
                if std::mem::replace(&mut seen[q], true) {
                    return Err(Error::InvalidPlan(format!(
                        "worker {i} lists block {q} twice"
                    )));
                }
            }
            match (private, w.noise_coeff) {
                (true, Some(r)) if r != 0.0 && r.is_finite() => {}
                (true, _) => {
                    return Err(Error::InvalidPlan(format!(
                        "private plan: worker {i} needs a nonzero noise coefficient"
                    )))
                }
                (false, Some(_)) => {
                    return Err(Error::InvalidPlan(format!(
                        "non-private plan: worker {i} has a noise coefficient"
                    )))
                }
                (false, None) => {}
            }
        }
        Ok(CodingPlan {
            params,
            weight,
            seed,
            private,
            workers,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_private(&self) -> bool {
        self.private
    }

    pub fn workers(&self) -> &[WorkerCode] {
        &self.workers
    }

    pub fn worker(&self, i: usize) -> &WorkerCode {
        &self.workers[i]
    }

    /// Number of unknowns in the decoding system: `k_A`, plus one for the
    /// noise product of a private plan.
    pub fn unknowns(&self) -> usize {
        self.params.k_a() + usize::from(self.private)
    }

    /// Minimum number of finished workers needed to decode.
    pub fn recovery_threshold(&self) -> usize {
        self.unknowns()
    }

    /// Stragglers tolerated by this plan.
    pub fn straggler_tolerance(&self) -> usize {
        self.params.n() - self.recovery_threshold()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct PlanDoc {
    n: usize,
    s: usize,
    #[serde(rename = "k_A")]
    k_a: usize,
    weight: usize,
    private: bool,
    seed: u64,
    workers: Vec<WorkerCode>,
}

impl Serialize for CodingPlan {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        PlanDoc {
            n: self.params.n(),
            s: self.params.s(),
            k_a: self.params.k_a(),
            weight: self.weight,
            private: self.private,
            seed: self.seed,
            workers: self.workers.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CodingPlan {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = PlanDoc::deserialize(deserializer)?;
        let params = SchemeParams::new(doc.n, doc.s).map_err(D::Error::custom)?;
        if params.k_a() != doc.k_a {
            return Err(D::Error::custom(format!(
                "k_A={} inconsistent with n={} s={}",
                doc.k_a, doc.n, doc.s
            )));
        }
        let plan = CodingPlan::from_parts(params, doc.seed, doc.private, doc.workers)
            .map_err(D::Error::custom)?;
        if plan.weight != doc.weight {
            return Err(D::Error::custom(format!(
                "declared weight {} but supports have {}",
                doc.weight, plan.weight
            )));
        }
        Ok(plan)
    }
}

fn nonzero_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.sample(StandardNormal);
        if v != 0.0 {
            return v;
        }
    }
}

/// Draws one standard normal coefficient per support entry, using the
/// coefficient substream of worker `i`.
fn plan_from_supports(
    params: &SchemeParams,
    seed: u64,
    supports: impl Iterator<Item = Vec<usize>>,
) -> CodingPlan {
    let workers = supports
        .enumerate()
        .map(|(i, support)| {
            let mut rng = rng::substream(seed, rng::COEFFS, i as u64);
            let coeffs = support.iter().map(|_| nonzero_normal(&mut rng)).collect();
            WorkerCode {
                id: i,
                support,
                coeffs,
                noise_coeff: None,
            }
        })
        .collect();
    CodingPlan::from_parts(*params, seed, false, workers).expect("constructed supports are valid")
}

/// Minimum-weight straggler-optimal plan.
pub fn build_plan(params: &SchemeParams, seed: u64) -> CodingPlan {
    let weight = min_weight(params.n(), params.s()).expect("params validated");
    plan_from_supports(
        params,
        seed,
        (0..params.n()).map(|i| support_set(i, params, weight)),
    )
}

/// Same supports and coefficients as [`build_plan`], with a nonzero noise
/// scalar `r_i` per worker. Decodable from any `k_A + 1` workers.
pub fn build_private_plan(params: &SchemeParams, seed: u64) -> Result<CodingPlan> {
    if params.n() <= params.k_a() {
        return Err(Error::InvalidParams(
            "private plan needs n > k_A (at least one straggler slot)".into(),
        ));
    }
    let mut plan = build_plan(params, seed);
    for w in &mut plan.workers {
        let mut rng = rng::substream(seed, rng::NOISE_COEFFS, w.id as u64);
        w.noise_coeff = Some(nonzero_normal(&mut rng));
    }
    plan.private = true;
    Ok(plan)
}

/// Dense random coding: every worker combines all `k_A` blocks.
pub fn baseline_dense_plan(params: &SchemeParams, seed: u64) -> CodingPlan {
    let k = params.k_a();
    plan_from_supports(params, seed, (0..params.n()).map(|_| (0..k).collect()))
}

/// Cyclic comparator of weight `min(s + 1, k_A)`.
pub fn baseline_cyclic_plan(params: &SchemeParams, seed: u64) -> CodingPlan {
    let k = params.k_a();
    let weight = (params.s() + 1).min(k);
    plan_from_supports(
        params,
        seed,
        (0..params.n()).map(|i| (i..i + weight).map(|q| q % k).collect()),
    )
}

/// Number of workers whose support contains each block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CoverageCount(pub Vec<usize>);

impl CoverageCount {
    pub fn min(&self) -> usize {
        self.0.iter().copied().min().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

pub fn coverage_counts(plan: &CodingPlan) -> CoverageCount {
    let mut counts = vec![0; plan.params.k_a()];
    for w in &plan.workers {
        for &q in &w.support {
            counts[q] += 1;
        }
    }
    CoverageCount(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, s: usize) -> SchemeParams {
        SchemeParams::new(n, s).unwrap()
    }

    #[test]
    fn min_weight_reference_values() {
        assert_eq!(min_weight(6, 2).unwrap(), 2);
        assert_eq!(min_weight(12, 3).unwrap(), 3);
        assert_eq!(min_weight(30, 5).unwrap(), 5);
        assert_eq!(min_weight(36, 8).unwrap(), 7);
        assert_eq!(min_weight(10, 0).unwrap(), 1);
        assert!(min_weight(4, 4).is_err());
    }

    #[test]
    fn params_reject_more_stragglers_than_blocks() {
        let err = SchemeParams::new(5, 4).unwrap_err();
        assert_eq!(
            err.to_string(),
            "invalid parameters: k_A < s violates scheme precondition"
        );
        assert!(SchemeParams::new(6, 5).is_err());
        assert!(SchemeParams::new(0, 0).is_err());
        assert_eq!(params(12, 3).storage_fraction(), 1.0 / 9.0);
    }

    #[test]
    fn regime_examples() {
        let b = classify_weight_regime(5, 2).unwrap();
        assert_eq!(b.regime, WeightRegime::AboveSSquared);
        assert_eq!((b.lower, b.upper), (3, 3));
        assert_eq!(min_weight(7, 2).unwrap(), 3);

        let b = classify_weight_regime(4, 2).unwrap();
        assert_eq!(b.regime, WeightRegime::BetweenSAndSSquared);
        assert_eq!((b.lower, b.upper), (2, 2));

        let b = classify_weight_regime(9, 3).unwrap();
        assert_eq!(b.regime, WeightRegime::BetweenSAndSSquared);
        assert_eq!((b.lower, b.upper), (2, 3));
        assert!(b.contains(min_weight(12, 3).unwrap()));

        assert!(classify_weight_regime(2, 3).is_err());
    }

    #[test]
    fn supports_for_twelve_workers() {
        let p = params(12, 3);
        assert_eq!(support_set(0, &p, 3), vec![0, 1, 2]);
        assert_eq!(support_set(8, &p, 3), vec![8, 0, 1]);
        assert_eq!(support_set(9, &p, 3), vec![0, 1, 2]);
        assert_eq!(support_set(10, &p, 3), vec![3, 4, 5]);
        assert_eq!(support_set(11, &p, 3), vec![6, 7, 8]);
        assert_eq!(support_set(4, &params(6, 2), 2), vec![0, 1]);
        assert_eq!(support_set(5, &params(6, 2), 2), vec![2, 3]);
    }

    #[test]
    fn plan_six_two() {
        let plan = build_plan(&params(6, 2), 7);
        assert_eq!(plan.weight(), 2);
        assert!(plan.workers().iter().all(|w| w.support.len() == 2));
        let cov = coverage_counts(&plan);
        assert!(cov.min() >= 3);
        assert_eq!(cov.total(), 12);
    }

    #[test]
    fn plan_twelve_three_reference_supports() {
        let plan = build_plan(&params(12, 3), 0);
        let expected: [[usize; 3]; 12] = [
            [0, 1, 2],
            [1, 2, 3],
            [2, 3, 4],
            [3, 4, 5],
            [4, 5, 6],
            [5, 6, 7],
            [6, 7, 8],
            [7, 8, 0],
            [8, 0, 1],
            [0, 1, 2],
            [3, 4, 5],
            [6, 7, 8],
        ];
        for (w, e) in plan.workers().iter().zip(expected) {
            assert_eq!(w.support, e);
        }
        let cov = coverage_counts(&plan);
        assert_eq!(cov.0, vec![4; 9]);
        assert_eq!(cov.total(), 36);
    }

    #[test]
    fn no_stragglers_is_uncoded() {
        let plan = build_plan(&params(5, 0), 1);
        for (i, w) in plan.workers().iter().enumerate() {
            assert_eq!(w.support, vec![i]);
        }
    }

    #[test]
    fn private_plan_thresholds() {
        let plan = build_private_plan(&params(12, 3), 0).unwrap();
        assert!(plan.is_private());
        assert_eq!(plan.recovery_threshold(), 10);
        assert!(plan
            .workers()
            .iter()
            .all(|w| w.noise_coeff.is_some_and(|r| r != 0.0)));
        let base = build_plan(&params(12, 3), 0);
        for (a, b) in plan.workers().iter().zip(base.workers()) {
            assert_eq!(a.support, b.support);
            assert_eq!(a.coeffs, b.coeffs);
        }

        let small = build_private_plan(&params(6, 2), 3).unwrap();
        assert_eq!(small.recovery_threshold(), 5);
        assert_eq!(small.straggler_tolerance(), 1);

        assert!(build_private_plan(&params(4, 0), 0).is_err());
    }

    #[test]
    fn baselines() {
        let dense = baseline_dense_plan(&params(6, 2), 0);
        assert_eq!(dense.weight(), 4);
        assert!(dense
            .workers()
            .iter()
            .all(|w| w.support == vec![0, 1, 2, 3]));
        assert_eq!(coverage_counts(&dense).0, vec![6; 4]);
        assert_eq!(baseline_dense_plan(&params(12, 3), 0).weight(), 9);

        assert_eq!(baseline_cyclic_plan(&params(12, 3), 0).weight(), 4);
        assert_eq!(baseline_cyclic_plan(&params(30, 5), 0).weight(), 6);
        assert_eq!(build_plan(&params(30, 5), 0).weight(), 5);
    }

    #[test]
    fn json_layout_and_round_trip() {
        let plan = build_private_plan(&params(6, 2), 11).unwrap();
        let json = plan.to_json().unwrap();
        let keys = [
            "\"n\"",
            "\"s\"",
            "\"k_A\"",
            "\"weight\"",
            "\"private\"",
            "\"seed\"",
            "\"workers\"",
        ];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
        assert_eq!(CodingPlan::from_json(&json).unwrap(), plan);

        let public = build_plan(&params(6, 2), 11).to_json().unwrap();
        assert!(!public.contains("noise_coeff"));
    }

    #[test]
    fn json_rejects_inconsistent_plans() {
        let plan = build_plan(&params(6, 2), 1);
        let mut v: serde_json::Value = serde_json::from_str(&plan.to_json().unwrap()).unwrap();
        v["workers"][0]["support"] = serde_json::json!([0, 0]);
        assert!(CodingPlan::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&plan.to_json().unwrap()).unwrap();
        v["k_A"] = serde_json::json!(5);
        assert!(CodingPlan::from_json(&v.to_string()).is_err());
    }

    proptest! {
        #[test]
        fn weight_bound_properties(s in 0usize..40, extra in 0usize..200) {
            let k = s + extra;
            prop_assume!(k >= 1);
            let w = min_weight(k + s, s).unwrap();
            prop_assert!(w <= s + 1);
            prop_assert!(w <= min_weight(k + 1 + s, s).unwrap());
        }

        #[test]
        fn proposed_plan_meets_bound_and_coverage(s in 0usize..8, extra in 0usize..20, seed in any::<u64>()) {
            let k = s + extra;
            prop_assume!(k >= 1);
            let p = params(k + s, s);
            let plan = build_plan(&p, seed);
            prop_assert_eq!(plan.weight(), min_weight(p.n(), p.s()).unwrap());
            let cov = coverage_counts(&plan);
            prop_assert!(cov.min() > s);
            prop_assert_eq!(cov.total(), p.n() * plan.weight());
            prop_assert_eq!(build_plan(&p, seed), plan);
        }
    }
}
