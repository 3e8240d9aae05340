//! Cost-model simulation of coded jobs.
//!
//! Times are derived from nonzero counts: a worker spends
//! `comm_seconds_per_nnz * nnz` receiving its share and
//! `compute_seconds_per_nnz * nnz * slowdown * jitter` multiplying it. Each
//! worker's straggler flag and jitter come from its own delay substream, so
//! two schemes simulated under the same model see identical per-worker
//! multipliers.

use std::io::Write;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};

use crate::certify::{trial_search, TrialConfig, DEFAULT_BUDGET};
use crate::decode::{decode, SurvivorSet};
use crate::encode::{encode_shares, EncodedShare};
use crate::error::{Error, Result};
use crate::io::load_matrix_market;
use crate::rng;
use crate::scheme::{build_private_plan, CodingPlan, SchemeKind, SchemeParams};
use crate::sparse::{gen_random_sparse, partition, DenseVector, PartitionSpec, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayModel {
    pub compute_seconds_per_nnz: f64,
    pub comm_seconds_per_nnz: f64,
    pub straggler_probability: f64,
    pub straggler_slowdown: f64,
    /// Coefficient of variation of the mean-one lognormal jitter factor.
    pub jitter_cv: f64,
    pub seed: u64,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            compute_seconds_per_nnz: 6.6e-9,
            comm_seconds_per_nnz: 7.5e-8,
            straggler_probability: 0.1,
            straggler_slowdown: 5.0,
            jitter_cv: 0.05,
            seed: 0,
        }
    }
}

impl DelayModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(format!("delay model: {what}")));
        if !(self.compute_seconds_per_nnz > 0.0 && self.compute_seconds_per_nnz.is_finite()) {
            return bad("compute_seconds_per_nnz must be positive");
        }
        if !(self.comm_seconds_per_nnz > 0.0 && self.comm_seconds_per_nnz.is_finite()) {
            return bad("comm_seconds_per_nnz must be positive");
        }
        if !(0.0..=1.0).contains(&self.straggler_probability) {
            return bad("straggler_probability outside [0, 1]");
        }
        if !(self.straggler_slowdown >= 1.0 && self.straggler_slowdown.is_finite()) {
            return bad("straggler_slowdown must be >= 1");
        }
        if !(self.jitter_cv >= 0.0 && self.jitter_cv.is_finite()) {
            return bad("jitter_cv must be >= 0");
        }
        Ok(())
    }

    /// Straggler flag and combined compute multiplier for worker `i`.
    fn draw(&self, i: usize, forced: bool) -> (bool, f64) {
        let mut rng = rng::substream(self.seed, rng::DELAY, i as u64);
        let straggler = rng.random::<f64>() < self.straggler_probability || forced;
        let jitter = if self.jitter_cv > 0.0 {
            let sigma2 = (1.0 + self.jitter_cv * self.jitter_cv).ln();
            LogNormal::new(-sigma2 / 2.0, sigma2.sqrt())
                .expect("finite parameters")
                .sample_with(&mut rng)
        } else {
            1.0
        };
        let slowdown = if straggler {
            self.straggler_slowdown
        } else {
            1.0
        };
        (straggler, slowdown * jitter)
    }
}

trait SampleWith {
    fn sample_with<R: Rng>(&self, rng: &mut R) -> f64;
}

impl SampleWith for LogNormal<f64> {
    fn sample_with<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.sample(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerTiming {
    pub worker_id: usize,
    pub nnz_transmitted: usize,
    pub comm_time: f64,
    pub compute_time: f64,
    pub finish_time: f64,
    pub was_straggler: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub workers: Vec<WorkerTiming>,
    /// Finish time of the `tau`-th fastest worker.
    pub makespan: f64,
    pub recovery_threshold: usize,
    pub decode_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decode_error: Option<String>,
    pub survivors: SurvivorSet,
    #[serde(skip)]
    pub recovered: Option<DenseVector>,
}

impl SimReport {
    pub fn mean_compute_time(&self) -> f64 {
        mean(self.workers.iter().map(|w| w.compute_time))
    }

    pub fn mean_comm_time(&self) -> f64 {
        mean(self.workers.iter().map(|w| w.comm_time))
    }

    pub fn mean_nnz(&self) -> f64 {
        mean(self.workers.iter().map(|w| w.nnz_transmitted as f64))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_csv_rows(w, &self.workers)
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn write_csv_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)
            .map_err(|e| Error::io("<csv>", std::io::Error::other(e)))?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// Simulates one job; decoding uses the `tau` earliest finishers.
pub fn simulate_job(
    plan: &CodingPlan,
    shares: &[EncodedShare],
    x: &DenseVector,
    model: &DelayModel,
) -> Result<SimReport> {
    simulate_job_with_stragglers(plan, shares, x, model, &[])
}

/// As [`simulate_job`], with the workers in `forced` always straggling.
pub fn simulate_job_with_stragglers(
    plan: &CodingPlan,
    shares: &[EncodedShare],
    x: &DenseVector,
    model: &DelayModel,
    forced: &[usize],
) -> Result<SimReport> {
    model.validate()?;
    let n = plan.params().n();
    let k = plan.params().k_a();
    if shares.len() != n || shares.iter().enumerate().any(|(i, s)| s.worker_id != i) {
        return Err(Error::DimensionMismatch(format!(
            "expected {n} shares ordered by worker id"
        )));
    }
    if let Some(&bad) = forced.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParams(format!(
            "forced straggler {bad} >= n={n}"
        )));
    }

    let workers: Vec<WorkerTiming> = shares
        .iter()
        .map(|share| {
            let i = share.worker_id;
            let nnz = share.nnz();
            let (was_straggler, factor) = model.draw(i, forced.contains(&i));
            let comm_time = model.comm_seconds_per_nnz * nnz as f64;
            let compute_time = model.compute_seconds_per_nnz * nnz as f64 * factor;
            WorkerTiming {
                worker_id: i,
                nnz_transmitted: nnz,
                comm_time,
                compute_time,
                finish_time: comm_time + compute_time,
                was_straggler,
            }
        })
        .collect();

    let tau = plan.recovery_threshold();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        workers[a]
            .finish_time
            .total_cmp(&workers[b].finish_time)
            .then(a.cmp(&b))
    });
    let makespan = workers[order[tau - 1]].finish_time;
    let survivors = SurvivorSet::new(order[..tau].to_vec(), n)?;

    let width = shares[0].matrix.cols();
    let spec = PartitionSpec::new(k * width, k)?;
    let outputs = survivors
        .ids()
        .iter()
        .map(|&i| shares[i].matrix.spmv_transpose(x))
        .collect::<Result<Vec<_>>>()?;
    let (decode_ok, decode_error, recovered) = match decode(plan, &survivors, &outputs, &spec) {
        Ok(rep) => (true, None, Some(rep.recovered)),
        Err(e @ Error::Singular { .. }) => (false, Some(e.to_string()), None),
        Err(e) => return Err(e),
    };

    Ok(SimReport {
        workers,
        makespan,
        recovery_threshold: tau,
        decode_ok,
        decode_error,
        survivors,
        recovered,
    })
}

/// Estimated bits of `A` revealed by one noisy share:
/// `weight * eta * (1 - mu) * (r * t / k_A) * bits_per_symbol`.
pub fn leakage_estimate(
    weight: usize,
    eta: f64,
    mu: f64,
    rows: usize,
    cols: usize,
    k_a: usize,
    bits_per_symbol: f64,
) -> f64 {
    let entries_per_share = cols as f64 * rows as f64 / k_a as f64;
    weight as f64 * eta * (1.0 - mu) * entries_per_share * bits_per_symbol
}

/// Input matrix: either generated or read from a Matrix Market file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Random {
        t: usize,
        r: usize,
        eta: f64,
        seed: u64,
    },
    File {
        path: PathBuf,
    },
}

/// The matrix `A`, vector `x` and the density used for leakage estimates.
#[derive(Clone, Debug)]
pub struct Workload {
    pub a: SparseMatrix,
    pub x: DenseVector,
    pub eta: f64,
}

impl Workload {
    pub fn from_spec(spec: &MatrixSpec, x_seed: u64) -> Result<Self> {
        let (a, eta) = match spec {
            MatrixSpec::Random { t, r, eta, seed } => {
                (gen_random_sparse(*t, *r, *eta, *seed)?, *eta)
            }
            MatrixSpec::File { path } => {
                let a = load_matrix_market(path)?;
                let eta = a.density();
                (a, eta)
            }
        };
        let x = DenseVector::random(a.rows(), x_seed);
        Ok(Workload { a, x, eta })
    }
}

/// Partitions, encodes and simulates `plan` on `workload`.
pub fn run_plan(
    plan: &CodingPlan,
    workload: &Workload,
    noise: Option<&SparseMatrix>,
    model: &DelayModel,
) -> Result<(PartitionSpec, SimReport)> {
    let (spec, blocks) = partition(&workload.a, plan.params().k_a())?;
    let shares = encode_shares(&blocks, plan, noise)?;
    let mut report = simulate_job(plan, &shares, &workload.x, model)?;
    if let Some(rec) = report.recovered.take() {
        let mut padded = rec.into_inner();
        padded.truncate(spec.original_cols);
        report.recovered = Some(DenseVector::new(padded));
    }
    Ok((spec, report))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub mu: f64,
    pub mean_compute_time: f64,
    pub mean_comm_time: f64,
    pub mean_nnz: f64,
    pub makespan: f64,
    pub leakage_bits: f64,
    pub decode_ok: bool,
}

/// For each noise density `mu`, encodes the private plan with a noise matrix
/// of that density and pairs the simulated timing with the leakage estimate.
///
/// The plan and noise seeds are shared across the grid, so noise supports are
/// nested: a larger `mu` only adds nonzeros.
pub fn privacy_sweep(
    params: &SchemeParams,
    workload: &Workload,
    mu_grid: &[f64],
    model: &DelayModel,
    seed: u64,
    bits_per_symbol: f64,
) -> Result<Vec<SweepPoint>> {
    if let Some(&mu) = mu_grid.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(Error::InvalidParams(format!("mu={mu} outside [0, 1]")));
    }
    let plan = build_private_plan(params, seed)?;
    let k = params.k_a();
    let (spec, blocks) = partition(&workload.a, k)?;
    mu_grid
        .iter()
        .map(|&mu| {
            let noise = gen_random_sparse(workload.a.rows(), spec.block_width, mu, seed)?;
            let shares = encode_shares(&blocks, &plan, Some(&noise))?;
            let rep = simulate_job(&plan, &shares, &workload.x, model)?;
            Ok(SweepPoint {
                mu,
                mean_compute_time: rep.mean_compute_time(),
                mean_comm_time: rep.mean_comm_time(),
                mean_nnz: rep.mean_nnz(),
                makespan: rep.makespan,
                leakage_bits: leakage_estimate(
                    plan.weight(),
                    workload.eta,
                    mu,
                    workload.a.rows(),
                    workload.a.cols(),
                    k,
                    bits_per_symbol,
                ),
                decode_ok: rep.decode_ok,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(w: W, points: &[SweepPoint]) -> Result<()> {
    write_csv_rows(w, points)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    /// Coefficient trials per scheme; 0 skips the condition-number search
    /// and uses `base_seed` directly.
    pub trials: usize,
    pub base_seed: u64,
    pub budget: u128,
    /// Sampled subsets per trial when the exhaustive count exceeds `budget`.
    pub sample: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            trials: 1,
            base_seed: 0,
            budget: DEFAULT_BUDGET,
            sample: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeRow {
    pub scheme: SchemeKind,
    pub weight: usize,
    pub plan_seed: u64,
    pub mean_compute_time: f64,
    pub mean_comm_time: f64,
    pub mean_nnz: f64,
    pub makespan: f64,
    pub decode_ok: bool,
    /// `None` when skipped or when some subset is singular.
    pub kappa_worst: Option<f64>,
    pub kappa_approximate: bool,
}

/// Runs the proposed, cyclic and dense plans on the same workload and delay
/// model.
pub fn compare_schemes(
    params: &SchemeParams,
    workload: &Workload,
    model: &DelayModel,
    config: &CompareConfig,
) -> Result<Vec<SchemeRow>> {
    let subsets = crate::subsets::binomial(params.n(), params.k_a()).unwrap_or(u128::MAX);
    [SchemeKind::Proposed, SchemeKind::Cyclic, SchemeKind::Dense]
        .into_iter()
        .map(|kind| {
            let (plan, kappa, approx) = if config.trials == 0 {
                (kind.build(params, config.base_seed)?, None, false)
            } else {
                let sampled = subsets > config.budget;
                let cfg = TrialConfig {
                    trials: config.trials,
                    base_seed: config.base_seed,
                    budget: config.budget,
                    sample: sampled.then_some(config.sample),
                };
                let out = trial_search(params, kind, &cfg)?;
                (out.best, Some(out.kappa_worst), sampled)
            };
            let (_, rep) = run_plan(&plan, workload, None, model)?;
            Ok(SchemeRow {
                scheme: kind,
                weight: plan.weight(),
                plan_seed: plan.seed(),
                mean_compute_time: rep.mean_compute_time(),
                mean_comm_time: rep.mean_comm_time(),
                mean_nnz: rep.mean_nnz(),
                makespan: rep.makespan,
                decode_ok: rep.decode_ok,
                kappa_worst: kappa.filter(|k| k.is_finite()),
                kappa_approximate: approx,
            })
        })
        .collect()
}

pub fn write_compare_csv<W: Write>(w: W, rows: &[SchemeRow]) -> Result<()> {
    write_csv_rows(w, rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub n: usize,
    pub s: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyDoc {
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    pub plan: u64,
    pub x: u64,
    pub noise: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            plan: 0,
            x: 1,
            noise: 2,
        }
    }
}

/// Experiment description shared by the `simulate`, `privacy-sweep` and
/// `compare` commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ParamsDoc,
    pub matrix: MatrixSpec,
    #[serde(default)]
    pub model: DelayModel,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub private: Option<PrivacyDoc>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_grid: Option<Vec<f64>>,
    #[serde(default = "default_bits")]
    pub bits_per_symbol: f64,
}

fn default_scheme() -> SchemeKind {
    SchemeKind::Proposed
}

fn default_trials() -> usize {
    1
}

fn default_bits() -> f64 {
    64.0
}

impl ExperimentConfig {
    pub fn scheme_params(&self) -> Result<SchemeParams> {
        SchemeParams::new(self.params.n, self.params.s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutcome {
    pub plan: CodingPlan,
    pub report: SimReport,
    #[serde(skip)]
    pub partition: PartitionSpec,
}

/// Builds the configured plan (private when `config.private` is set), the
/// workload and optional noise, then simulates one job.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let params = config.scheme_params()?;
    let kind = if config.private.is_some() {
        SchemeKind::Private
    } else {
        config.scheme
    };
    let plan = if config.trials > 1 {
        let cfg = TrialConfig {
            trials: config.trials,
            base_seed: config.seeds.plan,
            ..TrialConfig::default()
        };
        trial_search(&params, kind, &cfg)?.best
    } else {
        kind.build(&params, config.seeds.plan)?
    };
    let workload = Workload::from_spec(&config.matrix, config.seeds.x)?;
    let noise = match config.private {
        Some(PrivacyDoc { mu }) => {
            let spec = PartitionSpec::new(workload.a.cols(), params.k_a())?;
            Some(gen_random_sparse(
                workload.a.rows(),
                spec.block_width,
                mu,
                config.seeds.noise,
            )?)
        }
        None => None,
    };
    config.model.validate()?;
    let (partition, report) = run_plan(&plan, &workload, noise.as_ref(), &config.model)?;
    Ok(ExperimentOutcome {
        plan,
        report,
        partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{baseline_dense_plan, build_plan};

    fn params(n: usize, s: usize) -> SchemeParams {
        SchemeParams::new(n, s).unwrap()
    }

    fn workload(t: usize, r: usize, eta: f64) -> Workload {
        Workload::from_spec(&MatrixSpec::Random { t, r, eta, seed: 3 }, 4).unwrap()
    }

    fn quiet() -> DelayModel {
        DelayModel {
            straggler_probability: 0.0,
            jitter_cv: 0.0,
            ..DelayModel::default()
        }
    }

    #[test]
    fn deterministic_model_ties_uniform_workers() {
        // Uncoded identity blocks with equal nnz per block.
        let p = params(4, 0);
        let plan = build_plan(&p, 0);
        let a = SparseMatrix::from_triplets(8, 8, (0..8).map(|i| (i, i, 1.0))).unwrap();
        let wl = Workload {
            x: DenseVector::random(8, 0),
            a,
            eta: 0.125,
        };
        let (_, rep) = run_plan(&plan, &wl, None, &quiet()).unwrap();
        let first = rep.workers[0].finish_time;
        assert!(rep.workers.iter().all(|w| w.finish_time == first));
        assert_eq!(rep.makespan, first);
        assert!(rep.decode_ok);
    }

    #[test]
    fn makespan_is_order_statistic_and_decode_is_exact() {
        let p = params(12, 3);
        let plan = build_plan(&p, 1);
        let wl = workload(120, 90, 0.1);
        let (_, rep) = run_plan(
            &plan,
            &wl,
            None,
            &DelayModel {
                seed: 9,
                ..DelayModel::default()
            },
        )
        .unwrap();
        let mut finishes: Vec<f64> = rep.workers.iter().map(|w| w.finish_time).collect();
        finishes.sort_by(f64::total_cmp);
        assert_eq!(rep.makespan, finishes[8]);
        assert_eq!(rep.survivors.len(), 9);
        let truth = wl.a.spmv_transpose(&wl.x).unwrap();
        assert!(rep.recovered.unwrap().rel_max_error(&truth) <= 1e-8);
    }

    #[test]
    fn forced_stragglers_are_excluded() {
        let p = params(12, 3);
        let plan = build_plan(&p, 2);
        let wl = workload(100, 90, 0.1);
        let (_, blocks) = partition(&wl.a, 9).unwrap();
        let shares = encode_shares(&blocks, &plan, None).unwrap();
        let model = DelayModel {
            straggler_probability: 0.0,
            straggler_slowdown: 1000.0,
            ..DelayModel::default()
        };
        let forced = [0, 4, 10];
        let rep = simulate_job_with_stragglers(&plan, &shares, &wl.x, &model, &forced).unwrap();
        assert!(rep.decode_ok);
        assert!(rep.survivors.ids().iter().all(|i| !forced.contains(i)));
        let slowest_live = rep
            .workers
            .iter()
            .filter(|w| !forced.contains(&w.worker_id))
            .map(|w| w.finish_time)
            .fold(0.0, f64::max);
        assert_eq!(rep.makespan, slowest_live);
    }

    #[test]
    fn leakage_examples() {
        assert_eq!(leakage_estimate(3, 0.01, 1.0, 100, 90, 9, 8.0), 0.0);
        let v = leakage_estimate(3, 0.01, 0.5, 100, 90, 9, 8.0);
        assert!((v - 120.0).abs() <= 1e-9 * 120.0);
        let v0 = leakage_estimate(3, 0.01, 0.0, 100, 90, 9, 8.0);
        assert!((v0 - 240.0).abs() <= 1e-9 * 240.0);
        assert_eq!(leakage_estimate(3, 0.0, 0.2, 100, 90, 9, 8.0), 0.0);
    }

    #[test]
    fn sweep_zero_noise_matches_public_plan() {
        let p = params(6, 2);
        let wl = workload(80, 40, 0.05);
        let model = DelayModel {
            seed: 5,
            ..DelayModel::default()
        };
        let sweep = privacy_sweep(&p, &wl, &[0.0, 0.5, 1.0], &model, 7, 8.0).unwrap();
        let (_, public) = run_plan(&build_plan(&p, 7), &wl, None, &model).unwrap();
        assert_eq!(sweep[0].mean_compute_time, public.mean_compute_time());
        assert_eq!(sweep[2].leakage_bits, 0.0);
        assert!(sweep
            .windows(2)
            .all(|w| w[0].mean_compute_time <= w[1].mean_compute_time));
        assert!(sweep.iter().all(|pt| pt.decode_ok));
        assert!(privacy_sweep(&p, &wl, &[1.5], &model, 0, 8.0).is_err());
        assert!(privacy_sweep(&params(4, 0), &wl, &[0.5], &model, 0, 8.0).is_err());
    }

    #[test]
    fn compare_orders_schemes() {
        let p = params(12, 3);
        let wl = workload(400, 900, 0.01);
        let rows = compare_schemes(&p, &wl, &quiet(), &CompareConfig::default()).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.weight).collect::<Vec<_>>(),
            vec![3, 4, 9]
        );
        assert!(rows[0].mean_compute_time < rows[1].mean_compute_time);
        assert!(rows[1].mean_compute_time < rows[2].mean_compute_time);
        assert!(
            rows[0].mean_comm_time < rows[1].mean_comm_time
                && rows[1].mean_comm_time < rows[2].mean_comm_time
        );
        assert!(rows.iter().all(|r| r.kappa_worst.is_some() && r.decode_ok));
    }

    #[test]
    fn model_validation() {
        assert!(DelayModel {
            straggler_probability: 1.5,
            ..DelayModel::default()
        }
        .validate()
        .is_err());
        assert!(DelayModel {
            straggler_slowdown: 0.5,
            ..DelayModel::default()
        }
        .validate()
        .is_err());
        assert!(DelayModel {
            compute_seconds_per_nnz: 0.0,
            ..DelayModel::default()
        }
        .validate()
        .is_err());
        let plan = baseline_dense_plan(&params(3, 1), 0);
        let wl = workload(10, 4, 0.5);
        let bad = DelayModel {
            jitter_cv: -1.0,
            ..DelayModel::default()
        };
        assert!(run_plan(&plan, &wl, None, &bad).is_err());
    }

    #[test]
    fn experiment_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"params":{"n":6,"s":2},"matrix":{"t":50,"r":40,"eta":0.1,"seed":1},"private":{"mu":0.2}}"#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.scheme, SchemeKind::Proposed);
        let out = run_experiment(&cfg).unwrap();
        assert!(out.plan.is_private());
        assert!(out.report.decode_ok);
        let file =
            ExperimentConfig::from_json(r#"{"params":{"n":6,"s":2},"matrix":{"path":"a.mtx"}}"#)
                .unwrap();
        assert!(matches!(file.matrix, MatrixSpec::File { .. }));
    }

    #[test]
    fn csv_has_one_row_per_worker() {
        let plan = build_plan(&params(6, 2), 0);
        let (_, rep) = run_plan(&plan, &workload(20, 8, 0.3), None, &quiet()).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with(
            "worker_id,nnz_transmitted,comm_time,compute_time,finish_time,was_straggler"
        ));
    }
}
