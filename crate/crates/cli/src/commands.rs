use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sparsecode::certify::{
    certify_resilience, scan_sampled, trial_search, TrialConfig, DEFAULT_BUDGET,
};
use sparsecode::decode::{decode, SurvivorSet};
use sparsecode::encode::{dump_shares, encode_shares, share_file_name};
use sparsecode::io::{load_matrix_market, load_vector, write_matrix_market, write_vector};
use sparsecode::scheme::{coverage_counts, CodingPlan, SchemeKind, SchemeParams};
use sparsecode::sim::{
    compare_schemes, privacy_sweep, run_experiment, write_compare_csv, write_sweep_csv,
    CompareConfig, DelayModel, ExperimentConfig, MatrixSpec, ParamsDoc, PrivacyDoc, Seeds,
    Workload,
};
use sparsecode::sparse::{gen_random_sparse, partition, DenseVector, PartitionSpec};
use sparsecode::Error;

pub enum CliError {
    Usage(String),
    Domain(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Domain(Error::Json(e))
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "sparsecode",
    version,
    about = "Sparse straggler-resilient coded matrix-vector multiplication"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a coding plan and write it as JSON.
    Plan(PlanArgs),
    /// Encode a matrix into per-worker shares under an output directory.
    Encode(EncodeArgs),
    /// Compute survivor outputs from encoded shares and decode A^T x.
    Decode(DecodeArgs),
    /// Check every straggler pattern of a plan (matching, rank, condition number).
    Certify(CertifyArgs),
    /// Search coefficient trials for the lowest worst-case condition number.
    KappaScan(KappaScanArgs),
    /// Simulate one job under the delay cost model.
    Simulate(SimArgs),
    /// Sweep the noise density of a private plan.
    PrivacySweep(SweepArgs),
    /// Compare the proposed, cyclic and dense schemes on one workload.
    Compare(CompareArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "proposed")]
    scheme: SchemeKind,
    /// Shorthand for `--scheme private`.
    #[arg(long)]
    private: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct MatrixArgs {
    /// Matrix Market input file.
    #[arg(long, conflicts_with_all = ["t", "r", "eta"])]
    matrix: Option<PathBuf>,
    /// Rows of a generated matrix.
    #[arg(long)]
    t: Option<usize>,
    /// Columns of a generated matrix.
    #[arg(long)]
    r: Option<usize>,
    /// Density of a generated matrix.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    matrix_seed: Option<u64>,
}

impl MatrixArgs {
    fn spec(&self) -> CliResult<Option<MatrixSpec>> {
        if let Some(path) = &self.matrix {
            return Ok(Some(MatrixSpec::File { path: path.clone() }));
        }
        match (self.t, self.r, self.eta) {
            (None, None, None) => Ok(None),
            (Some(t), Some(r), Some(eta)) => Ok(Some(MatrixSpec::Random {
                t,
                r,
                eta,
                seed: self.matrix_seed.unwrap_or(0),
            })),
            _ => Err(CliError::Usage(
                "--t, --r and --eta must be given together".into(),
            )),
        }
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    plan: PathBuf,
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Noise density for private plans.
    #[arg(long)]
    mu: Option<f64>,
    /// Noise seed.
    #[arg(long, default_value_t = 2)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Directory written by `encode`.
    #[arg(long)]
    shares: PathBuf,
    /// Vector file; a standard normal vector from `--seed` when absent.
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated worker ids; the first `tau` workers when absent.
    #[arg(long, value_delimiter = ',')]
    survivors: Option<Vec<usize>>,
    /// Write the recovered vector here.
    #[arg(long)]
    recovered: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    /// Scan this many random subsets instead of all of them.
    #[arg(long)]
    sample: Option<usize>,
    /// Sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct KappaScanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value = "proposed")]
    scheme: SchemeKind,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Base seed; trial j uses seed + j.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[command(flatten)]
    matrix: MatrixArgs,
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// Noise density; makes the plan private.
    #[arg(long)]
    mu: Option<f64>,
    /// Plan seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    x_seed: Option<u64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    compute_per_nnz: Option<f64>,
    #[arg(long)]
    comm_per_nnz: Option<f64>,
    #[arg(long)]
    straggler_prob: Option<f64>,
    #[arg(long)]
    slowdown: Option<f64>,
    #[arg(long)]
    jitter_cv: Option<f64>,
    #[arg(long)]
    delay_seed: Option<u64>,
    /// Stand-in for log|F| in leakage estimates.
    #[arg(long)]
    bits: Option<f64>,
    /// Emit CSV instead of JSON.
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Comma-separated noise densities.
    #[arg(long, value_delimiter = ',')]
    mu_grid: Option<Vec<f64>>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    /// Sampled subsets per trial when the exhaustive count exceeds the budget.
    #[arg(long, default_value_t = 10_000)]
    sample: usize,
}

impl ExperimentArgs {
    fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json(&read_text(path)?)?,
            None => {
                let (Some(n), Some(s)) = (self.n, self.s) else {
                    return Err(CliError::Usage("need --config or both --n and --s".into()));
                };
                let Some(matrix) = self.matrix.spec()? else {
                    return Err(CliError::Usage(
                        "need --config, --matrix or --t/--r/--eta".into(),
                    ));
                };
                ExperimentConfig {
                    params: ParamsDoc { n, s },
                    matrix,
                    model: DelayModel::default(),
                    scheme: SchemeKind::Proposed,
                    private: None,
                    trials: 1,
                    seeds: Seeds::default(),
                    mu_grid: None,
                    bits_per_symbol: 64.0,
                }
            }
        };
        if let Some(n) = self.n {
            cfg.params.n = n;
        }
        if let Some(s) = self.s {
            cfg.params.s = s;
        }
        if let Some(m) = self.matrix.spec()? {
            cfg.matrix = m;
        }
        if let Some(k) = self.scheme {
            cfg.scheme = k;
        }
        if let Some(mu) = self.mu {
            cfg.private = Some(PrivacyDoc { mu });
        }
        set(&mut cfg.seeds.plan, self.seed);
        set(&mut cfg.seeds.x, self.x_seed);
        set(&mut cfg.seeds.noise, self.noise_seed);
        set(&mut cfg.trials, self.trials);
        set(&mut cfg.model.compute_seconds_per_nnz, self.compute_per_nnz);
        set(&mut cfg.model.comm_seconds_per_nnz, self.comm_per_nnz);
        set(&mut cfg.model.straggler_probability, self.straggler_prob);
        set(&mut cfg.model.straggler_slowdown, self.slowdown);
        set(&mut cfg.model.jitter_cv, self.jitter_cv);
        set(&mut cfg.model.seed, self.delay_seed);
        set(&mut cfg.bits_per_symbol, self.bits);
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| {
        CliError::Domain(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn load_plan(path: &Path) -> CliResult<CodingPlan> {
    Ok(CodingPlan::from_json(&read_text(path)?)?)
}

fn emit_bytes(out: &OutArgs, bytes: &[u8]) -> CliResult<()> {
    let io_err = |path: &Path, e| {
        CliError::Domain(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    };
    match &out.out {
        Some(path) => fs::write(path, bytes).map_err(|e| io_err(path, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn emit_json<T: Serialize>(out: &OutArgs, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit_bytes(out, text.as_bytes())
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Plan(a) => plan(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode_cmd(a),
        Command::Certify(a) => certify(a),
        Command::KappaScan(a) => kappa_scan(a),
        Command::Simulate(a) => simulate(a),
        Command::PrivacySweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
    }
}

fn plan(a: PlanArgs) -> CliResult<()> {
    let params = SchemeParams::new(a.n, a.s)?;
    let kind = if a.private {
        SchemeKind::Private
    } else {
        a.scheme
    };
    let plan = kind.build(&params, a.seed)?;
    emit_json(&a.out, &plan)
}

#[derive(Serialize, serde::Deserialize)]
struct Manifest {
    partition: PartitionSpec,
    rows: usize,
    plan_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_deserializing)]
    shares: Vec<ShareSummary>,
}

#[derive(Serialize, Default)]
struct ShareSummary {
    id: usize,
    nnz: usize,
    file: String,
}

fn encode(a: EncodeArgs) -> CliResult<()> {
    let plan = load_plan(&a.plan)?;
    let spec = a
        .matrix
        .spec()?
        .ok_or_else(|| CliError::Usage("need --matrix or --t/--r/--eta".into()))?;
    let workload = Workload::from_spec(&spec, 0)?;
    let (part, blocks) = partition(&workload.a, plan.params().k_a())?;
    let noise = match (plan.is_private(), a.mu) {
        (true, Some(mu)) => Some(gen_random_sparse(
            workload.a.rows(),
            part.block_width,
            mu,
            a.seed,
        )?),
        (true, None) => return Err(CliError::Usage("private plan needs --mu".into())),
        (false, _) => None,
    };
    let shares = encode_shares(&blocks, &plan, noise.as_ref())?;
    dump_shares(&a.out_dir, &shares)?;
    if let Some(s) = &noise {
        write_matrix_market(a.out_dir.join("noise.mtx"), s)?;
    }
    let manifest = Manifest {
        partition: part,
        rows: workload.a.rows(),
        plan_seed: plan.seed(),
        noise_seed: noise.as_ref().map(|_| a.seed),
        mu: noise.as_ref().and(a.mu),
        shares: shares
            .iter()
            .map(|s| ShareSummary {
                id: s.worker_id,
                nnz: s.nnz(),
                file: share_file_name(s.worker_id),
            })
            .collect(),
    };
    let out = OutArgs {
        out: Some(a.out_dir.join("manifest.json")),
    };
    emit_json(&out, &manifest)
}

#[derive(Serialize)]
struct DecodeOutput<'a> {
    plan_seed: u64,
    x_seed: Option<u64>,
    report: &'a sparsecode::DecodeReport,
}

fn decode_cmd(a: DecodeArgs) -> CliResult<()> {
    let plan = load_plan(&a.plan)?;
    let manifest: Manifest = serde_json::from_str(&read_text(&a.shares.join("manifest.json"))?)?;
    let (x, x_seed) = match &a.x {
        Some(path) => (load_vector(path)?, None),
        None => (DenseVector::random(manifest.rows, a.seed), Some(a.seed)),
    };
    let ids = a
        .survivors
        .clone()
        .unwrap_or_else(|| (0..plan.recovery_threshold()).collect());
    let survivors = SurvivorSet::new(ids, plan.params().n())?;
    let outputs = survivors
        .ids()
        .iter()
        .map(|&i| {
            let share = load_matrix_market(a.shares.join(share_file_name(i)))?;
            share.spmv_transpose(&x)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = decode(&plan, &survivors, &outputs, &manifest.partition)?;
    if let Some(path) = &a.recovered {
        write_vector(path, &report.recovered)?;
    }
    emit_json(
        &a.out,
        &DecodeOutput {
            plan_seed: plan.seed(),
            x_seed,
            report: &report,
        },
    )
}

#[derive(Serialize)]
struct CertifyOutput {
    plan_seed: u64,
    seed: u64,
    weight: usize,
    min_coverage: usize,
    report: sparsecode::CertificationReport,
}

fn certify(a: CertifyArgs) -> CliResult<()> {
    let plan = load_plan(&a.plan)?;
    let report = match a.sample {
        Some(count) => scan_sampled(&plan, count, a.seed)?,
        None => certify_resilience(&plan, a.budget)?,
    };
    eprintln!("{:<22}{}", "params", plan.params());
    eprintln!("{:<22}{}", "weight", plan.weight());
    eprintln!(
        "{:<22}{} of {}{}",
        "subsets scanned",
        report.scanned_subsets,
        report.total_subsets,
        if report.approximate { " (sampled)" } else { "" }
    );
    eprintln!(
        "{:<22}{}",
        "matching failures",
        report.matching_failures.len()
    );
    eprintln!("{:<22}{}", "rank failures", report.rank_failures.len());
    eprintln!("{:<22}{:.4e}", "kappa_worst", report.kappa_worst);
    let out = CertifyOutput {
        plan_seed: plan.seed(),
        seed: a.seed,
        weight: plan.weight(),
        min_coverage: coverage_counts(&plan).min(),
        report,
    };
    emit_json(&a.out, &out)
}

#[derive(Serialize)]
struct KappaScanOutput<'a> {
    n: usize,
    s: usize,
    scheme: SchemeKind,
    base_seed: u64,
    trials: usize,
    best_seed: u64,
    kappa_worst: f64,
    trial_stats: &'a [sparsecode::certify::TrialStat],
    best: &'a CodingPlan,
}

fn kappa_scan(a: KappaScanArgs) -> CliResult<()> {
    let params = SchemeParams::new(a.n, a.s)?;
    let cfg = TrialConfig {
        trials: a.trials,
        base_seed: a.seed,
        budget: a.budget,
        sample: a.sample,
    };
    let outcome = trial_search(&params, a.scheme, &cfg)?;
    for t in &outcome.trials {
        eprintln!(
            "seed {:>6}  kappa_worst {:.4e}  singular {}  ({:.2}s)",
            t.seed, t.kappa_worst, t.singular_subsets, t.elapsed_secs
        );
    }
    emit_json(
        &a.out,
        &KappaScanOutput {
            n: a.n,
            s: a.s,
            scheme: a.scheme,
            base_seed: a.seed,
            trials: a.trials,
            best_seed: outcome.best.seed(),
            kappa_worst: outcome.kappa_worst,
            trial_stats: &outcome.trials,
            best: &outcome.best,
        },
    )
}

#[derive(Serialize)]
struct SimOutput<'a> {
    config: &'a ExperimentConfig,
    plan_seed: u64,
    weight: usize,
    mean_compute_time: f64,
    mean_comm_time: f64,
    report: &'a sparsecode::sim::SimReport,
}

fn simulate(a: SimArgs) -> CliResult<()> {
    let cfg = a.exp.resolve()?;
    let outcome = run_experiment(&cfg)?;
    if a.exp.csv {
        let mut buf = Vec::new();
        outcome.report.write_csv(&mut buf)?;
        return emit_bytes(&a.exp.out, &buf);
    }
    emit_json(
        &a.exp.out,
        &SimOutput {
            config: &cfg,
            plan_seed: outcome.plan.seed(),
            weight: outcome.plan.weight(),
            mean_compute_time: outcome.report.mean_compute_time(),
            mean_comm_time: outcome.report.mean_comm_time(),
            report: &outcome.report,
        },
    )
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    config: &'a ExperimentConfig,
    points: &'a [sparsecode::sim::SweepPoint],
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    let mut cfg = a.exp.resolve()?;
    if let Some(grid) = a.mu_grid {
        cfg.mu_grid = Some(grid);
    }
    let grid = cfg
        .mu_grid
        .get_or_insert_with(|| (0..=10).map(|i| i as f64 / 10.0).collect())
        .clone();
    let params = cfg.scheme_params()?;
    let workload = Workload::from_spec(&cfg.matrix, cfg.seeds.x)?;
    let points = privacy_sweep(
        &params,
        &workload,
        &grid,
        &cfg.model,
        cfg.seeds.plan,
        cfg.bits_per_symbol,
    )?;
    if a.exp.csv {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &points)?;
        return emit_bytes(&a.exp.out, &buf);
    }
    emit_json(
        &a.exp.out,
        &SweepOutput {
            config: &cfg,
            points: &points,
        },
    )
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    config: &'a ExperimentConfig,
    compare: &'a CompareConfig,
    rows: &'a [sparsecode::sim::SchemeRow],
}

fn compare(a: CompareArgs) -> CliResult<()> {
    let cfg = a.exp.resolve()?;
    let params = cfg.scheme_params()?;
    let workload = Workload::from_spec(&cfg.matrix, cfg.seeds.x)?;
    let cmp = CompareConfig {
        trials: cfg.trials,
        base_seed: cfg.seeds.plan,
        budget: a.budget,
        sample: a.sample,
    };
    let rows = compare_schemes(&params, &workload, &cfg.model, &cmp)?;
    for r in &rows {
        eprintln!(
            "{:<10} w={:<3} compute {:.4e}s  comm {:.4e}s  kappa_worst {}",
            r.scheme.to_string(),
            r.weight,
            r.mean_compute_time,
            r.mean_comm_time,
            r.kappa_worst
                .map_or("inf".to_string(), |k| format!("{k:.3e}"))
        );
    }
    if a.exp.csv {
        let mut buf = Vec::new();
        write_compare_csv(&mut buf, &rows)?;
        return emit_bytes(&a.exp.out, &buf);
    }
    emit_json(
        &a.exp.out,
        &CompareOutput {
            config: &cfg,
            compare: &cmp,
            rows: &rows,
        },
    )
}
