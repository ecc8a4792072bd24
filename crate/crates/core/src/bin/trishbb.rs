use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use trishbb::data::{known_metadata, validate_metadata, Manifest};
use trishbb::harness::{
    aggregate, binary_grid, estimate_g, locate_data, multiclass_grid, run_sweep, write_csv,
    write_json, write_pretty, DataSource, ExperimentSpec, HarnessError, SweepOptions,
    SyntheticQuadratic,
};
use trishbb::optimizer::Variant;
use trishbb::problem::LogisticRegression;
use trishbb::theory::{
    admissible_alpha, constants, limit, monte_carlo_check, reference_config, AssumptionConstants,
    MonteCarloConfig, Regime,
};

#[derive(Parser)]
#[command(
    name = "trishbb",
    version,
    about = "TRishBB experiments on finite-sum problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded sweep and write runs.csv, runs.json, aggregates.json and meta.json.
    Run(RunArgs),
    /// Estimate G, the mean stochastic-gradient norm over one SG epoch.
    EstimateG(EstimateArgs),
    /// Compare a dataset's sizes against the published metadata.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Dataset name or synthetic spec (`synthetic:n=..;d=..`, `quadratic:diag=1,2;sigma=0.1`).
    #[arg(long)]
    dataset: Option<String>,
    /// JSON manifest mapping dataset names to files.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory holding `<name>` and `<name>.t`; defaults to $TRISHBB_DATA_DIR.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    /// The binary-classification grid (60 triplets).
    Paper,
    /// The multi-class grid (36 triplets).
    Multiclass,
    /// Lists from --alphas/--gamma1/--gamma2 or the config file.
    Custom,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    /// 10 seeds.
    Desk,
    /// 50 seeds.
    Paper,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated subset of trish,v1,v2,v3,sgdbb.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    #[arg(long, value_enum)]
    grid: Option<Grid>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// γ₁ values as multiples of 1/G.
    #[arg(long, value_delimiter = ',')]
    gamma1: Option<Vec<f64>>,
    /// γ₂ values as multiples of 1/G.
    #[arg(long, value_delimiter = ',')]
    gamma2: Option<Vec<f64>>,
    /// Number of seeds; overrides --profile.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Use this G instead of estimating it.
    #[arg(long)]
    g: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
    /// Also run a Monte-Carlo bound check on a noisy quadratic.
    #[arg(long)]
    theory_check: Option<Regime>,
    /// JSON experiment spec; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record per-run wall time (output is then no longer byte-reproducible).
    #[arg(long)]
    wall_time: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    data: DataArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::EstimateG(args) => cmd_estimate(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn data_location(args: &DataArgs) -> Result<(Manifest, Option<PathBuf>), HarnessError> {
    locate_data(args.manifest.as_deref(), args.data_dir.as_deref())
}

fn load_spec(path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = match &args.config {
        Some(p) => load_spec(p)?,
        None => ExperimentSpec::default(),
    };
    if let Some(d) = &args.data.dataset {
        spec.dataset = d.clone();
    }
    if let Some(v) = &args.variants {
        spec.variants = v.clone();
    }
    match args.grid {
        Some(Grid::Paper) => {
            (spec.alphas, spec.gamma1_multiples, spec.gamma2_multiples) = binary_grid()
        }
        Some(Grid::Multiclass) => {
            (spec.alphas, spec.gamma1_multiples, spec.gamma2_multiples) = multiclass_grid()
        }
        Some(Grid::Custom) | None => {}
    }
    if let Some(a) = &args.alphas {
        spec.alphas = a.clone();
    }
    if let Some(g) = &args.gamma1 {
        spec.gamma1_multiples = g.clone();
    }
    if let Some(g) = &args.gamma2 {
        spec.gamma2_multiples = g.clone();
    }
    match args.profile {
        Some(Profile::Desk) => spec.seeds = 10,
        Some(Profile::Paper) => spec.seeds = 50,
        None => {}
    }
    if let Some(s) = args.seeds {
        spec.seeds = s;
    }
    if let Some(s) = args.master_seed {
        spec.master_seed = s;
    }
    if let Some(e) = args.epochs {
        spec.epochs = e;
    }
    if let Some(b) = args.batch_size {
        spec.batch_size = b;
    }
    if args.g.is_some() {
        spec.g_override = args.g;
    }
    spec.validate()?;
    Ok(spec)
}

#[derive(Serialize)]
struct Meta<'a> {
    dataset: &'a str,
    n_train: usize,
    n_test: usize,
    dim: usize,
    g: f64,
    g_lr: f64,
    g_seed: u64,
    g_estimated: bool,
    seeds: Vec<u64>,
    spec: &'a ExperimentSpec,
}

#[derive(Serialize)]
struct TheoryOutput {
    regime: Regime,
    quadratic: SyntheticQuadratic,
    constants: AssumptionConstants,
    config: trishbb::TripletConfig,
    bounds: trishbb::theory::BoundReport,
    admissibility: trishbb::theory::Admissibility,
    limit: f64,
    monte_carlo: trishbb::theory::MonteCarloResult,
}

fn theory_check(
    regime: Regime,
    quad: &SyntheticQuadratic,
    out: &Path,
) -> Result<bool, HarnessError> {
    let q = quad.problem()?;
    let a = AssumptionConstants::for_quadratic(&q, quad.sigma);
    let cfg = reference_config(regime, &a);
    let bounds = constants(&cfg, &a)?;
    let admissibility = admissible_alpha(regime, &cfg, &a)?;
    let lim = limit(regime, &cfg, &a, &bounds)?;
    let mc = monte_carlo_check(regime, &q, quad.sigma, &cfg, &MonteCarloConfig::default())?;
    println!(
        "theory {regime}: empirical {:.6e} (se {:.2e}) vs limit {:.6e} x {:.2} -> {}",
        mc.empirical,
        mc.std_error,
        mc.limit,
        1.0 + mc.tolerance,
        if mc.passed { "PASS" } else { "FAIL" }
    );
    let passed = mc.passed;
    write_pretty(
        &TheoryOutput {
            regime,
            quadratic: quad.clone(),
            constants: a,
            config: cfg,
            bounds,
            admissibility,
            limit: lim,
            monte_carlo: mc,
        },
        &out.join("theory.json"),
    )?;
    Ok(passed)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, HarnessError> {
    let spec = build_spec(&args)?;
    std::fs::create_dir_all(&args.out).map_err(|source| HarnessError::Io {
        path: args.out.clone(),
        source,
    })?;
    let source = DataSource::parse(&spec.dataset)?;
    if let DataSource::Quadratic(quad) = &source {
        let regime = args.theory_check.unwrap_or(Regime::UnbiasedPl);
        let ok = theory_check(regime, quad, &args.out)?;
        return Ok(if ok {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        });
    }

    let (manifest, data_dir) = data_location(&args.data)?;
    let ds = source.load(&manifest, data_dir.as_deref())?;
    info!(
        "{}: N={} N_t={} d={}",
        ds.name,
        ds.train.len(),
        ds.test.len(),
        ds.dim
    );
    let (g, estimated) = match spec.g_override {
        Some(g) => (g, false),
        None => {
            let problem = LogisticRegression::new(&ds.train, ds.dim)?;
            (
                estimate_g(&problem, spec.batch_size, spec.g_lr, spec.g_seed)?,
                true,
            )
        }
    };
    info!("G = {g:.6}");

    let records = run_sweep(
        &spec,
        &ds,
        g,
        SweepOptions {
            wall_time: args.wall_time,
        },
    )?;
    let (aggs, summaries) = aggregate(&records);
    write_csv(&records, &args.out.join("runs.csv"))?;
    write_json(&records, &args.out.join("runs.json"))?;
    write_pretty(
        &serde_json::json!({ "configs": aggs, "summaries": summaries }),
        &args.out.join("aggregates.json"),
    )?;
    write_pretty(
        &Meta {
            dataset: &ds.name,
            n_train: ds.train.len(),
            n_test: ds.test.len(),
            dim: ds.dim,
            g,
            g_lr: spec.g_lr,
            g_seed: spec.g_seed,
            g_estimated: estimated,
            seeds: spec.seed_list(),
            spec: &spec,
        },
        &args.out.join("meta.json"),
    )?;

    let failed = records.iter().filter(|r| !r.succeeded()).count();
    println!("{} runs ({failed} failed), G = {g:.4}", records.len());
    println!(
        "{:<8} {:>10} {:>10} {:>8} {:>8}",
        "variant", "alpha", "best acc%", "best", "BB%"
    );
    for s in &summaries {
        for a in &s.alphas {
            println!(
                "{:<8} {:>10} {:>10.2} {:>8} {:>8.2}",
                s.variant.name(),
                a.alpha.map_or("-".to_string(), |x| format!("{x:.4}")),
                100.0 * a.best_accuracy,
                a.best_run_id,
                100.0 * a.mean_bb_fraction
            );
        }
        if let Some(r) = s.accuracy_ratio {
            println!("{:<8} accuracy ratio {r:.4}", s.variant.name());
        }
    }

    if let Some(regime) = args.theory_check {
        theory_check(regime, &SyntheticQuadratic::default(), &args.out)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_estimate(args: EstimateArgs) -> Result<ExitCode, HarnessError> {
    let name = args.data.dataset.clone().unwrap_or_else(|| "a1a".into());
    let (manifest, data_dir) = data_location(&args.data)?;
    let ds = DataSource::parse(&name)?.load(&manifest, data_dir.as_deref())?;
    let problem = LogisticRegression::new(&ds.train, ds.dim)?;
    let seed = args.seed.unwrap_or(ExperimentSpec::default().g_seed);
    let g = estimate_g(&problem, args.batch_size, args.lr, seed)?;
    println!(
        "{name}: G = {g:.6} (lr = {}, batch = {}, seed = {seed})",
        args.lr, args.batch_size
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, HarnessError> {
    let name = args.data.dataset.clone().unwrap_or_else(|| "a1a".into());
    let (manifest, data_dir) = data_location(&args.data)?;
    let entry = manifest.resolve(&name, data_dir.as_deref())?;
    let expected = entry
        .expected
        .or_else(|| known_metadata(&name))
        .ok_or_else(|| {
            HarnessError::Spec(format!(
                "no expected metadata for {name}; add it to the manifest"
            ))
        })?;
    let ds = entry.load(&name)?;
    let report = validate_metadata(&ds, expected);
    println!("{report}");
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
