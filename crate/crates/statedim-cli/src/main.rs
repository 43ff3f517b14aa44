//! `statedim`: command-line front end for the statedim library.
//!
//! Exit codes: 0 on success, 2 for usage and input errors, 3 for numerical
//! failures.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use statedim::exec::Execution;
use statedim::experiment_runner::{
    limit_law, run_figure, run_table, setup_point, ExperimentConfig, GridPoint, TOP_EIGENVALUES,
};
use statedim::hankel_stats::{
    autocov_sample_spectrum, build_hankel_pair, cca_sample_spectrum, estimate_s_ratio, estimate_s_threshold,
    DEFAULT_KMAX,
};
use statedim::noise_equivalents::{cca_support, support_edge_autocov, NoiseModel};
use statedim::persist::{read_samples_csv, write_columns_csv, write_json, write_samples_csv, write_spectrum_csv};
use statedim::spike_oracle::ModelKind;
use statedim::state_space::{simulate, simulate_noise, Preset};
use statedim::Result;

#[derive(Parser, Debug)]
#[command(name = "statedim", version, about = "Estimate the minimal state dimension of high-dimensional time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the deterministic-equivalent density and support of each grid point.
    Density {
        /// Sample matrix whose noise law is computed.
        #[arg(long, value_enum)]
        kind: Kind,
        /// JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the predicted outliers of each grid point as JSON.
    Oracle {
        /// JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate the first grid point of a configuration into a sample file.
    Simulate {
        /// JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Seed; defaults to the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output sample CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run both estimators of the outlier count on a sample file.
    Estimate {
        /// Sample CSV (header `M,<M>,L,<L>`, then real rows, then imaginary rows).
        #[arg(long)]
        input: PathBuf,
        /// Sample matrix used.
        #[arg(long, value_enum)]
        kind: Kind,
        /// Relative margin of the threshold estimator.
        #[arg(long, default_value_t = 0.01)]
        eps1: f64,
        /// Ratio tolerance of the ratio estimator.
        #[arg(long, default_value_t = 0.05)]
        eps2: f64,
        /// Search bound of the ratio estimator.
        #[arg(long, default_value_t = DEFAULT_KMAX)]
        kmax: usize,
        /// Noise variance assumed for the autocovariance bulk edge (`R = σ² I`).
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        /// Directory receiving the full spectrum as CSV and JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo frequency table of the autocovariance estimators.
    ReproduceTable1(ReproduceArgs),
    /// Monte-Carlo frequency table of the canonical-correlation estimators.
    ReproduceTable2(ReproduceArgs),
    /// Histogram, density and outlier data of the built-in figure setups.
    ReproduceFigures(ReproduceArgs),
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// Trials per grid point (default 100 for tables, 1 for figures).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Grid point `MxN`; repeat for several points.
    #[arg(long)]
    grid: Vec<String>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Run trials on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    /// Squared singular values of the sample autocovariance.
    Autocov,
    /// Squared canonical correlations between past and future.
    Cca,
}

impl From<Kind> for ModelKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Autocov => ModelKind::Autocov,
            Kind::Cca => ModelKind::Cca,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Density { kind, config, out } => density(kind.into(), &config, &out),
        Command::Oracle { config } => oracle(&config),
        Command::Simulate { config, seed, out } => simulate_file(&config, seed, &out),
        Command::Estimate { input, kind, eps1, eps2, kmax, sigma2, out } => {
            estimate(&input, kind.into(), eps1, eps2, kmax, sigma2, out.as_deref())
        }
        Command::ReproduceTable1(args) => table(ModelKind::Autocov, &args),
        Command::ReproduceTable2(args) => table(ModelKind::Cca, &args),
        Command::ReproduceFigures(args) => figures(&args),
    }
}

fn density(kind: ModelKind, config: &Path, out: &Path) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(config)?;
    cfg.kind = kind;
    std::fs::create_dir_all(out)?;
    for &point in &cfg.grid {
        let setup = setup_point(&cfg, point)?;
        let law = limit_law(&setup, cfg.density_points)?;
        write_columns_csv(&out.join(format!("density_{point}.csv")), &["x", "density"], &[
            &law.measure.grid,
            &law.measure.density,
        ])?;
        let support = match kind {
            ModelKind::Autocov => json!({
                "kind": "autocov",
                "m": point.m, "n": point.n, "l": setup.l, "c": setup.c,
                "support": support_edge_autocov(&setup.noise)?,
                "missing_left": law.missing_left,
            }),
            ModelKind::Cca => json!({
                "kind": "cca",
                "m": point.m, "n": point.n, "l": setup.l, "c": setup.c,
                "support": cca_support(setup.c)?,
                "atoms": law.measure.atoms,
            }),
        };
        write_json(&out.join(format!("support_{point}.json")), &support)?;
    }
    Ok(())
}

/// Print one line to standard output, reporting a closed pipe as an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn oracle(config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let mut reports = Vec::with_capacity(cfg.grid.len());
    for &point in &cfg.grid {
        let setup = setup_point(&cfg, point)?;
        reports.push(json!({ "m": point.m, "n": point.n, "l": setup.l, "c": setup.c, "report": setup.oracle }));
    }
    emit(&serde_json::to_string_pretty(&reports)?)
}

fn simulate_file(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let point = cfg.grid[0];
    let setup = setup_point(&cfg, point)?;
    let seed = seed.unwrap_or(cfg.seed);
    let samples = match &setup.model {
        Some(model) => simulate(model, &setup.noise, point.n, setup.l, seed)?,
        None => simulate_noise(&setup.noise, point.n, setup.l, seed)?,
    };
    write_samples_csv(out, &samples, setup.l)
}

fn estimate(
    input: &Path,
    kind: ModelKind,
    eps1: f64,
    eps2: f64,
    kmax: usize,
    sigma2: f64,
    out: Option<&Path>,
) -> Result<()> {
    let (samples, l) = read_samples_csv(input)?;
    let pair = build_hankel_pair(&samples, l)?;
    let c = (pair.m * pair.l) as f64 / pair.n as f64;
    let (spec, edge) = match kind {
        ModelKind::Autocov => {
            let noise = NoiseModel::isotropic(pair.m, pair.l, pair.n, sigma2)?;
            (autocov_sample_spectrum(&pair), support_edge_autocov(&noise)?.x_plus)
        }
        ModelKind::Cca => (cca_sample_spectrum(&pair)?, cca_support(c)?.bulk_right),
    };
    let s_threshold = estimate_s_threshold(&spec, edge, eps1);
    let ratio = estimate_s_ratio(&spec, eps2, kmax)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_spectrum_csv(&dir.join("spectrum.csv"), &spec)?;
        write_json(&dir.join("spectrum.json"), &spec)?;
    }
    let skip = spec.structural_unit_count();
    let top: Vec<f64> = spec.eigs.iter().skip(skip).take(TOP_EIGENVALUES).copied().collect();
    let report = json!({
        "kind": kind,
        "m": pair.m, "l": pair.l, "n": pair.n, "c": c,
        "edge": edge,
        "eps1": eps1, "eps2": eps2, "kmax": kmax,
        "s_threshold": s_threshold,
        "s_ratio": ratio.s,
        "ratio_overflow": ratio.overflow,
        "top_eigenvalues": top,
    });
    emit(&serde_json::to_string_pretty(&report)?)
}

fn parse_grid(args: &ReproduceArgs, default: &[GridPoint]) -> Result<Vec<GridPoint>> {
    if args.grid.is_empty() {
        return Ok(default.to_vec());
    }
    args.grid.iter().map(|g| g.parse()).collect()
}

fn execution(args: &ReproduceArgs) -> Execution {
    if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn table(kind: ModelKind, args: &ReproduceArgs) -> Result<()> {
    let grid = parse_grid(args, &[GridPoint { m: 100, n: 400 }, GridPoint { m: 200, n: 800 }])?;
    let mut cfg = ExperimentConfig::new(Preset::Table, kind, grid);
    cfg.trials = args.trials.unwrap_or(100) as usize;
    cfg.seed = args.seed;
    cfg.execution = execution(args);
    cfg.outputs = Some(args.out.clone());
    let result = run_table(&cfg)?;
    emit(result.to_csv().trim_end())
}

/// Figure setups: output name, preset, matrix model and default grid point.
fn figure_setups() -> Vec<(&'static str, Preset, ModelKind, GridPoint)> {
    let wide = GridPoint { m: 600, n: 1200 };
    let cca = GridPoint { m: 130, n: 2000 };
    vec![
        ("autocov_s3", Preset::OddS { r: 2 }, ModelKind::Autocov, wide),
        ("autocov_s5", Preset::OddS { r: 3 }, ModelKind::Autocov, wide),
        ("autocov_s2", Preset::S2, ModelKind::Autocov, wide),
        ("cca_1_outlier", Preset::CcaFig { outliers: 1 }, ModelKind::Cca, cca),
        ("cca_2_outliers", Preset::CcaFig { outliers: 2 }, ModelKind::Cca, cca),
    ]
}

fn figures(args: &ReproduceArgs) -> Result<()> {
    for (name, preset, kind, point) in figure_setups() {
        let mut cfg = ExperimentConfig::new(preset, kind, parse_grid(args, &[point])?);
        cfg.trials = args.trials.unwrap_or(1) as usize;
        cfg.seed = args.seed;
        cfg.execution = execution(args);
        cfg.outputs = Some(args.out.join(name));
        for fig in run_figure(&cfg)? {
            let rho: Vec<String> = fig.oracle.rho.iter().map(|r| format!("{r:.6}")).collect();
            emit(&format!("{name} {}: s = {}, outliers at [{}]", fig.point, fig.oracle.s, rho.join(", ")))?;
        }
    }
    Ok(())
}
