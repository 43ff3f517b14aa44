//! Seeded Monte-Carlo campaigns: estimator frequency tables, histogram data
//! with the deterministic-equivalent overlay, and oracle-versus-sample
//! deviations.
//!
//! Each trial draws its own seed from `(master seed, M, N, trial index)`
//! through [`trial_seed`], so results do not depend on the execution policy
//! and any subset of the grid can be rerun on its own.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::hankel_stats::{
    autocov_sample_spectrum, build_hankel_pair, cca_sample_spectrum, estimate_s_ratio, estimate_s_threshold,
    EmpiricalSpectrum, DEFAULT_KMAX,
};
use crate::noise_equivalents::{
    cca_density, default_autocov_grid, density_autocov, support_edge_autocov, NoiseModel, SolverOptions,
    SpectralMeasure,
};
use crate::persist::{fmt_f64, write_columns_csv, write_json};
use crate::spike_oracle::{autocov_outliers, cca_outliers, ModelKind, SpikeReport};
use crate::state_space::{mc_model, simulate, simulate_noise, theoretical_stats, Preset, StateSpaceModel};

/// Number of leading eigenvalues kept in a [`TrialRecord`].
pub const TOP_EIGENVALUES: usize = 12;

/// Largest estimator value with its own table bin; larger values share one overflow bin.
pub const TABLE_MAX_VALUE: usize = 8;

/// One `(M, N)` point of an experiment grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Cross-section dimension.
    pub m: usize,
    /// Number of Hankel columns.
    pub n: usize,
}

impl FromStr for GridPoint {
    type Err = Error;

    /// Parse `MxN`, for example `200x800`.
    fn from_str(s: &str) -> Result<Self> {
        let (m, n) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::InvalidInput(format!("grid point {s:?} is not of the form MxN")))?;
        let parse = |v: &str| {
            v.trim().parse::<usize>().map_err(|_| Error::InvalidInput(format!("grid point {s:?} is not of the form MxN")))
        };
        Ok(GridPoint { m: parse(m)?, n: parse(n)? })
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

/// Replacement for the noise covariance of a preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum NoiseDescriptor {
    /// `R = σ² I`.
    Isotropic {
        /// Noise variance.
        sigma2: f64,
    },
    /// `λ_k = 1/2 + (π/4) cos(π (k − 1) / (2M))`.
    Cosine,
    /// `R = diag(λ)` with exactly `M` positive entries.
    Diagonal {
        /// Eigenvalues of `R`.
        lambda: Vec<f64>,
    },
}

impl NoiseDescriptor {
    fn build(&self, m: usize, l: usize, n: usize) -> Result<NoiseModel> {
        match self {
            NoiseDescriptor::Isotropic { sigma2 } => NoiseModel::isotropic(m, l, n, *sigma2),
            NoiseDescriptor::Cosine => NoiseModel::cosine(m, l, n),
            NoiseDescriptor::Diagonal { lambda } => {
                if lambda.len() != m {
                    return invalid(format!("diagonal noise has {} entries but M = {m}", lambda.len()));
                }
                NoiseModel::new(m, l, n, lambda.clone())
            }
        }
    }
}

fn default_kind() -> ModelKind {
    ModelKind::Autocov
}
fn default_trials() -> usize {
    100
}
fn default_eps1() -> f64 {
    0.01
}
fn default_eps2() -> f64 {
    0.05
}
fn default_kmax() -> usize {
    DEFAULT_KMAX
}
fn default_density_points() -> usize {
    2000
}

/// A Monte-Carlo campaign. This is the JSON configuration format of the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Signal and noise model.
    pub preset: Preset,
    /// Optional replacement of the preset's noise covariance.
    #[serde(default)]
    pub noise: Option<NoiseDescriptor>,
    /// Sample matrix studied.
    #[serde(default = "default_kind")]
    pub kind: ModelKind,
    /// `(M, N)` points.
    pub grid: Vec<GridPoint>,
    /// Trials per grid point.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Relative margin of the threshold estimator.
    #[serde(default = "default_eps1")]
    pub eps1: f64,
    /// Ratio tolerance of the ratio estimator.
    #[serde(default = "default_eps2")]
    pub eps2: f64,
    /// Search bound of the ratio estimator.
    #[serde(default = "default_kmax")]
    pub kmax: usize,
    /// Master seed.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; nothing is written when absent.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    /// Trial execution policy.
    #[serde(default)]
    pub execution: Execution,
    /// Fixed number of histogram bins instead of the Freedman–Diaconis rule.
    #[serde(default)]
    pub bins: Option<usize>,
    /// Number of grid points of the density overlay.
    #[serde(default = "default_density_points")]
    pub density_points: usize,
}

impl ExperimentConfig {
    /// Configuration with default tolerances, 100 trials, seed 0 and no outputs.
    pub fn new(preset: Preset, kind: ModelKind, grid: Vec<GridPoint>) -> Self {
        ExperimentConfig {
            preset,
            noise: None,
            kind,
            grid,
            trials: default_trials(),
            eps1: default_eps1(),
            eps2: default_eps2(),
            kmax: default_kmax(),
            seed: 0,
            outputs: None,
            execution: Execution::default(),
            bins: None,
            density_points: default_density_points(),
        }
    }

    /// Parse and validate a JSON configuration.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read and validate a JSON configuration file.
    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Check the configuration invariants.
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return invalid("the grid is empty");
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if !(self.eps1 >= 0.0 && self.eps1.is_finite()) {
            return invalid("eps1 must be a nonnegative number");
        }
        if !(self.eps2 > 0.0 && self.eps2 < 1.0) {
            return invalid("eps2 must lie in (0, 1)");
        }
        if self.kmax == 0 {
            return invalid("kmax must be positive");
        }
        if self.bins == Some(0) {
            return invalid("bins must be positive");
        }
        if self.density_points < 4 {
            return invalid("density_points must be at least 4");
        }
        let l = self.preset.depth();
        for p in &self.grid {
            if p.m == 0 || p.n == 0 {
                return invalid(format!("grid point {p} has a zero dimension"));
            }
            if p.m * l >= p.n {
                return invalid(format!("grid point {p} with L = {l} has c = ML/N >= 1"));
            }
        }
        Ok(())
    }
}

/// 64-bit finalizer of the SplitMix64 generator.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial: `h(h(h(h(seed) ^ M) ^ N) ^ trial)` with `h` = [`splitmix64`].
pub fn trial_seed(master: u64, m: usize, n: usize, trial: usize) -> u64 {
    let mut h = splitmix64(master);
    for v in [m as u64, n as u64, trial as u64] {
        h = splitmix64(h ^ v);
    }
    h
}

/// Model, noise, bulk edge and oracle at one grid point.
#[derive(Clone, Debug)]
pub struct PointSetup {
    /// Grid point.
    pub point: GridPoint,
    /// Hankel depth.
    pub l: usize,
    /// `ML / N`.
    pub c: f64,
    /// Signal model, absent for noise-only presets.
    pub model: Option<StateSpaceModel>,
    /// Noise model.
    pub noise: NoiseModel,
    /// Sample matrix studied.
    pub kind: ModelKind,
    /// Bulk right edge used by the threshold estimator.
    pub edge: f64,
    /// Predicted outliers.
    pub oracle: SpikeReport,
}

/// Build the model, bulk edge and oracle of one grid point.
pub fn setup_point(config: &ExperimentConfig, point: GridPoint) -> Result<PointSetup> {
    let l = config.preset.depth();
    let (model, preset_noise) = mc_model(&config.preset, point.m, point.n)?;
    let noise = match &config.noise {
        Some(d) => d.build(point.m, l, point.n)?,
        None => preset_noise,
    };
    let c = noise.c;
    let edge = match config.kind {
        ModelKind::Autocov => support_edge_autocov(&noise)?.x_plus,
        ModelKind::Cca => 4.0 * c * (1.0 - c),
    };
    let oracle = match &model {
        Some(model) => {
            let stats = theoretical_stats(model, &noise, l)?;
            match config.kind {
                ModelKind::Autocov => autocov_outliers(&noise, &stats)?,
                ModelKind::Cca => cca_outliers(c, &stats)?,
            }
        }
        None => SpikeReport {
            s: 0,
            rho: Vec::new(),
            oracle_eigs: Vec::new(),
            edge,
            model_kind: config.kind,
            degenerate: false,
            no_escape: config.kind == ModelKind::Cca && c >= 0.5,
            marginal: false,
        },
    };
    Ok(PointSetup { point, l, c, model, noise, kind: config.kind, edge, oracle })
}

impl PointSetup {
    /// Simulate one realization with the given seed and return its sample spectrum.
    pub fn sample_spectrum(&self, seed: u64) -> Result<EmpiricalSpectrum> {
        let samples = match &self.model {
            Some(model) => simulate(model, &self.noise, self.point.n, self.l, seed)?,
            None => simulate_noise(&self.noise, self.point.n, self.l, seed)?,
        };
        let pair = build_hankel_pair(&samples, self.l)?;
        match self.kind {
            ModelKind::Autocov => Ok(autocov_sample_spectrum(&pair)),
            ModelKind::Cca => cca_sample_spectrum(&pair),
        }
    }

    /// Sample eigenvalues that are compared with the oracle: the spectrum
    /// with the structural unit eigenvalues of the projector product removed.
    pub fn informative<'a>(&self, spec: &'a EmpiricalSpectrum) -> &'a [f64] {
        &spec.eigs[spec.structural_unit_count().min(spec.eigs.len())..]
    }
}

/// Outcome of one Monte-Carlo trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Trial index within its grid point.
    pub trial: usize,
    /// Derived seed.
    pub seed: u64,
    /// Cross-section dimension.
    pub m: usize,
    /// Number of Hankel columns.
    pub n: usize,
    /// Sample matrix studied.
    pub model_kind: ModelKind,
    /// Threshold estimate `s̃`.
    pub s_threshold: usize,
    /// Ratio estimate `ŝ`.
    pub s_ratio: usize,
    /// The ratio search hit `kmax` without a qualifying ratio.
    pub ratio_overflow: bool,
    /// Leading informative eigenvalues, nonincreasing.
    pub top_eigenvalues: Vec<f64>,
    /// Oracle prediction at this grid point.
    pub oracle: SpikeReport,
}

/// Run trial `trial` of a grid point.
pub fn run_trial(config: &ExperimentConfig, setup: &PointSetup, trial: usize) -> Result<TrialRecord> {
    let seed = trial_seed(config.seed, setup.point.m, setup.point.n, trial);
    let spec = setup.sample_spectrum(seed)?;
    let s_threshold = estimate_s_threshold(&spec, setup.edge, config.eps1);
    let ratio = estimate_s_ratio(&spec, config.eps2, config.kmax)?;
    let top = setup.informative(&spec).iter().take(TOP_EIGENVALUES).copied().collect();
    Ok(TrialRecord {
        trial,
        seed,
        m: setup.point.m,
        n: setup.point.n,
        model_kind: setup.kind,
        s_threshold,
        s_ratio: ratio.s,
        ratio_overflow: ratio.overflow,
        top_eigenvalues: top,
        oracle: setup.oracle.clone(),
    })
}

fn run_point(config: &ExperimentConfig, setup: &PointSetup) -> Result<Vec<TrialRecord>> {
    map_indexed(config.execution, config.trials, |t| run_trial(config, setup, t)).into_iter().collect()
}

/// The two estimators of the outlier count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Eigenvalues above `edge (1 + ε₁)`.
    SThreshold,
    /// Eigenvalue-ratio rule.
    SRatio,
}

impl Estimator {
    /// Name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Estimator::SThreshold => "s_threshold",
            Estimator::SRatio => "s_ratio",
        }
    }
}

/// Label of a table bin: `0` to `8`, then `>=9`.
pub fn bin_label(bin: usize) -> String {
    if bin > TABLE_MAX_VALUE {
        format!(">={}", TABLE_MAX_VALUE + 1)
    } else {
        bin.to_string()
    }
}

/// Empirical probabilities of the bins `0..=8` and the overflow bin.
pub fn bin_probabilities(values: impl IntoIterator<Item = usize>) -> Vec<f64> {
    let mut counts = vec![0usize; TABLE_MAX_VALUE + 2];
    let mut total = 0usize;
    for v in values {
        counts[v.min(TABLE_MAX_VALUE + 1)] += 1;
        total += 1;
    }
    counts.into_iter().map(|k| if total == 0 { 0.0 } else { k as f64 / total as f64 }).collect()
}

/// Frequency table of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTable {
    /// Grid point.
    pub point: GridPoint,
    /// `ML / N`.
    pub c: f64,
    /// Bulk edge used by the threshold estimator.
    pub edge: f64,
    /// Oracle prediction.
    pub oracle: SpikeReport,
    /// Probabilities of `s̃ = 0, …, 8, ≥ 9`.
    pub s_threshold: Vec<f64>,
    /// Probabilities of `ŝ = 0, …, 8, ≥ 9`.
    pub s_ratio: Vec<f64>,
    /// Trials whose ratio search hit `kmax`.
    pub ratio_overflows: usize,
}

impl PointTable {
    /// Probabilities of one estimator.
    pub fn probabilities(&self, est: Estimator) -> &[f64] {
        match est {
            Estimator::SThreshold => &self.s_threshold,
            Estimator::SRatio => &self.s_ratio,
        }
    }
}

/// Result of [`run_table`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    /// Configuration that produced the table.
    pub config: ExperimentConfig,
    /// One table per grid point.
    pub points: Vec<PointTable>,
    /// All trials, grid point by grid point in trial order.
    pub records: Vec<TrialRecord>,
}

impl TableResult {
    /// The CSV table with columns `M,N,estimator,value,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("M,N,estimator,value,probability\n");
        for p in &self.points {
            for est in [Estimator::SThreshold, Estimator::SRatio] {
                for (bin, prob) in p.probabilities(est).iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        p.point.m,
                        p.point.n,
                        est.name(),
                        bin_label(bin),
                        fmt_f64(*prob)
                    ));
                }
            }
        }
        out
    }
}

/// Estimator frequency tables over the grid.
///
/// Writes `table.csv`, `summary.json` and `trials.json` when `outputs` is set.
pub fn run_table(config: &ExperimentConfig) -> Result<TableResult> {
    config.validate()?;
    let mut points = Vec::with_capacity(config.grid.len());
    let mut records = Vec::with_capacity(config.grid.len() * config.trials);
    for &point in &config.grid {
        let setup = setup_point(config, point)?;
        let recs = run_point(config, &setup)?;
        points.push(PointTable {
            point,
            c: setup.c,
            edge: setup.edge,
            oracle: setup.oracle.clone(),
            s_threshold: bin_probabilities(recs.iter().map(|r| r.s_threshold)),
            s_ratio: bin_probabilities(recs.iter().map(|r| r.s_ratio)),
            ratio_overflows: recs.iter().filter(|r| r.ratio_overflow).count(),
        });
        records.extend(recs);
    }
    let result = TableResult { config: config.clone(), points, records };
    if let Some(dir) = &config.outputs {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("table.csv"), result.to_csv())?;
        write_json(&dir.join("summary.json"), &TableSummary { config, points: &result.points })?;
        write_json(&dir.join("trials.json"), &result.records)?;
    }
    Ok(result)
}

#[derive(Serialize)]
struct TableSummary<'a> {
    config: &'a ExperimentConfig,
    points: &'a [PointTable],
}

/// Histogram bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Left end.
    pub left: f64,
    /// Right end.
    pub right: f64,
    /// Number of values in `[left, right)`, or `[left, right]` for the last bin.
    pub count: usize,
}

/// Freedman–Diaconis bin count: width `2 IQR n^{−1/3}`. Falls back to
/// `⌈√n⌉` bins when the interquartile range vanishes.
pub fn freedman_diaconis_bins(sorted: &[f64]) -> usize {
    let n = sorted.len();
    if n < 2 {
        return 1;
    }
    let range = sorted[n - 1] - sorted[0];
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    if !(width > 0.0) || !(range > 0.0) {
        return ((n as f64).sqrt().ceil() as usize).max(1);
    }
    ((range / width).ceil() as usize).clamp(1, 10_000)
}

/// Equal-width histogram of `values` with `bins` bins over `[min, max]`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin { left: lo + k as f64 * width, right: lo + (k + 1) as f64 * width, count })
        .collect()
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Kolmogorov distance between the empirical law of `samples` and a CDF.
pub fn kolmogorov_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// CDF of a measure given on a grid, linearly interpolated. The
/// `missing_left` mass is spread uniformly over `[0, grid[0]]`.
pub fn grid_cdf(measure: &SpectralMeasure, missing_left: f64) -> impl Fn(f64) -> f64 + '_ {
    let continuous = SpectralMeasure { grid: measure.grid.clone(), density: measure.density.clone(), atoms: Vec::new() };
    let values = continuous.cdf_on_grid(missing_left);
    move |x| {
        let g = &measure.grid;
        let atoms: f64 = measure.atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum();
        let cont = if g.is_empty() || x <= 0.0 {
            0.0
        } else if x < g[0] {
            missing_left * x / g[0]
        } else if x >= g[g.len() - 1] {
            values[g.len() - 1]
        } else {
            let k = g.partition_point(|&v| v <= x) - 1;
            let w = (x - g[k]) / (g[k + 1] - g[k]);
            values[k] + w * (values[k + 1] - values[k])
        };
        cont + atoms
    }
}

/// Deterministic-equivalent law of the studied spectrum at a grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    /// Density on a grid and atoms.
    pub measure: SpectralMeasure,
    /// Mass left of the grid (autocovariance side, near 0).
    pub missing_left: f64,
    /// Right edge of the bulk.
    pub edge: f64,
}

/// Deterministic-equivalent law of the bulk eigenvalues at a grid point.
pub fn limit_law(setup: &PointSetup, points: usize) -> Result<LimitLaw> {
    match setup.kind {
        ModelKind::Autocov => {
            let opts = SolverOptions::default();
            let grid = default_autocov_grid(setup.edge, opts.left_margin, points);
            let dens = density_autocov(&setup.noise, &grid, &opts)?;
            Ok(LimitLaw { measure: dens.measure, missing_left: dens.residual_mass.max(0.0), edge: setup.edge })
        }
        ModelKind::Cca => {
            let b = setup.edge;
            let grid: Vec<f64> = (0..points)
                .map(|i| 0.5 * b * (1.0 - (std::f64::consts::PI * (i as f64 + 0.5) / points as f64).cos()))
                .collect();
            Ok(LimitLaw { measure: cca_density(setup.c, &grid)?, missing_left: 0.0, edge: b })
        }
    }
}

/// Plot-ready data of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    /// Grid point.
    pub point: GridPoint,
    /// `ML / N`.
    pub c: f64,
    /// Histogram of the `ML` leading sample eigenvalues pooled over trials.
    pub histogram: Vec<HistogramBin>,
    /// Deterministic-equivalent law.
    pub law: LimitLaw,
    /// Oracle prediction; its `rho` are the outlier markers.
    pub oracle: SpikeReport,
}

/// Histogram, density overlay and oracle markers over the grid.
///
/// Writes `histogram_MxN.csv`, `density_MxN.csv` and `figure_MxN.json` per
/// grid point when `outputs` is set.
pub fn run_figure(config: &ExperimentConfig) -> Result<Vec<FigureData>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.grid.len());
    for &point in &config.grid {
        let setup = setup_point(config, point)?;
        let spectra: Vec<Vec<f64>> = map_indexed(config.execution, config.trials, |t| {
            let seed = trial_seed(config.seed, point.m, point.n, t);
            setup.sample_spectrum(seed).map(|s| s.bulk_part().to_vec())
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let mut values: Vec<f64> = spectra.into_iter().flatten().collect();
        values.sort_by(f64::total_cmp);
        let bins = config.bins.unwrap_or_else(|| freedman_diaconis_bins(&values));
        let fig = FigureData {
            point,
            c: setup.c,
            histogram: histogram(&values, bins),
            law: limit_law(&setup, config.density_points)?,
            oracle: setup.oracle.clone(),
        };
        if let Some(dir) = &config.outputs {
            write_figure(dir, &fig)?;
        }
        out.push(fig);
    }
    Ok(out)
}

fn write_figure(dir: &Path, fig: &FigureData) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let tag = fig.point.to_string();
    let mut hist = String::from("bin_left,bin_right,count\n");
    for b in &fig.histogram {
        hist.push_str(&format!("{},{},{}\n", fmt_f64(b.left), fmt_f64(b.right), b.count));
    }
    std::fs::write(dir.join(format!("histogram_{tag}.csv")), hist)?;
    write_columns_csv(
        &dir.join(format!("density_{tag}.csv")),
        &["x", "density"],
        &[&fig.law.measure.grid, &fig.law.measure.density],
    )?;
    #[derive(Serialize)]
    struct Meta<'a> {
        point: GridPoint,
        c: f64,
        edge: f64,
        atoms: &'a [(f64, f64)],
        missing_left: f64,
        oracle: &'a SpikeReport,
    }
    write_json(
        &dir.join(format!("figure_{tag}.json")),
        &Meta {
            point: fig.point,
            c: fig.c,
            edge: fig.law.edge,
            atoms: &fig.law.measure.atoms,
            missing_left: fig.law.missing_left,
            oracle: &fig.oracle,
        },
    )
}

/// Summary of `|λ̂_k − ρ_k|` for one outlier index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexDeviation {
    /// Outlier index, 1-based.
    pub k: usize,
    /// Oracle location `ρ_k`.
    pub rho: f64,
    /// Median of `|λ̂_k − ρ_k|`.
    pub median_abs: f64,
    /// 90th percentile of `|λ̂_k − ρ_k|`.
    pub p90_abs: f64,
    /// Median of `|λ̂_k − ρ_k| / ρ_k`.
    pub median_rel: f64,
    /// 90th percentile of `|λ̂_k − ρ_k| / ρ_k`.
    pub p90_rel: f64,
}

/// Oracle-versus-sample deviations at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    /// Grid point.
    pub point: GridPoint,
    /// Oracle prediction.
    pub oracle: SpikeReport,
    /// Per-trial deviations `|λ̂_k − ρ_k|`, `k = 1..s`.
    pub deviations: Vec<Vec<f64>>,
    /// Summary per outlier index; empty when `s = 0`.
    pub per_index: Vec<IndexDeviation>,
}

/// Deviations of the leading sample eigenvalues from the oracle locations.
///
/// Writes `deviations.json` when `outputs` is set.
pub fn oracle_vs_empirical(config: &ExperimentConfig) -> Result<Vec<DeviationSummary>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.grid.len());
    for &point in &config.grid {
        let setup = setup_point(config, point)?;
        let rho = setup.oracle.rho.clone();
        let deviations: Vec<Vec<f64>> = map_indexed(config.execution, config.trials, |t| {
            let seed = trial_seed(config.seed, point.m, point.n, t);
            let spec = setup.sample_spectrum(seed)?;
            let eigs = setup.informative(&spec);
            Ok(rho.iter().zip(eigs).map(|(r, e)| (e - r).abs()).collect())
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let per_index = rho
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let mut abs: Vec<f64> = deviations.iter().filter_map(|d| d.get(k).copied()).collect();
                abs.sort_by(f64::total_cmp);
                let rel: Vec<f64> = abs.iter().map(|d| d / r.abs()).collect();
                IndexDeviation {
                    k: k + 1,
                    rho: r,
                    median_abs: quantile(&abs, 0.5),
                    p90_abs: quantile(&abs, 0.9),
                    median_rel: quantile(&rel, 0.5),
                    p90_rel: quantile(&rel, 0.9),
                }
            })
            .collect();
        out.push(DeviationSummary { point, oracle: setup.oracle, deviations, per_index });
    }
    if let Some(dir) = &config.outputs {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("deviations.json"), &out)?;
    }
    Ok(out)
}
