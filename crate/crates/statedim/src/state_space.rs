//! State-space signal models, their theoretical block statistics, simulation,
//! and the constructive example models with a prescribed number of outliers.
//!
//! The signal obeys `x_{n+1} = A x_n + B i_n`, `u_n = C x_n + D i_n` with a
//! white innovation `i_n ~ N_c(0, I_K)`, and is observed as `y_n = u_n + v_n`
//! where `v_n ~ N_c(0, R)` with `R = diag(λ)`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, CMat, C64};
use crate::noise_equivalents::NoiseModel;

/// Minimal realization `(A, B, C, D)` with `P` states, `K` innovations and `M` outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpaceModel {
    a: CMat,
    b: CMat,
    c: CMat,
    d: CMat,
}

impl StateSpaceModel {
    /// Validate shapes, stability (`ρ(A) < 1`), observability of `(C, A)` and
    /// controllability of `(A, B)`.
    pub fn new(a: CMat, b: CMat, c: CMat, d: CMat) -> Result<Self> {
        let p = a.nrows();
        if p == 0 || a.ncols() != p {
            return invalid("A must be a nonempty square matrix");
        }
        let k = b.ncols();
        if b.nrows() != p || k == 0 {
            return invalid("B must be P x K with K >= 1");
        }
        let m = c.nrows();
        if c.ncols() != p || m == 0 {
            return invalid("C must be M x P");
        }
        if d.nrows() != m || d.ncols() != k {
            return invalid("D must be M x K");
        }
        if [&a, &b, &c, &d].iter().any(|x| x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return invalid("model matrices must be finite");
        }
        let rho = spectral_radius(&a);
        if rho >= 1.0 {
            return invalid(format!("A is not stable: spectral radius {rho}"));
        }
        let model = Self { a, b, c, d };
        let obs = model.observability(p);
        if numerical_rank(&obs) < p {
            return invalid("(C, A) is not observable");
        }
        let ctrl = model.controllability(p);
        if numerical_rank(&ctrl) < p {
            return invalid("(A, B) is not controllable");
        }
        Ok(model)
    }

    /// Build from real-valued matrices.
    pub fn from_real(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let lift = |m: DMatrix<f64>| m.map(crate::linalg::c);
        Self::new(lift(a), lift(b), lift(c), lift(d))
    }

    /// State dimension `P`.
    pub fn p(&self) -> usize {
        self.a.nrows()
    }
    /// Innovation dimension `K`.
    pub fn k(&self) -> usize {
        self.b.ncols()
    }
    /// Output dimension `M`.
    pub fn m(&self) -> usize {
        self.c.nrows()
    }
    /// State matrix.
    pub fn a(&self) -> &CMat {
        &self.a
    }
    /// Input matrix.
    pub fn b(&self) -> &CMat {
        &self.b
    }
    /// Output matrix.
    pub fn c(&self) -> &CMat {
        &self.c
    }
    /// Feedthrough matrix.
    pub fn d(&self) -> &CMat {
        &self.d
    }

    /// Same dynamics with the output scaled: `(A, B, s C, s D)`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), &self.c * c(s), &self.d * c(s))
    }

    /// Observability matrix `(C; C A; …; C A^{L−1})`.
    pub fn observability(&self, l: usize) -> CMat {
        let (m, p) = (self.m(), self.p());
        let mut out = CMat::zeros(m * l, p);
        let mut blk = self.c.clone();
        for i in 0..l {
            out.view_mut((i * m, 0), (m, p)).copy_from(&blk);
            blk = &blk * &self.a;
        }
        out
    }

    /// Controllability matrix `(A^{L−1} B, …, A B, B)`.
    pub fn controllability(&self, l: usize) -> CMat {
        let (p, k) = (self.p(), self.k());
        let mut out = CMat::zeros(p, k * l);
        let mut blk = self.b.clone();
        for i in (0..l).rev() {
            out.view_mut((0, i * k), (p, k)).copy_from(&blk);
            blk = &self.a * &blk;
        }
        out
    }
}

/// Spectral radius by repeated squaring with renormalization (Gelfand's formula).
pub fn spectral_radius(a: &CMat) -> f64 {
    let mut m = a.clone();
    let mut log_scale = 0.0f64;
    let steps = 40;
    for _ in 0..steps {
        let nrm = linalg::fro(&m);
        if nrm == 0.0 {
            return 0.0;
        }
        m /= c(nrm);
        log_scale += nrm.ln();
        m = &m * &m;
        log_scale *= 2.0;
    }
    let nrm = linalg::fro(&m);
    if nrm == 0.0 {
        return 0.0;
    }
    ((log_scale + nrm.ln()) / 2f64.powi(steps)).exp()
}

fn numerical_rank(a: &CMat) -> usize {
    let s = linalg::singular_values_desc(a);
    let smax = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > 1e-10 * smax.max(1e-300)).count()
}

/// Solve `R_x = A R_x A^* + B B^*` for a stable `A`.
///
/// Direct solve of the vectorized system `(I − conj(A) ⊗ A) vec(R_x) = vec(B B^*)`.
pub fn lyapunov_state_cov(a: &CMat, b: &CMat) -> Result<CMat> {
    let p = a.nrows();
    if a.ncols() != p || b.nrows() != p {
        return invalid("A must be square and B must have as many rows as A");
    }
    let rho = spectral_radius(a);
    if rho >= 1.0 {
        return invalid(format!("A is not stable: spectral radius {rho}"));
    }
    let q = b * b.adjoint();
    let n = p * p;
    // vec stacks columns: index (i, j) -> i + p j; vec(A X A^*) = (conj(A) ⊗ A) vec(X).
    let mut sys = CMat::identity(n, n);
    for j in 0..p {
        for l in 0..p {
            let cj = a[(j, l)].conj();
            for i in 0..p {
                for k in 0..p {
                    sys[(i + p * j, k + p * l)] -= cj * a[(i, k)];
                }
            }
        }
    }
    let rhs = nalgebra::DVector::from_fn(n, |idx, _| q[(idx % p, idx / p)]);
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("singular Lyapunov operator".into()))?;
    let x = CMat::from_fn(p, p, |i, j| sol[i + p * j]);
    Ok(linalg::hermitian_part(&x))
}

/// Theoretical `L`-block second-order statistics of the signal.
#[derive(Clone, Debug)]
pub struct SignalStats {
    /// Hankel depth.
    pub l: usize,
    /// `R_u^L`, covariance of `(u_n, …, u_{n+L−1})`.
    pub ru: CMat,
    /// `R_{f|p}^L`, cross-covariance of the future block with the past block.
    pub rfp: CMat,
    /// Orthonormal eigenvectors of `R_u^L` for its nonzero eigenvalues.
    pub theta: CMat,
    /// Nonzero eigenvalues of `R_u^L`, nonincreasing.
    pub delta2: Vec<f64>,
    /// `Θ^* R_{f|p} Θ`.
    pub gamma: CMat,
    /// `Δ^{−1} Γ Δ^{−1}`.
    pub omega: CMat,
    /// `Θ^* (I_L ⊗ R^{−1}) Θ`.
    pub gcca: CMat,
    /// Rank of `R_u^L`.
    pub r: usize,
    /// State dimension.
    pub p: usize,
}

/// Weighted Gram `Θ^* (I_L ⊗ diag(g(λ))) Θ`.
pub fn weighted_gram(theta: &CMat, lambda: &[f64], g: impl Fn(f64) -> f64) -> CMat {
    let m = lambda.len();
    let mut scaled = theta.clone();
    for i in 0..theta.nrows() {
        let w = c(g(lambda[i % m]));
        for j in 0..theta.ncols() {
            scaled[(i, j)] *= w;
        }
    }
    theta.adjoint() * scaled
}

/// Theoretical statistics of `model` at depth `l` against the noise covariance of `noise`.
pub fn theoretical_stats(model: &StateSpaceModel, noise: &NoiseModel, l: usize) -> Result<SignalStats> {
    let (p, k, m) = (model.p(), model.k(), model.m());
    if l < p {
        return invalid(format!("Hankel depth L = {l} must be at least P = {p}"));
    }
    if noise.m != m {
        return invalid(format!("noise dimension {} differs from model output dimension {m}", noise.m));
    }
    let rx = lyapunov_state_cov(&model.a, &model.b)?;
    let obs = model.observability(l);

    // Block lower-triangular Toeplitz map from (i_n, …, i_{n+L−1}) to the stacked outputs.
    let mut toep = CMat::zeros(m * l, k * l);
    let mut markov = vec![model.d.clone()];
    let mut ak_b = model.b.clone();
    for _ in 1..l {
        markov.push(&model.c * &ak_b);
        ak_b = &model.a * &ak_b;
    }
    for i in 0..l {
        for j in 0..=i {
            toep.view_mut((i * m, j * k), (m, k)).copy_from(&markov[i - j]);
        }
    }

    // R_u^L = F F^* with F = (O R_x^{1/2}, H); its thin SVD yields Θ and Δ².
    let (rx_vals, rx_vecs) = linalg::herm_eigh_desc(&rx);
    let rx_half = &rx_vecs
        * linalg::diag_real(&rx_vals.iter().map(|v| v.max(0.0).sqrt()).collect::<Vec<_>>())
        * rx_vecs.adjoint();
    let mut f = CMat::zeros(m * l, p + k * l);
    f.view_mut((0, 0), (m * l, p)).copy_from(&(&obs * &rx_half));
    f.view_mut((0, p), (m * l, k * l)).copy_from(&toep);
    let ru = &f * f.adjoint();

    let svd = f.clone().svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let largest = idx.first().map(|&i| sv[i] * sv[i]).unwrap_or(0.0);
    let tol = (1e-10f64).max(1e-8 * largest);
    let keep: Vec<usize> = idx.into_iter().filter(|&i| sv[i] * sv[i] > tol).collect();
    let r = keep.len();
    if r == 0 {
        return Err(Error::Degenerate("signal covariance is numerically zero".into()));
    }
    let delta2: Vec<f64> = keep.iter().map(|&i| sv[i] * sv[i]).collect();
    let mut theta = CMat::from_fn(m * l, r, |row, j| u[(row, keep[j])]);
    linalg::fix_column_phases(&mut theta);

    let g = &model.a * &rx * model.c.adjoint() + &model.b * model.d.adjoint();
    let rfp = &obs * g_controllability(&model.a, &g, l);

    let gamma = theta.adjoint() * &rfp * &theta;
    let dinv: Vec<f64> = delta2.iter().map(|d| 1.0 / d.sqrt()).collect();
    let dm = linalg::diag_real(&dinv);
    let omega = &dm * &gamma * &dm;
    let gcca = weighted_gram(&theta, &noise.lambda, |lam| 1.0 / lam);
    Ok(SignalStats { l, ru, rfp, theta, delta2, gamma, omega, gcca, r, p })
}

/// `(A^{L−1} G, …, A G, G)`.
fn g_controllability(a: &CMat, g: &CMat, l: usize) -> CMat {
    let (p, m) = (g.nrows(), g.ncols());
    let mut out = CMat::zeros(p, m * l);
    let mut blk = g.clone();
    for i in (0..l).rev() {
        out.view_mut((0, i * m), (p, m)).copy_from(&blk);
        blk = a * &blk;
    }
    out
}

/// Options for [`simulate_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Draw real Gaussian variables instead of circular complex ones.
    pub real_gaussian: bool,
}

fn gaussian(rng: &mut ChaCha8Rng, real: bool) -> C64 {
    if real {
        use rand::Rng;
        let x: f64 = rng.sample(rand_distr::StandardNormal);
        c(x)
    } else {
        linalg::complex_normal(rng)
    }
}

fn generate(
    signal: Option<&StateSpaceModel>,
    lambda: Option<&[f64]>,
    m: usize,
    total: usize,
    seed: u64,
    opts: SimOptions,
) -> Result<CMat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = CMat::zeros(m, total);
    let real = opts.real_gaussian;
    let mut state = None;
    if let Some(model) = signal {
        let rx = lyapunov_state_cov(&model.a, &model.b)?;
        let (vals, vecs) = linalg::herm_eigh_desc(&rx);
        let z = nalgebra::DVector::from_fn(model.p(), |_, _| gaussian(&mut rng, real));
        let scaled = nalgebra::DVector::from_fn(model.p(), |i, _| z[i] * vals[i].max(0.0).sqrt());
        state = Some(&vecs * scaled);
    }
    let sqrt_l: Option<Vec<f64>> = lambda.map(|l| l.iter().map(|v| v.sqrt()).collect());
    for n in 0..total {
        if let (Some(model), Some(x)) = (signal, state.as_mut()) {
            let i_n = nalgebra::DVector::from_fn(model.k(), |_, _| gaussian(&mut rng, real));
            let u = &model.c * &*x + &model.d * &i_n;
            y.column_mut(n).copy_from(&u);
            *x = &model.a * &*x + &model.b * &i_n;
        }
        if let Some(sl) = &sqrt_l {
            for i in 0..m {
                y[(i, n)] += gaussian(&mut rng, real) * sl[i];
            }
        }
    }
    Ok(y)
}

/// Simulate `N + 2L − 1` samples of `y_n = u_n + v_n`, deterministic in `seed`.
///
/// The state starts from its stationary law `N_c(0, R_x)`.
pub fn simulate(model: &StateSpaceModel, noise: &NoiseModel, n: usize, l: usize, seed: u64) -> Result<CMat> {
    simulate_with(model, noise, n, l, seed, SimOptions::default())
}

/// [`simulate`] with explicit options.
pub fn simulate_with(
    model: &StateSpaceModel,
    noise: &NoiseModel,
    n: usize,
    l: usize,
    seed: u64,
    opts: SimOptions,
) -> Result<CMat> {
    if n == 0 || l == 0 {
        return invalid("N and L must be positive");
    }
    if model.m() != noise.m {
        return invalid("model and noise dimensions differ");
    }
    generate(Some(model), Some(&noise.lambda), noise.m, n + 2 * l - 1, seed, opts)
}

/// Noise-only samples `y_n = v_n`.
pub fn simulate_noise(noise: &NoiseModel, n: usize, l: usize, seed: u64) -> Result<CMat> {
    if n == 0 || l == 0 {
        return invalid("N and L must be positive");
    }
    generate(None, Some(&noise.lambda), noise.m, n + 2 * l - 1, seed, SimOptions::default())
}

/// Signal-only samples `y_n = u_n`.
pub fn simulate_signal(model: &StateSpaceModel, n: usize, l: usize, seed: u64) -> Result<CMat> {
    if n == 0 || l == 0 {
        return invalid("N and L must be positive");
    }
    generate(Some(model), None, model.m(), n + 2 * l - 1, seed, SimOptions::default())
}

// ---------------------------------------------------------------------------
// Example models
// ---------------------------------------------------------------------------

/// `w_+` for `R = σ² I`: `σ² (1 + (1 + √(1 + 8c)) / 2)`.
pub fn w_plus_isotropic(cc: f64, sigma2: f64) -> f64 {
    sigma2 * (1.0 + 0.5 * (1.0 + (1.0 + 8.0 * cc).sqrt()))
}

/// A constructed model together with the outlier count it is designed to produce.
#[derive(Clone, Debug)]
pub struct ExampleModel {
    /// The realization.
    pub model: StateSpaceModel,
    /// Outlier count the construction targets.
    pub expected_s: usize,
    /// Whether the construction's sufficient condition for `expected_s` holds.
    pub expectation_met: bool,
    /// Eigenvalues of `R_u` (`L = 1`).
    pub delta2: Vec<f64>,
    /// State feedback coefficient.
    pub a: f64,
    /// Innovation gains.
    pub b: Vec<f64>,
}

/// Parameters of the `P = 1`, `K = r − 1` model whose autocovariance spectrum has `2r − 1` outliers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddSParams {
    /// Rank `r` of `R_u` (at least 2).
    pub r: usize,
    /// Output dimension.
    pub m: usize,
    /// Aspect ratio used to place `w_+`.
    pub c: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Common `δ_k = √(w_+ − σ²) + margin`.
    pub margin: f64,
    /// Explicit common `δ²`, overriding `margin` when set.
    pub delta2: Option<f64>,
    /// State coefficient `a`; the gains are then `b_k = δ √((1 − a²)/K)`.
    pub a: f64,
    /// Seed of the Haar draw of `Θ`.
    pub seed: u64,
}

impl OddSParams {
    /// Default construction: margin 0.3 and `a = 0.2`.
    pub fn new(r: usize, m: usize, cc: f64, sigma: f64, seed: u64) -> Self {
        Self { r, m, c: cc, sigma, margin: 0.3, delta2: None, a: 0.2, seed }
    }
}

/// Build the odd-outlier-count model with default parameters.
pub fn example_model_odd_s(r: usize, m: usize, cc: f64, sigma: f64, seed: u64) -> Result<ExampleModel> {
    example_model_odd_s_with(&OddSParams::new(r, m, cc, sigma, seed))
}

/// Build `x_{n+1} = a x_n + Σ b_k i_{k,n}`, `u_n = θ_1 x_n + Σ δ_{k+1} θ_{k+1} i_{k,n}`.
///
/// All `δ_k` are equal, the `b_k` are equal, `a = (1 − Σ b_k² / δ_1²)^{1/2}`,
/// and the sufficient inequality for `s = 2r − 1` is checked before returning.
pub fn example_model_odd_s_with(p: &OddSParams) -> Result<ExampleModel> {
    if p.r < 2 {
        return invalid("the odd-s construction needs r >= 2 (K = r − 1 >= 1)");
    }
    if p.m < p.r {
        return invalid("M must be at least r");
    }
    if !(p.a > 0.0 && p.a < 1.0) {
        return invalid("a must lie in (0, 1)");
    }
    if !(p.c > 0.0 && p.c < 1.0) || !(p.sigma > 0.0) {
        return invalid("need 0 < c < 1 and sigma > 0");
    }
    let s2 = p.sigma * p.sigma;
    let q = w_plus_isotropic(p.c, s2) - s2;
    let delta2 = p.delta2.unwrap_or_else(|| (q.sqrt() + p.margin).powi(2));
    if !(delta2 > q) {
        return Err(Error::InvalidInput(format!("δ² = {delta2} must exceed w_+ − σ² = {q}")));
    }
    let k = p.r - 1;
    let delta = delta2.sqrt();
    let b = vec![delta * ((1.0 - p.a * p.a) / k as f64).sqrt(); k];
    let sum_b2: f64 = b.iter().map(|x| x * x).sum();
    let a = (1.0 - sum_b2 / delta2).sqrt();
    let kk = s2 * p.c / (s2 * p.c + q);
    // With equal δ_k the ratio factors of the general inequality are all 1.
    let gap = 1.0 - q / delta2;
    let rhs = kk * gap * gap - sum_b2 / delta2;
    if !(a * a > rhs) {
        return Err(Error::InvalidInput("parameters violate the s = 2r − 1 inequality".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let theta = linalg::haar_orthonormal(&mut rng, p.m, p.r);
    let am = CMat::from_element(1, 1, c(a));
    let bm = CMat::from_fn(1, k, |_, j| c(b[j]));
    let cm = theta.columns(0, 1).into_owned();
    let dm = CMat::from_fn(p.m, k, |i, j| theta[(i, j + 1)] * delta);
    let model = StateSpaceModel::new(am, bm, cm, dm)?;
    Ok(ExampleModel { model, expected_s: 2 * p.r - 1, expectation_met: true, delta2: vec![delta2; p.r], a, b })
}

/// Parameters of the `P = K = r = 1` model `u_n = θ x_{n+1}` with two outliers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct S2Params {
    /// Output dimension.
    pub m: usize,
    /// Aspect ratio used to place `w_+`.
    pub c: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    /// `δ² − (w_+ − σ²)`; must be positive.
    pub delta2_excess: f64,
    /// `a` as a fraction of its upper bound `√k (1 − (w_+ − σ²)/δ²)`.
    pub a_fraction: f64,
    /// Seed of the unit vector `θ`.
    pub seed: u64,
}

impl S2Params {
    /// `δ² = (w_+ − σ²) + 1` and `a` at 90% of its bound.
    pub fn new(m: usize, cc: f64, sigma: f64, seed: u64) -> Self {
        Self { m, c: cc, sigma, delta2_excess: 1.0, a_fraction: 0.9, seed }
    }
}

/// Build the two-outlier model with default parameters.
pub fn example_model_s2(m: usize, cc: f64, sigma: f64, seed: u64) -> Result<ExampleModel> {
    example_model_s2_with(&S2Params::new(m, cc, sigma, seed))
}

/// Build `x_{n+1} = a x_n + b i_n`, `u_n = θ x_{n+1}`.
///
/// When `a` is at or above its bound the model is still returned, with
/// `expectation_met = false`.
pub fn example_model_s2_with(p: &S2Params) -> Result<ExampleModel> {
    if !(p.c > 0.0 && p.c < 1.0) || !(p.sigma > 0.0) || p.m == 0 {
        return invalid("need M >= 1, 0 < c < 1 and sigma > 0");
    }
    if !(p.delta2_excess > 0.0) {
        return invalid("δ² must exceed w_+ − σ²");
    }
    let s2 = p.sigma * p.sigma;
    let q = w_plus_isotropic(p.c, s2) - s2;
    let delta2 = q + p.delta2_excess;
    let kk = s2 * p.c / (s2 * p.c + q);
    let bound = kk.sqrt() * (1.0 - q / delta2);
    let a = p.a_fraction * bound;
    if !(a > 0.0 && a < 1.0) {
        return invalid(format!("a = {a} must lie in (0, 1)"));
    }
    let b = (delta2 * (1.0 - a * a)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let theta = linalg::haar_orthonormal(&mut rng, p.m, 1);
    let model = StateSpaceModel::new(
        CMat::from_element(1, 1, c(a)),
        CMat::from_element(1, 1, c(b)),
        &theta * c(a),
        &theta * c(b),
    )?;
    Ok(ExampleModel { model, expected_s: 2, expectation_met: a < bound, delta2: vec![delta2], a, b: vec![b] })
}

/// Named parameterizations used by the experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Preset {
    /// Monte-Carlo tables: `R = I`, `K = 2`, `r = 3`, `a = 0.2`, `δ = √(w_+ − 1) + 0.3`, `L = 1`.
    Table,
    /// Odd-s model with `R = I`, `L = 1`, `K = 2`, `a = 0.2` and a common `δ²`.
    CcaSnr {
        /// Common `δ²` (equal to the SNR since `σ = 1`).
        delta2: f64,
    },
    /// Odd-s model of the first autocovariance figures (`r = 2` or `3`), `L = 1`.
    OddS {
        /// Rank of `R_u`.
        r: usize,
    },
    /// Two-outlier model, `L = 1`.
    S2,
    /// Canonical-correlation figure model: `P = 2`, `K = 1`, `L = 4`, cosine noise spectrum.
    CcaFig {
        /// Target number of canonical-correlation outliers (1 or 2).
        outliers: usize,
    },
    /// Noise only (no signal).
    NoiseOnly {
        /// Hankel depth.
        l: usize,
    },
}

impl Preset {
    /// Hankel depth used by the preset.
    pub fn depth(&self) -> usize {
        match self {
            Preset::CcaFig { .. } => 4,
            Preset::NoiseOnly { l } => *l,
            _ => 1,
        }
    }
}

/// Seed used for the fixed random directions (`Θ`, `θ`, `C`) of preset models.
pub const PRESET_MODEL_SEED: u64 = 0x5e_ed0f_7e57;

/// Build the signal model (if any) and noise model of a preset at dimensions `(M, N)`.
pub fn mc_model(preset: &Preset, m: usize, n: usize) -> Result<(Option<StateSpaceModel>, NoiseModel)> {
    let l = preset.depth();
    match preset {
        Preset::Table => {
            let noise = NoiseModel::isotropic(m, l, n, 1.0)?;
            let p = OddSParams::new(3, m, noise.c, 1.0, PRESET_MODEL_SEED);
            Ok((Some(example_model_odd_s_with(&p)?.model), noise))
        }
        Preset::CcaSnr { delta2 } => {
            let noise = NoiseModel::isotropic(m, l, n, 1.0)?;
            let mut p = OddSParams::new(3, m, noise.c, 1.0, PRESET_MODEL_SEED);
            p.delta2 = Some(*delta2);
            Ok((Some(cca_snr_model(&p)?), noise))
        }
        Preset::OddS { r } => {
            let noise = NoiseModel::isotropic(m, l, n, 1.0)?;
            let p = OddSParams::new(*r, m, noise.c, 1.0, PRESET_MODEL_SEED);
            Ok((Some(example_model_odd_s_with(&p)?.model), noise))
        }
        Preset::S2 => {
            let noise = NoiseModel::isotropic(m, l, n, 1.0)?;
            Ok((Some(example_model_s2(m, noise.c, 1.0, PRESET_MODEL_SEED)?.model), noise))
        }
        Preset::CcaFig { outliers } => {
            let noise = NoiseModel::cosine(m, l, n)?;
            Ok((Some(cca_fig_model(m, *outliers)?), noise))
        }
        Preset::NoiseOnly { .. } => Ok((None, NoiseModel::isotropic(m, l, n, 1.0)?)),
    }
}

/// Odd-s structure with an explicit common `δ²`, without the autocovariance inequality check.
fn cca_snr_model(p: &OddSParams) -> Result<StateSpaceModel> {
    let delta2 = p.delta2.expect("explicit δ²");
    if !(delta2 > 0.0) {
        return invalid("δ² must be positive");
    }
    let k = p.r - 1;
    let delta = delta2.sqrt();
    let b = delta * ((1.0 - p.a * p.a) / k as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let theta = linalg::haar_orthonormal(&mut rng, p.m, p.r);
    StateSpaceModel::new(
        CMat::from_element(1, 1, c(p.a)),
        CMat::from_element(1, k, c(b)),
        theta.columns(0, 1).into_owned(),
        CMat::from_fn(p.m, k, |i, j| theta[(i, j + 1)] * delta),
    )
}

/// State poles and output gain of the canonical-correlation figure models.
pub fn cca_fig_parameters(outliers: usize) -> Result<(f64, f64, f64)> {
    match outliers {
        1 => Ok((0.9, 0.2, 1.0)),
        2 => Ok((0.9, -0.9, 1.5)),
        _ => invalid("the figure models target 1 or 2 outliers"),
    }
}

/// `P = 2`, `K = 1`, `A = diag(a_1, a_2)`, `B = (√(1−a_1²), √(1−a_2²))^T`,
/// `C = g Θ` with Haar `Θ` and `D = 0`.
pub fn cca_fig_model(m: usize, outliers: usize) -> Result<StateSpaceModel> {
    let (a1, a2, gain) = cca_fig_parameters(outliers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(PRESET_MODEL_SEED);
    let theta = linalg::haar_orthonormal(&mut rng, m, 2);
    let a = CMat::from_fn(2, 2, |i, j| if i == j { c([a1, a2][i]) } else { c(0.0) });
    let b = CMat::from_fn(2, 1, |i, _| c((1.0 - [a1, a2][i].powi(2)).sqrt()));
    StateSpaceModel::new(a, b, &theta * c(gain), CMat::zeros(m, 1))
}
