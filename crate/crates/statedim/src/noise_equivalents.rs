//! Deterministic equivalents for the two noise-only matrix models.
//!
//! * Autocovariance model: the eigenvalue distribution of `W_f W_p^* W_p W_f^*`
//!   built from block-Hankel matrices of a white noise with covariance `R`.
//!   Its Stieltjes transform is driven by the scalar fixed point
//!
//!   ```text
//!   t = (1/M) Σ_k λ_k / (−z − z c t λ_k / (1 − z c² t²))
//!   ```
//!
//!   and its support is described through
//!   `φ(w) = c w² m(w) (c m(w) − 1)`, `m(w) = (1/M) Σ_k λ_k / (λ_k − w)`.
//!
//! * Projector-product model: the canonical correlations between the row
//!   spaces of two independent-noise block-Hankel matrices, whose law is a free
//!   multiplicative convolution of two Bernoulli laws with closed-form
//!   Stieltjes transforms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{c, C64};

/// Noise dimensions and the spectrum of its spatial covariance `R`.
///
/// `R` is taken diagonal in the canonical basis: `R = diag(lambda)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Cross-section dimension.
    pub m: usize,
    /// Hankel depth (number of block rows).
    pub l: usize,
    /// Sample size (number of Hankel columns).
    pub n: usize,
    /// Eigenvalues of `R`, nonincreasing.
    pub lambda: Vec<f64>,
    /// Aspect ratio `M L / N`.
    pub c: f64,
}

impl NoiseModel {
    /// Validate dimensions and spectrum. `lambda` is sorted nonincreasing.
    pub fn new(m: usize, l: usize, n: usize, mut lambda: Vec<f64>) -> Result<Self> {
        if m == 0 || l == 0 || n == 0 {
            return invalid("M, L and N must be positive");
        }
        if lambda.len() != m {
            return invalid(format!("spectrum has {} entries, expected M = {m}", lambda.len()));
        }
        if lambda.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return invalid("noise eigenvalues must be finite and strictly positive");
        }
        let c = (m * l) as f64 / n as f64;
        if !(c > 0.0 && c < 1.0) {
            return invalid(format!("aspect ratio c = ML/N = {c} must lie in (0, 1)"));
        }
        lambda.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { m, l, n, lambda, c })
    }

    /// `R = sigma2 · I_M`.
    pub fn isotropic(m: usize, l: usize, n: usize, sigma2: f64) -> Result<Self> {
        Self::new(m, l, n, vec![sigma2; m])
    }

    /// Spectrum `λ_k = 1/2 + (π/4) cos(π (k−1) / (2M))`, normalized so that `(1/M) Tr R ≈ 1`.
    pub fn cosine(m: usize, l: usize, n: usize) -> Result<Self> {
        let pi = std::f64::consts::PI;
        let lambda = (0..m)
            .map(|k| 0.5 + 0.25 * pi * (pi * k as f64 / (2.0 * m as f64)).cos())
            .collect();
        Self::new(m, l, n, lambda)
    }

    /// `(1/M) Tr R`.
    pub fn trace_mean(&self) -> f64 {
        self.lambda.iter().sum::<f64>() / self.m as f64
    }

    /// Largest eigenvalue of `R`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda[0]
    }

    /// `m(w) = (1/M) Σ λ_k / (λ_k − w)` and its derivative `(1/M) Σ λ_k / (λ_k − w)²`.
    pub fn m_tilde(&self, w: f64) -> (f64, f64) {
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for &l in &self.lambda {
            let d = l - w;
            m0 += l / d;
            m1 += l / (d * d);
        }
        let inv = 1.0 / self.m as f64;
        (m0 * inv, m1 * inv)
    }

    fn distinct_eigenvalues(&self) -> Vec<f64> {
        let mut d: Vec<f64> = Vec::new();
        for &l in &self.lambda {
            if d.last().is_none_or(|&p: &f64| (p - l).abs() > 1e-12 * p.abs().max(1.0)) {
                d.push(l);
            }
        }
        d
    }
}

/// Tuning knobs of the autocovariance solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Damping of the Picard iteration `t ← (1−γ) t + γ RHS(t)`.
    pub damping: f64,
    /// Maximum number of Picard iterations.
    pub max_iter: usize,
    /// Stopping tolerance on successive iterates (relative to `max(1, |t|)`).
    pub tol: f64,
    /// Imaginary offset used to take boundary values on the real axis.
    pub epsilon: f64,
    /// Combine the evaluations at `ε` and `ε/10` by Richardson extrapolation.
    pub richardson: bool,
    /// Left margin excluded near 0, where the autocovariance density diverges.
    pub left_margin: f64,
    /// Number of points in the log grid used to bracket the edge root.
    pub edge_grid: usize,
    /// Upper end of the edge search, as a multiple of `λ_1`.
    pub edge_wmax_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iter: 10_000,
            tol: 1e-12,
            epsilon: 1e-6,
            richardson: false,
            left_margin: 1e-3,
            edge_grid: 10_000,
            edge_wmax_factor: 1e3,
        }
    }
}

/// Right edge of the autocovariance support together with all its intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportAutocov {
    /// Ordered disjoint closed intervals; the first starts at 0.
    pub intervals: Vec<(f64, f64)>,
    /// Largest critical point of `φ`, located above `λ_1`.
    pub w_plus: f64,
    /// Right edge `φ(w_plus)`.
    pub x_plus: f64,
}

/// Support of the projector-product law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCca {
    /// `4 c (1 − c)`.
    pub bulk_right: f64,
    /// True iff `c > 1/2`.
    pub has_unit_atom: bool,
    /// `max(2c − 1, 0)`: mass of the eigenvalue 1 in the spectrum of the `N x N` product `Π_p Π_f`.
    pub atom_mass_at_one: f64,
}

/// Absolutely continuous density on a grid plus point masses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    /// Strictly increasing abscissae.
    pub grid: Vec<f64>,
    /// Nonnegative density values on `grid`.
    pub density: Vec<f64>,
    /// `(location, mass)` pairs.
    pub atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    /// Trapezoid integral of the density over the grid.
    pub fn continuous_mass(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    /// Continuous mass plus atoms.
    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atoms.iter().map(|a| a.1).sum::<f64>()
    }

    /// True when the total mass is within `tol` of 1 and the density is nonnegative.
    pub fn is_probability(&self, tol: f64) -> bool {
        (self.total_mass() - 1.0).abs() <= tol && self.density.iter().all(|d| *d >= 0.0)
    }

    /// Cumulative distribution on the grid, assuming `missing_left` mass sits left of the grid.
    ///
    /// Atoms are added once the grid passes their location.
    pub fn cdf_on_grid(&self, missing_left: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut acc = missing_left;
        for i in 0..self.grid.len() {
            if i > 0 {
                acc += 0.5 * (self.density[i] + self.density[i - 1]) * (self.grid[i] - self.grid[i - 1]);
            }
            let atoms: f64 = self.atoms.iter().filter(|a| a.0 <= self.grid[i]).map(|a| a.1).sum();
            out.push(acc + atoms);
        }
        out
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (ys[0] + ys[1]) * (xs[1] - xs[0]))
        .sum()
}

/// Result of [`density_autocov`]: the density on the grid and the mass it misses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocovDensity {
    /// Density of the probability law on the requested grid (no atoms).
    pub measure: SpectralMeasure,
    /// `1 −` integral of the density: the mass carried left of the grid, near 0.
    pub residual_mass: f64,
}

// ---------------------------------------------------------------------------
// Autocovariance side
// ---------------------------------------------------------------------------

/// `u(t) = z c t / (1 − z c² t²)`, the coefficient multiplying `R` in `T(z)`.
#[inline]
fn u_coef(z: C64, cc: f64, t: C64) -> C64 {
    z * cc * t / (c(1.0) - z * cc * cc * t * t)
}

/// Right-hand side of the fixed point and its derivative in `t`.
fn rhs_and_derivative(noise: &NoiseModel, z: C64, t: C64) -> (C64, C64) {
    let cc = noise.c;
    let den = c(1.0) - z * cc * cc * t * t;
    let u = z * cc * t / den;
    let du = z * cc * (c(1.0) + z * cc * cc * t * t) / (den * den);
    let mut s = C64::new(0.0, 0.0);
    let mut ds = C64::new(0.0, 0.0);
    for &l in &noise.lambda {
        let q = -z - u * l;
        s += l / q;
        ds += l * l / (q * q);
    }
    let inv = 1.0 / noise.m as f64;
    (s * inv, ds * du * inv)
}

/// Residual `|t − RHS(t)|` of the autocovariance fixed point.
pub fn autocov_residual(noise: &NoiseModel, z: C64, t: C64) -> f64 {
    (t - rhs_and_derivative(noise, z, t).0).norm()
}

fn check_off_axis(z: C64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return invalid("z must be finite");
    }
    if z.im == 0.0 && z.re >= 0.0 {
        return invalid(format!("z = {z} lies on the nonnegative real axis"));
    }
    Ok(())
}

fn branch_ok(z: C64, t: C64) -> bool {
    if z.im > 0.0 {
        let slack = 1e-13 * t.norm().max(1e-300);
        t.im > -slack && (z * t).im > -slack * z.norm()
    } else if z.im < 0.0 {
        branch_ok(z.conj(), t.conj())
    } else {
        t.im.abs() <= 1e-12 * t.norm().max(1e-300)
    }
}

fn newton_polish(noise: &NoiseModel, z: C64, mut t: C64, iters: usize) -> C64 {
    for _ in 0..iters {
        let (r, dr) = rhs_and_derivative(noise, z, t);
        let f = t - r;
        let df = c(1.0) - dr;
        if df.norm() == 0.0 || !df.re.is_finite() {
            break;
        }
        let step = f / df;
        let next = t - step;
        if !next.re.is_finite() || !next.im.is_finite() {
            break;
        }
        t = next;
        if step.norm() <= 1e-15 * t.norm().max(1e-300) {
            break;
        }
    }
    t
}

fn converged(noise: &NoiseModel, z: C64, t: C64) -> bool {
    autocov_residual(noise, z, t) < 1e-10 && branch_ok(z, t)
}

/// Solve the autocovariance fixed point at `z ∉ ℝ⁺` with the default options.
pub fn solve_t_autocov(noise: &NoiseModel, z: C64) -> Result<C64> {
    solve_t_autocov_with(noise, z, &SolverOptions::default())
}

/// Solve the autocovariance fixed point at `z ∉ ℝ⁺`.
///
/// Damped Picard iteration from `t₀ = −(1/M) Tr R / z`, followed by Newton
/// steps on the scalar residual. For `z ∈ ℂ⁺` the admissible solution has
/// `Im t > 0` and `Im(z t) > 0`; a solution violating this is rejected.
pub fn solve_t_autocov_with(noise: &NoiseModel, z: C64, opts: &SolverOptions) -> Result<C64> {
    check_off_axis(z)?;
    let t0 = -c(noise.trace_mean()) / z;
    let g = opts.damping;
    let mut t = t0;
    for _ in 0..opts.max_iter {
        let (r, _) = rhs_and_derivative(noise, z, t);
        let next = t * (1.0 - g) + r * g;
        let delta = (next - t).norm();
        t = next;
        if delta <= opts.tol * t.norm().max(1.0) {
            break;
        }
    }
    let polished = newton_polish(noise, z, t, 50);
    if converged(noise, z, polished) {
        return Ok(polished);
    }
    // Newton from the initial guess as a last resort.
    let fallback = newton_polish(noise, z, t0, 200);
    if converged(noise, z, fallback) {
        return Ok(fallback);
    }
    Err(Error::NoConvergence(format!(
        "autocovariance fixed point at z = {z}: residual {:.3e}",
        autocov_residual(noise, z, polished)
    )))
}

/// Newton continuation from a warm start; used when walking towards the real axis.
pub fn solve_t_autocov_from(noise: &NoiseModel, z: C64, start: C64) -> Result<C64> {
    check_off_axis(z)?;
    let t = newton_polish(noise, z, start, 100);
    if converged(noise, z, t) {
        Ok(t)
    } else {
        solve_t_autocov(noise, z)
    }
}

/// `φ(w) = c w² m(w) (c m(w) − 1)` and its derivative.
pub fn phi_autocov(noise: &NoiseModel, w: f64) -> Result<(f64, f64)> {
    if !w.is_finite() {
        return invalid("w must be finite");
    }
    if noise.lambda.contains(&w) {
        return invalid(format!("w = {w} is an eigenvalue of R"));
    }
    Ok(phi_unchecked(noise, w))
}

fn phi_unchecked(noise: &NoiseModel, w: f64) -> (f64, f64) {
    let cc = noise.c;
    let (m, dm) = noise.m_tilde(w);
    let phi = cc * w * w * m * (cc * m - 1.0);
    let dphi = cc * (2.0 * w * m * (cc * m - 1.0) + w * w * dm * (2.0 * cc * m - 1.0));
    (phi, dphi)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Right edge of the autocovariance support.
pub fn support_edge_autocov(noise: &NoiseModel) -> Result<SupportAutocov> {
    support_edge_autocov_with(noise, &SolverOptions::default())
}

/// Right edge of the autocovariance support with explicit search options.
///
/// `w_plus` is the largest root of `φ'` above `λ_1`, bracketed on a log grid
/// over `(λ_1 (1 + 10⁻⁶), λ_1 · wmax_factor)` and refined by bisection.
pub fn support_edge_autocov_with(noise: &NoiseModel, opts: &SolverOptions) -> Result<SupportAutocov> {
    let l1 = noise.lambda_max();
    let lo = (l1 * (1.0 + 1e-6)).ln();
    let hi = (l1 * opts.edge_wmax_factor).ln();
    let n = opts.edge_grid.max(2);
    let dphi = |w: f64| phi_unchecked(noise, w).1;
    let pts: Vec<f64> = (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect();
    let vals: Vec<f64> = pts.iter().map(|&w| dphi(w)).collect();
    let k = (1..n).rev().find(|&i| (vals[i - 1] > 0.0) != (vals[i] > 0.0)).ok_or_else(|| {
        Error::BracketNotFound(format!(
            "no sign change of φ' on ({:.6e}, {:.6e})",
            l1 * (1.0 + 1e-6),
            l1 * opts.edge_wmax_factor
        ))
    })?;
    let w_plus = bisect(dphi, pts[k - 1], pts[k]);
    let x_plus = phi_unchecked(noise, w_plus).0;
    if !(x_plus > 0.0) {
        return Err(Error::Degenerate(format!("edge value φ(w+) = {x_plus} is not positive")));
    }
    Ok(SupportAutocov { intervals: vec![(0.0, x_plus)], w_plus, x_plus })
}

/// Full support of the autocovariance law as a list of intervals.
///
/// Enumerates the critical points of `φ` in every gap of the spectrum of `R`
/// that satisfy `w m(w) < 0`; their images are the inner endpoints.
pub fn autocov_support(noise: &NoiseModel) -> Result<SupportAutocov> {
    let edge = support_edge_autocov(noise)?;
    let d = noise.distinct_eigenvalues();
    let mut inner: Vec<f64> = Vec::new();
    for pair in d.windows(2) {
        let (hi, lo) = (pair[0], pair[1]);
        let span = hi - lo;
        let n = 4000;
        // Chebyshev-like spacing clusters points near the poles at both ends.
        let pts: Vec<f64> = (1..n)
            .map(|i| {
                let th = std::f64::consts::PI * i as f64 / n as f64;
                lo + span * 0.5 * (1.0 - th.cos())
            })
            .collect();
        let vals: Vec<f64> = pts.iter().map(|&w| phi_unchecked(noise, w).1).collect();
        for i in 1..pts.len() {
            if (vals[i - 1] > 0.0) != (vals[i] > 0.0) {
                let w = bisect(|w| phi_unchecked(noise, w).1, pts[i - 1], pts[i]);
                let (m, _) = noise.m_tilde(w);
                let x = phi_unchecked(noise, w).0;
                if w * m < 0.0 && x > 0.0 && x < edge.x_plus {
                    inner.push(x);
                }
            }
        }
    }
    inner.sort_by(f64::total_cmp);
    let mut intervals = Vec::new();
    let mut left = 0.0;
    let mut it = inner.chunks_exact(2);
    for pair in &mut it {
        intervals.push((left, pair[0]));
        left = pair[1];
    }
    if !it.remainder().is_empty() {
        return Err(Error::Degenerate(format!(
            "odd number of inner support endpoints: {inner:?}"
        )));
    }
    intervals.push((left, edge.x_plus));
    Ok(SupportAutocov { intervals, ..edge })
}

/// The unique `w > w_plus` with `φ(w) = x`, for `x > x_plus`.
pub fn w_of_x(noise: &NoiseModel, edge: &SupportAutocov, x: f64) -> Result<f64> {
    if !(x > edge.x_plus) || !x.is_finite() {
        return invalid(format!("x = {x} must exceed x_plus = {}", edge.x_plus));
    }
    let f = |w: f64| phi_unchecked(noise, w).0 - x;
    let lo = edge.w_plus;
    let mut hi = edge.w_plus * 2.0;
    let mut guard = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::BracketNotFound(format!("φ(w) never reaches x = {x}")));
        }
    }
    Ok(bisect(f, lo, hi))
}

/// Stieltjes transform of the probability law at `z`: `(1/M) Σ −1/(z + u λ_k)`.
fn nu_stieltjes(noise: &NoiseModel, z: C64, t: C64) -> C64 {
    let u = u_coef(z, noise.c, t);
    let s: C64 = noise.lambda.iter().map(|&l| -c(1.0) / (z + u * l)).sum();
    s / noise.m as f64
}

/// Boundary value of the fixed-point solution at `x + iε`, reached by a
/// continuation in `ε` from a well-conditioned starting height.
fn boundary_t(noise: &NoiseModel, x: f64, eps: f64, scale: f64) -> Result<C64> {
    let mut h = scale.max(eps);
    let mut t = solve_t_autocov(noise, C64::new(x, h))?;
    while h > eps {
        h = (h / 4.0).max(eps);
        t = solve_t_autocov_from(noise, C64::new(x, h), t)?;
    }
    Ok(t)
}

fn density_at(noise: &NoiseModel, x: f64, eps: f64, scale: f64) -> Result<f64> {
    let t = boundary_t(noise, x, eps, scale)?;
    let s = nu_stieltjes(noise, C64::new(x, eps), t);
    Ok((s.im / std::f64::consts::PI).max(0.0))
}

/// Density of the deterministic equivalent of the eigenvalue distribution of
/// `W_f W_p^* W_p W_f^*`, evaluated as `(1/π) Im s(x + iε)`.
pub fn density_autocov(noise: &NoiseModel, grid: &[f64], opts: &SolverOptions) -> Result<AutocovDensity> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("grid must be strictly increasing");
    }
    if grid.first().is_some_and(|&x| x <= 0.0) {
        return invalid("grid must lie in (0, x_plus]");
    }
    let scale = 0.1 * noise.trace_mean();
    let mut density = Vec::with_capacity(grid.len());
    for &x in grid {
        let d = density_at(noise, x, opts.epsilon, scale)?;
        let d = if opts.richardson {
            let d2 = density_at(noise, x, opts.epsilon / 10.0, scale)?;
            ((10.0 * d2 - d) / 9.0).max(0.0)
        } else {
            d
        };
        density.push(d);
    }
    let measure = SpectralMeasure { grid: grid.to_vec(), density, atoms: Vec::new() };
    let residual_mass = 1.0 - measure.continuous_mass();
    Ok(AutocovDensity { measure, residual_mass })
}

/// Evaluate the autocovariance density at arbitrary points (no grid constraints).
pub fn density_autocov_points(noise: &NoiseModel, xs: &[f64], eps: f64) -> Result<Vec<f64>> {
    let scale = 0.1 * noise.trace_mean();
    xs.iter().map(|&x| density_at(noise, x, eps, scale)).collect()
}

/// Grid on `[left_margin, x_plus]` refined geometrically near 0, where the density blows up.
pub fn default_autocov_grid(x_plus: f64, left_margin: f64, n: usize) -> Vec<f64> {
    let n = n.max(4);
    let n_log = n / 4;
    let n_lin = n - n_log;
    let split = 0.05 * x_plus;
    let a = left_margin.min(split * 0.5);
    let mut g: Vec<f64> = (0..n_log)
        .map(|i| (a.ln() + (split.ln() - a.ln()) * i as f64 / n_log as f64).exp())
        .collect();
    g.extend((0..n_lin).map(|i| split + (x_plus - split) * i as f64 / (n_lin - 1) as f64));
    g
}

// ---------------------------------------------------------------------------
// Projector-product side
// ---------------------------------------------------------------------------

fn check_ratio(cc: f64) -> Result<()> {
    if !(cc > 0.0 && cc < 1.0) {
        return invalid(format!("c = {cc} must lie in (0, 1)"));
    }
    Ok(())
}

/// Square root with argument in `[0, π)`, i.e. `√(r e^{iθ}) = √r e^{iθ/2}` for `θ ∈ [0, 2π)`.
pub fn sqrt_upper(w: C64) -> C64 {
    let s = w.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

fn in_cca_support(cc: f64, x: f64) -> bool {
    let b = 4.0 * cc * (1.0 - cc);
    (0.0..=b).contains(&x) || (cc > 0.5 && x == 1.0)
}

/// Real-axis value of `t̃` outside the support.
fn tilde_t_real(cc: f64, x: f64) -> f64 {
    let b = 4.0 * cc * (1.0 - cc);
    let r = (x * (x - b)).sqrt();
    if x < 0.0 {
        (x - 2.0 * (1.0 - cc) - r) / (2.0 * (1.0 - x) * x)
    } else if cc < 0.5 {
        // Rationalized form; finite at x = 1 where the direct formula is 0/0.
        2.0 * (1.0 - cc) * (1.0 - cc) / (x * (x - 2.0 * (1.0 - cc) - r))
    } else {
        (x - 2.0 * (1.0 - cc) + r) / (2.0 * (1.0 - x) * x)
    }
}

/// Stieltjes transform `t̃` of the law of the `N x N` projector product.
///
/// `t̃(z) = (z − 2(1−c) + √(z(z − 4c(1−c)))) / (2 (1 − z) z)` with the
/// square root taken with argument in `[0, π)`; real points outside the
/// support use the two explicit branches.
pub fn cca_stieltjes_tilde(cc: f64, z: C64) -> Result<C64> {
    check_ratio(cc)?;
    if z.im == 0.0 {
        if in_cca_support(cc, z.re) {
            return invalid(format!("z = {} lies in the support", z.re));
        }
        if z.re == 1.0 {
            // Removable singularity for c < 1/2.
            return Ok(c(-(1.0 - cc) * (1.0 - cc) / (1.0 - 2.0 * cc)));
        }
        return Ok(c(tilde_t_real(cc, z.re)));
    }
    if z.im < 0.0 {
        return cca_stieltjes_tilde(cc, z.conj()).map(|t| t.conj());
    }
    let b = 4.0 * cc * (1.0 - cc);
    let r = sqrt_upper(z * (z - b));
    Ok((z - 2.0 * (1.0 - cc) + r) / (c(2.0) * (c(1.0) - z) * z))
}

/// Stieltjes transform `t = t̃/c + (1 − c)/(c z)` of the canonical-correlation law.
pub fn cca_stieltjes(cc: f64, z: C64) -> Result<C64> {
    let tt = cca_stieltjes_tilde(cc, z)?;
    Ok(tt / cc + c(1.0 - cc) / (z * cc))
}

/// Residual of `z(1−z) t̃² + (2(1−c) − z) t̃ + (1−c)²/z = 0`.
pub fn cca_quadratic_residual(cc: f64, z: C64, tt: C64) -> f64 {
    (z * (c(1.0) - z) * tt * tt + (c(2.0 * (1.0 - cc)) - z) * tt + c((1.0 - cc) * (1.0 - cc)) / z).norm()
}

/// Support of the projector-product law.
pub fn cca_support(cc: f64) -> Result<SupportCca> {
    check_ratio(cc)?;
    let mass = (2.0 * cc - 1.0).max(0.0);
    Ok(SupportCca { bulk_right: 4.0 * cc * (1.0 - cc), has_unit_atom: mass > 0.0, atom_mass_at_one: mass })
}

/// Density of the canonical-correlation law on a grid inside the open bulk.
///
/// The atom at 1 (present when `c > 1/2`) carries mass `(2c − 1)/c`, which is
/// the share of the `ML` canonical correlations structurally equal to 1.
pub fn cca_density(cc: f64, grid: &[f64]) -> Result<SpectralMeasure> {
    check_ratio(cc)?;
    let b = 4.0 * cc * (1.0 - cc);
    if grid.iter().any(|&x| !(x > 0.0 && x < b)) {
        return invalid(format!("grid points must lie in (0, {b})"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("grid must be strictly increasing");
    }
    let density = grid
        .iter()
        .map(|&x| (x * (b - x)).sqrt() / (2.0 * std::f64::consts::PI * cc * x * (1.0 - x)))
        .collect();
    let atoms = if cc > 0.5 { vec![(1.0, (2.0 * cc - 1.0) / cc)] } else { Vec::new() };
    Ok(SpectralMeasure { grid: grid.to_vec(), density, atoms })
}

/// Cumulative distribution function of the canonical-correlation law.
///
/// Computed by Gauss-Chebyshev-friendly substitution `x = b sin²(θ/2)` which
/// removes the square-root endpoint singularities.
pub fn cca_cdf(cc: f64, x: f64) -> f64 {
    let b = 4.0 * cc * (1.0 - cc);
    if x <= 0.0 {
        return 0.0;
    }
    let atom = if cc > 0.5 && x >= 1.0 { (2.0 * cc - 1.0) / cc } else { 0.0 };
    let xe = x.min(b);
    // With x = b sin²(θ/2): dx = (b/2) sin θ dθ and √(x(b−x)) = (b/2) sin θ.
    let theta_max = 2.0 * (xe / b).sqrt().min(1.0).asin();
    let n = 2000;
    let h = theta_max / n as f64;
    let g = |th: f64| {
        let s = th.sin();
        let xv = b * (0.5 * th).sin().powi(2);
        if xv <= 0.0 {
            // Limit of (b/2 sinθ)² / (2π c x (1−x)) as θ → 0 is b/(2π c).
            return b / (2.0 * std::f64::consts::PI * cc);
        }
        (0.5 * b * s).powi(2) / (2.0 * std::f64::consts::PI * cc * xv * (1.0 - xv))
    };
    // Composite Simpson.
    let mut acc = g(0.0) + g(theta_max);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * h);
    }
    acc * h / 3.0 + atom
}

/// `f(x) = x (t̃(x) / ((1 − c) t(x)))²` on `[4c(1−c), 1]`.
pub fn f_ratio(cc: f64, x: f64) -> Result<f64> {
    check_ratio(cc)?;
    let b = 4.0 * cc * (1.0 - cc);
    if !(x >= b - 1e-15 && x <= 1.0) {
        return invalid(format!("x = {x} outside [{b}, 1]"));
    }
    if (x - b).abs() <= 1e-15 {
        return Ok(cc / (1.0 - cc));
    }
    if x == 1.0 {
        return Ok(if cc < 0.5 { 1.0 } else { (cc / (1.0 - cc)).powi(2) });
    }
    let tt = tilde_t_real(cc, x);
    let t = tt / cc + (1.0 - cc) / (cc * x);
    Ok(x * (tt / ((1.0 - cc) * t)).powi(2))
}
