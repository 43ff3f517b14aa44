//! Finite-`N` predictions of the sample eigenvalues that escape the noise bulk.
//!
//! Autocovariance side: the number of outliers is the number of negative
//! eigenvalues of the `2r x 2r` matrix `[[G, Γ^*], [Γ, G]]` built at the bulk
//! edge, and their locations are the zeros of the eigenvalue curves of a
//! Hermitian matrix function `H(y)`, `y > √x_+`.
//!
//! Canonical-correlation side: the outliers are the eigenvalues of a
//! `r x r` matrix `F` above `c/(1−c)`, mapped through the inverse of the
//! increasing function `f` on `(4c(1−c), 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, CMat};
use crate::noise_equivalents::{f_ratio, support_edge_autocov, w_of_x, NoiseModel, SupportAutocov};
use crate::state_space::{weighted_gram, SignalStats};

/// Which sample matrix an oracle refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Eigenvalues of `Σ_f Σ_p^* Σ_p Σ_f^*`.
    Autocov,
    /// Eigenvalues of `Π_p Π_f`.
    Cca,
}

/// Predicted outliers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeReport {
    /// Number of outliers.
    pub s: usize,
    /// Outlier locations, nonincreasing.
    pub rho: Vec<f64>,
    /// Eigenvalues of the decision matrix (ascending for autocov, descending for cca).
    pub oracle_eigs: Vec<f64>,
    /// Bulk right edge.
    pub edge: f64,
    /// Matrix model.
    pub model_kind: ModelKind,
    /// A decision eigenvalue lies too close to its threshold for the count to be trusted.
    pub degenerate: bool,
    /// `c ≥ 1/2` on the canonical-correlation side: no eigenvalue escapes.
    pub no_escape: bool,
    /// Some `F` eigenvalue exceeds `c/(1−c)` by less than the margin `κ`.
    pub marginal: bool,
}

/// Edge Gram `G = (c w_+/√x_+) m(w_+) [S^{−1} − Δ²]` with
/// `m(w) = (1/M) Tr R (wI − R)^{−1}` and `S = Θ^* (I_L ⊗ (w_+ I − R)^{−1}) Θ`.
pub fn edge_gram_autocov(noise: &NoiseModel, stats: &SignalStats, edge: &SupportAutocov) -> Result<CMat> {
    let w = edge.w_plus;
    let m = -noise.m_tilde(w).0;
    let coef = noise.c * w * m / edge.x_plus.sqrt();
    let s = weighted_gram(&stats.theta, &noise.lambda, |l| 1.0 / (w - l));
    let s_inv = s.try_inverse().ok_or_else(|| Error::Degenerate("singular inner Gram at the edge".into()))?;
    let d2 = linalg::diag_real(&stats.delta2);
    Ok((s_inv - d2) * c(coef))
}

/// `[[G, Γ^*], [Γ, G]]`.
pub fn edge_matrix_autocov(g: &CMat, gamma: &CMat) -> CMat {
    let r = g.nrows();
    let mut out = CMat::zeros(2 * r, 2 * r);
    out.view_mut((0, 0), (r, r)).copy_from(g);
    out.view_mut((r, r), (r, r)).copy_from(g);
    out.view_mut((0, r), (r, r)).copy_from(&gamma.adjoint());
    out.view_mut((r, 0), (r, r)).copy_from(gamma);
    out
}

/// Count of negative edge eigenvalues, with the ascending eigenvalues and a degeneracy flag.
fn count_negative(mat: &CMat) -> (usize, Vec<f64>, bool) {
    let eigs = linalg::herm_eigvals_asc(mat);
    let scale = eigs.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let thr = 1e-10 * scale;
    let s = eigs.iter().filter(|&&e| e < -thr).count();
    let degenerate = eigs.iter().any(|&e| e.abs() <= thr);
    (s, eigs, degenerate)
}

/// Number of outliers of the autocovariance spectrum predicted at the edge.
pub fn autocov_spike_count(noise: &NoiseModel, stats: &SignalStats) -> Result<usize> {
    let edge = support_edge_autocov(noise)?;
    let g = edge_gram_autocov(noise, stats, &edge)?;
    let (s, _, degenerate) = count_negative(&edge_matrix_autocov(&g, &stats.gamma));
    if degenerate {
        return Err(Error::Degenerate("an edge eigenvalue vanishes; the count is ill-defined".into()));
    }
    Ok(s)
}

/// `H(y)` for `y > √x_+`.
///
/// With `w = w(y²)`, `m = (1/M) Tr R (wI − R)^{−1}`, `τ = −c w m / y` and `D = 1 − τ²`:
///
/// ```text
/// H(y) = [[ (τ/D) Δ² + (y/w) S(w)^{−1},  Γ^*/D ],
///         [ Γ/D,  (τ/D) Δ² + (y/w) S(w)^{−1} ]]
/// ```
///
/// where `S(w) = Θ^* (I_L ⊗ (wI − R)^{−1}) Θ`. At `y = √x_+` it reduces to
/// `(1 + c m) [[G, Γ^*], [Γ, G]]`.
pub fn h_matrix(noise: &NoiseModel, stats: &SignalStats, edge: &SupportAutocov, y: f64) -> Result<CMat> {
    if !(y > edge.x_plus.sqrt()) {
        return invalid(format!("y = {y} must exceed √x_plus = {}", edge.x_plus.sqrt()));
    }
    let w = w_of_x(noise, edge, y * y)?;
    h_at_w(noise, stats, y, w)
}

fn h_at_w(noise: &NoiseModel, stats: &SignalStats, y: f64, w: f64) -> Result<CMat> {
    let m = -noise.m_tilde(w).0;
    let tau = -noise.c * w * m / y;
    let dd = 1.0 - tau * tau;
    let s = weighted_gram(&stats.theta, &noise.lambda, |l| 1.0 / (w - l));
    let s_inv = s.try_inverse().ok_or_else(|| Error::Degenerate("singular T_β".into()))?;
    let diag = linalg::diag_real(&stats.delta2) * c(tau / dd) + s_inv * c(y / w);
    let g = linalg::hermitian_part(&diag);
    let gamma = &stats.gamma / c(dd);
    Ok(edge_matrix_autocov(&g, &gamma))
}

/// `H(√x_+)`, the boundary value of [`h_matrix`].
pub fn h_matrix_at_edge(noise: &NoiseModel, stats: &SignalStats, edge: &SupportAutocov) -> Result<CMat> {
    h_at_w(noise, stats, edge.x_plus.sqrt(), edge.w_plus)
}

/// Predicted autocovariance outliers: count at the edge, then zeros of the
/// ascending eigenvalue curves of `H(y)` located by bisection.
pub fn autocov_outliers(noise: &NoiseModel, stats: &SignalStats) -> Result<SpikeReport> {
    let edge = support_edge_autocov(noise)?;
    let g = edge_gram_autocov(noise, stats, &edge)?;
    let (s, eigs, degenerate) = count_negative(&edge_matrix_autocov(&g, &stats.gamma));
    let y0 = edge.x_plus.sqrt();
    let mut rho = Vec::with_capacity(s);
    if s > 0 {
        let lo0 = y0 * (1.0 + 1e-6);
        let eig_k = |y: f64, k: usize| -> Result<f64> {
            let h = h_matrix(noise, stats, &edge, y)?;
            Ok(linalg::herm_eigvals_asc(&h)[k])
        };
        // Grow the upper end until every curve is positive.
        let mut hi = 2.0 * y0;
        let mut guard = 0;
        while eig_k(hi, 0)? <= 0.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::BracketNotFound("H(y) never becomes positive definite".into()));
            }
        }
        for k in 0..s {
            let mut lo = lo0;
            let mut up = hi;
            if eig_k(lo, k)? >= 0.0 {
                return Err(Error::BracketNotFound(format!(
                    "eigenvalue curve {k} is not negative just above the edge"
                )));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + up);
                if mid <= lo || mid >= up {
                    break;
                }
                if eig_k(mid, k)? < 0.0 {
                    lo = mid;
                } else {
                    up = mid;
                }
                if up - lo <= 1e-14 * up {
                    break;
                }
            }
            let y = 0.5 * (lo + up);
            rho.push(y * y);
        }
        rho.sort_by(|a, b| b.total_cmp(a));
    }
    Ok(SpikeReport {
        s,
        rho,
        oracle_eigs: eigs,
        edge: edge.x_plus,
        model_kind: ModelKind::Autocov,
        degenerate,
        no_escape: false,
        marginal: false,
    })
}

/// `F = Ω^* (I + X)^{−1} Ω (I + X)^{−1}` with `X = Δ^{−1} G^{−1} Δ^{−1}`, `G = Θ^*(I_L ⊗ R^{−1})Θ`,
/// and its eigenvalues in descending order.
///
/// `F` is similar to the Hermitian positive semidefinite `K^{1/2} Ω^* K Ω K^{1/2}`,
/// `K = (I + X)^{−1}`, whose eigenvalues are returned.
pub fn cca_f_matrix(stats: &SignalStats) -> Result<(CMat, Vec<f64>)> {
    let r = stats.r;
    let ginv = stats
        .gcca
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular Θ^*(I⊗R^{-1})Θ".into()))?;
    if stats.delta2.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Degenerate("Δ is singular".into()));
    }
    let dinv = linalg::diag_real(&stats.delta2.iter().map(|d| 1.0 / d.sqrt()).collect::<Vec<_>>());
    let x = &dinv * ginv * &dinv;
    let k = (CMat::identity(r, r) + x)
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("I + X is singular".into()))?;
    let k = linalg::hermitian_part(&k);
    let omega = &stats.omega;
    let f = omega.adjoint() * &k * omega * &k;
    let (kv, kvec) = linalg::herm_eigh_desc(&k);
    let khalf = &kvec * linalg::diag_real(&kv.iter().map(|v| v.max(0.0).sqrt()).collect::<Vec<_>>()) * kvec.adjoint();
    let sym = &khalf * omega.adjoint() * &k * omega * &khalf;
    let mut eigs = linalg::herm_eigvals_asc(&sym);
    eigs.reverse();
    Ok((f, eigs))
}

/// Options of [`cca_outliers_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcaOracleOptions {
    /// Margin `κ` above `c/(1−c)` inside which a detection is marked marginal.
    pub kappa: f64,
}

impl Default for CcaOracleOptions {
    fn default() -> Self {
        Self { kappa: 1e-3 }
    }
}

/// Predicted canonical-correlation outliers with default options.
pub fn cca_outliers(cc: f64, stats: &SignalStats) -> Result<SpikeReport> {
    cca_outliers_with(cc, stats, CcaOracleOptions::default())
}

/// Predicted canonical-correlation outliers.
///
/// For `c ≥ 1/2` nothing escapes. Otherwise `s = #{λ_k(F) > c/(1−c)}` and
/// `ρ_k` solves `f(ρ) = λ_k(F)` on `(4c(1−c), 1)`.
pub fn cca_outliers_with(cc: f64, stats: &SignalStats, opts: CcaOracleOptions) -> Result<SpikeReport> {
    if !(cc > 0.0 && cc < 1.0) {
        return invalid(format!("c = {cc} must lie in (0, 1)"));
    }
    let (_, eigs) = cca_f_matrix(stats)?;
    let b = 4.0 * cc * (1.0 - cc);
    if cc >= 0.5 {
        return Ok(SpikeReport {
            s: 0,
            rho: Vec::new(),
            oracle_eigs: eigs,
            edge: b,
            model_kind: ModelKind::Cca,
            degenerate: false,
            no_escape: true,
            marginal: false,
        });
    }
    let thr = cc / (1.0 - cc);
    let degenerate = eigs.iter().any(|&e| (e - thr).abs() <= 1e-8);
    let marginal = eigs.iter().any(|&e| e > thr && e <= thr + opts.kappa);
    let escaping: Vec<f64> = eigs.iter().copied().filter(|&e| e > thr).collect();
    let mut rho = Vec::with_capacity(escaping.len());
    for &lam in &escaping {
        rho.push(f_inverse(cc, lam)?);
    }
    rho.sort_by(|a, b| b.total_cmp(a));
    Ok(SpikeReport {
        s: escaping.len(),
        rho,
        oracle_eigs: eigs,
        edge: b,
        model_kind: ModelKind::Cca,
        degenerate,
        no_escape: false,
        marginal,
    })
}

/// Solve `f(ρ) = λ` for `ρ ∈ (4c(1−c), 1)`, with `c < 1/2` and `c/(1−c) < λ < 1`.
pub fn f_inverse(cc: f64, lam: f64) -> Result<f64> {
    let b = 4.0 * cc * (1.0 - cc);
    let (flo, fhi) = (f_ratio(cc, b)?, f_ratio(cc, 1.0)?);
    if !(lam > flo && lam < fhi) {
        return Err(Error::BracketNotFound(format!("λ = {lam} outside ({flo}, {fhi})")));
    }
    let (mut lo, mut hi) = (b, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f_ratio(cc, mid)? < lam {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimal `δ²/σ²` for one canonical-correlation outlier in the equal-`δ` rank-one model:
/// `√c / (√(1−c) − √c)`.
pub fn snr_threshold_cca(cc: f64) -> Result<f64> {
    if !(cc > 0.0 && cc < 0.5) {
        return invalid(format!("the threshold is defined only for 0 < c < 1/2, got {cc}"));
    }
    Ok(cc.sqrt() / ((1.0 - cc).sqrt() - cc.sqrt()))
}
