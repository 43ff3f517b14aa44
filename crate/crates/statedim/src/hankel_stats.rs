//! Empirical side: block-Hankel matrices, sample spectra of the two matrix
//! models, and the two estimators of the outlier count.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, CMat};

/// Past and future block-Hankel matrices.
///
/// Block row `i`, column `j` (1-based) of `yp` holds `y_{i+j−1}`; of `yf` it holds `y_{L+i+j−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelPair {
    /// `ML x N` past matrix.
    pub yp: CMat,
    /// `ML x N` future matrix.
    pub yf: CMat,
    /// Cross-section dimension.
    pub m: usize,
    /// Depth.
    pub l: usize,
    /// Number of columns.
    pub n: usize,
}

/// Which sample matrix a spectrum comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Eigenvalues of `(1/N²) Y_f Y_p^* Y_p Y_f^*`.
    AutocovSquared,
    /// Eigenvalues of `Π_p Π_f`.
    Cca,
}

/// Dimensions attached to a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    /// Cross-section dimension.
    pub m: usize,
    /// Depth.
    pub l: usize,
    /// Number of columns.
    pub n: usize,
    /// `ML / N`.
    pub c: f64,
}

/// Sample eigenvalues in nonincreasing order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    /// Eigenvalues, nonincreasing.
    pub eigs: Vec<f64>,
    /// Source matrix.
    pub kind: SpectrumKind,
    /// Dimensions.
    pub meta: SpectrumMeta,
}

impl EmpiricalSpectrum {
    /// Number of eigenvalues structurally equal to 1 in the projector product: `max(2ML − N, 0)`.
    pub fn structural_unit_count(&self) -> usize {
        match self.kind {
            SpectrumKind::Cca => (2 * self.meta.m * self.meta.l).saturating_sub(self.meta.n),
            SpectrumKind::AutocovSquared => 0,
        }
    }

    /// The `ML` eigenvalues carrying the spectral law (nonzero part of the `N x N` product).
    pub fn bulk_part(&self) -> &[f64] {
        let ml = self.meta.m * self.meta.l;
        &self.eigs[..ml.min(self.eigs.len())]
    }
}

/// Build the Hankel pair from an `M x (N + 2L − 1)` sample matrix.
pub fn build_hankel_pair(samples: &CMat, l: usize) -> Result<HankelPair> {
    let m = samples.nrows();
    if l == 0 || m == 0 {
        return invalid("need M >= 1 and L >= 1");
    }
    let total = samples.ncols();
    if total < 2 * l {
        return invalid(format!("need at least 2L = {} samples, got {total}", 2 * l));
    }
    let n = total - 2 * l + 1;
    let mut yp = CMat::zeros(m * l, n);
    let mut yf = CMat::zeros(m * l, n);
    for i in 0..l {
        yp.view_mut((i * m, 0), (m, n)).copy_from(&samples.columns(i, n));
        yf.view_mut((i * m, 0), (m, n)).copy_from(&samples.columns(l + i, n));
    }
    Ok(HankelPair { yp, yf, m, l, n })
}

impl HankelPair {
    fn meta(&self) -> SpectrumMeta {
        SpectrumMeta { m: self.m, l: self.l, n: self.n, c: (self.m * self.l) as f64 / self.n as f64 }
    }
}

/// Squared singular values of `(1/N) Y_f Y_p^*`, nonincreasing.
pub fn autocov_sample_spectrum(pair: &HankelPair) -> EmpiricalSpectrum {
    let cross = linalg::mul_adj(&pair.yf, &pair.yp) / c(pair.n as f64);
    let eigs = linalg::singular_values_desc(&cross).into_iter().map(|s| s * s).collect();
    EmpiricalSpectrum { eigs, kind: SpectrumKind::AutocovSquared, meta: pair.meta() }
}

/// Relative threshold on the Cholesky pivots of `Y_i Y_i^*` below which a
/// Hankel matrix is declared rank deficient.
pub const ROW_SPACE_RANK_TOL: f64 = 1e-10;

/// Eigenvalues of `Π_p Π_f` (length `N`), computed as squared cosines of the
/// principal angles between the row spaces of `Y_p` and `Y_f`.
///
/// With `Y_i Y_i^* = L_i L_i^*`, the rows of `L_i^{−1} Y_i` are an orthonormal
/// basis of the row space of `Y_i`, so the cosines are the singular values of
/// `L_f^{−1} (Y_f Y_p^*) L_p^{−*}`. This never forms an `N x N` matrix.
/// When `2ML > N` the two row spaces intersect in dimension `2ML − N`; the
/// corresponding eigenvalues are exactly 1 and are set to 1.
pub fn cca_sample_spectrum(pair: &HankelPair) -> Result<EmpiricalSpectrum> {
    let ml = pair.m * pair.l;
    if ml > pair.n {
        return invalid(format!("ML = {ml} exceeds N = {}", pair.n));
    }
    let lp = whitening_factor(&pair.yp, "Y_p")?;
    let lf = whitening_factor(&pair.yf, "Y_f")?;
    let cross = linalg::mul_adj(&pair.yf, &pair.yp);
    // L_f^{-1} X L_p^{-*} = L_f^{-1} (L_p^{-1} X^*)^*.
    let left = lf
        .solve_lower_triangular(&cross)
        .ok_or_else(|| Error::Degenerate("singular Cholesky factor of Y_f Y_f^*".into()))?;
    let gram = lp
        .solve_lower_triangular(&left.adjoint())
        .ok_or_else(|| Error::Degenerate("singular Cholesky factor of Y_p Y_p^*".into()))?
        .adjoint();
    let mut eigs: Vec<f64> = linalg::singular_values_desc(&gram)
        .into_iter()
        .map(|s| (s * s).min(1.0))
        .collect();
    let structural = (2 * ml).saturating_sub(pair.n);
    for e in eigs.iter_mut().take(structural) {
        *e = 1.0;
    }
    eigs.resize(pair.n, 0.0);
    Ok(EmpiricalSpectrum { eigs, kind: SpectrumKind::Cca, meta: pair.meta() })
}

fn whitening_factor(y: &CMat, name: &str) -> Result<CMat> {
    let gram = linalg::hermitian_part(&linalg::mul_adj(y, y));
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate(format!("{name} has numerically dependent rows")))?;
    let l = chol.unpack();
    let d: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)].re).collect();
    let dmax = d.iter().cloned().fold(0.0, f64::max);
    if d.iter().any(|&x| x <= ROW_SPACE_RANK_TOL.sqrt() * dmax) {
        return Err(Error::Degenerate(format!("{name} has numerically dependent rows")));
    }
    Ok(l)
}

/// Number of eigenvalues above `edge (1 + eps1)`. For the projector product
/// the `max(2ML − N, 0)` structural unit eigenvalues are discarded first.
pub fn estimate_s_threshold(spec: &EmpiricalSpectrum, edge: f64, eps1: f64) -> usize {
    let skip = spec.structural_unit_count();
    let thr = edge * (1.0 + eps1);
    spec.eigs.iter().skip(skip).filter(|&&e| e > thr).count()
}

/// Result of the eigenvalue-ratio estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioEstimate {
    /// `ŝ`.
    pub s: usize,
    /// No ratio qualified within `kmax`.
    pub overflow: bool,
}

/// Default search bound of the ratio estimator.
pub const DEFAULT_KMAX: usize = 20;

/// `ŝ = argmin_{1≤k≤kmax} { λ_{k+1}/λ_k > 1 − eps2 } − 1`.
///
/// A ratio whose denominator is below `10⁻¹² λ_1`, or which runs past the end
/// of the spectrum, terminates the search as if it qualified. For the
/// projector product the structural unit eigenvalues are discarded first.
pub fn estimate_s_ratio(spec: &EmpiricalSpectrum, eps2: f64, kmax: usize) -> Result<RatioEstimate> {
    let eigs = &spec.eigs[spec.structural_unit_count().min(spec.eigs.len())..];
    if eigs.len() < 2 {
        return invalid("the ratio estimator needs at least 2 eigenvalues");
    }
    if kmax == 0 {
        return invalid("kmax must be positive");
    }
    let floor = 1e-12 * eigs[0].abs();
    for k in 1..=kmax {
        // 1-based k: ratio λ_{k+1}/λ_k uses indices k and k−1.
        if k >= eigs.len() || eigs[k - 1] <= floor {
            return Ok(RatioEstimate { s: k - 1, overflow: false });
        }
        if eigs[k] / eigs[k - 1] > 1.0 - eps2 {
            return Ok(RatioEstimate { s: k - 1, overflow: false });
        }
    }
    Ok(RatioEstimate { s: kmax, overflow: true })
}
