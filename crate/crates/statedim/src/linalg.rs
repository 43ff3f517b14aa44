//! Dense complex linear-algebra helpers built on `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Complex double-precision scalar.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;

/// Real scalar lifted to the complex field.
#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// The input is symmetrized as `(A + A*)/2` first so that rounding noise in
/// an algebraically Hermitian product does not leak into the spectrum.
pub fn herm_eigvals_asc(a: &CMat) -> Vec<f64> {
    let h = hermitian_part(a);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in descending order.
pub fn herm_eigh_desc(a: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitian_part(a);
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(a.nrows(), n, |r, k| eig.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

/// `(A + A*)/2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

/// Singular values in descending order.
pub fn singular_values_desc(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = a.singular_values().iter().copied().collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

/// Spectral norm.
pub fn op_norm(a: &CMat) -> f64 {
    singular_values_desc(a).first().copied().unwrap_or(0.0)
}

/// Diagonal complex matrix from real entries.
pub fn diag_real(d: &[f64]) -> CMat {
    CMat::from_fn(d.len(), d.len(), |i, j| if i == j { c(d[i]) } else { C64::new(0.0, 0.0) })
}

/// One draw of a standard circular complex Gaussian, `E|z|^2 = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard circular complex Gaussian entries, filled column by column.
pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_normal(rng);
        }
    }
    m
}

/// Haar-distributed `n x k` matrix with orthonormal columns.
///
/// Uses the QR factorization of a complex Gaussian matrix with the phases of
/// the triangular diagonal absorbed into `Q`, which makes the law exactly Haar.
pub fn haar_orthonormal<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> CMat {
    assert!(k <= n, "cannot draw {k} orthonormal columns in dimension {n}");
    let g = complex_normal_matrix(rng, n, k);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Thin orthonormal basis of the column space of `a`, dropping directions whose
/// singular value is below `rel_tol` times the largest one.
///
/// Returns the basis and the numerical rank.
pub fn column_space_basis(a: &CMat, rel_tol: f64) -> (CMat, usize) {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let s = &svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let smax = idx.first().map(|&i| s[i]).unwrap_or(0.0);
    let keep: Vec<usize> = idx.into_iter().filter(|&i| s[i] > rel_tol * smax && s[i] > 0.0).collect();
    let basis = CMat::from_fn(a.nrows(), keep.len(), |r, k| u[(r, keep[k])]);
    let rank = keep.len();
    (basis, rank)
}

/// Kronecker product `I_l ⊗ a`.
pub fn kron_identity(l: usize, a: &CMat) -> CMat {
    let (m, n) = a.shape();
    let mut out = CMat::zeros(l * m, l * n);
    for b in 0..l {
        out.view_mut((b * m, b * n), (m, n)).copy_from(a);
    }
    out
}

/// Rotate each column so that its largest-modulus entry is real and positive.
pub fn fix_column_phases(q: &mut CMat) {
    for j in 0..q.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..q.nrows() {
            let a = q[(i, j)].norm();
            if a > best_abs + 1e-12 {
                best_abs = a;
                best = i;
            }
        }
        if best_abs > 0.0 {
            let ph = q[(best, j)].conj() / best_abs;
            for i in 0..q.nrows() {
                q[(i, j)] *= ph;
            }
        }
    }
}

/// Frobenius norm.
pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `A B^*` computed through four real matrix products, which use the
/// optimized real kernels instead of the generic complex one.
pub fn mul_adj(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.ncols(), "inner dimensions differ");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * br.transpose() + &ai * bi.transpose();
    let im = &ai * br.transpose() - &ar * bi.transpose();
    join(&re, &im)
}

fn split(a: &CMat) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> CMat {
    CMat::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}
