//! Deterministic equivalents of the two noise-only spectra.

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use statedim::linalg;
use statedim::noise_equivalents::*;
use statedim::Error;

fn z(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn closed_form_w_plus(cc: f64, sigma2: f64) -> f64 {
    sigma2 * (1.0 + (1.0 + (1.0 + 8.0 * cc).sqrt()) / 2.0)
}

/// `x_+ = c w² m (1 + c m)` with `m = σ²/(w − σ²)` at the closed-form `w_+`.
fn closed_form_x_plus(cc: f64, sigma2: f64) -> f64 {
    let w = closed_form_w_plus(cc, sigma2);
    let m = sigma2 / (w - sigma2);
    cc * w * w * m * (1.0 + cc * m)
}

#[test]
fn isotropic_edge_matches_closed_form() {
    for cc in [0.1, 0.25, 0.5] {
        for sigma2 in [1.0, 2.5] {
            let n = 1000;
            let m = (cc * n as f64).round() as usize;
            let noise = NoiseModel::isotropic(m, 1, n, sigma2).unwrap();
            let edge = support_edge_autocov(&noise).unwrap();
            assert_abs_diff_eq!(edge.w_plus, closed_form_w_plus(cc, sigma2), epsilon = 1e-9);
            assert_abs_diff_eq!(edge.x_plus, closed_form_x_plus(cc, sigma2), epsilon = 1e-9 * sigma2 * sigma2);
        }
    }
}

#[test]
fn unit_noise_quarter_ratio_edge_values() {
    let noise = NoiseModel::isotropic(250, 1, 1000, 1.0).unwrap();
    let edge = support_edge_autocov(&noise).unwrap();
    assert_abs_diff_eq!(edge.w_plus, 2.3660254037844375, epsilon = 1e-9);
    assert_abs_diff_eq!(edge.x_plus, 1.21202, epsilon = 1e-5);
    assert_eq!(edge.intervals.len(), 1);
    assert_eq!(edge.intervals[0].0, 0.0);
}

#[test]
fn depth_enters_only_through_the_ratio() {
    let a = support_edge_autocov(&NoiseModel::isotropic(100, 2, 800, 1.0).unwrap()).unwrap();
    let b = support_edge_autocov(&NoiseModel::isotropic(200, 1, 800, 1.0).unwrap()).unwrap();
    assert_abs_diff_eq!(a.x_plus, b.x_plus, epsilon = 1e-12);
}

#[test]
fn fixed_point_residual_is_small_off_the_support() {
    let noise = NoiseModel::new(50, 1, 200, (0..50).map(|k| 0.2 + 0.05 * k as f64).collect()).unwrap();
    for (re, im) in [(-1.0, 0.0), (-0.01, 0.0), (0.5, 0.3), (2.0, -1.0), (5.0, 1e-4), (-3.0, 2.0)] {
        let t = solve_t_autocov(&noise, z(re, im)).unwrap();
        assert!(autocov_residual(&noise, z(re, im), t) < 1e-10, "z = {re}+{im}i");
    }
}

#[test]
fn negative_real_axis_value() {
    let noise = NoiseModel::isotropic(250, 1, 1000, 1.0).unwrap();
    let t = solve_t_autocov(&noise, z(-1.0, 0.0)).unwrap();
    assert!(t.im.abs() < 1e-14);
    assert!(autocov_residual(&noise, z(-1.0, 0.0), t) < 1e-12);
}

#[test]
fn large_argument_behaves_like_minus_inverse() {
    let noise = NoiseModel::isotropic(100, 1, 400, 1.0).unwrap();
    let zz = z(0.0, 1e6);
    let t = solve_t_autocov(&noise, zz).unwrap();
    assert_abs_diff_eq!((zz * t).re, -1.0, epsilon = 1e-5);
    assert_abs_diff_eq!((zz * t).im, 0.0, epsilon = 1e-5);
}

#[test]
fn density_vanishes_right_of_the_edge() {
    let noise = NoiseModel::isotropic(250, 1, 1000, 1.0).unwrap();
    let t = solve_t_autocov(&noise, z(1.3, 1e-6)).unwrap();
    assert!(t.im.abs() < 1e-5);
    let d = density_autocov_points(&noise, &[1.3, 1.5, 3.0], 1e-6).unwrap();
    assert!(d.iter().all(|v| *v < 1e-4), "{d:?}");
}

#[test]
fn density_is_a_probability_up_to_the_left_tail() {
    let noise = NoiseModel::isotropic(250, 1, 1000, 1.0).unwrap();
    let edge = support_edge_autocov(&noise).unwrap();
    let opts = SolverOptions::default();
    let grid = default_autocov_grid(edge.x_plus, opts.left_margin, 2000);
    let dens = density_autocov(&noise, &grid, &opts).unwrap();
    let mass = dens.measure.continuous_mass();
    assert!((0.95..=1.0 + 1e-6).contains(&mass), "mass {mass}");
    assert!(dens.measure.density.iter().all(|d| *d >= 0.0));
    assert_abs_diff_eq!(dens.residual_mass, 1.0 - mass, epsilon = 1e-15);
}

#[test]
fn two_point_noise_spectrum_has_one_interval_at_these_ratios() {
    for cc in [0.25, 0.1, 0.05, 0.01] {
        let m = 100;
        let n = (m as f64 / cc).round() as usize;
        let lambda: Vec<f64> = (0..m).map(|k| if k < m / 2 { 1.0 } else { 100.0 }).collect();
        let noise = NoiseModel::new(m, 1, n, lambda).unwrap();
        let support = autocov_support(&noise).unwrap();
        assert_eq!(support.intervals.len(), 1, "c = {cc}: {:?}", support.intervals);
        let edge = support_edge_autocov(&noise).unwrap();
        assert_abs_diff_eq!(support.x_plus, edge.x_plus, epsilon = 1e-8 * edge.x_plus);
    }
}

#[test]
fn invalid_noise_models_are_rejected() {
    assert!(matches!(NoiseModel::isotropic(100, 1, 100, 1.0), Err(Error::InvalidInput(_))));
    assert!(matches!(NoiseModel::new(2, 1, 10, vec![1.0, -1.0]), Err(Error::InvalidInput(_))));
    assert!(matches!(NoiseModel::new(2, 1, 10, vec![1.0]), Err(Error::InvalidInput(_))));
    assert!(NoiseModel::new(2, 1, 10, vec![1.0, f64::NAN]).is_err());
}

#[test]
fn cosine_spectrum_has_unit_trace_mean_approximately() {
    let noise = NoiseModel::cosine(130, 4, 2000).unwrap();
    assert_abs_diff_eq!(noise.trace_mean(), 1.0, epsilon = 0.01);
    assert_abs_diff_eq!(noise.c, 0.26, epsilon = 1e-15);
    let edge = support_edge_autocov(&noise).unwrap();
    assert_abs_diff_eq!(edge.x_plus, 1.36754, epsilon = 1e-4);
}

// Values below were computed independently with 50-digit arithmetic.

#[test]
fn cca_transform_spot_values() {
    let tt = cca_stieltjes_tilde(0.25, z(-1.0, 0.0)).unwrap();
    assert_abs_diff_eq!(tt.re, 0.9557189138830738, epsilon = 1e-12);
    let tt = cca_stieltjes_tilde(0.25, z(0.9, 0.0)).unwrap();
    assert_abs_diff_eq!(tt.re, -1.2920918810, epsilon = 1e-9);
    let t = cca_stieltjes(0.25, z(0.9, 0.0)).unwrap();
    assert_abs_diff_eq!(t.re, -1.8350341907, epsilon = 1e-9);
}

#[test]
fn cca_transform_at_one_is_the_removable_limit() {
    let cc: f64 = 0.3;
    let expected = -(1.0 - cc).powi(2) / (1.0 - 2.0 * cc);
    let at_one = cca_stieltjes_tilde(cc, z(1.0, 0.0)).unwrap();
    let near = cca_stieltjes_tilde(cc, z(1.0 + 1e-7, 0.0)).unwrap();
    assert_abs_diff_eq!(at_one.re, expected, epsilon = 1e-10);
    assert_abs_diff_eq!(near.re, expected, epsilon = 1e-5);
}

#[test]
fn cca_transform_is_conjugate_symmetric() {
    for (re, im) in [(0.3, 0.2), (1.5, 0.7), (-0.4, 1.0)] {
        let up = cca_stieltjes_tilde(0.3, z(re, im)).unwrap();
        let down = cca_stieltjes_tilde(0.3, z(re, -im)).unwrap();
        assert_abs_diff_eq!(up.re, down.re, epsilon = 1e-14);
        assert_abs_diff_eq!(up.im, -down.im, epsilon = 1e-14);
    }
}

#[test]
fn f_ratio_spot_value_and_endpoints() {
    let cc: f64 = 0.25;
    assert_abs_diff_eq!(f_ratio(cc, 0.9).unwrap(), 0.7932653, epsilon = 1e-6);
    assert_abs_diff_eq!(f_ratio(cc, 0.75).unwrap(), cc / (1.0 - cc), epsilon = 1e-14);
    assert_abs_diff_eq!(f_ratio(cc, 1.0).unwrap(), 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(f_ratio(cc, 0.75 + 1e-9).unwrap(), cc / (1.0 - cc), epsilon = 1e-3);
    assert!(f_ratio(cc, 0.5).is_err());
    assert!(f_ratio(cc, 1.01).is_err());
}

#[test]
fn cca_support_values() {
    let s = cca_support(0.25).unwrap();
    assert_abs_diff_eq!(s.bulk_right, 0.75, epsilon = 1e-15);
    assert!(!s.has_unit_atom);
    let s = cca_support(0.7).unwrap();
    assert!(s.has_unit_atom);
    assert_abs_diff_eq!(s.atom_mass_at_one, 0.4, epsilon = 1e-15);
    assert!(cca_support(1.0).is_err());
}

#[test]
fn cca_density_is_a_probability() {
    for cc in [0.1, 0.25, 0.45, 0.7] {
        let b = 4.0 * cc * (1.0 - cc);
        let n = 20000;
        let grid: Vec<f64> =
            (0..n).map(|i| 0.5 * b * (1.0 - (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos())).collect();
        let mu = cca_density(cc, &grid).unwrap();
        let atom = if cc > 0.5 { (2.0 * cc - 1.0) / cc } else { 0.0 };
        assert_abs_diff_eq!(mu.total_mass(), 1.0, epsilon = 5e-3);
        assert_abs_diff_eq!(cca_cdf(cc, b), 1.0 - atom, epsilon = 1e-9);
        assert_abs_diff_eq!(cca_cdf(cc, 1.0), 1.0, epsilon = 1e-9);
    }
}

/// The law is the free multiplicative convolution of two Bernoulli(c) laws,
/// realized by two independent Haar projections of rank `cN` in dimension `N`.
#[test]
fn cca_cdf_matches_random_projections() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 400;
    let r = 100;
    let cc = r as f64 / n as f64;
    let mut eigs = Vec::new();
    for _ in 0..3 {
        let u = linalg::haar_orthonormal(&mut rng, n, r);
        let v = linalg::haar_orthonormal(&mut rng, n, r);
        let k = u.adjoint() * v;
        eigs.extend(linalg::singular_values_desc(&k).into_iter().map(|s| s * s));
    }
    eigs.sort_by(f64::total_cmp);
    let m = eigs.len() as f64;
    let ks = eigs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cca_cdf(cc, x);
            (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.03, "Kolmogorov distance {ks}");
}

#[test]
fn cca_density_rejects_points_outside_the_bulk() {
    assert!(cca_density(0.25, &[0.1, 0.8]).is_err());
    assert!(cca_density(0.25, &[0.2, 0.1]).is_err());
}

proptest! {
    #[test]
    fn f_ratio_is_nondecreasing(cc in 0.02f64..0.48, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let b = 4.0 * cc * (1.0 - cc);
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let f1 = f_ratio(cc, b + (1.0 - b) * lo).unwrap();
        let f2 = f_ratio(cc, b + (1.0 - b) * hi).unwrap();
        prop_assert!(f1 <= f2 + 1e-12);
        prop_assert!(f1 >= cc / (1.0 - cc) - 1e-12 && f2 <= 1.0 + 1e-12);
    }

    #[test]
    fn cca_quadratic_holds_off_the_real_axis(cc in 0.05f64..0.95, re in -3.0f64..3.0, im in 0.01f64..3.0) {
        let zz = z(re, im);
        let tt = cca_stieltjes_tilde(cc, zz).unwrap();
        prop_assert!(cca_quadratic_residual(cc, zz, tt) < 1e-10);
        prop_assert!(tt.im > 0.0);
    }

    #[test]
    fn autocov_transform_maps_upper_half_plane_to_itself(re in -2.0f64..4.0, im in 0.01f64..3.0) {
        let noise = NoiseModel::isotropic(40, 1, 160, 1.0).unwrap();
        let t = solve_t_autocov(&noise, z(re, im)).unwrap();
        prop_assert!(autocov_residual(&noise, z(re, im), t) < 1e-10);
        prop_assert!(t.im > 0.0);
        let tc = solve_t_autocov(&noise, z(re, -im)).unwrap();
        prop_assert!((tc - t.conj()).norm() < 1e-9);
    }

    #[test]
    fn cca_cdf_is_nondecreasing(cc in 0.05f64..0.95, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(cca_cdf(cc, lo) <= cca_cdf(cc, hi) + 1e-12);
    }
}
