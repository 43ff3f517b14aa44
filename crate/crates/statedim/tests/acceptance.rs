//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are still evaluated and still
//! reported as FAIL when they fail; they do not abort the run. Every other
//! failure does.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statedim::exec::Execution;
use statedim::experiment_runner::{
    grid_cdf, kolmogorov_distance, limit_law, oracle_vs_empirical, run_table, setup_point, trial_seed,
    ExperimentConfig, GridPoint,
};
use statedim::hankel_stats::{autocov_sample_spectrum, build_hankel_pair, cca_sample_spectrum};
use statedim::linalg::{self, CMat};
use statedim::noise_equivalents::{
    autocov_residual, cca_quadratic_residual, cca_stieltjes_tilde, f_ratio, solve_t_autocov, support_edge_autocov,
    NoiseModel,
};
use statedim::spike_oracle::{autocov_spike_count, h_matrix, ModelKind};
use statedim::state_space::{
    example_model_odd_s, example_model_s2, lyapunov_state_cov, simulate, theoretical_stats, Preset,
    StateSpaceModel,
};

/// Criteria that cannot be met as stated; each has a ledger entry.
const KNOWN_UNATTAINABLE: &[u32] = &[4, 5];

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(id: u32, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    Outcome { id, pass, detail, elapsed: start.elapsed() }
}

fn grid(m: usize, n: usize) -> Vec<GridPoint> {
    vec![GridPoint { m, n }]
}

fn closed_form_w_plus(cc: f64, sigma2: f64) -> f64 {
    sigma2 * (1.0 + (1.0 + (1.0 + 8.0 * cc).sqrt()) / 2.0)
}

/// `x_+ = φ(w_+)` for `R = σ² I`, with `m = σ² / (w − σ²)`.
fn closed_form_x_plus(cc: f64, sigma2: f64) -> f64 {
    let w = closed_form_w_plus(cc, sigma2);
    let m = sigma2 / (w - sigma2);
    cc * w * w * m * (1.0 + cc * m)
}

fn criterion_1() -> Outcome {
    timed(1, || {
        let mut worst: f64 = 0.0;
        for cc in [0.1, 0.25, 0.5] {
            let n = 1000;
            let m = (cc * n as f64).round() as usize;
            let noise = NoiseModel::isotropic(m, 1, n, 1.0).unwrap();
            let edge = support_edge_autocov(&noise).unwrap();
            worst = worst.max((edge.w_plus - closed_form_w_plus(cc, 1.0)).abs());
        }
        let noise = NoiseModel::isotropic(250, 1, 1000, 1.0).unwrap();
        let x_plus = support_edge_autocov(&noise).unwrap().x_plus;
        let oracle = closed_form_x_plus(0.25, 1.0);
        let pass = worst < 1e-9 && (x_plus - 1.21202).abs() < 1e-5 && (x_plus - oracle).abs() < 1e-9;
        (pass, format!("max |w+ - closed form| = {worst:.2e}, x+ = {x_plus:.8} (closed form {oracle:.8})"))
    })
}

fn criterion_2() -> Outcome {
    timed(2, || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = NoiseModel::new(200, 1, 800, (0..200).map(|k| 0.5 + k as f64 / 200.0).collect()).unwrap();
        let edge = support_edge_autocov(&noise).unwrap();
        let mut worst_autocov: f64 = 0.0;
        let mut worst_cca: f64 = 0.0;
        let mut done = 0;
        while done < 100 {
            let z = Complex64::new(rng.random_range(-3.0..4.0), rng.random_range(-2.0..2.0));
            // Off the support: away from [0, x+] on the real axis.
            if z.im.abs() < 1e-3 && z.re > -1e-3 && z.re < edge.x_plus + 1e-3 {
                continue;
            }
            let t = solve_t_autocov(&noise, z).unwrap();
            worst_autocov = worst_autocov.max(autocov_residual(&noise, z, t));
            let tt = cca_stieltjes_tilde(0.25, z).unwrap();
            worst_cca = worst_cca.max(cca_quadratic_residual(0.25, z, tt));
            done += 1;
        }
        let spot = cca_stieltjes_tilde(0.25, Complex64::new(-1.0, 0.0)).unwrap();
        let pass = worst_autocov < 1e-10 && worst_cca < 1e-10 && (spot.re - 0.9557189).abs() < 1e-6 && spot.im == 0.0;
        (pass, format!("residuals autocov {worst_autocov:.2e}, cca {worst_cca:.2e}; t~(-1) = {:.9}", spot.re))
    })
}

fn criterion_3() -> Outcome {
    timed(3, || {
        let count = |model: &StateSpaceModel| {
            let noise = NoiseModel::isotropic(600, 1, 1200, 1.0).unwrap();
            autocov_spike_count(&noise, &theoretical_stats(model, &noise, 1).unwrap()).unwrap()
        };
        let s3 = count(&example_model_odd_s(2, 600, 0.5, 1.0, 11).unwrap().model);
        let s5 = count(&example_model_odd_s(3, 600, 0.5, 1.0, 11).unwrap().model);
        let s2 = count(&example_model_s2(600, 0.5, 1.0, 11).unwrap().model);
        (s3 == 3 && s5 == 5 && s2 == 2, format!("odd-s r=2 -> {s3}, r=3 -> {s5}, two-outlier -> {s2}"))
    })
}

fn table(kind: ModelKind) -> statedim::experiment_runner::TableResult {
    let mut cfg = ExperimentConfig::new(Preset::Table, kind, grid(200, 800));
    cfg.trials = 100;
    cfg.seed = 4;
    run_table(&cfg).unwrap()
}

fn criterion_4() -> Outcome {
    timed(4, || {
        let t = table(ModelKind::Cca);
        let p = &t.points[0];
        let (thr, ratio) = (p.s_threshold[1], p.s_ratio[1]);
        (thr >= 0.95 && ratio >= 0.90, format!("P(s~=1) = {thr:.2} (need >= 0.95), P(s^=1) = {ratio:.2} (need >= 0.90)"))
    })
}

fn criterion_5() -> Outcome {
    timed(5, || {
        let t = table(ModelKind::Autocov);
        let p = &t.points[0];
        let (thr, ratio) = (p.s_threshold[1], p.s_ratio[1]);
        (thr == 0.0 && ratio <= 0.03, format!("P(s~=1) = {thr:.2} (need 0), P(s^=1) = {ratio:.2} (need <= 0.03)"))
    })
}

fn criterion_6() -> Outcome {
    timed(6, || {
        let trials = 20;
        let mut in_gap = 0;
        let mut above = 0;
        let mut x_plus = 0.0;
        for kind in [ModelKind::Cca, ModelKind::Autocov] {
            let cfg = ExperimentConfig::new(Preset::NoiseOnly { l: 1 }, kind, grid(200, 800));
            let setup = setup_point(&cfg, GridPoint { m: 200, n: 800 }).unwrap();
            for t in 0..trials {
                let spec = setup.sample_spectrum(trial_seed(6, 200, 800, t)).unwrap();
                match kind {
                    ModelKind::Cca => {
                        if spec.eigs.iter().any(|&e| e > 0.80 && e < 0.95) {
                            in_gap += 1;
                        }
                    }
                    ModelKind::Autocov => {
                        x_plus = setup.edge;
                        if spec.eigs[0] > 1.10 * setup.edge {
                            above += 1;
                        }
                    }
                }
            }
        }
        (
            in_gap == 0 && above <= 1,
            format!("trials with a CCA eigenvalue in (0.80, 0.95): {in_gap}/20; autocov above 1.10 x+ = {:.4}: {above}/20", 1.1 * x_plus),
        )
    })
}

fn ks_for(kind: ModelKind, preset: Preset, point: GridPoint, trials: usize) -> f64 {
    let cfg = ExperimentConfig::new(preset, kind, vec![point]);
    let setup = setup_point(&cfg, point).unwrap();
    let law = limit_law(&setup, 4000).unwrap();
    let cdf = grid_cdf(&law.measure, law.missing_left);
    let mut samples = Vec::new();
    for t in 0..trials {
        samples.extend_from_slice(setup.sample_spectrum(trial_seed(7, point.m, point.n, t)).unwrap().bulk_part());
    }
    kolmogorov_distance(&samples, cdf)
}

fn criterion_7() -> Outcome {
    timed(7, || {
        let d_cca = ks_for(ModelKind::Cca, Preset::NoiseOnly { l: 1 }, GridPoint { m: 200, n: 800 }, 5);
        let d_autocov = ks_for(ModelKind::Autocov, Preset::NoiseOnly { l: 1 }, GridPoint { m: 200, n: 800 }, 5);
        (d_cca < 0.05 && d_autocov < 0.05, format!("Kolmogorov distance cca {d_cca:.4}, autocov {d_autocov:.4}"))
    })
}

fn criterion_8() -> Outcome {
    timed(8, || {
        let mut cfg = ExperimentConfig::new(Preset::CcaSnr { delta2: 3.0 }, ModelKind::Cca, grid(400, 1600));
        cfg.trials = 20;
        cfg.seed = 8;
        let d = &oracle_vs_empirical(&cfg).unwrap()[0];
        let k1 = &d.per_index[0];
        (k1.median_abs < 0.02, format!("rho1 = {:.5}, median |l1 - rho1| = {:.5}", k1.rho, k1.median_abs))
    })
}

/// Compact, deterministic versions of the property suites.
fn criterion_9() -> Outcome {
    timed(9, || {
        let config = Config { cases: 24, failure_persistence: None, ..Config::default() };
        let mut failures = Vec::new();

        // Brute-force equivalence of the sample spectra.
        let mut runner = TestRunner::new_with_rng(config.clone(), proptest::test_runner::TestRng::deterministic_rng(config.rng_algorithm));
        let r = runner.run(&(1usize..4, 1usize..3, 0u64..1000), |(m, l, seed)| {
            let n = 3 * m * l + 2;
            let noise = NoiseModel::isotropic(m, l, n, 1.0).unwrap();
            let y = statedim::state_space::simulate_noise(&noise, n, l, seed).unwrap();
            let pair = build_hankel_pair(&y, l).unwrap();
            let brute = brute_projector_eigs(&pair.yp, &pair.yf);
            let fast = cca_sample_spectrum(&pair).unwrap().eigs;
            for (a, b) in brute.iter().zip(&fast) {
                prop_assert!((a - b).abs() < 1e-8);
            }
            let prod = &pair.yf * pair.yp.adjoint() / Complex64::new(n as f64, 0.0);
            let brute_auto = linalg::herm_eigvals_asc(&(&prod * prod.adjoint()));
            let fast_auto = autocov_sample_spectrum(&pair).eigs;
            for (a, b) in brute_auto.iter().rev().zip(&fast_auto) {
                prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
            }
            // Hankel shift: column j of Y_f equals column j + L of Y_p.
            for j in 0..n.saturating_sub(l) {
                prop_assert_eq!(pair.yf.column(j), pair.yp.column(j + l));
            }
            Ok(())
        });
        if r.is_err() {
            failures.push("hankel");
        }

        // f_ratio monotonicity.
        let mut runner = TestRunner::new_with_rng(config.clone(), proptest::test_runner::TestRng::deterministic_rng(config.rng_algorithm));
        let r = runner.run(&(0.02f64..0.48, 0.0f64..1.0, 0.0f64..1.0), |(cc, u, v)| {
            let b = 4.0 * cc * (1.0 - cc);
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            let (x1, x2) = (b + (1.0 - b) * lo, b + (1.0 - b) * hi);
            prop_assert!(f_ratio(cc, x1).unwrap() <= f_ratio(cc, x2).unwrap() + 1e-12);
            Ok(())
        });
        if r.is_err() {
            failures.push("f_ratio");
        }

        // H-matrix eigenvalues increase with y.
        let noise = NoiseModel::isotropic(200, 1, 800, 1.0).unwrap();
        let model = example_model_odd_s(3, 200, 0.25, 1.0, 5).unwrap().model;
        let stats = theoretical_stats(&model, &noise, 1).unwrap();
        let edge = support_edge_autocov(&noise).unwrap();
        let y0 = edge.x_plus.sqrt();
        let mut prev: Option<Vec<f64>> = None;
        let mut monotone = true;
        for i in 1..40 {
            let y = y0 * (1.0 + 0.05 * i as f64);
            let e = linalg::herm_eigvals_asc(&h_matrix(&noise, &stats, &edge, y).unwrap());
            if let Some(p) = &prev {
                monotone &= p.iter().zip(&e).all(|(a, b)| *b >= *a - 1e-10);
            }
            prev = Some(e);
        }
        if !monotone {
            failures.push("h_matrix");
        }

        // Lyapunov residuals.
        let mut runner = TestRunner::new_with_rng(config.clone(), proptest::test_runner::TestRng::deterministic_rng(config.rng_algorithm));
        let r = runner.run(&(1usize..5, 1usize..3, 0u64..1000), |(p, k, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = linalg::complex_normal_matrix(&mut rng, p, p);
            let a = &a * Complex64::new(0.9 / statedim::state_space::spectral_radius(&a).max(1e-3), 0.0);
            let b = linalg::complex_normal_matrix(&mut rng, p, k);
            let x = lyapunov_state_cov(&a, &b).unwrap();
            let res = &x - &a * &x * a.adjoint() - &b * b.adjoint();
            prop_assert!(linalg::fro(&res) < 1e-9 * (1.0 + linalg::fro(&x)));
            Ok(())
        });
        if r.is_err() {
            failures.push("lyapunov");
        }

        // Determinism under a seed.
        let model = example_model_odd_s(2, 20, 0.25, 1.0, 3).unwrap().model;
        let noise = NoiseModel::isotropic(20, 1, 80, 1.0).unwrap();
        let a = simulate(&model, &noise, 80, 1, 99).unwrap();
        let b = simulate(&model, &noise, 80, 1, 99).unwrap();
        let mut cfg = ExperimentConfig::new(Preset::Table, ModelKind::Cca, grid(20, 80));
        cfg.trials = 6;
        cfg.execution = Execution::Sequential;
        let seq = run_table(&cfg).unwrap().to_csv();
        cfg.execution = Execution::Parallel;
        let par = run_table(&cfg).unwrap().to_csv();
        if a != b || seq != par {
            failures.push("determinism");
        }

        (failures.is_empty(), if failures.is_empty() { "all property families hold".into() } else { format!("failed: {failures:?}") })
    })
}

/// Eigenvalues of `Π_p Π_f` from explicit `N x N` projectors, nonincreasing.
fn brute_projector_eigs(yp: &CMat, yf: &CMat) -> Vec<f64> {
    let proj = |y: &CMat| {
        let g = (y * y.adjoint()).try_inverse().expect("full row rank");
        y.adjoint() * g * y
    };
    let pp = proj(yp);
    let pf = proj(yf);
    // Π_p Π_f Π_p is Hermitian with the same spectrum as Π_p Π_f.
    let mut e = linalg::herm_eigvals_asc(&(&pp * &pf * &pp));
    e.reverse();
    e
}

fn main() {
    let outcomes = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ];
    let limits = [(1, 1.0), (2, 5.0), (4, 600.0), (5, 600.0)];
    let mut unexpected = Vec::new();
    for o in &outcomes {
        let limit = limits.iter().find(|l| l.0 == o.id).map(|l| l.1);
        let in_time = limit.is_none_or(|s| o.elapsed.as_secs_f64() < s);
        let pass = o.pass && in_time;
        let note = if !pass && KNOWN_UNATTAINABLE.contains(&o.id) { " [known, see ledger]" } else { "" };
        println!(
            "criterion {}: {} ({}; {:.2} s){note}",
            o.id,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            o.elapsed.as_secs_f64()
        );
        if !pass && !KNOWN_UNATTAINABLE.contains(&o.id) {
            unexpected.push(o.id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance failures: {unexpected:?}");
        std::process::exit(1);
    }
}
