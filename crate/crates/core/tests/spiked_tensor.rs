mod common;

use common::mean_and_stderr;
use entropic_barriers::linalg::{dot, standard_normal_vec, uniform_sphere};
use entropic_barriers::measures::band_prior_masses;
use entropic_barriers::rng::rng_from_seed;
use entropic_barriers::spiked_tensor::*;
use proptest::prelude::*;

/// Tensor with every mode multiplied by the orthogonal matrix `h` (row-major `n x n`).
fn rotate3(z: &[f64], n: usize, h: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; n * n * n];
    for i in 0..n {
        for b in 0..n {
            for c in 0..n {
                a[(i * n + b) * n + c] = (0..n).map(|k| h[i * n + k] * z[(k * n + b) * n + c]).sum();
            }
        }
    }
    let mut bb = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for c in 0..n {
                bb[(i * n + j) * n + c] = (0..n).map(|k| h[j * n + k] * a[(i * n + k) * n + c]).sum();
            }
        }
    }
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                out[(i * n + j) * n + l] = (0..n).map(|k| h[l * n + k] * bb[(i * n + j) * n + k]).sum();
            }
        }
    }
    out
}

/// `<θ^{⊗3}, T>` by the explicit triple sum.
fn triple_sum(t: &[f64], n: usize, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                s += x[i] * x[j] * x[k] * t[(i * n + j) * n + k];
            }
        }
    }
    s
}

#[test]
fn null_entries_are_centred() {
    let inst = simulate_tensor(10, 3, 0.0, 4).unwrap();
    let mean = inst.y.iter().sum::<f64>() / inst.y.len() as f64;
    assert!(mean.abs() < 4.0 / 10f64.powf(1.5));
    assert_eq!(inst, simulate_tensor(10, 3, 0.0, 4).unwrap());
    assert!((dot(&inst.theta0, &inst.theta0) - 1.0).abs() < 1e-12);
}

#[test]
fn planted_overlap_concentrates() {
    let (n, lambda) = (20, 5.0);
    let v: Vec<f64> = (0..50).map(|s| {
        let inst = simulate_tensor(n, 3, lambda, 1000 + s).unwrap();
        triple_sum(&inst.y, n, &inst.theta0)
    }).collect();
    let (m, se) = mean_and_stderr(&v);
    let target = lambda * (n as f64).sqrt();
    assert!((m - target).abs() < 3.0 * se, "{m} ± {se} vs {target}");
}

#[test]
fn loglik_closed_forms() {
    let mut inst = simulate_tensor(7, 3, 1.5, 3).unwrap();
    let n = inst.n as f64;
    let th0 = inst.theta0.clone();
    // strip the noise
    let mut k = 0;
    for i in 0..7 {
        for j in 0..7 {
            for l in 0..7 {
                inst.y[k] = inst.lambda * n.sqrt() * th0[i] * th0[j] * th0[l];
                k += 1;
            }
        }
    }
    assert!((tensor_loglik(&inst, &th0).unwrap() - 1.5 * 1.5 * n / 2.0).abs() < 1e-10);
    let zero = simulate_tensor(7, 3, 0.0, 3).unwrap();
    assert_eq!(tensor_loglik(&zero, &uniform_sphere(7, &mut rng_from_seed(1))).unwrap(), 0.0);
    assert!(tensor_loglik(&zero, &[1.0; 7]).is_err());
}

#[test]
fn averaged_loglik_is_the_noise_average() {
    let (n, lambda) = (15, 1.3);
    let mut rng = rng_from_seed(3);
    let theta0 = uniform_sphere(n, &mut rng);
    let target_q: f64 = 0.6;
    // θ with <θ, θ0> = q
    let mut perp = standard_normal_vec(n, &mut rng);
    let c = dot(&perp, &theta0);
    perp.iter_mut().zip(&theta0).for_each(|(p, t)| *p -= c * t);
    let pn = dot(&perp, &perp).sqrt();
    let theta: Vec<f64> = theta0.iter().zip(&perp).map(|(t, p)| target_q * t + (1.0 - target_q * target_q).sqrt() * p / pn).collect();
    let m = 2000;
    let vals: Vec<f64> = (0..m).map(|s| {
        let mut inst = simulate_tensor(n, 3, lambda, 50 + s).unwrap();
        // same noise law, fixed planted direction
        let fresh = simulate_tensor(n, 3, 0.0, 50 + s).unwrap();
        let mut k = 0;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    inst.y[k] = fresh.y[k] + lambda * (n as f64).sqrt() * theta0[i] * theta0[j] * theta0[l];
                    k += 1;
                }
            }
        }
        inst.theta0 = theta0.clone();
        tensor_loglik(&inst, &theta).unwrap() / n as f64
    }).collect();
    let (mean, se) = mean_and_stderr(&vals);
    // the exact model's λ² plays the averaged model's λ
    let avg = averaged_loglik(&theta, &theta0, lambda * lambda, 3).unwrap();
    assert!((mean - avg).abs() < 3.0 * se, "{mean} ± {se} vs {avg}");
    assert!((avg - lambda * lambda * target_q.powi(3) / 2.0).abs() < 1e-12);
}

#[test]
fn averaged_reference_values() {
    let mut th = vec![0.0; 4];
    th[0] = 0.5;
    th[1] = 0.75f64.sqrt();
    let e0 = [1.0, 0.0, 0.0, 0.0];
    assert!((averaged_loglik(&th, &e0, 2.1, 3).unwrap() - 0.13125).abs() < 1e-14);
    assert_eq!(averaged_loglik(&[0.0, 1.0, 0.0, 0.0], &e0, 2.1, 3).unwrap(), 0.0);
}

/// Dense grid search on the closed form, independent of the library's bisection.
fn grid_extrema(lambda: f64, p: i32) -> (Vec<f64>, Vec<f64>) {
    let f = |q: f64| 0.5 * lambda * q.powi(p) + 0.5 * (1.0 - q * q).ln();
    let qs: Vec<f64> = (-9999..=9999).map(|k| k as f64 * 1e-4).collect();
    let (mut maxima, mut minima) = (vec![], vec![]);
    for k in 1..qs.len() - 1 {
        let (a, b, c) = (f(qs[k - 1]), f(qs[k]), f(qs[k + 1]));
        if b > a && b > c {
            maxima.push(qs[k]);
        }
        if b < a && b < c {
            minima.push(qs[k]);
        }
    }
    (maxima, minima)
}

#[test]
fn double_well_at_moderate_snr() {
    let (omax, omin) = grid_extrema(2.1, 3);
    assert_eq!(omax.len(), 2);
    assert_eq!(omin.len(), 1);
    let grid: Vec<f64> = (-999..=999).map(|k| k as f64 * 1e-3).collect();
    let c = averaged_free_entropy_curve(2.1, 3, &grid).unwrap();
    let maxima: Vec<_> = c.critical.iter().filter(|p| p.kind == CriticalKind::Max).collect();
    let minima: Vec<_> = c.critical.iter().filter(|p| p.kind == CriticalKind::Min).collect();
    assert_eq!((maxima.len(), minima.len()), (2, 1));
    assert!((maxima[0].q - omax[0]).abs() < 2e-4 && maxima[0].q.abs() < 1e-12);
    assert!((maxima[1].q - omax[1]).abs() < 2e-4 && (maxima[1].q - 0.765).abs() < 0.01);
    assert!((minima[0].q - omin[0]).abs() < 2e-4 && (minima[0].q - 0.368).abs() < 0.01);
    assert!(maxima[1].f > 0.0 && minima[0].f < 0.0);
    let j0 = grid.iter().position(|q| *q == 0.0).unwrap();
    assert_eq!(c.f[j0], 0.0);
    assert!(averaged_free_entropy_curve(2.1, 3, &[0.0, 1.0]).is_err());
}

#[test]
fn correlated_maximum_dominates_at_high_snr() {
    let (omax, _) = grid_extrema(10.0, 3);
    let grid: Vec<f64> = (0..999).map(|k| k as f64 * 1e-3).collect();
    let c = averaged_free_entropy_curve(10.0, 3, &grid).unwrap();
    let top = c.critical.iter().filter(|p| p.kind == CriticalKind::Max).max_by(|a, b| a.f.total_cmp(&b.f)).unwrap();
    assert!((top.q - omax.last().unwrap()).abs() < 2e-4);
    assert!(top.f > 0.0);
}

#[test]
fn planted_spike_norm() {
    let n = 6;
    let mut z = vec![0.0; n * n * n];
    z[0] = 10.0;
    let est = injective_norm_estimate(&z, n, 3, 20, 1).unwrap();
    assert!((est.value - 10.0).abs() < 1e-9);
    assert!((est.argmax[0].abs() - 1.0).abs() < 1e-6);
}

#[test]
fn injective_norm_is_rotation_invariant() {
    let n = 10;
    let mut rng = rng_from_seed(5);
    let z = standard_normal_vec(n * n * n, &mut rng);
    let v = uniform_sphere(n, &mut rng);
    // Householder reflection I - 2vvᵀ
    let h: Vec<f64> = (0..n * n).map(|k| (if k / n == k % n { 1.0 } else { 0.0 }) - 2.0 * v[k / n] * v[k % n]).collect();
    let zr = rotate3(&z, n, &h);
    let a = injective_norm_estimate(&z, n, 3, 200, 7).unwrap();
    let b = injective_norm_estimate(&zr, n, 3, 200, 8).unwrap();
    assert!((a.value - b.value).abs() < 1e-6, "{} vs {}", a.value, b.value);
    // the reflected maximiser attains the same value on the reflected tensor
    let hx: Vec<f64> = (0..n).map(|i| (0..n).map(|k| h[i * n + k] * a.argmax[k]).sum()).collect();
    assert!((triple_sum(&zr, n, &hx) - a.value).abs() < 1e-9);
}

#[test]
fn injective_norm_is_bounded_in_n() {
    let vals: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let z = standard_normal_vec(n * n * n, &mut rng_from_seed(n as u64));
            injective_norm_estimate(&z, n, 3, 100, 1).unwrap().normalized
        })
        .collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(hi - lo < 0.5, "{vals:?}");
    assert!(vals[2] < vals[0] + 0.25, "{vals:?}");
}

#[test]
fn null_band_masses_match_prior() {
    let inst = simulate_tensor(9, 3, 0.0, 2).unwrap();
    let bands = Bands::new(0.2, 0.5, 3).unwrap();
    let m = posterior_band_masses(&inst, &bands, 100_000, 3).unwrap();
    let p = band_prior_masses(9, 0.2, 0.5, 3).unwrap();
    assert!((m.start - p.start).abs() < 3.0 * m.start_stderr);
    assert!((m.well - p.well).abs() < 3.0 * m.well_stderr);
    assert!((m.target - p.target).abs() < 3.0 * m.target_stderr);
    assert_eq!(m.start + m.well + m.target, 1.0);
}

#[test]
fn posterior_contracts_at_snr_six() {
    let bands = Bands::new(0.0, 0.5, 3).unwrap();
    let hits = (0..50)
        .filter(|&s| {
            let inst = simulate_tensor(12, 3, 6.0, 700 + s).unwrap();
            let m = posterior_band_masses(&inst, &bands, 20_000, s).unwrap();
            assert!(!m.ess_low, "ess {}", m.ess);
            m.target > 0.9
        })
        .count();
    assert!(hits >= 40, "{hits}/50");
}

#[test]
fn contraction_curve_rises() {
    let lambdas = [0.0, 2.0, 4.0, 6.0, 8.0];
    let c = contraction_curve(12, 3, &lambdas, 0.5, 20_000, 50, 9).unwrap();
    let prior = band_prior_masses(12, 0.0, 0.5, 3).unwrap().target;
    assert!((c[0].mean - prior).abs() < 3.0 * c[0].stderr.max(1e-3));
    for w in c.windows(2) {
        assert!(w[1].mean >= w[0].mean - 2.0 * (w[0].stderr.hypot(w[1].stderr)), "{w:?}");
    }
    assert!(c[4].mean > 0.95);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mode_contractions_equal_flat_product(seed in 0u64..10_000) {
        let inst = simulate_tensor(8, 3, 1.0, seed).unwrap();
        let x = uniform_sphere(8, &mut rng_from_seed(seed + 1));
        let a = contract_all(&inst.y, 8, 3, &x);
        prop_assert!((a - flat_inner(&inst.y, 8, 3, &x)).abs() < 1e-9);
        prop_assert!((a - triple_sum(&inst.y, 8, &x)).abs() < 1e-9);
    }

    #[test]
    fn band_masses_partition_exactly(seed in 0u64..1000, lambda in 0.0f64..4.0, s in 0.0f64..0.4, gap in 0.05f64..0.5) {
        let inst = simulate_tensor(5, 3, lambda, seed).unwrap();
        let m = posterior_band_masses(&inst, &Bands::new(s, s + gap, 3).unwrap(), 500, seed).unwrap();
        prop_assert_eq!(m.start + m.well + m.target, 1.0);
    }

    #[test]
    fn curve_is_flat_at_zero(lambda in 0.0f64..20.0, p in 3usize..7) {
        let c = averaged_free_entropy_curve(lambda, p, &[-1e-7, 0.0, 1e-7]).unwrap();
        prop_assert!(((c.f[2] - c.f[0]) / 2e-7).abs() < 1e-6);
    }
}
