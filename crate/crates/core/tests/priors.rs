use entropic_barriers::linalg::{norm, standard_normal_vec};
use entropic_barriers::priors::*;
use entropic_barriers::rng::rng_from_seed;
use entropic_barriers::Error;
use proptest::prelude::*;

#[test]
fn isotropic_second_moment() {
    let spec = PriorSpec::isotropic(1000).unwrap();
    let draws = sample_prior(&spec, 10_000, 1);
    let m = draws.iter().map(|x| norm(x).powi(2)).sum::<f64>() / draws.len() as f64;
    assert!((m - 1.0).abs() < 0.01);
}

#[test]
fn alpha_regular_coordinate_variance() {
    let spec = PriorSpec::alpha_regular(100, 1.0, 1).unwrap();
    let draws = sample_prior(&spec, 20_000, 2);
    let v = draws.iter().map(|x| x[9] * x[9]).sum::<f64>() / draws.len() as f64;
    assert!((v - 0.01).abs() < 0.1 * 0.01, "{v}");
    assert_eq!(spec.b(), Some(0.5));
    assert_eq!(spec.tau(), Some(2.0));
    assert!(PriorSpec::alpha_regular(10, 0.5, 1).is_err());
}

#[test]
fn rescale_doubles_standard_deviation() {
    let base = PriorSpec::alpha_regular(20, 1.5, 1).unwrap();
    let four = base.with_rescale(4.0).unwrap();
    let a = sample_prior(&base, 5, 3);
    let b = sample_prior(&four, 5, 3);
    for (x, y) in a.iter().zip(&b) {
        for (u, v) in x.iter().zip(y) {
            assert!((2.0 * u - v).abs() < 1e-12);
        }
    }
}

#[test]
fn log_density_reference_values() {
    let d = 7;
    let iso = PriorSpec::isotropic(d).unwrap();
    let df = d as f64;
    let at0 = iso.log_density(&vec![0.0; d]).unwrap();
    assert!((at0 - 0.5 * df * (df / (2.0 * std::f64::consts::PI)).ln()).abs() < 1e-12);
    let th = standard_normal_vec(d, &mut rng_from_seed(1));
    let diff = iso.log_density(&th).unwrap() - at0;
    assert!((diff + 0.5 * df * norm(&th).powi(2)).abs() < 1e-12);
    let ar = PriorSpec::alpha_regular(d, 1.0, 1).unwrap();
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    assert!((ar.log_density(&e1).unwrap() - ar.log_density(&vec![0.0; d]).unwrap() + 0.5).abs() < 1e-12);
    assert!(matches!(iso.log_density(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn gradient_reference_values() {
    let iso = PriorSpec::isotropic(50).unwrap();
    let mut e1 = vec![0.0; 50];
    e1[0] = 1.0;
    let g = iso.grad_log_density(&e1).unwrap();
    assert_eq!(g[0], -50.0);
    assert!(g[1..].iter().all(|v| *v == 0.0));
    assert!(iso.grad_log_density(&vec![0.0; 50]).unwrap().iter().all(|v| *v == 0.0));
    for spec in [PriorSpec::isotropic(6).unwrap(), PriorSpec::alpha_regular(6, 1.2, 1).unwrap().with_rescale(0.5).unwrap()] {
        let mut rng = rng_from_seed(4);
        for _ in 0..100 {
            let th = standard_normal_vec(6, &mut rng);
            let g = spec.grad_log_density(&th).unwrap();
            for i in 0..6 {
                let h = 1e-6;
                let mut p = th.clone();
                let mut m = th.clone();
                p[i] += h;
                m[i] -= h;
                let fd = (spec.log_density(&p).unwrap() - spec.log_density(&m).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0));
                // Σ (-∇) = θ
                assert!((spec.variance(i) * -g[i] - th[i]).abs() < 1e-12 * th[i].abs().max(1.0));
            }
        }
    }
}

#[test]
fn radial_samples_properties() {
    let rs = radial_samples(&PriorSpec::isotropic(10_000).unwrap(), 501, 5);
    assert!(rs.radii.windows(2).all(|w| w[0] <= w[1]));
    assert!((rs.radii[250] - 1.0).abs() < 0.01);
    let one = radial_samples(&PriorSpec::isotropic(3).unwrap(), 1, 5);
    assert_eq!(one.radii.len(), 1);
    let ar = radial_samples(&PriorSpec::alpha_regular(100, 1.0, 1).unwrap(), 1000, 6);
    assert!(ar.radii.iter().all(|r| r.is_finite() && *r > 0.0));
    assert_eq!(ar.seeds.len(), 1000);
}

#[test]
fn chi_square_goodness_of_fit() {
    // equiprobable bins of the chi-square law with 10 degrees of freedom
    const EDGES: [f64; 19] = [
        3.9402991361190605, 4.865182051925328, 5.570059444215964, 6.179079256039391, 6.737200771954642,
        7.267218165927606, 7.783242968296064, 8.295471760941085, 8.812351798623965, 9.34181776559197,
        9.89221572579308, 10.473236231395454, 11.097142281931776, 11.780722627394013, 12.548861396889377,
        13.441957574973113, 14.533935995231001, 15.987179172105265, 18.307038053275154,
    ];
    const CRITICAL: f64 = 43.82019596451753; // 0.999 quantile, 19 degrees of freedom
    let n = 100_000;
    let draws = sample_prior(&PriorSpec::isotropic(10).unwrap(), n, 7);
    let mut counts = [0usize; 20];
    for x in &draws {
        let q = 10.0 * norm(x).powi(2);
        counts[EDGES.partition_point(|e| *e < q)] += 1;
    }
    let e = n as f64 / 20.0;
    let stat: f64 = counts.iter().map(|c| (*c as f64 - e).powi(2) / e).sum();
    assert!(stat < CRITICAL, "chi-square statistic {stat}");
}

#[test]
fn tail_fraction_decreases() {
    let draws = sample_prior(&PriorSpec::alpha_regular(200, 1.0, 1).unwrap(), 20_000, 8);
    let norms: Vec<f64> = draws.iter().map(|x| norm(x)).collect();
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    let frac: Vec<f64> = [0.0, 0.1, 0.2, 0.4, 0.8].iter().map(|x| norms.iter().filter(|r| **r >= 2.0 * mean * 0.5 + x).count() as f64).collect();
    assert!(frac.windows(2).all(|w| w[1] <= w[0]));
}

proptest! {
    #[test]
    fn deterministic_given_seed(seed in any::<u64>(), d in 1usize..30) {
        let spec = PriorSpec::isotropic(d).unwrap();
        prop_assert_eq!(sample_prior(&spec, 3, seed), sample_prior(&spec, 3, seed));
    }

    #[test]
    fn variances_follow_spectrum(alpha in 0.6f64..3.0, d in 1usize..3, dim in 1usize..50) {
        prop_assume!(alpha > d as f64 / 2.0);
        let spec = PriorSpec::alpha_regular(dim, alpha, d).unwrap();
        for i in 0..dim {
            let expect = ((i + 1) as f64).powf(-2.0 * alpha / d as f64);
            prop_assert!((spec.variance(i) - expect).abs() <= 1e-14 * expect);
        }
    }
}
