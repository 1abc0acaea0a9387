use entropic_barriers::experiments::*;
use entropic_barriers::linalg::{norm, uniform_radius_point};
use entropic_barriers::priors::PriorSpec;
use entropic_barriers::radial_model::{GSpec, RadialLikelihood};
use entropic_barriers::rng::rng_from_seed;
use entropic_barriers::samplers::{read_trace_csv, run_chain, KernelConfig, KernelKind, Pcn, RadialTarget, TraceRow};
use entropic_barriers::spiked_tensor::{simulate_tensor, Bands};

const D: usize = 128;

fn design_model(data_seed: u64) -> (HardnessParams, RadialModelConfig) {
    let p = IsotropicHardnessDesign::default().solve().unwrap();
    (p, RadialModelConfig { n: D, dim: D, design_dim: 1, w: p.w, g: GSpec::ConstantOne, data_seed })
}

fn hitting_cfg(p: &HardnessParams, lo: f64, hi: f64, stop: bool) -> HittingConfig {
    HittingConfig {
        init_lo: lo,
        init_hi: hi,
        target_radius: p.s,
        budget: 100_000,
        n_replicas: 32,
        eta: p.eta,
        inner_cells: 2000,
        outer_cells: 500,
        n_mc: 0,
        stop_at_target: stop,
    }
}

#[test]
fn design_constants_are_consistent() {
    let d = IsotropicHardnessDesign::default();
    let p = d.solve().unwrap();
    assert!(d.barrier_gap(p.s_max).abs() < 1e-9);
    assert!(d.barrier_gap(p.s) > 0.0);
    assert!((p.s - d.safety * p.s_max).abs() < 1e-15);
    assert!((p.eta - p.s / 2.0).abs() < 1e-15);
    assert!(p.beta_cap <= (p.eta * p.eta / 64.0).min(p.eta / (4.0 * d.plateau)) + 1e-300);
    assert!(p.contraction_exponent >= 1.0 + d.margin - 1e-9);
}

#[test]
fn cold_start_is_censored_while_target_dominates() {
    let (p, model) = design_model(7);
    let kernel = KernelConfig::new(KernelKind::Pcn { beta: p.beta_cap }, 0).unwrap();
    let r = 2.0 / 3.0 + 0.5;
    let rep = hitting_time_experiment(&model, &PriorSpec::isotropic(D).unwrap(), &kernel, &hitting_cfg(&p, r, r, true), 11).unwrap();
    assert_eq!(rep.faults, 0);
    assert_eq!(rep.hits, 0);
    assert!(rep.replicas.iter().all(|o| o.censored && o.hitting_time == 100_000 && o.min_radius > p.s));
    assert!(rep.posterior_mass.certified && rep.posterior_mass.lower > 0.99, "{:?}", rep.posterior_mass);
    assert_eq!(rep.survival(&[0, 50_000, 99_999]), vec![1.0; 3]);
}

#[test]
fn warm_start_stays_near_truth() {
    let (p, model) = design_model(7);
    let kernel = KernelConfig::new(KernelKind::Pcn { beta: p.beta_cap }, 0).unwrap();
    let rep = hitting_time_experiment(&model, &PriorSpec::isotropic(D).unwrap(), &kernel, &hitting_cfg(&p, 0.0, p.s / 2.0, false), 12).unwrap();
    let stayed = rep.replicas.iter().filter(|o| o.fault.is_none() && o.max_radius < 2.0 * p.s).count();
    assert!(stayed >= 30, "{stayed}/32");
    assert!(rep.replicas.iter().all(|o| o.hitting_time == 0));
}

#[test]
fn target_containing_start_is_hit_immediately() {
    let (p, model) = design_model(1);
    let kernel = KernelConfig::new(KernelKind::Mala { gamma: 1e-4 }, 0).unwrap();
    let cfg = HittingConfig { target_radius: 3.0, budget: 10, n_replicas: 4, ..hitting_cfg(&p, 0.6, 1.6, true) };
    let rep = hitting_time_experiment(&model, &PriorSpec::isotropic(D).unwrap(), &kernel, &cfg, 1).unwrap();
    assert!(rep.replicas.iter().all(|o| o.hitting_time == 0 && !o.censored));
}

#[test]
fn conductance_bound_holds_for_the_sphere_walk() {
    let inst = simulate_tensor(12, 3, 5.0, 3).unwrap();
    let bands = Bands::new(0.2, 0.6, 3).unwrap();
    let kernel = KernelConfig::new(KernelKind::SphereRwmh { step: 0.05 }, 0).unwrap();
    let ks: Vec<usize> = (0..=4).map(|e| 10usize.pow(e)).collect();
    let rep = bottleneck_bound_check(&inst, &bands, &kernel, &ks, 200, 50_000, 4).unwrap();
    assert!(!rep.violation, "{:?} vs {:?}", rep.empirical, rep.bound);
    for w in rep.empirical.windows(2) {
        assert!(w[0] <= w[1]);
    }
    assert!(rep.empirical.iter().all(|e| (0.0..=1.0).contains(e)));
    let zero = bottleneck_bound_check(&inst, &bands, &kernel, &[0, 5], 20, 5000, 4).unwrap();
    assert_eq!((zero.empirical[0], zero.bound[0]), (0.0, 0.0));
}

#[test]
fn equal_band_masses_make_the_bound_vacuous() {
    let inst = simulate_tensor(12, 3, 0.0, 3).unwrap();
    let bands = Bands::new(0.0, 0.05, 3).unwrap();
    let kernel = KernelConfig::new(KernelKind::SphereRwmh { step: 0.1 }, 0).unwrap();
    let rep = bottleneck_bound_check(&inst, &bands, &kernel, &[1, 2, 10, 100], 20, 20_000, 5).unwrap();
    assert!(!rep.vacuous[0] || rep.bound[0] >= 1.0);
    assert!(rep.vacuous[2..].iter().all(|v| *v));
    assert!(!rep.violation);
}

fn trace_rows(steps: usize, beta: f64, x0: Vec<f64>, seed: u64, lik: RadialLikelihood, p: &HardnessParams) -> Vec<TraceRow> {
    let k = Pcn { target: RadialTarget { lik, w: p.w }, prior: PriorSpec::isotropic(D).unwrap(), beta };
    let tr = run_chain(&k, x0, steps, seed, None, &|x: &[f64]| norm(x), 0).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    read_trace_csv(buf.as_slice()).unwrap()
}

#[test]
fn permissive_runs_enter_only_through_the_barrier_or_by_jumps() {
    let (p, model) = design_model(9);
    let data = model.simulate().unwrap();
    let lik = RadialLikelihood::new(&data, GSpec::ConstantOne);
    let mut total = AuditReport::default();
    for i in 0..8u64 {
        // from outside, the shallow part of w lets the prior push chains away,
        // so entries are only seen when starting on the boundary of B_s
        let x0 = uniform_radius_point(D, p.s * 0.97, p.s * 1.03, &mut rng_from_seed(i));
        let beta = if i % 2 == 0 { 1e-7 } else { 1e-9 };
        let rows = trace_rows(20_000, beta, x0, 100 + i, lik, &p);
        let rep = barrier_reduction_audit(&rows, p.s, p.eta, p.w.plateau);
        // independent scan: every entry step is big or comes from below s + η
        for w in rows.windows(2) {
            if w[0].radius > p.s && w[1].radius <= p.s {
                assert!(w[1].step_norm >= p.eta / 2.0 || w[0].radius < p.s + p.eta);
            }
        }
        assert!(rep.consistent);
        total.entries += rep.entries;
        total.step_attributed += rep.step_attributed;
        total.barrier_attributed += rep.barrier_attributed;
    }
    assert!(total.entries > 0);
    assert_eq!(total.entries, total.step_attributed + total.barrier_attributed);
}
