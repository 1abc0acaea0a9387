use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, uniform_radius_point};
use crate::measures::{posterior_ball_mass, radial_grid_build, BallPosterior, GridSpec};
use crate::priors::PriorSpec;
use crate::radial_model::{simulate_dataset, GSpec, RadialLikelihood, RegressionDataset, WParams};
use crate::rng::{derive_seed, rng_from, streams};
use crate::samplers::{run_chain, HittingTime, KernelConfig, KernelKind, Mala, MarkovKernel, Pcn, Posterior, RadialTarget};

/// Data-generating setup of the radial regression model with `θ0 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialModelConfig {
    pub n: usize,
    pub dim: usize,
    pub design_dim: usize,
    pub w: WParams,
    pub g: GSpec,
    pub data_seed: u64,
}

impl RadialModelConfig {
    pub fn simulate(&self) -> Result<RegressionDataset> {
        simulate_dataset(self.n, self.dim, self.design_dim, self.g, &vec![0.0; self.dim], &self.w, self.data_seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingConfig {
    /// Initial radii are uniform on `[init_lo, init_hi)`, directions uniform.
    pub init_lo: f64,
    pub init_hi: f64,
    /// Radius `s` of the target ball `B_s`.
    pub target_radius: f64,
    pub budget: usize,
    pub n_replicas: usize,
    /// Steps of norm `>= eta/2` are counted as exceedances.
    pub eta: f64,
    /// Quadrature cells for `Π(B_s|Z)` on `[0, s]` and on `[s, plateau]`;
    /// a tail cell covers the rest.
    pub inner_cells: usize,
    pub outer_cells: usize,
    pub n_mc: usize,
    /// Stop each chain on entry into `B_s`; otherwise run the full budget
    /// and record the first entry, as needed for warm-start controls.
    pub stop_at_target: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicaOutcome {
    pub index: usize,
    /// First step in `B_s`, or the budget if censored.
    pub hitting_time: usize,
    pub censored: bool,
    pub initial_radius: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub final_radius: f64,
    pub acceptance_rate: f64,
    pub step_exceedances: usize,
    /// Kernel fault, if the chain stopped early.
    pub fault: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingTimeReport {
    pub model: RadialModelConfig,
    pub prior: PriorSpec,
    pub kernel: KernelConfig,
    pub config: HittingConfig,
    pub seed: u64,
    pub replicas: Vec<ReplicaOutcome>,
    pub hits: usize,
    pub faults: usize,
    /// `Π(B_s|Z)` for the same dataset, with its quadrature bracket.
    pub posterior_mass: BallPosterior,
    pub posterior_mass_stderr: f64,
}

impl HittingTimeReport {
    /// Survival `Pr(τ > k)` over fault-free replicas, at each `k` in `ks`.
    pub fn survival(&self, ks: &[usize]) -> Vec<f64> {
        let ok: Vec<&ReplicaOutcome> = self.replicas.iter().filter(|r| r.fault.is_none()).collect();
        ks.iter()
            .map(|&k| if ok.is_empty() { f64::NAN } else { ok.iter().filter(|r| r.censored || r.hitting_time > k).count() as f64 / ok.len() as f64 })
            .collect()
    }
}

/// Uniform cells on `[0, s]` and `[s, max(plateau, 2s)]` plus a tail cell.
pub fn ball_grid(s: f64, w: &WParams, inner: usize, outer: usize) -> Result<GridSpec> {
    let top = w.plateau.max(2.0 * s);
    GridSpec::piecewise(&[(0.0, s, inner), (s, top, outer)], true)
}

fn ball_mass(prior: &PriorSpec, lik: &RadialLikelihood, w: &WParams, cfg: &HittingConfig, seed: u64) -> Result<(BallPosterior, f64)> {
    let grid = ball_grid(cfg.target_radius, w, cfg.inner_cells, cfg.outer_cells)?;
    let rg = radial_grid_build(prior, lik, w, &grid, cfg.n_mc, derive_seed(seed, streams::GRID, 0))?;
    let bp = posterior_ball_mass(&rg, cfg.target_radius)?;
    let stderr = if rg.exact {
        0.0
    } else {
        // delta method on log weights of the inner and outer regions
        let k = rg.edges.iter().position(|e| *e == cfg.target_radius).unwrap_or(0);
        let part = |range: std::ops::Range<usize>| {
            let (tot, _, _) = rg.log_weight(range.clone());
            range
                .map(|j| {
                    let lw = rg.log_mass[j] + rg.ll_mid[j];
                    if lw.is_finite() && rg.log_mass_stderr[j].is_finite() {
                        ((lw - tot).exp() * rg.log_mass_stderr[j]).powi(2)
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        };
        let v = part(0..k) + part(k..rg.cells());
        bp.mass * (1.0 - bp.mass) * v.sqrt()
    };
    Ok((bp, stderr))
}

/// Run `n_replicas` chains from the initial annulus and record the
/// censored hitting times of `B_s`, alongside `Π(B_s|Z)` by quadrature.
///
/// Replica `i` draws its start from `(seed, INIT, i)` and runs its chain
/// from `derive_seed(seed, REPLICA, i)`; faults are recorded per replica.
pub fn hitting_time_experiment(
    model: &RadialModelConfig,
    prior: &PriorSpec,
    kernel: &KernelConfig,
    cfg: &HittingConfig,
    seed: u64,
) -> Result<HittingTimeReport> {
    kernel.validate()?;
    model.w.validate()?;
    if prior.dim() != model.dim {
        return Err(Error::DimensionMismatch { expected: model.dim, found: prior.dim() });
    }
    if cfg.budget == 0 || cfg.n_replicas == 0 {
        return Err(Error::Domain("budget and n_replicas must be >= 1".into()));
    }
    if !(0.0 <= cfg.init_lo && cfg.init_lo <= cfg.init_hi && cfg.target_radius > 0.0) {
        return Err(Error::Domain("need 0 <= init_lo <= init_hi and target_radius > 0".into()));
    }
    let data = model.simulate()?;
    let lik = RadialLikelihood::new(&data, model.g);
    let target = RadialTarget { lik, w: model.w };
    let (posterior_mass, posterior_mass_stderr) = ball_mass(prior, &lik, &model.w, cfg, seed)?;
    let s = cfg.target_radius;
    let stop = move |x: &[f64]| norm(x) <= s;
    let radius = |x: &[f64]| norm(x);
    let run = |i: usize, k: &dyn MarkovKernel| -> ReplicaOutcome {
        let x0 = uniform_radius_point(model.dim, cfg.init_lo, cfg.init_hi, &mut rng_from(seed, streams::INIT, i as u64));
        let r0 = norm(&x0);
        let stop_rule: Option<&(dyn Fn(&[f64]) -> bool + Sync)> = if cfg.stop_at_target { Some(&stop) } else { None };
        match run_chain(k, x0, cfg.budget, derive_seed(seed, streams::REPLICA, i as u64), stop_rule, &radius, 0) {
            Ok(tr) => {
                let ht = match tr.hitting_time {
                    Some(h) => h,
                    None => match tr.summaries().position(|r| r <= s) {
                        Some(k) => HittingTime::Hit(k),
                        None => HittingTime::Censored(cfg.budget),
                    },
                };
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for r in tr.summaries() {
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                ReplicaOutcome {
                    index: i,
                    hitting_time: ht.steps(),
                    censored: ht.is_censored(),
                    initial_radius: r0,
                    min_radius: lo,
                    max_radius: hi,
                    final_radius: norm(&tr.final_state),
                    acceptance_rate: tr.acceptance_rate(),
                    step_exceedances: tr.records.iter().filter(|r| r.step_norm >= 0.5 * cfg.eta).count(),
                    fault: None,
                }
            }
            Err(e) => ReplicaOutcome {
                index: i,
                hitting_time: 0,
                censored: false,
                initial_radius: r0,
                min_radius: r0,
                max_radius: r0,
                final_radius: r0,
                acceptance_rate: 0.0,
                step_exceedances: 0,
                fault: Some(e.to_string()),
            },
        }
    };
    let replicas: Vec<ReplicaOutcome> = match kernel.kind {
        KernelKind::Pcn { beta } => {
            let k = Pcn { target, prior: *prior, beta };
            (0..cfg.n_replicas).into_par_iter().map(|i| run(i, &k)).collect()
        }
        KernelKind::Mala { gamma } => {
            let k = Mala { target: Posterior { lik: target, prior: *prior }, gamma };
            (0..cfg.n_replicas).into_par_iter().map(|i| run(i, &k)).collect()
        }
        KernelKind::SphereRwmh { .. } => {
            return Err(Error::Precondition("the sphere random walk does not apply to the radial model".into()));
        }
    };
    Ok(HittingTimeReport {
        model: *model,
        prior: *prior,
        kernel: *kernel,
        config: cfg.clone(),
        seed,
        hits: replicas.iter().filter(|r| r.fault.is_none() && !r.censored).count(),
        faults: replicas.iter().filter(|r| r.fault.is_some()).count(),
        replicas,
        posterior_mass,
        posterior_mass_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (RadialModelConfig, PriorSpec, HittingConfig) {
        let w = WParams::new(4.0, 0.2, 2.0, 0.1).unwrap();
        let model = RadialModelConfig { n: 16, dim: 4, design_dim: 1, w, g: GSpec::ConstantOne, data_seed: 3 };
        let cfg = HittingConfig { init_lo: 0.5, init_hi: 0.6, target_radius: 0.3, budget: 200, n_replicas: 6, eta: 0.05, inner_cells: 200, outer_cells: 100, n_mc: 0, stop_at_target: true };
        (model, PriorSpec::isotropic(4).unwrap(), cfg)
    }

    #[test]
    fn start_inside_target_hits_at_zero() {
        let (model, prior, mut cfg) = small();
        cfg.target_radius = 0.8;
        let k = KernelConfig::new(KernelKind::Pcn { beta: 0.1 }, 0).unwrap();
        let rep = hitting_time_experiment(&model, &prior, &k, &cfg, 1).unwrap();
        assert!(rep.replicas.iter().all(|r| r.hitting_time == 0 && !r.censored));
        cfg.stop_at_target = false;
        let full = hitting_time_experiment(&model, &prior, &k, &cfg, 1).unwrap();
        assert!(full.replicas.iter().all(|r| r.hitting_time == 0 && r.acceptance_rate > 0.0));
    }

    #[test]
    fn budget_monotone_and_reproducible() {
        let (model, prior, mut cfg) = small();
        let k = KernelConfig::new(KernelKind::Mala { gamma: 0.01 }, 0).unwrap();
        let a = hitting_time_experiment(&model, &prior, &k, &cfg, 5).unwrap();
        assert_eq!(a, hitting_time_experiment(&model, &prior, &k, &cfg, 5).unwrap());
        cfg.budget = 400;
        let b = hitting_time_experiment(&model, &prior, &k, &cfg, 5).unwrap();
        for (x, y) in a.replicas.iter().zip(&b.replicas) {
            assert!(y.hitting_time >= x.hitting_time);
            if !x.censored {
                assert_eq!(x.hitting_time, y.hitting_time);
            }
        }
        let surv = b.survival(&[0, 100, 400]);
        assert!(surv.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn sphere_kernel_refused() {
        let (model, prior, cfg) = small();
        let k = KernelConfig::new(KernelKind::SphereRwmh { step: 0.1 }, 0).unwrap();
        assert!(matches!(hitting_time_experiment(&model, &prior, &k, &cfg, 1), Err(Error::Precondition(_))));
    }
}
