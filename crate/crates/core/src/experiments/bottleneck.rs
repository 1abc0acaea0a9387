use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, streams};
use crate::samplers::{run_chain, KernelConfig, KernelKind, SphereRwmh};
use crate::spiked_tensor::{band_masses_from, importance_sample, BandMasses, Bands, Region, TensorInstance, TensorTarget};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BottleneckReport {
    pub bands: Bands,
    pub kernel: KernelConfig,
    pub k_grid: Vec<usize>,
    /// Empirical `Pr(τ_t <= k)` per grid point.
    pub empirical: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `k Π(W|Y) / Π(S|Y)`.
    pub bound: Vec<f64>,
    /// Grid points where the bound is at least 1.
    pub vacuous: Vec<bool>,
    pub violation: bool,
    pub masses: BandMasses,
    pub n_replicas: usize,
    pub hitting_times: Vec<Option<usize>>,
    pub faults: usize,
    pub seed: u64,
}

/// Compare the empirical distribution of the hitting time of `T_t` with the
/// conductance bound `k Π(W|Y)/Π(S|Y)` for chains started from
/// `Π(·|Y, S_s)`.
///
/// Initial points are resampled from the importance draws that fall in
/// `S_s`, with probability proportional to their weights.
pub fn bottleneck_bound_check(
    inst: &TensorInstance,
    bands: &Bands,
    kernel: &KernelConfig,
    k_grid: &[usize],
    n_replicas: usize,
    n_mc: usize,
    seed: u64,
) -> Result<BottleneckReport> {
    kernel.validate()?;
    let step = match kernel.kind {
        KernelKind::SphereRwmh { step } => step,
        _ => return Err(Error::Precondition("the tensor model needs the sphere random walk".into())),
    };
    if bands.p != inst.p {
        return Err(Error::Domain(format!("band parity from p={} but instance has p={}", bands.p, inst.p)));
    }
    if n_replicas == 0 || k_grid.is_empty() {
        return Err(Error::Domain("need replicas and a non-empty k grid".into()));
    }
    if k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("k grid must be strictly increasing".into()));
    }
    let sample = importance_sample(inst, n_mc, derive_seed(seed, streams::IMPORTANCE, 0))?;
    let masses = band_masses_from(&sample, bands, &inst.theta0);
    let w = sample.weights();
    let start: Vec<usize> = (0..w.len()).filter(|&i| bands.region(&sample.points[i], &inst.theta0) == Region::Start && w[i] > 0.0).collect();
    if start.is_empty() {
        return Err(Error::Estimation("no importance draws fall in the starting band".into()));
    }
    let mut cum = Vec::with_capacity(start.len());
    let mut acc = 0.0;
    for &i in &start {
        acc += w[i];
        cum.push(acc);
    }
    let budget = *k_grid.last().unwrap();
    let kern = SphereRwmh { target: TensorTarget { inst }, step };
    let theta0 = &inst.theta0;
    let stop = |x: &[f64]| bands.region(x, theta0) == Region::Target;
    let corr = |x: &[f64]| crate::linalg::dot(x, theta0);
    let runs: Vec<Result<Option<usize>>> = (0..n_replicas)
        .into_par_iter()
        .map(|r| {
            let u: f64 = rng_from(seed, streams::INIT, r as u64).random::<f64>() * acc;
            let j = cum.partition_point(|c| *c <= u).min(start.len() - 1);
            let x0 = sample.points[start[j]].clone();
            if budget == 0 {
                return Ok(None);
            }
            let tr = run_chain(&kern, x0, budget, derive_seed(seed, streams::REPLICA, r as u64), Some(&stop), &corr, 0)?;
            let ht = tr.hitting_time.expect("stop rule supplied");
            Ok((!ht.is_censored()).then(|| ht.steps()))
        })
        .collect();
    let faults = runs.iter().filter(|r| r.is_err()).count();
    let hitting_times: Vec<Option<usize>> = runs.into_iter().map(|r| r.unwrap_or(None)).collect();
    let valid = (n_replicas - faults) as f64;
    if valid == 0.0 {
        return Err(Error::Estimation("every replica faulted".into()));
    }
    let mut empirical = Vec::with_capacity(k_grid.len());
    let mut stderr = Vec::with_capacity(k_grid.len());
    let mut bound = Vec::with_capacity(k_grid.len());
    let ratio = masses.well / masses.start;
    for &k in k_grid {
        let hits = hitting_times.iter().filter(|h| matches!(h, Some(t) if *t <= k)).count() as f64;
        let p = hits / valid;
        empirical.push(p);
        stderr.push((p * (1.0 - p) / valid).sqrt());
        bound.push(k as f64 * ratio);
    }
    let violation = empirical.iter().zip(&bound).zip(&stderr).any(|((e, b), s)| *e > b + 3.0 * s);
    Ok(BottleneckReport {
        bands: *bands,
        kernel: *kernel,
        k_grid: k_grid.to_vec(),
        vacuous: bound.iter().map(|b| *b >= 1.0).collect(),
        empirical,
        stderr,
        bound,
        violation,
        masses,
        n_replicas,
        hitting_times,
        faults,
        seed,
    })
}
