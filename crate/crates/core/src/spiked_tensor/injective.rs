use rayon::prelude::*;
use serde::Serialize;

use super::tensor::{power_iteration, symmetrize};
use crate::error::{Error, Result};
use crate::linalg::uniform_sphere;
use crate::rng::{derive_seed, rng_from_seed, streams};

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InjectiveEstimate {
    /// Best `<x^{⊗p}, Z>` over all restarts; a lower bound on the injective norm.
    pub value: f64,
    /// `value / sqrt(n)`.
    pub normalized: f64,
    pub argmax: Vec<f64>,
    pub restarts: usize,
    pub non_converged: usize,
}

/// Multi-start symmetric power iteration for `max_{|x|=1} <x^{⊗p}, Z>`.
///
/// Restart `i` starts from a uniform point drawn from its own seed, so the
/// estimate for `k` restarts is a running maximum over a fixed sequence and
/// never decreases in `k`. For even `p` the iteration is also run on `-Z`,
/// whose maximisers are the minimisers of `Z`; the two extremes agree only
/// in absolute value, so the larger one is kept.
pub fn injective_norm_estimate(z: &[f64], n: usize, p: usize, n_restarts: usize, seed: u64) -> Result<InjectiveEstimate> {
    if p < 2 || n == 0 || n.checked_pow(p as u32) != Some(z.len()) {
        return Err(Error::Domain(format!("tensor of length {} is not {n}^{p}", z.len())));
    }
    if n_restarts == 0 {
        return Err(Error::Domain("need at least one restart".into()));
    }
    let sym = symmetrize(z, n, p);
    let neg: Option<Vec<f64>> = (p % 2 == 0).then(|| sym.iter().map(|v| -v).collect());
    let runs: Vec<_> = (0..n_restarts)
        .into_par_iter()
        .map(|i| {
            let x0 = uniform_sphere(n, &mut rng_from_seed(derive_seed(seed, streams::RESTART, i as u64)));
            let mut out = vec![power_iteration(&sym, n, p, &x0, POWER_MAX_ITER, POWER_TOL)];
            if let Some(neg) = &neg {
                out.push(power_iteration(neg, n, p, &x0, POWER_MAX_ITER, POWER_TOL));
            }
            out
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut non_converged = 0;
    for r in runs.into_iter().flatten() {
        if !r.converged {
            non_converged += 1;
        }
        if !r.value.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|(v, _)| r.value > *v) {
            best = Some((r.value, r.x));
        }
    }
    let (value, argmax) = best.ok_or_else(|| Error::NonFinite("power iteration value".into()))?;
    Ok(InjectiveEstimate { value, normalized: value / (n as f64).sqrt(), argmax, restarts: n_restarts, non_converged })
}
