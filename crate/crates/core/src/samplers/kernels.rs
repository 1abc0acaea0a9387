use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::targets::{finite, ChainState, GradLogTarget, LogTarget};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, norm, standard_normal_vec};
use crate::priors::PriorSpec;
use crate::rng::SeededRng;

/// Outcome of one kernel step. A rejected step keeps the old state bit-for-bit
/// and reports `step_norm == 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: ChainState,
    pub accepted: bool,
    pub proposal: Vec<f64>,
    pub step_norm: f64,
}

fn accept_or_keep(state: &ChainState, proposed: ChainState, log_alpha: f64, u: f64) -> Transition {
    let accepted = log_alpha >= 0.0 || u.ln() < log_alpha;
    let proposal = proposed.x.clone();
    if accepted {
        let step_norm = dist(&state.x, &proposed.x);
        Transition { state: proposed, accepted, proposal, step_norm }
    } else {
        Transition { state: state.clone(), accepted, proposal, step_norm: 0.0 }
    }
}

/// pCN step with explicit noise: proposal `sqrt(1-β) x + sqrt(β) ξ` where
/// `xi_std` is standard normal and `ξ = C^{1/2} xi_std`; accepted when
/// `ln u < ℓ(p) - ℓ(x)`.
pub fn pcn_step_with_noise<T: LogTarget>(
    state: &ChainState,
    target: &T,
    prior: &PriorSpec,
    beta: f64,
    xi_std: &[f64],
    u: f64,
) -> Result<Transition> {
    check_dim(state.x.len(), xi_std.len())?;
    let a = (1.0 - beta).sqrt();
    let b = beta.sqrt();
    let p: Vec<f64> =
        state.x.iter().zip(xi_std).enumerate().map(|(i, (x, z))| a * x + b * prior.variance(i).sqrt() * z).collect();
    let lp = finite(target.log_value(&p)?, "log-likelihood at pCN proposal")?;
    let log_alpha = lp - state.log_value;
    Ok(accept_or_keep(state, ChainState { x: p, log_value: lp, grad: None }, log_alpha, u))
}

pub fn pcn_step<T: LogTarget>(
    state: &ChainState,
    target: &T,
    prior: &PriorSpec,
    beta: f64,
    rng: &mut SeededRng,
) -> Result<Transition> {
    let xi = standard_normal_vec(state.x.len(), rng);
    let u: f64 = rng.random();
    pcn_step_with_noise(state, target, prior, beta, &xi, u)
}

/// `ln α` of the MALA move `x -> y` for the posterior log-density `π`:
/// `π(y) - π(x) + ln q(x|y) - ln q(y|x)` with
/// `ln q(y|x) = -|y - x - γ ∇π(x)|^2 / (4γ)`.
pub fn mala_log_ratio(x: &ChainState, y: &ChainState, gamma: f64) -> f64 {
    let gx = x.grad.as_ref().expect("MALA state carries a gradient");
    let gy = y.grad.as_ref().expect("MALA state carries a gradient");
    let mut fwd = 0.0;
    let mut bwd = 0.0;
    for i in 0..x.x.len() {
        let f = y.x[i] - x.x[i] - gamma * gx[i];
        let b = x.x[i] - y.x[i] - gamma * gy[i];
        fwd += f * f;
        bwd += b * b;
    }
    y.log_value - x.log_value - bwd / (4.0 * gamma) + fwd / (4.0 * gamma)
}

/// MALA step with explicit standard normal noise.
pub fn mala_step_with_noise<T: GradLogTarget>(
    state: &ChainState,
    target: &T,
    gamma: f64,
    xi: &[f64],
    u: f64,
) -> Result<Transition> {
    check_dim(state.x.len(), xi.len())?;
    let g = state.grad.as_ref().ok_or_else(|| Error::Precondition("MALA state without gradient".into()))?;
    let s = (2.0 * gamma).sqrt();
    let p: Vec<f64> = (0..xi.len()).map(|i| state.x[i] + gamma * g[i] + s * xi[i]).collect();
    let lp = finite(target.log_value(&p)?, "log-posterior at MALA proposal")?;
    let gp = target.grad(&p)?;
    if gp.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient at MALA proposal".into()));
    }
    let proposed = ChainState { x: p, log_value: lp, grad: Some(gp) };
    let log_alpha = mala_log_ratio(state, &proposed, gamma);
    Ok(accept_or_keep(state, proposed, log_alpha, u))
}

pub fn mala_step<T: GradLogTarget>(state: &ChainState, target: &T, gamma: f64, rng: &mut SeededRng) -> Result<Transition> {
    let xi = standard_normal_vec(state.x.len(), rng);
    let u: f64 = rng.random();
    mala_step_with_noise(state, target, gamma, &xi, u)
}

/// Random-walk Metropolis on the unit sphere: proposal
/// `normalize(x + h ζ)`. The proposal density depends on `<x, y>` only, so it
/// is symmetric and no Hastings correction enters.
pub fn sphere_rwmh_step<T: LogTarget>(state: &ChainState, target: &T, step: f64, rng: &mut SeededRng) -> Result<Transition> {
    let n = state.x.len();
    let p = loop {
        let mut p: Vec<f64> = state.x.iter().map(|x| x + step * rng.sample::<f64, _>(StandardNormal)).collect();
        let r = norm(&p);
        if r > 0.0 && r.is_finite() {
            p.iter_mut().for_each(|v| *v /= r);
            break p;
        }
    };
    debug_assert_eq!(p.len(), n);
    let u: f64 = rng.random();
    let lp = finite(target.log_value(&p)?, "log-likelihood at sphere proposal")?;
    let log_alpha = lp - state.log_value;
    Ok(accept_or_keep(state, ChainState { x: p, log_value: lp, grad: None }, log_alpha, u))
}

/// A Markov kernel bound to its target.
pub trait MarkovKernel: Sync {
    fn dim(&self) -> usize;
    /// Evaluate the target at `x` to start a chain.
    fn init(&self, x: Vec<f64>) -> Result<ChainState>;
    fn step(&self, state: &ChainState, rng: &mut SeededRng) -> Result<Transition>;
}

/// pCN targeting `e^{ℓ} dΠ`; the target passed in is the log-likelihood `ℓ`.
pub struct Pcn<T> {
    pub target: T,
    pub prior: PriorSpec,
    pub beta: f64,
}

impl<T: LogTarget> MarkovKernel for Pcn<T> {
    fn dim(&self) -> usize {
        self.target.dim()
    }
    fn init(&self, x: Vec<f64>) -> Result<ChainState> {
        check_dim(self.dim(), x.len())?;
        let v = finite(self.target.log_value(&x)?, "initial log-likelihood")?;
        Ok(ChainState { x, log_value: v, grad: None })
    }
    fn step(&self, state: &ChainState, rng: &mut SeededRng) -> Result<Transition> {
        pcn_step(state, &self.target, &self.prior, self.beta, rng)
    }
}

/// MALA; the target is the full posterior log-density.
pub struct Mala<T> {
    pub target: T,
    pub gamma: f64,
}

impl<T: GradLogTarget> MarkovKernel for Mala<T> {
    fn dim(&self) -> usize {
        self.target.dim()
    }
    fn init(&self, x: Vec<f64>) -> Result<ChainState> {
        check_dim(self.dim(), x.len())?;
        let v = finite(self.target.log_value(&x)?, "initial log-posterior")?;
        let g = self.target.grad(&x)?;
        Ok(ChainState { x, log_value: v, grad: Some(g) })
    }
    fn step(&self, state: &ChainState, rng: &mut SeededRng) -> Result<Transition> {
        mala_step(state, &self.target, self.gamma, rng)
    }
}

/// Sphere random-walk Metropolis; the target is the log-likelihood on `S^{n-1}`
/// (the uniform prior contributes a constant).
pub struct SphereRwmh<T> {
    pub target: T,
    pub step: f64,
}

impl<T: LogTarget> MarkovKernel for SphereRwmh<T> {
    fn dim(&self) -> usize {
        self.target.dim()
    }
    fn init(&self, x: Vec<f64>) -> Result<ChainState> {
        check_dim(self.dim(), x.len())?;
        if (norm(&x) - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("sphere chain must start on the unit sphere".into()));
        }
        let v = finite(self.target.log_value(&x)?, "initial log-likelihood")?;
        Ok(ChainState { x, log_value: v, grad: None })
    }
    fn step(&self, state: &ChainState, rng: &mut SeededRng) -> Result<Transition> {
        sphere_rwmh_step(state, &self.target, self.step, rng)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelKind {
    Pcn { beta: f64 },
    Mala { gamma: f64 },
    SphereRwmh { step: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(flatten)]
    pub kind: KernelKind,
    pub seed: u64,
}

impl KernelConfig {
    pub fn new(kind: KernelKind, seed: u64) -> Result<Self> {
        let c = KernelConfig { kind, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Pcn { beta } if beta > 0.0 && beta <= 1.0 => Ok(()),
            KernelKind::Mala { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            KernelKind::SphereRwmh { step } if step > 0.0 && step.is_finite() => Ok(()),
            k => Err(Error::Domain(format!("invalid kernel parameters {k:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            KernelKind::Pcn { .. } => "pcn",
            KernelKind::Mala { .. } => "mala",
            KernelKind::SphereRwmh { .. } => "sphere-rwmh",
        }
    }
}
