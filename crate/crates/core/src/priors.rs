//! Diagonal Gaussian priors: isotropic `N(0, I/D)` and α-regular `N(0, diag(i^{-2α/d}))`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::{derive_seed, rng_from_seed, streams};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum PriorKind {
    Isotropic { dim: usize },
    AlphaRegular { dim: usize, alpha: f64, d: usize },
}

/// Prior with covariance `rescale * C`, `C` one of the two diagonal forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    #[serde(flatten)]
    pub kind: PriorKind,
    pub rescale: f64,
}

impl PriorSpec {
    pub fn isotropic(dim: usize) -> Result<Self> {
        PriorSpec { kind: PriorKind::Isotropic { dim }, rescale: 1.0 }.validated()
    }

    pub fn alpha_regular(dim: usize, alpha: f64, d: usize) -> Result<Self> {
        PriorSpec { kind: PriorKind::AlphaRegular { dim, alpha, d }, rescale: 1.0 }.validated()
    }

    pub fn with_rescale(mut self, rescale: f64) -> Result<Self> {
        self.rescale = rescale;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.rescale > 0.0 && self.rescale.is_finite()) {
            return Err(Error::Domain(format!("prior rescale must be positive, got {}", self.rescale)));
        }
        match self.kind {
            PriorKind::Isotropic { dim } if dim >= 1 => Ok(self),
            PriorKind::AlphaRegular { dim, alpha, d } if dim >= 1 && d >= 1 && alpha > d as f64 / 2.0 => Ok(self),
            _ => Err(Error::Domain(format!("invalid prior {self:?} (need D >= 1, d >= 1, alpha > d/2)"))),
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            PriorKind::Isotropic { dim } | PriorKind::AlphaRegular { dim, .. } => dim,
        }
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.kind, PriorKind::Isotropic { .. })
    }

    /// Variance of coordinate `i` (0-based).
    pub fn variance(&self, i: usize) -> f64 {
        match self.kind {
            PriorKind::Isotropic { dim } => self.rescale / dim as f64,
            PriorKind::AlphaRegular { alpha, d, .. } => self.rescale * ((i + 1) as f64).powf(-2.0 * alpha / d as f64),
        }
    }

    pub fn variances(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.variance(i)).collect()
    }

    /// Small-ball exponent `b = α/d - 1/2`; `None` for the isotropic prior.
    pub fn b(&self) -> Option<f64> {
        match self.kind {
            PriorKind::Isotropic { .. } => None,
            PriorKind::AlphaRegular { alpha, d, .. } => Some(alpha / d as f64 - 0.5),
        }
    }

    /// `τ = 1/b = 2d/(2α - d)`.
    pub fn tau(&self) -> Option<f64> {
        self.b().map(|b| 1.0 / b)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PriorKind::Isotropic { .. } => "isotropic",
            PriorKind::AlphaRegular { .. } => "alpha-regular",
        }
    }

    /// One draw using `rng`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let z: f64 = rng.sample(StandardNormal);
                self.variance(i).sqrt() * z
            })
            .collect()
    }

    /// Exact log-density including the normalising constant.
    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim(), theta.len())?;
        let mut s = 0.0;
        for (i, t) in theta.iter().enumerate() {
            let v = self.variance(i);
            s -= 0.5 * (LN_2PI + v.ln() + t * t / v);
        }
        Ok(s)
    }

    /// `-C^{-1} θ`.
    pub fn grad_log_density(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), theta.len())?;
        Ok(theta.iter().enumerate().map(|(i, t)| -t / self.variance(i)).collect())
    }
}

/// Seed of draw `m` in a batch with master `seed`.
pub fn draw_seed(seed: u64, m: usize) -> u64 {
    derive_seed(seed, streams::PRIOR, m as u64)
}

/// `count` independent draws; draw `m` uses its own stream so any subset can be regenerated.
pub fn sample_prior(spec: &PriorSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count).into_par_iter().map(|m| spec.draw(&mut rng_from_seed(draw_seed(seed, m)))).collect()
}

/// Sorted prior radii with the seed of the draw each came from.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialSamples {
    pub radii: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl RadialSamples {
    /// Fraction of radii in `[lo, hi)`.
    pub fn fraction_in(&self, lo: f64, hi: f64) -> f64 {
        let a = self.radii.partition_point(|r| *r < lo);
        let b = self.radii.partition_point(|r| *r < hi);
        (b.saturating_sub(a)) as f64 / self.radii.len() as f64
    }
}

pub fn radial_samples(spec: &PriorSpec, count: usize, seed: u64) -> RadialSamples {
    let mut pairs: Vec<(f64, u64)> = (0..count)
        .into_par_iter()
        .map(|m| {
            let s = draw_seed(seed, m);
            let th = spec.draw(&mut rng_from_seed(s));
            (th.iter().map(|v| v * v).sum::<f64>().sqrt(), s)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    RadialSamples { radii: pairs.iter().map(|p| p.0).collect(), seeds: pairs.iter().map(|p| p.1).collect() }
}
