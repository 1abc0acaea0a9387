use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::model::{simulate_tensor, TensorInstance};
use super::tensor::{contract_except_first, power_iteration, symmetrize};
use crate::error::{Error, Result};
use crate::linalg::{dot, log_sum_exp, norm, uniform_sphere};
use crate::measures::band_prior_masses;
use crate::rng::{derive_seed, rng_from, streams};

/// Effective sample sizes below this are flagged.
pub const MIN_ESS: f64 = 100.0;
const CHUNK: usize = 2048;
const UNIFORM_SHARE: f64 = 0.2;
const MODE_RESTARTS: usize = 16;
const SPREAD: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Start,
    Well,
    Target,
}

/// Latitude bands in the correlation `q = <θ, θ0>`: `S_s = {q < s}`,
/// `W_{s,t} = {s <= q < t}`, `T_t = {q >= t}`, with `|q|` in place of `q`
/// for even `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bands {
    pub s: f64,
    pub t: f64,
    pub p: usize,
}

impl Bands {
    pub fn new(s: f64, t: f64, p: usize) -> Result<Self> {
        if !(0.0 <= s && s < t && t < 1.0) {
            return Err(Error::Domain(format!("need 0 <= s < t < 1, got s={s}, t={t}")));
        }
        Ok(Bands { s, t, p })
    }

    pub fn even(&self) -> bool {
        self.p % 2 == 0
    }

    pub fn region_of_q(&self, q: f64) -> Region {
        let q = if self.even() { q.abs() } else { q };
        if q < self.s {
            Region::Start
        } else if q < self.t {
            Region::Well
        } else {
            Region::Target
        }
    }

    pub fn region(&self, theta: &[f64], theta0: &[f64]) -> Region {
        self.region_of_q(dot(theta, theta0))
    }
}

/// Angular central Gaussian around `±m`: the law of `z/|z|` with
/// `z ~ N(0, m m^T + δ² (I - m m^T))`.
#[derive(Clone, Debug)]
struct Acg {
    m: Vec<f64>,
    delta: f64,
}

impl Acg {
    /// Log density with respect to the uniform probability on the sphere.
    fn ln_density(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let c2 = dot(x, &self.m).powi(2);
        let d2 = self.delta * self.delta;
        -(n - 1.0) * self.delta.ln() - 0.5 * n * (c2 + (1.0 - c2).max(0.0) / d2).ln()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let g: Vec<f64> = (0..self.m.len()).map(|_| rng.sample(StandardNormal)).collect();
            let gm = dot(&g, &self.m);
            let mut z: Vec<f64> = g.iter().zip(&self.m).map(|(gi, mi)| self.delta * gi + (1.0 - self.delta) * gm * mi).collect();
            let r = norm(&z);
            if r > 0.0 && r.is_finite() {
                z.iter_mut().for_each(|v| *v /= r);
                return z;
            }
        }
    }
}

/// Weighted draws from the uniform sphere approximating `Π(·|Y)`.
#[derive(Clone, Debug)]
pub struct ImportanceSample {
    pub points: Vec<Vec<f64>>,
    /// Unnormalised log weights `ℓ(θ) - log g(θ)` for the proposal density `g`
    /// relative to the uniform law.
    pub log_w: Vec<f64>,
    pub n_components: usize,
}

impl ImportanceSample {
    /// Weights rescaled so the largest equals 1.
    pub fn weights(&self) -> Vec<f64> {
        let mx = self.log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.log_w.iter().map(|l| (l - mx).exp()).collect()
    }

    pub fn ess(&self) -> f64 {
        let w = self.weights();
        let s: f64 = w.iter().sum();
        let s2: f64 = w.iter().map(|v| v * v).sum();
        s * s / s2
    }
}

/// Local maximisers of `ℓ` from power iteration on the symmetrised
/// observation, deduplicated up to sign.
fn likelihood_modes(inst: &TensorInstance, seed: u64) -> Vec<(Vec<f64>, f64)> {
    if inst.lambda == 0.0 {
        return Vec::new();
    }
    let (n, p) = (inst.n, inst.p);
    let sym = symmetrize(&inst.y, n, p);
    let runs: Vec<_> = (0..MODE_RESTARTS)
        .into_par_iter()
        .map(|i| {
            let x0 = uniform_sphere(n, &mut rng_from(seed, streams::RESTART, i as u64));
            power_iteration(&sym, n, p, &x0, 500, 1e-10)
        })
        .collect();
    let mut modes: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in runs {
        let l = inst.loglik_unchecked(&r.x);
        if !(l > 0.0) || !l.is_finite() {
            continue;
        }
        if modes.iter().any(|(m, _)| dot(m, &r.x).abs() > 0.99) {
            continue;
        }
        modes.push((r.x, l));
    }
    modes
}

/// Self-normalised importance sample for the tensor posterior under the
/// uniform prior. The proposal is a defensive mixture of the uniform law
/// and angular central Gaussians at the likelihood modes, with spread set
/// by the radial curvature `m · ∇ℓ(m)`.
pub fn importance_sample(inst: &TensorInstance, n_mc: usize, seed: u64) -> Result<ImportanceSample> {
    if n_mc == 0 {
        return Err(Error::Domain("n_mc must be positive".into()));
    }
    let (n, p) = (inst.n, inst.p);
    let sym = symmetrize(&inst.y, n, p);
    let scale = 0.5 * (n as f64).sqrt() * inst.lambda;
    let comps: Vec<Acg> = likelihood_modes(inst, seed)
        .into_iter()
        .map(|(m, _)| {
            let curv = scale * p as f64 * dot(&m, &contract_except_first(&sym, n, p, &m));
            let delta2 = (SPREAD / curv).clamp(1e-6, 1.0);
            Acg { m, delta: delta2.sqrt() }
        })
        .collect();
    let k = comps.len();
    let ln_uni = if k == 0 { 0.0 } else { UNIFORM_SHARE.ln() };
    let ln_comp = if k == 0 { f64::NEG_INFINITY } else { ((1.0 - UNIFORM_SHARE) / k as f64).ln() };
    let chunks = n_mc.div_ceil(CHUNK);
    let parts: Vec<(Vec<Vec<f64>>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from(seed, streams::IMPORTANCE, c as u64);
            let len = CHUNK.min(n_mc - c * CHUNK);
            let mut pts = Vec::with_capacity(len);
            let mut lw = Vec::with_capacity(len);
            let mut terms = Vec::with_capacity(k + 1);
            for _ in 0..len {
                let x = if k == 0 {
                    uniform_sphere(n, &mut rng)
                } else {
                    let u: f64 = rng.random();
                    if u < UNIFORM_SHARE {
                        uniform_sphere(n, &mut rng)
                    } else {
                        let j = (((u - UNIFORM_SHARE) / (1.0 - UNIFORM_SHARE)) * k as f64) as usize;
                        comps[j.min(k - 1)].sample(&mut rng)
                    }
                };
                terms.clear();
                terms.push(ln_uni);
                terms.extend(comps.iter().map(|a| ln_comp + a.ln_density(&x)));
                lw.push(inst.loglik_unchecked(&x) - log_sum_exp(&terms));
                pts.push(x);
            }
            (pts, lw)
        })
        .collect();
    let mut points = Vec::with_capacity(n_mc);
    let mut log_w = Vec::with_capacity(n_mc);
    for (p, l) in parts {
        points.extend(p);
        log_w.extend(l);
    }
    if log_w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("importance log-weight".into()));
    }
    Ok(ImportanceSample { points, log_w, n_components: k })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandMasses {
    pub start: f64,
    pub well: f64,
    pub target: f64,
    pub start_stderr: f64,
    pub well_stderr: f64,
    pub target_stderr: f64,
    /// `Π(S|Y) / Π(T|Y)`.
    pub ratio: f64,
    pub ess: f64,
    pub ess_low: bool,
    pub n_mc: usize,
}

/// Region masses from a weighted sample; the target mass is the complement,
/// so the three masses sum to exactly one.
pub fn band_masses_from(sample: &ImportanceSample, bands: &Bands, theta0: &[f64]) -> BandMasses {
    let w = sample.weights();
    let regions: Vec<Region> = sample.points.iter().map(|x| bands.region(x, theta0)).collect();
    let total: f64 = w.iter().sum();
    let mass = |r: Region| w.iter().zip(&regions).filter(|(_, g)| **g == r).map(|(v, _)| v).sum::<f64>() / total;
    let start = mass(Region::Start);
    let well = mass(Region::Well);
    let target = 1.0 - (start + well);
    let se = |r: Region, m: f64| {
        let v: f64 = w.iter().zip(&regions).map(|(wi, g)| {
            let d = if *g == r { 1.0 - m } else { -m };
            wi * wi * d * d
        }).sum();
        v.sqrt() / total
    };
    let ess = total * total / w.iter().map(|v| v * v).sum::<f64>();
    BandMasses {
        start,
        well,
        target,
        start_stderr: se(Region::Start, start),
        well_stderr: se(Region::Well, well),
        target_stderr: se(Region::Target, target),
        ratio: start / target,
        ess,
        ess_low: ess < MIN_ESS,
        n_mc: w.len(),
    }
}

/// Posterior masses of `S_s`, `W_{s,t}` and `T_t` by importance sampling.
pub fn posterior_band_masses(inst: &TensorInstance, bands: &Bands, n_mc: usize, seed: u64) -> Result<BandMasses> {
    if bands.p != inst.p {
        return Err(Error::Domain(format!("band parity from p={} but instance has p={}", bands.p, inst.p)));
    }
    let sample = importance_sample(inst, n_mc, seed)?;
    Ok(band_masses_from(&sample, bands, &inst.theta0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionPoint {
    pub lambda: f64,
    /// Mean of `Π(T_s|Y)` over instances.
    pub mean: f64,
    /// Standard error of the mean across instances.
    pub stderr: f64,
    pub prior_mass: f64,
    pub min_ess: f64,
}

/// Mean posterior mass of `T_s` for each `λ`, over `n_seeds` instances.
/// Instance `j` reuses the same seeds at every `λ`, so the curve
/// compares like with like.
pub fn contraction_curve(n: usize, p: usize, lambdas: &[f64], s: f64, n_mc: usize, n_seeds: usize, seed: u64) -> Result<Vec<ContractionPoint>> {
    if n_seeds == 0 {
        return Err(Error::Domain("need at least one seed".into()));
    }
    let bands = Bands::new(0.0, s, p)?;
    if !(s > 0.0) {
        return Err(Error::Domain(format!("contraction threshold must be positive, got {s}")));
    }
    let prior_mass = band_prior_masses(n, 0.0, s, p)?.target;
    lambdas
        .iter()
        .map(|&lambda| {
            let runs: Vec<Result<BandMasses>> = (0..n_seeds)
                .into_par_iter()
                .map(|j| {
                    let inst = simulate_tensor(n, p, lambda, derive_seed(seed, streams::REPLICA, j as u64))?;
                    posterior_band_masses(&inst, &bands, n_mc, derive_seed(seed, streams::IMPORTANCE, j as u64))
                })
                .collect();
            let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
            let m = runs.len() as f64;
            let mean = runs.iter().map(|r| r.target).sum::<f64>() / m;
            let var = if runs.len() > 1 { runs.iter().map(|r| (r.target - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
            Ok(ContractionPoint {
                lambda,
                mean,
                stderr: (var / m).sqrt(),
                prior_mass,
                min_ess: runs.iter().map(|r| r.ess).fold(f64::INFINITY, f64::min),
            })
        })
        .collect()
}
