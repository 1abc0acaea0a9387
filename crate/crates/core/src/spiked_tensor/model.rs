use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::tensor::contract_all;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm, uniform_sphere};
use crate::rng::{rng_from, streams};
use crate::samplers::LogTarget;

/// Largest number of tensor entries accepted.
pub const MAX_ENTRIES: usize = 100_000_000;

/// `Y = λ sqrt(n) θ0^{⊗p} + Z` with `θ0` uniform on `S^{n-1}` and `Z` standard Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorInstance {
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
    /// Row-major `n^p` entries.
    pub y: Vec<f64>,
    pub theta0: Vec<f64>,
    pub seed: u64,
}

pub fn entries(n: usize, p: usize) -> Result<usize> {
    match n.checked_pow(p as u32) {
        Some(m) if m <= MAX_ENTRIES => Ok(m),
        _ => Err(Error::Domain(format!("n^p = {n}^{p} exceeds the limit of {MAX_ENTRIES} entries"))),
    }
}

pub fn simulate_tensor(n: usize, p: usize, lambda: f64, seed: u64) -> Result<TensorInstance> {
    if n < 2 || p < 3 {
        return Err(Error::Domain(format!("need n >= 2 and p >= 3, got n={n}, p={p}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let m = entries(n, p)?;
    let mut rng = rng_from(seed, streams::TENSOR, 0);
    let theta0 = uniform_sphere(n, &mut rng);
    let amp = lambda * (n as f64).sqrt();
    let mut y = Vec::with_capacity(m);
    let mut idx = vec![0usize; p];
    for _ in 0..m {
        let spike: f64 = idx.iter().map(|&i| theta0[i]).product();
        let z: f64 = rng.sample(StandardNormal);
        y.push(amp * spike + z);
        for k in (0..p).rev() {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(TensorInstance { n, p, lambda, y, theta0, seed })
}

impl TensorInstance {
    /// `ℓ_{n,Y}(θ) = 1/2 sqrt(n) λ <θ^{⊗p}, Y>` without the unit-norm check.
    pub fn loglik_unchecked(&self, theta: &[f64]) -> f64 {
        0.5 * (self.n as f64).sqrt() * self.lambda * contract_all(&self.y, self.n, self.p, theta)
    }

    pub fn correlation(&self, theta: &[f64]) -> f64 {
        dot(theta, &self.theta0)
    }

    /// Little-endian binary: `n: u64, p: u64, λ: f64, seed: u64, θ0 (n f64), Y (n^p f64)`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&(self.p as u64).to_le_bytes())?;
        out.write_all(&self.lambda.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        for v in self.theta0.iter().chain(&self.y) {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut b = [0u8; 8];
        let mut next = |input: &mut R| -> Result<[u8; 8]> {
            input.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated tensor file: {e}")))?;
            Ok(b)
        };
        let n = u64::from_le_bytes(next(&mut input)?) as usize;
        let p = u64::from_le_bytes(next(&mut input)?) as usize;
        let lambda = f64::from_le_bytes(next(&mut input)?);
        let seed = u64::from_le_bytes(next(&mut input)?);
        let m = entries(n, p)?;
        let mut theta0 = Vec::with_capacity(n);
        for _ in 0..n {
            theta0.push(f64::from_le_bytes(next(&mut input)?));
        }
        let mut y = Vec::with_capacity(m);
        for _ in 0..m {
            y.push(f64::from_le_bytes(next(&mut input)?));
        }
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after tensor data", rest.len())));
        }
        Ok(TensorInstance { n, p, lambda, y, theta0, seed })
    }
}

/// `ℓ_{n,Y}(θ)`; `θ` must be a unit vector to within `1e-9`.
pub fn tensor_loglik(inst: &TensorInstance, theta: &[f64]) -> Result<f64> {
    check_dim(inst.n, theta.len())?;
    let r = norm(theta);
    if (r - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("theta must lie on the unit sphere, |theta| = {r}")));
    }
    Ok(inst.loglik_unchecked(theta))
}

/// The tensor log-likelihood as a chain target on the sphere.
pub struct TensorTarget<'a> {
    pub inst: &'a TensorInstance,
}

impl LogTarget for TensorTarget<'_> {
    fn dim(&self) -> usize {
        self.inst.n
    }
    fn log_value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inst.loglik_unchecked(x))
    }
}

/// Averaged per-coordinate log-likelihood `λ q^p / 2`, `q = <θ, θ0>`.
pub fn averaged_loglik(theta: &[f64], theta0: &[f64], lambda: f64, p: usize) -> Result<f64> {
    check_dim(theta0.len(), theta.len())?;
    Ok(0.5 * lambda * dot(theta, theta0).powi(p as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Max,
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub q: f64,
    pub f: f64,
    pub kind: CriticalKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeEntropyCurve {
    pub lambda: f64,
    pub p: usize,
    pub q: Vec<f64>,
    pub f: Vec<f64>,
    /// `(λ/2) q^p`.
    pub energy: Vec<f64>,
    /// `1/2 log(1 - q^2)`.
    pub entropy: Vec<f64>,
    pub critical: Vec<CriticalPoint>,
}

fn curve_f(lambda: f64, p: usize, q: f64) -> f64 {
    0.5 * lambda * q.powi(p as i32) + 0.5 * (-q * q).ln_1p()
}

fn curve_df(lambda: f64, p: usize, q: f64) -> f64 {
    0.5 * lambda * p as f64 * q.powi(p as i32 - 1) - q / (1.0 - q * q)
}

/// `F(q) = (λ/2) q^p + 1/2 log(1 - q^2)` on an increasing grid in `(-1, 1)`,
/// with the interior critical points located by sign changes of `F'` and
/// refined by bisection.
pub fn averaged_free_entropy_curve(lambda: f64, p: usize, q_grid: &[f64]) -> Result<FreeEntropyCurve> {
    if q_grid.iter().any(|q| !(q.abs() < 1.0)) {
        return Err(Error::Domain("grid must lie strictly inside (-1, 1)".into()));
    }
    if q_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("grid must be strictly increasing".into()));
    }
    let f: Vec<f64> = q_grid.iter().map(|&q| curve_f(lambda, p, q)).collect();
    let d: Vec<f64> = q_grid.iter().map(|&q| curve_df(lambda, p, q)).collect();
    let mut critical = Vec::new();
    let classify = |left: f64, right: f64| if left > 0.0 && right < 0.0 { Some(CriticalKind::Max) } else if left < 0.0 && right > 0.0 { Some(CriticalKind::Min) } else { None };
    for j in 0..q_grid.len() {
        if d[j] == 0.0 && j > 0 && j + 1 < q_grid.len() {
            if let Some(kind) = classify(d[j - 1], d[j + 1]) {
                critical.push(CriticalPoint { q: q_grid[j], f: f[j], kind });
            }
        }
        if j + 1 < q_grid.len() && d[j] != 0.0 && d[j + 1] != 0.0 {
            if let Some(kind) = classify(d[j], d[j + 1]) {
                let (mut a, mut b) = (q_grid[j], q_grid[j + 1]);
                let sa = d[j].signum();
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if curve_df(lambda, p, m).signum() == sa {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let q = 0.5 * (a + b);
                critical.push(CriticalPoint { q, f: curve_f(lambda, p, q), kind });
            }
        }
    }
    Ok(FreeEntropyCurve {
        lambda,
        p,
        q: q_grid.to_vec(),
        energy: q_grid.iter().map(|&q| 0.5 * lambda * q.powi(p as i32)).collect(),
        entropy: q_grid.iter().map(|&q| 0.5 * (-q * q).ln_1p()).collect(),
        f,
        critical,
    })
}

/// Radius `n^{-1/2 + ε}` of the correlation window around the equator.
pub fn r_of_eps(n: usize, eps: f64) -> f64 {
    (n as f64).powf(-0.5 + eps)
}

/// Sphere step size `C (n λ^2)^{-1/p}`.
pub fn delta_step(n: usize, lambda: f64, p: usize, c: f64) -> f64 {
    c * (n as f64 * lambda * lambda).powf(-1.0 / p as f64)
}
