//! Log-likelihoods of the radial model and their gradients.

use rand::Rng;

use super::dataset::RegressionDataset;
use super::wfun::{GSpec, WParams};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm, uniform_sphere};
use crate::rng::{rng_from, streams};

/// `ℓ_N(θ) = -1/2 Σ (Y_i - sqrt(w(|θ|)) g(X_i))^2`, summed directly.
pub fn loglik(theta: &[f64], data: &RegressionDataset, w: &WParams, g: GSpec) -> Result<f64> {
    check_dim(data.dim, theta.len())?;
    let a = w.value(norm(theta)).sqrt();
    let s: f64 = (0..data.n)
        .map(|i| {
            let e = data.y[i] - a * g.eval(data.design_point(i));
            e * e
        })
        .sum();
    Ok(-0.5 * s)
}

/// `E ℓ_N(θ) = -(N/2) w(|θ|) - N/2` under the null truth.
pub fn expected_loglik(theta: &[f64], n: usize, w: &WParams) -> f64 {
    let n = n as f64;
    -0.5 * n * w.value(norm(theta)) - 0.5 * n
}

/// Exact gradient of [`loglik`]. Errors on the kink radii; zero at the origin.
pub fn grad_loglik(theta: &[f64], data: &RegressionDataset, w: &WParams, g: GSpec) -> Result<Vec<f64>> {
    check_dim(data.dim, theta.len())?;
    let r = norm(theta);
    if w.is_kink(r) {
        return Err(Error::Kink { radius: r });
    }
    RadialLikelihood::new(data, g).grad(theta, w)
}

/// The likelihood through its sufficient statistics
/// `S_yy = Σ Y^2`, `S_yg = Σ Y g(X)`, `S_gg = Σ g(X)^2`:
/// `ℓ = -S_yy/2 + u S_yg - u^2 S_gg / 2` with `u = sqrt(w)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialLikelihood {
    pub n: usize,
    pub dim: usize,
    pub s_yy: f64,
    pub s_yg: f64,
    pub s_gg: f64,
}

impl RadialLikelihood {
    pub fn new(data: &RegressionDataset, g: GSpec) -> Self {
        let (mut s_yy, mut s_yg, mut s_gg) = (0.0, 0.0, 0.0);
        for i in 0..data.n {
            let gi = g.eval(data.design_point(i));
            let y = data.y[i];
            s_yy += y * y;
            s_yg += y * gi;
            s_gg += gi * gi;
        }
        RadialLikelihood { n: data.n, dim: data.dim, s_yy, s_yg, s_gg }
    }

    /// `ℓ` as a function of `w`.
    pub fn at_w(&self, wv: f64) -> f64 {
        -0.5 * self.s_yy + wv.sqrt() * self.s_yg - 0.5 * wv * self.s_gg
    }

    /// Radial profile `ℓ~_N(r)`.
    pub fn at_radius(&self, r: f64, w: &WParams) -> f64 {
        self.at_w(w.value(r))
    }

    /// `(min, max)` of `ℓ` over `w in [w_lo, w_hi]`. `ℓ` is concave in
    /// `u = sqrt(w)` with vertex `u* = S_yg / S_gg`, so the extremes sit at the
    /// endpoints or at `u*`.
    pub fn bracket(&self, w_lo: f64, w_hi: f64) -> (f64, f64) {
        let a = self.at_w(w_lo);
        let b = self.at_w(w_hi);
        let (lo, mut hi) = (a.min(b), a.max(b));
        if self.s_gg > 0.0 {
            let u = self.s_yg / self.s_gg;
            if u > w_lo.sqrt() && u < w_hi.sqrt() {
                hi = hi.max(self.at_w(u * u));
            }
        }
        (lo, hi)
    }

    /// `dℓ/dr` with right-limit derivatives of `w` at the kinks.
    pub fn radial_derivative(&self, r: f64, w: &WParams) -> f64 {
        // dℓ/dr = w'/(2 sqrt w) S_yg - w'/2 S_gg
        0.5 * w.derivative_over_sqrt(r) * self.s_yg - 0.5 * w.derivative(r) * self.s_gg
    }

    /// Gradient (a.e.): `dℓ/dr · θ/|θ|`, zero at the origin.
    pub fn grad(&self, theta: &[f64], w: &WParams) -> Result<Vec<f64>> {
        check_dim(self.dim, theta.len())?;
        let r = norm(theta);
        if r == 0.0 {
            return Ok(vec![0.0; theta.len()]);
        }
        let c = self.radial_derivative(r, w) / r;
        let out: Vec<f64> = theta.iter().map(|v| c * v).collect();
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::NonFinite(format!("likelihood gradient at radius {r}")))
        }
    }

    pub fn value(&self, theta: &[f64], w: &WParams) -> Result<f64> {
        check_dim(self.dim, theta.len())?;
        Ok(self.at_radius(norm(theta), w))
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MonotonicityReport {
    /// Largest `(ℓ(θ_s) - ℓ(θ_r)) / (w(s) - w(r))` over the sampled pairs.
    pub worst_slope: f64,
    pub threshold: f64,
    pub n_pairs: usize,
    pub pass: bool,
}

/// Slope `(ℓ(θ_s) - ℓ(θ_r)) / (w(s) - w(r))` for `θ_r = r u`, `θ_s = s v`.
pub fn pair_slope(
    data: &RegressionDataset,
    w: &WParams,
    g: GSpec,
    r: f64,
    s: f64,
    u: &[f64],
    v: &[f64],
) -> Result<f64> {
    if !(r >= 0.0 && s > r) {
        return Err(Error::Domain(format!("need 0 <= r < s, got r={r}, s={s}")));
    }
    let dw = w.value(s) - w.value(r);
    if dw <= 0.0 {
        return Err(Error::Domain(format!("w(s) = w(r) for r={r}, s={s}")));
    }
    let tr: Vec<f64> = u.iter().map(|x| r * x).collect();
    let ts: Vec<f64> = v.iter().map(|x| s * x).collect();
    Ok((loglik(&ts, data, w, g)? - loglik(&tr, data, w, g)?) / dw)
}

/// Sample `n_pairs` radius pairs `r0 <= r < s <= L` with independent
/// directions and report the worst slope against `-N/4`.
pub fn monotonicity_certificate(
    data: &RegressionDataset,
    w: &WParams,
    g: GSpec,
    r0: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    if !(r0 > 0.0 && r0 < w.plateau) {
        return Err(Error::Domain(format!("r0 must lie in (0, L), got {r0}")));
    }
    if n_pairs == 0 {
        return Err(Error::Domain("n_pairs must be >= 1".into()));
    }
    let mut rng = rng_from(seed, streams::CERTIFICATE, 0);
    let mut worst = f64::NEG_INFINITY;
    let mut used = 0;
    while used < n_pairs {
        let a = r0 + (w.plateau - r0) * rng.random::<f64>();
        let b = r0 + (w.plateau - r0) * rng.random::<f64>();
        let u = uniform_sphere(data.dim, &mut rng);
        let v = uniform_sphere(data.dim, &mut rng);
        if a == b {
            continue;
        }
        let slope = pair_slope(data, w, g, a.min(b), a.max(b), &u, &v)?;
        worst = worst.max(slope);
        used += 1;
    }
    let threshold = -(data.n as f64) / 4.0;
    Ok(MonotonicityReport { worst_slope: worst, threshold, n_pairs, pass: worst <= threshold })
}
