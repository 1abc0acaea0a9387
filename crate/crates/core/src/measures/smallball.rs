//! Small-ball probabilities of diagonal Gaussian vectors: exact isotropic
//! values, the isotropic lower bound on `-log P / D`, Chernoff surrogates and
//! an exponentially tilted Monte Carlo estimator.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::special::{ln_diff_exp, ln_reg_inc_gamma_lower, ln_reg_inc_gamma_upper};
use crate::error::{Error, Result};
use crate::priors::PriorSpec;
use crate::rng::{rng_from, streams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallProb {
    pub prob: f64,
    pub ln_prob: f64,
}

/// `ln Π(|θ| <= z)` for `θ ~ N(0, v I_D)`.
pub fn ln_ball_prob_iid(dim: usize, variance: f64, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("radius must be >= 0, got {z}")));
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    ln_reg_inc_gamma_lower(dim as f64 / 2.0, z * z / (2.0 * variance))
}

/// `ln Π(lo < |θ| <= hi)` for `θ ~ N(0, v I_D)`; accurate on both tails.
pub fn ln_annulus_prob_iid(dim: usize, variance: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(0.0 <= lo && lo <= hi) {
        return Err(Error::Domain(format!("need 0 <= lo <= hi, got [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(f64::NEG_INFINITY);
    }
    let a = dim as f64 / 2.0;
    let x_lo = lo * lo / (2.0 * variance);
    if x_lo > a {
        // both radii beyond the bulk: difference of upper tails
        let q_lo = ln_reg_inc_gamma_upper(a, x_lo)?;
        let q_hi = if hi.is_infinite() { f64::NEG_INFINITY } else { ln_reg_inc_gamma_upper(a, hi * hi / (2.0 * variance))? };
        Ok(ln_diff_exp(q_lo, q_hi))
    } else if hi.is_infinite() {
        ln_reg_inc_gamma_upper(a, x_lo)
    } else {
        let p_hi = ln_reg_inc_gamma_lower(a, hi * hi / (2.0 * variance))?;
        let p_lo = if lo == 0.0 { f64::NEG_INFINITY } else { ln_reg_inc_gamma_lower(a, x_lo)? };
        Ok(ln_diff_exp(p_hi, p_lo))
    }
}

/// `Π(|θ| <= z)` for `θ ~ N(0, I_D/D)`, i.e. `P(D/2, D z^2 / 2)`.
pub fn isotropic_ball_prob(dim: usize, z: f64) -> Result<BallProb> {
    if dim == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let ln_prob = ln_ball_prob_iid(dim, 1.0 / dim as f64, z)?;
    Ok(BallProb { prob: ln_prob.exp(), ln_prob })
}

/// `f(x) = -x^2/2 + log x + 1/2`.
pub fn smallball_rate(x: f64) -> f64 {
    -0.5 * x * x + x.ln() + 0.5
}

/// Lower bound `(1/2)(z^2/2 - log z - 1/2)` on `-(1/D) log Π(|θ| <= z)`,
/// valid for `z in (0, 1-a)` once `f(1-a) <= -2 log D / (D - 2)`.
pub fn isotropic_smallball_lower_bound(dim: usize, z: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Precondition(format!("a must lie in (0,1), got {a}")));
    }
    if !(z > 0.0 && z < 1.0 - a) {
        return Err(Error::Precondition(format!("z must lie in (0, {}), got {z}", 1.0 - a)));
    }
    if dim <= 2 {
        return Err(Error::Precondition(format!("dimension {dim} too small")));
    }
    let d = dim as f64;
    let need = -2.0 * d.ln() / (d - 2.0);
    if smallball_rate(1.0 - a) > need {
        return Err(Error::Precondition(format!(
            "D = {dim} below D0({a}): f(1-a) = {} > -2 log D/(D-2) = {need}",
            smallball_rate(1.0 - a)
        )));
    }
    Ok(-0.5 * smallball_rate(z))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChernoffBound {
    /// Upper bound on the log-probability.
    pub log_bound: f64,
    /// Optimal tilt `s*`.
    pub s_star: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimisation of a unimodal `f` on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let scale = b - a;
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > rel_tol * scale {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn ball_exponent(variances: &[f64], z2: f64, s: f64) -> f64 {
    s * z2 - 0.5 * variances.iter().map(|l| (2.0 * s * l).ln_1p()).sum::<f64>()
}

/// `min_{s >= 0} s z^2 - 1/2 Σ log(1 + 2 s λ_i)`, an upper bound on `ln P(|θ| <= z)`.
pub fn chernoff_ball_log_upper_variances(variances: &[f64], z: f64) -> Result<ChernoffBound> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("radius must be >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(ChernoffBound { log_bound: f64::NEG_INFINITY, s_star: f64::INFINITY });
    }
    let z2 = z * z;
    let slope = |s: f64| z2 - variances.iter().map(|l| l / (1.0 + 2.0 * s * l)).sum::<f64>();
    if slope(0.0) >= 0.0 {
        return Ok(ChernoffBound { log_bound: 0.0, s_star: 0.0 });
    }
    let mut hi = 1.0 / z2;
    while slope(hi) <= 0.0 {
        hi *= 2.0;
    }
    let s = golden_min(|s| ball_exponent(variances, z2, s), 0.0, hi, 1e-10);
    Ok(ChernoffBound { log_bound: ball_exponent(variances, z2, s).min(0.0), s_star: s })
}

pub fn chernoff_ball_log_upper(spec: &PriorSpec, z: f64) -> Result<ChernoffBound> {
    chernoff_ball_log_upper_variances(&spec.variances(), z)
}

/// `min_{0 <= s < 1/(2 λ_max)} -s z^2 - 1/2 Σ log(1 - 2 s λ_i)`, an upper bound on `ln P(|θ| >= z)`.
pub fn chernoff_tail_log_upper(variances: &[f64], z: f64) -> Result<ChernoffBound> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("radius must be >= 0, got {z}")));
    }
    let z2 = z * z;
    let total: f64 = variances.iter().sum();
    if z2 <= total {
        return Ok(ChernoffBound { log_bound: 0.0, s_star: 0.0 });
    }
    let lmax = variances.iter().cloned().fold(0.0, f64::max);
    let hi = (0.5 / lmax) * (1.0 - 1e-12);
    let f = |s: f64| -s * z2 - 0.5 * variances.iter().map(|l| (-2.0 * s * l).ln_1p()).sum::<f64>();
    let s = golden_min(f, 0.0, hi, 1e-12);
    Ok(ChernoffBound { log_bound: f(s).min(0.0), s_star: s })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TiltedEstimate {
    /// Estimate of `ln Π(|θ| <= z)`; the Chernoff bound when `failed`.
    pub log_prob: f64,
    /// Delta-method standard error of `log_prob`.
    pub stderr: f64,
    pub hits: usize,
    pub n_mc: usize,
    pub chernoff: ChernoffBound,
    pub failed: bool,
}

const TILT_CHUNK: usize = 4096;

/// Importance sampling from the Chernoff-optimal tilt: coordinate variances
/// `λ_i / (1 + 2 s* λ_i)` and weights `Π(1 + 2 s* λ_i)^{-1/2} e^{s* |θ|^2}`.
/// On the ball every weight is at most the Chernoff bound.
pub fn tilted_ball_estimate_variances(variances: &[f64], z: f64, n_mc: usize, seed: u64) -> Result<TiltedEstimate> {
    if n_mc == 0 {
        return Err(Error::Domain("n_mc must be positive".into()));
    }
    let chernoff = chernoff_ball_log_upper_variances(variances, z)?;
    if z == 0.0 {
        return Ok(TiltedEstimate { log_prob: f64::NEG_INFINITY, stderr: 0.0, hits: 0, n_mc, chernoff, failed: false });
    }
    let s = chernoff.s_star;
    let sd: Vec<f64> = variances.iter().map(|l| (l / (1.0 + 2.0 * s * l)).sqrt()).collect();
    let log_norm = -0.5 * variances.iter().map(|l| (2.0 * s * l).ln_1p()).sum::<f64>();
    let z2 = z * z;
    let n_chunks = n_mc.div_ceil(TILT_CHUNK);
    let per_chunk: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from(seed, streams::TILTED, c as u64);
            let m = TILT_CHUNK.min(n_mc - c * TILT_CHUNK);
            let mut out = Vec::new();
            for _ in 0..m {
                let r2: f64 = sd
                    .iter()
                    .map(|s| {
                        let x = s * rng.sample::<f64, _>(StandardNormal);
                        x * x
                    })
                    .sum();
                if r2 <= z2 {
                    out.push(log_norm + s * r2);
                }
            }
            out
        })
        .collect();
    let logw: Vec<f64> = per_chunk.into_iter().flatten().collect();
    let hits = logw.len();
    if hits == 0 {
        return Ok(TiltedEstimate { log_prob: chernoff.log_bound, stderr: f64::INFINITY, hits, n_mc, chernoff, failed: true });
    }
    let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n = n_mc as f64;
    let scaled: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / n;
    let second = scaled.iter().map(|x| x * x).sum::<f64>() / n;
    let var = (second - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    let stderr = (var / n).sqrt() / mean;
    Ok(TiltedEstimate { log_prob: m + mean.ln(), stderr, hits, n_mc, chernoff, failed: false })
}

pub fn tilted_ball_estimate(spec: &PriorSpec, z: f64, n_mc: usize, seed: u64) -> Result<TiltedEstimate> {
    tilted_ball_estimate_variances(&spec.variances(), z, n_mc, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub dim: usize,
    pub z: f64,
    /// `-(1/N) ln Π(|θ| <= z N^{-b})`.
    pub value: f64,
    pub stderr: f64,
    pub chernoff_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Fitted exponent `τ̂ = -slope`.
    pub tau_hat: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// Exponent implied by the prior, `τ = 1/b`.
    pub tau: f64,
    pub points: Vec<ScalingPoint>,
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, slope stderr)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, intercept, se)
}

/// Fit `log(-(1/N) log Π(|θ| <= z N^{-b}))` against `log z` with `D = κN`.
///
/// `base` supplies `α`, `d` and the rescale; its dimension is replaced by
/// `round(κN)` for every `N` in `n_grid`. Points whose estimate failed or is
/// not positive are dropped; fewer than two surviving points refuse the fit.
pub fn smallball_scaling_fit(
    base: &PriorSpec,
    kappa: f64,
    z_grid: &[f64],
    n_grid: &[usize],
    n_mc: usize,
    seed: u64,
) -> Result<ScalingFit> {
    use crate::priors::PriorKind;
    let (alpha, d) = match base.kind {
        PriorKind::AlphaRegular { alpha, d, .. } => (alpha, d),
        PriorKind::Isotropic { .. } => {
            return Err(Error::Precondition("scaling fit needs an alpha-regular prior (b > 0)".into()))
        }
    };
    let b = base.b().expect("alpha-regular prior has an exponent");
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let mut points = Vec::new();
    let mut k = 0u64;
    for &n in n_grid {
        let dim = ((kappa * n as f64).round() as usize).max(1);
        let spec = PriorSpec::alpha_regular(dim, alpha, d)?.with_rescale(base.rescale)?;
        let variances = spec.variances();
        for &z in z_grid {
            let radius = z * (n as f64).powf(-b);
            let est = tilted_ball_estimate_variances(&variances, radius, n_mc, crate::rng::derive_seed(seed, streams::TILTED, k))?;
            k += 1;
            let value = -est.log_prob / n as f64;
            if !est.failed && value > 0.0 && value.is_finite() {
                points.push(ScalingPoint {
                    n,
                    dim,
                    z,
                    value,
                    stderr: est.stderr / n as f64,
                    chernoff_value: -est.chernoff.log_bound / n as f64,
                });
            }
        }
    }
    let distinct_z = {
        let mut zs: Vec<f64> = points.iter().map(|p| p.z).collect();
        zs.sort_by(f64::total_cmp);
        zs.dedup();
        zs.len()
    };
    if points.len() < 2 || distinct_z < 2 {
        return Err(Error::Estimation(format!("only {} usable small-ball estimates; fit refused", points.len())));
    }
    let x: Vec<f64> = points.iter().map(|p| p.z.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let (slope, intercept, slope_stderr) = least_squares(&x, &y);
    Ok(ScalingFit { tau_hat: -slope, slope, intercept, slope_stderr, tau: 1.0 / b, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_isotropic_values() {
        let p = isotropic_ball_prob(2, 1.0).unwrap();
        assert!((p.prob - (1.0 - (-1.0f64).exp())).abs() < 1e-13);
        assert_eq!(isotropic_ball_prob(5, 0.0).unwrap().prob, 0.0);
        assert!((isotropic_ball_prob(5, f64::INFINITY).unwrap().prob - 1.0).abs() < 1e-15);
    }

    #[test]
    fn annulus_masses_add_up() {
        let d = 40;
        let v = 1.0 / d as f64;
        let edges = [0.0, 0.3, 0.8, 1.0, 1.2, 2.0, 5.0, f64::INFINITY];
        let total: f64 = edges.windows(2).map(|e| ln_annulus_prob_iid(d, v, e[0], e[1]).unwrap().exp()).sum();
        assert!((total - 1.0).abs() < 1e-13);
        let far = ln_annulus_prob_iid(d, v, 4.0, 4.5).unwrap();
        assert!(far.is_finite() && far < -200.0);
    }

    #[test]
    fn lower_bound_example() {
        let v = isotropic_smallball_lower_bound(200, 0.5, 0.3).unwrap();
        assert!((v - 0.159_074).abs() < 1e-6);
        let exact = -ln_reg_inc_gamma_lower(100.0, 25.0).unwrap() / 200.0;
        assert!(exact >= v);
        assert!(isotropic_smallball_lower_bound(200, 0.75, 0.3).is_err());
        assert!(isotropic_smallball_lower_bound(10, 0.5, 0.3).is_err());
        let mut prev = f64::INFINITY;
        for k in 1..70 {
            let b = isotropic_smallball_lower_bound(200, k as f64 / 100.0, 0.3).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn chernoff_dominates_exact() {
        let d = 50;
        let v = vec![1.0 / d as f64; d];
        let c = chernoff_ball_log_upper_variances(&v, 0.3).unwrap();
        let exact = isotropic_ball_prob(d, 0.3).unwrap().ln_prob;
        assert!(c.log_bound >= exact);
        assert!(c.log_bound - exact < 1.5 * (d as f64).ln());
        let big = chernoff_ball_log_upper_variances(&v, 2.0).unwrap();
        assert_eq!((big.log_bound, big.s_star), (0.0, 0.0));
        let mut prev = f64::NEG_INFINITY;
        for k in 1..40 {
            let b = chernoff_ball_log_upper_variances(&v, k as f64 * 0.025).unwrap().log_bound;
            assert!(b >= prev - 1e-9);
            prev = b;
        }
    }

    #[test]
    fn tail_bound_dominates_exact() {
        let d = 30;
        let v = vec![1.0 / d as f64; d];
        for z in [0.5, 1.2, 1.5, 2.0] {
            let c = chernoff_tail_log_upper(&v, z).unwrap().log_bound;
            let exact = ln_annulus_prob_iid(d, 1.0 / d as f64, z, f64::INFINITY).unwrap();
            assert!(c >= exact - 1e-12, "z={z}");
        }
    }

    #[test]
    fn tilted_matches_exact_isotropic() {
        let d = 10;
        let v = vec![0.1; d];
        let est = tilted_ball_estimate_variances(&v, 0.5, 100_000, 17).unwrap();
        let exact = isotropic_ball_prob(d, 0.5).unwrap().ln_prob;
        assert!(!est.failed);
        assert!((est.log_prob - exact).abs() < 3.0 * est.stderr, "{} vs {exact} ± {}", est.log_prob, est.stderr);
        assert!(est.log_prob <= est.chernoff.log_bound);
        let whole = tilted_ball_estimate_variances(&v, 10.0, 1000, 1).unwrap();
        assert!(whole.log_prob.abs() < 1e-12);
    }

    #[test]
    fn tilted_is_reproducible() {
        let v: Vec<f64> = (1..=50).map(|i| (i as f64).powi(-2)).collect();
        let a = tilted_ball_estimate_variances(&v, 0.4, 10_000, 5).unwrap();
        let b = tilted_ball_estimate_variances(&v, 0.4, 10_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.log_prob <= a.chernoff.log_bound);
    }

    #[test]
    fn scaling_fit_refuses_isotropic() {
        let p = PriorSpec::isotropic(10).unwrap();
        assert!(matches!(smallball_scaling_fit(&p, 1.0, &[0.5, 1.0], &[64], 100, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn least_squares_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, i, se) = least_squares(&x, &y);
        assert!((s + 0.5).abs() < 1e-14 && (i - 2.0).abs() < 1e-14 && se < 1e-12);
    }
}
