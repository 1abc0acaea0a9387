//! Small dense-vector helpers shared by the samplers and models.

use rand::Rng;
use rand_distr::StandardNormal;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn scale_in_place(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|x| *x *= s);
}

pub fn standard_normal_vec<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform draw on the unit sphere `S^{dim-1}`.
pub fn uniform_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v = standard_normal_vec(dim, rng);
        let n = norm(&v);
        if n > 0.0 && n.is_finite() {
            scale_in_place(&mut v, 1.0 / n);
            return v;
        }
    }
}

/// Point with radius drawn uniformly from `[r_lo, r_hi)` and a uniform direction.
pub fn uniform_radius_point<R: Rng + ?Sized>(dim: usize, r_lo: f64, r_hi: f64, rng: &mut R) -> Vec<f64> {
    let r = r_lo + (r_hi - r_lo) * rng.random::<f64>();
    let mut v = uniform_sphere(dim, rng);
    scale_in_place(&mut v, r);
    v
}

/// `log(sum(exp(xs)))`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Householder reflection `I - 2 v v^T / |v|^2` applied to `x`.
pub fn reflect(x: &[f64], v: &[f64]) -> Vec<f64> {
    let c = 2.0 * dot(x, v) / dot(v, v);
    x.iter().zip(v).map(|(a, b)| a - c * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn sphere_draws_are_unit() {
        let mut rng = rng_from_seed(1);
        for d in [1, 2, 5, 50] {
            let v = uniform_sphere(d, &mut rng);
            assert!((norm(&v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lse_matches_direct() {
        let xs = [0.1, -2.0, 3.5];
        let direct = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn reflection_preserves_norm() {
        let x = [1.0, 2.0, -0.5];
        let v = [0.3, -1.0, 2.0];
        let y = reflect(&x, &v);
        assert!((norm(&x) - norm(&y)).abs() < 1e-14);
        let z = reflect(&y, &v);
        for (a, b) in x.iter().zip(&z) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
