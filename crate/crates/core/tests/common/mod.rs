//! Oracles shared by the integration tests.
#![allow(dead_code)]

use entropic_barriers::radial_model::{GSpec, RegressionDataset, WParams};

/// Radial log-likelihood by direct summation over the data.
pub fn direct_radial_loglik(data: &RegressionDataset, w: &WParams, g: GSpec, r: f64) -> f64 {
    let a = w.value(r).sqrt();
    (0..data.n).map(|i| -0.5 * (data.y[i] - a * g.eval(data.design_point(i))).powi(2)).sum()
}

/// Tabulated CDF of `|θ|` under the posterior with isotropic prior
/// `N(0, I/D)`, by the trapezoid rule on `m` cells of `[0, r_max]`.
pub struct RadialCdf {
    pub r: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl RadialCdf {
    pub fn new(data: &RegressionDataset, w: &WParams, g: GSpec, r_max: f64, m: usize) -> Self {
        let d = data.dim as f64;
        let r: Vec<f64> = (0..=m).map(|i| r_max * i as f64 / m as f64).collect();
        let logf: Vec<f64> = r
            .iter()
            .map(|&x| {
                let jac = if data.dim == 1 { 0.0 } else { (d - 1.0) * x.max(1e-300).ln() };
                jac - 0.5 * d * x * x + direct_radial_loglik(data, w, g, x)
            })
            .collect();
        let mx = logf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let f: Vec<f64> = logf.iter().map(|v| (v - mx).exp()).collect();
        let mut cdf = vec![0.0; m + 1];
        for i in 1..=m {
            cdf[i] = cdf[i - 1] + 0.5 * (f[i] + f[i - 1]) * (r[i] - r[i - 1]);
        }
        let tot = cdf[m];
        cdf.iter_mut().for_each(|c| *c /= tot);
        RadialCdf { r, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let m = self.r.len() - 1;
        if x >= self.r[m] {
            return 1.0;
        }
        let h = self.r[1];
        let i = ((x / h) as usize).min(m - 1);
        let t = (x - self.r[i]) / h;
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c < u).clamp(1, self.r.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.r[i - 1] + t * (self.r[i] - self.r[i - 1])
    }
}

/// Kolmogorov distance between the empirical law of `xs` and `cdf`.
pub fn ks_distance(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
