//! Radial quadrature of the posterior: annulus prior masses, the
//! free-entropy profile `F_N(r, ε) = (1/N) log ∫_{Θ_{r,ε}} e^{ℓ_N} dΠ` and
//! posterior ratios of unions of annuli.
//!
//! The likelihood is evaluated at cell midpoints. Because `w` is monotone,
//! its range on a cell is `[w(lo), w(hi)]`, and the concavity of `ℓ` in
//! `sqrt(w)` turns that range into rigorous lower/upper values of `ℓ` on the
//! cell. Ratios and masses are reported with both the midpoint estimate and
//! the resulting bracket.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::smallball::{chernoff_ball_log_upper, chernoff_tail_log_upper, ln_annulus_prob_iid};
use crate::error::{check_dim, Error, Result};
use crate::linalg::log_sum_exp;
use crate::priors::{radial_samples, PriorSpec};
use crate::radial_model::{RadialLikelihood, WParams};

/// Cell boundaries `0 <= e_0 < e_1 < ... < e_m`; the last edge may be `+inf`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub edges: Vec<f64>,
}

impl GridSpec {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Domain("a grid needs at least two edges".into()));
        }
        if !(edges[0] >= 0.0) || edges[..edges.len() - 1].iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain("grid edges must be finite and >= 0 (the last may be +inf)".into()));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("grid edges must be strictly increasing".into()));
        }
        Ok(GridSpec { edges })
    }

    /// `cells` equal cells on `[0, r_max]`, plus `[r_max, inf)` when `tail`.
    pub fn uniform(r_max: f64, cells: usize, tail: bool) -> Result<Self> {
        Self::piecewise(&[(0.0, r_max, cells)], tail)
    }

    /// Concatenation of uniform segments `(lo, hi, cells)`; consecutive
    /// segments must share endpoints.
    pub fn piecewise(segments: &[(f64, f64, usize)], tail: bool) -> Result<Self> {
        let mut edges = Vec::new();
        for (k, &(lo, hi, n)) in segments.iter().enumerate() {
            if n == 0 {
                return Err(Error::Domain("segment with zero cells".into()));
            }
            if k > 0 && edges.last() != Some(&lo) {
                return Err(Error::Domain(format!("segment {k} does not start where the previous one ended")));
            }
            let start = if k == 0 { 0 } else { 1 };
            for i in start..=n {
                edges.push(if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 });
            }
        }
        if tail {
            edges.push(f64::INFINITY);
        }
        Self::from_edges(edges)
    }

    /// The single cell `[0, inf)`.
    pub fn whole_line() -> Self {
        GridSpec { edges: vec![0.0, f64::INFINITY] }
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    /// Index of the edge equal to `r`, if any.
    pub fn edge_index(&self, r: f64) -> Option<usize> {
        self.edges.iter().position(|e| *e == r)
    }
}

/// Per-cell prior masses and likelihood values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialGrid {
    pub edges: Vec<f64>,
    pub n: usize,
    /// `ln Π(cell)`; `-inf` for empty cells.
    pub log_mass: Vec<f64>,
    /// Standard error of `log_mass` (0 for exact masses).
    pub log_mass_stderr: Vec<f64>,
    /// True when the masses are exact rather than Monte Carlo frequencies.
    pub exact: bool,
    pub ll_mid: Vec<f64>,
    pub ll_lo: Vec<f64>,
    pub ll_hi: Vec<f64>,
    /// Cells with zero estimated mass.
    pub empty: Vec<usize>,
}

impl RadialGrid {
    pub fn cells(&self) -> usize {
        self.log_mass.len()
    }

    /// `ln ∫_{cells} e^{ℓ} dΠ` as `(midpoint, lower, upper)`.
    pub fn log_weight(&self, cells: std::ops::Range<usize>) -> (f64, f64, f64) {
        let pick = |v: &Vec<f64>| -> Vec<f64> { cells.clone().map(|j| v[j] + self.log_mass[j]).collect() };
        (log_sum_exp(&pick(&self.ll_mid)), log_sum_exp(&pick(&self.ll_lo)), log_sum_exp(&pick(&self.ll_hi)))
    }

    fn cell_index_of_edge(&self, r: f64) -> Result<usize> {
        self.edges
            .iter()
            .position(|e| *e == r)
            .ok_or_else(|| Error::Domain(format!("radius {r} is not a grid edge")))
    }
}

/// Build a grid for `prior`, the likelihood `lik` and ramp `w`.
///
/// Isotropic masses are exact annulus probabilities; α-regular masses are
/// frequencies of `n_mc` prior radii drawn from `seed`.
pub fn radial_grid_build(
    prior: &PriorSpec,
    lik: &RadialLikelihood,
    w: &WParams,
    grid: &GridSpec,
    n_mc: usize,
    seed: u64,
) -> Result<RadialGrid> {
    check_dim(prior.dim(), lik.dim)?;
    let edges = grid.edges.clone();
    let m = grid.cells();
    let (log_mass, log_mass_stderr, exact) = if prior.is_isotropic() {
        let dim = prior.dim();
        let var = prior.variance(0);
        let lm: Result<Vec<f64>> =
            (0..m).into_par_iter().map(|j| ln_annulus_prob_iid(dim, var, edges[j], edges[j + 1])).collect();
        (lm?, vec![0.0; m], true)
    } else {
        if n_mc == 0 {
            return Err(Error::Domain("alpha-regular grids need n_mc > 0".into()));
        }
        let rs = radial_samples(prior, n_mc, seed);
        let n = n_mc as f64;
        let mut lm = Vec::with_capacity(m);
        let mut se = Vec::with_capacity(m);
        for j in 0..m {
            let p = rs.fraction_in(edges[j], edges[j + 1]);
            lm.push(p.ln());
            se.push(if p > 0.0 { ((1.0 - p) / (p * n)).sqrt() } else { f64::INFINITY });
        }
        (lm, se, false)
    };
    let mut ll_mid = Vec::with_capacity(m);
    let mut ll_lo = Vec::with_capacity(m);
    let mut ll_hi = Vec::with_capacity(m);
    for j in 0..m {
        let (a, b) = (edges[j], edges[j + 1]);
        let mid = if b.is_finite() { 0.5 * (a + b) } else { a };
        let w_hi = if b.is_finite() { w.value(b) } else { w.sup() };
        let (lo, hi) = lik.bracket(w.value(a), w_hi);
        ll_mid.push(lik.at_radius(mid, w));
        ll_lo.push(lo);
        ll_hi.push(hi);
    }
    let empty = (0..m).filter(|j| log_mass[*j] == f64::NEG_INFINITY).collect();
    Ok(RadialGrid { edges, n: lik.n, log_mass, log_mass_stderr, exact, ll_mid, ll_lo, ll_hi, empty })
}

/// Free-entropy profile over the cells of a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeEntropyProfile {
    /// Inner radius `r` of each annulus `Θ_{r,ε}`.
    pub r: Vec<f64>,
    /// Width `ε` (`inf` for a tail cell).
    pub eps: Vec<f64>,
    pub f_n: Vec<f64>,
    /// `ℓ~_N(midpoint) / N`.
    pub energy: Vec<f64>,
    /// `ln Π(Θ_{r,ε}) / N`.
    pub entropy: Vec<f64>,
    /// Monte Carlo standard error of `f_n` (0 for exact masses).
    pub stderr: Vec<f64>,
    /// Rigorous bracket of `f_n` from the range of `w` on the cell.
    pub f_lo: Vec<f64>,
    pub f_hi: Vec<f64>,
}

pub fn free_entropy_profile(grid: &RadialGrid) -> FreeEntropyProfile {
    let n = grid.n as f64;
    let m = grid.cells();
    let mut p = FreeEntropyProfile {
        r: grid.edges[..m].to_vec(),
        eps: grid.edges.windows(2).map(|e| e[1] - e[0]).collect(),
        f_n: Vec::with_capacity(m),
        energy: Vec::with_capacity(m),
        entropy: Vec::with_capacity(m),
        stderr: grid.log_mass_stderr.iter().map(|s| s / n).collect(),
        f_lo: Vec::with_capacity(m),
        f_hi: Vec::with_capacity(m),
    };
    for j in 0..m {
        let lm = grid.log_mass[j];
        let energy = grid.ll_mid[j] / n;
        let entropy = lm / n;
        p.energy.push(energy);
        p.entropy.push(entropy);
        p.f_n.push(energy + entropy);
        p.f_lo.push((grid.ll_lo[j] + lm) / n);
        p.f_hi.push((grid.ll_hi[j] + lm) / n);
    }
    p
}

impl FreeEntropyProfile {
    /// Interior strict local maxima/minima of `f_n` over finite cells, as cell indices.
    pub fn local_extrema(&self) -> (Vec<usize>, Vec<usize>) {
        let f = &self.f_n;
        let m = self.eps.iter().filter(|e| e.is_finite()).count();
        let mut maxima = Vec::new();
        let mut minima = Vec::new();
        for j in 0..m {
            let left = if j == 0 { f64::NEG_INFINITY } else { f[j - 1] };
            let right = if j + 1 < m { f[j + 1] } else { f64::NEG_INFINITY };
            if f[j] > left && f[j] >= right {
                maxima.push(j);
            }
            if j > 0 && j + 1 < m && f[j] < left && f[j] <= right {
                minima.push(j);
            }
        }
        (maxima, minima)
    }

    /// CSV with header `r,eps,F_N,energy,entropy,stderr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["r", "eps", "F_N", "energy", "entropy", "stderr"])?;
        for j in 0..self.r.len() {
            wr.write_record(
                [self.r[j], self.eps[j], self.f_n[j], self.energy[j], self.entropy[j], self.stderr[j]].map(|v| format!("{v:e}")),
            )?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// `ln[Π(A|Z) / Π(B|Z)]` with a rigorous bracket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogRatio {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Monte Carlo standard error from the prior masses (0 when exact).
    pub stderr: f64,
}

/// Posterior log-ratio of two unions of consecutive cells.
pub fn posterior_region_ratio(grid: &RadialGrid, a: std::ops::Range<usize>, b: std::ops::Range<usize>) -> Result<LogRatio> {
    let m = grid.cells();
    if a.is_empty() || b.is_empty() || a.end > m || b.end > m {
        return Err(Error::Domain(format!("cell ranges {a:?}, {b:?} invalid for a grid of {m} cells")));
    }
    let (am, al, ah) = grid.log_weight(a.clone());
    let (bm, bl, bh) = grid.log_weight(b.clone());
    if bm == f64::NEG_INFINITY {
        return Err(Error::Estimation("denominator region has zero prior mass".into()));
    }
    let se = |r: std::ops::Range<usize>, total: f64| -> f64 {
        // delta method: Var ln Σ_j m_j e^{ℓ_j} ≈ Σ_j (share_j se_j)^2
        r.map(|j| {
            let share = (grid.ll_mid[j] + grid.log_mass[j] - total).exp();
            let s = grid.log_mass_stderr[j];
            if share == 0.0 {
                0.0
            } else {
                (share * s).powi(2)
            }
        })
        .sum::<f64>()
    };
    let stderr = (se(a, am) + se(b, bm)).sqrt();
    Ok(LogRatio { value: am - bm, lower: al - bh, upper: ah - bl, stderr })
}

/// `ln[Π(cell a|Z) / Π(cell b|Z)] = N (F_N(a) - F_N(b))`.
pub fn posterior_annulus_ratio(grid: &RadialGrid, a: usize, b: usize) -> Result<LogRatio> {
    posterior_region_ratio(grid, a..a + 1, b..b + 1)
}

/// Posterior mass of the ball `B_s`, where `s` must be a grid edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallPosterior {
    pub mass: f64,
    pub lower: f64,
    pub upper: f64,
    /// True when `lower` is a certified bound (exact prior masses).
    pub certified: bool,
}

pub fn posterior_ball_mass(grid: &RadialGrid, s: f64) -> Result<BallPosterior> {
    let k = grid.cell_index_of_edge(s)?;
    let m = grid.cells();
    if k == 0 {
        return Ok(BallPosterior { mass: 0.0, lower: 0.0, upper: 0.0, certified: grid.exact });
    }
    if k == m {
        return Ok(BallPosterior { mass: 1.0, lower: 1.0, upper: 1.0, certified: grid.exact });
    }
    let (im, il, ih) = grid.log_weight(0..k);
    let (om, ol, oh) = grid.log_weight(k..m);
    // Π(B|Z) = 1 / (1 + e^{ln out - ln in})
    let frac = |inner: f64, outer: f64| 1.0 / (1.0 + (outer - inner).exp());
    Ok(BallPosterior { mass: frac(im, om), lower: frac(il, oh), upper: frac(ih, ol), certified: grid.exact })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriorRatioReport {
    /// `(1/N) ln[Π(Θ_{s,η}) / Π(Θ_{σ,ε})]`.
    pub lhs: f64,
    /// `-2ν - (ρ/2)(σ + ε - s)`.
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    /// `-2ν - (w_+(σ,ε) - w_-(s,η))/2`, the form that does not assume `σ > s > t`.
    pub rhs_w: f64,
    pub pass_w: bool,
    /// True when the numerator mass is a Chernoff upper bound rather than an estimate.
    pub numerator_is_bound: bool,
    /// `(1/N) ln[Π(B_L^c) / Π(Θ_{σ,ε})]` and its pass flag against `-2ν`, when `L` is given.
    pub tail_lhs: Option<f64>,
    pub tail_pass: Option<bool>,
    /// Whether `L > 1 + ε`.
    pub tail_radius_ok: Option<bool>,
}

#[derive(Clone, Copy, Debug)]
pub struct RatioConditionInput {
    pub n: usize,
    pub s: f64,
    pub eta: f64,
    pub sigma: f64,
    pub eps: f64,
    pub nu: f64,
    pub tail_radius: Option<f64>,
    pub n_mc: usize,
    pub seed: u64,
}

/// Evaluate the prior annulus-ratio condition behind the barrier bound,
/// and optionally the `B_L^c` tail condition.
pub fn prior_ratio_condition_check(prior: &PriorSpec, w: &WParams, inp: &RatioConditionInput) -> Result<PriorRatioReport> {
    let RatioConditionInput { n, s, eta, sigma, eps, nu, tail_radius, n_mc, seed } = *inp;
    if !(s > 0.0 && eta > 0.0 && sigma > 0.0 && eps > 0.0 && n > 0) {
        return Err(Error::Domain("s, eta, sigma, eps and N must be positive".into()));
    }
    let nf = n as f64;
    let dim = prior.dim();
    let (ln_num, ln_den, numerator_is_bound) = if prior.is_isotropic() {
        let v = prior.variance(0);
        (ln_annulus_prob_iid(dim, v, s, s + eta)?, ln_annulus_prob_iid(dim, v, sigma, sigma + eps)?, false)
    } else {
        let rs = radial_samples(prior, n_mc.max(1), seed);
        let den = rs.fraction_in(sigma, sigma + eps);
        if den == 0.0 {
            return Err(Error::Estimation(format!("no prior draws in the annulus ({sigma}, {})", sigma + eps)));
        }
        let num = rs.fraction_in(s, s + eta);
        if num > 0.0 {
            (num.ln(), den.ln(), false)
        } else {
            (chernoff_ball_log_upper(prior, s + eta)?.log_bound, den.ln(), true)
        }
    };
    let lhs = (ln_num - ln_den) / nf;
    let rhs = -2.0 * nu - 0.5 * w.rho * (sigma + eps - s);
    let rhs_w = -2.0 * nu - 0.5 * (w.value(sigma + eps) - w.value(s));
    let (tail_lhs, tail_pass, tail_radius_ok) = match tail_radius {
        None => (None, None, None),
        Some(l) => {
            let ln_tail = if prior.is_isotropic() {
                ln_annulus_prob_iid(dim, prior.variance(0), l, f64::INFINITY)?
            } else {
                chernoff_tail_log_upper(&prior.variances(), l)?.log_bound
            };
            let v = (ln_tail - ln_den) / nf;
            (Some(v), Some(v <= -2.0 * nu), Some(l > 1.0 + eps))
        }
    };
    Ok(PriorRatioReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        pass: lhs <= rhs,
        rhs_w,
        pass_w: lhs <= rhs_w,
        numerator_is_bound,
        tail_lhs,
        tail_pass,
        tail_radius_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_model::{simulate_dataset, GSpec};

    fn setup(dim: usize, n: usize, seed: u64) -> (PriorSpec, RadialLikelihood, WParams) {
        let w = WParams::new(2.0, 0.1, 1.0, 0.1).unwrap();
        let data = simulate_dataset(n, dim, 1, GSpec::ConstantOne, &vec![0.0; dim], &w, seed).unwrap();
        (PriorSpec::isotropic(dim).unwrap(), RadialLikelihood::new(&data, GSpec::ConstantOne), w)
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::from_edges(vec![0.0]).is_err());
        assert!(GridSpec::from_edges(vec![0.0, 0.5, 0.5]).is_err());
        assert!(GridSpec::from_edges(vec![0.0, f64::INFINITY, 2.0]).is_err());
        let g = GridSpec::piecewise(&[(0.0, 1.0, 4), (1.0, 3.0, 2)], true).unwrap();
        assert_eq!(g.edges, vec![0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 3.0, f64::INFINITY]);
        assert!(GridSpec::piecewise(&[(0.0, 1.0, 4), (1.5, 3.0, 2)], false).is_err());
    }

    #[test]
    fn isotropic_masses_cover() {
        let (prior, lik, w) = setup(100, 100, 1);
        let g = radial_grid_build(&prior, &lik, &w, &GridSpec::uniform(3.0, 300, false).unwrap(), 0, 0).unwrap();
        let total: f64 = g.log_mass.iter().map(|l| l.exp()).sum();
        assert!(total >= 0.999 && total <= 1.0 + 1e-12);
        let one = radial_grid_build(&prior, &lik, &w, &GridSpec::whole_line(), 0, 0).unwrap();
        assert!(one.log_mass[0].abs() < 1e-14);
    }

    #[test]
    fn profile_decomposes_and_brackets() {
        let (prior, lik, w) = setup(30, 30, 2);
        let g = radial_grid_build(&prior, &lik, &w, &GridSpec::uniform(2.0, 80, true).unwrap(), 0, 0).unwrap();
        let p = free_entropy_profile(&g);
        for j in 0..p.r.len() {
            if p.f_n[j].is_finite() {
                assert!((p.f_n[j] - p.energy[j] - p.entropy[j]).abs() < 1e-12);
                assert!(p.f_lo[j] <= p.f_n[j] + 1e-12 && p.f_n[j] <= p.f_hi[j] + 1e-12);
            }
        }
    }

    #[test]
    fn ratios() {
        let (prior, lik, w) = setup(20, 20, 3);
        let g = radial_grid_build(&prior, &lik, &w, &GridSpec::uniform(2.0, 40, true).unwrap(), 0, 0).unwrap();
        let p = free_entropy_profile(&g);
        assert_eq!(posterior_annulus_ratio(&g, 5, 5).unwrap().value, 0.0);
        let ab = posterior_annulus_ratio(&g, 3, 17).unwrap();
        let ba = posterior_annulus_ratio(&g, 17, 3).unwrap();
        assert!((ab.value + ba.value).abs() < 1e-12);
        assert!((ab.value - 20.0 * (p.f_n[3] - p.f_n[17])).abs() < 1e-9);
        assert!(ab.lower <= ab.value && ab.value <= ab.upper);
    }

    #[test]
    fn ball_mass_bounds() {
        let (prior, lik, w) = setup(20, 20, 4);
        let g = radial_grid_build(&prior, &lik, &w, &GridSpec::uniform(2.0, 40, true).unwrap(), 0, 0).unwrap();
        let b = posterior_ball_mass(&g, 1.0).unwrap();
        assert!(b.certified && b.lower <= b.mass && b.mass <= b.upper);
        assert!(posterior_ball_mass(&g, 1.01).is_err());
        assert_eq!(posterior_ball_mass(&g, 0.0).unwrap().mass, 0.0);
    }

    #[test]
    fn degenerate_ratio_checks() {
        let prior = PriorSpec::isotropic(64).unwrap();
        let w = WParams::new(2.0, 0.1, 3.0, 0.1).unwrap();
        let base = RatioConditionInput { n: 64, s: 0.01, eta: 0.005, sigma: 2.0 / 3.0, eps: 1.0, nu: 1.0, tail_radius: Some(3.0), n_mc: 0, seed: 0 };
        let ok = prior_ratio_condition_check(&prior, &w, &base).unwrap();
        assert!(ok.pass && ok.tail_pass == Some(true) && ok.tail_radius_ok == Some(true));
        let huge = prior_ratio_condition_check(&prior, &w, &RatioConditionInput { nu: 1e6, ..base }).unwrap();
        assert!(!huge.pass);
        let same = prior_ratio_condition_check(&prior, &w, &RatioConditionInput { s: 2.0 / 3.0, eta: 1.0, ..base }).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert!(!same.pass);
    }
}
