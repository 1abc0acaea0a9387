use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::smallball_rate;
use crate::radial_model::WParams;

/// Inputs for the isotropic hardness construction with `D = κN`, start
/// annulus `Θ_{σ,ε}` and barrier margin `ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicHardnessDesign {
    pub kappa: f64,
    pub nu: f64,
    pub rho: f64,
    pub sigma: f64,
    pub eps: f64,
    /// Fraction of the largest admissible `s` actually used.
    pub safety: f64,
    /// Required excess of the contraction exponent over 1.
    pub margin: f64,
    /// Plateau radius of `w`; must exceed `1 + ε`.
    pub plateau: f64,
}

impl Default for IsotropicHardnessDesign {
    fn default() -> Self {
        IsotropicHardnessDesign { kappa: 1.0, nu: 1.0, rho: 0.1, sigma: 2.0 / 3.0, eps: 1.0, safety: 0.9, margin: 1.0, plateau: 3.0 }
    }
}

/// Constants of a solved design.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HardnessParams {
    /// Largest `s` satisfying the barrier inequality.
    pub s_max: f64,
    /// Target radius of `B_s`.
    pub s: f64,
    /// Barrier width, `Θ_{s,η}`.
    pub eta: f64,
    pub w: WParams,
    /// Largest pCN `β` for which large steps are exponentially rare on `B_L`.
    pub beta_cap: f64,
    /// Inner radius for the monotonicity certificate.
    pub r0: f64,
    /// `Tt/4 + κ f(t/2)`, the contraction exponent.
    pub contraction_exponent: f64,
}

impl IsotropicHardnessDesign {
    /// `-log 2s - (2/κ)[2ν + (ρ/2)(σ + ε - s)] + 2s² - 1/2`, whose
    /// non-negativity makes the prior mass of `B_{2s}` small enough to
    /// outweigh the likelihood gain over `Θ_{σ,ε}`.
    pub fn barrier_gap(&self, s: f64) -> f64 {
        -(2.0 * s).ln() - 2.0 / self.kappa * (2.0 * self.nu + 0.5 * self.rho * (self.sigma + self.eps - s)) + 2.0 * s * s - 0.5
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.kappa, self.nu, self.rho, self.sigma, self.eps, self.safety, self.plateau];
        if pos.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.safety > 1.0 || self.margin < 0.0 {
            return Err(Error::Domain(format!("invalid design {self:?}")));
        }
        if self.rho > 1.0 {
            return Err(Error::Domain(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if !(self.plateau > 1.0 + self.eps) {
            return Err(Error::Domain(format!("plateau {} must exceed 1 + eps = {}", self.plateau, 1.0 + self.eps)));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<HardnessParams> {
        self.validate()?;
        // the gap decreases on (0, 1/4); bisect for its root there
        let (mut lo, mut hi) = (1e-300, 0.25);
        if self.barrier_gap(hi) >= 0.0 {
            lo = hi;
        } else {
            for _ in 0..200 {
                let mid = (lo * hi).sqrt();
                if self.barrier_gap(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
        }
        let s_max = lo;
        let s = self.safety * s_max;
        let t = 0.5 * s;
        let eta = 0.5 * s;
        let rate = smallball_rate(0.5 * t);
        let slope = 4.0 * (1.0 + self.margin - self.kappa * rate) / t;
        let w = WParams::new(slope, t, self.plateau, self.rho)?;
        let beta_cap = 0.5f64.min(eta / (4.0 * self.plateau)).min(eta * eta / 64.0);
        Ok(HardnessParams {
            s_max,
            s,
            eta,
            w,
            beta_cap,
            r0: 0.5 * t,
            contraction_exponent: slope * t / 4.0 + self.kappa * rate,
        })
    }
}
