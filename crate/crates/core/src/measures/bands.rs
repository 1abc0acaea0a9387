//! Prior masses of latitude bands on the unit sphere `S^{n-1}`.
//!
//! For `θ` uniform on the sphere and a fixed unit `θ0`, the correlation
//! `q = <θ, θ0>` satisfies `(1 - q)/2 ~ Beta((n-1)/2, (n-1)/2)`, so
//! `Π(q >= t) = I_{(1-t)/2}((n-1)/2, (n-1)/2)`. For even tensor order the
//! target band is `|q| >= t` and the mass doubles.

use serde::Serialize;

use super::special::{ln_reg_inc_beta, reg_inc_beta};
use crate::error::{Error, Result};

fn check(n: usize, t: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere dimension n must be >= 2, got {n}")));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("band threshold must lie in [0,1), got {t}")));
    }
    Ok(())
}

fn parity_factor(p: usize) -> f64 {
    if p % 2 == 0 {
        2.0
    } else {
        1.0
    }
}

/// Mass of the target band `T_t` under the uniform measure.
pub fn band_prior_mass(n: usize, t: f64, p: usize) -> Result<f64> {
    check(n, t)?;
    let a = (n as f64 - 1.0) / 2.0;
    Ok(parity_factor(p) * reg_inc_beta((1.0 - t) / 2.0, a, a)?)
}

/// `ln` of [`band_prior_mass`], finite even when the mass underflows.
pub fn ln_band_prior_mass(n: usize, t: f64, p: usize) -> Result<f64> {
    check(n, t)?;
    let a = (n as f64 - 1.0) / 2.0;
    Ok(parity_factor(p).ln() + ln_reg_inc_beta((1.0 - t) / 2.0, a, a)?)
}

/// Large-`n` rate `(1/n) ln Π(T_t) -> 1/2 ln(1 - t^2)`.
pub fn band_mass_log_asymptotic(t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("band threshold must lie in [0,1), got {t}")));
    }
    Ok(0.5 * (-t * t).ln_1p())
}

/// Prior masses of the three latitude regions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandPriorMasses {
    pub start: f64,
    pub well: f64,
    pub target: f64,
}

/// Prior masses of `S_s`, `W_{s,t}` and `T_t` for `0 <= s < t < 1`.
pub fn band_prior_masses(n: usize, s: f64, t: f64, p: usize) -> Result<BandPriorMasses> {
    if !(s < t) {
        return Err(Error::Domain(format!("need s < t, got s={s}, t={t}")));
    }
    let ms = band_prior_mass(n, s, p)?;
    let mt = band_prior_mass(n, t, p)?;
    Ok(BandPriorMasses { start: 1.0 - ms, well: ms - mt, target: mt })
}
