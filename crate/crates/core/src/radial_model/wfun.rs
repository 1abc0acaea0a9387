//! The piecewise ramp `w` and the response profile `g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the four-piece ramp
///
/// ```text
/// w(r) = 4(Tr)^2                          on [0, t/2)
///        (Tt)^2 + T(r - t/2)              on [t/2, t)
///        (Tt)^2 + Tt/2 + rho(r - t)       on [t, L)
///        (Tt)^2 + Tt/2 + rho(L - t)       on [L, inf)
/// ```
///
/// `b` and `n_ref` record how the realised values were obtained from
/// N-independent base constants (see [`WParams::scaled`]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WParams {
    /// Slope `T` of the steep segment.
    pub slope: f64,
    /// Knee radius `t`.
    pub knee: f64,
    /// Plateau radius `L`.
    pub plateau: f64,
    /// Shallow slope `rho`.
    pub rho: f64,
    /// Scaling exponent `b`.
    pub b: f64,
    /// Sample size the scaling was realised at.
    pub n_ref: usize,
}

impl WParams {
    pub fn new(slope: f64, knee: f64, plateau: f64, rho: f64) -> Result<Self> {
        let w = WParams { slope, knee, plateau, rho, b: 0.0, n_ref: 0 };
        w.validate()?;
        Ok(w)
    }

    /// Realise `t = t_b N^-b`, `L = L_b N^-b`, `T = T_b N^b`. With `b = 0` the
    /// base constants are returned unchanged.
    pub fn scaled(slope_b: f64, knee_b: f64, plateau_b: f64, rho: f64, b: f64, n: usize) -> Result<Self> {
        if !(b >= 0.0) {
            return Err(Error::Domain(format!("scaling exponent b must be >= 0, got {b}")));
        }
        if n == 0 {
            return Err(Error::Domain("N must be positive".into()));
        }
        let f = (n as f64).powf(b);
        let w = WParams { slope: slope_b * f, knee: knee_b / f, plateau: plateau_b / f, rho, b, n_ref: n };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.slope.is_finite()
            && self.rho > 0.0
            && self.slope > self.rho
            && self.knee > 0.0
            && self.plateau > self.knee
            && self.plateau.is_finite()
            && self.b >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid w parameters: {self:?}")))
        }
    }

    /// The non-differentiability set `{t/2, t, L}`.
    pub fn kinks(&self) -> [f64; 3] {
        [0.5 * self.knee, self.knee, self.plateau]
    }

    pub fn sup(&self) -> f64 {
        let tt = self.slope * self.knee;
        tt * tt + 0.5 * tt + self.rho * (self.plateau - self.knee)
    }

    /// `w(r)` for `r >= 0` (callers guarantee the sign).
    pub fn value(&self, r: f64) -> f64 {
        let (big_t, t) = (self.slope, self.knee);
        let tt = big_t * t;
        if r < 0.5 * t {
            4.0 * (big_t * r) * (big_t * r)
        } else if r < t {
            tt * tt + big_t * (r - 0.5 * t)
        } else if r < self.plateau {
            tt * tt + 0.5 * tt + self.rho * (r - t)
        } else {
            self.sup()
        }
    }

    /// Right-hand derivative `w'(r+)`.
    pub fn derivative(&self, r: f64) -> f64 {
        let t = self.knee;
        if r < 0.5 * t {
            8.0 * self.slope * self.slope * r
        } else if r < t {
            self.slope
        } else if r < self.plateau {
            self.rho
        } else {
            0.0
        }
    }

    /// `w'(r) / sqrt(w(r))` with right limits; equals `4T` on `[0, t/2)`,
    /// including the removable singularity at 0.
    pub fn derivative_over_sqrt(&self, r: f64) -> f64 {
        if r < 0.5 * self.knee {
            4.0 * self.slope
        } else {
            self.derivative(r) / self.value(r).sqrt()
        }
    }

    pub fn is_kink(&self, r: f64) -> bool {
        self.kinks().contains(&r)
    }
}

/// `w(r)`; negative radii are a domain error.
pub fn eval_w(r: f64, w: &WParams) -> Result<f64> {
    check_radius(r)?;
    Ok(w.value(r))
}

/// `w'(r)` with the right-limit convention at kinks.
pub fn eval_w_prime(r: f64, w: &WParams) -> Result<f64> {
    check_radius(r)?;
    Ok(w.derivative(r))
}

/// `w'(r) / sqrt(w(r))`.
pub fn w_prime_over_sqrt_w(r: f64, w: &WParams) -> Result<f64> {
    check_radius(r)?;
    Ok(w.derivative_over_sqrt(r))
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be finite and >= 0, got {r}")))
    }
}

/// Response profile `g: [0,1]^d -> [g_min, g_max]` with unit `L^2` norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GSpec {
    #[default]
    ConstantOne,
    /// `g(x) = c (1 + x_1 / 2)` with `c = sqrt(12/19)`.
    Affine,
}

const AFFINE_C: f64 = 0.794_719_414_239_026_3; // sqrt(12/19)

impl GSpec {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            GSpec::ConstantOne => 1.0,
            GSpec::Affine => AFFINE_C * (1.0 + 0.5 * x[0]),
        }
    }

    pub fn g_min(&self) -> f64 {
        match self {
            GSpec::ConstantOne => 1.0,
            GSpec::Affine => AFFINE_C,
        }
    }

    pub fn g_max(&self) -> f64 {
        match self {
            GSpec::ConstantOne => 1.0,
            GSpec::Affine => 1.5 * AFFINE_C,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GSpec::ConstantOne => "constant-one",
            GSpec::Affine => "affine",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "constant-one" => Ok(GSpec::ConstantOne),
            "affine" => Ok(GSpec::Affine),
            other => Err(Error::Domain(format!("unknown g variant '{other}' (expected constant-one or affine)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> WParams {
        WParams::new(2.0, 1.0, 5.0, 0.1).unwrap()
    }

    #[test]
    fn hand_values() {
        let w = example();
        assert_eq!(eval_w(0.0, &w).unwrap(), 0.0);
        assert!((eval_w(1.0, &w).unwrap() - 5.0).abs() < 1e-15);
        for r in [5.0, 6.0, 1e6] {
            assert!((eval_w(r, &w).unwrap() - 5.4).abs() < 1e-12);
        }
        assert!((w.sup() - 5.4).abs() < 1e-12);
        assert!(eval_w(-1e-3, &w).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let w = example();
        assert!((eval_w_prime(0.25, &w).unwrap() - 8.0).abs() < 1e-12);
        assert!((w_prime_over_sqrt_w(0.25, &w).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(eval_w_prime(7.0, &w).unwrap(), 0.0);
        let h = 1e-6;
        for r in [0.1, 0.25, 0.4, 0.7, 0.9, 1.5, 3.0, 4.9, 6.0] {
            let fd = (w.value(r + h) - w.value(r - h)) / (2.0 * h);
            let d = w.derivative(r);
            assert!((fd - d).abs() <= 1e-6 * d.abs().max(1e-3), "r={r}: fd={fd}, w'={d}");
        }
    }

    #[test]
    fn continuous_and_monotone() {
        let w = example();
        for k in w.kinks() {
            assert!((w.value(k) - w.value(k - 1e-13)).abs() < 1e-11, "jump at {k}");
        }
        let mut prev = 0.0;
        for i in 0..10_000 {
            let v = w.value(7.0 * i as f64 / 9_999.0);
            assert!(v >= prev);
            prev = v;
        }
        assert!(prev <= w.sup());
    }

    #[test]
    fn right_limit_at_kinks() {
        let w = example();
        assert_eq!(w.derivative(0.5), 2.0);
        assert_eq!(w.derivative(1.0), 0.1);
        assert_eq!(w.derivative(5.0), 0.0);
    }

    #[test]
    fn scaling_law() {
        let w = WParams::scaled(2.0, 0.1, 1.0, 0.1, 0.5, 100).unwrap();
        assert!((w.slope - 20.0).abs() < 1e-12);
        assert!((w.knee - 0.01).abs() < 1e-15);
        assert!((w.plateau - 0.1).abs() < 1e-15);
        let w0 = WParams::scaled(2.0, 0.1, 1.0, 0.1, 0.0, 100).unwrap();
        assert_eq!((w0.slope, w0.knee, w0.plateau), (2.0, 0.1, 1.0));
        assert!(WParams::new(0.05, 0.1, 1.0, 0.1).is_err());
        assert!(WParams::new(2.0, 1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn g_has_unit_norm_and_bounds() {
        // composite Simpson is exact for the quadratic g^2
        for g in [GSpec::ConstantOne, GSpec::Affine] {
            let m = 1000;
            let h = 1.0 / m as f64;
            let mut s = 0.0;
            for i in 0..=m {
                let x = i as f64 * h;
                let c = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                let v = g.eval(&[x]);
                assert!(v >= g.g_min() - 1e-15 && v <= g.g_max() + 1e-15);
                s += c * v * v;
            }
            assert!((s * h / 3.0 - 1.0).abs() < 1e-10, "{g:?}");
        }
        assert!((AFFINE_C - (12.0f64 / 19.0).sqrt()).abs() < 1e-16);
        assert_eq!(GSpec::parse("affine").unwrap(), GSpec::Affine);
        assert!(GSpec::parse("quadratic").is_err());
    }
}
