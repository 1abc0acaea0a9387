use crate::error::{Error, Result};
use crate::priors::PriorSpec;
use crate::radial_model::{RadialLikelihood, WParams};

/// A log-density (up to a constant) on `R^dim`.
pub trait LogTarget: Sync {
    fn dim(&self) -> usize;
    fn log_value(&self, x: &[f64]) -> Result<f64>;
}

pub trait GradLogTarget: LogTarget {
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl<T: LogTarget + ?Sized> LogTarget for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_value(&self, x: &[f64]) -> Result<f64> {
        (**self).log_value(x)
    }
}

impl<T: GradLogTarget + ?Sized> GradLogTarget for &T {
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).grad(x)
    }
}

/// Current point of a chain with its cached target value and gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub log_value: f64,
    pub grad: Option<Vec<f64>>,
}

/// The radial log-likelihood `ℓ_N` as a chain target. The gradient uses the
/// right-limit derivative of `w` at the kinks.
#[derive(Clone, Copy, Debug)]
pub struct RadialTarget {
    pub lik: RadialLikelihood,
    pub w: WParams,
}

impl LogTarget for RadialTarget {
    fn dim(&self) -> usize {
        self.lik.dim
    }
    fn log_value(&self, x: &[f64]) -> Result<f64> {
        self.lik.value(x, &self.w)
    }
}

impl GradLogTarget for RadialTarget {
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.lik.grad(x, &self.w)
    }
}

/// Likelihood plus prior log-density.
#[derive(Clone, Copy, Debug)]
pub struct Posterior<T> {
    pub lik: T,
    pub prior: PriorSpec,
}

impl<T: LogTarget> LogTarget for Posterior<T> {
    fn dim(&self) -> usize {
        self.lik.dim()
    }
    fn log_value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.lik.log_value(x)? + self.prior.log_density(x)?)
    }
}

impl<T: GradLogTarget> GradLogTarget for Posterior<T> {
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.lik.grad(x)?;
        for (a, b) in g.iter_mut().zip(self.prior.grad_log_density(x)?) {
            *a += b;
        }
        Ok(g)
    }
}

pub(crate) fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} = {v}")))
    }
}
