//! Radially symmetric regression model `Y = sqrt(w(|θ|)) g(X) + ε` with null truth `θ0 = 0`.

mod dataset;
mod likelihood;
mod wfun;

pub use dataset::{read_dataset, sidecar_path, simulate_dataset, write_dataset, DatasetMeta, RegressionDataset};
pub use likelihood::{
    expected_loglik, grad_loglik, loglik, monotonicity_certificate, pair_slope, MonotonicityReport, RadialLikelihood,
};
pub use wfun::{eval_w, eval_w_prime, w_prime_over_sqrt_w, GSpec, WParams};
