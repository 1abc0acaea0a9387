//! Numerical laboratory for entropic (volumetric) barriers in MCMC.
//!
//! The crate implements a radially symmetric non-linear regression model
//! with Gaussian priors, the pCN, MALA and sphere random-walk Metropolis
//! kernels, and the measurement machinery needed to exhibit free-entropy
//! wells: small-ball and annulus prior masses, Franz–Parisi free-entropy
//! profiles, posterior annulus ratios, latitude-band masses on the sphere
//! and hitting-time experiments.
//!
//! Modules:
//!
//! * [`radial_model`] – the forward map `sqrt(w(|θ|)) g(x)`, data simulation
//!   and log-likelihoods.
//! * [`priors`] – isotropic and α-regular diagonal Gaussian priors.
//! * [`samplers`] – Markov kernels, chain runner and step-size audits.
//! * [`measures`] – special functions, ball/band masses, free-entropy
//!   profiles.
//! * [`spiked_tensor`] – the spiked tensor model on the unit sphere.
//! * [`experiments`] – hitting-time, bottleneck and audit experiments.
//!
//! All randomness is drawn from explicitly seeded [`rng::SeededRng`]
//! streams, so every result is reproducible from a master seed.

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod measures;
pub mod priors;
pub mod radial_model;
pub mod rng;
pub mod samplers;
pub mod spiked_tensor;

pub use error::{Error, Result};
