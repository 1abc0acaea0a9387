//! The spiked tensor model `Y = λ sqrt(n) θ0^{⊗p} + Z` with a uniform prior
//! on the unit sphere: simulation, exact and averaged likelihoods,
//! latitude-band posterior masses and injective-norm estimates.

mod bands;
mod injective;
mod model;
mod tensor;

pub use bands::{
    band_masses_from, contraction_curve, importance_sample, posterior_band_masses, BandMasses, Bands, ContractionPoint, ImportanceSample, Region, MIN_ESS,
};
pub use injective::{injective_norm_estimate, InjectiveEstimate, POWER_MAX_ITER, POWER_TOL};
pub use model::{
    averaged_free_entropy_curve, averaged_loglik, delta_step, entries, r_of_eps, simulate_tensor, tensor_loglik, CriticalKind, CriticalPoint,
    FreeEntropyCurve, TensorInstance, TensorTarget, MAX_ENTRIES,
};
pub use tensor::{contract_all, contract_except_first, flat_inner, power_iteration, symmetrize, PowerResult};
