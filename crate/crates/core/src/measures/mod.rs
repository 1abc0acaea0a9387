//! Measures: special functions, ball/annulus/band masses, free-entropy profiles.

pub mod bands;
pub mod radial;
pub mod smallball;
pub mod special;

pub use bands::{band_mass_log_asymptotic, band_prior_mass, band_prior_masses, ln_band_prior_mass, BandPriorMasses};
pub use radial::{
    free_entropy_profile, posterior_annulus_ratio, posterior_ball_mass, posterior_region_ratio,
    prior_ratio_condition_check, radial_grid_build, BallPosterior, FreeEntropyProfile, GridSpec, LogRatio,
    PriorRatioReport, RadialGrid, RatioConditionInput,
};
pub use smallball::{
    chernoff_ball_log_upper, chernoff_ball_log_upper_variances, chernoff_tail_log_upper, isotropic_ball_prob,
    isotropic_smallball_lower_bound, ln_annulus_prob_iid, ln_ball_prob_iid, smallball_rate, smallball_scaling_fit,
    tilted_ball_estimate, tilted_ball_estimate_variances, BallProb, ChernoffBound, ScalingFit, ScalingPoint,
    TiltedEstimate,
};
pub use special::{ln_gamma, ln_reg_inc_beta, ln_reg_inc_gamma_lower, ln_reg_inc_gamma_upper, reg_inc_beta, reg_inc_gamma_lower};
