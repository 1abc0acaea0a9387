//! Experiments built on the models: the isotropic hardness design,
//! hitting times of small balls, the bottleneck bound for the tensor model
//! and audits of recorded traces.

mod audit;
mod bottleneck;
mod design;
mod hitting;

pub use audit::{barrier_reduction_audit, AuditReport};
pub use bottleneck::{bottleneck_bound_check, BottleneckReport};
pub use design::{HardnessParams, IsotropicHardnessDesign};
pub use hitting::{ball_grid, hitting_time_experiment, HittingConfig, HittingTimeReport, RadialModelConfig, ReplicaOutcome};
