//! Markov kernels (pCN, MALA, sphere random-walk Metropolis), the chain
//! runner and the one-step displacement audit.

mod chain;
mod kernels;
mod targets;

pub use chain::{
    read_trace_csv, run_chain, step_assumption_estimate, ChainTrace, HittingTime, StepAssumptionReport, StepRecord,
    TraceRow,
};
pub use kernels::{
    mala_log_ratio, mala_step, pcn_step, sphere_rwmh_step, KernelConfig, KernelKind, Mala, MarkovKernel, Pcn,
    SphereRwmh, Transition,
};
pub use targets::{ChainState, GradLogTarget, LogTarget, Posterior, RadialTarget};
