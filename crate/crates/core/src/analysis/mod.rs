//! Post-processing of trajectories: the stress/strain duality pairing, the convexity
//! inequality and flow rule, and λ-sweeps.

pub mod pairing;
pub mod sweep;

pub use pairing::{
    battery, complementarity_gap, convexity_residual, duality_pairing, duality_pairing_scaled, flow_rule_residual,
    weighted_dissipation, ConvexityReport, Group, GroupResult, StepView, TestFunction,
};
pub use sweep::{
    lambda_sweep, lambda_sweep_with, loglog_slope, mass_distance, moreau_lower_bound_check, state_digest,
    LimitComparison, MoreauCheck, SweepMember, SweepReport,
};
