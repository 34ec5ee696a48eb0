//! Sampling-based checks of the symmetry statements: fibre preservation,
//! (anti-)symplecticity, involutivity, commutation and fixed-locus censuses.

pub mod census;
pub mod checks;
pub mod cloud;
pub mod fidelity;
pub mod fixed;

pub use census::{fixed_locus_census, CensusOptions, CensusResult, ComponentSummary};
pub use checks::{
    dist_max, dist_periodic, verify_commutation, verify_fiber_preserving, verify_involution,
    verify_lagrangian, verify_pullback, Residual,
};
pub use cloud::SampleCloud;
pub use fidelity::{flow_fidelity, FlowFidelity};
pub use fixed::{fiber_fixed_count, fixed_point_on_fiber, FixedCount, FixedCountOptions};
