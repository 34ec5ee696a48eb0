//! Action-angle machinery: period lattices, reduced coordinates on
//! `T*B/Λ`, fibrewise translations and involutions, and the flow-built
//! identification `Θ̃` of a model with its semiflat chart.

pub mod chart;
pub mod theta;

pub use chart::{
    iota_h, minus_id, reduce, section_translation, translate, ChartSpec, FiberPoint, OneForm,
    PeriodSet, Polynomial, SemiflatChart, Term, Turn,
};
pub use theta::{
    build_theta, build_theta_with, fiberwise_translation, invert_theta, lattice_mismatch,
    lattice_probe, nodal_period_oracle, refine_period, theta_negation, LatticeOptions, Realization,
};
