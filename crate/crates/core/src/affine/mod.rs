//! Base-side computations: the amoeba, discriminant probes and monodromy.

pub mod amoeba;
pub mod discriminant;
pub mod monodromy;

pub use amoeba::{
    amoeba_membership, amoeba_raster, amoeba_slack, complement_components, near_boundary,
    sampled_amoeba, AmoebaRaster, AmoebaSpec, ComplementCount,
};
pub use discriminant::{discriminant_probe, discriminant_violation, DiscriminantProbe};
pub use monodromy::{
    monodromy, monodromy_of_model, LoopSpec, MonodromyMatrix, LOOP_STEPS, ROUNDING_THRESHOLD,
};
