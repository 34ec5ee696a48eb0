//! Numeric kernel: symplectic pairings, differentiation, integration and
//! fibre exploration.

pub mod fiber;
pub mod flow;
pub mod map;
pub mod symplectic;

pub use fiber::{
    fiber_tangent_frame, lagrangian_residual, solve_fiber_point, FiberSolve, Frame, SolveOptions,
};
pub use flow::{
    default_steps, fiber_walk, hamiltonian_flow, integrate, integrate_order4, Hamiltonian,
};
pub use map::{identity_map, jacobian, pullback_residual, GenericEval, Side, SmoothMap};
pub use symplectic::{ChartId, PhasePoint, SymplecticStructure};
