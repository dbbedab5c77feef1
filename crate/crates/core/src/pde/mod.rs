//! Radial simulation of the rescaled weighted fast diffusion flow in
//! `s = r^α`, with the entropy diagnostics and the functional identities
//! that connect it to the interpolation inequality.

pub mod evolve;
pub mod functional;
pub mod rescaling;
pub mod scheme;

pub use evolve::{evolve_and_fit, fit_rate, EvolveOptions, FitWindow, RateFit, SimulationTrace};
pub use functional::{equivalence_check, h_functional, scaling_optimum, EquivalenceCheck, PerturbedBarenblatt, ScalingOptimum};
pub use rescaling::{rescaling, Rescaling};
pub use scheme::{check_sandwich, init_sandwiched, mass_tail_domain, RadialState, Shape};
