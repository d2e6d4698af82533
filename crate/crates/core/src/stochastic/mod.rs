//! Exact-in-law simulation of Brownian motion, Itô integrals of step
//! integrands, and convolutions against diagonal semigroups.

mod integrand;
mod model;
mod rng;
mod sim;

pub use integrand::StepIntegrand;
pub use model::DiagonalModel;
pub use rng::{Purpose, RngSpec};
pub use sim::{
    deterministic_convolution, deterministic_convolution_shifted, feedback_integral, ito_integral,
    representation_check, sample_brownian, simulate_bundle, stochastic_convolution,
    stochastic_convolution_with_correctors, BundleSidecar, PathBundle, RepresentationDefect, WienerIncrements,
};
