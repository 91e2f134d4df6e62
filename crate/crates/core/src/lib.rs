//! Modulated nonlinear opinion dynamics.
//!
//! Networks of saturated first-order opinion states whose additive couplings
//! are scaled by other states (modulatory interactions). The crate evaluates
//! the vector field and its Jacobian, integrates trajectories, traces
//! equilibrium branches in the basal attention `u0`, and classifies the
//! opinion-forming bifurcation through a numerical Lyapunov-Schmidt reduction.

pub mod continuation;
pub mod dynamics;
pub mod model;
pub mod reduction;
pub mod scenarios;
pub mod spectral;

pub use model::{Modulation, ModelError, NetworkSpec, OpinionState, Saturation};
pub use reduction::{LSReport, Normalization, Singularity};
pub use scenarios::ScenarioId;
pub use spectral::{critical_attention, full_spectrum, leading_eigenpair, EigenTriple, SpectralError};
