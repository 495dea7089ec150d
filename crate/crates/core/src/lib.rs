//! Numerical core for quasineutral Vlasov-Poisson experiments with random
//! initial data: phase-space grids and a semi-Lagrangian solver, the
//! multi-fluid companion model, optimal-transport distances, stochastic
//! collocation, norm and bound evaluators, and the normal/quasineutral
//! scaling map.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod error;
pub mod faddeeva;
pub mod fluid;
pub mod interp;
pub mod phase;
pub mod quadrature;
pub mod scaling;
pub mod spectral;
pub mod transport;
pub mod uq;
pub mod vlasov;

pub use error::{Error, Result};
