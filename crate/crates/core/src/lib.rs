//! Spectral Galerkin solver and verification harness for the Navier-Stokes
//! equations with stochastic Lie transport noise on the periodic torus.
//!
//! The crate has three layers:
//!
//! * [`spectral`] - exact arithmetic on band-limited fields (derivatives,
//!   dealiased products, Parseval inner products, Sobolev norms);
//! * [`operators`] / [`vorticity`] - the operator calculus of the equations:
//!   Leray projection, Stokes powers, the transport-plus-stretch noise
//!   operator and its adjoint, commutators, the Ito correction, curl and
//!   Biot-Savart inversion;
//! * [`galerkin`], [`noise`], [`sde`], [`diagnostics`] - the truncated
//!   dynamics: Stokes eigenbasis, drift/diffusion assembly for the velocity
//!   (Ito and Stratonovich) and vorticity forms, Brownian paths, time
//!   steppers, and the identity/inequality verification suite.
//!
//! Fields are immutable values and every operation is pure, so ensembles
//! parallelise trivially; within one trajectory stepping is sequential.

pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod galerkin;
pub mod noise;
pub mod operators;
pub mod rng;
pub mod sde;
pub mod snapshot;
pub mod spectral;
pub mod vorticity;

pub use error::{Result, SaltError};
