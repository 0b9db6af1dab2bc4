//! Uplink capacity of single-antenna terminals in front of a large
//! intelligent surface.
//!
//! The crate is organised bottom-up:
//!
//! * [`fields`] evaluates the line-of-sight field a terminal spreads over the
//!   surface and the fraction of power the surface captures.
//! * [`quadrature`] integrates the oscillatory correlation integrals between
//!   two terminal signatures, and audits the sinc approximation.
//! * [`gram`] assembles the matched-filter Gram matrix of a deployment.
//! * [`capacity`] holds the closed-form capacities and dimension counts for
//!   line and plane deployments, plus matrix capacities for finite ones.
//! * [`experiments`] runs Poisson Monte-Carlo deployments and figure presets.
//!
//! Lengths are in meters, powers are linear and information is in nats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod gram;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use fields::{Extent, NoiseModel, SurfaceSpec, Terminal, Wavelength};
