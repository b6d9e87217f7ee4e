//! Numerics, samplers and an exact nearest-neighbor-graph engine for the
//! largest nearest-neighbor distance (LNND) of standard-normal point clouds.
//!
//! The modules are layered bottom-up:
//!
//! * [`geometry`]: exact radial law and ball masses of the standard Gaussian.
//! * [`asymptotics`]: closed-form growth radii, ball-mass asymptotics and
//!   series terms, each paired with an exact counterpart.
//! * [`process`]: fixed-n, Poissonized and coupled point-process samplers.
//! * [`nng`]: brute-force and k-d tree nearest-neighbor graphs.
//! * [`experiments`]: the Monte Carlo harness.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod nng;
pub mod process;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Dimension, RadialConstant};
pub use nng::{build_nng_brute, build_nng_fast, lnnd, NngResult};
pub use process::{CloudKind, PointCloud};
pub use rng::SeedRecord;
