//! Numerical core for 3D magnetotelluric forward modeling.
//!
//! Everything here is `no_std` (with `alloc`): mesh construction, random-field
//! resistivity models, layered-earth plane-wave responses, edge-element
//! assembly with a sparse multifrontal solver, impedance and apparent
//! resistivity, dataset utilities and comparison metrics. File IO, threading
//! and the command line live in the `mtforge` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod analytic1d;
pub mod error;
pub mod femsolver;
pub mod fft;
pub mod geomodel;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod sparse;

pub use error::{Error, Result};
