//! Berry potentials, curvatures and parameter-space electrodynamics on
//! discretized `(R, t)` grids.
//!
//! The crate is `no_std` with `alloc`; the `std` feature (default) only
//! forwards to the numeric dependencies.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod berry;
pub mod electro;
mod error;
pub mod grid;
pub mod model;
pub mod numeric;

pub use error::{Error, Result};
