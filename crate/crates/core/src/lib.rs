#![allow(clippy::needless_range_loop)]

pub mod base_geometry;
pub mod calculus;
pub mod error;
pub mod exterior;
pub mod lifts;
pub mod phase_geometry;
pub mod random;
pub mod symexpr;
pub mod verify;
pub mod workbench;

pub use error::{Error, Result};
