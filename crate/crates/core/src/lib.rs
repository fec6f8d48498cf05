//! Pulse compiler and simulator for robust nonadiabatic holonomic gates on a
//! three-level system with an auxiliary level |a⟩.

pub mod engine;
pub mod error;
pub mod gates;
pub mod lab;
pub mod linalg;
pub mod paths;
pub mod pulses;
pub mod rb;
pub mod sideband;
pub mod tomo;

pub use error::{Error, Result};
