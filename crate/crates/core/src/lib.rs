#![cfg_attr(not(feature = "std"), no_std)]
//! Wave-optical simulation of spatially multiplexed free-space quantum links.
//!
//! Orbital-angular-momentum modes are pushed through synthetic von Kármán
//! turbulence with a split-step angular-spectrum method. The resulting
//! kept-subspace crosstalk matrix drives multi-photon detection statistics
//! (permanents for indistinguishable photons) and an erasure-flagged logical
//! channel on the polarization qubits.
//!
//! The crate needs only `alloc`; disable the default `std` feature for
//! `no_std` targets.

extern crate alloc;

pub mod channel;
pub mod error;
pub mod experiment;
pub mod fft;
pub mod grid;
pub mod mimo;
pub mod modes;
pub mod optics;
pub mod permanent;
pub mod photon;
pub mod rng;
pub mod turbulence;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid};
pub use mimo::{CrosstalkMatrix, ErasureVector};
pub use turbulence::{PhaseScreen, TurbulenceParams};

/// Complex matrix type used for crosstalk blocks and dilations.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
