//! Delay-Doppler (OTFS) and CP-OFDM link-level signal processing.
//!
//! The crate is `no_std` and only needs an allocator. It covers the whole
//! transmit/receive chain of an OTFS link:
//!
//! * [`transforms`]: the symplectic finite Fourier transform pair mapping a
//!   [`DelayDopplerGrid`] onto a [`TimeFrequencyGrid`] and back.
//! * [`multicarrier`]: the CP-OFDM modulator/demodulator underneath both
//!   schemes.
//! * [`channel`]: tapped delay-Doppler channels, standard 3GPP profiles,
//!   AWGN, and the constructive delay-Doppler effective-channel oracle.
//! * [`estimation`]: impulse pilots with guard boxes and antenna-port packing.
//! * [`equalization`]: LMMSE, genie-aided MMSE-DFE and per-bin receivers.
//! * [`qam`], [`fec`], [`link`]: the Monte Carlo link harness.
//!
//! Everything that draws random numbers takes an explicit seed.

#![no_std]

extern crate alloc;

pub mod channel;
pub mod equalization;
mod error;
pub mod estimation;
pub mod fec;
pub mod fft;
mod grid;
pub mod linalg;
pub mod link;
pub mod multicarrier;
pub mod qam;
pub mod stats;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{DelayDopplerGrid, FrameParams, TimeFrequencyGrid};

/// Complex baseband sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
