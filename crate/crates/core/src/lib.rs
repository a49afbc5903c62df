//! Link-level simulator for orthogonal time sequency multiplexing (OTSM).
//!
//! Information symbols live on an `M x N` delay-sequency grid. Each row is
//! taken to the delay-time domain with an `N`-point Walsh-Hadamard transform
//! and the resulting matrix is sent column by column, one block of `M`
//! samples at a time. Zero padding at the tail of every block removes
//! inter-block interference, which lets the receiver equalize each block on
//! its own with Gauss-Seidel iterations and estimate the channel from a
//! single embedded pilot.
//!
//! The crate is organised bottom-up:
//!
//! * [`transforms`]: sequency-ordered WHT, unitary DFT, convolutions, perfect shuffle.
//! * [`frame`]: frame constants, grid layout (ZP, pilot, guards) and QAM mapping.
//! * [`modem`]: OTSM plus the OTFS, OFDM and single-carrier baselines.
//! * [`channel`]: multipath generation, delay-time taps, block/dense channel matrices.
//! * [`detector`]: matched filtering, Gauss-Seidel detection and single-tap MMSE.
//! * [`chanest`]: pilot power allocation, tap estimation and interpolation.
//! * [`coding`]: alist LDPC codes, min-sum decoding, soft demapping, turbo loop.
//! * [`harness`]: Monte-Carlo engine, configuration and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chanest;
pub mod channel;
pub mod coding;
pub mod detector;
mod error;
pub mod frame;
pub mod harness;
pub mod modem;
pub mod transforms;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex<f64>;
