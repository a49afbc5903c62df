//! Channel coding: alist parity-check matrices, systematic LDPC codes with a
//! normalized min-sum decoder, bit interleaving, max-log soft demapping and
//! the detector/decoder turbo loop.

mod alist;
mod demap;
mod interleaver;
mod ldpc;
mod turbo;

pub use alist::ParityCheckMatrix;
pub use demap::{hard_bits, soft_demap};
pub use interleaver::Interleaver;
pub use ldpc::{DecodeResult, LdpcCode, DEFAULT_DECODER_ITERS, MIN_SUM_SCALE};
pub use turbo::{turbo_decode, CodedFrame, TurboConfig, TurboOutcome};
