//! Turbo loop between the Gauss-Seidel detector and the LDPC decoder.
//!
//! Each turbo iteration runs a few detector iterations from the current
//! time-domain estimate, soft-demaps the delay-sequency outputs,
//! deinterleaves, decodes every codeword, and, unless all parity checks
//! pass, re-interleaves the decoded bits, maps them to QAM and remodulates
//! them into the next estimate. The first estimate is zero.

use std::sync::Arc;

use super::demap::{hard_bits, soft_demap};
use super::interleaver::Interleaver;
use super::ldpc::{LdpcCode, DEFAULT_DECODER_ITERS};
use crate::detector::{GsDetector, MatchedBlocks};
use crate::frame::{build_grid, extract_data, DelaySequencyGrid, QamConstellation};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurboConfig {
    pub max_turbo_iters: usize,
    pub detector_iters: usize,
    pub decoder_iters: usize,
    /// Skip decoding: the loop feeds back its own hard decisions.
    pub bypass_decoder: bool,
}

impl Default for TurboConfig {
    fn default() -> Self {
        Self {
            max_turbo_iters: 5,
            detector_iters: 3,
            decoder_iters: DEFAULT_DECODER_ITERS,
            bypass_decoder: false,
        }
    }
}

impl TurboConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        for (name, val) in [
            ("max_turbo_iters", self.max_turbo_iters),
            ("detector_iters", self.detector_iters),
            ("decoder_iters", self.decoder_iters),
        ] {
            if val == 0 {
                v.push(format!("{name} must be at least 1"));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Bit-interleaved coded layout of the data symbols of one frame.
///
/// `⌊D Q / L⌋` codewords fill the `D` data symbols; any remaining bit
/// positions carry filler bits that are not protected by the code.
#[derive(Debug, Clone)]
pub struct CodedFrame {
    code: Arc<LdpcCode>,
    interleaver: Interleaver,
    qam: QamConstellation,
    data_symbols: usize,
    codewords: usize,
}

impl CodedFrame {
    pub fn new(code: Arc<LdpcCode>, data_symbols: usize, qam: QamConstellation, interleaver_seed: u64) -> Result<Self> {
        let coded_len = data_symbols * qam.bits_per_symbol();
        let codewords = coded_len / code.n();
        if codewords == 0 {
            return Err(Error::invalid(format!(
                "frame carries {coded_len} coded bits, fewer than one codeword of {}",
                code.n()
            )));
        }
        Ok(Self {
            interleaver: Interleaver::new(coded_len, interleaver_seed),
            code,
            qam,
            data_symbols,
            codewords,
        })
    }

    pub fn code(&self) -> &LdpcCode {
        &self.code
    }

    pub fn qam(&self) -> &QamConstellation {
        &self.qam
    }

    pub fn codewords(&self) -> usize {
        self.codewords
    }

    pub fn info_len(&self) -> usize {
        self.codewords * self.code.k()
    }

    pub fn coded_len(&self) -> usize {
        self.data_symbols * self.qam.bits_per_symbol()
    }

    pub fn filler_len(&self) -> usize {
        self.coded_len() - self.codewords * self.code.n()
    }

    /// Interleaves and maps a full block of coded bits.
    pub fn bits_to_symbols(&self, coded: &[u8]) -> Result<Vec<C64>> {
        self.qam.map(&self.interleaver.interleave(coded)?)
    }

    /// Encodes `info` codeword by codeword, appends `filler`, interleaves and
    /// maps. Returns the coded bits (before interleaving) and the symbols.
    pub fn encode(&self, info: &[u8], filler: &[u8]) -> Result<(Vec<u8>, Vec<C64>)> {
        if info.len() != self.info_len() {
            return Err(Error::mismatch("information bits", self.info_len(), info.len()));
        }
        if filler.len() != self.filler_len() {
            return Err(Error::mismatch("filler bits", self.filler_len(), filler.len()));
        }
        let mut coded = Vec::with_capacity(self.coded_len());
        for chunk in info.chunks_exact(self.code.k()) {
            coded.extend(self.code.encode(chunk)?);
        }
        coded.extend_from_slice(filler);
        let symbols = self.bits_to_symbols(&coded)?;
        Ok((coded, symbols))
    }

    /// Deinterleaved LLRs for every coded bit position.
    pub fn llrs(&self, symbols: &[C64], noise_var: f64) -> Result<Vec<f64>> {
        let ones = vec![C64::new(1.0, 0.0); symbols.len()];
        let llr = soft_demap(symbols, &ones, noise_var.max(f64::MIN_POSITIVE), &self.qam)?;
        self.interleaver.deinterleave(&llr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboOutcome {
    pub info_bits: Vec<u8>,
    /// Hard grid from the last turbo iteration.
    pub grid: DelaySequencyGrid,
    pub turbo_iters: usize,
    pub detector_iters: usize,
    /// Codewords passing their parity checks, per turbo iteration.
    pub parity_pass: Vec<usize>,
    pub all_parity_ok: bool,
}

/// Runs the detector/decoder loop on one matched-filtered frame.
pub fn turbo_decode(
    det: &GsDetector,
    mb: &MatchedBlocks,
    noise_var: f64,
    frame: &CodedFrame,
    cfg: &TurboConfig,
) -> Result<TurboOutcome> {
    cfg.validate()?;
    let params = det.layout.params;
    if frame.data_symbols != params.data_len() {
        return Err(Error::mismatch("coded data symbols", params.data_len(), frame.data_symbols));
    }
    let inner = GsDetector {
        cfg: crate::detector::DetectorConfig {
            max_iters: cfg.detector_iters,
            ..det.cfg
        },
        ..det.clone()
    };
    let (n, k) = (frame.code.n(), frame.code.k());
    let mut s = vec![C64::default(); params.frame_len()];
    let mut parity_pass = Vec::new();
    let mut detector_iters = 0;
    let mut info_bits = Vec::new();
    let mut grid = DelaySequencyGrid::zeros(params.m, params.n);
    let mut all_ok = false;
    for _ in 0..cfg.max_turbo_iters {
        let out = inner.detect(mb, noise_var, Some(&s))?;
        detector_iters += out.iterations;
        let llr = frame.llrs(&extract_data(&params, &out.soft), noise_var)?;
        let mut bits = hard_bits(&llr);
        info_bits.clear();
        if cfg.bypass_decoder {
            for cw in bits[..frame.codewords * n].chunks_exact(n) {
                info_bits.extend_from_slice(&cw[..k]);
            }
            parity_pass.push(0);
        } else {
            let mut pass = 0;
            for (c, chunk) in llr[..frame.codewords * n].chunks_exact(n).enumerate() {
                let dec = frame.code.decode(chunk, cfg.decoder_iters)?;
                pass += usize::from(dec.parity_ok);
                info_bits.extend_from_slice(&dec.bits[..k]);
                bits[c * n..(c + 1) * n].copy_from_slice(&dec.bits);
            }
            parity_pass.push(pass);
            all_ok = pass == frame.codewords;
        }
        grid = build_grid(&params, &frame.bits_to_symbols(&bits)?, det.layout.pilot_amplitude)?;
        if all_ok {
            break;
        }
        s = det.modem.grid_to_time(&grid)?;
    }
    Ok(TurboOutcome {
        info_bits,
        grid,
        turbo_iters: parity_pass.len(),
        detector_iters,
        parity_pass,
        all_parity_ok: all_ok,
    })
}
