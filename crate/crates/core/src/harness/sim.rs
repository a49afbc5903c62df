//! Monte-Carlo engine.
//!
//! Trial `t` draws its channel, data and noise from three ChaCha8 streams
//! keyed by `(seed, t)`. The streams do not depend on the SNR point or the
//! scheme, so every scheme and SNR sees the same realizations and the same
//! unit noise shape (scaled by `σ`).

use std::sync::Arc;
use std::time::Instant;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{CodingKind, CsiKind, DetectorKind, ModemKind, SimConfig};
use crate::chanest::{db_to_linear, estimate_taps, interpolate, pilot_power, PilotConfig};
use crate::channel::{
    apply_with_rng, build_block_channel, discretize, discretize_span, sample_paths, PathSet,
};
use crate::coding::{turbo_decode, CodedFrame, LdpcCode};
use crate::detector::{block_single_tap, matched_filter, ofdm_single_tap, GsDetector, Initializer};
use crate::frame::{build_grid, extract_data, DelaySequencyGrid, FrameLayout, FrameParams, QamConstellation};
use crate::modem::{DelayTimeModem, OfdmModem};
use crate::{Error, Result};

const STREAM_CHANNEL: u64 = 0;
const STREAM_DATA: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAMS_PER_TRIAL: u64 = 8;

/// Noise variance per complex sample for unit-energy data symbols.
pub fn snr_to_noise_var(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

pub fn trial_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial * STREAMS_PER_TRIAL + stream);
    rng
}

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| u8::from(rng.random::<bool>())).collect()
}

fn count_errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameOutcome {
    pub bit_errors: usize,
    pub bits: usize,
    pub frame_error: bool,
    pub det_iters: usize,
    pub turbo_iters: usize,
    pub channel_digest: u64,
}

impl FrameOutcome {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits.max(1) as f64
    }
}

/// Totals for one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub bit_errors: usize,
    pub bits: usize,
    pub frame_errors: usize,
    pub frames: usize,
    pub det_iters: usize,
    pub turbo_iters: usize,
    pub seconds: f64,
    /// Channel digest of every frame, in trial order.
    pub digests: Vec<u64>,
}

impl PointResult {
    pub fn new(snr_db: f64) -> Self {
        Self {
            snr_db,
            bit_errors: 0,
            bits: 0,
            frame_errors: 0,
            frames: 0,
            det_iters: 0,
            turbo_iters: 0,
            seconds: 0.0,
            digests: Vec::new(),
        }
    }

    pub fn push(&mut self, f: &FrameOutcome) {
        self.bit_errors += f.bit_errors;
        self.bits += f.bits;
        self.frame_errors += usize::from(f.frame_error);
        self.frames += 1;
        self.det_iters += f.det_iters;
        self.turbo_iters += f.turbo_iters;
        self.digests.push(f.channel_digest);
    }

    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits.max(1) as f64
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.frames.max(1) as f64
    }

    pub fn mean_det_iters(&self) -> f64 {
        self.det_iters as f64 / self.frames.max(1) as f64
    }

    pub fn mean_turbo_iters(&self) -> f64 {
        self.turbo_iters as f64 / self.frames.max(1) as f64
    }

    /// FNV-1a over the per-frame digests.
    pub fn channel_digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for d in &self.digests {
            for b in d.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

#[allow(clippy::large_enum_variant)]
enum Scheme {
    DelayTime {
        modem: DelayTimeModem,
        detector: GsDetector,
        coded: Option<CodedFrame>,
    },
    Ofdm(OfdmModem),
}

/// One configured link, ready to run frames.
pub struct Simulation {
    cfg: SimConfig,
    params: FrameParams,
    qam: QamConstellation,
    pilot: Option<PilotConfig>,
    scheme: Scheme,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.frame_params()?;
        let qam = QamConstellation::new(cfg.qam)?;
        let pilot = match cfg.csi {
            CsiKind::Perfect => None,
            CsiKind::Estimated => Some(pilot_power(&params, db_to_linear(cfg.beta_db), 1.0)?),
        };
        let amp = pilot.map_or(0.0, |p| p.amplitude());
        let scheme = match cfg.modem {
            ModemKind::Ofdm => Scheme::Ofdm(OfdmModem::new(params)?),
            kind => {
                let modem = match kind {
                    ModemKind::Otsm => DelayTimeModem::otsm(params)?,
                    ModemKind::Otfs => DelayTimeModem::otfs(params)?,
                    _ => DelayTimeModem::single_carrier(params)?,
                };
                let detector = GsDetector::new(
                    modem.clone(),
                    FrameLayout::new(params, amp),
                    qam.clone(),
                    cfg.detector_config(),
                )?;
                let coded = match cfg.coding {
                    CodingKind::None => None,
                    CodingKind::Ldpc => {
                        let code = Arc::new(LdpcCode::load(&cfg.code_path)?);
                        Some(CodedFrame::new(code, params.data_len(), qam.clone(), cfg.interleaver_seed)?)
                    }
                };
                Scheme::DelayTime {
                    modem,
                    detector,
                    coded,
                }
            }
        };
        Ok(Self {
            cfg,
            params,
            qam,
            pilot,
            scheme,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn params(&self) -> &FrameParams {
        &self.params
    }

    /// Pilot allocation under estimated CSI.
    pub fn pilot(&self) -> Option<&PilotConfig> {
        self.pilot.as_ref()
    }

    /// Information bits per frame.
    pub fn bits_per_frame(&self) -> usize {
        match &self.scheme {
            Scheme::Ofdm(_) => self.params.frame_len() * self.qam.bits_per_symbol(),
            Scheme::DelayTime { coded: Some(c), .. } => c.info_len(),
            Scheme::DelayTime { coded: None, .. } => self.params.data_len() * self.qam.bits_per_symbol(),
        }
    }

    /// Channel realization of trial `trial`.
    pub fn paths(&self, trial: u64) -> Result<PathSet> {
        let mut rng = trial_rng(self.cfg.seed, trial, STREAM_CHANNEL);
        sample_paths(
            &self.params,
            &self.cfg.profile,
            self.cfg.speed_kmh,
            self.cfg.doppler,
            &mut rng,
        )
    }

    /// Runs trial `trial` at one SNR.
    pub fn run_frame(&self, trial: u64, snr_db: f64) -> Result<FrameOutcome> {
        let noise_var = snr_to_noise_var(snr_db);
        let paths = self.paths(trial)?;
        let mut data_rng = trial_rng(self.cfg.seed, trial, STREAM_DATA);
        let mut noise_rng = trial_rng(self.cfg.seed, trial, STREAM_NOISE);
        let (tx_bits, rx_bits, det_iters, turbo_iters) = match &self.scheme {
            Scheme::Ofdm(modem) => {
                let bits = random_bits(&mut data_rng, self.bits_per_frame());
                let grid = DelaySequencyGrid::from_row_major(self.params.m, self.params.n, self.qam.map(&bits)?)?;
                let tx = modem.modulate(&grid)?;
                let taps = discretize_span(&paths, &self.params, self.cfg.discretize, 0, modem.frame_len())?;
                let rx = apply_with_rng(&taps, &tx, noise_var, &mut noise_rng)?;
                let soft = ofdm_single_tap(modem, &taps, &rx, noise_var)?;
                let decided = self.qam.demap_hard(soft.as_slice());
                (bits, decided, 1, 0)
            }
            Scheme::DelayTime {
                modem,
                detector,
                coded,
            } => {
                let (bits, symbols) = match coded {
                    Some(c) => {
                        let info = random_bits(&mut data_rng, c.info_len());
                        let filler = random_bits(&mut data_rng, c.filler_len());
                        let (_, symbols) = c.encode(&info, &filler)?;
                        (info, symbols)
                    }
                    None => {
                        let bits = random_bits(&mut data_rng, self.bits_per_frame());
                        let symbols = self.qam.map(&bits)?;
                        (bits, symbols)
                    }
                };
                let amp = detector.layout.pilot_amplitude;
                let tx = modem.modulate(&build_grid(&self.params, &symbols, amp)?)?;
                let truth = discretize(&paths, &self.params, self.cfg.discretize)?;
                let rx = apply_with_rng(&truth, &tx, noise_var, &mut noise_rng)?;
                let taps = match &self.pilot {
                    None => truth,
                    Some(p) => interpolate(&estimate_taps(&rx, modem, p)?, &self.params, self.cfg.interp)?,
                };
                let bc = build_block_channel(&taps, &self.params)?;
                match (self.cfg.detector, coded) {
                    (DetectorKind::SingleTap, _) => {
                        let s = block_single_tap(&bc, &rx, noise_var)?;
                        let grid = detector.layout.decide(&modem.time_to_grid(&s)?, &self.qam);
                        let decided = self.qam.demap_hard(&extract_data(&self.params, &grid));
                        (bits, decided, 1, 0)
                    }
                    (DetectorKind::GsIterative, None) => {
                        let mb = matched_filter(&bc, &rx)?;
                        let init = match self.cfg.initializer {
                            Initializer::Zero => None,
                            Initializer::MmseSingleTap => Some(block_single_tap(&bc, &rx, noise_var)?),
                        };
                        let out = detector.detect(&mb, noise_var, init.as_deref())?;
                        let decided = self.qam.demap_hard(&extract_data(&self.params, &out.grid));
                        (bits, decided, out.iterations, 0)
                    }
                    (DetectorKind::GsIterative, Some(c)) => {
                        let mb = matched_filter(&bc, &rx)?;
                        let out = turbo_decode(detector, &mb, noise_var, c, &self.cfg.turbo)?;
                        (bits, out.info_bits, out.detector_iters, out.turbo_iters)
                    }
                }
            }
        };
        if tx_bits.len() != rx_bits.len() {
            return Err(Error::mismatch("decoded bits", tx_bits.len(), rx_bits.len()));
        }
        let bit_errors = count_errors(&tx_bits, &rx_bits);
        Ok(FrameOutcome {
            bit_errors,
            bits: tx_bits.len(),
            frame_error: bit_errors > 0,
            det_iters,
            turbo_iters,
            channel_digest: paths.digest(),
        })
    }

    /// Trials `trials` at one SNR, in parallel, returned in trial order.
    pub fn run_frames(&self, snr_db: f64, trials: std::ops::Range<u64>) -> Result<Vec<FrameOutcome>> {
        trials.into_par_iter().map(|t| self.run_frame(t, snr_db)).collect()
    }

    /// One SNR point under the frame budget and stopping rule. The rule is
    /// checked between batches, so results do not depend on thread count.
    pub fn run_point(&self, snr_db: f64) -> Result<PointResult> {
        let start = Instant::now();
        let mut acc = PointResult::new(snr_db);
        let total = self.cfg.frames as u64;
        let mut next = 0u64;
        while next < total {
            let end = (next + self.cfg.batch as u64).min(total);
            for f in self.run_frames(snr_db, next..end)? {
                acc.push(&f);
            }
            next = end;
            debug!("snr {snr_db} dB: {} frames, {} frame errors", acc.frames, acc.frame_errors);
            if self.cfg.stop_frame_errors > 0
                && acc.frame_errors >= self.cfg.stop_frame_errors
                && acc.frames >= self.cfg.min_frames
            {
                break;
            }
        }
        if self.cfg.record_time {
            acc.seconds = start.elapsed().as_secs_f64();
        }
        info!(
            "{} snr {snr_db} dB: ber {:.3e} fer {:.3e} over {} frames",
            self.cfg.scheme_label(),
            acc.ber(),
            acc.fer(),
            acc.frames
        );
        Ok(acc)
    }

    /// Every SNR point of the configuration.
    pub fn run(&self) -> Result<Vec<PointResult>> {
        let body = || self.cfg.snr_db.iter().map(|&s| self.run_point(s)).collect();
        if self.cfg.threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.cfg.threads)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
                .install(body)
        } else {
            body()
        }
    }
}
