//! Time-varying multipath channels.
//!
//! A realization is a short list of paths `(g_i, ℓ_i, κ_i)` with delay in
//! samples and Doppler in cycles per frame. It is sampled into delay-time
//! taps
//!
//! ```text
//! g_s[l, q] = Σ_i g_i · z^{κ_i (q - l)} · sinc(l - ℓ_i),   z = exp(j2π / NM)
//! ```
//!
//! (or with the sinc replaced by a Kronecker delta at the rounded delay)
//! and applied as `r[q] = Σ_l g_s[l, q] s[q - l] + w[q]`.
//!
//! Besides the fast sample-domain path, this module materializes the
//! per-block matrices `G_n`, the dense time-domain matrix `G`, the dense
//! delay-sequency matrix `H` and the per-tap spread matrices. The dense
//! forms exist to cross-check the fast path at small sizes.

use std::f64::consts::PI;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::frame::{FrameParams, SPEED_OF_LIGHT};
use crate::modem::{ReceivedFrame, TimeFrame};
use crate::transforms::{perfect_shuffle, FourierMatrix, WalshMatrix};
use crate::{Error, Result, C64};

/// Largest `N·M` accepted by the dense builders.
pub const DENSE_LIMIT: usize = 4096;

/// 3GPP Extended Vehicular A excess tap delays, ns.
pub const EVA_DELAYS_NS: [f64; 9] = [0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0];
/// 3GPP Extended Vehicular A relative tap powers, dB.
pub const EVA_POWERS_DB: [f64; 9] = [0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: C64,
    /// Normalized delay `ℓ_i = τ_i M Δf`, in samples.
    pub delay: f64,
    /// Normalized Doppler `κ_i = ν_i N T`, in cycles per frame.
    pub doppler: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Self {
        Self { paths }
    }

    pub fn single(gain: C64, delay: f64, doppler: f64) -> Self {
        Self::new(vec![Path {
            gain,
            delay,
            doppler,
        }])
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn max_delay(&self) -> f64 {
        self.paths.iter().map(|p| p.delay).fold(0.0, f64::max)
    }

    pub fn max_doppler(&self) -> f64 {
        self.paths.iter().map(|p| p.doppler.abs()).fold(0.0, f64::max)
    }

    pub fn power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    /// FNV-1a over the bit patterns of every path parameter.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for p in &self.paths {
            for v in [p.gain.re, p.gain.im, p.delay, p.doppler] {
                for b in v.to_bits().to_le_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// Power-delay profile used to draw realizations.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerDelayProfile {
    Eva,
    /// `(delay_ns, power_db)` pairs.
    Custom(Vec<(f64, f64)>),
}

impl PowerDelayProfile {
    pub fn taps(&self) -> Vec<(f64, f64)> {
        match self {
            PowerDelayProfile::Eva => EVA_DELAYS_NS.into_iter().zip(EVA_POWERS_DB).collect(),
            PowerDelayProfile::Custom(t) => t.clone(),
        }
    }

    pub fn max_delay_ns(&self) -> f64 {
        self.taps().iter().map(|t| t.0).fold(0.0, f64::max)
    }

    /// Linear powers normalized to unit sum.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.taps().iter().map(|t| 10f64.powf(t.1 / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Smallest `l_max` holding every tap at bandwidth `M Δf`.
    pub fn min_l_max(&self, params: &FrameParams) -> usize {
        (self.max_delay_ns() * 1e-9 * params.bandwidth() - 1e-9).ceil().max(0.0) as usize
    }

    /// `"EVA"` or a comma-separated list of `delay_ns:power_db` pairs.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("eva") {
            return Ok(PowerDelayProfile::Eva);
        }
        let mut taps = Vec::new();
        for item in t.split(',').filter(|s| !s.trim().is_empty()) {
            let (d, p) = item
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("profile entry `{item}` is not delay_ns:power_db")))?;
            let d: f64 = d.trim().parse().map_err(|_| Error::invalid(format!("bad delay `{d}`")))?;
            let p: f64 = p.trim().parse().map_err(|_| Error::invalid(format!("bad power `{p}`")))?;
            if !(d >= 0.0) {
                return Err(Error::invalid(format!("negative delay {d} ns")));
            }
            taps.push((d, p));
        }
        if taps.is_empty() {
            return Err(Error::invalid("empty power-delay profile"));
        }
        Ok(PowerDelayProfile::Custom(taps))
    }
}

impl std::fmt::Display for PowerDelayProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PowerDelayProfile::Eva => write!(f, "EVA"),
            PowerDelayProfile::Custom(t) => {
                let items: Vec<String> = t.iter().map(|(d, p)| format!("{d}:{p}")).collect();
                write!(f, "{}", items.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopplerSpectrum {
    /// `ν_i ~ U(0, ν_max)`.
    OneSided,
    /// `ν_i ~ U(-ν_max, ν_max)`.
    Symmetric,
}

/// `ν_max = v f_c / c` in Hz.
pub fn max_doppler_hz(params: &FrameParams, speed_kmh: f64) -> f64 {
    speed_kmh / 3.6 * params.carrier_hz / SPEED_OF_LIGHT
}

/// Draws one realization: Rayleigh gain per profile tap, Doppler per `spectrum`.
pub fn sample_paths<R: Rng + ?Sized>(
    params: &FrameParams,
    profile: &PowerDelayProfile,
    speed_kmh: f64,
    spectrum: DopplerSpectrum,
    rng: &mut R,
) -> Result<PathSet> {
    if !(speed_kmh >= 0.0) {
        return Err(Error::invalid(format!("speed {speed_kmh} km/h must be non-negative")));
    }
    let nu_max = max_doppler_hz(params, speed_kmh);
    let fs = params.bandwidth();
    let kappa_per_hz = params.frame_duration();
    let tau_max = profile.max_delay_ns() * 1e-9;
    if tau_max * nu_max > 1e-2 {
        warn!("channel is not under-spread: τ_max ν_max = {:.3e}", tau_max * nu_max);
    }
    let paths = profile
        .taps()
        .iter()
        .zip(profile.normalized_powers())
        .map(|(&(delay_ns, _), power)| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();
            let nu = match spectrum {
                DopplerSpectrum::OneSided => nu_max * u,
                DopplerSpectrum::Symmetric => nu_max * (2.0 * u - 1.0),
            };
            Path {
                gain: C64::new(re, im) * (power / 2.0).sqrt(),
                delay: delay_ns * 1e-9 * fs,
                doppler: nu * kappa_per_hz,
            }
        })
        .collect();
    Ok(PathSet { paths })
}

/// EVA realization with one-sided uniform Doppler, reproducible from `seed`.
pub fn sample_eva(params: &FrameParams, speed_kmh: f64, seed: u64) -> Result<PathSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_paths(
        params,
        &PowerDelayProfile::Eva,
        speed_kmh,
        DopplerSpectrum::OneSided,
        &mut rng,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscretizeMode {
    /// Path delays rounded to the nearest sample.
    RoundDelay,
    /// Fractional delays reconstructed with a sinc over taps `0..=l_max`.
    Sinc,
}

/// Sampled taps `g_s[l, q]` for `l = 0..L` and `q` in `[start, start + len)`.
///
/// `q` may be negative: the frame-level prefix occupies `q = -cp_len..0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTimeTaps {
    num_taps: usize,
    start: isize,
    len: usize,
    values: Vec<C64>,
}

impl DelayTimeTaps {
    pub fn zeros(num_taps: usize, start: isize, len: usize) -> Self {
        Self {
            num_taps,
            start,
            len,
            values: vec![C64::default(); num_taps * len],
        }
    }

    /// Span `[-cp_len, N M)` with `l_max + 1` taps.
    pub fn zeros_for(params: &FrameParams) -> Self {
        Self::zeros(
            params.l_max + 1,
            -(params.cp_len as isize),
            params.cp_len + params.frame_len(),
        )
    }

    pub fn num_taps(&self) -> usize {
        self.num_taps
    }

    pub fn start(&self) -> isize {
        self.start
    }

    pub fn end(&self) -> isize {
        self.start + self.len as isize
    }

    pub fn covers(&self, start: isize, end: isize) -> bool {
        self.start <= start && end <= self.end()
    }

    fn index(&self, l: usize, q: isize) -> usize {
        debug_assert!(l < self.num_taps && q >= self.start && q < self.end());
        l * self.len + (q - self.start) as usize
    }

    pub fn get(&self, l: usize, q: isize) -> C64 {
        self.values[self.index(l, q)]
    }

    pub fn set(&mut self, l: usize, q: isize, v: C64) {
        let i = self.index(l, q);
        self.values[i] = v;
    }

    /// Tap `l` over the whole span.
    pub fn row(&self, l: usize) -> &[C64] {
        &self.values[l * self.len..(l + 1) * self.len]
    }

    pub fn row_mut(&mut self, l: usize) -> &mut [C64] {
        &mut self.values[l * self.len..(l + 1) * self.len]
    }

    /// Delay taps with at least one nonzero coefficient.
    pub fn tap_set(&self) -> Vec<usize> {
        (0..self.num_taps)
            .filter(|&l| self.row(l).iter().any(|v| *v != C64::default()))
            .collect()
    }

    /// `Σ |g_s[l, q]|²` over `q` in `[start, end)`.
    pub fn energy(&self, start: isize, end: isize) -> f64 {
        (0..self.num_taps)
            .map(|l| (start..end).map(|q| self.get(l, q).norm_sqr()).sum::<f64>())
            .sum()
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Taps over the default span `[-cp_len, N M)`.
pub fn discretize(paths: &PathSet, params: &FrameParams, mode: DiscretizeMode) -> Result<DelayTimeTaps> {
    discretize_span(
        paths,
        params,
        mode,
        -(params.cp_len as isize),
        params.cp_len + params.frame_len(),
    )
}

/// Taps over an arbitrary sample span; used for frames whose length differs
/// from `N M` (OFDM). The Doppler phase is referenced to `N M` samples.
pub fn discretize_span(
    paths: &PathSet,
    params: &FrameParams,
    mode: DiscretizeMode,
    start: isize,
    len: usize,
) -> Result<DelayTimeTaps> {
    let l_max = params.l_max;
    for p in &paths.paths {
        let d = match mode {
            DiscretizeMode::RoundDelay => p.delay.round(),
            DiscretizeMode::Sinc => p.delay,
        };
        if !(p.delay >= 0.0) || d > l_max as f64 {
            return Err(Error::invalid(format!(
                "path delay {:.3} samples exceeds l_max = {l_max}",
                p.delay
            )));
        }
    }
    let nm = params.frame_len() as f64;
    let mut taps = DelayTimeTaps::zeros(l_max + 1, start, len);
    for p in &paths.paths {
        let weights: Vec<(usize, f64)> = match mode {
            DiscretizeMode::RoundDelay => vec![(p.delay.round() as usize, 1.0)],
            DiscretizeMode::Sinc => (0..=l_max).map(|l| (l, sinc(l as f64 - p.delay))).collect(),
        };
        let step = 2.0 * PI * p.doppler / nm;
        for (l, w) in weights {
            let amp = p.gain * w;
            let row = taps.row_mut(l);
            for (i, v) in row.iter_mut().enumerate() {
                let q = start + i as isize;
                *v += amp * C64::from_polar(1.0, step * (q - l as isize) as f64);
            }
        }
    }
    Ok(taps)
}

/// Noiseless channel output, `r[q] = Σ_l g_s[l, q] s[q - l]`.
pub fn apply_noiseless(taps: &DelayTimeTaps, tx: &TimeFrame) -> Result<ReceivedFrame> {
    let cp = tx.cp.len() as isize;
    let body = tx.body.len() as isize;
    if !taps.covers(-cp, body) {
        return Err(Error::invalid(format!(
            "taps cover [{}, {}) but the frame spans [{}, {})",
            taps.start(),
            taps.end(),
            -cp,
            body
        )));
    }
    let sample = |q: isize| -> C64 {
        if q >= 0 {
            tx.body[q as usize]
        } else if q >= -cp {
            tx.cp[(cp + q) as usize]
        } else {
            C64::default()
        }
    };
    let out: Vec<C64> = (-cp..body)
        .map(|q| {
            (0..taps.num_taps())
                .map(|l| taps.get(l, q) * sample(q - l as isize))
                .sum()
        })
        .collect();
    let (rx_cp, rx_body) = out.split_at(cp as usize);
    Ok(ReceivedFrame {
        body: rx_body.to_vec(),
        cp: rx_cp.to_vec(),
    })
}

/// Adds `CN(0, noise_var)` samples to every received sample, prefix first.
pub fn add_noise<R: Rng + ?Sized>(rx: &mut ReceivedFrame, noise_var: f64, rng: &mut R) {
    if noise_var <= 0.0 {
        return;
    }
    let sd = (noise_var / 2.0).sqrt();
    for v in rx.cp.iter_mut().chain(rx.body.iter_mut()) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += C64::new(re, im) * sd;
    }
}

pub fn apply_with_rng<R: Rng + ?Sized>(
    taps: &DelayTimeTaps,
    tx: &TimeFrame,
    noise_var: f64,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    let mut rx = apply_noiseless(taps, tx)?;
    add_noise(&mut rx, noise_var, rng);
    Ok(rx)
}

/// Channel plus AWGN of total variance `noise_var`, reproducible from `seed`.
pub fn apply(taps: &DelayTimeTaps, tx: &TimeFrame, noise_var: f64, seed: u64) -> Result<ReceivedFrame> {
    apply_with_rng(taps, tx, noise_var, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Per-block lower-banded matrices `G_n`, `G_n(m, m - l) = g_s[l, m + nM]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockChannel {
    m: usize,
    n: usize,
    width: usize,
    coeffs: Vec<C64>,
}

impl BlockChannel {
    pub fn block_len(&self) -> usize {
        self.m
    }

    pub fn num_blocks(&self) -> usize {
        self.n
    }

    /// `l_max + 1`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// `G_n(row, row - l)`; zero when `l > row`.
    pub fn band(&self, n: usize, row: usize, l: usize) -> C64 {
        self.coeffs[(n * self.m + row) * self.width + l]
    }

    pub fn entry(&self, n: usize, row: usize, col: usize) -> C64 {
        if col > row || row - col >= self.width {
            C64::default()
        } else {
            self.band(n, row, row - col)
        }
    }

    /// `[G_0 s_0; ...; G_{N-1} s_{N-1}]`.
    pub fn apply(&self, s: &[C64]) -> Result<Vec<C64>> {
        if s.len() != self.m * self.n {
            return Err(Error::mismatch("block channel input", self.m * self.n, s.len()));
        }
        let mut out = vec![C64::default(); s.len()];
        for n in 0..self.n {
            let base = n * self.m;
            for row in 0..self.m {
                out[base + row] = (0..self.width.min(row + 1))
                    .map(|l| self.band(n, row, l) * s[base + row - l])
                    .sum();
            }
        }
        Ok(out)
    }

    pub fn block_dense(&self, n: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.m, self.m, |r, c| self.entry(n, r, c))
    }
}

/// Splits the channel into independent blocks; needs the ZP to cover the delay spread.
pub fn build_block_channel(taps: &DelayTimeTaps, params: &FrameParams) -> Result<BlockChannel> {
    if params.l_zp < params.l_max {
        return Err(Error::Precondition(format!(
            "ZP length {} shorter than l_max = {}: blocks interfere",
            params.l_zp, params.l_max
        )));
    }
    if taps.num_taps() > params.l_max + 1 {
        return Err(Error::Precondition(format!(
            "{} taps exceed l_max + 1 = {}",
            taps.num_taps(),
            params.l_max + 1
        )));
    }
    let (m, n) = (params.m, params.n);
    if !taps.covers(0, (m * n) as isize) {
        return Err(Error::Precondition("taps do not cover the frame body".into()));
    }
    let width = params.l_max + 1;
    let mut coeffs = vec![C64::default(); m * n * width];
    for b in 0..n {
        for row in 0..m {
            let q = (row + b * m) as isize;
            for l in 0..taps.num_taps().min(row + 1) {
                coeffs[(b * m + row) * width + l] = taps.get(l, q);
            }
        }
    }
    Ok(BlockChannel {
        m,
        n,
        width,
        coeffs,
    })
}

fn dense_guard(params: &FrameParams) -> Result<()> {
    let nm = params.frame_len();
    if nm > DENSE_LIMIT {
        return Err(Error::invalid(format!(
            "dense channel matrix of order {nm} exceeds the limit {DENSE_LIMIT}"
        )));
    }
    Ok(())
}

/// Dense `N M x N M` time-domain matrix `G` with the cyclic prefix folded in:
/// `G(q, [q - l]_{NM}) += g_s[l, q]`.
pub fn build_dense_time_matrix(taps: &DelayTimeTaps, params: &FrameParams) -> Result<DMatrix<C64>> {
    dense_guard(params)?;
    let nm = params.frame_len();
    if params.cp_len < taps.num_taps().saturating_sub(1) {
        return Err(Error::Precondition("prefix shorter than the delay spread".into()));
    }
    let mut g = DMatrix::zeros(nm, nm);
    for q in 0..nm {
        for l in 0..taps.num_taps() {
            g[(q, (q + nm - l) % nm)] += taps.get(l, q as isize);
        }
    }
    Ok(g)
}

/// Dense delay-sequency matrix `H = (I_M ⊗ W_N)(Pᵀ G P)(I_M ⊗ W_N)`.
pub fn build_delay_sequency_matrix(taps: &DelayTimeTaps, params: &FrameParams) -> Result<DMatrix<C64>> {
    let g = build_dense_time_matrix(taps, params)?;
    let (m, n) = (params.m, params.n);
    let w = WalshMatrix::new(n)?.to_matrix().map(|v| C64::new(v, 0.0));
    let block = DMatrix::<C64>::identity(m, m).kronecker(&w);
    let p = perfect_shuffle(m, n).to_matrix().map(|v| C64::new(v, 0.0));
    Ok(&block * (p.transpose() * g * p) * &block)
}

/// `N x N` spread matrix and its first column.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadMatrix {
    pub matrix: DMatrix<C64>,
    pub vector: Vec<C64>,
}

/// `g̃_{m,l}(n) = g_s[l, m + nM]`.
pub fn tap_vector(taps: &DelayTimeTaps, m: usize, l: usize, params: &FrameParams) -> Result<Vec<C64>> {
    if m >= params.m || l >= taps.num_taps() {
        return Err(Error::invalid(format!(
            "index (m = {m}, l = {l}) outside M = {} and {} taps",
            params.m,
            taps.num_taps()
        )));
    }
    Ok((0..params.n)
        .map(|n| taps.get(l, (m + n * params.m) as isize))
        .collect())
}

fn spread(g: Vec<C64>, left: &DMatrix<C64>, right: &DMatrix<C64>) -> SpreadMatrix {
    let diag = DMatrix::from_diagonal(&DVector::from_vec(g));
    let matrix = left * diag * right;
    let vector = matrix.column(0).iter().copied().collect();
    SpreadMatrix { matrix, vector }
}

/// Sequency spread `U_{m,l} = W_N G̃_{m,l} W_N`. It couples `x_{m-l}` into
/// `y_m`, and `U_{m,l} x = u_{m,l} ⊠ x` for the first column `u_{m,l}`.
pub fn sequency_spread(taps: &DelayTimeTaps, m: usize, l: usize, params: &FrameParams) -> Result<SpreadMatrix> {
    let g = tap_vector(taps, m, l, params)?;
    let w = WalshMatrix::new(params.n)?.to_matrix().map(|v| C64::new(v, 0.0));
    Ok(spread(g, &w, &w))
}

/// Doppler spread `V_{m,l} = F_N G̃_{m,l} F_N^†`, a circulant matrix with
/// `V_{m,l} x = ν_{m,l} ⊛ x`.
pub fn doppler_spread(taps: &DelayTimeTaps, m: usize, l: usize, params: &FrameParams) -> Result<SpreadMatrix> {
    let g = tap_vector(taps, m, l, params)?;
    let f = FourierMatrix::new(params.n)?.to_matrix();
    Ok(spread(g, &f, &f.adjoint()))
}

/// Received energy of a unit symbol at grid position `(m, n)`,
/// `Σ_l ‖column n of S_{m+l,l}‖²` with `S` the OTSM or OTFS spread matrix.
pub fn symbol_energy(
    taps: &DelayTimeTaps,
    params: &FrameParams,
    m: usize,
    n: usize,
    fourier: bool,
) -> Result<f64> {
    let mut e = 0.0;
    for l in 0..taps.num_taps() {
        if m + l >= params.m {
            break;
        }
        let s = if fourier {
            doppler_spread(taps, m + l, l, params)?
        } else {
            sequency_spread(taps, m + l, l, params)?
        };
        e += s.matrix.column(n).norm_squared();
    }
    Ok(e)
}
