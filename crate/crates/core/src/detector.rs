//! Block-wise detection in the delay-time domain.
//!
//! With a zero-padded frame each received block obeys `r_n = G_n s_n + w_n`
//! on its own. The receiver matched-filters every block, `z_n = G_n^† r_n`,
//! `R_n = G_n^† G_n`, and runs Gauss-Seidel sweeps on `R_n s_n = z_n`. After
//! each sweep the estimate is taken to the delay-sequency domain, sliced,
//! and blended back with relaxation `δ`.
//!
//! Single-tap MMSE equalizers are provided as baselines and initializers.

use log::warn;
use num_complex::Complex;

use crate::channel::{BlockChannel, DelayTimeTaps};
use crate::frame::{DelaySequencyGrid, FrameLayout, QamConstellation};
use crate::modem::{DelayTimeModem, OfdmModem, ReceivedFrame};
use crate::transforms::Dft;
use crate::{Error, Result, C64};

/// Per-block Gram matrices (lower band only) and matched-filter outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedBlocks {
    m: usize,
    n: usize,
    width: usize,
    gram: Vec<C64>,
    z: Vec<C64>,
}

impl MatchedBlocks {
    pub fn block_len(&self) -> usize {
        self.m
    }

    pub fn num_blocks(&self) -> usize {
        self.n
    }

    /// `l_max + 1`; `R_n(i, j) = 0` whenever `|i - j| >= width`.
    pub fn width(&self) -> usize {
        self.width
    }

    fn lower(&self, n: usize, i: usize, k: usize) -> C64 {
        self.gram[(n * self.m + i) * self.width + k]
    }

    /// `R_n(i, j)`.
    pub fn gram(&self, n: usize, i: usize, j: usize) -> C64 {
        if i >= j {
            if i - j < self.width {
                self.lower(n, i, i - j)
            } else {
                C64::default()
            }
        } else if j - i < self.width {
            self.lower(n, j, j - i).conj()
        } else {
            C64::default()
        }
    }

    /// `z_n`.
    pub fn z(&self, n: usize) -> &[C64] {
        &self.z[n * self.m..(n + 1) * self.m]
    }

    pub fn dense_gram(&self, n: usize) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(self.m, self.m, |i, j| self.gram(n, i, j))
    }

    /// `‖z_n - R_n s‖` for a block estimate `s`.
    pub fn residual(&self, n: usize, s: &[C64]) -> f64 {
        let z = self.z(n);
        (0..self.m)
            .map(|i| {
                let lo = i.saturating_sub(self.width - 1);
                let hi = (i + self.width).min(self.m);
                let rs: C64 = (lo..hi).map(|j| self.gram(n, i, j) * s[j]).sum();
                (z[i] - rs).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// One in-place forward-substitution sweep on block `n`:
    /// `s ← (D + L)^{-1} (z - L^† s)`.
    pub fn sweep_block(&self, n: usize, s: &mut [C64], noise_var: f64) -> Result<()> {
        let z = self.z(n);
        for i in 0..self.m {
            let mut acc = z[i];
            for k in 1..self.width.min(i + 1) {
                acc -= self.lower(n, i, k) * s[i - k];
            }
            for k in 1..self.width.min(self.m - i) {
                acc -= self.lower(n, i + k, k).conj() * s[i + k];
            }
            let mut d = self.lower(n, i, 0).re;
            if d <= 0.0 {
                if noise_var <= 0.0 {
                    return Err(Error::DegenerateBlock { block: n, index: i });
                }
                warn!("zero diagonal in block {n} at {i}; regularizing with the noise variance");
                d = noise_var;
            }
            s[i] = acc / d;
        }
        Ok(())
    }

    /// Sweeps every block of a full-frame estimate.
    pub fn sweep(&self, s: &mut [C64], noise_var: f64) -> Result<()> {
        if s.len() != self.m * self.n {
            return Err(Error::mismatch("estimate", self.m * self.n, s.len()));
        }
        for (n, block) in s.chunks_exact_mut(self.m).enumerate() {
            self.sweep_block(n, block, noise_var)?;
        }
        Ok(())
    }
}

/// Banded `R_n = G_n^† G_n` and `z_n = G_n^† r_n` in `O(N M l_max²)`.
pub fn matched_filter(bc: &BlockChannel, rx: &ReceivedFrame) -> Result<MatchedBlocks> {
    let (m, n, width) = (bc.block_len(), bc.num_blocks(), bc.width());
    if rx.body.len() != m * n {
        return Err(Error::mismatch("received frame", m * n, rx.body.len()));
    }
    let mut gram = vec![C64::default(); m * n * width];
    let mut z = vec![C64::default(); m * n];
    for b in 0..n {
        let r = &rx.body[b * m..(b + 1) * m];
        for i in 0..m {
            let last = (i + width - 1).min(m - 1);
            z[b * m + i] = (i..=last).map(|row| bc.band(b, row, row - i).conj() * r[row]).sum();
            for k in 0..width.min(i + 1) {
                let j = i - k;
                // rows hitting both columns i and j
                let top = (j + width - 1).min(m - 1);
                gram[(b * m + i) * width + k] = (i..=top)
                    .map(|row| bc.band(b, row, row - i).conj() * bc.band(b, row, row - j))
                    .sum();
            }
        }
    }
    Ok(MatchedBlocks {
        m,
        n,
        width,
        gram,
        z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initializer {
    Zero,
    MmseSingleTap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub max_iters: usize,
    /// Relaxation `δ` in `(0, 1]`.
    pub relaxation: f64,
    pub initializer: Initializer,
    /// Stop when `‖ŝ^(i) - ŝ^(i-1)‖ < stop_tol ‖ŝ^(i)‖`.
    pub stop_tol: f64,
    /// When false the sweeps run without slicing or blending (plain GS).
    pub hard_decisions: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            max_iters: 15,
            relaxation: 1.0,
            initializer: Initializer::Zero,
            stop_tol: 1e-6,
            hard_decisions: true,
        }
    }
}

impl DetectorConfig {
    /// Defaults with `δ = 1` for 4-QAM and `δ = 0.5` above.
    pub fn for_qam(order: usize) -> Self {
        Self {
            relaxation: if order <= 4 { 1.0 } else { 0.5 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            v.push(format!("relaxation {} outside (0, 1]", self.relaxation));
        }
        if self.max_iters == 0 {
            v.push("max_iters must be at least 1".to_string());
        }
        if !(self.stop_tol >= 0.0) {
            v.push(format!("stop_tol {} must be non-negative", self.stop_tol));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsOutcome {
    /// Sliced grid from the last iteration.
    pub grid: DelaySequencyGrid,
    /// Delay-sequency soft values `C^(i)` before the last slicing step.
    pub soft: DelaySequencyGrid,
    /// Final time-domain estimate `ŝ`.
    pub estimate: Vec<C64>,
    pub iterations: usize,
}

/// Gauss-Seidel detector bound to a modem, frame layout and constellation.
#[derive(Debug, Clone)]
pub struct GsDetector {
    pub modem: DelayTimeModem,
    pub layout: FrameLayout,
    pub qam: QamConstellation,
    pub cfg: DetectorConfig,
}

impl GsDetector {
    pub fn new(
        modem: DelayTimeModem,
        layout: FrameLayout,
        qam: QamConstellation,
        cfg: DetectorConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            modem,
            layout,
            qam,
            cfg,
        })
    }

    /// Runs up to `max_iters` sweep/slice/blend rounds from `init`
    /// (zero when `None`).
    pub fn detect(&self, mb: &MatchedBlocks, noise_var: f64, init: Option<&[C64]>) -> Result<GsOutcome> {
        let len = mb.block_len() * mb.num_blocks();
        let mut s = match init {
            Some(v) if v.len() != len => return Err(Error::mismatch("initial estimate", len, v.len())),
            Some(v) => v.to_vec(),
            None => vec![C64::default(); len],
        };
        let delta = self.cfg.relaxation;
        let mut soft = self.modem.time_to_grid(&s)?;
        let mut grid = self.layout.decide(&soft, &self.qam);
        let mut iterations = 0;
        for _ in 0..self.cfg.max_iters {
            iterations += 1;
            let prev = s.clone();
            mb.sweep(&mut s, noise_var)?;
            soft = self.modem.time_to_grid(&s)?;
            grid = self.layout.decide(&soft, &self.qam);
            if self.cfg.hard_decisions {
                let remod = self.modem.grid_to_time(&grid)?;
                for (v, h) in s.iter_mut().zip(&remod) {
                    *v = *v * (1.0 - delta) + h * delta;
                }
            }
            let change: f64 = s.iter().zip(&prev).map(|(a, b)| (a - b).norm_sqr()).sum();
            let norm: f64 = s.iter().map(|v| v.norm_sqr()).sum();
            if change.sqrt() <= self.cfg.stop_tol * norm.sqrt() {
                break;
            }
        }
        Ok(GsOutcome {
            grid,
            soft,
            estimate: s,
            iterations,
        })
    }
}

/// `x̂ = conj(h) y / (|h|² + σ²/E_s)` per bin; bins with a zero denominator give 0.
pub fn single_tap_mmse(y: &[C64], h: &[C64], noise_var: f64, symbol_energy: f64) -> Result<Vec<C64>> {
    if y.len() != h.len() {
        return Err(Error::mismatch("channel gains", y.len(), h.len()));
    }
    let reg = if symbol_energy > 0.0 { noise_var / symbol_energy } else { 0.0 };
    Ok(y.iter()
        .zip(h)
        .map(|(y, h)| {
            let den = h.norm_sqr() + reg;
            if den > 0.0 {
                h.conj() * y / den
            } else {
                C64::default()
            }
        })
        .collect())
}

/// Unnormalized frequency response `H[k] = Σ_l h[l] e^{-j2πkl/M}`.
fn frequency_response(h: &[C64], m: usize) -> Vec<C64> {
    (0..m)
        .map(|k| {
            h.iter()
                .enumerate()
                .map(|(l, v)| v * Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * l) as f64 / m as f64))
                .sum()
        })
        .collect()
}

/// Per-block single-tap MMSE for the zero-padded delay-time modems.
///
/// The taps of block `n` are averaged over the block, which turns `G_n`
/// into a time-invariant convolution. The ZP tail makes that convolution
/// circular, so each block is equalized with one tap per DFT bin. Returns
/// the time-domain estimate `ŝ`.
pub fn block_single_tap(bc: &BlockChannel, rx: &ReceivedFrame, noise_var: f64) -> Result<Vec<C64>> {
    let (m, n, width) = (bc.block_len(), bc.num_blocks(), bc.width());
    if rx.body.len() != m * n {
        return Err(Error::mismatch("received frame", m * n, rx.body.len()));
    }
    let dft = Dft::new(m)?;
    let mut out = rx.body.clone();
    for (b, block) in out.chunks_exact_mut(m).enumerate() {
        let taps: Vec<C64> = (0..width)
            .map(|l| {
                let rows = l..m;
                let count = rows.len().max(1) as f64;
                rows.map(|row| bc.band(b, row, l)).sum::<C64>() / count
            })
            .collect();
        let h = frequency_response(&taps, m);
        dft.forward(block);
        // the unitary DFT leaves H[k] unscaled: F(h ⊛ s) = H ∘ F s
        let eq = single_tap_mmse(block, &h, noise_var, 1.0)?;
        block.copy_from_slice(&eq);
        dft.inverse(block);
    }
    Ok(out)
}

/// Single-tap MMSE for CP-OFDM; taps are averaged over each OFDM symbol.
/// `taps` must span the OFDM frame body. Returns soft subcarrier symbols.
pub fn ofdm_single_tap(
    modem: &OfdmModem,
    taps: &DelayTimeTaps,
    rx: &ReceivedFrame,
    noise_var: f64,
) -> Result<DelaySequencyGrid> {
    let p = modem.params();
    let (m, n) = (p.m, p.n);
    if !taps.covers(0, modem.frame_len() as isize) {
        return Err(Error::Precondition("taps do not span the OFDM frame".into()));
    }
    let y = modem.demodulate(rx)?;
    let mut out = DelaySequencyGrid::zeros(m, n);
    for sym in 0..n {
        let start = (sym * modem.symbol_len() + modem.cp_len()) as isize;
        let avg: Vec<C64> = (0..taps.num_taps())
            .map(|l| (start..start + m as isize).map(|q| taps.get(l, q)).sum::<C64>() / m as f64)
            .collect();
        let h = frequency_response(&avg, m);
        let col: Vec<C64> = (0..m).map(|k| y.get(k, sym)).collect();
        for (k, v) in single_tap_mmse(&col, &h, noise_var, 1.0)?.into_iter().enumerate() {
            out.set(k, sym, v);
        }
    }
    Ok(out)
}
