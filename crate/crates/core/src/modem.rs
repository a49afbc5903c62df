//! OTSM modulation plus OTFS, OFDM and single-carrier baselines.
//!
//! OTSM, OTFS and single carrier share the same structure: every row of the
//! `M x N` grid is taken to the delay-time domain by a unitary row transform
//! and the delay-time matrix is read out column by column. Only the row
//! transform differs:
//!
//! | scheme        | grid -> delay-time | delay-time -> grid |
//! |---------------|--------------------|--------------------|
//! | OTSM          | `W_N`              | `W_N`              |
//! | OTFS          | `F_N^†`            | `F_N`              |
//! | single carrier| identity           | identity           |
//!
//! A frame-level cyclic prefix of `l_max + 1` samples is prepended. OFDM
//! instead uses a per-symbol prefix of `l_max` samples.

use crate::frame::{DelaySequencyGrid, FrameParams};
use crate::transforms::{Dft, Wht};
use crate::{Error, Result, C64};

/// Transmitted frame: `body` is `vec(X̃)`, `cp` the samples sent ahead of it.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrame {
    pub body: Vec<C64>,
    pub cp: Vec<C64>,
}

impl TimeFrame {
    /// Prefixes `body` with a copy of its last `cp_len` samples.
    pub fn with_cyclic_prefix(body: Vec<C64>, cp_len: usize) -> Self {
        let cp = body[body.len() - cp_len.min(body.len())..].to_vec();
        Self { body, cp }
    }

    pub fn energy(&self) -> f64 {
        self.body.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.cp.len() + self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Channel output. `cp` holds what arrived during the prefix interval and
/// is kept for channel estimation; `body` is the CP-stripped frame `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub body: Vec<C64>,
    pub cp: Vec<C64>,
}

impl ReceivedFrame {
    pub fn without_cp(body: Vec<C64>) -> Self {
        Self {
            body,
            cp: Vec::new(),
        }
    }

    /// Block `n` of `M` samples, `r_n`.
    pub fn block(&self, m: usize, n: usize) -> &[C64] {
        &self.body[n * m..(n + 1) * m]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precoder {
    Walsh,
    Fourier,
    Identity,
}

/// OTSM / OTFS / single-carrier modem over a common frame layout.
#[derive(Debug, Clone)]
pub struct DelayTimeModem {
    params: FrameParams,
    precoder: Precoder,
    wht: Option<Wht>,
    dft: Option<Dft>,
}

impl DelayTimeModem {
    pub fn new(params: FrameParams, precoder: Precoder) -> Result<Self> {
        let (wht, dft) = match precoder {
            Precoder::Walsh => (Some(Wht::new(params.n)?), None),
            Precoder::Fourier => (None, Some(Dft::new(params.n)?)),
            Precoder::Identity => (None, None),
        };
        Ok(Self {
            params,
            precoder,
            wht,
            dft,
        })
    }

    pub fn otsm(params: FrameParams) -> Result<Self> {
        Self::new(params, Precoder::Walsh)
    }

    pub fn otfs(params: FrameParams) -> Result<Self> {
        Self::new(params, Precoder::Fourier)
    }

    pub fn single_carrier(params: FrameParams) -> Result<Self> {
        Self::new(params, Precoder::Identity)
    }

    pub fn params(&self) -> &FrameParams {
        &self.params
    }

    pub fn precoder(&self) -> Precoder {
        self.precoder
    }

    /// Row-major `X` -> row-major `X̃`, in place.
    pub fn rows_to_delay_time(&self, rows: &mut [C64]) {
        match self.precoder {
            Precoder::Walsh => self.wht.as_ref().unwrap().apply_rows(rows),
            Precoder::Fourier => self.dft.as_ref().unwrap().inverse(rows),
            Precoder::Identity => {}
        }
    }

    /// Row-major `Ỹ` -> row-major `Y`, in place.
    pub fn rows_from_delay_time(&self, rows: &mut [C64]) {
        match self.precoder {
            Precoder::Walsh => self.wht.as_ref().unwrap().apply_rows(rows),
            Precoder::Fourier => self.dft.as_ref().unwrap().forward(rows),
            Precoder::Identity => {}
        }
    }

    /// `vec(X̃)` without the prefix.
    pub fn grid_to_time(&self, grid: &DelaySequencyGrid) -> Result<Vec<C64>> {
        let (m, n) = (self.params.m, self.params.n);
        if grid.rows() != m || grid.cols() != n {
            return Err(Error::mismatch("grid size", m * n, grid.rows() * grid.cols()));
        }
        let mut rows = grid.as_slice().to_vec();
        self.rows_to_delay_time(&mut rows);
        Ok(transpose(&rows, m, n))
    }

    /// Folds `r` column-wise into `Ỹ` and transforms the rows.
    pub fn time_to_grid(&self, body: &[C64]) -> Result<DelaySequencyGrid> {
        let (m, n) = (self.params.m, self.params.n);
        if body.len() != m * n {
            return Err(Error::mismatch("received frame", m * n, body.len()));
        }
        let mut rows = transpose(body, n, m);
        self.rows_from_delay_time(&mut rows);
        DelaySequencyGrid::from_row_major(m, n, rows)
    }

    pub fn modulate(&self, grid: &DelaySequencyGrid) -> Result<TimeFrame> {
        Ok(TimeFrame::with_cyclic_prefix(
            self.grid_to_time(grid)?,
            self.params.cp_len,
        ))
    }

    pub fn demodulate(&self, rx: &ReceivedFrame) -> Result<DelaySequencyGrid> {
        self.time_to_grid(&rx.body)
    }

    /// Delay-time pilot vector `x̃_{m_p}(n)`, `n = 0..N`.
    pub fn pilot_delay_time(&self, pilot_amplitude: f64) -> Vec<C64> {
        let mut row = vec![C64::default(); self.params.n];
        row[self.params.n_p] = C64::new(pilot_amplitude, 0.0);
        self.rows_to_delay_time(&mut row);
        row
    }
}

/// Row-major `rows x cols` -> row-major `cols x rows`.
fn transpose(data: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![C64::default(); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

pub fn otsm_modulate(params: &FrameParams, grid: &DelaySequencyGrid) -> Result<TimeFrame> {
    DelayTimeModem::otsm(*params)?.modulate(grid)
}

pub fn otsm_demodulate(params: &FrameParams, rx: &ReceivedFrame) -> Result<DelaySequencyGrid> {
    DelayTimeModem::otsm(*params)?.demodulate(rx)
}

pub fn otfs_modulate(params: &FrameParams, grid: &DelaySequencyGrid) -> Result<TimeFrame> {
    DelayTimeModem::otfs(*params)?.modulate(grid)
}

pub fn otfs_demodulate(params: &FrameParams, rx: &ReceivedFrame) -> Result<DelaySequencyGrid> {
    DelayTimeModem::otfs(*params)?.demodulate(rx)
}

pub fn sc_modulate(params: &FrameParams, grid: &DelaySequencyGrid) -> Result<TimeFrame> {
    DelayTimeModem::single_carrier(*params)?.modulate(grid)
}

pub fn sc_demodulate(params: &FrameParams, rx: &ReceivedFrame) -> Result<DelaySequencyGrid> {
    DelayTimeModem::single_carrier(*params)?.demodulate(rx)
}

/// CP-OFDM with `N` symbols of `M` subcarriers and a per-symbol prefix of
/// `l_max` samples. Grid row `m` is subcarrier `m`, column `n` is symbol `n`.
#[derive(Debug, Clone)]
pub struct OfdmModem {
    params: FrameParams,
    cp_len: usize,
    dft: Dft,
}

impl OfdmModem {
    pub fn new(params: FrameParams) -> Result<Self> {
        Ok(Self {
            params,
            cp_len: params.l_max,
            dft: Dft::new(params.m)?,
        })
    }

    pub fn params(&self) -> &FrameParams {
        &self.params
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn symbol_len(&self) -> usize {
        self.params.m + self.cp_len
    }

    pub fn frame_len(&self) -> usize {
        self.params.n * self.symbol_len()
    }

    /// Subcarrier symbols of OFDM symbol `n` are column `n` of the grid.
    pub fn modulate(&self, grid: &DelaySequencyGrid) -> Result<TimeFrame> {
        let (m, n) = (self.params.m, self.params.n);
        if grid.rows() != m || grid.cols() != n {
            return Err(Error::mismatch("OFDM grid", m * n, grid.rows() * grid.cols()));
        }
        let mut cols = transpose(grid.as_slice(), m, n);
        self.dft.inverse(&mut cols);
        let mut body = Vec::with_capacity(self.frame_len());
        for sym in cols.chunks_exact(m) {
            body.extend_from_slice(&sym[m - self.cp_len..]);
            body.extend_from_slice(sym);
        }
        Ok(TimeFrame {
            body,
            cp: Vec::new(),
        })
    }

    /// Strips each prefix and returns the per-subcarrier observations.
    pub fn demodulate(&self, rx: &ReceivedFrame) -> Result<DelaySequencyGrid> {
        let (m, n) = (self.params.m, self.params.n);
        if rx.body.len() != self.frame_len() {
            return Err(Error::mismatch("OFDM frame", self.frame_len(), rx.body.len()));
        }
        let mut cols: Vec<C64> = rx
            .body
            .chunks_exact(self.symbol_len())
            .flat_map(|sym| sym[self.cp_len..].iter().copied())
            .collect();
        self.dft.forward(&mut cols);
        DelaySequencyGrid::from_row_major(m, n, transpose(&cols, n, m))
    }
}

pub fn ofdm_modulate(params: &FrameParams, grid: &DelaySequencyGrid) -> Result<TimeFrame> {
    OfdmModem::new(*params)?.modulate(grid)
}

pub fn ofdm_demodulate(params: &FrameParams, rx: &ReceivedFrame) -> Result<DelaySequencyGrid> {
    OfdmModem::new(*params)?.demodulate(rx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{perfect_shuffle, FourierMatrix, WalshMatrix};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DelaySequencyGrid {
        let data = (0..m * n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        DelaySequencyGrid::from_row_major(m, n, data).unwrap()
    }

    fn max_err(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn rx_of(tx: &TimeFrame) -> ReceivedFrame {
        ReceivedFrame {
            body: tx.body.clone(),
            cp: tx.cp.clone(),
        }
    }

    fn complex(m: DMatrix<f64>) -> DMatrix<C64> {
        m.map(|v| C64::new(v, 0.0))
    }

    #[test]
    fn zero_grid_gives_zero_frame() {
        let p = FrameParams::new(8, 16, 1).unwrap();
        let tx = otsm_modulate(&p, &DelaySequencyGrid::zeros(16, 8)).unwrap();
        assert!(tx.body.iter().chain(&tx.cp).all(|v| *v == C64::default()));
        assert_eq!(tx.cp.len(), 2);
        let g = otsm_demodulate(&p, &ReceivedFrame::without_cp(vec![C64::default(); 128])).unwrap();
        assert_eq!(g.energy(), 0.0);
    }

    #[test]
    fn single_symbol_spreads_over_blocks() {
        let p = FrameParams::new(8, 5, 1).unwrap();
        let mut g = DelaySequencyGrid::zeros(5, 8);
        g.set(0, 0, C64::new(1.0, 0.0));
        let tx = otsm_modulate(&p, &g).unwrap();
        let v = 1.0 / 8f64.sqrt();
        for (q, s) in tx.body.iter().enumerate() {
            let want = if q % 5 == 0 { v } else { 0.0 };
            assert!((s - C64::new(want, 0.0)).norm() < 1e-15, "q={q}");
        }
    }

    #[test]
    fn otsm_matches_dense_transmitter_and_receiver() {
        let (m, n) = (3, 4);
        // M = 3 is too small for a valid frame layout; build params by hand
        let mut p = FrameParams::new(4, 8, 0).unwrap();
        p.m = m;
        p.m_p = m - 1;
        let modem = DelayTimeModem::otsm(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = random_grid(&mut rng, m, n);
        let w = complex(WalshMatrix::new(n).unwrap().to_matrix());
        let pm = complex(perfect_shuffle(m, n).to_matrix());
        let kron = DMatrix::<C64>::identity(m, m).kronecker(&w);
        let x = DVector::from_column_slice(g.as_slice());
        let s = &pm * &kron * &x;
        let tx = modem.modulate(&g).unwrap();
        assert!(max_err(&tx.body, s.as_slice()) < 1e-12);

        let r: Vec<C64> = (0..m * n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let y = &kron * (pm.transpose() * DVector::from_column_slice(&r));
        let got = modem.demodulate(&ReceivedFrame::without_cp(r)).unwrap();
        assert!(max_err(got.as_slice(), y.as_slice()) < 1e-12);
    }

    #[test]
    fn loopback_identity_for_all_modems() {
        let p = FrameParams::new(8, 16, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let g = random_grid(&mut rng, 16, 8);
        for modem in [
            DelayTimeModem::otsm(p).unwrap(),
            DelayTimeModem::otfs(p).unwrap(),
            DelayTimeModem::single_carrier(p).unwrap(),
        ] {
            let tx = modem.modulate(&g).unwrap();
            assert!((tx.energy() - g.energy()).abs() < 1e-10);
            assert_eq!(tx.cp, tx.body[tx.body.len() - 3..].to_vec());
            let back = modem.demodulate(&rx_of(&tx)).unwrap();
            assert!(max_err(back.as_slice(), g.as_slice()) < 1e-12);
        }
        let ofdm = OfdmModem::new(p).unwrap();
        let tx = ofdm.modulate(&g).unwrap();
        assert_eq!(tx.body.len(), 8 * 18);
        let back = ofdm.demodulate(&rx_of(&tx)).unwrap();
        assert!(max_err(back.as_slice(), g.as_slice()) < 1e-12);
    }

    #[test]
    fn wrong_lengths_are_rejected() {
        let p = FrameParams::new(8, 16, 2).unwrap();
        let modem = DelayTimeModem::otsm(p).unwrap();
        assert!(modem.modulate(&DelaySequencyGrid::zeros(4, 8)).is_err());
        assert!(modem
            .demodulate(&ReceivedFrame::without_cp(vec![C64::default(); 5]))
            .is_err());
        let ofdm = OfdmModem::new(p).unwrap();
        assert!(ofdm
            .demodulate(&ReceivedFrame::without_cp(vec![C64::default(); 128]))
            .is_err());
    }

    #[test]
    fn otfs_otsm_domain_relation() {
        // x_otsm_m = W F^† x_otfs_m gives the same time frame
        let p = FrameParams::new(8, 8, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g_otfs = random_grid(&mut rng, 8, 8);
        let w = complex(WalshMatrix::new(8).unwrap().to_matrix());
        let f = FourierMatrix::new(8).unwrap().to_matrix();
        let precode = &w * f.adjoint();
        let rows: Vec<C64> = (0..8)
            .flat_map(|m| {
                let xm = DVector::from_column_slice(g_otfs.row(m));
                (&precode * xm).iter().copied().collect::<Vec<_>>()
            })
            .collect();
        let g_otsm = DelaySequencyGrid::from_row_major(8, 8, rows).unwrap();
        let a = otsm_modulate(&p, &g_otsm).unwrap();
        let b = otfs_modulate(&p, &g_otfs).unwrap();
        assert!(max_err(&a.body, &b.body) < 1e-10);
    }

    #[test]
    fn otfs_single_doppler_bin_is_complex_exponential() {
        let p = FrameParams::new(8, 8, 1).unwrap();
        let mut g = DelaySequencyGrid::zeros(8, 8);
        g.set(0, 3, C64::new(1.0, 0.0));
        let tx = otfs_modulate(&p, &g).unwrap();
        for n in 0..8 {
            let want = C64::from_polar(1.0 / 8f64.sqrt(), 2.0 * std::f64::consts::PI * 3.0 * n as f64 / 8.0);
            assert!((tx.body[n * 8] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn ofdm_single_subcarrier_and_parseval() {
        let p = FrameParams::new(4, 16, 2).unwrap();
        let ofdm = OfdmModem::new(p).unwrap();
        let mut g = DelaySequencyGrid::zeros(16, 4);
        g.set(5, 1, C64::new(1.0, 0.0));
        let tx = ofdm.modulate(&g).unwrap();
        let sym = &tx.body[ofdm.symbol_len()..2 * ofdm.symbol_len()];
        for (t, v) in sym.iter().enumerate() {
            let k = t as f64 - ofdm.cp_len() as f64;
            let want = C64::from_polar(0.25, 2.0 * std::f64::consts::PI * 5.0 * k / 16.0);
            assert!((v - want).norm() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let g = random_grid(&mut rng, 16, 4);
        let tx = ofdm.modulate(&g).unwrap();
        let no_cp: f64 = tx
            .body
            .chunks_exact(ofdm.symbol_len())
            .flat_map(|s| s[ofdm.cp_len()..].iter())
            .map(|v| v.norm_sqr())
            .sum();
        assert!((no_cp - g.energy()).abs() < 1e-10);
    }

    #[test]
    fn sc_equals_otsm_for_single_block() {
        let p = FrameParams::new(1, 8, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let g = random_grid(&mut rng, 8, 1);
        assert_eq!(sc_modulate(&p, &g).unwrap(), otsm_modulate(&p, &g).unwrap());
        let tx = sc_modulate(&p, &g).unwrap();
        assert!((tx.energy() - g.energy()).abs() < 1e-12);
        assert_eq!(sc_demodulate(&p, &rx_of(&tx)).unwrap(), g);
    }

    proptest! {
        #[test]
        fn modulation_preserves_energy(seed in any::<u64>(), pre in 0usize..3) {
            let p = FrameParams::new(16, 12, 1).unwrap();
            let modem = DelayTimeModem::new(p, [Precoder::Walsh, Precoder::Fourier, Precoder::Identity][pre]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_grid(&mut rng, 12, 16);
            let tx = modem.modulate(&g).unwrap();
            prop_assert!((tx.energy() - g.energy()).abs() < 1e-9);
        }
    }
}
