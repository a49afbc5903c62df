//! Frame constants, delay-sequency grid layout and QAM mapping.
//!
//! Grid layout for `M = 9`, `N = 8`, `l_max = 1` (so `l_zp = 3`):
//!
//! ```text
//! m = 0..5   data
//! m = 6      guard   (zero)
//! m = 7      pilot   x_p at column n_p, zero elsewhere
//! m = 8      guard   (zero)
//! ```
//!
//! The pilot block always sits inside the `l_zp` zero-padded rows, so the
//! data capacity is `N · (M - l_zp)` whether or not a pilot is transmitted.

use crate::{Error, Result, C64};

/// Speed of light used for Doppler conversion, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameParams {
    /// Blocks per frame (Walsh order), a power of two.
    pub n: usize,
    /// Samples per block.
    pub m: usize,
    /// Subcarrier spacing in Hz; the block duration is `1 / delta_f`.
    pub delta_f: f64,
    pub carrier_hz: f64,
    /// Largest discrete delay tap.
    pub l_max: usize,
    /// Zero-padded rows at the bottom of the grid.
    pub l_zp: usize,
    /// Pilot delay index, `M - l_max - 1`.
    pub m_p: usize,
    /// Pilot sequency index.
    pub n_p: usize,
    /// Frame-level cyclic prefix, `l_max + 1` samples.
    pub cp_len: usize,
    pub qam_order: usize,
}

impl FrameParams {
    /// Frame with 15 kHz spacing, 4 GHz carrier, `l_zp = 2 l_max + 1`, `n_p = 0` and 4-QAM.
    pub fn new(n: usize, m: usize, l_max: usize) -> Result<Self> {
        let p = Self {
            n,
            m,
            delta_f: 15e3,
            carrier_hz: 4e9,
            l_max,
            l_zp: 2 * l_max + 1,
            m_p: m.saturating_sub(l_max + 1),
            n_p: 0,
            cp_len: l_max + 1,
            qam_order: 4,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_l_zp(mut self, l_zp: usize) -> Result<Self> {
        self.l_zp = l_zp;
        self.validate()?;
        Ok(self)
    }

    pub fn with_pilot_sequency(mut self, n_p: usize) -> Result<Self> {
        self.n_p = n_p;
        self.validate()?;
        Ok(self)
    }

    pub fn with_qam(mut self, order: usize) -> Result<Self> {
        self.qam_order = order;
        self.validate()?;
        Ok(self)
    }

    pub fn with_radio(mut self, delta_f: f64, carrier_hz: f64) -> Result<Self> {
        self.delta_f = delta_f;
        self.carrier_hz = carrier_hz;
        self.validate()?;
        Ok(self)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n == 0 || !self.n.is_power_of_two() {
            v.push(format!("N = {} must be a power of two", self.n));
        }
        if self.l_zp < 2 * self.l_max + 1 {
            v.push(format!(
                "l_zp = {} must be at least 2 l_max + 1 = {}",
                self.l_zp,
                2 * self.l_max + 1
            ));
        }
        if self.m <= self.l_zp {
            v.push(format!(
                "M = {} leaves no data rows with l_zp = {}",
                self.m, self.l_zp
            ));
        } else if self.m_p != self.m - self.l_max - 1 {
            v.push(format!("m_p = {} must equal M - l_max - 1", self.m_p));
        }
        if self.n_p >= self.n.max(1) {
            v.push(format!("n_p = {} must be below N = {}", self.n_p, self.n));
        }
        if self.cp_len != self.l_max + 1 {
            v.push(format!("cp_len = {} must equal l_max + 1", self.cp_len));
        }
        if ![4, 16, 64].contains(&self.qam_order) {
            v.push(format!("QAM order {} not in {{4, 16, 64}}", self.qam_order));
        }
        if !(self.delta_f > 0.0) || !(self.carrier_hz > 0.0) {
            v.push("subcarrier spacing and carrier must be positive".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// `T = 1 / Δf`.
    pub fn block_duration(&self) -> f64 {
        1.0 / self.delta_f
    }

    /// `T_f = N T`.
    pub fn frame_duration(&self) -> f64 {
        self.n as f64 * self.block_duration()
    }

    /// `B = M Δf`, also the sample rate.
    pub fn bandwidth(&self) -> f64 {
        self.m as f64 * self.delta_f
    }

    pub fn frame_len(&self) -> usize {
        self.n * self.m
    }

    /// `M' = M - l_zp`.
    pub fn data_rows(&self) -> usize {
        self.m - self.l_zp
    }

    /// `N M'`.
    pub fn data_len(&self) -> usize {
        self.n * self.data_rows()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.qam_order.trailing_zeros() as usize
    }

    pub fn is_data_slot(&self, m: usize, _n: usize) -> bool {
        m < self.data_rows()
    }
}

/// `M x N` matrix `X`; row `m` is the symbol vector `x_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySequencyGrid {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DelaySequencyGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::default(); rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::mismatch("grid", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.data[m * self.cols + n]
    }

    pub fn set(&mut self, m: usize, n: usize, v: C64) {
        self.data[m * self.cols + n] = v;
    }

    pub fn row(&self, m: usize) -> &[C64] {
        &self.data[m * self.cols..(m + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Places `data` row-major into the data rows and the pilot at `(m_p, n_p)`.
pub fn build_grid(
    params: &FrameParams,
    data: &[C64],
    pilot_amplitude: f64,
) -> Result<DelaySequencyGrid> {
    let expected = params.data_len();
    if data.len() != expected {
        return Err(Error::invalid(format!(
            "grid expects {expected} data symbols, got {}",
            data.len()
        )));
    }
    let mut grid = DelaySequencyGrid::zeros(params.m, params.n);
    grid.data[..expected].copy_from_slice(data);
    grid.set(params.m_p, params.n_p, C64::new(pilot_amplitude, 0.0));
    Ok(grid)
}

/// Inverse of [`build_grid`] for the data slots.
pub fn extract_data(params: &FrameParams, grid: &DelaySequencyGrid) -> Vec<C64> {
    grid.data[..params.data_len()].to_vec()
}

/// Known (non-data) content of a frame plus the data mask. Used by the
/// detectors to pin guard, ZP and pilot slots during hard decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayout {
    pub params: FrameParams,
    pub pilot_amplitude: f64,
}

impl FrameLayout {
    pub fn new(params: FrameParams, pilot_amplitude: f64) -> Self {
        Self {
            params,
            pilot_amplitude,
        }
    }

    pub fn data_slots(&self) -> usize {
        self.params.data_len()
    }

    pub fn known_value(&self, m: usize, n: usize) -> C64 {
        if m == self.params.m_p && n == self.params.n_p {
            C64::new(self.pilot_amplitude, 0.0)
        } else {
            C64::default()
        }
    }

    /// Hard decisions on data slots, known values elsewhere.
    pub fn decide(&self, soft: &DelaySequencyGrid, qam: &QamConstellation) -> DelaySequencyGrid {
        let p = &self.params;
        let mut out = DelaySequencyGrid::zeros(p.m, p.n);
        let split = p.data_len();
        for (o, s) in out.data[..split].iter_mut().zip(&soft.data[..split]) {
            *o = qam.point(qam.slice(*s));
        }
        out.set(p.m_p, p.n_p, self.known_value(p.m_p, p.n_p));
        out
    }
}

/// Square QAM with per-axis Gray labels and unit average energy.
///
/// A symbol with `2b` bits uses the first `b` bits for the in-phase axis and
/// the last `b` for quadrature, most significant bit first. On each axis the
/// label `g` is Gray-decoded to a level index `k` and mapped to amplitude
/// `(√Q - 1 - 2k) · scale`, so label `0` is the largest positive level.
/// Point index `i` carries the bits of `i`, most significant first.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: usize,
    bits: usize,
    side: usize,
    scale: f64,
    points: Vec<C64>,
}

fn gray_decode(mut g: usize) -> usize {
    let mut k = g;
    while g > 0 {
        g >>= 1;
        k ^= g;
    }
    k
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        if ![4, 16, 64, 256].contains(&order) {
            return Err(Error::invalid(format!("unsupported QAM order {order}")));
        }
        let bits = order.trailing_zeros() as usize;
        let side = 1usize << (bits / 2);
        let scale = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
        let half = bits / 2;
        let level = |label: usize| (side as f64 - 1.0 - 2.0 * gray_decode(label) as f64) * scale;
        let points = (0..order)
            .map(|i| C64::new(level(i >> half), level(i & (side - 1))))
            .collect();
        Ok(Self {
            order,
            bits,
            side,
            scale,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> C64 {
        self.points[index]
    }

    /// Bit `b` (0 = most significant) of point `index`.
    pub fn bit(&self, index: usize, b: usize) -> u8 {
        ((index >> (self.bits - 1 - b)) & 1) as u8
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<C64>> {
        if !bits.len().is_multiple_of(self.bits) {
            return Err(Error::invalid(format!(
                "{} bits is not a multiple of {} bits per symbol",
                bits.len(),
                self.bits
            )));
        }
        Ok(bits
            .chunks_exact(self.bits)
            .map(|chunk| {
                let idx = chunk
                    .iter()
                    .fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
                self.points[idx]
            })
            .collect())
    }

    pub fn demap_hard(&self, symbols: &[C64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits);
        for &y in symbols {
            let idx = self.slice(y);
            out.extend((0..self.bits).map(|b| self.bit(idx, b)));
        }
        out
    }

    /// Index of the nearest point by exhaustive search; ties go to the smallest index.
    pub fn nearest_index(&self, y: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn nearest(&self, y: C64) -> C64 {
        self.points[self.nearest_index(y)]
    }

    fn slice_axis(&self, v: f64) -> usize {
        // continuous level index, then the two neighbouring levels
        let pos = (self.side as f64 - 1.0 - v / self.scale) / 2.0;
        let lo = pos.floor().clamp(0.0, (self.side - 1) as f64) as usize;
        let hi = (lo + 1).min(self.side - 1);
        let amp = |k: usize| (self.side as f64 - 1.0 - 2.0 * k as f64) * self.scale;
        let (dl, dh) = ((v - amp(lo)).abs(), (v - amp(hi)).abs());
        let (gl, gh) = (lo ^ (lo >> 1), hi ^ (hi >> 1));
        if dl < dh || (dl == dh && gl <= gh) {
            gl
        } else {
            gh
        }
    }

    /// Per-axis nearest-point decision, equal to [`Self::nearest_index`]
    /// including its tie-break rule.
    pub fn slice(&self, y: C64) -> usize {
        (self.slice_axis(y.re) << (self.bits / 2)) | self.slice_axis(y.im)
    }
}

/// Nearest constellation point to `y`.
pub fn nearest_symbol(y: C64, qam: &QamConstellation) -> C64 {
    qam.nearest(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn params_defaults_and_derived_values() {
        let p = FrameParams::new(64, 64, 3).unwrap();
        assert_eq!((p.l_zp, p.m_p, p.cp_len, p.n_p), (7, 60, 4, 0));
        assert_eq!(p.data_rows(), 57);
        assert!((p.block_duration() - 1.0 / 15e3).abs() < 1e-18);
        assert!((p.frame_duration() - 64.0 / 15e3).abs() < 1e-15);
        assert_eq!(p.bandwidth(), 960e3);
    }

    #[test]
    fn params_validation_lists_everything() {
        assert!(FrameParams::new(6, 16, 1).is_err());
        assert!(FrameParams::new(8, 3, 1).is_err());
        assert!(FrameParams::new(8, 16, 1).unwrap().with_l_zp(2).is_err());
        assert!(FrameParams::new(8, 16, 1).unwrap().with_pilot_sequency(8).is_err());
        let mut p = FrameParams::new(8, 16, 1).unwrap();
        p.n = 6;
        p.qam_order = 8;
        match p.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_grid() {
        let p = FrameParams::new(8, 9, 1).unwrap();
        let g = build_grid(&p, &vec![C64::default(); p.data_len()], 0.0).unwrap();
        assert_eq!(g.energy(), 0.0);
    }

    #[test]
    fn small_frame_layout() {
        let p = FrameParams::new(8, 9, 1).unwrap();
        assert_eq!((p.m_p, p.l_zp, p.data_len()), (7, 3, 48));
        let data = vec![C64::new(1.0, 1.0); 48];
        let g = build_grid(&p, &data, 3.0).unwrap();
        for n in 0..8 {
            assert_eq!(g.get(6, n), C64::default());
            assert_eq!(g.get(8, n), C64::default());
            assert_eq!(g.get(5, n), C64::new(1.0, 1.0));
        }
        let nonzero: Vec<usize> = (0..8).filter(|&n| g.get(7, n) != C64::default()).collect();
        assert_eq!(nonzero, vec![0]);
        assert_eq!(g.get(7, 0), C64::new(3.0, 0.0));
    }

    #[test]
    fn wrong_data_length_names_expected_count() {
        let p = FrameParams::new(8, 9, 1).unwrap();
        let err = build_grid(&p, &[C64::default(); 3], 0.0).unwrap_err();
        assert!(err.to_string().contains("48"), "{err}");
    }

    #[test]
    fn grid_data_energy() {
        let p = FrameParams::new(16, 32, 2).unwrap().with_qam(16).unwrap();
        let qam = QamConstellation::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // one full cycle through the constellation keeps the mean energy exact
        let data: Vec<C64> = (0..p.data_len()).map(|i| qam.point(i % 16)).collect();
        let g = build_grid(&p, &data, 0.0).unwrap();
        assert!((g.energy() - p.data_len() as f64).abs() < 1e-9);
        let rnd: Vec<C64> = (0..p.data_len()).map(|_| qam.point(rng.random_range(0..16))).collect();
        assert_eq!(extract_data(&p, &build_grid(&p, &rnd, 2.0).unwrap()), rnd);
    }

    #[test]
    fn qam_labeling() {
        let q4 = QamConstellation::new(4).unwrap();
        let s = 0.5f64.sqrt();
        assert_eq!(q4.map(&[0, 0]).unwrap(), vec![C64::new(s, s)]);
        assert_eq!(q4.map(&[1, 0]).unwrap(), vec![C64::new(-s, s)]);
        assert_eq!(q4.map(&[0, 1]).unwrap(), vec![C64::new(s, -s)]);
        assert!(q4.map(&[0, 0, 1]).is_err());
        for order in [4, 16, 64] {
            let q = QamConstellation::new(order).unwrap();
            let mean = q.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((mean - 1.0).abs() < 1e-12);
        }
        assert!(QamConstellation::new(8).is_err());
    }

    #[test]
    fn qam_gray_adjacency() {
        for order in [4, 16, 64] {
            let q = QamConstellation::new(order).unwrap();
            let dmin = 2.0 * q.scale;
            for i in 0..order {
                for j in 0..order {
                    let d = (q.point(i) - q.point(j)).norm();
                    if (d - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "order {order}: {i} vs {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn qam_round_trip_64() {
        let q = QamConstellation::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bits: Vec<u8> = (0..1024 - 1024 % 6).map(|_| rng.random_range(0..2)).collect();
        assert_eq!(q.demap_hard(&q.map(&bits).unwrap()), bits);
    }

    #[test]
    fn nearest_symbol_examples() {
        let q = QamConstellation::new(4).unwrap();
        for &p in q.points() {
            assert_eq!(nearest_symbol(p, &q), p);
        }
        assert_eq!(nearest_symbol(C64::default(), &q), q.point(0));
        // brute-force distances to the four points
        let y = C64::new(0.9, 0.8);
        let d: Vec<f64> = q.points().iter().map(|p| (y - p).norm()).collect();
        let best = (0..4).min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap()).unwrap();
        let s = 0.5f64.sqrt();
        assert_eq!(q.point(best), C64::new(s, s));
        assert_eq!(nearest_symbol(y, &q), C64::new(s, s));
    }

    #[test]
    fn slicer_ties_match_brute_force() {
        for order in [4, 16, 64] {
            let q = QamConstellation::new(order).unwrap();
            // midpoints between levels on both axes are exact ties
            let side = q.side;
            for a in 0..=2 * side {
                for b in 0..=2 * side {
                    let re = (a as f64 - side as f64) * q.scale;
                    let im = (b as f64 - side as f64) * q.scale;
                    let y = C64::new(re, im);
                    assert_eq!(q.slice(y), q.nearest_index(y), "order {order} y {y}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn slicer_matches_brute_force(order_sel in 0usize..3, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let q = QamConstellation::new([4, 16, 64][order_sel]).unwrap();
            let y = C64::new(re, im);
            prop_assert_eq!(q.slice(y), q.nearest_index(y));
        }
    }
}
