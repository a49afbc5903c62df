//! Embedded-pilot channel estimation in the delay-time domain.
//!
//! A single pilot `x_p` at `(m_p, n_p)` becomes the delay-time vector
//! `x̃_{m_p}(n) = x_p W_N(n_p, n)`, one sample per block at instant
//! `m_p + nM`. Since the guard rows around the pilot are empty, the received
//! sample at `m_p + l + nM` sees only tap `l` acting on the pilot, and
//! dividing it by `x̃_{m_p}(n)` gives a knot of `g_s[l, ·]`. The prefix holds
//! a copy of the last pilot sample, which adds a knot one block before the
//! frame. The knots are then interpolated across the frame.

use log::warn;

use crate::channel::DelayTimeTaps;
use crate::frame::FrameParams;
use crate::modem::{DelayTimeModem, ReceivedFrame};
use crate::{Error, Result, C64};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Pilot energy allocation, `E_p = β N l_zp E_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotConfig {
    /// Excess pilot power factor (linear).
    pub beta: f64,
    pub symbol_energy: f64,
    pub pilot_energy: f64,
    /// Pilot power ratio `η(β)`.
    pub ppr: f64,
}

impl PilotConfig {
    /// `x_p = √E_p`.
    pub fn amplitude(&self) -> f64 {
        self.pilot_energy.sqrt()
    }
}

/// Baseline pilot power ratio `η₀ = l_zp / M`.
pub fn baseline_ppr(params: &FrameParams) -> f64 {
    params.l_zp as f64 / params.m as f64
}

/// `η(β) = β l_zp / (M' + β l_zp)` with `M' = M - l_zp`.
pub fn pilot_power_ratio(params: &FrameParams, beta: f64) -> f64 {
    let lzp = params.l_zp as f64;
    let m_prime = (params.m - params.l_zp) as f64;
    beta * lzp / (m_prime + beta * lzp)
}

pub fn pilot_power(params: &FrameParams, beta: f64, symbol_energy: f64) -> Result<PilotConfig> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("pilot power factor {beta} must be positive")));
    }
    if !(symbol_energy > 0.0) {
        return Err(Error::invalid(format!("symbol energy {symbol_energy} must be positive")));
    }
    Ok(PilotConfig {
        beta,
        symbol_energy,
        pilot_energy: beta * (params.n * params.l_zp) as f64 * symbol_energy,
        ppr: pilot_power_ratio(params, beta),
    })
}

/// Warns when the per-block pilot rate cannot follow the Doppler.
pub fn check_sub_sampling(params: &FrameParams, nu_max_hz: f64) -> bool {
    let ok = nu_max_hz < params.delta_f / 2.0;
    if !ok {
        warn!(
            "maximum Doppler {nu_max_hz:.1} Hz is not below half the pilot rate ({:.1} Hz); interpolation will alias",
            params.delta_f / 2.0
        );
    }
    ok
}

/// Knots `ĝ_s(l, m_p + l + nM)` for `n = -1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TapEstimate {
    num_taps: usize,
    n: usize,
    m: usize,
    m_p: usize,
    samples: Vec<C64>,
}

impl TapEstimate {
    pub fn num_taps(&self) -> usize {
        self.num_taps
    }

    /// Knots per tap, `N + 1`.
    pub fn num_knots(&self) -> usize {
        self.n + 1
    }

    /// Sample instant of knot `k` (knot 0 is the prefix copy).
    pub fn knot_position(&self, l: usize, k: usize) -> isize {
        (self.m_p + l) as isize + (k as isize - 1) * self.m as isize
    }

    pub fn knots(&self, l: usize) -> &[C64] {
        let k = self.num_knots();
        &self.samples[l * k..(l + 1) * k]
    }

    /// Knot for block `n`, with `n = -1` the prefix anchor.
    pub fn sample(&self, l: usize, n: isize) -> C64 {
        self.knots(l)[(n + 1) as usize]
    }
}

/// Divides the received pilot-row samples by the delay-time pilot.
pub fn estimate_taps(rx: &ReceivedFrame, modem: &DelayTimeModem, pilot: &PilotConfig) -> Result<TapEstimate> {
    let p = modem.params();
    let (n, m, m_p, l_max) = (p.n, p.m, p.m_p, p.l_max);
    if rx.body.len() != n * m {
        return Err(Error::mismatch("received frame", n * m, rx.body.len()));
    }
    if rx.cp.len() < l_max + 1 {
        return Err(Error::Precondition(format!(
            "pilot estimation needs a prefix of {} samples, got {}",
            l_max + 1,
            rx.cp.len()
        )));
    }
    if m_p + l_max >= m {
        return Err(Error::Precondition("pilot row plus delay spread exceeds the block".into()));
    }
    let x = modem.pilot_delay_time(pilot.amplitude());
    if x.iter().any(|v| v.norm() == 0.0) {
        return Err(Error::Precondition("delay-time pilot has a zero entry".into()));
    }
    let cp_len = rx.cp.len() as isize;
    let received = |q: isize| -> C64 {
        if q >= 0 {
            rx.body[q as usize]
        } else {
            rx.cp[(cp_len + q) as usize]
        }
    };
    let num_taps = l_max + 1;
    let mut samples = Vec::with_capacity(num_taps * (n + 1));
    for l in 0..num_taps {
        for k in 0..=n {
            let q = (m_p + l) as isize + (k as isize - 1) * m as isize;
            let block = if k == 0 { n - 1 } else { k - 1 };
            samples.push(received(q) / x[block]);
        }
    }
    Ok(TapEstimate {
        num_taps,
        n,
        m,
        m_p,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    /// Natural cubic spline.
    Spline,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Interpolation::Linear),
            "spline" => Ok(Interpolation::Spline),
            other => Err(Error::invalid(format!("unknown interpolation `{other}`"))),
        }
    }
}

impl std::fmt::Display for Interpolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Interpolation::Linear => "linear",
            Interpolation::Spline => "spline",
        })
    }
}

/// Second derivatives of the natural cubic spline through equally spaced
/// `y` (spacing folded out, so they are in units of `1/h²`).
fn natural_spline_moments(y: &[C64]) -> Vec<C64> {
    let k = y.len();
    let mut moments = vec![C64::default(); k];
    if k < 3 {
        return moments;
    }
    // interior system: M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i-1} - 2 y_i + y_{i+1})
    let inner = k - 2;
    let mut diag = vec![4.0; inner];
    let mut rhs: Vec<C64> = (1..k - 1).map(|i| (y[i - 1] - y[i] * 2.0 + y[i + 1]) * 6.0).collect();
    for i in 1..inner {
        let w = 1.0 / diag[i - 1];
        diag[i] -= w;
        let prev = rhs[i - 1];
        rhs[i] -= prev * w;
    }
    moments[inner] = rhs[inner - 1] / diag[inner - 1];
    for i in (0..inner - 1).rev() {
        moments[i + 1] = (rhs[i] - moments[i + 2]) / diag[i];
    }
    moments
}

/// Reconstructs `g_s[l, q]` over `[-cp_len, N M)` from the knots.
///
/// Samples before the first knot or after the last one follow the nearest
/// end segment.
pub fn interpolate(est: &TapEstimate, params: &FrameParams, mode: Interpolation) -> Result<DelayTimeTaps> {
    let k = est.num_knots();
    if k < 2 {
        return Err(Error::invalid(format!("interpolation needs two knots per tap, got {k}")));
    }
    let mut taps = DelayTimeTaps::zeros_for(params);
    let h = est.m as f64;
    for l in 0..est.num_taps() {
        let y = est.knots(l);
        let moments = match mode {
            Interpolation::Linear => Vec::new(),
            Interpolation::Spline => natural_spline_moments(y),
        };
        let origin = est.knot_position(l, 0);
        for q in taps.start()..taps.end() {
            let pos = (q - origin) as f64 / h;
            let seg = (pos.floor().max(0.0) as usize).min(k - 2);
            let t = pos - seg as f64;
            let v = match mode {
                Interpolation::Linear => {
                    // slope per sample (ĝ_{n+1} - ĝ_n) / M
                    let alpha = (y[seg + 1] - y[seg]) / h;
                    y[seg] + alpha * (t * h)
                }
                Interpolation::Spline => {
                    let (a, b) = (1.0 - t, t);
                    y[seg] * a
                        + y[seg + 1] * b
                        + (moments[seg] * (a * a * a - a) + moments[seg + 1] * (b * b * b - b)) / 6.0
                }
            };
            taps.set(l, q, v);
        }
    }
    Ok(taps)
}

/// `Σ |ĝ - g|² / Σ |g|²` over `q ∈ [start, end)` and every tap.
pub fn nmse(estimate: &DelayTimeTaps, truth: &DelayTimeTaps, start: isize, end: isize) -> f64 {
    let mut err = 0.0;
    let mut pow = 0.0;
    for l in 0..truth.num_taps() {
        for q in start..end {
            let g = truth.get(l, q);
            let e = if l < estimate.num_taps() {
                estimate.get(l, q)
            } else {
                C64::default()
            };
            err += (e - g).norm_sqr();
            pow += g.norm_sqr();
        }
    }
    err / pow
}
