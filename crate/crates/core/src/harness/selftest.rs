//! Quick end-to-end sanity checks run by `otsm-sim selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{CsiKind, SimConfig};
use super::sim::Simulation;
use crate::channel::{build_block_channel, build_dense_time_matrix, discretize, sample_eva, DiscretizeMode};
use crate::coding::LdpcCode;
use crate::frame::{build_grid, FrameParams, QamConstellation};
use crate::modem::DelayTimeModem;
use crate::transforms::wht;
use crate::{Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn run_selftest() -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let x = random_vec(&mut rng, 64);
    vec![
        check("wht_involution", || {
            let back = wht(&wht(&x)?)?;
            let err = back.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            Ok((err < 1e-12, format!("max error {err:.2e}")))
        }),
        check("block_channel_matches_dense", || {
            let params = FrameParams::new(8, 32, 3)?;
            let taps = discretize(&sample_eva(&params, 500.0, 3)?, &params, DiscretizeMode::RoundDelay)?;
            // zero-padded frame, so the block model is exact
            let data = random_vec(&mut ChaCha8Rng::seed_from_u64(4), params.data_len());
            let s = DelayTimeModem::otsm(params)?.grid_to_time(&build_grid(&params, &data, 0.0)?)?;
            let banded = build_block_channel(&taps, &params)?.apply(&s)?;
            let dense = build_dense_time_matrix(&taps, &params)? * nalgebra::DVector::from_vec(s);
            let err = banded.iter().zip(dense.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            Ok((err < 1e-10, format!("max error {err:.2e}")))
        }),
        check("qam_round_trip", || {
            let mut ok = true;
            for order in [4, 16, 64] {
                let qam = QamConstellation::new(order)?;
                let bits: Vec<u8> = (0..qam.bits_per_symbol() * 50).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
                ok &= qam.demap_hard(&qam.map(&bits)?) == bits;
            }
            Ok((ok, String::new()))
        }),
        check("ldpc_encode_decode", || {
            let code = LdpcCode::load(super::config::DEFAULT_CODE_PATH)?;
            let info: Vec<u8> = (0..code.k()).map(|i| ((i * 5 + 1) % 3 == 0) as u8).collect();
            let cw = code.encode(&info)?;
            let llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 2.0 } else { -2.0 }).collect();
            let dec = code.decode(&llr, 5)?;
            Ok((dec.parity_ok && dec.bits == cw, format!("{} iterations", dec.iterations)))
        }),
        check("noiseless_otsm_link", || {
            let cfg = SimConfig {
                n: 16,
                m: 32,
                snr_db: vec![f64::INFINITY],
                frames: 4,
                speed_kmh: 500.0,
                ..SimConfig::default()
            };
            let r = Simulation::new(cfg)?.run()?;
            Ok((r[0].bit_errors == 0, format!("{} bit errors", r[0].bit_errors)))
        }),
        check("estimated_csi_link", || {
            let cfg = SimConfig {
                n: 16,
                m: 64,
                csi: CsiKind::Estimated,
                snr_db: vec![30.0],
                frames: 4,
                ..SimConfig::default()
            };
            let r = Simulation::new(cfg)?.run()?;
            Ok((r[0].ber() < 1e-2, format!("ber {:.2e}", r[0].ber())))
        }),
    ]
}
