//! Cross-module link checks through the public API.

use otsm::chanest::Interpolation;
use otsm::channel::{DiscretizeMode, DopplerSpectrum};
use otsm::harness::{CodingKind, CsiKind, DetectorKind, ModemKind, SimConfig, Simulation};

fn small() -> SimConfig {
    SimConfig {
        n: 16,
        m: 64,
        frames: 8,
        batch: 4,
        stop_frame_errors: 0,
        record_time: false,
        snr_db: vec![f64::INFINITY],
        ..SimConfig::default()
    }
}

#[test]
fn noiseless_links_are_error_free() {
    let cases = [
        SimConfig { modem: ModemKind::Otfs, doppler: DopplerSpectrum::Symmetric, ..small() },
        SimConfig { qam: 16, ..small() },
        SimConfig { coding: CodingKind::Ldpc, ..small() },
        SimConfig { modem: ModemKind::Ofdm, detector: DetectorKind::SingleTap, speed_kmh: 0.0, ..small() },
    ];
    for cfg in cases {
        let label = cfg.scheme_label();
        let r = Simulation::new(cfg).unwrap().run().unwrap();
        assert_eq!(r[0].bit_errors, 0, "{label}");
    }
}

#[test]
fn single_carrier_can_lock_on_wrong_decisions() {
    // without sequency spreading a faded sample can hold a wrong decision
    // as a fixed point of the sliced iteration
    let r = Simulation::new(SimConfig { modem: ModemKind::Sc, ..small() }).unwrap().run().unwrap();
    assert!(r[0].ber() < 1e-3, "{}", r[0].ber());
    assert!(r[0].mean_det_iters() < 15.0);
}

#[test]
fn sinc_discretization_runs_with_estimated_csi() {
    let cfg = SimConfig {
        discretize: DiscretizeMode::Sinc,
        csi: CsiKind::Estimated,
        interp: Interpolation::Spline,
        snr_db: vec![25.0],
        ..small()
    };
    let r = Simulation::new(cfg).unwrap().run().unwrap();
    assert!(r[0].ber() < 0.05, "{}", r[0].ber());
}

#[test]
fn schemes_share_channel_realizations() {
    let base = Simulation::new(small()).unwrap();
    let est = Simulation::new(SimConfig { csi: CsiKind::Estimated, ..small() }).unwrap();
    let ofdm = Simulation::new(SimConfig {
        modem: ModemKind::Ofdm,
        detector: DetectorKind::SingleTap,
        ..small()
    })
    .unwrap();
    for t in 0..5 {
        let d = base.paths(t).unwrap().digest();
        assert_eq!(d, est.paths(t).unwrap().digest());
        assert_eq!(d, ofdm.paths(t).unwrap().digest());
    }
}

#[test]
fn ber_falls_with_snr() {
    let cfg = SimConfig { snr_db: vec![0.0, 10.0, 20.0], frames: 16, ..small() };
    let r = Simulation::new(cfg).unwrap().run().unwrap();
    assert!(r[0].ber() > r[1].ber() && r[1].ber() > r[2].ber(), "{:?}", r.iter().map(|p| p.ber()).collect::<Vec<_>>());
}
