//! CSV results and multi-scheme comparison.

use std::fmt::Write as _;

use super::config::SimConfig;
use super::sim::{PointResult, Simulation};
use crate::{Error, Result};

pub const CSV_COLUMNS: [&str; 10] = [
    "snr_db",
    "ber",
    "fer",
    "bit_errors",
    "bits",
    "frame_errors",
    "frames",
    "mean_det_iters",
    "mean_turbo_iters",
    "seconds",
];

fn metric_fields(r: &PointResult) -> [String; 9] {
    [
        format!("{:.6e}", r.ber()),
        format!("{:.6e}", r.fer()),
        r.bit_errors.to_string(),
        r.bits.to_string(),
        r.frame_errors.to_string(),
        r.frames.to_string(),
        format!("{:.4}", r.mean_det_iters()),
        format!("{:.4}", r.mean_turbo_iters()),
        format!("{:.3}", r.seconds),
    ]
}

fn header(out: &mut String, cfg: &SimConfig, results: &[PointResult], prefix: &str) {
    for (k, v) in cfg.entries() {
        let _ = writeln!(out, "# {prefix}{k} = {v}");
    }
    for r in results {
        let _ = writeln!(out, "# {prefix}channel_digest[{}] = {:016x}", r.snr_db, r.channel_digest());
    }
}

/// `#` header with the resolved configuration, then one row per SNR point.
pub fn to_csv(cfg: &SimConfig, results: &[PointResult]) -> String {
    let mut out = String::new();
    header(&mut out, cfg, results, "");
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for r in results {
        let mut row = vec![r.snr_db.to_string()];
        row.extend(metric_fields(r));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reads the data rows of [`to_csv`] output; digests are not restored.
pub fn parse_csv(text: &str) -> Result<Vec<PointResult>> {
    let mut rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    match rows.next() {
        Some((_, h)) if h.trim() == CSV_COLUMNS.join(",") => {}
        Some((i, _)) => {
            return Err(Error::Parse {
                line: i + 1,
                msg: "unexpected column header".into(),
            })
        }
        None => return Ok(Vec::new()),
    }
    rows.map(|(i, line)| {
        let bad = |msg: &str| Error::Parse {
            line: i + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != CSV_COLUMNS.len() {
            return Err(bad("wrong number of fields"));
        }
        let int = |j: usize| f[j].parse::<usize>().map_err(|_| bad(CSV_COLUMNS[j]));
        let float = |j: usize| f[j].parse::<f64>().map_err(|_| bad(CSV_COLUMNS[j]));
        let frames = int(6)?;
        Ok(PointResult {
            snr_db: float(0)?,
            bit_errors: int(3)?,
            bits: int(4)?,
            frame_errors: int(5)?,
            frames,
            det_iters: (float(7)? * frames as f64).round() as usize,
            turbo_iters: (float(8)? * frames as f64).round() as usize,
            seconds: float(9)?,
            digests: Vec::new(),
        })
    })
    .collect()
}

/// Results of several schemes on shared channel realizations.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub configs: Vec<SimConfig>,
    pub results: Vec<Vec<PointResult>>,
}

impl Comparison {
    /// One row per SNR point, `<label>_<metric>` columns per scheme.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for ((label, cfg), res) in self.labels.iter().zip(&self.configs).zip(&self.results) {
            header(&mut out, cfg, res, &format!("{label}."));
        }
        let mut cols = vec![CSV_COLUMNS[0].to_string()];
        for label in &self.labels {
            cols.extend(CSV_COLUMNS[1..].iter().map(|c| format!("{label}_{c}")));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
        for (i, snr) in self.configs[0].snr_db.iter().enumerate() {
            let mut row = vec![snr.to_string()];
            for res in &self.results {
                row.extend(metric_fields(&res[i]));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn shared_key_mismatches(configs: &[SimConfig]) -> Vec<String> {
    const SHARED: [&str; 9] = [
        "n",
        "m",
        "delta_f",
        "carrier_hz",
        "profile",
        "speed_kmh",
        "doppler",
        "seed",
        "snr_db",
    ];
    let first = configs[0].entries();
    let mut v = Vec::new();
    for (i, cfg) in configs.iter().enumerate().skip(1) {
        for ((k, a), (_, b)) in first.iter().zip(cfg.entries()) {
            if SHARED.contains(k) && *a != b {
                v.push(format!("scheme {i}: {k} = {b} differs from scheme 0 ({a})"));
            }
        }
    }
    v
}

/// Runs every configuration and checks that all schemes saw the same
/// channel realizations on the frames they share.
pub fn compare(configs: &[SimConfig]) -> Result<Comparison> {
    if configs.is_empty() {
        return Err(Error::invalid("compare needs at least one configuration"));
    }
    let mismatches = shared_key_mismatches(configs);
    if !mismatches.is_empty() {
        return Err(Error::Config(mismatches));
    }
    let mut labels: Vec<String> = Vec::new();
    for cfg in configs {
        let base = cfg.scheme_label();
        let mut label = base.clone();
        let mut k = 2;
        while labels.contains(&label) {
            label = format!("{base}{k}");
            k += 1;
        }
        labels.push(label);
    }
    let sims = configs
        .iter()
        .map(|c| Simulation::new(c.clone()))
        .collect::<Result<Vec<_>>>()?;
    let results = sims.iter().map(|s| s.run()).collect::<Result<Vec<_>>>()?;
    for (i, res) in results.iter().enumerate().skip(1) {
        for (a, b) in results[0].iter().zip(res) {
            let shared = a.digests.len().min(b.digests.len());
            if a.digests[..shared] != b.digests[..shared] {
                return Err(Error::Precondition(format!(
                    "{} and {} saw different channels at {} dB",
                    labels[0], labels[i], a.snr_db
                )));
            }
        }
    }
    Ok(Comparison {
        labels,
        configs: configs.to_vec(),
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::super::config::{DetectorKind, ModemKind};
    use super::*;

    fn tiny() -> SimConfig {
        SimConfig {
            n: 8,
            m: 32,
            snr_db: vec![5.0, 15.0],
            frames: 4,
            batch: 2,
            record_time: false,
            ..SimConfig::default()
        }
    }

    #[test]
    fn csv_is_reproducible_and_parses() {
        let cfg = tiny();
        let run = || to_csv(&cfg, &Simulation::new(cfg.clone()).unwrap().run().unwrap());
        let a = run();
        assert_eq!(a, run());
        assert!(a.contains("\nsnr_db,ber,fer,bit_errors,bits,frame_errors,frames,mean_det_iters,mean_turbo_iters,seconds\n"));
        let back = parse_csv(&a).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].frames, 4);
        assert_eq!(back[0].seconds, 0.0);
    }

    #[test]
    fn compare_pairs_schemes() {
        let a = tiny();
        let b = SimConfig {
            modem: ModemKind::Ofdm,
            detector: DetectorKind::SingleTap,
            ..tiny()
        };
        let c = compare(&[a.clone(), b, a.clone()]).unwrap();
        assert_eq!(c.labels[2], format!("{}2", c.labels[0]));
        let csv = c.to_csv();
        assert!(csv.contains("ofdm_single_tap_perfect_ber"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
        let bad = SimConfig { seed: 9, ..tiny() };
        assert!(matches!(compare(&[a, bad]), Err(Error::Config(_))));
    }
}
