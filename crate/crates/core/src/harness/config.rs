//! Flat `key = value` simulation configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::chanest::Interpolation;
use crate::channel::{DiscretizeMode, DopplerSpectrum, PowerDelayProfile};
use crate::coding::TurboConfig;
use crate::detector::{DetectorConfig, Initializer};
use crate::frame::FrameParams;
use crate::{Error, Result};

/// Shipped rate-1/2 code, used when `code_path` is not given.
pub const DEFAULT_CODE_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/codes/ira_672_r12.alist");

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => [$($word:literal),+]),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($($word)|+ => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($name),
                        [$([$($word),+][0]),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => [$($word),+][0]),+ })
            }
        }
    };
}

keyword_enum!(ModemKind { Otsm => ["otsm"], Otfs => ["otfs"], Ofdm => ["ofdm"], Sc => ["sc", "single_carrier"] });
keyword_enum!(DetectorKind { GsIterative => ["gs_iterative", "gs"], SingleTap => ["single_tap", "mmse"] });
keyword_enum!(CsiKind { Perfect => ["perfect"], Estimated => ["estimated"] });
keyword_enum!(CodingKind { None => ["none"], Ldpc => ["ldpc"] });

fn parse_snr_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, rest)) = tok.split_once(':') {
            // start:step:stop
            let parts: Vec<&str> = std::iter::once(a).chain(rest.split(':')).collect();
            if parts.len() != 3 {
                return Err(format!("range `{tok}` must be start:step:stop"));
            }
            let v: Vec<f64> = parts
                .iter()
                .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number `{p}` in `{tok}`")))
                .collect::<std::result::Result<_, _>>()?;
            if !(v[1] > 0.0) {
                return Err(format!("range step in `{tok}` must be positive"));
            }
            let count = ((v[2] - v[0]) / v[1] + 1e-9).floor();
            if count < 0.0 {
                return Err(format!("empty range `{tok}`"));
            }
            out.extend((0..=count as usize).map(|i| v[0] + i as f64 * v[1]));
        } else if tok.eq_ignore_ascii_case("inf") {
            out.push(f64::INFINITY);
        } else {
            out.push(tok.parse::<f64>().map_err(|_| format!("bad SNR `{tok}`"))?);
        }
    }
    if out.is_empty() {
        return Err("empty SNR list".into());
    }
    Ok(out)
}

fn fmt_snr(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub label: Option<String>,
    pub modem: ModemKind,
    pub detector: DetectorKind,
    pub csi: CsiKind,
    pub beta_db: f64,
    pub interp: Interpolation,
    pub n: usize,
    pub m: usize,
    /// `None` picks the smallest value holding the profile.
    pub l_max: Option<usize>,
    /// `None` means `2 l_max + 1`.
    pub l_zp: Option<usize>,
    pub n_p: usize,
    pub qam: usize,
    pub delta_f: f64,
    pub carrier_hz: f64,
    pub profile: PowerDelayProfile,
    pub speed_kmh: f64,
    pub doppler: DopplerSpectrum,
    pub discretize: DiscretizeMode,
    pub snr_db: Vec<f64>,
    /// Frame budget per SNR point.
    pub frames: usize,
    /// Frames run before the frame-error stop may trigger.
    pub min_frames: usize,
    /// Stop a point after this many frame errors; 0 disables.
    pub stop_frame_errors: usize,
    /// Frames per parallel batch; the stopping rule is checked between batches.
    pub batch: usize,
    pub seed: u64,
    /// Worker threads, 0 for the rayon default.
    pub threads: usize,
    pub det_iters: usize,
    /// `None` picks 1 for 4-QAM and 0.5 otherwise.
    pub relaxation: Option<f64>,
    pub initializer: Initializer,
    pub stop_tol: f64,
    pub coding: CodingKind,
    pub code_path: PathBuf,
    pub turbo: TurboConfig,
    pub interleaver_seed: u64,
    /// When false the `seconds` column is written as 0 so reruns are byte-identical.
    pub record_time: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            label: None,
            modem: ModemKind::Otsm,
            detector: DetectorKind::GsIterative,
            csi: CsiKind::Perfect,
            beta_db: 3.0,
            interp: Interpolation::Linear,
            n: 64,
            m: 64,
            l_max: None,
            l_zp: None,
            n_p: 0,
            qam: 4,
            delta_f: 15e3,
            carrier_hz: 4e9,
            profile: PowerDelayProfile::Eva,
            speed_kmh: 120.0,
            doppler: DopplerSpectrum::OneSided,
            discretize: DiscretizeMode::RoundDelay,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            frames: 10_000,
            min_frames: 0,
            stop_frame_errors: 100,
            batch: 64,
            seed: 1,
            threads: 0,
            det_iters: 15,
            relaxation: None,
            initializer: Initializer::Zero,
            stop_tol: 1e-6,
            coding: CodingKind::None,
            code_path: PathBuf::from(DEFAULT_CODE_PATH),
            turbo: TurboConfig::default(),
            interleaver_seed: 0x5eed,
            record_time: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| format!("{key}: cannot parse `{value}`"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("{key}: expected a boolean, got `{value}`")),
    }
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> std::result::Result<Option<T>, String> {
    if value.trim().eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn auto_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl SimConfig {
    /// Sets one key; the error names the key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let key = key.trim();
        let v = value.trim();
        match key {
            "label" => self.label = if v.is_empty() { None } else { Some(v.to_string()) },
            "modem" => self.modem = v.parse()?,
            "detector" => self.detector = v.parse()?,
            "csi" => self.csi = v.parse()?,
            "beta_db" => self.beta_db = parse(key, v)?,
            "interp" => self.interp = v.parse().map_err(|e: Error| e.to_string())?,
            "n" => self.n = parse(key, v)?,
            "m" => self.m = parse(key, v)?,
            "l_max" => self.l_max = parse_auto(key, v)?,
            "l_zp" => self.l_zp = parse_auto(key, v)?,
            "n_p" => self.n_p = parse(key, v)?,
            "qam" => self.qam = parse(key, v)?,
            "delta_f" => self.delta_f = parse(key, v)?,
            "carrier_hz" => self.carrier_hz = parse(key, v)?,
            "profile" => self.profile = PowerDelayProfile::parse(v).map_err(|e| format!("profile: {e}"))?,
            "speed_kmh" => self.speed_kmh = parse(key, v)?,
            "doppler" => {
                self.doppler = match v.to_ascii_lowercase().as_str() {
                    "one_sided" => DopplerSpectrum::OneSided,
                    "symmetric" => DopplerSpectrum::Symmetric,
                    _ => return Err(format!("doppler: expected one_sided or symmetric, got `{v}`")),
                }
            }
            "discretize" => {
                self.discretize = match v.to_ascii_lowercase().as_str() {
                    "round" => DiscretizeMode::RoundDelay,
                    "sinc" => DiscretizeMode::Sinc,
                    _ => return Err(format!("discretize: expected round or sinc, got `{v}`")),
                }
            }
            "snr_db" => self.snr_db = parse_snr_list(v).map_err(|e| format!("snr_db: {e}"))?,
            "frames" => self.frames = parse(key, v)?,
            "min_frames" => self.min_frames = parse(key, v)?,
            "stop_frame_errors" => self.stop_frame_errors = parse(key, v)?,
            "batch" => self.batch = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            "det_iters" => self.det_iters = parse(key, v)?,
            "relaxation" => self.relaxation = parse_auto(key, v)?,
            "initializer" => {
                self.initializer = match v.to_ascii_lowercase().as_str() {
                    "zero" => Initializer::Zero,
                    "mmse_single_tap" | "mmse" => Initializer::MmseSingleTap,
                    _ => return Err(format!("initializer: expected zero or mmse_single_tap, got `{v}`")),
                }
            }
            "stop_tol" => self.stop_tol = parse(key, v)?,
            "coding" => self.coding = v.parse()?,
            "code_path" => self.code_path = PathBuf::from(v),
            "turbo_iters" => self.turbo.max_turbo_iters = parse(key, v)?,
            "turbo_det_iters" => self.turbo.detector_iters = parse(key, v)?,
            "decoder_iters" => self.turbo.decoder_iters = parse(key, v)?,
            "bypass_decoder" => self.turbo.bypass_decoder = parse_bool(key, v)?,
            "interleaver_seed" => self.interleaver_seed = parse(key, v)?,
            "record_time" => self.record_time = parse_bool(key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Every bad line is
    /// reported, then the result is validated.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = cfg.set(k, v) {
                        errors.push(format!("line {}: {e}", i + 1));
                    }
                }
                None => errors.push(format!("line {}: expected `key = value`", i + 1)),
            }
        }
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        Ok(cfg)
    }

    /// Loads a file; a relative `code_path` is taken relative to the file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_text(&std::fs::read_to_string(path)?)?;
        if cfg.code_path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.code_path = dir.join(&cfg.code_path);
            }
        }
        Ok(cfg)
    }

    pub fn resolved_l_max(&self) -> usize {
        self.l_max.unwrap_or_else(|| {
            let bw = self.m as f64 * self.delta_f;
            let samples = self.profile.max_delay_ns() * 1e-9 * bw;
            (samples - 1e-9).ceil().max(0.0) as usize
        })
    }

    pub fn resolved_relaxation(&self) -> f64 {
        self.relaxation.unwrap_or(if self.qam <= 4 { 1.0 } else { 0.5 })
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            max_iters: self.det_iters,
            relaxation: self.resolved_relaxation(),
            initializer: self.initializer,
            stop_tol: self.stop_tol,
            hard_decisions: true,
        }
    }

    pub fn frame_params(&self) -> Result<FrameParams> {
        let mut p = FrameParams::new(self.n, self.m, self.resolved_l_max())?
            .with_qam(self.qam)?
            .with_radio(self.delta_f, self.carrier_hz)?;
        if let Some(l_zp) = self.l_zp {
            p = p.with_l_zp(l_zp)?;
        }
        p.with_pilot_sequency(self.n_p)
    }

    pub fn scheme_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            let mut s = format!("{}_{}_{}", self.modem, self.detector, self.csi);
            if self.coding == CodingKind::Ldpc {
                s.push_str("_ldpc");
            }
            s
        })
    }

    /// Every problem with the configuration, all at once.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        match self.frame_params() {
            Ok(p) => {
                let max_delay = self.profile.max_delay_ns() * 1e-9 * p.bandwidth();
                let needed = match self.discretize {
                    DiscretizeMode::RoundDelay => max_delay.round(),
                    DiscretizeMode::Sinc => max_delay,
                };
                if needed > p.l_max as f64 {
                    v.push(format!(
                        "l_max = {} is shorter than the profile delay spread ({max_delay:.2} samples)",
                        p.l_max
                    ));
                }
            }
            Err(Error::Config(list)) => v.extend(list),
            Err(e) => v.push(e.to_string()),
        }
        if self.modem == ModemKind::Ofdm {
            if self.detector == DetectorKind::GsIterative {
                v.push("ofdm supports only the single_tap detector".into());
            }
            if self.csi == CsiKind::Estimated {
                v.push("estimated CSI needs the embedded pilot of a delay-time modem".into());
            }
        }
        if self.coding == CodingKind::Ldpc {
            if self.detector != DetectorKind::GsIterative || self.modem == ModemKind::Ofdm {
                v.push("ldpc coding runs the turbo loop and needs the gs_iterative detector".into());
            }
            if let Err(Error::Config(list)) = self.turbo.validate() {
                v.extend(list);
            }
        }
        if self.csi == CsiKind::Estimated && !self.beta_db.is_finite() {
            v.push(format!("beta_db {} must be finite", self.beta_db));
        }
        if let Err(Error::Config(list)) = self.detector_config().validate() {
            v.extend(list);
        }
        if !(self.speed_kmh >= 0.0) {
            v.push(format!("speed_kmh {} must be non-negative", self.speed_kmh));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            v.push("snr_db must be a non-empty list of numbers or inf".into());
        }
        if self.frames == 0 {
            v.push("frames must be at least 1".into());
        }
        if self.batch == 0 {
            v.push("batch must be at least 1".into());
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

    /// Canonical `(key, value)` pairs with automatic values resolved.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let doppler = match self.doppler {
            DopplerSpectrum::OneSided => "one_sided",
            DopplerSpectrum::Symmetric => "symmetric",
        };
        let discretize = match self.discretize {
            DiscretizeMode::RoundDelay => "round",
            DiscretizeMode::Sinc => "sinc",
        };
        let initializer = match self.initializer {
            Initializer::Zero => "zero",
            Initializer::MmseSingleTap => "mmse_single_tap",
        };
        let l_zp = self.frame_params().map(|p| p.l_zp.to_string()).unwrap_or_else(|_| auto_str(&self.l_zp));
        vec![
            ("label", self.scheme_label()),
            ("modem", self.modem.to_string()),
            ("detector", self.detector.to_string()),
            ("csi", self.csi.to_string()),
            ("beta_db", self.beta_db.to_string()),
            ("interp", self.interp.to_string()),
            ("n", self.n.to_string()),
            ("m", self.m.to_string()),
            ("l_max", self.resolved_l_max().to_string()),
            ("l_zp", l_zp),
            ("n_p", self.n_p.to_string()),
            ("qam", self.qam.to_string()),
            ("delta_f", self.delta_f.to_string()),
            ("carrier_hz", self.carrier_hz.to_string()),
            ("profile", self.profile.to_string()),
            ("speed_kmh", self.speed_kmh.to_string()),
            ("doppler", doppler.to_string()),
            ("discretize", discretize.to_string()),
            ("snr_db", self.snr_db.iter().map(|v| fmt_snr(*v)).collect::<Vec<_>>().join(",")),
            ("frames", self.frames.to_string()),
            ("min_frames", self.min_frames.to_string()),
            ("stop_frame_errors", self.stop_frame_errors.to_string()),
            ("batch", self.batch.to_string()),
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
            ("det_iters", self.det_iters.to_string()),
            ("relaxation", self.resolved_relaxation().to_string()),
            ("initializer", initializer.to_string()),
            ("stop_tol", self.stop_tol.to_string()),
            ("coding", self.coding.to_string()),
            ("code_path", self.code_path.display().to_string()),
            ("turbo_iters", self.turbo.max_turbo_iters.to_string()),
            ("turbo_det_iters", self.turbo.detector_iters.to_string()),
            ("decoder_iters", self.turbo.decoder_iters.to_string()),
            ("bypass_decoder", self.turbo.bypass_decoder.to_string()),
            ("interleaver_seed", self.interleaver_seed.to_string()),
            ("record_time", self.record_time.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_resolved() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.resolved_l_max(), 3);
        let p = cfg.frame_params().unwrap();
        assert_eq!((p.n, p.m, p.l_zp, p.m_p), (64, 64, 7, 60));
        assert_eq!(p.delta_f, 15e3);
        assert_eq!(p.carrier_hz, 4e9);
        assert!(std::path::Path::new(DEFAULT_CODE_PATH).exists());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = SimConfig::default();
        cfg.set("modem", "otfs").unwrap();
        cfg.set("snr_db", "0:2.5:10, inf").unwrap();
        cfg.set("csi", "estimated").unwrap();
        cfg.set("interp", "spline").unwrap();
        cfg.set("profile", "0:0,500:-3").unwrap();
        let back = SimConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back.snr_db, vec![0.0, 2.5, 5.0, 7.5, 10.0, f64::INFINITY]);
        assert_eq!(back.to_text(), cfg.to_text());
    }

    #[test]
    fn errors_are_collected() {
        let text = "modem = qpsk\nframes = many\nnot a pair\nbogus = 1\n# fine\nseed = 3";
        match SimConfig::from_text(text) {
            Err(Error::Config(v)) => {
                assert_eq!(v.len(), 4, "{v:?}");
                assert!(v[0].starts_with("line 1"));
                assert!(v[3].contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_combinations() {
        let mut cfg = SimConfig::default();
        cfg.modem = ModemKind::Ofdm;
        cfg.csi = CsiKind::Estimated;
        cfg.l_max = Some(1);
        let v = cfg.violations();
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v[0].contains("delay spread"));
        cfg.n = 48;
        assert!(cfg.violations()[0].contains("power of two"));
        cfg = SimConfig::default();
        cfg.coding = CodingKind::Ldpc;
        cfg.detector = DetectorKind::SingleTap;
        assert_eq!(cfg.violations().len(), 1);
    }

    #[test]
    fn keywords() {
        assert_eq!("GS".parse::<DetectorKind>().unwrap(), DetectorKind::GsIterative);
        assert_eq!(DetectorKind::SingleTap.to_string(), "single_tap");
        assert!("lte".parse::<ModemKind>().unwrap_err().contains("otsm"));
    }
}
