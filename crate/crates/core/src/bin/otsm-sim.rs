//! Command-line front end for the OTSM link simulator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use otsm::harness::{compare, run_selftest, to_csv, SimConfig, Simulation};

#[derive(Parser)]
#[command(name = "otsm-sim", version, about = "Monte-Carlo BER/FER simulation of OTSM and baseline modems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scheme over an SNR sweep.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// Simulate several schemes on the same channel realizations.
    Compare {
        /// One configuration file per scheme.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        /// Applied to every scheme.
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fast internal consistency checks.
    Selftest,
}

#[derive(Args, Default)]
struct Overrides {
    /// SNR points in dB, e.g. `0,5,10` or `0:2.5:20`.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// otsm, otfs, ofdm or sc.
    #[arg(long)]
    modem: Option<String>,
    /// gs_iterative or single_tap.
    #[arg(long)]
    detector: Option<String>,
    /// perfect or estimated.
    #[arg(long)]
    csi: Option<String>,
    #[arg(long)]
    speed_kmh: Option<f64>,
    #[arg(long)]
    beta_db: Option<f64>,
    /// linear or spline.
    #[arg(long)]
    interp: Option<String>,
    /// Any other key, `--set key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = [
            ("snr_db", self.snr.clone()),
            ("frames", self.frames.map(|x| x.to_string())),
            ("seed", self.seed.map(|x| x.to_string())),
            ("modem", self.modem.clone()),
            ("detector", self.detector.clone()),
            ("csi", self.csi.clone()),
            ("speed_kmh", self.speed_kmh.map(|x| x.to_string())),
            ("beta_db", self.beta_db.map(|x| x.to_string())),
            ("interp", self.interp.clone()),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect();
        for kv in &self.set {
            match kv.split_once('=') {
                Some((k, val)) => v.push((k.trim().to_string(), val.trim().to_string())),
                None => v.push((kv.clone(), String::new())),
            }
        }
        v
    }

    fn apply(&self, cfg: &mut SimConfig) -> Vec<String> {
        self.pairs()
            .into_iter()
            .filter_map(|(k, v)| cfg.set(&k, &v).err().map(|e| format!("override {k}: {e}")))
            .collect()
    }
}

fn load(path: Option<&Path>, overrides: &Overrides) -> Result<SimConfig, Vec<String>> {
    let mut cfg = match path {
        Some(p) => SimConfig::from_file(p).map_err(|e| vec![format!("{}: {e}", p.display())])?,
        None => SimConfig::default(),
    };
    let mut errors = overrides.apply(&mut cfg);
    errors.extend(cfg.violations());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fail(errors: &[String]) -> ExitCode {
    for e in errors {
        eprintln!("error: {e}");
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            overrides,
            out,
            dry_run,
        } => {
            let cfg = match load(config.as_deref(), &overrides) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if dry_run {
                print!("{}", cfg.to_text());
                return ExitCode::SUCCESS;
            }
            let result = Simulation::new(cfg.clone()).and_then(|s| s.run());
            match result {
                Ok(r) => match emit(out.as_deref(), &to_csv(&cfg, &r)) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(&[e.to_string()]),
                },
                Err(e) => fail(&[e.to_string()]),
            }
        }
        Command::Compare {
            configs,
            overrides,
            out,
        } => {
            let mut loaded = Vec::new();
            let mut errors = Vec::new();
            for p in &configs {
                match load(Some(p), &overrides) {
                    Ok(c) => loaded.push(c),
                    Err(e) => errors.extend(e.into_iter().map(|m| format!("{}: {m}", p.display()))),
                }
            }
            if !errors.is_empty() {
                return fail(&errors);
            }
            match compare(&loaded) {
                Ok(c) => match emit(out.as_deref(), &c.to_csv()) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(&[e.to_string()]),
                },
                Err(e) => fail(&[e.to_string()]),
            }
        }
        Command::Selftest => {
            let checks = run_selftest();
            let mut ok = true;
            for c in &checks {
                println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
