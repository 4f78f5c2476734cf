use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wavetrack::harness::plot::{write_sweep_figures, write_trace_figures};
use wavetrack::harness::trial::default_cell;
use wavetrack::harness::{
    calibrate, run_trial_with, sweep, write_sweep_csv, ExperimentConfig, TrackingArms,
};
use wavetrack::wave::{WaveModel, ASCR_DURATION_S, ASCR_FRAME_RATE_HZ};
use wavetrack::Result;

/// Water-air optical link simulator with MEMS beam tracking.
#[derive(Debug, Parser)]
#[command(name = "wavetrack", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Tracking {
    On,
    Off,
    Both,
}

impl From<Tracking> for TrackingArms {
    fn from(t: Tracking) -> Self {
        match t {
            Tracking::On => TrackingArms::On,
            Tracking::Off => TrackingArms::Off,
            Tracking::Both => TrackingArms::Both,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial at the first point of every sweep axis.
    Simulate {
        #[arg(long, value_enum, default_value = "on")]
        tracking: Tracking,
    },
    /// Run the full grid and write sweep.csv plus figures.
    Sweep {
        #[arg(long, value_enum, default_value = "both")]
        tracking: Tracking,
    },
    /// Fit the peak SNR and ASCR frequency scales; write calibrated.toml.
    Calibrate,
    /// Measure the ASCR of a wave preset (or the configured wave).
    Ascr {
        /// flat, mild or paper-wave.
        #[arg(long)]
        preset: Option<String>,
        /// Measurement abscissa (m).
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        /// Recording length (s).
        #[arg(long, default_value_t = ASCR_DURATION_S)]
        duration: f64,
        /// Frame rate (Hz).
        #[arg(long, default_value_t = ASCR_FRAME_RATE_HZ)]
        frame_rate: f64,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

fn log(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn simulate(cfg: &ExperimentConfig, common: &Common, tracking: Tracking) -> Result<()> {
    cfg.validate()?;
    let budget = cfg.link_budget()?;
    let arms = TrackingArms::from(tracking);
    let mut outputs = Vec::new();
    for &on in arms.arms() {
        let (cell, wave) = default_cell(cfg, on)?;
        let out = run_trial_with(cfg, &wave, &budget, cell, cfg.seed)?;
        if !common.quiet {
            println!("# tracking {}", if on { "on" } else { "off" });
            println!("{}", out.result.to_text());
        }
        outputs.push((on, out));
    }
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir)?;
        for (on, out) in &outputs {
            let name = format!("trace_{}.csv", if *on { "on" } else { "off" });
            out.trace.write_csv(fs::File::create(dir.join(&name))?)?;
            log(common.quiet, format!("wrote {}", dir.join(name).display()));
        }
        let traces: Vec<_> = outputs.iter().map(|(on, o)| (*on, &o.trace)).collect();
        for f in write_trace_figures(&traces, dir)? {
            log(common.quiet, format!("wrote {}", dir.join(f).display()));
        }
    }
    Ok(())
}

fn run_sweep(cfg: &ExperimentConfig, quiet: bool, tracking: Tracking) -> Result<()> {
    let start = Instant::now();
    let rows = sweep(cfg, tracking.into())?;
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("sweep.csv");
    write_sweep_csv(&rows, fs::File::create(&csv_path)?)?;
    log(
        quiet,
        format!(
            "{} rows in {:.1?}, wrote {}",
            rows.len(),
            start.elapsed(),
            csv_path.display()
        ),
    );
    for f in write_sweep_figures(&rows, dir)? {
        log(quiet, format!("wrote {}", dir.join(f).display()));
    }
    Ok(())
}

fn run_calibrate(cfg: &ExperimentConfig, quiet: bool) -> Result<()> {
    let (calibrated, report) = calibrate(cfg)?;
    if !quiet {
        print!("{report}");
    }
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    let path = dir.join("calibrated.toml");
    fs::write(&path, calibrated.to_toml())?;
    log(quiet, format!("wrote {}", path.display()));
    Ok(())
}

fn run_ascr(
    cfg: &ExperimentConfig,
    quiet: bool,
    preset: Option<&str>,
    x: f64,
    duration: f64,
    frame_rate: f64,
) -> Result<()> {
    let wave = match preset {
        Some(name) => WaveModel::preset(name)?,
        None => cfg.wave.base_model()?,
    };
    let ascr = wave.ascr_estimate(x, duration, frame_rate)?;
    if !quiet {
        println!(
            "{} ascr = {ascr:.6} rad/s (x {x} m, {duration} s at {frame_rate} Hz)",
            wave.label
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(&cli.common).and_then(|cfg| match &cli.command {
        Command::Simulate { tracking } => simulate(&cfg, &cli.common, *tracking),
        Command::Sweep { tracking } => run_sweep(&cfg, cli.common.quiet, *tracking),
        Command::Calibrate => run_calibrate(&cfg, cli.common.quiet),
        Command::Ascr {
            preset,
            x,
            duration,
            frame_rate,
        } => run_ascr(
            &cfg,
            cli.common.quiet,
            preset.as_deref(),
            *x,
            *duration,
            *frame_rate,
        ),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
