//! A single trial: closed-loop run over the packet schedule, then per-packet
//! BER and the trial aggregates.

use serde::Serialize;

use crate::error::Result;
use crate::link::{self, LinkBudget, Modulation, PacketResult, PacketWindow};
use crate::rng::RngStream;
use crate::tracker::{closed_loop_run, TraceLog};
use crate::wave::WaveModel;

use super::config::ExperimentConfig;

const NOISE_STREAM: u64 = 0;
const SCHEDULE_STREAM: u64 = 1;

/// One point of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub modulation: Modulation,
    pub symbol_rate: f64,
    /// Target (or measured, for uncalibrated waves) ASCR.
    pub ascr: f64,
    pub h_air: f64,
    pub tracking: bool,
}

/// Seconds spent in each tracker mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeOccupancy {
    pub idle_s: f64,
    pub tracking_s: f64,
    pub lost_s: f64,
}

impl ModeOccupancy {
    pub fn total(&self) -> f64 {
        self.idle_s + self.tracking_s + self.lost_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub modulation: String,
    pub symbol_rate_baud: f64,
    pub ascr_rad_s: f64,
    pub h_air_m: f64,
    pub tracking: bool,
    pub seed: u64,
    pub packets: usize,
    pub duration_s: f64,
    pub snr_peak: f64,
    pub avg_ber: f64,
    pub plr: f64,
    pub throughput_bps: f64,
    pub mean_capture: f64,
    pub min_capture: f64,
    pub offset_std_x_m: f64,
    pub offset_std_y_m: f64,
    pub occupancy: ModeOccupancy,
}

impl RunResult {
    /// Structured text form (TOML).
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("run result serializes")
    }
}

/// Packet start times. Back to back when the interval does not exceed a
/// packet; otherwise each packet starts at a uniformly drawn point within its
/// own interval slot.
pub fn packet_schedule(
    packets: usize,
    packet_duration: f64,
    interval: f64,
    rng: &mut RngStream,
) -> (Vec<PacketWindow>, f64) {
    if interval <= packet_duration {
        let windows = (0..packets)
            .map(|k| PacketWindow {
                start: k as f64 * packet_duration,
                duration: packet_duration,
            })
            .collect();
        return (windows, packets as f64 * packet_duration);
    }
    let slack = interval - packet_duration;
    let windows = (0..packets)
        .map(|k| PacketWindow {
            start: k as f64 * interval + rng.uniform() * slack,
            duration: packet_duration,
        })
        .collect();
    (windows, packets as f64 * interval)
}

fn std_dev(values: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for v in values.filter(|v| v.is_finite()) {
        n += 1;
        let d = v - mean;
        mean += d / n as f64;
        m2 += d * (v - mean);
    }
    if n < 2 {
        0.0
    } else {
        (m2 / n as f64).sqrt()
    }
}

/// Everything a trial produces, including the raw trace.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub result: RunResult,
    pub trace: TraceLog,
    pub packets: Vec<PacketResult>,
}

/// Runs one trial. `wave` must already carry the cell's ASCR.
pub fn run_trial_with(
    config: &ExperimentConfig,
    wave: &WaveModel,
    budget: &LinkBudget,
    cell: Cell,
    seed: u64,
) -> Result<TrialOutput> {
    let geometry = config.geometry.with_h_air(cell.h_air);
    let mut tracker = config.tracker;
    tracker.enabled = cell.tracking;

    let master = RngStream::new(seed, 0);
    let mut noise = master.split(NOISE_STREAM);
    let mut schedule_rng = master.split(SCHEDULE_STREAM);

    let packet_duration = config.link.symbols_per_packet as f64 / cell.symbol_rate;
    let (windows, duration) = packet_schedule(
        config.link.packets_per_trial,
        packet_duration,
        config.link.packet_interval,
        &mut schedule_rng,
    );

    let trace = closed_loop_run(
        wave,
        &geometry,
        &config.detector,
        &tracker,
        duration,
        &mut noise,
    )?;
    let captures: Vec<f64> = trace.samples.iter().map(|s| s.capture).collect();
    let packets = windows
        .iter()
        .map(|&w| {
            link::packet_ber(
                &captures,
                trace.tick,
                w,
                budget,
                cell.symbol_rate,
                cell.modulation,
                config.link.fec_limit,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = link::aggregate(&packets, cell.symbol_rate, cell.modulation)?;

    let n = captures.len() as f64;
    let mean_capture = captures.iter().sum::<f64>() / n;
    let min_capture = captures.iter().copied().fold(f64::INFINITY, f64::min);
    let (idle_s, tracking_s, lost_s) = trace.mode_occupancy();

    let result = RunResult {
        modulation: cell.modulation.name().to_string(),
        symbol_rate_baud: cell.symbol_rate,
        ascr_rad_s: cell.ascr,
        h_air_m: cell.h_air,
        tracking: cell.tracking,
        seed,
        packets: packets.len(),
        duration_s: trace.duration(),
        snr_peak: budget.snr_peak,
        avg_ber: summary.avg_ber,
        plr: summary.plr,
        throughput_bps: summary.throughput_bps,
        mean_capture,
        min_capture,
        offset_std_x_m: std_dev(trace.samples.iter().map(|s| s.offset.x)),
        offset_std_y_m: std_dev(trace.samples.iter().map(|s| s.offset.y)),
        occupancy: ModeOccupancy {
            idle_s,
            tracking_s,
            lost_s,
        },
    };
    Ok(TrialOutput {
        result,
        trace,
        packets,
    })
}

/// Resolves the wave for an ASCR target (`None` keeps the declared wave).
pub fn wave_for(config: &ExperimentConfig, ascr: Option<f64>) -> Result<(WaveModel, f64)> {
    let base = config.wave.base_model()?;
    match ascr {
        Some(target) => Ok((base.calibrate_to_ascr(target, config.geometry.x0)?, target)),
        None => {
            let measured = base.ascr(config.geometry.x0)?;
            Ok((base, measured))
        }
    }
}

/// The trial described by the first entry of every sweep axis.
pub fn default_cell(config: &ExperimentConfig, tracking: bool) -> Result<(Cell, WaveModel)> {
    let ascr_target = config.ascr_targets()[0];
    let (wave, ascr) = wave_for(config, ascr_target)?;
    let cell = Cell {
        modulation: config.modulations()[0],
        symbol_rate: config.sweep.symbol_rates[0],
        ascr,
        h_air: config.sweep.h_air[0],
        tracking,
    };
    Ok((cell, wave))
}

/// Validates the config, resolves wave and link budget, and runs one trial.
pub fn run_trial(
    config: &ExperimentConfig,
    cell: Cell,
    wave: &WaveModel,
    seed: u64,
) -> Result<RunResult> {
    config.validate()?;
    let budget = config.link_budget()?;
    Ok(run_trial_with(config, wave, &budget, cell, seed)?.result)
}
