//! Grid orchestration: Cartesian product of the sweep axes, each cell run
//! with tracking on and off against the same seed.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::mix64;
use crate::wave::WaveModel;

use super::config::ExperimentConfig;
use super::trial::{run_trial_with, wave_for, Cell, RunResult};

pub const SWEEP_CSV_COLUMNS: [&str; 12] = [
    "modulation",
    "symbol_rate_baud",
    "ascr_rad_s",
    "h_air_m",
    "tracking",
    "avg_ber",
    "plr",
    "throughput_bps",
    "mean_capture",
    "offset_std_x_m",
    "offset_std_y_m",
    "seed",
];

/// Which tracking arms to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrackingArms {
    On,
    Off,
    #[default]
    Both,
}

impl TrackingArms {
    pub fn arms(&self) -> &'static [bool] {
        match self {
            TrackingArms::On => &[true],
            TrackingArms::Off => &[false],
            TrackingArms::Both => &[true, false],
        }
    }
}

/// Seed for the cell at the given axis indices:
/// `master ^ h`, `h = mix64(mix64(mix64(mix64(i_mod) ^ i_rate) ^ i_ascr) ^ i_h)`.
/// Both tracking arms of a cell share it.
pub fn cell_seed(master: u64, indices: [usize; 4]) -> u64 {
    let mut h = 0u64;
    for i in indices {
        h = mix64(h ^ i as u64);
    }
    master ^ h
}

#[derive(Debug, Clone)]
struct PlannedCell {
    indices: [usize; 4],
    cell: Cell,
    seed: u64,
}

pub fn sweep(config: &ExperimentConfig, arms: TrackingArms) -> Result<Vec<RunResult>> {
    config.validate()?;
    let budget = config.link_budget()?;
    let modulations = config.modulations();

    let targets = config.ascr_targets();
    let waves: Vec<(WaveModel, f64)> = targets
        .iter()
        .map(|&t| wave_for(config, t))
        .collect::<Result<_>>()?;

    let mut plan = Vec::new();
    for (im, &modulation) in modulations.iter().enumerate() {
        for (ir, &symbol_rate) in config.sweep.symbol_rates.iter().enumerate() {
            for (ia, (_, ascr)) in waves.iter().enumerate() {
                for (ih, &h_air) in config.sweep.h_air.iter().enumerate() {
                    let indices = [im, ir, ia, ih];
                    let seed = cell_seed(config.seed, indices);
                    for &tracking in arms.arms() {
                        plan.push(PlannedCell {
                            indices,
                            cell: Cell {
                                modulation,
                                symbol_rate,
                                ascr: *ascr,
                                h_air,
                                tracking,
                            },
                            seed,
                        });
                    }
                }
            }
        }
    }

    plan.par_iter()
        .map(|p| {
            let wave = &waves[p.indices[2]].0;
            run_trial_with(config, wave, &budget, p.cell, p.seed)
                .map(|o| o.result)
                .map_err(|e| Error::Cell {
                    cell: format!(
                        "{} @ {} Bd, ascr {} rad/s, h_air {} m, tracking {}",
                        p.cell.modulation,
                        p.cell.symbol_rate,
                        p.cell.ascr,
                        p.cell.h_air,
                        if p.cell.tracking { "on" } else { "off" }
                    ),
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Header line preceding the CSV table.
pub fn version_header() -> String {
    format!("# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

pub fn write_sweep_csv<W: Write>(rows: &[RunResult], mut out: W) -> Result<()> {
    writeln!(out, "{}", version_header())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.modulation.clone(),
            r.symbol_rate_baud.to_string(),
            r.ascr_rad_s.to_string(),
            r.h_air_m.to_string(),
            if r.tracking { "on" } else { "off" }.to_string(),
            r.avg_ber.to_string(),
            r.plr.to_string(),
            r.throughput_bps.to_string(),
            r.mean_capture.to_string(),
            r.offset_std_x_m.to_string(),
            r.offset_std_y_m.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
