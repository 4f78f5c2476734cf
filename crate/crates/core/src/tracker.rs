//! Beam-tracking controller and MEMS mirror model.
//!
//! The controller is a three-mode state machine driven by PD-array readings:
//!
//! | mode     | reading                         | next mode | mirror              |
//! |----------|---------------------------------|-----------|---------------------|
//! | Idle     | center >= a                     | Idle      | hold                |
//! | Idle     | center < a                      | Tracking  | as Tracking below   |
//! | Tracking | max >= b, argmax off center     | Tracking  | one step per axis   |
//! | Tracking | max >= b, argmax center, c >= a | Idle      | hold                |
//! | Tracking | max >= b, argmax center, c < a  | Tracking  | hold                |
//! | Tracking | max < b, misses < 5             | Tracking  | hold                |
//! | Tracking | max < b, 5th consecutive miss   | Lost      | reset to (0, 0)     |
//! | Lost     | max < b                         | Lost      | hold                |
//! | Lost     | max >= b                        | Tracking  | as Tracking above   |
//!
//! Step direction: the array sees the receiver offset point-reflected, so a
//! spot in column 2 (+x on the array) means the beam landed on the -x side
//! and the x tilt is increased; likewise row 0 (+y) increases the y tilt.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::detector::{locate_max, DetectorConfig, PdArray, PdArrayReading};
use crate::error::{Error, Result};
use crate::optics::{self, AxisAngles, LinkGeometry, SpotOffset};
use crate::rng::RngStream;
use crate::wave::WaveModel;

/// Consecutive sub-threshold readings that declare the spot lost.
pub const LOST_AFTER_MISSES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrackerMode {
    Idle,
    Tracking,
    Lost,
}

impl TrackerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackerMode::Idle => "idle",
            TrackerMode::Tracking => "tracking",
            TrackerMode::Lost => "lost",
        }
    }
}

/// Bipolar DAC driving one mirror axis. Codes run over
/// `-(2^(bits-1) - 1) ..= 2^(bits-1) - 1`, so the grid is symmetric, contains
/// zero, and its end points are exactly `+-max_tilt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorModel {
    pub max_tilt: f64,
    pub dac_bits: u32,
}

impl Default for MirrorModel {
    fn default() -> Self {
        Self {
            max_tilt: 5f64.to_radians(),
            dac_bits: 16,
        }
    }
}

impl MirrorModel {
    pub fn max_code(&self) -> i32 {
        (1i32 << (self.dac_bits - 1)) - 1
    }

    pub fn lsb(&self) -> f64 {
        self.max_tilt / self.max_code() as f64
    }

    pub fn tilt(&self, code: i32) -> f64 {
        code as f64 * self.lsb()
    }

    /// Nearest code to `angle` after clamping to the range.
    pub fn quantize(&self, angle: f64) -> i32 {
        let max = self.max_code();
        let code = (angle / self.lsb()).round();
        if code.is_nan() {
            return 0;
        }
        code.clamp(-(max as f64), max as f64) as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorState {
    pub model: MirrorModel,
    pub code_x: i32,
    pub code_y: i32,
}

impl MirrorState {
    /// Mirror at its initial (zero-tilt) point.
    pub fn initial(model: MirrorModel) -> Self {
        Self {
            model,
            code_x: 0,
            code_y: 0,
        }
    }

    pub fn at(model: MirrorModel, tilt_x: f64, tilt_y: f64) -> Self {
        Self {
            model,
            code_x: model.quantize(tilt_x),
            code_y: model.quantize(tilt_y),
        }
    }

    pub fn tilt_x(&self) -> f64 {
        self.model.tilt(self.code_x)
    }

    pub fn tilt_y(&self) -> f64 {
        self.model.tilt(self.code_y)
    }

    pub fn tilt(&self) -> AxisAngles {
        AxisAngles::new(self.tilt_x(), self.tilt_y())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MirrorCommand {
    Hold,
    /// Relative tilt change per axis (radians).
    Step {
        dx: f64,
        dy: f64,
    },
    /// Return to the initial point.
    Reset,
}

/// Applies a command: clamp to the range, then round to the DAC grid.
pub fn apply_tilt(mirror: MirrorState, command: MirrorCommand) -> MirrorState {
    match command {
        MirrorCommand::Hold => mirror,
        MirrorCommand::Reset => MirrorState::initial(mirror.model),
        MirrorCommand::Step { dx, dy } => {
            let m = mirror.model;
            let max = m.max_tilt;
            MirrorState {
                model: m,
                code_x: m.quantize((mirror.tilt_x() + dx).clamp(-max, max)),
                code_y: m.quantize((mirror.tilt_y() + dy).clamp(-max, max)),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerParams {
    pub enabled: bool,
    /// Trigger threshold on the center PD.
    pub threshold_a: f64,
    /// Presence threshold on the brightest PD.
    pub threshold_b: f64,
    /// Tilt increment per control tick (radians).
    pub step: f64,
    pub control_rate: f64,
    pub max_tilt: f64,
    pub dac_bits: u32,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            enabled: true,
            threshold_a: 0.5,
            threshold_b: 0.1,
            step: 0.08e-3,
            control_rate: 1000.0,
            max_tilt: 5f64.to_radians(),
            dac_bits: 16,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_b > 0.0 && self.threshold_b.is_finite()) {
            return Err(Error::config("tracker.threshold_b", "must be > 0"));
        }
        if !(self.threshold_a > self.threshold_b && self.threshold_a.is_finite()) {
            return Err(Error::config(
                "tracker.threshold_a",
                "must exceed threshold_b",
            ));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("tracker.step", "must be > 0"));
        }
        if !(self.control_rate > 0.0 && self.control_rate.is_finite()) {
            return Err(Error::config("tracker.control_rate", "must be > 0"));
        }
        if !(self.max_tilt > 0.0 && self.max_tilt < std::f64::consts::FRAC_PI_4) {
            return Err(Error::config("tracker.max_tilt", "must be in (0, pi/4)"));
        }
        if !(2..=24).contains(&self.dac_bits) {
            return Err(Error::config("tracker.dac_bits", "must be in 2..=24"));
        }
        Ok(())
    }

    pub fn mirror_model(&self) -> MirrorModel {
        MirrorModel {
            max_tilt: self.max_tilt,
            dac_bits: self.dac_bits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerState {
    pub mode: TrackerMode,
    pub mirror: MirrorState,
    pub miss_count: u32,
    pub threshold_a: f64,
    pub threshold_b: f64,
    pub step: f64,
}

impl TrackerState {
    pub fn new(params: &TrackerParams) -> Self {
        Self {
            mode: TrackerMode::Idle,
            mirror: MirrorState::initial(params.mirror_model()),
            miss_count: 0,
            threshold_a: params.threshold_a,
            threshold_b: params.threshold_b,
            step: params.step,
        }
    }

    /// One controller decision for the current reading. The returned state
    /// still carries the old mirror; feed the command to [`apply_tilt`].
    pub fn control_step(&self, reading: &PdArrayReading) -> (TrackerState, MirrorCommand) {
        match self.mode {
            TrackerMode::Idle if reading.center() >= self.threshold_a => {
                (*self, MirrorCommand::Hold)
            }
            TrackerMode::Idle => self.track(reading),
            TrackerMode::Tracking => self.track(reading),
            TrackerMode::Lost => {
                if reading.max() >= self.threshold_b {
                    TrackerState {
                        mode: TrackerMode::Tracking,
                        miss_count: 0,
                        ..*self
                    }
                    .track(reading)
                } else {
                    (*self, MirrorCommand::Hold)
                }
            }
        }
    }

    fn track(&self, reading: &PdArrayReading) -> (TrackerState, MirrorCommand) {
        let (r, c) = locate_max(reading);
        let peak = reading.intensities[r][c];
        if peak >= self.threshold_b {
            let mut next = TrackerState {
                mode: TrackerMode::Tracking,
                miss_count: 0,
                ..*self
            };
            if (r, c) == (1, 1) {
                if reading.center() >= self.threshold_a {
                    next.mode = TrackerMode::Idle;
                }
                return (next, MirrorCommand::Hold);
            }
            let dx = (c as f64 - 1.0) * self.step;
            let dy = (1.0 - r as f64) * self.step;
            return (next, MirrorCommand::Step { dx, dy });
        }
        let misses = self.miss_count + 1;
        if misses >= LOST_AFTER_MISSES {
            let next = TrackerState {
                mode: TrackerMode::Lost,
                miss_count: LOST_AFTER_MISSES,
                ..*self
            };
            (next, MirrorCommand::Reset)
        } else {
            let next = TrackerState {
                mode: TrackerMode::Tracking,
                miss_count: misses,
                ..*self
            };
            (next, MirrorCommand::Hold)
        }
    }

    /// Decision plus mirror update in one call.
    pub fn advance(&self, reading: &PdArrayReading) -> (TrackerState, MirrorCommand) {
        let (mut next, cmd) = self.control_step(reading);
        next.mirror = apply_tilt(next.mirror, cmd);
        (next, cmd)
    }
}

/// State recorded for one control tick. Optical quantities are those in force
/// during `[t, t + 1/control_rate)`; the mirror update computed on this tick
/// applies from the next one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub gamma: f64,
    /// Receiver-plane offset; NaN when the forward beam undergoes TIR.
    pub offset: SpotOffset,
    pub capture: f64,
    pub mode: TrackerMode,
    pub tilt: AxisAngles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog {
    pub tick: f64,
    pub samples: Vec<TraceSample>,
}

pub const TRACE_CSV_HEADER: [&str; 8] = [
    "t_s",
    "gamma_rad",
    "offset_x_m",
    "offset_y_m",
    "capture_fraction",
    "mode",
    "tilt_x_rad",
    "tilt_y_rad",
];

impl TraceLog {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.tick
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_CSV_HEADER)?;
        for s in &self.samples {
            w.write_record([
                s.t.to_string(),
                s.gamma.to_string(),
                s.offset.x.to_string(),
                s.offset.y.to_string(),
                s.capture.to_string(),
                s.mode.as_str().to_string(),
                s.tilt.x.to_string(),
                s.tilt.y.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Time spent in each mode: (idle, tracking, lost) seconds.
    pub fn mode_occupancy(&self) -> (f64, f64, f64) {
        let mut n = [0usize; 3];
        for s in &self.samples {
            n[s.mode as usize] += 1;
        }
        (
            n[0] as f64 * self.tick,
            n[1] as f64 * self.tick,
            n[2] as f64 * self.tick,
        )
    }
}

/// Receiver and PD-array offsets for a given tilt and surface slope.
/// `Err` means no light reaches the array on this tick.
fn array_offset(
    tilt: AxisAngles,
    gamma: f64,
    geometry: &LinkGeometry,
) -> (Option<SpotOffset>, Result<SpotOffset>) {
    let trace = match optics::trace_beam_full(tilt, gamma, 0.0, geometry) {
        Ok(t) => t,
        Err(e) => return (None, Err(e)),
    };
    let at_ccr = optics::ccr_offset(&trace, geometry);
    let back = AxisAngles::new(2.0 * tilt.x, 2.0 * tilt.y);
    (
        Some(trace.receiver),
        optics::feedback_offset(at_ccr, geometry, back),
    )
}

/// Runs the closed loop for `duration` seconds at `params.control_rate`.
///
/// Each tick: slope angle at `x0`, forward trace with the current tilt,
/// receiver capture, then (when tracking is enabled) CCR return, PD-array
/// sample, controller decision and mirror update. Beam-lost conditions give
/// a dark reading instead of an error.
pub fn closed_loop_run(
    wave: &WaveModel,
    geometry: &LinkGeometry,
    detector: &DetectorConfig,
    params: &TrackerParams,
    duration: f64,
    rng: &mut RngStream,
) -> Result<TraceLog> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid(format!(
            "duration must be > 0, got {duration}"
        )));
    }
    if !(params.control_rate > 0.0 && params.control_rate.is_finite()) {
        return Err(Error::invalid(format!(
            "control rate must be > 0, got {}",
            params.control_rate
        )));
    }
    params.validate()?;
    geometry.validate()?;
    detector.validate()?;

    let tick = 1.0 / params.control_rate;
    let ticks = (duration * params.control_rate - 1e-9).ceil().max(1.0) as usize;
    let rx_table =
        crate::detector::CaptureTable::new(&detector.beam(), detector.rx_aperture_radius);
    let array = PdArray::new(*detector);

    let mut state = TrackerState::new(params);
    let mut samples = Vec::with_capacity(ticks);
    for k in 0..ticks {
        let t = k as f64 * tick;
        let gamma = wave.slope_angle(geometry.x0, t);
        let tilt = state.mirror.tilt();
        let (receiver, at_array) = array_offset(tilt, gamma, geometry);
        let (offset, capture) = match receiver {
            Some(o) => (o, rx_table.at(o)),
            None => (SpotOffset::new(f64::NAN, f64::NAN), 0.0),
        };
        samples.push(TraceSample {
            t,
            gamma,
            offset,
            capture,
            mode: state.mode,
            tilt,
        });
        if params.enabled {
            let reading = match at_array {
                Ok(o) => array.sample(o, t, rng),
                Err(_) => array.sample_dark(t, rng),
            };
            state = state.advance(&reading).0;
        }
    }
    Ok(TraceLog { tick, samples })
}
