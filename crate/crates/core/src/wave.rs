//! Water surface model: a sum of sinusoids travelling along x, its analytic
//! slope angle, and the average slope changing rate (ASCR) used to grade wave
//! severity.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ASCR measurement window (seconds).
pub const ASCR_DURATION_S: f64 = 60.0;
/// Default ASCR frame rate (frames per second).
pub const ASCR_FRAME_RATE_HZ: f64 = 240.0;

const SCALE_MIN: f64 = 1e-3;
const SCALE_MAX: f64 = 1e3;
const CALIBRATION_REL_TOL: f64 = 1e-4;

/// One sinusoid `A sin(k x - w t + phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveComponent {
    pub amplitude: f64,
    pub wavenumber: f64,
    pub angular_frequency: f64,
    pub phase: f64,
}

impl WaveComponent {
    pub fn new(
        amplitude: f64,
        wavenumber: f64,
        angular_frequency: f64,
        phase: f64,
    ) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid(format!(
                "amplitude must be >= 0, got {amplitude}"
            )));
        }
        if !(wavenumber.is_finite() && wavenumber > 0.0) {
            return Err(Error::invalid(format!(
                "wavenumber must be > 0, got {wavenumber}"
            )));
        }
        if !(angular_frequency.is_finite() && angular_frequency >= 0.0) {
            return Err(Error::invalid(format!(
                "angular frequency must be >= 0, got {angular_frequency}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phase must be finite"));
        }
        Ok(Self {
            amplitude,
            wavenumber,
            angular_frequency,
            phase: normalize_phase(phase),
        })
    }

    #[inline]
    fn argument(&self, x: f64, t: f64) -> f64 {
        self.wavenumber * x - self.angular_frequency * t + self.phase
    }

    /// Peak surface slope `A k`.
    pub fn peak_slope(&self) -> f64 {
        self.amplitude * self.wavenumber
    }
}

fn normalize_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if p >= TAU {
        0.0
    } else {
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveModel {
    pub label: String,
    pub components: Vec<WaveComponent>,
}

impl WaveModel {
    pub fn new(label: impl Into<String>, components: Vec<WaveComponent>) -> Self {
        Self {
            label: label.into(),
            components,
        }
    }

    pub fn flat() -> Self {
        Self::new("flat", Vec::new())
    }

    /// Single gentle swell, roughly 0.1 rad/s ASCR.
    pub fn mild() -> Self {
        Self::new(
            "mild",
            vec![WaveComponent {
                amplitude: 0.5e-3,
                wavenumber: 10.5,
                angular_frequency: 30.0,
                phase: 0.0,
            }],
        )
    }

    /// Three-component tank wave whose frequencies are pre-scaled so that the
    /// ASCR at x = 0 is 0.34 rad/s.
    pub fn paper_wave() -> Self {
        Self::new("paper-wave", PAPER_WAVE.to_vec())
    }

    /// Looks up a named preset: `flat`, `mild` or `paper-wave`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "flat" => Ok(Self::flat()),
            "mild" => Ok(Self::mild()),
            "paper-wave" => Ok(Self::paper_wave()),
            other => Err(Error::invalid(format!(
                "unknown wave preset `{other}` (expected flat, mild or paper-wave)"
            ))),
        }
    }

    pub fn is_flat(&self) -> bool {
        self.components.is_empty()
    }

    pub fn surface_height(&self, x: f64, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.components
            .iter()
            .map(|c| c.amplitude * c.argument(x, t).sin())
            .sum()
    }

    /// Analytic spatial derivative of the surface height.
    pub fn slope(&self, x: f64, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.components
            .iter()
            .map(|c| c.amplitude * c.wavenumber * c.argument(x, t).cos())
            .sum()
    }

    /// Slope angle `atan(df/dx)`, in (-pi/2, pi/2).
    pub fn slope_angle(&self, x: f64, t: f64) -> f64 {
        self.slope(x, t).atan()
    }

    /// Frame-difference ASCR estimate at `x`: the slope angle is sampled at
    /// `floor(duration * frame_rate)` frame instants and the mean of
    /// `|delta gamma| * frame_rate` over adjacent pairs is returned.
    pub fn ascr_estimate(&self, x: f64, duration: f64, frame_rate: f64) -> Result<f64> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid(format!(
                "duration must be > 0, got {duration}"
            )));
        }
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "frame rate must be > 0, got {frame_rate}"
            )));
        }
        // tolerate 60 * 240 landing a hair under an integer
        let frames = (duration * frame_rate * (1.0 + 1e-12)).floor();
        if frames < 2.0 {
            return Err(Error::invalid(format!(
                "ASCR needs at least 2 frames, duration x frame rate gives {frames}"
            )));
        }
        let frames = frames as usize;
        if self.is_flat() {
            return Ok(0.0);
        }
        let mut prev = self.slope_angle(x, 0.0);
        let mut total = 0.0;
        for k in 1..frames {
            let g = self.slope_angle(x, k as f64 / frame_rate);
            total += (g - prev).abs();
            prev = g;
        }
        Ok(total * frame_rate / (frames - 1) as f64)
    }

    /// ASCR with the default 60 s / 240 Hz window.
    pub fn ascr(&self, x: f64) -> Result<f64> {
        self.ascr_estimate(x, ASCR_DURATION_S, ASCR_FRAME_RATE_HZ)
    }

    /// Same surface with every angular frequency multiplied by `factor`.
    pub fn with_frequency_scale(&self, factor: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| WaveComponent {
                angular_frequency: c.angular_frequency * factor,
                ..*c
            })
            .collect();
        Self::new(self.label.clone(), components)
    }

    /// Same surface with `offset` added to every component phase.
    pub fn with_phase_shift(&self, offset: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| WaveComponent {
                phase: normalize_phase(c.phase + offset),
                ..*c
            })
            .collect();
        Self::new(self.label.clone(), components)
    }

    /// Finds the common frequency scale factor that brings the default-window
    /// ASCR at `x` to `target`. The search brackets outward from 1 by
    /// doubling/halving, then bisects in log space.
    pub fn ascr_scale_factor(&self, target: f64, x: f64) -> Result<f64> {
        if !(target > 0.0 && target.is_finite()) {
            return Err(Error::invalid(format!(
                "target ASCR must be > 0, got {target}"
            )));
        }
        if !self
            .components
            .iter()
            .any(|c| c.angular_frequency > 0.0 && c.amplitude > 0.0)
        {
            return Err(Error::invalid(
                "calibration needs at least one moving component (angular frequency > 0)",
            ));
        }
        let residual =
            |s: f64| -> Result<f64> { Ok(self.with_frequency_scale(s).ascr(x)? - target) };

        let r1 = residual(1.0)?;
        if r1.abs() <= CALIBRATION_REL_TOL * target {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (1.0_f64, 1.0_f64);
        if r1 < 0.0 {
            loop {
                lo = hi;
                hi *= 2.0;
                if hi > SCALE_MAX {
                    return Err(unreachable_target(
                        target,
                        SCALE_MAX,
                        residual(SCALE_MAX)? + target,
                    ));
                }
                if residual(hi)? >= 0.0 {
                    break;
                }
            }
        } else {
            loop {
                hi = lo;
                lo *= 0.5;
                if lo < SCALE_MIN {
                    return Err(unreachable_target(
                        target,
                        SCALE_MIN,
                        residual(SCALE_MIN)? + target,
                    ));
                }
                if residual(lo)? <= 0.0 {
                    break;
                }
            }
        }

        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            let r = residual(mid)?;
            if r.abs() <= CALIBRATION_REL_TOL * target {
                return Ok(mid);
            }
            if r < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }

    /// Returns the model with all frequencies scaled so its ASCR at `x`
    /// matches `target`.
    pub fn calibrate_to_ascr(&self, target: f64, x: f64) -> Result<Self> {
        let factor = self.ascr_scale_factor(target, x)?;
        Ok(self.with_frequency_scale(factor))
    }

    /// Largest |slope angle| the model can reach.
    pub fn max_slope_angle(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.peak_slope())
            .sum::<f64>()
            .atan()
    }
}

fn unreachable_target(target: f64, bound: f64, reached: f64) -> Error {
    Error::Calibration(format!(
        "ASCR target {target} rad/s unreachable: scale bound {bound} gives {reached:.6} rad/s"
    ))
}

/// Analytic ASCR of a single sinusoid in the continuous limit:
/// the slope angle sweeps `4 atan(A k)` per period.
pub fn single_component_ascr(c: &WaveComponent) -> f64 {
    2.0 / PI * c.angular_frequency * c.peak_slope().atan()
}

// Frequencies already carry the calibration factor for 0.34 rad/s at x = 0
// and sit close to deep-water dispersion (w^2 / k ~ 9 m/s^2).
const PAPER_WAVE: [WaveComponent; 3] = [
    WaveComponent {
        amplitude: 3.0e-3,
        wavenumber: 10.5,
        angular_frequency: 9.555,
        phase: 0.0,
    },
    WaveComponent {
        amplitude: 1.2e-3,
        wavenumber: 21.0,
        angular_frequency: 13.759,
        phase: 1.1,
    },
    WaveComponent {
        amplitude: 0.45e-3,
        wavenumber: 42.0,
        angular_frequency: 19.397,
        phase: 2.3,
    },
];
