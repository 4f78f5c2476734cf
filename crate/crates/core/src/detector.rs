//! Received-intensity model: Gaussian spot, aperture capture fraction, and
//! the 3x3 photodiode array used as the tracking sensor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::SpotOffset;
use crate::rng::RngStream;

/// Simpson panels for the radial capture integral.
const RADIAL_PANELS: usize = 256;
/// Integrand is below exp(-40) further than this many sigmas from the centroid.
const TAIL_SIGMAS: f64 = 9.0;
/// Table resolution as a fraction of min(sigma, aperture radius).
const TABLE_STEPS_PER_SCALE: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamProfile {
    /// 1/e^2 intensity diameter.
    pub diameter: f64,
}

impl BeamProfile {
    pub fn new(diameter: f64) -> Result<Self> {
        if !(diameter > 0.0 && diameter.is_finite()) {
            return Err(Error::invalid(format!(
                "beam diameter must be > 0, got {diameter}"
            )));
        }
        Ok(Self { diameter })
    }

    /// 1/e^2 radius.
    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    /// Per-axis standard deviation of the intensity profile.
    pub fn sigma(&self) -> f64 {
        0.25 * self.diameter
    }
}

/// Exponentially scaled modified Bessel function `exp(-|x|) I0(x)`
/// (Abramowitz & Stegun 9.8.1 / 9.8.2, relative error below 2e-7).
fn bessel_i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.75 {
        let y = (x / 3.75).powi(2);
        let i0 = 1.0
            + y * (3.515_622_9
                + y * (3.089_942_4
                    + y * (1.206_749_2 + y * (0.265_973_2 + y * (0.036_076_8 + y * 0.004_581_3)))));
        i0 * (-ax).exp()
    } else {
        let y = 3.75 / ax;
        let p = 0.398_942_28
            + y * (0.013_285_92
                + y * (0.002_253_19
                    + y * (-0.001_575_65
                        + y * (0.009_162_81
                            + y * (-0.020_577_06
                                + y * (0.026_355_37 + y * (-0.016_476_33 + y * 0.003_923_77)))))));
        p / ax.sqrt()
    }
}

/// Fraction of a circular Gaussian beam (centroid at `distance` from the
/// aperture center) that falls inside a circular aperture of `radius`.
/// Radial form of the integral: the angular part reduces to a Bessel I0.
fn capture_at_distance(distance: f64, sigma: f64, radius: f64) -> f64 {
    let d = distance.abs();
    let lo = (d - TAIL_SIGMAS * sigma).max(0.0);
    let hi = (d + TAIL_SIGMAS * sigma).min(radius);
    if hi <= lo {
        return 0.0;
    }
    let s2 = sigma * sigma;
    let f = |r: f64| {
        let dr = r - d;
        r / s2 * (-0.5 * dr * dr / s2).exp() * bessel_i0e(r * d / s2)
    };
    let n = RADIAL_PANELS;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    (acc * h / 3.0).clamp(0.0, 1.0)
}

/// Power fraction captured by a circular aperture of `aperture_radius`
/// centered at the plane origin when the beam centroid sits at `offset`.
pub fn capture_fraction(offset: SpotOffset, beam: &BeamProfile, aperture_radius: f64) -> f64 {
    debug_assert!(aperture_radius > 0.0);
    capture_at_distance(offset.norm(), beam.sigma(), aperture_radius)
}

/// Capture fraction tabulated against centroid distance, linearly
/// interpolated. Used inside the control loop where the direct integral
/// would dominate runtime.
#[derive(Debug, Clone)]
pub struct CaptureTable {
    step: f64,
    values: Vec<f64>,
}

impl CaptureTable {
    pub fn new(beam: &BeamProfile, aperture_radius: f64) -> Self {
        let sigma = beam.sigma();
        let step = sigma.min(aperture_radius) / TABLE_STEPS_PER_SCALE;
        let reach = aperture_radius + TAIL_SIGMAS * sigma;
        let n = (reach / step).ceil() as usize + 2;
        let values = (0..n)
            .map(|i| capture_at_distance(i as f64 * step, sigma, aperture_radius))
            .collect();
        Self { step, values }
    }

    pub fn at_distance(&self, distance: f64) -> f64 {
        let u = distance.abs() / self.step;
        let i = u as usize;
        if i + 1 >= self.values.len() {
            return 0.0;
        }
        let frac = u - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    pub fn at(&self, offset: SpotOffset) -> f64 {
        self.at_distance(offset.norm())
    }

    pub fn centered(&self) -> f64 {
        self.values[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub beam_diameter: f64,
    pub pd_spacing: f64,
    pub pd_radius: f64,
    pub rx_aperture_radius: f64,
    pub noise_sigma: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            beam_diameter: 7e-3,
            pd_spacing: 5e-3,
            pd_radius: 1e-3,
            rx_aperture_radius: 5e-3,
            noise_sigma: 0.02,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beam_diameter", self.beam_diameter),
            ("pd_spacing", self.pd_spacing),
            ("pd_radius", self.pd_radius),
            ("rx_aperture_radius", self.rx_aperture_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("detector.{name}"), "must be > 0"));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("detector.noise_sigma", "must be >= 0"));
        }
        Ok(())
    }

    pub fn beam(&self) -> BeamProfile {
        BeamProfile {
            diameter: self.beam_diameter,
        }
    }
}

/// One 3x3 sample, indexed `[row][col]`; row 0 is +y, col 2 is +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdArrayReading {
    pub intensities: [[f64; 3]; 3],
    pub timestamp: f64,
}

impl PdArrayReading {
    pub fn new(intensities: [[f64; 3]; 3], timestamp: f64) -> Self {
        Self {
            intensities,
            timestamp,
        }
    }

    /// All-zero reading (no light returned).
    pub fn dark(timestamp: f64) -> Self {
        Self::new([[0.0; 3]; 3], timestamp)
    }

    pub fn center(&self) -> f64 {
        self.intensities[1][1]
    }

    pub fn max(&self) -> f64 {
        let (r, c) = locate_max(self);
        self.intensities[r][c]
    }
}

/// Position of PD `(row, col)` on the array plane.
pub fn pd_center(row: usize, col: usize, spacing: f64) -> SpotOffset {
    SpotOffset::new((col as f64 - 1.0) * spacing, (1.0 - row as f64) * spacing)
}

/// Brightest PD; ties go to the smallest row, then the smallest column.
pub fn locate_max(reading: &PdArrayReading) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_v = reading.intensities[0][0];
    for r in 0..3 {
        for c in 0..3 {
            let v = reading.intensities[r][c];
            if v > best_v {
                best_v = v;
                best = (r, c);
            }
        }
    }
    best
}

fn add_noise(value: f64, noise_sigma: f64, rng: &mut RngStream) -> f64 {
    if noise_sigma > 0.0 {
        (value + noise_sigma * rng.normal()).max(0.0)
    } else {
        value
    }
}

/// Samples the PD array with the spot centroid at `offset_at_array`.
/// Intensities are normalized so a spot centered on a PD reads 1.0, then
/// zero-mean Gaussian noise is added and the result clamped at 0.
pub fn pd_array_sample(
    offset_at_array: SpotOffset,
    config: &DetectorConfig,
    timestamp: f64,
    rng: &mut RngStream,
) -> PdArrayReading {
    let beam = config.beam();
    let peak = capture_at_distance(0.0, beam.sigma(), config.pd_radius);
    let mut grid = [[0.0; 3]; 3];
    for (r, row) in grid.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            let pd = pd_center(r, c, config.pd_spacing);
            let rel = SpotOffset::new(offset_at_array.x - pd.x, offset_at_array.y - pd.y);
            let raw = capture_fraction(rel, &beam, config.pd_radius) / peak;
            *cell = add_noise(raw, config.noise_sigma, rng);
        }
    }
    PdArrayReading::new(grid, timestamp)
}

/// Precomputed PD array model for the control loop.
#[derive(Debug, Clone)]
pub struct PdArray {
    config: DetectorConfig,
    table: CaptureTable,
    peak: f64,
}

impl PdArray {
    pub fn new(config: DetectorConfig) -> Self {
        let table = CaptureTable::new(&config.beam(), config.pd_radius);
        let peak = table.centered();
        Self {
            config,
            table,
            peak,
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Same contract as [`pd_array_sample`], using the tabulated capture.
    pub fn sample(
        &self,
        offset_at_array: SpotOffset,
        timestamp: f64,
        rng: &mut RngStream,
    ) -> PdArrayReading {
        let mut grid = [[0.0; 3]; 3];
        for (r, row) in grid.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                let pd = pd_center(r, c, self.config.pd_spacing);
                let d = (offset_at_array.x - pd.x).hypot(offset_at_array.y - pd.y);
                let raw = self.table.at_distance(d) / self.peak;
                *cell = add_noise(raw, self.config.noise_sigma, rng);
            }
        }
        PdArrayReading::new(grid, timestamp)
    }

    /// Dark array plus noise, for ticks where nothing comes back.
    pub fn sample_dark(&self, timestamp: f64, rng: &mut RngStream) -> PdArrayReading {
        let mut grid = [[0.0; 3]; 3];
        for cell in grid.iter_mut().flatten() {
            *cell = add_noise(0.0, self.config.noise_sigma, rng);
        }
        PdArrayReading::new(grid, timestamp)
    }
}
