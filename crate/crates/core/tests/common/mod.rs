//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use wavetrack::wave::{WaveComponent, WaveModel};

/// Exit angle from the tangent form of Snell's law:
/// `tan(beta) = s / sqrt(1 - s^2)` with `s = n sin(alpha)`.
pub fn exit_angle(alpha: f64, n_water: f64, n_air: f64) -> f64 {
    let s = n_water / n_air * alpha.sin();
    (s / ((1.0 - s) * (1.0 + s)).sqrt()).atan()
}

/// Receiver displacement through the tangent difference identity
/// `tan(b - a) = (tan b - tan a) / (1 + tan b tan a)`.
pub fn displacement(gamma: f64, h: f64, n_water: f64, n_air: f64) -> f64 {
    let s = n_water / n_air * gamma.sin();
    let tb = s / ((1.0 - s) * (1.0 + s)).sqrt();
    let ta = gamma.tan();
    h * (tb - ta) / (1.0 + tb * ta)
}

/// Per-axis forward trace written out from the ray picture.
pub fn traced_axis(tilt: f64, gamma: f64, h: f64, l_water: f64) -> f64 {
    let beam = 2.0 * tilt;
    l_water * beam.tan() + displacement_at_incidence(beam + gamma, gamma, h)
}

/// `h tan(beta - gamma)` for incidence `alpha` on a surface tilted by `gamma`.
fn displacement_at_incidence(alpha: f64, gamma: f64, h: f64) -> f64 {
    let s = 1.33 * alpha.sin();
    let tb = s / ((1.0 - s) * (1.0 + s)).sqrt();
    let tg = gamma.tan();
    h * (tb - tg) / (1.0 + tb * tg)
}

/// Gaussian power inside a circular aperture of radius `r` when the beam
/// centroid sits `d` along x: the y-integral of every vertical chord is
/// closed form (erf) and the chords are summed by a fine midpoint rule.
pub fn chord_capture(d: f64, sigma: f64, r: f64, chords: usize) -> f64 {
    let h = 2.0 * r / chords as f64;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mut acc = 0.0;
    for i in 0..chords {
        let x = -r + (i as f64 + 0.5) * h;
        let half = (r * r - x * x).max(0.0).sqrt();
        let px = norm * (-0.5 * ((x - d) / sigma).powi(2)).exp();
        let py = libm::erf(half / (sigma * std::f64::consts::SQRT_2));
        acc += px * py * h;
    }
    acc
}

/// Surface frozen at slope angle `gamma` at x = 0.
pub fn static_slope(gamma: f64) -> WaveModel {
    let k = 10.0;
    WaveModel::new(
        "static",
        vec![WaveComponent::new(gamma.tan() / k, k, 0.0, 0.0).unwrap()],
    )
}

/// Mean |d gamma / dt| of one sinusoid from a fine midpoint rule over one
/// period, using the analytic time derivative of the slope angle.
pub fn quadrature_ascr(amplitude: f64, wavenumber: f64, omega: f64) -> f64 {
    let p = amplitude * wavenumber;
    let n = 200_000;
    let period = std::f64::consts::TAU / omega;
    let dt = period / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let theta = -omega * (i as f64 + 0.5) * dt;
        let c = theta.cos();
        acc += (p * omega * theta.sin() / (1.0 + p * p * c * c)).abs();
    }
    acc / n as f64
}
