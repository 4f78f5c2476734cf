//! Refraction at the water-air interface and the forward/return beam geometry
//! of the tracking link.
//!
//! Each lateral axis is an independent planar problem. A mirror tilt `t`
//! sends the beam `2t` off vertical; the local surface normal is tilted by
//! the slope angle `gamma`; the exit ray leaves at `beta - gamma` from
//! vertical, where `beta` is the Snell exit angle for incidence `2t + gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacings equal to within this are treated as equal.
pub const ALIGNMENT_TOL_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkGeometry {
    pub n_water: f64,
    pub n_air: f64,
    /// Surface to receiver plane height.
    pub h_air: f64,
    /// Mirror to surface underwater path.
    pub l_water: f64,
    /// Nominal surface intersection abscissa.
    pub x0: f64,
    pub bs_to_pdarray: f64,
    pub bs_to_mems: f64,
    pub bs2_to_ccr: f64,
    pub bs2_to_rxpd: f64,
    pub ccr_aperture_radius: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        Self {
            n_water: 1.33,
            n_air: 1.0,
            h_air: 1.2,
            l_water: 0.14,
            x0: 0.0,
            bs_to_pdarray: 0.05,
            bs_to_mems: 0.05,
            bs2_to_ccr: 0.05,
            bs2_to_rxpd: 0.05,
            ccr_aperture_radius: 0.025,
        }
    }
}

impl LinkGeometry {
    pub fn with_h_air(self, h_air: f64) -> Self {
        Self { h_air, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("n_water", self.n_water),
            ("n_air", self.n_air),
            ("h_air", self.h_air),
            ("l_water", self.l_water),
            ("x0", self.x0),
            ("bs_to_pdarray", self.bs_to_pdarray),
            ("bs_to_mems", self.bs_to_mems),
            ("bs2_to_ccr", self.bs2_to_ccr),
            ("bs2_to_rxpd", self.bs2_to_rxpd),
            ("ccr_aperture_radius", self.ccr_aperture_radius),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::config(format!("geometry.{name}"), "must be finite"));
            }
        }
        if self.n_air < 1.0 {
            return Err(Error::config("geometry.n_air", "must be >= 1"));
        }
        if self.n_water <= self.n_air {
            return Err(Error::config("geometry.n_water", "must exceed n_air"));
        }
        if self.h_air <= 0.0 {
            return Err(Error::config("geometry.h_air", "must be > 0"));
        }
        if self.l_water <= 0.0 {
            return Err(Error::config("geometry.l_water", "must be > 0"));
        }
        for (name, v) in &fields[5..9] {
            if *v < 0.0 {
                return Err(Error::config(format!("geometry.{name}"), "must be >= 0"));
            }
        }
        if self.ccr_aperture_radius <= 0.0 {
            return Err(Error::config("geometry.ccr_aperture_radius", "must be > 0"));
        }
        Ok(())
    }

    /// Incidence angle beyond which water-to-air refraction is impossible.
    pub fn critical_angle(&self) -> f64 {
        (self.n_air / self.n_water).asin()
    }
}

/// Lateral beam-centroid offset from a plane's reference center (meters).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpotOffset {
    pub x: f64,
    pub y: f64,
}

impl SpotOffset {
    pub const ZERO: SpotOffset = SpotOffset { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// A pair of per-axis angles (radians).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisAngles {
    pub x: f64,
    pub y: f64,
}

impl AxisAngles {
    pub const ZERO: AxisAngles = AxisAngles { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Snell exit angle for a water-to-air crossing at incidence `alpha`.
pub fn refract_exit_angle(alpha: f64, geometry: &LinkGeometry) -> Result<f64> {
    if !(alpha.is_finite() && alpha.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::invalid(format!(
            "incidence angle {alpha} outside (-pi/2, pi/2)"
        )));
    }
    let s = geometry.n_water / geometry.n_air * alpha.sin();
    if s.abs() > 1.0 {
        return Err(Error::TotalInternalReflection {
            alpha,
            critical: geometry.critical_angle(),
        });
    }
    Ok(s.asin())
}

/// Receiver-plane displacement `h tan(beta - alpha)` for a vertical beam
/// meeting a surface of slope angle `gamma`.
pub fn spot_displacement(gamma: f64, geometry: &LinkGeometry) -> Result<f64> {
    let beta = refract_exit_angle(gamma, geometry)?;
    Ok(geometry.h_air * (beta - gamma).tan())
}

/// Full result of a forward trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamTrace {
    /// Offset at the receiver plane.
    pub receiver: SpotOffset,
    /// Exit ray direction from vertical, per axis.
    pub exit_angle: AxisAngles,
}

fn trace_axis(tilt: f64, gamma: f64, geometry: &LinkGeometry) -> Result<(f64, f64)> {
    let beam = 2.0 * tilt;
    let underwater_shift = geometry.l_water * beam.tan();
    let beta = refract_exit_angle(beam + gamma, geometry)?;
    let exit = beta - gamma;
    Ok((underwater_shift + geometry.h_air * exit.tan(), exit))
}

pub fn trace_beam_full(
    tilt: AxisAngles,
    gamma_x: f64,
    gamma_y: f64,
    geometry: &LinkGeometry,
) -> Result<BeamTrace> {
    let (x, ex) = trace_axis(tilt.x, gamma_x, geometry)?;
    let (y, ey) = trace_axis(tilt.y, gamma_y, geometry)?;
    Ok(BeamTrace {
        receiver: SpotOffset::new(x, y),
        exit_angle: AxisAngles::new(ex, ey),
    })
}

/// Forward model from mirror tilt and surface slope to receiver-plane offset.
/// TIR on either axis is reported as [`Error::TotalInternalReflection`].
pub fn trace_beam(
    tilt: AxisAngles,
    gamma_x: f64,
    gamma_y: f64,
    geometry: &LinkGeometry,
) -> Result<SpotOffset> {
    trace_beam_full(tilt, gamma_x, gamma_y, geometry).map(|t| t.receiver)
}

/// Offset at the CCR plane. Equals the receiver offset when BS2 sits midway;
/// otherwise the extra path along the exit ray shifts it.
pub fn ccr_offset(trace: &BeamTrace, geometry: &LinkGeometry) -> SpotOffset {
    let extra = geometry.bs2_to_ccr - geometry.bs2_to_rxpd;
    if extra.abs() <= ALIGNMENT_TOL_M {
        return trace.receiver;
    }
    SpotOffset::new(
        trace.receiver.x + extra * trace.exit_angle.x.tan(),
        trace.receiver.y + extra * trace.exit_angle.y.tan(),
    )
}

/// Corner-cube return: point symmetric about the vertex. Offsets outside the
/// aperture never come back.
pub fn retroreflect(offset_at_ccr: SpotOffset, aperture_radius: f64) -> Result<SpotOffset> {
    let r = offset_at_ccr.norm();
    if !(r.is_finite() && r <= aperture_radius) {
        return Err(Error::BeamLost(format!(
            "spot {:.3} mm from CCR vertex exceeds aperture radius {:.3} mm",
            r * 1e3,
            aperture_radius * 1e3
        )));
    }
    Ok(SpotOffset::new(-offset_at_ccr.x, -offset_at_ccr.y))
}

/// Offset of the returned beam on the PD-array plane.
///
/// With a locally planar surface the return pass retraces the forward
/// refraction, so the array sees the retroreflected offset. If the array and
/// mirror are not equidistant from the BS by `delta`, a return ray at
/// `return_angle` adds `delta tan(angle)` per axis.
pub fn feedback_offset(
    offset_at_ccr: SpotOffset,
    geometry: &LinkGeometry,
    return_angle: AxisAngles,
) -> Result<SpotOffset> {
    let back = retroreflect(offset_at_ccr, geometry.ccr_aperture_radius)?;
    let delta = geometry.bs_to_pdarray - geometry.bs_to_mems;
    if delta.abs() <= ALIGNMENT_TOL_M {
        return Ok(back);
    }
    Ok(SpotOffset::new(
        back.x + delta * return_angle.x.tan(),
        back.y + delta * return_angle.y.tan(),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceReport {
    pub congruent: bool,
    pub violations: Vec<String>,
}

/// Checks the two equal-distance conditions that make a beam centered on the
/// CCR also centered on the PD array and the receiver PD.
pub fn verify_congruence(geometry: &LinkGeometry) -> CongruenceReport {
    let mut violations = Vec::new();
    let tx = geometry.bs_to_pdarray - geometry.bs_to_mems;
    if tx.abs() > ALIGNMENT_TOL_M {
        violations.push(format!(
            "transmitter side: BS->PD array ({} m) != BS->MEMS ({} m), differs by {:.3e} m",
            geometry.bs_to_pdarray, geometry.bs_to_mems, tx
        ));
    }
    let rx = geometry.bs2_to_ccr - geometry.bs2_to_rxpd;
    if rx.abs() > ALIGNMENT_TOL_M {
        violations.push(format!(
            "receiver side: BS2->CCR ({} m) != BS2->receiver PD ({} m), differs by {:.3e} m",
            geometry.bs2_to_ccr, geometry.bs2_to_rxpd, rx
        ));
    }
    CongruenceReport {
        congruent: violations.is_empty(),
        violations,
    }
}
