//! Anchor fitting: peak SNR from a static-water operating point, and the
//! wave frequency scale for each ASCR target.

use std::fmt;

use crate::detector::CaptureTable;
use crate::error::{Error, Result};
use crate::link::{self, LinkBudget, Modulation};

use super::config::ExperimentConfig;

/// Receiver capture with the beam centered (static water, mirror at rest).
pub fn static_capture(config: &ExperimentConfig) -> f64 {
    CaptureTable::new(&config.detector.beam(), config.detector.rx_aperture_radius).centered()
}

/// Peak SNR that puts the anchor scenario exactly on its anchor BER.
pub fn anchor_snr_peak(config: &ExperimentConfig) -> Result<f64> {
    let anchor = config
        .link
        .anchor
        .ok_or_else(|| Error::Calibration("no link anchor declared".into()))?;
    let modulation = Modulation::from_levels(anchor.modulation, config.link.pam6_bits)?;
    let needed = link::snr_for_ber(anchor.ber, modulation)
        .map_err(|e| Error::Calibration(format!("anchor BER {}: {e}", anchor.ber)))?;
    let c0 = static_capture(config);
    if c0 <= 0.0 {
        return Err(Error::Calibration(
            "receiver captures no light on static water; check detector.rx_aperture_radius".into(),
        ));
    }
    let unit = LinkBudget::new(1.0, config.link.system_bandwidth)?;
    let snr_peak = needed / (c0 * c0 * unit.bandwidth_penalty(anchor.symbol_rate));
    if !snr_peak.is_finite() {
        return Err(Error::Calibration(format!(
            "anchor needs non-finite peak SNR ({snr_peak})"
        )));
    }
    Ok(snr_peak)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscrFit {
    pub target: f64,
    pub scale: f64,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub snr_peak: f64,
    pub snr_peak_db: f64,
    pub anchored: bool,
    pub static_capture: f64,
    pub ascr: Vec<AscrFit>,
}

impl fmt::Display for CalibrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "snr_peak = {:.6} ({:.3} dB, {})",
            self.snr_peak,
            self.snr_peak_db,
            if self.anchored {
                "from anchor"
            } else {
                "pinned in config"
            }
        )?;
        writeln!(f, "static receiver capture = {:.6}", self.static_capture)?;
        for a in &self.ascr {
            writeln!(
                f,
                "ascr target {:.4} rad/s: frequency scale {:.6}, measured {:.6} rad/s",
                a.target, a.scale, a.measured
            )?;
        }
        Ok(())
    }
}

/// Pins `link.snr_peak` from the anchor (if any) and fits the wave frequency
/// scale for every ASCR target.
pub fn calibrate(config: &ExperimentConfig) -> Result<(ExperimentConfig, CalibrationReport)> {
    config.validate()?;
    let mut out = config.clone();
    let anchored = config.link.anchor.is_some();
    let snr_peak = if anchored {
        anchor_snr_peak(config)?
    } else {
        config.link.snr_peak.expect("validated: snr_peak or anchor")
    };
    out.link.snr_peak = Some(snr_peak);

    let base = config.wave.base_model()?;
    let x0 = config.geometry.x0;
    let mut ascr = Vec::new();
    for target in config.ascr_targets().into_iter().flatten() {
        let scale = base.ascr_scale_factor(target, x0).map_err(|e| {
            Error::Calibration(format!(
                "wave `{}` cannot reach ASCR {target} rad/s at x0 = {x0} m: {e}",
                base.label
            ))
        })?;
        let measured = base.with_frequency_scale(scale).ascr(x0)?;
        ascr.push(AscrFit {
            target,
            scale,
            measured,
        });
    }
    let report = CalibrationReport {
        snr_peak,
        snr_peak_db: 10.0 * snr_peak.log10(),
        anchored,
        static_capture: static_capture(config),
        ascr,
    };
    Ok((out, report))
}
