//! Experiment configuration (TOML). All quantities are SI: meters, radians,
//! seconds, Hz, baud. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::link::{self, LinkBudget, Modulation, Pam6Bits};
use crate::optics::LinkGeometry;
use crate::tracker::TrackerParams;
use crate::wave::{WaveComponent, WaveModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    /// `flat`, `mild` or `paper-wave`; ignored when `components` is given.
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<WaveComponent>>,
}

fn default_preset() -> String {
    "paper-wave".into()
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            components: None,
        }
    }
}

impl WaveConfig {
    pub fn base_model(&self) -> Result<WaveModel> {
        match &self.components {
            Some(list) => {
                let comps = list
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        WaveComponent::new(c.amplitude, c.wavenumber, c.angular_frequency, c.phase)
                            .map_err(|e| {
                                Error::config(format!("wave.components[{i}]"), e.to_string())
                            })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(WaveModel::new("custom", comps))
            }
            None => WaveModel::preset(&self.preset)
                .map_err(|e| Error::config("wave.preset", e.to_string())),
        }
    }
}

/// Operating point whose BER pins `snr_peak`: static water, tracking off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkAnchor {
    pub modulation: u32,
    pub symbol_rate: f64,
    pub ber: f64,
}

impl Default for LinkAnchor {
    fn default() -> Self {
        Self {
            modulation: 4,
            symbol_rate: 600e6,
            ber: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    /// Fixed peak SNR; derived from `anchor` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_peak: Option<f64>,
    pub anchor: Option<LinkAnchor>,
    pub system_bandwidth: f64,
    pub fec_limit: f64,
    pub symbols_per_packet: u64,
    pub packets_per_trial: usize,
    /// Start-to-start packet spacing; packets are back to back when this is
    /// not longer than one packet.
    pub packet_interval: f64,
    pub pam6_bits: Pam6Bits,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            snr_peak: None,
            anchor: Some(LinkAnchor::default()),
            system_bandwidth: 1e9,
            fec_limit: link::DEFAULT_FEC_LIMIT,
            symbols_per_packet: 400_000,
            packets_per_trial: 200,
            packet_interval: 0.3,
            pam6_bits: Pam6Bits::Log2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    /// Modulation orders: 2 (OOK), 4, 6.
    pub modulations: Vec<u32>,
    pub symbol_rates: Vec<f64>,
    /// Target ASCRs; when absent or empty the wave is used as declared.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ascr: Option<Vec<f64>>,
    pub h_air: Vec<f64>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            modulations: vec![2, 4, 6],
            symbol_rates: vec![200e6, 400e6, 600e6, 800e6, 1000e6],
            ascr: Some(vec![0.1, 0.2, 0.34]),
            h_air: vec![1.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub wave: WaveConfig,
    #[serde(default)]
    pub geometry: LinkGeometry,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub tracker: TrackerParams,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub sweep: SweepAxes,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20_220_034,
            output: default_output(),
            wave: WaveConfig::default(),
            geometry: LinkGeometry::default(),
            detector: DetectorConfig::default(),
            tracker: TrackerParams::default(),
            link: LinkConfig::default(),
            sweep: SweepAxes::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| field_at(text, s.start))
                .unwrap_or_default();
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.detector.validate()?;
        self.tracker.validate()?;
        self.wave.base_model()?;

        let l = &self.link;
        if !(l.system_bandwidth > 0.0 && l.system_bandwidth.is_finite()) {
            return Err(Error::config("link.system_bandwidth", "must be > 0"));
        }
        if !(l.fec_limit > 0.0 && l.fec_limit < 0.5) {
            return Err(Error::config("link.fec_limit", "must be in (0, 0.5)"));
        }
        if l.symbols_per_packet == 0 {
            return Err(Error::config("link.symbols_per_packet", "must be > 0"));
        }
        if l.packets_per_trial == 0 {
            return Err(Error::config("link.packets_per_trial", "must be > 0"));
        }
        if !(l.packet_interval >= 0.0 && l.packet_interval.is_finite()) {
            return Err(Error::config("link.packet_interval", "must be >= 0"));
        }
        match (l.snr_peak, l.anchor) {
            (Some(s), _) if !(s > 0.0 && s.is_finite()) => {
                return Err(Error::config("link.snr_peak", "must be > 0"));
            }
            (None, None) => {
                return Err(Error::config(
                    "link",
                    "either snr_peak or anchor is required",
                ));
            }
            _ => {}
        }
        if let Some(a) = l.anchor {
            Modulation::from_levels(a.modulation, l.pam6_bits)
                .map_err(|e| Error::config("link.anchor.modulation", e.to_string()))?;
            if !(a.symbol_rate > 0.0 && a.symbol_rate.is_finite()) {
                return Err(Error::config("link.anchor.symbol_rate", "must be > 0"));
            }
            if !(a.ber > 0.0 && a.ber < 0.5) {
                return Err(Error::config("link.anchor.ber", "must be in (0, 0.5)"));
            }
        }

        let s = &self.sweep;
        if s.modulations.is_empty() {
            return Err(Error::config("sweep.modulations", "must not be empty"));
        }
        for (i, &m) in s.modulations.iter().enumerate() {
            Modulation::from_levels(m, l.pam6_bits)
                .map_err(|e| Error::config(format!("sweep.modulations[{i}]"), e.to_string()))?;
        }
        check_positive_axis("sweep.symbol_rates", &s.symbol_rates)?;
        check_positive_axis("sweep.h_air", &s.h_air)?;
        if let Some(a) = s.ascr.as_ref().filter(|a| !a.is_empty()) {
            check_positive_axis("sweep.ascr", a)?;
            let base = self.wave.base_model()?;
            if !base
                .components
                .iter()
                .any(|c| c.angular_frequency > 0.0 && c.amplitude > 0.0)
            {
                return Err(Error::config(
                    "sweep.ascr",
                    "ASCR targets need a moving wave; omit the axis for static presets",
                ));
            }
        }
        Ok(())
    }

    /// ASCR axis entries; a single `None` when the wave is used as declared.
    pub fn ascr_targets(&self) -> Vec<Option<f64>> {
        match &self.sweep.ascr {
            Some(list) if !list.is_empty() => list.iter().map(|&a| Some(a)).collect(),
            _ => vec![None],
        }
    }

    pub fn modulations(&self) -> Vec<Modulation> {
        self.sweep
            .modulations
            .iter()
            .map(|&m| Modulation::from_levels(m, self.link.pam6_bits).expect("validated"))
            .collect()
    }

    /// Link budget, deriving `snr_peak` from the anchor when not pinned.
    pub fn link_budget(&self) -> Result<LinkBudget> {
        let snr_peak = match self.link.snr_peak {
            Some(s) => s,
            None => super::calibrate::anchor_snr_peak(self)?,
        };
        LinkBudget::new(snr_peak, self.link.system_bandwidth)
    }
}

/// Dotted key path for the line holding byte `pos`, e.g. `link.pam6_bits`,
/// falling back to the line number when the line has no key.
fn field_at(text: &str, pos: usize) -> String {
    let pos = pos.min(text.len());
    let line_no = text[..pos].matches('\n').count();
    let mut section = String::new();
    for line in text.lines().take(line_no) {
        let t = line.trim();
        if t.starts_with('[') && t.ends_with(']') {
            section = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
    }
    let line = text.lines().nth(line_no).unwrap_or("");
    match line.split_once('=') {
        Some((key, _)) if !line.trim_start().starts_with('[') => {
            let key = key.trim();
            if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            }
        }
        _ => format!("line {}", line_no + 1),
    }
}

fn check_positive_axis(field: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(field, "must not be empty"));
    }
    if let Some(i) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::config(format!("{field}[{i}]"), "must be > 0"));
    }
    Ok(())
}
