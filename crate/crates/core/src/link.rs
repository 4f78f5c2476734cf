//! Link-layer evaluation: electrical SNR from captured optical power, PAM-M
//! bit error rate, per-packet loss against the FEC limit, and trial
//! aggregates (average BER, PLR, throughput).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// SD-FEC threshold: packets with BER strictly above this are lost.
pub const DEFAULT_FEC_LIMIT: f64 = 2e-2;

/// How many bits a PAM6 symbol is credited with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pam6Bits {
    /// log2(6) bits per symbol.
    #[default]
    Log2,
    /// 5 bits over two symbols.
    TwoPointFive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    levels: u32,
    bits_per_symbol: f64,
}

impl Modulation {
    pub const OOK: Modulation = Modulation {
        levels: 2,
        bits_per_symbol: 1.0,
    };
    pub const PAM4: Modulation = Modulation {
        levels: 4,
        bits_per_symbol: 2.0,
    };

    pub fn pam6(bits: Pam6Bits) -> Modulation {
        Modulation {
            levels: 6,
            bits_per_symbol: match bits {
                Pam6Bits::Log2 => 6f64.log2(),
                Pam6Bits::TwoPointFive => 2.5,
            },
        }
    }

    pub fn from_levels(levels: u32, pam6: Pam6Bits) -> Result<Modulation> {
        match levels {
            2 => Ok(Self::OOK),
            4 => Ok(Self::PAM4),
            6 => Ok(Self::pam6(pam6)),
            m => Err(Error::invalid(format!(
                "unsupported modulation order {m} (expected 2, 4 or 6)"
            ))),
        }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn bits_per_symbol(&self) -> f64 {
        self.bits_per_symbol
    }

    pub fn name(&self) -> &'static str {
        match self.levels {
            2 => "ook",
            4 => "pam4",
            _ => "pam6",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ook" | "pam2" => Ok(Self::OOK),
            "pam4" => Ok(Self::PAM4),
            "pam6" => Ok(Self::pam6(Pam6Bits::Log2)),
            other => Err(Error::invalid(format!("unknown modulation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Linear electrical SNR at full capture and vanishing symbol rate.
    pub snr_peak: f64,
    pub system_bandwidth: f64,
}

impl LinkBudget {
    pub fn new(snr_peak: f64, system_bandwidth: f64) -> Result<Self> {
        if !(snr_peak > 0.0 && snr_peak.is_finite()) {
            return Err(Error::invalid(format!(
                "snr_peak must be > 0, got {snr_peak}"
            )));
        }
        if !(system_bandwidth > 0.0 && system_bandwidth.is_finite()) {
            return Err(Error::invalid(format!(
                "system bandwidth must be > 0, got {system_bandwidth}"
            )));
        }
        Ok(Self {
            snr_peak,
            system_bandwidth,
        })
    }

    /// Single-pole penalty `1 / (1 + (R / 2B)^2)`.
    pub fn bandwidth_penalty(&self, symbol_rate: f64) -> f64 {
        let r = symbol_rate / (2.0 * self.system_bandwidth);
        1.0 / (1.0 + r * r)
    }
}

/// Thermal-noise-limited SNR: electrical power goes with optical power squared.
pub fn effective_snr(capture: f64, budget: &LinkBudget, symbol_rate: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&capture));
    budget.snr_peak * capture * capture * budget.bandwidth_penalty(symbol_rate)
}

/// Gaussian tail probability `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Gray-coded PAM-M bit error rate over additive Gaussian noise.
pub fn ber_from_snr(snr: f64, modulation: Modulation) -> f64 {
    let m = modulation.levels as f64;
    let prefactor = 2.0 * (m - 1.0) / (m * m.log2());
    let arg = (3.0 * snr.max(0.0) / (m * m - 1.0)).sqrt();
    (prefactor * q_function(arg)).clamp(0.0, 0.5)
}

/// Smallest SNR giving BER at or below `target` (bisection on the monotone
/// BER curve).
pub fn snr_for_ber(target: f64, modulation: Modulation) -> Result<f64> {
    if !(target > 0.0 && target < ber_from_snr(0.0, modulation)) {
        return Err(Error::invalid(format!(
            "target BER {target} outside the reachable range"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while ber_from_snr(hi, modulation) > target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Calibration(format!(
                "BER {target} needs SNR beyond 1e12"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ber_from_snr(mid, modulation) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketResult {
    pub ber: f64,
    pub lost: bool,
}

impl PacketResult {
    /// `lost` iff `ber > fec_limit`; a BER exactly at the limit is decodable.
    pub fn new(ber: f64, fec_limit: f64) -> Self {
        Self {
            ber,
            lost: ber > fec_limit,
        }
    }
}

/// A packet's position in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketWindow {
    pub start: f64,
    pub duration: f64,
}

/// Time-averaged BER over a packet window.
///
/// `captures[i]` is the capture fraction held over `[i * tick, (i + 1) * tick)`.
/// Each tick contributes in proportion to its overlap with the window, so
/// windows shorter than one tick still see the value in force.
pub fn packet_ber(
    captures: &[f64],
    tick: f64,
    window: PacketWindow,
    budget: &LinkBudget,
    symbol_rate: f64,
    modulation: Modulation,
    fec_limit: f64,
) -> Result<PacketResult> {
    let PacketWindow { start, duration } = window;
    if !(duration > 0.0 && start >= 0.0 && tick > 0.0) {
        return Err(Error::invalid(format!(
            "empty packet window (start {start}, duration {duration})"
        )));
    }
    let end = start + duration;
    let span = captures.len() as f64 * tick;
    // allow rounding slop at the trace end
    if captures.is_empty() || end > span * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "packet window [{start}, {end}) s not covered by a {span} s trace"
        )));
    }
    let first = (start / tick).floor() as usize;
    let mut acc = 0.0;
    let mut covered = 0.0;
    for (i, &c) in captures.iter().enumerate().skip(first) {
        let lo = (i as f64 * tick).max(start);
        let hi = ((i + 1) as f64 * tick).min(end);
        if hi <= lo {
            if lo >= end {
                break;
            }
            continue;
        }
        let w = hi - lo;
        acc += w * ber_from_snr(effective_snr(c, budget, symbol_rate), modulation);
        covered += w;
    }
    if covered <= 0.0 {
        return Err(Error::invalid("packet window holds no trace samples"));
    }
    Ok(PacketResult::new(acc / covered, fec_limit))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkSummary {
    pub avg_ber: f64,
    pub plr: f64,
    pub throughput_bps: f64,
}

/// Average BER over all packets (lost ones included), packet loss rate and
/// net throughput `symbol_rate * bits_per_symbol * (1 - plr)`.
pub fn aggregate(
    results: &[PacketResult],
    symbol_rate: f64,
    modulation: Modulation,
) -> Result<LinkSummary> {
    if results.is_empty() {
        return Err(Error::invalid("aggregate needs at least one packet"));
    }
    let n = results.len() as f64;
    let avg_ber = results.iter().map(|r| r.ber).sum::<f64>() / n;
    let lost = results.iter().filter(|r| r.lost).count();
    let plr = lost as f64 / n;
    Ok(LinkSummary {
        avg_ber,
        plr,
        throughput_bps: throughput(symbol_rate, modulation, plr),
    })
}

pub fn throughput(symbol_rate: f64, modulation: Modulation, plr: f64) -> f64 {
    symbol_rate * modulation.bits_per_symbol * (1.0 - plr)
}
