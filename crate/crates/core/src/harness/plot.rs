//! Minimal SVG line charts for the figure analogues.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::tracker::TraceLog;

use super::trial::RunResult;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    pub color: usize,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

impl Chart {
    pub fn to_svg(&self) -> String {
        // log axes floor tiny values so zero BER stays plottable
        let ty = |v: f64| if self.log_y { v.max(1e-12).log10() } else { v };
        let (x0, x1) = bounds(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0)),
        );
        let (y0, y1) = bounds(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| ty(p.1))),
        );
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let ylab = if self.log_y {
                format!("1e{yv:.1}")
            } else {
                format!("{yv:.3}")
            };
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(xv),
                TOP + ph + 16.0,
                fmt_tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                sy(yv) + 4.0,
                ylab
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[series.color % COLORS.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && ty(p.1).is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(ty(y))))
                .collect();
            let dash = if series.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                pts.join(" ")
            );
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = W - RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                lx + 24.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}">{}</text>"#,
                lx + 30.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_svg())?;
        Ok(())
    }
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a >= 1e9 {
        format!("{:.2}G", v / 1e9)
    } else if a >= 1e6 {
        format!("{:.0}M", v / 1e6)
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn arm(tracking: bool) -> &'static str {
    if tracking {
        "on"
    } else {
        "off"
    }
}

fn closest(values: impl Iterator<Item = f64>, target: f64) -> Option<f64> {
    values.fold(None, |best: Option<f64>, v| match best {
        Some(b) if (b - target).abs() <= (v - target).abs() => Some(b),
        _ => Some(v),
    })
}

/// Series per (modulation, arm) of `y` against `x`, over rows passing `keep`.
fn series_by_format(
    rows: &[RunResult],
    keep: impl Fn(&RunResult) -> bool,
    x: impl Fn(&RunResult) -> f64,
    y: impl Fn(&RunResult) -> f64,
) -> Vec<Series> {
    let mut formats: Vec<&str> = Vec::new();
    for r in rows {
        if !formats.contains(&r.modulation.as_str()) {
            formats.push(&r.modulation);
        }
    }
    let mut out = Vec::new();
    for (fi, f) in formats.iter().enumerate() {
        for tracking in [true, false] {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.modulation == *f && r.tracking == tracking && keep(r))
                .map(|r| (x(r), y(r)))
                .collect();
            if pts.is_empty() {
                continue;
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            out.push(Series {
                label: format!("{} {}", f.to_uppercase(), arm(tracking)),
                points: pts,
                dashed: !tracking,
                color: fi,
            });
        }
    }
    out
}

/// Writes the sweep figure analogues into `dir`; returns the file names.
pub fn write_sweep_figures(rows: &[RunResult], dir: &Path) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let Some(h) = rows.first().map(|r| r.h_air_m) else {
        return Ok(written);
    };
    let ascr_top = rows
        .iter()
        .map(|r| r.ascr_rad_s)
        .fold(f64::NEG_INFINITY, f64::max);
    let rate_mid = closest(rows.iter().map(|r| r.symbol_rate_baud), 600e6).unwrap_or(0.0);
    let at_top = |r: &RunResult| r.h_air_m == h && r.ascr_rad_s == ascr_top;
    let at_mid = |r: &RunResult| r.h_air_m == h && r.symbol_rate_baud == rate_mid;

    let mut emit = |name: &str, chart: Chart| -> Result<()> {
        chart.write(&dir.join(name))?;
        written.push(name.to_string());
        Ok(())
    };
    emit(
        "ber_vs_symbol_rate.svg",
        Chart {
            title: format!("Average BER vs symbol rate (ASCR {ascr_top} rad/s, h {h} m)"),
            x_label: "symbol rate (Bd)".into(),
            y_label: "log10 BER".into(),
            log_y: true,
            series: series_by_format(rows, at_top, |r| r.symbol_rate_baud, |r| r.avg_ber),
        },
    )?;
    emit(
        "plr_vs_symbol_rate.svg",
        Chart {
            title: format!("PLR vs symbol rate (ASCR {ascr_top} rad/s, h {h} m)"),
            x_label: "symbol rate (Bd)".into(),
            y_label: "PLR".into(),
            log_y: false,
            series: series_by_format(rows, at_top, |r| r.symbol_rate_baud, |r| r.plr),
        },
    )?;
    emit(
        "ber_vs_ascr.svg",
        Chart {
            title: format!("Average BER vs ASCR ({} MBd, h {h} m)", rate_mid / 1e6),
            x_label: "ASCR (rad/s)".into(),
            y_label: "log10 BER".into(),
            log_y: true,
            series: series_by_format(rows, at_mid, |r| r.ascr_rad_s, |r| r.avg_ber),
        },
    )?;
    emit(
        "plr_vs_ascr.svg",
        Chart {
            title: format!("PLR vs ASCR ({} MBd, h {h} m)", rate_mid / 1e6),
            x_label: "ASCR (rad/s)".into(),
            y_label: "PLR".into(),
            log_y: false,
            series: series_by_format(rows, at_mid, |r| r.ascr_rad_s, |r| r.plr),
        },
    )?;
    emit(
        "throughput_vs_symbol_rate.svg",
        Chart {
            title: format!("Throughput vs symbol rate (ASCR {ascr_top} rad/s, h {h} m)"),
            x_label: "symbol rate (Bd)".into(),
            y_label: "throughput (b/s)".into(),
            log_y: false,
            series: series_by_format(rows, at_top, |r| r.symbol_rate_baud, |r| r.throughput_bps),
        },
    )?;
    Ok(written)
}

/// Received power and spot offset traces for one or two arms.
pub fn write_trace_figures(traces: &[(bool, &TraceLog)], dir: &Path) -> Result<Vec<String>> {
    // keep files small: at most ~2000 points per series
    let thin =
        |log: &TraceLog, f: &dyn Fn(&crate::tracker::TraceSample) -> f64| -> Vec<(f64, f64)> {
            let step = (log.samples.len() / 2000).max(1);
            log.samples
                .iter()
                .step_by(step)
                .map(|s| (s.t, f(s)))
                .collect()
        };
    let mk = |title: &str, y_label: &str, f: &dyn Fn(&crate::tracker::TraceSample) -> f64| Chart {
        title: title.into(),
        x_label: "time (s)".into(),
        y_label: y_label.into(),
        log_y: false,
        series: traces
            .iter()
            .map(|&(tracking, log)| Series {
                label: format!("tracking {}", arm(tracking)),
                points: thin(log, f),
                dashed: !tracking,
                color: if tracking { 0 } else { 1 },
            })
            .collect(),
    };
    let power = mk(
        "Received power (capture fraction)",
        "capture fraction",
        &|s| s.capture,
    );
    let spot = mk("Receiver spot offset, x axis", "offset x (m)", &|s| {
        s.offset.x
    });
    power.write(&dir.join("power_trace.svg"))?;
    spot.write(&dir.join("spot_offset_trace.svg"))?;
    Ok(vec![
        "power_trace.svg".into(),
        "spot_offset_trace.svg".into(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed_enough() {
        let c = Chart {
            title: "a < b".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_y: true,
            series: vec![Series {
                label: "s".into(),
                points: vec![(1.0, 1e-3), (2.0, 0.0), (3.0, 0.5)],
                dashed: true,
                color: 0,
            }],
        };
        let svg = c.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn closest_value() {
        assert_eq!(closest([2e8, 6e8, 1e9].into_iter(), 6e8), Some(6e8));
        assert_eq!(closest([2e8, 4e8].into_iter(), 6e8), Some(4e8));
        assert_eq!(closest(std::iter::empty(), 1.0), None);
    }
}
