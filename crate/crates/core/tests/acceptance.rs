//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//! Run with `cargo test --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use wavetrack::detector::{DetectorConfig, PdArrayReading};
use wavetrack::harness::{sweep, write_sweep_csv, ExperimentConfig, RunResult, TrackingArms};
use wavetrack::link::{
    aggregate, ber_from_snr, q_function, throughput, Modulation, PacketResult, Pam6Bits,
    DEFAULT_FEC_LIMIT,
};
use wavetrack::optics::{
    refract_exit_angle, spot_displacement, trace_beam, AxisAngles, LinkGeometry,
};
use wavetrack::rng::RngStream;
use wavetrack::tracker::{
    closed_loop_run, MirrorCommand, TrackerMode, TrackerParams, TrackerState,
};
use wavetrack::wave::{WaveComponent, WaveModel};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(detail: String, elapsed: Duration, budget: Duration) -> Outcome {
    ensure(elapsed < budget, || {
        format!("took {elapsed:.2?}, budget {budget:?}")
    })?;
    Ok(format!("{detail}; {elapsed:.2?}"))
}

fn physics_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..40 {
        let gamma = -0.84 + 1.68 * i as f64 / 39.0;
        for j in 0..25 {
            let h = 0.2 + 1.8 * j as f64 / 24.0;
            let g = LinkGeometry::default().with_h_air(h);
            let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1e-300);
            let want_d = common::displacement(gamma, h, 1.33, 1.0);
            let want_b = common::exit_angle(gamma, 1.33, 1.0);
            let want_t = common::traced_axis(0.01, gamma - 0.02, h, 0.14);
            let d = spot_displacement(gamma, &g).map_err(|e| e.to_string())?;
            let b = refract_exit_angle(gamma, &g).map_err(|e| e.to_string())?;
            let t = trace_beam(AxisAngles::new(0.01, 0.0), gamma - 0.02, 0.0, &g)
                .map_err(|e| e.to_string())?;
            worst = worst
                .max(rel(d, want_d))
                .max(rel(b, want_b))
                .max(rel(t.x, want_t));
        }
    }
    ensure(worst <= 1e-9, || {
        format!("max relative error {worst:.3e} on the 1000-point grid")
    })?;

    let g = LinkGeometry::default();
    let (mut lo, mut hi) = (0.0, 1.5);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if refract_exit_angle(mid, &g).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let critical = (1.0f64 / 1.33).asin();
    let gap = (lo - critical).abs();
    ensure(gap <= 1e-9, || {
        format!("TIR boundary at {lo}, expected {critical}")
    })?;
    within_budget(
        format!("grid rel err {worst:.1e}, TIR boundary off by {gap:.1e} rad"),
        start.elapsed(),
        Duration::from_secs(1),
    )
}

fn ascr_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for &(a, k, w) in &[
        (1e-3, 10.0, 5.0),
        (0.5e-3, 10.5, 30.0),
        (2e-3, 20.0, 3.0),
        (0.2e-3, 40.0, 12.0),
    ] {
        let model = WaveModel::new("one", vec![WaveComponent::new(a, k, w, 0.0).unwrap()]);
        let est = model.ascr(0.0).map_err(|e| e.to_string())?;
        let oracle = common::quadrature_ascr(a, k, w);
        worst = worst.max((est - oracle).abs() / oracle);
    }
    ensure(worst <= 0.02, || {
        format!("estimator off by {:.2}%", worst * 100.0)
    })?;
    let base = WaveModel::paper_wave();
    let mut fit_worst: f64 = 0.0;
    for &target in &[0.1, 0.2, 0.34] {
        let m = base
            .calibrate_to_ascr(target, 0.0)
            .map_err(|e| e.to_string())?;
        let got = m.ascr(0.0).map_err(|e| e.to_string())?;
        fit_worst = fit_worst.max((got - target).abs() / target);
    }
    ensure(fit_worst <= 0.01, || {
        format!("calibration off by {:.3}%", fit_worst * 100.0)
    })?;
    within_budget(
        format!(
            "estimator within {:.3}%, calibration within {:.4}%",
            worst * 100.0,
            fit_worst * 100.0
        ),
        start.elapsed(),
        Duration::from_secs(5),
    )
}

fn convergence() -> Outcome {
    let start = Instant::now();
    let detector = DetectorConfig {
        noise_sigma: 0.0,
        ..DetectorConfig::default()
    };
    let params = TrackerParams::default();
    let model = params.mirror_model();
    // the array only sees the static 0.05 rad spot at a short air path
    let geometry = LinkGeometry::default().with_h_air(0.3);
    let log = closed_loop_run(
        &common::static_slope(0.05),
        &geometry,
        &detector,
        &params,
        1.0,
        &mut RngStream::new(1, 0),
    )
    .map_err(|e| e.to_string())?;
    let settle = log
        .samples
        .iter()
        .position(|s| s.offset.norm() < 2.5e-3)
        .ok_or("never converged")?;
    ensure(settle <= 200, || format!("converged after {settle} ticks"))?;
    ensure(
        log.samples[settle..]
            .iter()
            .all(|s| s.offset.norm() < 2.5e-3),
        || "left the 2.5 mm disc after converging".into(),
    )?;
    let on_grid = |t: f64| {
        let c = t / model.lsb();
        (c - c.round()).abs() < 1e-6 && t.abs() <= 5f64.to_radians() + 1e-15
    };
    ensure(
        log.samples
            .iter()
            .all(|s| on_grid(s.tilt.x) && on_grid(s.tilt.y)),
        || "tilt left the DAC grid".into(),
    )?;
    let last = log.samples.last().unwrap();
    within_budget(
        format!(
            "h_air 0.3 m, {:.2} mm -> {:.3} mm in {settle} ticks",
            log.samples[0].offset.norm() * 1e3,
            last.offset.norm() * 1e3
        ),
        start.elapsed(),
        Duration::from_secs(1),
    )
}

struct Step {
    cells: &'static [((usize, usize), f64)],
    mode: TrackerMode,
    command: &'static str,
    misses: u32,
}

fn reading(cells: &[((usize, usize), f64)]) -> PdArrayReading {
    let mut g = [[0.0; 3]; 3];
    for &((r, c), v) in cells {
        g[r][c] = v;
    }
    PdArrayReading::new(g, 0.0)
}

fn command_name(c: MirrorCommand, step: f64) -> String {
    match c {
        MirrorCommand::Hold => "hold".into(),
        MirrorCommand::Reset => "reset".into(),
        MirrorCommand::Step { dx, dy } => {
            format!("step({:+},{:+})", (dx / step).round(), (dy / step).round())
        }
    }
}

fn state_machine() -> Outcome {
    use TrackerMode::*;
    const DARK: &[((usize, usize), f64)] = &[((1, 1), 0.02)];
    let script = [
        Step {
            cells: &[((1, 1), 0.9)],
            mode: Idle,
            command: "hold",
            misses: 0,
        },
        Step {
            cells: &[((1, 1), 0.4), ((1, 2), 0.7)],
            mode: Tracking,
            command: "step(+1,+0)",
            misses: 0,
        },
        Step {
            cells: &[((0, 0), 0.6), ((1, 1), 0.3)],
            mode: Tracking,
            command: "step(-1,+1)",
            misses: 0,
        },
        Step {
            cells: &[((2, 1), 0.5)],
            mode: Tracking,
            command: "step(+0,-1)",
            misses: 0,
        },
        Step {
            cells: &[((1, 1), 0.4)],
            mode: Tracking,
            command: "hold",
            misses: 0,
        },
        Step {
            cells: &[((1, 1), 0.8)],
            mode: Idle,
            command: "hold",
            misses: 0,
        },
        Step {
            cells: &[((1, 1), 0.3), ((1, 0), 0.35)],
            mode: Tracking,
            command: "step(-1,+0)",
            misses: 0,
        },
        Step {
            cells: DARK,
            mode: Tracking,
            command: "hold",
            misses: 1,
        },
        Step {
            cells: DARK,
            mode: Tracking,
            command: "hold",
            misses: 2,
        },
        Step {
            cells: &[((2, 2), 0.2)],
            mode: Tracking,
            command: "step(+1,-1)",
            misses: 0,
        },
        Step {
            cells: DARK,
            mode: Tracking,
            command: "hold",
            misses: 1,
        },
        Step {
            cells: DARK,
            mode: Tracking,
            command: "hold",
            misses: 2,
        },
        Step {
            cells: DARK,
            mode: Tracking,
            command: "hold",
            misses: 3,
        },
        Step {
            cells: DARK,
            mode: Tracking,
            command: "hold",
            misses: 4,
        },
        Step {
            cells: DARK,
            mode: Lost,
            command: "reset",
            misses: 5,
        },
        Step {
            cells: DARK,
            mode: Lost,
            command: "hold",
            misses: 5,
        },
        Step {
            cells: &[((0, 1), 0.15)],
            mode: Tracking,
            command: "step(+0,+1)",
            misses: 0,
        },
        Step {
            cells: &[((1, 1), 0.95)],
            mode: Idle,
            command: "hold",
            misses: 0,
        },
    ];
    let params = TrackerParams::default();
    let mut state = TrackerState::new(&params);
    let mut transitions = std::collections::BTreeSet::new();
    for (i, s) in script.iter().enumerate() {
        let (next, cmd) = state.advance(&reading(s.cells));
        let got = command_name(cmd, params.step);
        ensure(
            next.mode == s.mode && got == s.command && next.miss_count == s.misses,
            || {
                format!(
                    "step {i}: got {:?}/{got}/{} expected {:?}/{}/{}",
                    next.mode, next.miss_count, s.mode, s.command, s.misses
                )
            },
        )?;
        if cmd == MirrorCommand::Reset {
            ensure(
                next.mirror.tilt_x() == 0.0 && next.mirror.tilt_y() == 0.0,
                || "reset did not return the mirror to (0, 0)".into(),
            )?;
        }
        transitions.insert((state.mode.as_str(), next.mode.as_str()));
        state = next;
    }
    let needed = [
        ("idle", "idle"),
        ("idle", "tracking"),
        ("tracking", "tracking"),
        ("tracking", "idle"),
        ("tracking", "lost"),
        ("lost", "lost"),
        ("lost", "tracking"),
    ];
    for t in needed {
        ensure(transitions.contains(&t), || {
            format!("transition {t:?} not exercised")
        })?;
    }
    Ok(format!(
        "{} scripted readings, {} transitions covered",
        script.len(),
        needed.len()
    ))
}

fn paired(rows: &[RunResult]) -> Vec<(&RunResult, &RunResult)> {
    rows.chunks(2).map(|p| (&p[0], &p[1])).collect()
}

fn trend(rows: &[RunResult], elapsed: Duration) -> Outcome {
    let pairs = paired(rows);
    for (on, off) in &pairs {
        ensure(on.tracking && !off.tracking && on.seed == off.seed, || {
            "rows not paired".into()
        })?;
        ensure(on.plr <= off.plr, || {
            format!(
                "{} {} Bd ascr {}: plr on {} > off {}",
                on.modulation, on.symbol_rate_baud, on.ascr_rad_s, on.plr, off.plr
            )
        })?;
    }
    let mut ascrs: Vec<f64> = rows.iter().map(|r| r.ascr_rad_s).collect();
    ascrs.dedup();
    ascrs.sort_by(f64::total_cmp);
    ascrs.dedup();
    let mut parts = Vec::new();
    for a in ascrs {
        let (on, off) = pairs
            .iter()
            .filter(|(r, _)| r.ascr_rad_s == a)
            .fold((0.0, 0.0), |(x, y), (r_on, r_off)| {
                (x + r_on.plr, y + r_off.plr)
            });
        ensure(off > 0.0, || {
            format!("ascr {a}: no packet loss without tracking")
        })?;
        let reduction = 1.0 - on / off;
        ensure(reduction >= 0.30, || {
            format!("ascr {a}: reduction {:.1}%", reduction * 100.0)
        })?;
        parts.push(format!("{a}: -{:.0}%", reduction * 100.0));
    }
    within_budget(
        format!(
            "{} cells on <= off, PLR reduction {}",
            pairs.len(),
            parts.join(", ")
        ),
        elapsed,
        Duration::from_secs(60),
    )
}

fn anchor(rows: &[RunResult]) -> Outcome {
    let find = |tracking: bool| {
        rows.iter()
            .find(|r| {
                r.modulation == "pam4"
                    && r.symbol_rate_baud == 200e6
                    && r.ascr_rad_s == 0.34
                    && r.tracking == tracking
            })
            .ok_or_else(|| "anchor cell missing from sweep".to_string())
    };
    let (on, off) = (find(true)?, find(false)?);
    ensure((0.60..=0.90).contains(&off.plr), || {
        format!("tracking-off PLR {:.3}", off.plr)
    })?;
    ensure((0.03..=0.25).contains(&on.plr), || {
        format!("tracking-on PLR {:.3}", on.plr)
    })?;
    Ok(format!(
        "PLR off {:.1}%, on {:.1}%",
        off.plr * 100.0,
        on.plr * 100.0
    ))
}

fn throughput_identity() -> Outcome {
    let formats = [
        Modulation::OOK,
        Modulation::PAM4,
        Modulation::pam6(Pam6Bits::Log2),
    ];
    for m in formats {
        for &rate in &[200e6, 400e6, 600e6, 800e6, 1e9] {
            for lost in 0..=200usize {
                let packets: Vec<PacketResult> = (0..200)
                    .map(|i| {
                        PacketResult::new(if i < lost { 0.1 } else { 1e-6 }, DEFAULT_FEC_LIMIT)
                    })
                    .collect();
                let s = aggregate(&packets, rate, m).map_err(|e| e.to_string())?;
                let want = rate * m.bits_per_symbol() * (1.0 - lost as f64 / 200.0);
                ensure(s.throughput_bps == want, || {
                    format!("{m} {rate} lost {lost}: {}", s.throughput_bps)
                })?;
            }
        }
    }
    let packets: Vec<PacketResult> = (0..200)
        .map(|i| PacketResult::new(if i < 44 { 0.1 } else { 1e-6 }, DEFAULT_FEC_LIMIT))
        .collect();
    let s = aggregate(&packets, 800e6, Modulation::PAM4).map_err(|e| e.to_string())?;
    ensure(s.throughput_bps == 1_248_000_000.0, || {
        format!("got {}", s.throughput_bps)
    })?;
    ensure(
        throughput(800e6, Modulation::PAM4, 0.22) == 1_248_000_000.0,
        || "direct formula".into(),
    )?;
    Ok(format!("plr {} -> {} b/s", s.plr, s.throughput_bps))
}

fn determinism(first: &[u8], config: &ExperimentConfig) -> Outcome {
    let rows = sweep(config, TrackingArms::Both).map_err(|e| e.to_string())?;
    let second = csv_bytes(&rows)?;
    let body = |b: &[u8]| {
        b.splitn(2, |&c| c == b'\n')
            .nth(1)
            .unwrap_or_default()
            .to_vec()
    };
    ensure(body(first) == body(&second), || "sweep CSVs differ".into())?;
    Ok(format!("two sweeps, {} identical bytes", second.len()))
}

/// erfc to 30 significant digits from a 50-digit multiprecision evaluation.
#[allow(clippy::excessive_precision)]
const ERFC_TABLE: [(f64, f64); 20] = [
    (0.0, 1.0),
    (0.001, 0.998871621209030763620051522343),
    (0.01, 0.988716584444150383084090476452),
    (0.1, 0.887537083981715107796724928256),
    (0.25, 0.723673609831763067014931732235),
    (0.5, 0.479500122186953462317253346108),
    (0.75, 0.288844366346484868401062165409),
    (1.0, 0.157299207050285130658779364917),
    (1.5, 0.0338948535246892729330237383541),
    (2.0, 0.00467773498104726583793074363275),
    (2.5, 0.000406952017444958939564215739975),
    (3.0, 2.20904969985854413727761295823e-5),
    (3.5, 7.43098372341412745523683756096e-7),
    (4.0, 1.54172579002800188521596734869e-8),
    (4.5, 1.96616044154288747627916036766e-10),
    (5.0, 1.53745979442803485018834348538e-12),
    (6.0, 2.15197367124989131165933503992e-17),
    (7.0, 4.1838256077794143986140102239e-23),
    (-0.5, 1.52049987781304653768274665389),
    (-2.0, 1.99532226501895273416206925637),
];

fn ber_model() -> Outcome {
    let formats = [
        Modulation::OOK,
        Modulation::PAM4,
        Modulation::pam6(Pam6Bits::Log2),
    ];
    for m in formats {
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let snr = 0.05 * i as f64;
            let b = ber_from_snr(snr, m);
            ensure(b < prev, || format!("{m} not decreasing at snr {snr}"))?;
            prev = b;
        }
    }
    // ordering is asserted from SNR 1 up; below ~0.9 every format is above 0.24 BER
    for i in 0..1000 {
        let snr = 10f64.powf(3.0 * i as f64 / 999.0);
        let b: Vec<f64> = formats.iter().map(|&m| ber_from_snr(snr, m)).collect();
        ensure(b[0] < b[1] && b[1] < b[2], || {
            format!("ordering broken at snr {snr}: {b:?}")
        })?;
    }
    let mut worst: f64 = 0.0;
    for (x, want) in ERFC_TABLE {
        // Q(x sqrt 2) = erfc(x) / 2
        let got = 2.0 * q_function(x * std::f64::consts::SQRT_2);
        worst = worst.max((got - want).abs());
    }
    ensure(worst <= 1e-10, || format!("erfc error {worst:.2e}"))?;
    Ok(format!(
        "monotone, ordered on SNR [1, 1000], erfc max abs error {worst:.1e}"
    ))
}

fn csv_bytes(rows: &[RunResult]) -> Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn main() {
    let config = ExperimentConfig::default();
    let start = Instant::now();
    let swept = sweep(&config, TrackingArms::Both).map_err(|e| e.to_string());
    let sweep_time = start.elapsed();

    let results: Vec<(&str, Outcome)> = vec![
        ("1 physics oracle", physics_oracle()),
        ("2 ASCR estimator and calibration", ascr_oracle()),
        ("3 closed-loop convergence", convergence()),
        ("4 tracker state machine", state_machine()),
        (
            "5 tracking trend over the sweep",
            swept.clone().and_then(|r| trend(&r, sweep_time)),
        ),
        (
            "6 calibrated anchor",
            swept.clone().and_then(|r| anchor(&r)),
        ),
        ("7 throughput identity", throughput_identity()),
        (
            "8 sweep determinism",
            swept
                .and_then(|r| csv_bytes(&r))
                .and_then(|b| determinism(&b, &config)),
        ),
        ("9 BER model", ber_model()),
    ];

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
