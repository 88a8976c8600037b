//! Subcommand implementations: model, optimize, sweep, closed-loop.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use edca_core::{
    airtimes, average_delay, jacobian, lqi_gain, slot_probabilities, solve, tau_from_cwmin,
    throughput, Matrix, NetworkConfig, OperatingPoint, Plant, SolveError,
};

use crate::csvout::{num, opt_num, CsvWriter};
use crate::error::AppError;
use crate::schema::{NamedConfig, ScenarioFile, SweepSection};

fn open_out(path: &Path) -> Result<BufWriter<File>, AppError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `model`: evaluate the analytical chain at the configured CW_min.
pub fn cmd_model(cfg: &NamedConfig, out: Option<&Path>, quiet: bool) -> Result<(), AppError> {
    let net = &cfg.network;
    let tau = tau_from_cwmin(net)?;
    let probs = slot_probabilities(net, &tau);
    let thr = throughput(net, &tau);
    let delay = average_delay(net, &tau);
    let air = airtimes(net, &tau);

    if !quiet {
        println!(
            "{:<6} {:>3} {:>8} {:>10} {:>10} {:>12} {:>12} {:>10}",
            "class", "n", "cw_min", "tau", "p_fail", "thr_mbps", "delay_us", "airtime"
        );
        for (i, name) in cfg.names.iter().enumerate() {
            println!(
                "{:<6} {:>3} {:>8.2} {:>10.6} {:>10.6} {:>12.4} {:>12.2} {:>10.6}",
                name,
                net.classes[i].n,
                net.classes[i].cw_min,
                tau.0[i],
                probs.p_fail[i],
                thr[i],
                delay[i],
                air.total[i]
            );
        }
        println!(
            "idle fraction {:.6}, collision fraction {:.6}, airtime sum {:.6}",
            air.idle_fraction,
            air.collision_slot_fraction,
            air.total.iter().sum::<f64>()
        );
    }

    if let Some(path) = out {
        let mut w = CsvWriter::new(
            open_out(path)?,
            &[
                "class",
                "n",
                "cw_min",
                "tau",
                "p_fail",
                "throughput_mbps",
                "delay_us",
                "airtime_total",
                "airtime_successful",
                "airtime_collision",
            ],
        )?;
        for (i, name) in cfg.names.iter().enumerate() {
            w.row(&[
                name.clone(),
                net.classes[i].n.to_string(),
                num(net.classes[i].cw_min),
                num(tau.0[i]),
                num(probs.p_fail[i]),
                num(thr[i]),
                num(delay[i]),
                num(air.total[i]),
                num(air.successful[i]),
                num(air.collision[i]),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// `optimize`: proportional-fair operating point report.
pub fn cmd_optimize(cfg: &NamedConfig, out: Option<&Path>, quiet: bool) -> Result<(), AppError> {
    let point = solve(&cfg.network)?;
    if !quiet {
        print_point(cfg, &point);
    }
    if let Some(path) = out {
        let mut w = CsvWriter::new(open_out(path)?, &point_header(cfg))?;
        w.row(&point_row(cfg, &point))?;
        w.flush()?;
    }
    Ok(())
}

fn print_point(cfg: &NamedConfig, point: &OperatingPoint) {
    println!(
        "{:<6} {:>10} {:>10} {:>10} {:>12} {:>12} {:>10} {:>12}",
        "class", "tau*", "cw_min*", "p_fail*", "thr_mbps", "delay_us", "airtime", "lambda_us"
    );
    for (i, name) in cfg.names.iter().enumerate() {
        println!(
            "{:<6} {:>10.6} {:>10.3} {:>10.6} {:>12.4} {:>12.2} {:>10.6} {:>12.4e}",
            name,
            point.tau_star.0[i],
            point.cw_min_star[i],
            point.p_fail_star[i],
            point.throughputs[i],
            point.delays[i],
            point.airtimes[i],
            point.multipliers[i]
        );
    }
    println!(
        "utility {:.6}, kkt residual {:.3e}, airtime sum {:.6}",
        point.utility,
        point.kkt_residual,
        point.airtimes.iter().sum::<f64>()
    );
}

fn point_header(cfg: &NamedConfig) -> Vec<&str> {
    let mut h: Vec<String> = vec!["utility".into(), "kkt_residual".into(), "airtime_sum".into()];
    for name in &cfg.names {
        for col in ["tau", "cw_min", "pfail", "throughput_mbps", "delay_us", "airtime", "lambda"] {
            h.push(format!("{col}_{name}"));
        }
    }
    // leak: header lifetimes are simpler as &str and command runs once
    h.into_iter().map(|s| &*s.leak()).collect()
}

fn point_row(cfg: &NamedConfig, point: &OperatingPoint) -> Vec<String> {
    let mut r = vec![
        num(point.utility),
        num(point.kkt_residual),
        num(point.airtimes.iter().sum::<f64>()),
    ];
    for i in 0..cfg.names.len() {
        r.push(num(point.tau_star.0[i]));
        r.push(num(point.cw_min_star[i]));
        r.push(num(point.p_fail_star[i]));
        r.push(num(point.throughputs[i]));
        r.push(num(point.delays[i]));
        r.push(num(point.airtimes[i]));
        r.push(num(point.multipliers[i]));
    }
    r
}

fn apply_sweep_value(net: &NetworkConfig, sweep: &SweepSection, idx: usize, v: f64) -> NetworkConfig {
    let mut n = net.clone();
    match sweep.parameter.as_str() {
        "per" => n.classes[idx].per = v,
        "deadline" => n.classes[idx].deadline = v,
        _ => unreachable!("validated at parse"),
    }
    n
}

/// `sweep`: evaluate the optimizer across a parameter grid. Grid points run
/// concurrently; rows are emitted in grid order and per-point failures go to
/// the error column.
pub fn cmd_sweep(
    cfg: &NamedConfig,
    scenario: &ScenarioFile,
    out: Option<&Path>,
    quiet: bool,
) -> Result<(), AppError> {
    let sweep = scenario
        .sweep
        .as_ref()
        .ok_or_else(|| AppError::Config("scenario has no [sweep] section".into()))?;
    let idx = cfg
        .class_index(&sweep.class)
        .ok_or_else(|| AppError::Config(format!("sweep.class `{}` not in config", sweep.class)))?;
    let grid = sweep.grid();

    let results: Vec<Result<OperatingPoint, SolveError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .iter()
            .map(|&v| {
                let net = apply_sweep_value(&cfg.network, sweep, idx, v);
                scope.spawn(move || solve(&net))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });

    let mut header = vec!["parameter".to_string(), "class".into(), "value".into(), "error".into()];
    header.extend(point_header(cfg).into_iter().map(|s| s.to_string()));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut w = match out {
        Some(path) => Some(CsvWriter::new(open_out(path)?, &header_refs)?),
        None => None,
    };

    let width = point_row(cfg, &dummy_point(cfg)).len();
    for (v, res) in grid.iter().zip(&results) {
        let mut row = vec![sweep.parameter.clone(), sweep.class.clone(), num(*v)];
        match res {
            Ok(p) => {
                row.push(String::new());
                row.extend(point_row(cfg, p));
            }
            Err(e) => {
                row.push(e.to_string());
                row.extend(std::iter::repeat(String::new()).take(width));
            }
        }
        if let Some(w) = w.as_mut() {
            w.row(&row)?;
        }
        if !quiet {
            match res {
                Ok(p) => println!("{} = {v:.6e}: utility {:.6}", sweep.parameter, p.utility),
                Err(e) => println!("{} = {v:.6e}: {e}", sweep.parameter),
            }
        }
    }
    if let Some(w) = w.as_mut() {
        w.flush()?;
    }
    Ok(())
}

fn dummy_point(cfg: &NamedConfig) -> OperatingPoint {
    let n = cfg.names.len();
    OperatingPoint {
        tau_star: edca_core::AttemptVector(vec![0.0; n]),
        cw_min_star: vec![0.0; n],
        p_fail_star: vec![0.0; n],
        throughputs: vec![0.0; n],
        delays: vec![0.0; n],
        airtimes: vec![0.0; n],
        utility: 0.0,
        multipliers: vec![0.0; n],
        kkt_residual: 0.0,
    }
}

/// One closed-loop segment between membership events.
struct Segment {
    start_us: f64,
    net: NetworkConfig,
}

fn build_segments(
    cfg: &NamedConfig,
    scenario: &ScenarioFile,
) -> Result<Vec<Segment>, AppError> {
    let mut segments = vec![Segment { start_us: 0.0, net: cfg.network.clone() }];
    for ev in &scenario.events {
        let idx = cfg
            .class_index(&ev.class)
            .ok_or_else(|| AppError::Config(format!("event class `{}` not in config", ev.class)))?;
        let mut net = segments.last().unwrap().net.clone();
        net.classes[idx].n = ev.n;
        net.validate().map_err(|e| AppError::Config(e.to_string()))?;
        segments.push(Segment { start_us: ev.at_us, net });
    }
    Ok(segments)
}

/// Per-segment convergence summary.
pub struct SegmentSummary {
    pub start_us: f64,
    /// Beacons until the cumulative retry-bit estimate of every active AC is
    /// within the band around p^F*; None if never.
    pub beacons_to_band: Option<usize>,
    /// Max-abs cumulative estimate error at segment end.
    pub final_error: f64,
    /// Per-class mean windowed throughput after band entry (Mbps).
    pub mean_throughput: Vec<f64>,
    pub predicted_throughput: Vec<f64>,
}

pub const PFAIL_BAND: f64 = 0.02;

/// `closed-loop`: run the full optimizer -> LQI controller -> simulator loop
/// over the scenario timeline, one CSV row per beacon.
pub fn cmd_closed_loop(
    cfg: &NamedConfig,
    scenario: &ScenarioFile,
    seed: u64,
    duration_us: f64,
    out: Option<&Path>,
    quiet: bool,
) -> Result<Vec<SegmentSummary>, AppError> {
    if !(duration_us > 0.0) {
        return Err(AppError::Config("duration must be positive".into()));
    }
    let segments = build_segments(cfg, scenario)?;
    let n = cfg.names.len();
    let (q_state, q_int, r_pen) = match &scenario.controller {
        Some(c) => (c.q_state.unwrap_or(1.0), c.q_int.unwrap_or(50.0), c.r.unwrap_or(1e-4)),
        None => (1.0, 50.0, 1e-4),
    };

    let mut header = vec!["beacon".to_string(), "time_us".into(), "event".into()];
    for name in &cfg.names {
        for col in ["cw", "pfail_win", "pfail_cum", "pfail_ref", "thr_win", "thr_pred"] {
            header.push(format!("{col}_{name}"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut w = match out {
        Some(path) => Some(CsvWriter::new(open_out(path)?, &header_refs)?),
        None => None,
    };

    let mut summaries = Vec::new();
    let mut beacon_idx: u64 = 0;
    let mut time_us = 0.0;

    for (si, seg) in segments.iter().enumerate() {
        let seg_end = if si + 1 < segments.len() {
            segments[si + 1].start_us.min(duration_us)
        } else {
            duration_us
        };
        if seg.start_us >= duration_us {
            break;
        }

        // work in the subspace of populated classes: empty ACs make the
        // augmented system uncontrollable and carry no measurements
        let active = seg.net.active();
        let na = active.len();
        let mut red = seg.net.clone();
        red.classes = active.iter().map(|&i| seg.net.classes[i].clone()).collect();

        let point = solve(&red)?;
        let model = jacobian(&red, &point.cw_min_star)?;
        let q = {
            let mut q = Matrix::identity(2 * na);
            for i in 0..na {
                q[(i, i)] = q_state;
                q[(na + i, na + i)] = q_int;
            }
            q
        };
        let r = Matrix::scaled_identity(na, r_pen);
        let mut ctl = lqi_gain(&model, q, r, red.beacon / 1e6)?;
        let mut plant = Plant::new(&red, &point.cw_min_star, seed.wrapping_add(si as u64))?;
        let mut cw = point.cw_min_star.clone();

        let mut cum_r0 = vec![0u64; na];
        let mut cum_r1 = vec![0u64; na];
        let mut band_at: Option<usize> = None;
        let mut thr_sum = vec![0.0; na];
        let mut thr_windows = 0usize;
        let mut final_err = f64::INFINITY;
        let beacons = ((seg_end - seg.start_us) / red.beacon).round() as usize;

        for k in 0..beacons {
            let win = plant.run_window(&cw);
            for i in 0..na {
                cum_r0[i] += win.retry0[i];
                cum_r1[i] += win.retry1[i];
            }
            let cum: Vec<Option<f64>> = (0..na)
                .map(|i| {
                    let tot = cum_r0[i] + cum_r1[i];
                    if tot == 0 {
                        None
                    } else {
                        Some(cum_r1[i] as f64 / tot as f64)
                    }
                })
                .collect();
            let err = (0..na)
                .map(|i| cum[i].map(|c| (c - point.p_fail_star[i]).abs()).unwrap_or(1.0))
                .fold(0.0_f64, f64::max);
            final_err = err;
            if band_at.is_none() && err < PFAIL_BAND {
                band_at = Some(k);
            }
            if band_at.is_some() {
                for i in 0..na {
                    thr_sum[i] += win.throughput[i];
                }
                thr_windows += 1;
            }

            if let Some(wtr) = w.as_mut() {
                let mut row = vec![
                    beacon_idx.to_string(),
                    num(time_us),
                    if k == 0 { "1".to_string() } else { "0".to_string() },
                ];
                for full in 0..n {
                    match active.iter().position(|&a| a == full) {
                        Some(i) => {
                            row.push(num(cw[i]));
                            row.push(opt_num(win.pfail[i]));
                            row.push(opt_num(cum[i]));
                            row.push(num(point.p_fail_star[i]));
                            row.push(num(win.throughput[i]));
                            row.push(num(point.throughputs[i]));
                        }
                        None => row.extend(std::iter::repeat(String::new()).take(6)),
                    }
                }
                wtr.row(&row)?;
                // keep partial output on abort
                wtr.flush()?;
            }

            // a window with zero deliveries means a collision storm, not
            // missing data: feed a saturated failure estimate so the
            // controller backs off instead of holding the last value
            let meas: Vec<Option<f64>> =
                win.pfail.iter().map(|p| Some(p.unwrap_or(1.0))).collect();
            cw = ctl.step(&meas);
            time_us += red.beacon;
            beacon_idx += 1;
        }

        // expand per-AC results back to the full class list
        let mut mean_thr = vec![0.0; n];
        let mut pred_thr = vec![0.0; n];
        for (i, &full) in active.iter().enumerate() {
            if thr_windows > 0 {
                mean_thr[full] = thr_sum[i] / thr_windows as f64;
            }
            pred_thr[full] = point.throughputs[i];
        }
        summaries.push(SegmentSummary {
            start_us: seg.start_us,
            beacons_to_band: band_at,
            final_error: final_err,
            mean_throughput: mean_thr,
            predicted_throughput: pred_thr,
        });
    }

    if !quiet {
        for s in &summaries {
            let band = s
                .beacons_to_band
                .map(|b| format!("{b} beacons"))
                .unwrap_or_else(|| "never".to_string());
            println!(
                "segment @ {:.1}s: band entry {band}, final cum error {:.4}",
                s.start_us / 1e6,
                s.final_error
            );
            for (i, name) in cfg.names.iter().enumerate() {
                if s.predicted_throughput[i] > 0.0 && s.mean_throughput[i] > 0.0 {
                    println!(
                        "  {name}: mean thr {:.4} Mbps (predicted {:.4}, {:+.2}%)",
                        s.mean_throughput[i],
                        s.predicted_throughput[i],
                        100.0 * (s.mean_throughput[i] / s.predicted_throughput[i] - 1.0)
                    );
                }
            }
        }
    }
    Ok(summaries)
}
