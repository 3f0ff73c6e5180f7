//! Command line front end: program runner, built-in scenarios, calibration fits.
//!
//! Exit codes: 2 for parse and usage problems, 3 when a propagator fails to
//! converge, 4 when --check is passed and a scenario metric misses.

use clap::{Parser, Subcommand};
use fockbench::program::{BenchProgram, Freq, FreqUnit, Step, TimeUnit, TimeVal};
use fockbench::{calibration, figures, hilbert, io, program, Error, MeasurementRecord, PropagatorConfig};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fockbench", version, about = "Driven Kerr mode workbench in the truncated Fock basis")]
struct Cli {
    /// Seed recorded in run metadata and used by stochastic scenarios.
    /// The FOCKBENCH_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Directory for CSV and JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Verify the scenario's metric checks; exit 4 if any fail.
    #[arg(long, global = true)]
    check: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and execute a program file, writing its declared outputs.
    Run { program: PathBuf },
    /// Execute a built-in scenario: 2, 3, 4, 5, s7, s8 or s10.
    Figure { id: String },
    /// Sweep the lens detuning and fit the sextic Kerr rate.
    CalibrateK6,
    /// Fit the camera line model to a CSV of n,shift_mhz rows.
    CameraFit { csv: PathBuf },
    /// Re-run a program across a grid of one step parameter.
    Sweep {
        program: PathBuf,
        /// One of pump.t, pump.delta, pump.eps, wait.t, wait.delta.
        #[arg(long)]
        param: String,
        /// start:stop:count; count is the number of intervals, so
        /// 0:400ns:20 yields 21 points.
        #[arg(long)]
        values: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = match std::env::var("FOCKBENCH_SEED") {
        Ok(v) => match v.parse() {
            Ok(s) => s,
            Err(_) => {
                eprintln!("FOCKBENCH_SEED must be an integer, got '{v}'");
                return ExitCode::from(2);
            }
        },
        Err(_) => cli.seed,
    };
    match dispatch(&cli, seed) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli, seed: u64) -> Result<u8, Error> {
    match &cli.cmd {
        Cmd::Run { program } => cmd_run(program, &cli.out, seed),
        Cmd::Figure { id } => cmd_figure(id, &cli.out, seed, cli.check),
        Cmd::CalibrateK6 => cmd_calibrate_k6(&cli.out, seed, cli.check),
        Cmd::CameraFit { csv } => cmd_camera_fit(csv, &cli.out),
        Cmd::Sweep { program, param, values } => {
            cmd_sweep(program, param, values, &cli.out, seed)
        }
    }
}

fn usage(msg: &str) -> Result<u8, Error> {
    eprintln!("{msg}");
    Ok(2)
}

fn read_input(path: &Path) -> Result<Option<String>, Error> {
    match std::fs::read_to_string(path) {
        Ok(t) => Ok(Some(t)),
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            Ok(None)
        }
    }
}

fn cmd_run(path: &Path, out: &Path, seed: u64) -> Result<u8, Error> {
    let Some(text) = read_input(path)? else { return Ok(2) };
    let prog = program::parse_bench(&text)?;
    let cfg = PropagatorConfig::default();
    let (_, records) = prog.run(&cfg)?;
    std::fs::create_dir_all(out)?;
    let opts = io::CsvOptions::default();
    for (label, rel) in &prog.outputs {
        let recs: Vec<MeasurementRecord> =
            records.iter().filter(|r| &r.label == label).cloned().collect();
        let dest = out.join(rel);
        if let Some(parent) = dest.parent() {
            std::fs::create_dir_all(parent)?;
        }
        io::emit_csv(&dest, &recs, &opts)?;
        println!("wrote {}", dest.display());
    }
    let meta = out.join("run.json");
    io::emit_json(&meta, &prog, seed, &records, &[], &opts)?;
    println!("wrote {}", meta.display());
    Ok(0)
}

fn checks_json(fig: &figures::FigureOutput) -> Vec<Value> {
    fig.checks
        .iter()
        .map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail }))
        .collect()
}

fn print_checks(fig: &figures::FigureOutput) {
    for c in &fig.checks {
        let status = if c.pass { "pass" } else { "FAIL" };
        println!("[{status}] {}: {}", c.name, c.detail);
    }
    for c in &fig.caveats {
        println!("caveat: {c}");
    }
}

fn cmd_figure(id: &str, out: &Path, seed: u64, check: bool) -> Result<u8, Error> {
    if !figures::figure_ids().contains(&id) {
        return usage(&format!(
            "unknown figure '{id}'; available: {}",
            figures::figure_ids().join(", ")
        ));
    }
    let fig = figures::run_figure(id, seed)?;
    std::fs::create_dir_all(out)?;
    let opts = io::CsvOptions::default();
    let csv_path = out.join(format!("figure_{id}.csv"));
    io::emit_csv(&csv_path, &fig.records, &opts)?;
    let doc = json!({
        "figure": fig.id,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "summary": fig.summary,
        "checks": checks_json(&fig),
        "caveats": fig.caveats,
    });
    let json_path = out.join(format!("figure_{id}.json"));
    io::write_atomic(&json_path, &serde_json::to_string_pretty(&doc)?)?;
    print_checks(&fig);
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    if check && !fig.all_pass() {
        return Ok(4);
    }
    Ok(0)
}

fn cmd_calibrate_k6(out: &Path, seed: u64, check: bool) -> Result<u8, Error> {
    let fig = figures::run_figure("3", seed)?;
    let slope = fig.summary["slope_hz_per_photon"].as_f64().unwrap_or(f64::NAN);
    let k6 = fig.summary["k6_hz"].as_f64().unwrap_or(f64::NAN);
    let hw = fig.summary["k6_half_width_hz"].as_f64().unwrap_or(f64::NAN);
    println!("detuning slope {slope:.1} Hz per photon");
    println!("sextic Kerr rate {k6:.3} +- {hw:.3} Hz");
    std::fs::create_dir_all(out)?;
    let doc = json!({
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "slope_hz_per_photon": slope,
        "k6_hz": k6,
        "k6_half_width_hz": hw,
        "summary": fig.summary,
        "checks": checks_json(&fig),
    });
    let path = out.join("calibrate_k6.json");
    io::write_atomic(&path, &serde_json::to_string_pretty(&doc)?)?;
    println!("wrote {}", path.display());
    if check {
        print_checks(&fig);
        if !fig.all_pass() {
            return Ok(4);
        }
    }
    Ok(0)
}

fn cmd_camera_fit(csv: &Path, out: &Path) -> Result<u8, Error> {
    let Some(text) = read_input(csv)? else { return Ok(2) };
    let mut points: Vec<(usize, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = if cols.len() >= 2 {
            cols[0].parse::<usize>().ok().zip(cols[1].parse::<f64>().ok())
        } else {
            None
        };
        match parsed {
            Some((n, shift_mhz)) => points.push((n, hilbert::mhz(shift_mhz))),
            None if idx == 0 => continue, // header row
            None => {
                return Err(Error::Parse {
                    line: idx + 1,
                    col: 1,
                    expected: "n,shift_mhz".into(),
                })
            }
        }
    }
    let fit = calibration::fit_camera(&points)?;
    let tau = hilbert::TAU;
    println!(
        "chi = {:.6} +- {:.6} MHz",
        fit.chi / tau,
        fit.half_widths[0] / tau
    );
    println!(
        "Ke = {:.4} +- {:.4} kHz",
        fit.ke / tau * 1e3,
        fit.half_widths[1] / tau * 1e3
    );
    println!("rms residual {:.4} kHz", fit.residual_rms / tau * 1e3);
    std::fs::create_dir_all(out)?;
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "points": points.len(),
        "chi_mhz": fit.chi / tau,
        "chi_half_width_mhz": fit.half_widths[0] / tau,
        "ke_khz": fit.ke / tau * 1e3,
        "ke_half_width_khz": fit.half_widths[1] / tau * 1e3,
        "residual_rms_khz": fit.residual_rms / tau * 1e3,
    });
    let path = out.join("camera_fit.json");
    io::write_atomic(&path, &serde_json::to_string_pretty(&doc)?)?;
    println!("wrote {}", path.display());
    Ok(0)
}

enum SweepKey {
    PumpT,
    PumpDelta,
    PumpEps,
    WaitT,
    WaitDelta,
}

impl SweepKey {
    fn parse(key: &str) -> Option<SweepKey> {
        match key {
            "pump.t" => Some(SweepKey::PumpT),
            "pump.delta" => Some(SweepKey::PumpDelta),
            "pump.eps" => Some(SweepKey::PumpEps),
            "wait.t" => Some(SweepKey::WaitT),
            "wait.delta" => Some(SweepKey::WaitDelta),
            _ => None,
        }
    }

    fn is_time(&self) -> bool {
        matches!(self, SweepKey::PumpT | SweepKey::WaitT)
    }

    /// Sets the parameter on every matching step; returns how many were hit.
    fn apply(&self, prog: &mut BenchProgram, value: f64, tu: TimeUnit, fu: FreqUnit) -> usize {
        let mut hits = 0;
        for step in &mut prog.steps {
            match (self, step) {
                (SweepKey::PumpT, Step::Pump { t, .. }) => {
                    *t = TimeVal { value, unit: tu };
                    hits += 1;
                }
                (SweepKey::PumpDelta, Step::Pump { delta, .. }) => {
                    *delta = Freq { value, unit: fu };
                    hits += 1;
                }
                (SweepKey::PumpEps, Step::Pump { eps, .. }) => {
                    *eps = Freq { value, unit: fu };
                    hits += 1;
                }
                (SweepKey::WaitT, Step::Wait { t, .. }) => {
                    *t = TimeVal { value, unit: tu };
                    hits += 1;
                }
                (SweepKey::WaitDelta, Step::Wait { delta, .. }) => {
                    *delta = Freq { value, unit: fu };
                    hits += 1;
                }
                _ => {}
            }
        }
        hits
    }
}

fn split_suffix(tok: &str) -> (&str, &str) {
    let cut = tok
        .find(|c: char| !(c.is_ascii_digit() || "+-.eE".contains(c)))
        .unwrap_or(tok.len());
    tok.split_at(cut)
}

fn time_unit(suffix: &str) -> Result<Option<TimeUnit>, String> {
    match suffix {
        "" => Ok(None),
        "ns" => Ok(Some(TimeUnit::Ns)),
        "us" => Ok(Some(TimeUnit::Us)),
        other => Err(format!("unknown time unit '{other}' (ns|us)")),
    }
}

fn freq_unit(suffix: &str) -> Result<Option<FreqUnit>, String> {
    match suffix {
        "" => Ok(None),
        "Hz" => Ok(Some(FreqUnit::Hz)),
        "kHz" => Ok(Some(FreqUnit::KHz)),
        "MHz" => Ok(Some(FreqUnit::MHz)),
        other => Err(format!("unknown frequency unit '{other}' (Hz|kHz|MHz)")),
    }
}

fn time_scale(u: TimeUnit) -> f64 {
    match u {
        TimeUnit::Ns => 1e-3,
        TimeUnit::Us => 1.0,
    }
}

fn freq_scale(u: FreqUnit) -> f64 {
    match u {
        FreqUnit::Hz => hilbert::hz(1.0),
        FreqUnit::KHz => hilbert::khz(1.0),
        FreqUnit::MHz => hilbert::mhz(1.0),
    }
}

/// Parses start:stop:count into grid values expressed in one shared unit.
fn parse_grid(
    spec: &str,
    key: &SweepKey,
) -> Result<(Vec<f64>, TimeUnit, FreqUnit, String), String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("--values wants start:stop:count, got '{spec}'"));
    }
    let (astr, asuf) = split_suffix(parts[0]);
    let (bstr, bsuf) = split_suffix(parts[1]);
    let a: f64 = astr.parse().map_err(|_| format!("bad number '{}'", parts[0]))?;
    let b: f64 = bstr.parse().map_err(|_| format!("bad number '{}'", parts[1]))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| format!("bad count '{}'", parts[2]))?;
    if count == 0 {
        return Err("count must be >= 1".into());
    }

    let mut tu = TimeUnit::Us;
    let mut fu = FreqUnit::MHz;
    let (a, b, unit_name) = if key.is_time() {
        let ua = time_unit(asuf)?;
        let ub = time_unit(bsuf)?;
        tu = ub.or(ua).unwrap_or(TimeUnit::Us);
        let scale = time_scale(tu);
        let a_us = a * ua.map_or(scale, time_scale);
        let b_us = b * ub.map_or(scale, time_scale);
        (a_us / scale, b_us / scale, if tu == TimeUnit::Ns { "ns" } else { "us" })
    } else {
        let ua = freq_unit(asuf)?;
        let ub = freq_unit(bsuf)?;
        fu = ub.or(ua).unwrap_or(FreqUnit::MHz);
        let scale = freq_scale(fu);
        let a_r = a * ua.map_or(scale, freq_scale);
        let b_r = b * ub.map_or(scale, freq_scale);
        let name = match fu {
            FreqUnit::Hz => "Hz",
            FreqUnit::KHz => "kHz",
            FreqUnit::MHz => "MHz",
        };
        (a_r / scale, b_r / scale, name)
    };

    let values = (0..=count)
        .map(|k| a + (b - a) * k as f64 / count as f64)
        .collect();
    Ok((values, tu, fu, unit_name.to_string()))
}

fn cmd_sweep(
    path: &Path,
    param: &str,
    values: &str,
    out: &Path,
    seed: u64,
) -> Result<u8, Error> {
    let Some(key) = SweepKey::parse(param) else {
        return usage(&format!(
            "unknown --param '{param}'; one of pump.t, pump.delta, pump.eps, wait.t, wait.delta"
        ));
    };
    let grid = match parse_grid(values, &key) {
        Ok(g) => g,
        Err(msg) => return usage(&msg),
    };
    let (points, tu, fu, unit_name) = grid;
    let Some(text) = read_input(path)? else { return Ok(2) };
    let prog = program::parse_bench(&text)?;
    {
        let mut probe = prog.clone();
        if key.apply(&mut probe, points[0], tu, fu) == 0 {
            return usage(&format!("program has no step matching --param '{param}'"));
        }
    }
    std::fs::create_dir_all(out)?;
    let cfg = PropagatorConfig::default();
    let opts = io::CsvOptions::default();

    let results: Result<Vec<Value>, Error> = points
        .par_iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut p = prog.clone();
            key.apply(&mut p, v, tu, fu);
            let (fin, recs) = p.run(&cfg)?;
            let norm: f64 = fin.amps.iter().map(|a| a.norm_sqr()).sum();
            let dest = out.join(format!("point_{k:03}.csv"));
            io::write_atomic(&dest, &io::csv_string(&recs, &opts))?;
            Ok(json!({
                "index": k,
                "value": v,
                "unit": unit_name,
                "seed": seed + k as u64,
                "records": recs.len(),
                "final_norm": norm,
                "csv": dest.file_name().and_then(|s| s.to_str()),
            }))
        })
        .collect();
    let rows = results?;

    let doc = json!({
        "param": param,
        "values": values,
        "unit": unit_name,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "points": rows,
    });
    let meta = out.join("sweep.json");
    io::write_atomic(&meta, &serde_json::to_string_pretty(&doc)?)?;
    println!(
        "wrote {} sweep points and {}",
        points.len(),
        meta.display()
    );
    Ok(0)
}
