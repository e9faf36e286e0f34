//! Command-line front end: loads JSON configs, runs named scenarios, and
//! writes CSV/JSON/SVG artifacts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical-guard failure.

mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use eggs::config::{self, CheckStatus, ExperimentConfig, SpamPrepare};
use eggs::fock;
use eggs::gates::{self, SpamConfig};
use eggs::model;
use eggs::scenarios::{self, MsInitial};
use eggs::ultrafast::{self, PulseSequence};
use eggs::Error;

/// Reference parameter set shipped with the repository.
const BUNDLED_CONFIG: &str = include_str!("../../../configs/reference.json");

#[derive(Parser)]
#[command(
    name = "eggs",
    about = "Electric-field-gradient gate simulations for trapped polar molecular ions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults to the bundled reference parameters
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts (default: current directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted-key override, e.g. --set trap.x_eq=1e-8 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Re-run the scenario at half step size and report the trace change
    #[arg(long)]
    convergence_check: bool,
    /// Worker thread count (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print all derived quantities for a config as JSON
    Params(Common),
    /// Check config invariants and print a pass/warn/fail table
    Validate(Common),
    /// Bichromatic state-dependent heating of a single ion
    Heating(Common),
    /// Two-qubit entangling gate on the target mode
    MsGate(Common),
    /// State preparation and QND measurement protocol
    Spam(Common),
    /// Solve for a closed ultrafast kick sequence
    UltrafastDesign(Common),
    /// Simulate a kick sequence: trajectories and phase report
    UltrafastSim {
        #[command(flatten)]
        common: Common,
        /// Pulse-sequence JSON from ultrafast-design; designed from the
        /// config when omitted
        #[arg(long)]
        sequence: Option<PathBuf>,
    },
}

enum CliError {
    Compute(Error),
    Io(std::io::Error),
    Usage(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Compute(
                Error::TruncationGuard { .. }
                | Error::NormDrift { .. }
                | Error::TruncationBreach { .. }
                | Error::AmbiguousThreshold { .. }
                | Error::SolverFailed { .. },
            ) => 3,
            _ => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Compute(e) => e.to_string(),
            CliError::Io(e) => format!("i/o error: {e}"),
            CliError::Usage(m) => m.clone(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<V> = Result<V, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> CliResult<u8> {
    let common = match &command {
        Command::Params(c)
        | Command::Validate(c)
        | Command::Heating(c)
        | Command::MsGate(c)
        | Command::Spam(c)
        | Command::UltrafastDesign(c)
        | Command::UltrafastSim { common: c, .. } => c,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(common)?;
    let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match command {
        Command::Params(c) => cmd_params(&cfg, &c),
        Command::Validate(c) => cmd_validate(&cfg, &c),
        Command::Heating(c) => cmd_heating(&cfg, &c, &out_dir),
        Command::MsGate(c) => cmd_ms_gate(&cfg, &c, &out_dir),
        Command::Spam(c) => cmd_spam(&cfg, &c, &out_dir),
        Command::UltrafastDesign(c) => cmd_ultrafast_design(&cfg, &c, &out_dir),
        Command::UltrafastSim { common, sequence } => {
            cmd_ultrafast_sim(&cfg, &common, &out_dir, sequence.as_deref())
        }
    }
}

fn load_config(common: &Common) -> CliResult<ExperimentConfig<f64>> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => BUNDLED_CONFIG.to_string(),
    };
    let mut overrides = Vec::new();
    for entry in &common.set {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{entry}'")))?;
        overrides.push((key.to_string(), value.to_string()));
    }
    Ok(ExperimentConfig::from_json_str(&text, &overrides)?)
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    output::write_atomic(path, &output::json_bytes(value))?;
    Ok(())
}

fn cmd_params(cfg: &ExperimentConfig<f64>, common: &Common) -> CliResult<u8> {
    let report = json!({
        "config": cfg.echo(),
        "derived": config::derived_quantities(cfg)?,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("JSON"));
    if let Some(dir) = &common.out {
        write_json(&dir.join("params.json"), &report)?;
    }
    Ok(0)
}

fn cmd_validate(cfg: &ExperimentConfig<f64>, common: &Common) -> CliResult<u8> {
    let reports = config::validate(cfg);
    let mut failed = false;
    for r in &reports {
        let tag = match r.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Warn => "warn",
            CheckStatus::Fail => {
                failed = true;
                "fail"
            }
        };
        println!("{tag:4}  {:24}  {}", r.name, r.message);
    }
    if let Some(dir) = &common.out {
        let value = serde_json::to_value(&reports).expect("reports serialize");
        write_json(
            &dir.join("validate.json"),
            &json!({ "config": cfg.echo(), "checks": value }),
        )?;
    }
    Ok(if failed { 2 } else { 0 })
}

fn cmd_heating(cfg: &ExperimentConfig<f64>, common: &Common, out: &Path) -> CliResult<u8> {
    let run = scenarios::heating_scenario(cfg, common.convergence_check)?;
    let r = &run.result;
    output::write_atomic(
        &out.join("heating.csv"),
        &output::trace_csv(&r.times, &r.mean_n, &r.p_gg, &r.p_ee, r.norm_drift),
    )?;
    let report = json!({
        "config": cfg.echo(),
        "scenario": "heating",
        "n_bar": run.n_bar,
        "n_bar_realized": run.n_bar_realized,
        "norm_drift": r.norm_drift,
        "dt_s": r.dt,
        "steps": r.steps,
        "convergence_delta": run.convergence_delta,
        "traces": {
            "t_s": output::floats(&r.times),
            "mean_n": output::floats(&r.mean_n),
            "p_gg": output::floats(&r.p_gg),
            "p_ee": output::floats(&r.p_ee),
            "analytic_mean_n": output::floats(&run.analytic_mean_n),
        },
    });
    write_json(&out.join("heating.json"), &report)?;
    let plot = svg::line_plot(
        "state-dependent heating",
        "t (s)",
        "mean phonon number",
        &[
            svg::Series {
                label: "numeric".into(),
                color: svg::COLORS[0],
                points: zip(&r.times, &r.mean_n),
            },
            svg::Series {
                label: "analytic".into(),
                color: svg::COLORS[1],
                points: zip(&r.times, &run.analytic_mean_n),
            },
        ],
    );
    output::write_atomic(&out.join("heating.svg"), plot.as_bytes())?;
    println!(
        "heating: <n>({}) = {} (thermal {}), artifacts in {}",
        r.times.last().unwrap(),
        r.mean_n.last().unwrap(),
        run.n_bar,
        out.display()
    );
    Ok(0)
}

fn cmd_ms_gate(cfg: &ExperimentConfig<f64>, common: &Common, out: &Path) -> CliResult<u8> {
    let run = scenarios::ms_scenario(cfg, MsInitial::Thermal, common.convergence_check)?;
    let r = &run.result;
    output::write_atomic(
        &out.join("ms_gate.csv"),
        &output::trace_csv(&r.times, &r.mean_n, &r.p_gg, &r.p_ee, r.norm_drift),
    )?;
    let report = json!({
        "config": cfg.echo(),
        "scenario": "ms-gate",
        "gamma_eff_rad_s": run.gamma_eff,
        "t_bell_s": run.t_bell,
        "norm_drift": r.norm_drift,
        "dt_s": r.dt,
        "steps": r.steps,
        "convergence_delta": run.convergence_delta,
        "traces": {
            "t_s": output::floats(&r.times),
            "theta_rad": output::floats(&run.theta),
            "mean_n": output::floats(&r.mean_n),
            "p_gg": output::floats(&r.p_gg),
            "p_ee": output::floats(&r.p_ee),
            "analytic_p_gg": output::floats(&run.analytic_p_gg),
            "analytic_p_ee": output::floats(&run.analytic_p_ee),
        },
    });
    write_json(&out.join("ms_gate.json"), &report)?;
    let plot = svg::line_plot(
        "entangling gate populations",
        "t (s)",
        "population",
        &[
            svg::Series {
                label: "P_gg".into(),
                color: svg::COLORS[0],
                points: zip(&r.times, &r.p_gg),
            },
            svg::Series {
                label: "P_ee".into(),
                color: svg::COLORS[1],
                points: zip(&r.times, &r.p_ee),
            },
            svg::Series {
                label: "cos^2 theta".into(),
                color: svg::COLORS[2],
                points: zip(&r.times, &run.analytic_p_gg),
            },
            svg::Series {
                label: "sin^2 theta".into(),
                color: svg::COLORS[3],
                points: zip(&r.times, &run.analytic_p_ee),
            },
        ],
    );
    output::write_atomic(&out.join("ms_gate.svg"), plot.as_bytes())?;
    println!(
        "ms-gate: Bell time {} s, final P_gg = {}, artifacts in {}",
        run.t_bell,
        r.p_gg.last().unwrap(),
        out.display()
    );
    Ok(0)
}

fn cmd_spam(cfg: &ExperimentConfig<f64>, _common: &Common, out: &Path) -> CliResult<u8> {
    let mode = cfg.single_ion_mode();
    let spam_cfg = SpamConfig {
        omega_rabi: cfg.omega_rabi(),
        eta: model::eta(&mode, 0, &cfg.molecule, &cfg.trap)?,
        n_bar: model::thermal_occupation(cfg.gate.temperature, mode.frequency),
        thermal_epsilon: cfg.thermal_epsilon,
        drive_time: cfg.spam.drive_time,
        threshold: cfg.spam.threshold,
        seed: cfg.spam.seed,
        fock_margin: cfg.fock_margin,
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (c_g, c_e) = match cfg.spam.prepare {
        SpamPrepare::G => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        SpamPrepare::E => (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
        SpamPrepare::Equal => (Complex64::new(s, 0.0), Complex64::new(s, 0.0)),
    };
    let first = gates::spam_protocol(c_g, c_e, &spam_cfg)?;
    let repeat = gates::spam_remeasure(&first, &spam_cfg)?;
    let report = json!({
        "config": cfg.echo(),
        "scenario": "spam",
        "record": serde_json::to_value(&first.record).expect("record serializes"),
        "repeat": serde_json::to_value(&repeat.record).expect("record serializes"),
    });
    write_json(&out.join("spam.json"), &report)?;
    println!(
        "spam: herald {:?} (p_bright = {}), repeat herald {:?}, artifacts in {}",
        first.record.herald,
        first.record.p_bright,
        repeat.record.herald,
        out.display()
    );
    Ok(0)
}

fn design_from_config(cfg: &ExperimentConfig<f64>) -> Result<PulseSequence<f64>, Error> {
    let omega1 = cfg.trap.secular_frequency;
    let t_max = 30.0 * std::f64::consts::TAU / omega1;
    ultrafast::design_sequence(
        cfg.ultrafast.n_pulses,
        cfg.ultrafast.dp_base,
        std::f64::consts::FRAC_PI_4,
        t_max,
        omega1,
        cfg.ultrafast.t_pulse,
    )
}

fn cmd_ultrafast_design(
    cfg: &ExperimentConfig<f64>,
    _common: &Common,
    out: &Path,
) -> CliResult<u8> {
    let seq = design_from_config(cfg)?;
    let residual = seq.closure_residual();
    let report = json!({
        "config": cfg.echo(),
        "scenario": "ultrafast-design",
        "sequence": serde_json::to_value(&seq).expect("sequence serializes"),
        "accumulated_phase_rad": seq.accumulated_phase(),
        "closure_residual": [residual[0], residual[1]],
        "total_time_s": seq.total_time(),
    });
    write_json(&out.join("pulse_sequence.json"), &report)?;
    println!(
        "ultrafast-design: {} kicks over {} s, phase {} rad, artifacts in {}",
        seq.pulses.len(),
        seq.total_time(),
        seq.accumulated_phase(),
        out.display()
    );
    Ok(0)
}

fn load_sequence(path: &Path) -> CliResult<PulseSequence<f64>> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("sequence file is not valid JSON: {e}")))?;
    let seq_value = value.get("sequence").cloned().unwrap_or(value);
    let seq: PulseSequence<f64> =
        serde_json::from_value(seq_value).map_err(|e| Error::Config(format!("sequence: {e}")))?;
    seq.validate()?;
    Ok(seq)
}

fn cmd_ultrafast_sim(
    cfg: &ExperimentConfig<f64>,
    _common: &Common,
    out: &Path,
    sequence: Option<&Path>,
) -> CliResult<u8> {
    let seq = match sequence {
        Some(path) => load_sequence(path)?,
        None => design_from_config(cfg)?,
    };

    // trajectories of the two inequivalent X branches
    let branches = [(1i8, 1i8), (1, -1)];
    let mut csv = String::from("branch,mode,t_s,x_over_x0,p_over_p0\n");
    let mut loops = Vec::new();
    for &branch in &branches {
        let traj = ultrafast::trajectory(&seq, branch, 64)?;
        let tag = if branch.1 == 1 { "++" } else { "+-" };
        for (mode, points) in traj.modes.iter().enumerate() {
            for pt in points {
                csv.push_str(&format!("{tag},{mode},{},{},{}\n", pt.t_s, pt.x, pt.p));
            }
        }
        let active = if branch.0 == branch.1 { 0 } else { 1 };
        loops.push(svg::Series {
            label: format!("{tag} ({})", if active == 0 { "COM" } else { "relative" }),
            color: svg::COLORS[if active == 0 { 0 } else { 1 }],
            points: traj.modes[active].iter().map(|p| (p.x, p.p)).collect(),
        });
    }
    output::write_atomic(&out.join("trajectory.csv"), csv.as_bytes())?;
    let plot = svg::line_plot(
        "kick-sequence phase-space loops",
        "x / x_0",
        "p / p_0",
        &loops,
    );
    output::write_atomic(&out.join("trajectory.svg"), plot.as_bytes())?;

    // operator-product phase extraction from the vacuum
    let dims = [
        analysis_dim(&seq, 0, cfg.fock_margin),
        analysis_dim(&seq, 1, cfg.fock_margin),
    ];
    let motional = [
        ultrafast::fock_local(dims[0], 0),
        ultrafast::fock_local(dims[1], 0),
    ];
    let action = ultrafast::analyze_sequence(&seq, dims, &motional)?;
    let residual = seq.closure_residual();
    let target = std::f64::consts::FRAC_PI_4;
    let report = json!({
        "config": cfg.echo(),
        "scenario": "ultrafast-sim",
        "phase_rad": action.phase,
        "phase_target_rad": target,
        "phase_deviation_rad": action.phase - target,
        "restore_overlap": action.restore_overlap,
        "closure_residual": [residual[0], residual[1]],
        "total_time_s": seq.total_time(),
    });
    write_json(&out.join("phase_report.json"), &report)?;
    println!(
        "ultrafast-sim: phase {} rad (target {}), restore overlap {}, artifacts in {}",
        action.phase,
        target,
        action.restore_overlap,
        out.display()
    );
    Ok(0)
}

/// Fock dimension large enough for the largest intermediate displacement of
/// one mode under the sequence (max partial kick sum in the rotating frame).
fn analysis_dim(seq: &PulseSequence<f64>, mode: usize, margin: usize) -> usize {
    let omega = seq.mode_freqs[mode];
    let mut sum = Complex64::new(0.0, 0.0);
    let mut alpha_max = 0.0f64;
    for j in 0..seq.pulses.len() {
        let kick = Complex64::new(0.0, -2.0 * seq.dp(mode, j));
        sum += kick * Complex64::from_polar(1.0, omega * seq.pulses[j].t_s);
        alpha_max = alpha_max.max(sum.norm());
    }
    fock::required_mode_dim(1, alpha_max, margin)
}

fn zip(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    xs.iter().copied().zip(ys.iter().copied()).collect()
}
