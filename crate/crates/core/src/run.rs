//! Subcommand orchestration and deterministic output files.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{InitialCondition, RunConfig};
use crate::diagnostics::{self, ContractionReport, RefinementTable, Verdict};
use crate::discretization::{AngleData, Field, Grid};
use crate::error::{McfError, Result};
use crate::flow::{self, EtaParams, FlowState, HistoryPoint, StopReason};
use crate::hypothesis::{self, HypothesisReport};
use crate::soliton::{self, EpsTracePoint, SolitonResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Soliton,
    Flow,
    Check,
    Verify,
    Study,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Soliton => "soliton",
            Command::Flow => "flow",
            Command::Check => "check",
            Command::Verify => "verify",
            Command::Study => "study",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Everything a run produces, held in memory until written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub command: Command,
    pub config: RunConfig,
    /// `report.json` contents.
    pub report: Vec<u8>,
    /// Additional files (CSV), in write order.
    pub files: Vec<OutputFile>,
    /// `false` when a verification verdict failed.
    pub passed: bool,
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn field_csv(name: String, grid: &Grid, u: &Field) -> OutputFile {
    let mut contents = Vec::new();
    u.write_csv(grid, &mut contents).expect("writing to memory");
    OutputFile { name, contents }
}

fn csv_file(name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> OutputFile {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    OutputFile {
        name: name.into(),
        contents: s.into_bytes(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn history_csv(history: &[HistoryPoint]) -> OutputFile {
    csv_file(
        "history.csv",
        "t,max_W,osc,speed,max_Weta",
        history
            .iter()
            .map(|p| format!("{},{},{},{},{}", p.t, p.max_w, p.osc, p.speed, p.max_weta)),
    )
}

fn eps_trace_csv(trace: &[EpsTracePoint]) -> OutputFile {
    csv_file(
        "eps_trace.csv",
        "eps,eps_mean,iterations",
        trace.iter().map(|p| format!("{},{},{}", p.eps, p.eps_mean, p.iterations)),
    )
}

/// Time label of a snapshot file: at most six decimals, trailing zeros dropped.
fn time_label(t: f64) -> String {
    let mut s = format!("{t:.6}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

#[derive(Debug, Clone, Copy, Serialize)]
struct GridSummary {
    #[serde(rename = "N_r")]
    n_r: usize,
    #[serde(rename = "N_theta")]
    n_theta: usize,
    h: f64,
}

impl GridSummary {
    fn of(grid: &Grid) -> Self {
        GridSummary {
            n_r: grid.n(),
            n_theta: grid.n_theta(),
            h: grid.h(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct OracleErrors {
    #[serde(rename = "C")]
    c: f64,
    #[serde(rename = "C_eps_error")]
    c_eps_error: f64,
    #[serde(rename = "C_quad_error")]
    c_quad_error: f64,
    u_inf_error: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SolitonSummary {
    #[serde(rename = "C_eps")]
    c_eps: f64,
    #[serde(rename = "C_quad")]
    c_quad: f64,
    residual: f64,
    speed_gap: f64,
    flux_defect: f64,
    eps_final: f64,
    newton_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleErrors>,
}

fn summarize_soliton(config: &RunConfig, grid: &Grid, angle: &AngleData, sol: &SolitonResult) -> Result<SolitonSummary> {
    let compat = soliton::verify_compatibility(grid, angle, sol)?;
    let oracle = config.oracle().map(|g| OracleErrors {
        c: g.speed,
        c_eps_error: (sol.c_eps - g.speed).abs(),
        c_quad_error: (sol.c_quad - g.speed).abs(),
        u_inf_error: g.deviation(grid, &sol.u_inf),
    });
    Ok(SolitonSummary {
        c_eps: sol.c_eps,
        c_quad: sol.c_quad,
        residual: sol.residual,
        speed_gap: compat.speed_gap,
        flux_defect: compat.flux_defect,
        eps_final: sol.eps_trace.last().map_or(f64::NAN, |p| p.eps),
        newton_iterations: sol.eps_trace.iter().map(|p| p.iterations).sum(),
        oracle,
    })
}

#[derive(Debug, Clone, Serialize)]
struct SolitonReport {
    command: Command,
    grid: GridSummary,
    #[serde(flatten)]
    soliton: SolitonSummary,
}

#[derive(Debug, Clone, Serialize)]
struct FlowSummary {
    t_final: f64,
    steps: usize,
    stop_reason: StopReason,
    /// Trailing-window speed; absent when the run is shorter than the window.
    speed: Option<f64>,
    mean: f64,
    #[serde(rename = "max_W")]
    max_w: f64,
    osc: f64,
    #[serde(rename = "max_Weta")]
    max_weta: f64,
}

fn summarize_flow(state: &FlowState, why: StopReason) -> FlowSummary {
    let last = state.history.last().expect("history is never empty");
    let speed = if why == StopReason::Stationary {
        Some(0.0)
    } else {
        flow::speed_estimate(&state.history, state.tau).ok()
    };
    FlowSummary {
        t_final: state.t,
        steps: state.steps,
        stop_reason: why,
        speed,
        mean: last.mean,
        max_w: last.max_w,
        osc: last.osc,
        max_weta: last.max_weta,
    }
}

#[derive(Debug, Clone, Serialize)]
struct FlowReport {
    command: Command,
    grid: GridSummary,
    u0: InitialCondition,
    #[serde(flatten)]
    flow: FlowSummary,
    eta: EtaParams,
    snapshots: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct CheckReport {
    command: Command,
    #[serde(flatten)]
    hypothesis: HypothesisReport,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ConvergenceSummary {
    speed: f64,
    verdicts: Vec<Verdict>,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ContractionSummary {
    seeds: (u64, u64),
    initial: f64,
    last: f64,
    max_increase: f64,
    pass: bool,
}

impl ContractionSummary {
    fn new(seeds: (u64, u64), r: &ContractionReport) -> Self {
        ContractionSummary {
            seeds,
            initial: r.initial,
            last: r.last,
            max_increase: r.max_increase,
            pass: r.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct VerifyReport {
    command: Command,
    grid: GridSummary,
    tol: f64,
    soliton: SolitonSummary,
    flow: FlowSummary,
    convergence: ConvergenceSummary,
    contraction: Vec<ContractionSummary>,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct StudyReport {
    command: Command,
    #[serde(flatten)]
    table: RefinementTable,
    #[serde(rename = "min_order_C_quad")]
    min_order_c_quad: f64,
    min_order_u_inf: f64,
    required_order: f64,
    pass: bool,
}

/// Builds the initial datum of a flow. `soliton` is only called for
/// [`InitialCondition::Soliton`].
fn initial_field(
    grid: &Grid,
    config: &RunConfig,
    soliton: impl FnOnce() -> Result<SolitonResult>,
) -> Result<Field> {
    Ok(match config.flow.u0 {
        InitialCondition::Zero => Field::zeros(grid),
        InitialCondition::Constant(c) => Field::constant(grid, c),
        InitialCondition::Cosine(a) => {
            let (lo, hi) = grid.geometry().extent();
            Field::from_fn(grid, |c, _| a * (std::f64::consts::PI * (c - lo) / (hi - lo)).cos())
        }
        InitialCondition::Random => diagnostics::random_field(grid, config.seed),
        InitialCondition::Soliton => soliton()?.u_inf,
    })
}

fn run_soliton(config: &RunConfig) -> Result<RunOutput> {
    let (grid, angle) = config.setup()?;
    let sol = soliton::solve_soliton(&grid, &angle, &config.newton_policy())?;
    let report = SolitonReport {
        command: Command::Soliton,
        grid: GridSummary::of(&grid),
        soliton: summarize_soliton(config, &grid, &angle, &sol)?,
    };
    Ok(RunOutput {
        command: Command::Soliton,
        config: config.clone(),
        report: json_bytes(&report)?,
        files: vec![field_csv("u_inf.csv".into(), &grid, &sol.u_inf), eps_trace_csv(&sol.eps_trace)],
        passed: true,
    })
}

fn run_flow(config: &RunConfig) -> Result<RunOutput> {
    let (grid, angle) = config.setup()?;
    let policy = config.step_policy();
    let u0 = initial_field(&grid, config, || soliton::solve_soliton(&grid, &angle, &config.newton_policy()))?;
    let mut state = FlowState::new(&grid, &angle, &u0, &policy)?;
    let mut snapshots = Vec::new();
    let why = flow::run_observed(
        &grid,
        &mut state,
        &policy,
        &angle,
        &config.stop(),
        config.flow.snapshot_every,
        |s| {
            snapshots.push(field_csv(format!("u_t{}.csv", time_label(s.t)), &grid, &s.u));
            Ok(())
        },
    )?;
    let report = FlowReport {
        command: Command::Flow,
        grid: GridSummary::of(&grid),
        u0: config.flow.u0,
        flow: summarize_flow(&state, why),
        eta: state.eta,
        snapshots: snapshots.iter().map(|f| f.name.clone()).collect(),
    };
    let mut files = vec![history_csv(&state.history)];
    files.extend(snapshots);
    Ok(RunOutput {
        command: Command::Flow,
        config: config.clone(),
        report: json_bytes(&report)?,
        files,
        passed: true,
    })
}

fn run_check(config: &RunConfig) -> Result<RunOutput> {
    let geom = config.geometry()?;
    let rep = hypothesis::check_existence(&geom, &config.angle.phi)?;
    let passed = rep.overall;
    let report = CheckReport {
        command: Command::Check,
        hypothesis: rep,
        pass: passed,
    };
    Ok(RunOutput {
        command: Command::Check,
        config: config.clone(),
        report: json_bytes(&report)?,
        files: Vec::new(),
        passed,
    })
}

fn run_verify(config: &RunConfig) -> Result<RunOutput> {
    let (grid, angle) = config.setup()?;
    let policy = config.step_policy();
    let d = &config.diagnostics;
    let sol = soliton::solve_soliton(&grid, &angle, &config.newton_policy())?;
    let u0 = initial_field(&grid, config, || Ok(sol.clone()))?;
    let (state, why, samples) =
        diagnostics::flow_with_samples(&grid, &angle, &u0, &policy, &config.stop(), config.flow.snapshot_every)?;
    let conv = diagnostics::verify_convergence(&grid, &state, &samples, &sol, d.tol)?;
    let contraction = (0..d.contraction_pairs as u64)
        .into_par_iter()
        .map(|k| {
            let seeds = (
                config.seed.wrapping_add(2 * k),
                config.seed.wrapping_add(2 * k + 1),
            );
            let a = diagnostics::random_field(&grid, seeds.0);
            let b = diagnostics::random_field(&grid, seeds.1);
            let r = diagnostics::contraction_test(&grid, &a, &b, &angle, &policy, d.contraction_t_end)?;
            Ok(ContractionSummary::new(seeds, &r))
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = conv.pass && contraction.iter().all(|c| c.pass);
    let convergence_csv = csv_file(
        "convergence.csv",
        "t,osc,drift",
        conv.osc_trace
            .iter()
            .zip(&conv.drift_trace)
            .map(|(o, dr)| format!("{},{},{}", o.0, o.1, dr.1)),
    );
    let report = VerifyReport {
        command: Command::Verify,
        grid: GridSummary::of(&grid),
        tol: d.tol,
        soliton: summarize_soliton(config, &grid, &angle, &sol)?,
        flow: summarize_flow(&state, why),
        convergence: ConvergenceSummary {
            speed: conv.speed,
            verdicts: conv.verdicts,
            pass: conv.pass,
        },
        contraction,
        pass: passed,
    };
    Ok(RunOutput {
        command: Command::Verify,
        config: config.clone(),
        report: json_bytes(&report)?,
        files: vec![
            field_csv("u_inf.csv".into(), &grid, &sol.u_inf),
            history_csv(&state.history),
            convergence_csv,
        ],
        passed,
    })
}

fn case_name(config: &RunConfig) -> String {
    diagnostics::catalog()
        .into_iter()
        .find(|c| c.geometry == config.geometry && c.phi == config.angle.phi)
        .map_or_else(|| "custom".into(), |c| c.name)
}

fn run_study(config: &RunConfig) -> Result<RunOutput> {
    let d = &config.diagnostics;
    let table = diagnostics::refinement_study(&config.case(&case_name(config)), d.levels, &config.study_settings())?;
    let min_c = table.min_order_c_quad();
    let min_u = table.min_order_u_inf();
    let passed = min_c >= d.min_order && min_u >= d.min_order;
    let mut rows = String::new();
    for l in &table.levels {
        writeln!(
            rows,
            "{},{},{},{},{},{},{},{},{}",
            l.n_r,
            l.n_theta,
            l.h,
            l.c_eps,
            l.c_quad,
            opt(l.c_quad_error),
            opt(l.u_inf_error),
            opt(l.flow_speed),
            opt(l.flow_final_osc)
        )
        .expect("writing to a string");
    }
    let study_csv = OutputFile {
        name: "study.csv".into(),
        contents: format!("N_r,N_theta,h,C_eps,C_quad,C_quad_error,u_inf_error,flow_speed,flow_final_osc\n{rows}")
            .into_bytes(),
    };
    let report = StudyReport {
        command: Command::Study,
        table,
        min_order_c_quad: min_c,
        min_order_u_inf: min_u,
        required_order: d.min_order,
        pass: passed,
    };
    Ok(RunOutput {
        command: Command::Study,
        config: config.clone(),
        report: json_bytes(&report)?,
        files: vec![study_csv],
        passed,
    })
}

/// Runs one subcommand on a validated configuration.
pub fn execute(command: Command, config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    match command {
        Command::Soliton => run_soliton(config),
        Command::Flow => run_flow(config),
        Command::Check => run_check(config),
        Command::Verify => run_verify(config),
        Command::Study => run_study(config),
    }
}

fn write_file(path: PathBuf, contents: &[u8]) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|source| McfError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `resolved_config.json`, `report.json` and the CSV files into
/// `dir` (created if needed). Returns the written paths.
pub fn emit_outputs(output: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| McfError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![
        write_file(dir.join("resolved_config.json"), output.config.to_json()?.as_bytes())?,
        write_file(dir.join("report.json"), &output.report)?,
    ];
    for f in &output.files {
        written.push(write_file(dir.join(&f.name), &f.contents)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests;
