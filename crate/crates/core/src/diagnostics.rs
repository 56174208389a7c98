//! Verification harness: convergence of the flow to the translating
//! soliton, two-solution contraction and grid refinement studies.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{domain_mean, AngleData, Field, Grid, PhiSpec};
use crate::error::{McfError, Result};
use crate::flow::{self, FlowState, Stop, StepPolicy, StopReason};
use crate::geometry::{make_geometry, CurvatureModel, GeometryConfig, GeometryKind, CurvatureConfig, CurvatureName};
use crate::soliton::{self, NewtonPolicy, SolitonResult};

/// Differences with oscillation below this count as constant.
pub const CONSTANT_DIFFERENCE: f64 = 1e-6;

/// Per-step growth allowed for the oscillation of a difference.
pub const CONTRACTION_SLACK: f64 = 1e-10;

/// Finest level allowed in a refinement study, in nodes.
pub const MAX_STUDY_NODES: usize = 200_000;

/// Exact translating solution over `(-1, 1)`: `u = -(1/C) ln cos(C x)` with
/// `phi = -sin C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrimReaper {
    pub speed: f64,
}

impl Default for GrimReaper {
    fn default() -> Self {
        GrimReaper { speed: 0.5 }
    }
}

impl GrimReaper {
    pub fn phi(&self) -> f64 {
        -self.speed.sin()
    }

    pub fn profile(&self, x: f64) -> f64 {
        -(self.speed * x).cos().ln() / self.speed
    }

    /// Mean-adjusted sup-norm distance of `u` from the profile.
    pub fn deviation(&self, grid: &Grid, u: &Field) -> f64 {
        let exact = Field::from_fn(grid, |x, _| self.profile(x));
        mean_adjusted_sup(grid, u, &exact)
    }
}

/// `max |u - v - (mean u - mean v)|`.
pub fn mean_adjusted_sup(grid: &Grid, u: &Field, v: &Field) -> f64 {
    let shift = domain_mean(grid, u) - domain_mean(grid, v);
    u.nodes()
        .iter()
        .zip(v.nodes())
        .fold(0.0f64, |m, (a, b)| m.max((a - b - shift).abs()))
}

/// Maximum amplitude of [`random_field`].
pub const RANDOM_AMPLITUDE: f64 = 0.5;

/// Smooth random initial data: a few cosine modes in the normalised
/// coordinate, plus first angular modes on the polar disk (damped towards
/// the pole). Determined by `seed`.
pub fn random_field(grid: &Grid, seed: u64) -> Field {
    let mut rng = StdRng::seed_from_u64(seed);
    let (lo, hi) = grid.geometry().extent();
    let radial: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let angular: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let polar = grid.is_polar();
    let scale = RANDOM_AMPLITUDE / 4.0;
    Field::from_fn(grid, |c, theta| {
        let s = (c - lo) / (hi - lo);
        let mut v: f64 = radial
            .iter()
            .enumerate()
            .map(|(k, a)| a * (k as f64 * std::f64::consts::PI * s).cos())
            .sum();
        if polar {
            v += s * (angular[0] * theta.cos() + angular[1] * theta.sin());
            v += s * s * (angular[2] * (2.0 * theta).cos() + angular[3] * (2.0 * theta).sin());
        }
        scale * v
    })
}

/// A named experiment: geometry, angle datum and resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub name: String,
    pub geometry: GeometryConfig,
    pub phi: PhiSpec,
    pub n_r: usize,
    pub n_theta: usize,
    pub oracle: Option<GrimReaper>,
}

impl Case {
    pub fn grid(&self) -> Result<Grid> {
        let geom = make_geometry(&self.geometry)?;
        let nt = if geom.kind() == GeometryKind::PolarDisk { self.n_theta } else { 1 };
        Grid::new(&geom, self.n_r, nt)
    }

    pub fn setup(&self) -> Result<(Grid, AngleData)> {
        let grid = self.grid()?;
        let angle = AngleData::new(&grid, &self.phi)?;
        Ok((grid, angle))
    }

    fn refined(&self, level: usize) -> Case {
        let mut c = self.clone();
        c.n_r <<= level;
        if self.geometry.kind == GeometryKind::PolarDisk {
            c.n_theta <<= level;
        }
        c
    }
}

fn curvature(model: CurvatureName, k: Option<f64>) -> Option<CurvatureConfig> {
    Some(CurvatureConfig { model, k })
}

fn ball(kind: GeometryKind, n: usize, curv: CurvatureModel, r: f64) -> GeometryConfig {
    let (name, k) = match curv {
        CurvatureModel::Flat => (CurvatureName::Flat, None),
        CurvatureModel::Hyperbolic(k) => (CurvatureName::Hyperbolic, Some(k)),
        CurvatureModel::PinchedCh(k) => (CurvatureName::PinchedCh, Some(k)),
    };
    GeometryConfig {
        kind,
        n: Some(n),
        curvature: curvature(name, k),
        radius: Some(r),
        a: None,
        b: None,
    }
}

pub fn grim_reaper_case(n_r: usize) -> Case {
    let oracle = GrimReaper::default();
    Case {
        name: "grim_reaper".into(),
        geometry: GeometryConfig {
            kind: GeometryKind::Interval1D,
            n: None,
            curvature: None,
            radius: None,
            a: Some(-1.0),
            b: Some(1.0),
        },
        phi: PhiSpec::Constant(oracle.phi()),
        n_r,
        n_theta: 1,
        oracle: Some(oracle),
    }
}

/// The fixed set of cases swept by the verification suite.
pub fn catalog() -> Vec<Case> {
    let case = |name: &str, geometry, phi, n_r, n_theta| Case {
        name: name.into(),
        geometry,
        phi,
        n_r,
        n_theta,
        oracle: None,
    };
    vec![
        grim_reaper_case(200),
        case(
            "flat_disk",
            ball(GeometryKind::RadialBall, 2, CurvatureModel::Flat, 1.0),
            PhiSpec::Constant(-0.2),
            100,
            1,
        ),
        case(
            "hyperbolic_disk",
            ball(GeometryKind::RadialBall, 2, CurvatureModel::Hyperbolic(1.0), 0.3),
            PhiSpec::Constant(0.05),
            100,
            1,
        ),
        case(
            "hyperbolic_ball3",
            ball(GeometryKind::RadialBall, 3, CurvatureModel::Hyperbolic(1.0), 0.35),
            PhiSpec::Constant(-0.1),
            100,
            1,
        ),
        case(
            "pinched_disk",
            ball(GeometryKind::RadialBall, 2, CurvatureModel::PinchedCh(1.0), 0.3),
            PhiSpec::Constant(0.02),
            100,
            1,
        ),
        case(
            "hyperbolic_polar",
            ball(GeometryKind::PolarDisk, 2, CurvatureModel::Hyperbolic(1.0), 0.3),
            PhiSpec::Fourier(vec![0.02, 0.01, 0.005]),
            32,
            16,
        ),
    ]
}

/// A named pass/fail comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Verdict {
    fn below(name: &'static str, value: f64, limit: f64) -> Self {
        Verdict {
            name,
            value,
            limit,
            pass: value < limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// `(t, osc(u(t) - u_inf))` at the sampled times.
    pub osc_trace: Vec<(f64, f64)>,
    /// `(t, max |u(t) - C t - u_inf|)` at the sampled times.
    pub drift_trace: Vec<(f64, f64)>,
    /// `(t, max W)` at every step.
    pub w_envelope: Vec<(f64, f64)>,
    pub speed: f64,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

/// Checks that the flow has converged to the translating soliton: final
/// oscillation of `u - u_inf`, speed agreement with `C_quad`, and no growth
/// of `max W` in the second half of the run. `samples` are extra sampled
/// states for the traces; the final state is always included.
pub fn verify_convergence(
    grid: &Grid,
    flow: &FlowState,
    samples: &[Field],
    soliton: &SolitonResult,
    tol: f64,
) -> Result<ConvergenceReport> {
    if !(tol > 0.0) {
        return Err(McfError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    flow.u.check_grid(grid)?;
    soliton.u_inf.check_grid(grid)?;
    for s in samples {
        s.check_grid(grid)?;
    }
    let c = soliton.c_quad;
    let trace_point = |u: &Field| {
        let d = u.difference(&soliton.u_inf);
        let drift = d.nodes().iter().fold(0.0f64, |m, v| m.max((v - c * u.time).abs()));
        ((u.time, d.oscillation()), (u.time, drift))
    };
    let mut osc_trace = Vec::with_capacity(samples.len() + 1);
    let mut drift_trace = Vec::with_capacity(samples.len() + 1);
    for u in samples.iter().chain(std::iter::once(&flow.u)) {
        if osc_trace.last().is_some_and(|&(t, _)| t >= u.time) {
            continue;
        }
        let (o, d) = trace_point(u);
        osc_trace.push(o);
        drift_trace.push(d);
    }
    let w_envelope: Vec<(f64, f64)> = flow.history.iter().map(|p| (p.t, p.max_w)).collect();
    // a run that took no steps started at an exact equilibrium
    let speed = if flow.steps == 0 { 0.0 } else { flow::speed_estimate(&flow.history, flow.tau)? };
    let growth = envelope_growth(&flow.history, flow.history[0].t + 0.5 * (flow.t - flow.history[0].t));
    let final_osc = osc_trace.last().map_or(f64::INFINITY, |p| p.1);
    let verdicts = vec![
        Verdict::below("final_oscillation", final_osc, tol),
        Verdict::below("speed_error", (speed - c).abs(), tol),
        Verdict {
            name: "w_envelope_growth",
            value: growth,
            limit: tol,
            pass: growth <= tol,
        },
    ];
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(ConvergenceReport {
        osc_trace,
        drift_trace,
        w_envelope,
        speed,
        verdicts,
        pass,
    })
}

/// `max_{t > split} max W - max_{t <= split} max W`.
pub fn envelope_growth(history: &[flow::HistoryPoint], split: f64) -> f64 {
    let (early, late) = history.iter().fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(e, l), p| {
        if p.t <= split {
            (e.max(p.max_w), l)
        } else {
            (e, l.max(p.max_w))
        }
    });
    if late == f64::NEG_INFINITY {
        0.0
    } else {
        late - early
    }
}

/// Runs a flow, keeping a copy of `u` every `every` time units.
pub fn flow_with_samples(
    grid: &Grid,
    angle: &AngleData,
    u0: &Field,
    policy: &StepPolicy,
    stop: &Stop,
    every: Option<f64>,
) -> Result<(FlowState, StopReason, Vec<Field>)> {
    let mut state = FlowState::new(grid, angle, u0, policy)?;
    let mut samples = Vec::new();
    let why = flow::run_observed(grid, &mut state, policy, angle, stop, every, |s| {
        samples.push(s.u.clone());
        Ok(())
    })?;
    Ok((state, why, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// `(t, osc(u_a - u_b))` at every step.
    pub trace: Vec<(f64, f64)>,
    /// Largest single-step increase of the oscillation.
    pub max_increase: f64,
    pub initial: f64,
    pub last: f64,
    pub pass: bool,
}

/// Runs two flows in lockstep with the same steps and follows the
/// oscillation of their difference. Passes when it never grows by more than
/// [`CONTRACTION_SLACK`] in one step and strictly decreases overall (unless
/// the difference starts constant).
pub fn contraction_test(
    grid: &Grid,
    u0_a: &Field,
    u0_b: &Field,
    angle: &AngleData,
    policy: &StepPolicy,
    t_end: f64,
) -> Result<ContractionReport> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(McfError::InvalidParameter(format!("end time must be positive, got {t_end}")));
    }
    let mut a = FlowState::new(grid, angle, u0_a, policy)?;
    let mut b = FlowState::new(grid, angle, u0_b, policy)?;
    let start = a.t;
    let mut trace = vec![(start, a.u.difference(&b.u).oscillation())];
    let mut max_increase = f64::NEG_INFINITY;
    let mut steps = 0usize;
    while a.t < start + t_end - 1e-12 * t_end.max(1.0) {
        if steps >= flow::MAX_STEPS {
            return Err(McfError::MaxSteps(steps));
        }
        let dt = policy
            .time_step(grid, &a.u)?
            .min(policy.time_step(grid, &b.u)?)
            .min(start + t_end - a.t);
        flow::step_by(grid, &mut a, policy, angle, dt)?;
        flow::step_by(grid, &mut b, policy, angle, dt)?;
        if (a.t - (start + t_end)).abs() <= 1e-9 * t_end.max(1.0) {
            a.t = start + t_end;
        }
        b.t = a.t;
        let f = a.u.difference(&b.u).oscillation();
        max_increase = max_increase.max(f - trace.last().unwrap().1);
        trace.push((a.t, f));
        steps += 1;
    }
    let initial = trace[0].1;
    let last = trace.last().unwrap().1;
    let decreased = initial <= CONSTANT_DIFFERENCE || last < initial;
    Ok(ContractionReport {
        pass: max_increase <= CONTRACTION_SLACK && decreased,
        trace,
        max_increase,
        initial,
        last,
    })
}

/// Solver settings shared by the levels of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub newton: NewtonPolicy,
    pub step: StepPolicy,
    /// Run the flow at every level (from `u0 = 0` to speed stationarity).
    pub with_flow: bool,
    pub speed_tol: f64,
    pub max_nodes: usize,
}

impl Default for StudySettings {
    fn default() -> Self {
        StudySettings {
            newton: NewtonPolicy::default(),
            step: StepPolicy::default(),
            with_flow: true,
            speed_tol: 1e-6,
            max_nodes: MAX_STUDY_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyLevel {
    pub n_r: usize,
    pub n_theta: usize,
    pub h: f64,
    pub c_eps: f64,
    pub c_quad: f64,
    /// Against the oracle when the case has one, otherwise against the next
    /// finer level.
    pub c_quad_error: Option<f64>,
    pub u_inf_error: Option<f64>,
    pub flow_speed: Option<f64>,
    pub flow_final_osc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementTable {
    pub case: String,
    /// `true` when errors are measured against an exact solution.
    pub oracle: bool,
    pub levels: Vec<StudyLevel>,
    pub order_c_quad: Vec<f64>,
    pub order_u_inf: Vec<f64>,
}

impl RefinementTable {
    pub fn min_order_c_quad(&self) -> f64 {
        self.order_c_quad.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_order_u_inf(&self) -> f64 {
        self.order_u_inf.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

struct LevelRun {
    grid: Grid,
    soliton: SolitonResult,
    flow_speed: Option<f64>,
    flow_final_osc: Option<f64>,
}

fn run_level(case: &Case, settings: &StudySettings) -> Result<LevelRun> {
    let (grid, angle) = case.setup()?;
    let sol = soliton::solve_soliton(&grid, &angle, &settings.newton)?;
    let (flow_speed, flow_final_osc) = if settings.with_flow {
        let (state, why, _) = flow_with_samples(
            &grid,
            &angle,
            &Field::zeros(&grid),
            &settings.step,
            &Stop::stationary(settings.speed_tol),
            None,
        )?;
        let speed = match why {
            StopReason::Stationary => 0.0,
            _ => flow::speed_estimate(&state.history, state.tau)?,
        };
        (Some(speed), Some(state.u.difference(&sol.u_inf).oscillation()))
    } else {
        (None, None)
    };
    Ok(LevelRun {
        grid,
        soliton: sol,
        flow_speed,
        flow_final_osc,
    })
}

/// Linear (bilinear on polar grids) interpolation of a nodal field.
fn interpolate(grid: &Grid, u: &Field, r: f64, theta: f64) -> f64 {
    let coords = grid.coords();
    let n = grid.n();
    let i = coords.partition_point(|&c| c <= r).clamp(1, n) - 1;
    let s = ((r - coords[i]) / (coords[i + 1] - coords[i])).clamp(0.0, 1.0);
    let nt = grid.n_theta();
    if nt == 1 {
        return (1.0 - s) * u.at(i, 0) + s * u.at(i + 1, 0);
    }
    let x = theta / grid.h_theta();
    let j0 = x.floor();
    let q = x - j0;
    let j0 = (j0 as isize).rem_euclid(nt as isize) as usize;
    let j1 = (j0 + 1) % nt;
    let row = |k: usize| (1.0 - q) * u.at(k, j0) + q * u.at(k, j1);
    (1.0 - s) * row(i) + s * row(i + 1)
}

fn cauchy_u_error(coarse: &LevelRun, fine: &LevelRun) -> Result<f64> {
    let g = &coarse.grid;
    let nt = g.n_theta();
    let mut nodes = Vec::with_capacity(g.num_nodes());
    for &r in g.coords() {
        for j in 0..nt {
            nodes.push(interpolate(&fine.grid, &fine.soliton.u_inf, r, g.theta(j)));
        }
    }
    let sampled = Field::from_nodes(g, &nodes)?;
    Ok(mean_adjusted_sup(g, &coarse.soliton.u_inf, &sampled))
}

fn orders(errors: &[f64], h: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, h)| {
            if e[0] == 0.0 && e[1] == 0.0 {
                f64::INFINITY
            } else {
                (e[0] / e[1]).ln() / (h[0] / h[1]).ln()
            }
        })
        .collect()
}

/// Solves the case at `levels` successively halved spacings (concurrently)
/// and reports observed orders of `C_quad` and `u_inf`.
pub fn refinement_study(case: &Case, levels: usize, settings: &StudySettings) -> Result<RefinementTable> {
    if levels < 3 {
        return Err(McfError::InvalidParameter(format!("a study needs at least 3 levels, got {levels}")));
    }
    let finest = case.refined(levels - 1);
    let nodes = (finest.n_r + 1) * finest.n_theta.max(1);
    if nodes > settings.max_nodes || finest.n_r >= usize::MAX >> 2 {
        return Err(McfError::ResourceLimit(format!(
            "finest level has {nodes} nodes, limit {}",
            settings.max_nodes
        )));
    }
    let runs: Vec<LevelRun> = (0..levels)
        .into_par_iter()
        .map(|l| run_level(&case.refined(l), settings))
        .collect::<Result<_>>()?;
    let h: Vec<f64> = runs.iter().map(|r| r.grid.h()).collect();
    let (c_err, u_err): (Vec<Option<f64>>, Vec<Option<f64>>) = match case.oracle {
        Some(o) => runs
            .iter()
            .map(|r| (Some((r.soliton.c_quad - o.speed).abs()), Some(o.deviation(&r.grid, &r.soliton.u_inf))))
            .unzip(),
        None => {
            let mut c = Vec::with_capacity(levels);
            let mut u = Vec::with_capacity(levels);
            for k in 0..levels {
                if k + 1 < levels {
                    c.push(Some((runs[k].soliton.c_quad - runs[k + 1].soliton.c_quad).abs()));
                    u.push(Some(cauchy_u_error(&runs[k], &runs[k + 1])?));
                } else {
                    c.push(None);
                    u.push(None);
                }
            }
            (c, u)
        }
    };
    let known = |v: &[Option<f64>]| v.iter().flatten().copied().collect::<Vec<f64>>();
    let order_c_quad = orders(&known(&c_err), &h);
    let order_u_inf = orders(&known(&u_err), &h);
    let levels = runs
        .iter()
        .zip(c_err.iter().zip(&u_err))
        .map(|(r, (c, u))| StudyLevel {
            n_r: r.grid.n(),
            n_theta: r.grid.n_theta(),
            h: r.grid.h(),
            c_eps: r.soliton.c_eps,
            c_quad: r.soliton.c_quad,
            c_quad_error: *c,
            u_inf_error: *u,
            flow_speed: r.flow_speed,
            flow_final_osc: r.flow_final_osc,
        })
        .collect();
    Ok(RefinementTable {
        case: case.name.clone(),
        oracle: case.oracle.is_some(),
        levels,
        order_c_quad,
        order_u_inf,
    })
}

#[cfg(test)]
mod tests;
