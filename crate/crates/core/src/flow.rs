//! Time integration of `u_t = W div(grad u / W)` under the contact-angle
//! condition, with per-step monitors.

use serde::{Deserialize, Serialize};

use crate::discretization::{self, domain_mean, kernel, AngleData, Field, Grid};
use crate::error::{McfError, Result};
use crate::soliton::speed_from_angle;

/// Default cap on the number of steps of one run.
pub const MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    /// Backward Euler with `W` frozen at the old time level.
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// `h` for the semi-implicit scheme, `safety * 2 / max|L_ii|` for the
    /// explicit one.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub scheme: Scheme,
    pub dt: TimeStep,
    /// Fraction of the explicit stability limit, in `(0, 1]`.
    pub safety: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            scheme: Scheme::SemiImplicit,
            dt: TimeStep::Auto,
            safety: 0.4,
        }
    }
}

impl StepPolicy {
    pub fn explicit() -> Self {
        StepPolicy {
            scheme: Scheme::Explicit,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(McfError::InvalidParameter(format!(
                "safety must lie in (0, 1], got {}",
                self.safety
            )));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(McfError::InvalidParameter(format!("dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    /// Step size for a step from `u` (ghosts closed).
    pub fn time_step(&self, grid: &Grid, u: &Field) -> Result<f64> {
        self.validate()?;
        Ok(match (self.dt, self.scheme) {
            (TimeStep::Fixed(dt), _) => dt,
            (TimeStep::Auto, Scheme::SemiImplicit) => grid.h(),
            (TimeStep::Auto, Scheme::Explicit) => {
                let coef = kernel::coefficients(grid, u.raw());
                self.safety * 2.0 / discretization::lagged_stiffness(grid, &coef)
            }
        })
    }

    /// Nominal step used to size the speed window.
    fn nominal_step(&self, grid: &Grid, u: &Field) -> Result<f64> {
        self.time_step(grid, u)
    }
}

/// Parameters of the test function
/// `eta = exp(K (u - C t)) (S d + 1 - (phi / W) <grad u, grad d>)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaParams {
    pub k: f64,
    pub s: f64,
    pub c: f64,
}

impl EtaParams {
    /// `K = 5`, `S = C_d + 2` and the given speed.
    pub fn defaults(grid: &Grid, c: f64) -> Self {
        EtaParams {
            k: 5.0,
            s: grid.geometry().boundary().c_d + 2.0,
            c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaSample {
    /// `max W eta`; infinite if it overflows.
    pub max_weta: f64,
    pub log_max_weta: f64,
    /// Node index (row-major) of the maximum.
    pub argmax: usize,
}

/// Maximum of `W eta` over the nodes, accumulated in log space.
/// `u` must have closed ghosts.
pub fn eta_monitor(grid: &Grid, u: &Field, t: f64, angle: &AngleData, params: &EtaParams) -> Result<EtaSample> {
    if !(params.k > 0.0 && params.s > 0.0) {
        return Err(McfError::InvalidParameter("eta constants K and S must be positive".into()));
    }
    let w = discretization::gradient_factor(grid, u)?;
    let geom = grid.geometry();
    let nt = grid.n_theta();
    let h = grid.h();
    let ext = angle.extension();
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &x) in grid.coords().iter().enumerate() {
        let (d, dd) = geom.distance_profile(x);
        for j in 0..nt {
            let k = i * nt + j;
            let ii = i as isize;
            let du = (u.raw()[grid.full(ii + 1, j)] - u.raw()[grid.full(ii - 1, j)]) / (2.0 * h);
            let wk = w.nodes()[k];
            let bracket = params.s * d + 1.0 - ext[k] / wk * du * dd;
            let log = params.k * (u.nodes()[k] - params.c * t) + wk.ln() + bracket.ln();
            if log > best.0 {
                best = (log, k);
            }
        }
    }
    Ok(EtaSample {
        max_weta: best.0.exp(),
        log_max_weta: best.0,
        argmax: best.1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryPoint {
    pub t: f64,
    /// Quadrature mean of `u`.
    pub mean: f64,
    pub max_w: f64,
    pub osc: f64,
    /// Mean speed over the trailing window (shortened near `t = 0`).
    pub speed: f64,
    pub max_weta: f64,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    /// Current solution with closed ghosts.
    pub u: Field,
    pub t: f64,
    pub steps: usize,
    /// Speed window.
    pub tau: f64,
    pub eta: EtaParams,
    pub history: Vec<HistoryPoint>,
}

impl FlowState {
    /// Closes the ghosts of `u0`, sizes the speed window as
    /// `max(1, 10 dt)` and records the initial history point. The `eta`
    /// speed defaults to the quadrature speed of `u0`.
    pub fn new(grid: &Grid, angle: &AngleData, u0: &Field, policy: &StepPolicy) -> Result<Self> {
        let u = discretization::ghost_fill(grid, u0, angle)?;
        let dt = policy.nominal_step(grid, &u)?;
        let c = speed_from_angle(grid, angle, &u)?;
        let mut state = FlowState {
            t: u0.time,
            u,
            steps: 0,
            tau: (10.0 * dt).max(1.0),
            eta: EtaParams::defaults(grid, c),
            history: Vec::new(),
        };
        state.u.time = state.t;
        state.record(grid, angle)?;
        Ok(state)
    }

    pub fn with_eta(mut self, grid: &Grid, angle: &AngleData, eta: EtaParams) -> Result<Self> {
        self.eta = eta;
        self.history.clear();
        self.record(grid, angle)?;
        Ok(self)
    }

    fn record(&mut self, grid: &Grid, angle: &AngleData) -> Result<()> {
        let mean = domain_mean(grid, &self.u);
        let w = discretization::gradient_factor(grid, &self.u)?;
        let eta = eta_monitor(grid, &self.u, self.t, angle, &self.eta)?;
        let speed = match self.history.first() {
            Some(first) if self.t > first.t => {
                let back = (self.t - self.tau).max(first.t);
                (mean - mean_at(&self.history, back)) / (self.t - back)
            }
            _ => 0.0,
        };
        self.history.push(HistoryPoint {
            t: self.t,
            mean,
            max_w: w.max(),
            osc: self.u.oscillation(),
            speed,
            max_weta: eta.max_weta,
        });
        Ok(())
    }
}

/// Linear interpolation of the recorded means at time `t`.
fn mean_at(history: &[HistoryPoint], t: f64) -> f64 {
    let k = history.partition_point(|p| p.t < t);
    if k == 0 {
        return history[0].mean;
    }
    if k == history.len() {
        return history[k - 1].mean;
    }
    let (a, b) = (&history[k - 1], &history[k]);
    if b.t == a.t {
        return b.mean;
    }
    a.mean + (b.mean - a.mean) * (t - a.t) / (b.t - a.t)
}

/// `(mean u(t) - mean u(t - tau)) / tau` at the last recorded time.
pub fn speed_estimate(history: &[HistoryPoint], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(McfError::InvalidParameter(format!("window must be positive, got {tau}")));
    }
    let (first, last) = match (history.first(), history.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(McfError::InsufficientHistory { needed: tau, available: 0.0 }),
    };
    let available = last.t - first.t;
    if available < tau * (1.0 - 1e-12) {
        return Err(McfError::InsufficientHistory { needed: tau, available });
    }
    let back = (last.t - tau).max(first.t);
    Ok((last.mean - mean_at(history, back)) / tau)
}

/// Advances the state by one step and appends to the history.
pub fn step(grid: &Grid, state: &mut FlowState, policy: &StepPolicy, angle: &AngleData) -> Result<f64> {
    let dt = policy.time_step(grid, &state.u)?;
    advance(grid, state, policy, angle, dt)?;
    Ok(dt)
}

/// One step of prescribed size `dt`.
pub fn step_by(grid: &Grid, state: &mut FlowState, policy: &StepPolicy, angle: &AngleData, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(McfError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    advance(grid, state, policy, angle, dt)
}

fn advance(grid: &Grid, state: &mut FlowState, policy: &StepPolicy, angle: &AngleData, dt: f64) -> Result<()> {
    if !state.u.ghosts_closed() {
        return Err(McfError::GhostsNotClosed);
    }
    let phi = angle.boundary();
    let nodes = state.u.nodes();
    let next: Vec<f64> = match policy.scheme {
        Scheme::Explicit => {
            let coef = kernel::coefficients(grid, state.u.raw());
            let f = kernel::operator(grid, &coef, state.u.raw(), phi);
            nodes.iter().zip(&f).map(|(u, f)| u + dt * f).collect()
        }
        Scheme::SemiImplicit => {
            // increment form: (I / dt - L) delta = L u + b = F(u)
            let coef = kernel::coefficients(grid, state.u.raw());
            let f = kernel::operator(grid, &coef, state.u.raw(), phi);
            let (mut l, _) = discretization::lagged_system(grid, &coef, phi);
            l.scale(-1.0);
            l.add_diagonal(1.0 / dt);
            let delta = l.solve(&f)?;
            nodes.iter().zip(&delta).map(|(u, d)| u + d).collect()
        }
    };
    if next.iter().any(|v| !v.is_finite()) {
        return Err(McfError::StepBlowup(dt));
    }
    let mut u = Field::from_nodes(grid, &next)?;
    kernel::fill_ghosts(grid, phi, u.raw_mut());
    u.mark_closed();
    state.t += dt;
    state.steps += 1;
    u.time = state.t;
    state.u = u;
    state.record(grid, angle)
}

/// When a run ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stop {
    pub t_end: Option<f64>,
    /// Stop once `|speed(t) - speed(t - tau)| < tol`.
    pub speed_tol: Option<f64>,
    pub max_steps: usize,
}

impl Stop {
    pub fn at_time(t_end: f64) -> Self {
        Stop {
            t_end: Some(t_end),
            speed_tol: None,
            max_steps: MAX_STEPS,
        }
    }

    pub fn stationary(tol: f64) -> Self {
        Stop {
            t_end: None,
            speed_tol: Some(tol),
            max_steps: MAX_STEPS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.t_end.is_none() && self.speed_tol.is_none() {
            return Err(McfError::InvalidParameter("a stop time or a speed tolerance is required".into()));
        }
        if let Some(t) = self.t_end {
            if !t.is_finite() {
                return Err(McfError::InvalidParameter(format!("invalid stop time {t}")));
            }
        }
        if let Some(tol) = self.speed_tol {
            if !(tol > 0.0) {
                return Err(McfError::InvalidParameter(format!("speed tolerance must be positive, got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TimeReached,
    SpeedStationary,
    /// The initial state is an exact equilibrium.
    Stationary,
}

fn speed_settled(state: &FlowState, tol: f64) -> bool {
    let h = &state.history;
    let t0 = h[0].t;
    if state.t - t0 < 2.0 * state.tau * (1.0 - 1e-12) {
        return false;
    }
    let now = (state.u_mean() - mean_at(h, state.t - state.tau)) / state.tau;
    let before = (mean_at(h, state.t - state.tau) - mean_at(h, state.t - 2.0 * state.tau)) / state.tau;
    (now - before).abs() < tol
}

impl FlowState {
    fn u_mean(&self) -> f64 {
        self.history.last().map_or(0.0, |p| p.mean)
    }
}

/// Runs until `stop` triggers.
pub fn run_until(grid: &Grid, state: &mut FlowState, policy: &StepPolicy, angle: &AngleData, stop: &Stop) -> Result<StopReason> {
    run_observed(grid, state, policy, angle, stop, None, |_| Ok(()))
}

/// Like [`run_until`], additionally calling `observer` at the start and at
/// every multiple of `every` (steps are shortened to land on those times).
pub fn run_observed(
    grid: &Grid,
    state: &mut FlowState,
    policy: &StepPolicy,
    angle: &AngleData,
    stop: &Stop,
    every: Option<f64>,
    mut observer: impl FnMut(&FlowState) -> Result<()>,
) -> Result<StopReason> {
    stop.validate()?;
    policy.validate()?;
    if let Some(e) = every {
        if !(e > 0.0) {
            return Err(McfError::InvalidParameter(format!("snapshot interval must be positive, got {e}")));
        }
    }
    let start = state.t;
    let mut next_obs = every.map(|_| start);
    let mut obs_count = 0usize;
    let mut observe = |state: &FlowState, next_obs: &mut Option<f64>, count: &mut usize| -> Result<()> {
        if let (Some(e), Some(t)) = (every, *next_obs) {
            if (state.t - t).abs() <= 1e-9 * e.max(1.0) {
                observer(state)?;
                *count += 1;
                *next_obs = Some(start + *count as f64 * e);
            }
        }
        Ok(())
    };
    observe(state, &mut next_obs, &mut obs_count)?;
    if stop.speed_tol.is_some() {
        let f = discretization::mcf_operator(grid, &state.u, angle)?;
        if f.nodes().iter().all(|v| *v == 0.0) {
            return Ok(StopReason::Stationary);
        }
    }
    let mut taken = 0usize;
    loop {
        if let Some(t_end) = stop.t_end {
            if state.t >= t_end - 1e-12 * t_end.abs().max(1.0) {
                return Ok(StopReason::TimeReached);
            }
        }
        if let Some(tol) = stop.speed_tol {
            if speed_settled(state, tol) {
                return Ok(StopReason::SpeedStationary);
            }
        }
        if taken >= stop.max_steps {
            return Err(McfError::MaxSteps(stop.max_steps));
        }
        let mut dt = policy.time_step(grid, &state.u)?;
        let mut target = None;
        if let Some(t_end) = stop.t_end {
            target = Some(t_end);
        }
        if let Some(t) = next_obs {
            target = Some(target.map_or(t, |x: f64| x.min(t)));
        }
        if let Some(t) = target {
            let remaining = t - state.t;
            if remaining <= dt * (1.0 + 1e-9) {
                dt = remaining;
            }
        }
        advance(grid, state, policy, angle, dt)?;
        if let Some(t) = target {
            if (state.t - t).abs() <= 1e-9 * t.abs().max(1.0) {
                state.t = t;
                state.u.time = t;
                state.history.last_mut().expect("history is never empty").t = t;
            }
        }
        taken += 1;
        observe(state, &mut next_obs, &mut obs_count)?;
    }
}
