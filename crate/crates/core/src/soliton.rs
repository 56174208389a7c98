//! Translating solitons through the regularised capillary problem
//! `W div(grad u / W) = eps u` with the contact-angle condition, followed by
//! `eps -> 0` continuation.
//!
//! Two independent speed estimates are produced: the limit of `eps * mean(u_eps)`
//! (Richardson-extrapolated along a geometric schedule) and the quadrature
//! `-int phi / int W^{-1}` evaluated on the limiting profile.
//!
//! As `eps` shrinks the mean of `u_eps` grows like `C / eps`. Solutions are
//! therefore carried as `level + profile` with a zero-mean profile, so the
//! operator never differences numbers of size `1 / eps`.

use serde::Serialize;

use crate::discretization::{
    self, domain_mean, gradient_factor, integrate_boundary, integrate_domain, kernel, AngleData,
    Field, Grid, MAX_STEEPNESS,
};
use crate::error::{McfError, Result};

/// Damped Newton settings and the `eps` continuation schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonPolicy {
    /// Target for `max |F(u) - eps u|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Backtracking halvings allowed per Newton step.
    pub max_halvings: usize,
    pub eps_start: f64,
    /// The schedule stops at the first value at or below this.
    pub eps_min: f64,
    pub eps_ratio: f64,
}

impl Default for NewtonPolicy {
    fn default() -> Self {
        NewtonPolicy {
            tol: 1e-10,
            max_iter: 30,
            max_halvings: 20,
            eps_start: 1.0,
            eps_min: 1e-6,
            eps_ratio: 0.5,
        }
    }
}

impl NewtonPolicy {
    /// Strictly decreasing geometric schedule `eps_start * ratio^k`.
    pub fn schedule(&self) -> Result<Vec<f64>> {
        if !(self.tol > 0.0) {
            return Err(McfError::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.eps_ratio > 0.0 && self.eps_ratio < 1.0) {
            return Err(McfError::InvalidParameter(format!(
                "eps_ratio must lie in (0, 1), got {}",
                self.eps_ratio
            )));
        }
        if !(self.eps_min > 0.0 && self.eps_start > self.eps_min) {
            return Err(McfError::InvalidParameter(format!(
                "need eps_start > eps_min > 0, got {} and {}",
                self.eps_start, self.eps_min
            )));
        }
        let mut out = vec![self.eps_start];
        while *out.last().unwrap() > self.eps_min * (1.0 + 1e-12) {
            let next = out.last().unwrap() * self.eps_ratio;
            out.push(next);
        }
        Ok(out)
    }
}

/// Solution `level + profile` of the regularised problem at one `eps`.
#[derive(Debug, Clone)]
pub struct CapillarySolution {
    pub eps: f64,
    /// Quadrature mean of the solution.
    pub level: f64,
    /// Zero-mean part, ghosts closed.
    pub profile: Field,
    pub iterations: usize,
    pub residual: f64,
}

impl CapillarySolution {
    /// The full solution `level + profile` (loses precision when `level` is large).
    pub fn to_field(&self) -> Field {
        let mut f = self.profile.clone();
        f.shift(self.level);
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsTracePoint {
    pub eps: f64,
    /// `eps * mean(u_eps)`.
    pub eps_mean: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SolitonResult {
    /// Zero-mean soliton profile with closed ghosts.
    pub u_inf: Field,
    pub c_eps: f64,
    pub c_quad: f64,
    /// `max |W div(grad u_inf / W) - c_quad|`.
    pub residual: f64,
    pub eps_trace: Vec<EpsTracePoint>,
}

/// Speed from the divergence identity: `-int phi dsigma / int W^{-1} dx`.
/// `u` must have closed ghosts.
pub fn speed_from_angle(grid: &Grid, angle: &AngleData, u: &Field) -> Result<f64> {
    let w = gradient_factor(grid, u)?;
    let mut inv = w.clone();
    inv.nodes_mut().iter_mut().for_each(|v| *v = 1.0 / *v);
    Ok(-integrate_boundary(grid, angle) / integrate_domain(grid, &inv))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Newton<'a> {
    grid: &'a Grid,
    phi: &'a [f64],
    eps: f64,
}

impl Newton<'_> {
    /// Closes the ghosts of `w` and returns `F(w) - eps (level + w)`.
    fn residual(&self, level: f64, w: &mut [f64]) -> Vec<f64> {
        let (mut f, _) = kernel::evaluate(self.grid, w, self.phi);
        let nt = self.grid.n_theta();
        for (k, r) in f.iter_mut().enumerate() {
            *r -= self.eps * (level + w[k + nt]);
        }
        f
    }

    fn recenter(&self, level: &mut f64, w: &mut Field) {
        let m = domain_mean(self.grid, w);
        *level += m;
        w.raw_mut().iter_mut().for_each(|v| *v -= m);
    }

    fn solve(&self, mut level: f64, mut w: Field, policy: &NewtonPolicy) -> Result<CapillarySolution> {
        let nt = self.grid.n_theta();
        self.recenter(&mut level, &mut w);
        let mut res = self.residual(level, w.raw_mut());
        let mut norm = max_abs(&res);
        let mut iterations = 0;
        while norm > policy.tol {
            if iterations >= policy.max_iter {
                return Err(McfError::NewtonStagnation {
                    eps: self.eps,
                    residual: norm,
                    iterations,
                });
            }
            iterations += 1;
            let mut jac = discretization::operator_jacobian(self.grid, w.raw(), self.phi);
            jac.add_diagonal(-self.eps);
            let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
            let delta = jac.solve(&rhs)?;
            let delta_field = Field::from_nodes(self.grid, &delta)?;
            let delta_mean = domain_mean(self.grid, &delta_field);

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..=policy.max_halvings {
                let mut trial = w.clone();
                {
                    let raw = trial.raw_mut();
                    for (k, d) in delta.iter().enumerate() {
                        raw[k + nt] += step * (d - delta_mean);
                    }
                }
                let trial_level = level + step * delta_mean;
                let trial_res = self.residual(trial_level, trial.raw_mut());
                let trial_norm = max_abs(&trial_res);
                if trial_norm.is_finite() && trial_norm < norm {
                    accepted = Some((trial_level, trial, trial_res, trial_norm));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((l, t, r, nrm)) => {
                    level = l;
                    w = t;
                    self.recenter(&mut level, &mut w);
                    res = r;
                    norm = nrm;
                }
                None => {
                    return Err(McfError::NewtonStagnation {
                        eps: self.eps,
                        residual: norm,
                        iterations,
                    })
                }
            }
        }
        // the closure is invariant under additive constants, so recentering kept it
        w.mark_closed();
        Ok(CapillarySolution {
            eps: self.eps,
            level,
            profile: w,
            iterations,
            residual: norm,
        })
    }
}

fn validate(grid: &Grid, angle: &AngleData, init: &Field) -> Result<()> {
    init.check_grid(grid)?;
    if !init.is_finite() {
        return Err(McfError::NonFinite);
    }
    angle.check_steepness(MAX_STEEPNESS)?;
    if angle.boundary().len() != grid.num_boundary_nodes() {
        return Err(McfError::GridMismatch("angle data belongs to another grid".into()));
    }
    Ok(())
}

/// Solves the regularised capillary problem at a single `eps` by damped
/// Newton iteration from `init`.
pub fn solve_capillary_eps(
    grid: &Grid,
    angle: &AngleData,
    eps: f64,
    init: &Field,
    policy: &NewtonPolicy,
) -> Result<CapillarySolution> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(McfError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    validate(grid, angle, init)?;
    let newton = Newton {
        grid,
        phi: angle.boundary(),
        eps,
    };
    newton.solve(0.0, init.clone(), policy)
}

/// Richardson extrapolation to `eps = 0` assuming `y(eps) = C + a eps`.
fn extrapolate(a: &EpsTracePoint, b: &EpsTracePoint) -> f64 {
    (b.eps_mean * a.eps - a.eps_mean * b.eps) / (a.eps - b.eps)
}

/// Continuation along the schedule with warm starts, then both speed
/// estimates on the limiting profile.
pub fn solve_soliton(grid: &Grid, angle: &AngleData, policy: &NewtonPolicy) -> Result<SolitonResult> {
    let schedule = policy.schedule()?;
    let zero = Field::zeros(grid);
    validate(grid, angle, &zero)?;
    let mut level = 0.0;
    let mut profile = zero;
    let mut prev_eps: Option<f64> = None;
    let mut trace = Vec::with_capacity(schedule.len());
    for &eps in &schedule {
        if let Some(p) = prev_eps {
            // keep eps * level fixed: the best guess for the next level
            level *= p / eps;
        }
        let newton = Newton {
            grid,
            phi: angle.boundary(),
            eps,
        };
        let sol = newton.solve(level, profile, policy)?;
        trace.push(EpsTracePoint {
            eps,
            eps_mean: eps * sol.level,
            iterations: sol.iterations,
        });
        level = sol.level;
        profile = sol.profile;
        prev_eps = Some(eps);
    }
    let k = trace.len();
    let c_eps = if k >= 2 {
        extrapolate(&trace[k - 2], &trace[k - 1])
    } else {
        trace[0].eps_mean
    };
    if k >= 3 {
        let before = extrapolate(&trace[k - 3], &trace[k - 2]);
        let change = (c_eps - before).abs();
        let limit = 10.0 * policy.tol * c_eps.abs().max(1.0);
        if change > limit {
            return Err(McfError::ScheduleExhausted { change, limit });
        }
    }
    let u_inf = profile;
    let c_quad = speed_from_angle(grid, angle, &u_inf)?;
    let f = discretization::mcf_operator(grid, &u_inf, angle)?;
    let residual = f.nodes().iter().fold(0.0f64, |m, v| m.max((v - c_quad).abs()));
    Ok(SolitonResult {
        u_inf,
        c_eps,
        c_quad,
        residual,
        eps_trace: trace,
    })
}

/// Discrepancies between the two speed estimates and the divergence identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub c_eps: f64,
    pub c_quad: f64,
    pub speed_gap: f64,
    /// `|c_eps` recomputed from the trace `- c_eps|`.
    pub c_eps_drift: f64,
    /// `|c_quad` recomputed from `u_inf - c_quad|`.
    pub c_quad_drift: f64,
    /// `|sum volume * div(u_inf) + int phi|`.
    pub flux_defect: f64,
}

pub fn verify_compatibility(grid: &Grid, angle: &AngleData, result: &SolitonResult) -> Result<CompatibilityReport> {
    let k = result.eps_trace.len();
    let c_eps = if k >= 2 {
        extrapolate(&result.eps_trace[k - 2], &result.eps_trace[k - 1])
    } else {
        result.eps_trace.first().map_or(0.0, |p| p.eps_mean)
    };
    let c_quad = speed_from_angle(grid, angle, &result.u_inf)?;
    let flux_defect = discretization::divergence_defect(grid, &result.u_inf, angle)?;
    Ok(CompatibilityReport {
        c_eps: result.c_eps,
        c_quad: result.c_quad,
        speed_gap: (result.c_eps - result.c_quad).abs(),
        c_eps_drift: (c_eps - result.c_eps).abs(),
        c_quad_drift: (c_quad - result.c_quad).abs(),
        flux_defect,
    })
}
