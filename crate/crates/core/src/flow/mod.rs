//! Time stepping of the Ricci flow (background), the Ricci–DeTurck flow and
//! the perturbation equation, with scalar-curvature monitoring.

mod residual;

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::{MetricField, TensorField};
use crate::geometry::{self, CurvatureReport};
use crate::par;

pub use residual::{scalar_evolution_residual, ScalarResidual};

/// Smallest step the stepper will take before giving up.
pub const MIN_DT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    ExplicitRk2,
    ExplicitEuler,
}

/// Which equation advances the full metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    /// `∂_t g = −2 Ric(g) − L_X g` directly.
    RicciDeTurck,
    /// `∂_t h` of the perturbation equation, `g = bg + h`.
    Perturbation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub t_final: f64,
    /// Largest admissible `sup ‖g₀ − bg₀‖` in the background operator norm.
    pub eps_run: f64,
    /// Times at which full states are kept (besides `0` and `t_final`).
    pub snapshot_times: Vec<f64>,
}

impl StepperConfig {
    pub fn new(t_final: f64) -> Self {
        Self {
            scheme: Scheme::ExplicitRk2,
            cfl_safety: 0.25,
            t_final,
            eps_run: 0.1,
            snapshot_times: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!("T must be positive, got {}", self.t_final)));
        }
        if !(self.eps_run > 0.0) {
            return Err(Error::Config(format!("eps_run must be positive, got {}", self.eps_run)));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_final))
        {
            return Err(Error::Config(format!("snapshot time {t} outside [0, T]")));
        }
        Ok(())
    }

    /// Sorted, de-duplicated stop times in `(0, T]`, always ending at `T`.
    fn stops(&self) -> Vec<f64> {
        let mut stops: Vec<f64> = self
            .snapshot_times
            .iter()
            .copied()
            .filter(|t| *t > 0.0 && *t < self.t_final)
            .collect();
        stops.push(self.t_final);
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        stops
    }
}

/// `dt = safety · h² / (2n · max λ_max(g⁻¹))`.
pub fn cfl_dt(g: &MetricField, cfl_safety: f64) -> f64 {
    let grid = g.grid();
    let h = grid.spacing();
    cfl_safety * h * h * g.lambda_min() / (2.0 * grid.dim as f64)
}

/// Metric, background and their difference at one time.
#[derive(Debug)]
pub struct FlowState {
    pub t: f64,
    pub g: MetricField,
    pub bg: MetricField,
    h: TensorField,
    report: OnceLock<CurvatureReport>,
}

impl Clone for FlowState {
    fn clone(&self) -> Self {
        Self {
            t: self.t,
            g: self.g.clone(),
            bg: self.bg.clone(),
            h: self.h.clone(),
            report: self.report.clone(),
        }
    }
}

impl FlowState {
    pub fn new(t: f64, g: MetricField, bg: MetricField) -> Result<Self> {
        let h = g.perturbation(&bg)?;
        Ok(Self {
            t,
            g,
            bg,
            h,
            report: OnceLock::new(),
        })
    }

    /// `h = g − bg`.
    pub fn h(&self) -> &TensorField {
        &self.h
    }

    /// Curvature of `g`, computed on first use.
    pub fn report(&self) -> Result<&CurvatureReport> {
        if let Some(r) = self.report.get() {
            return Ok(r);
        }
        let r = geometry::curvature(&self.g)?;
        Ok(self.report.get_or_init(|| r))
    }
}

fn degeneration(t: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::InvalidMetric { point, reason } => Error::FlowDegeneration {
            time: t,
            point,
            reason,
        },
        Error::DegeneratePerturbation { point } => Error::FlowDegeneration {
            time: t,
            point,
            reason: "background plus perturbation not positive definite".into(),
        },
        other => other,
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

fn heun(y: &[f64], dt: f64, k1: &[f64], k2: &[f64]) -> Vec<f64> {
    y.iter()
        .zip(k1.iter().zip(k2))
        .map(|(y, (a, b))| y + 0.5 * dt * (a + b))
        .collect()
}

fn metric(like: &MetricField, data: Vec<f64>, t: f64) -> Result<MetricField> {
    MetricField::new(*like.grid(), data).map_err(degeneration(t))
}

/// One step of `∂_t bg = −2 Ric(bg)`. Spatially constant metrics are fixed
/// points and are returned unchanged.
pub fn step_ricci(bg: &MetricField, dt: f64, scheme: Scheme, t: f64) -> Result<MetricField> {
    if bg.is_constant() {
        return Ok(bg.clone());
    }
    let (k1, _) = geometry::ricci_flow_rhs(bg)?;
    let y1 = metric(bg, axpy(bg.data(), dt, &k1), t + dt)?;
    match scheme {
        Scheme::ExplicitEuler => Ok(y1),
        Scheme::ExplicitRk2 => {
            let (k2, _) = geometry::ricci_flow_rhs(&y1)?;
            metric(bg, heun(bg.data(), dt, &k1, &k2), t + dt)
        }
    }
}

fn ricci_velocity(bg: &MetricField) -> Result<Option<Vec<f64>>> {
    if bg.is_constant() {
        Ok(None)
    } else {
        Ok(Some(geometry::ricci_flow_rhs(bg)?.0))
    }
}

fn advance_bg(bg: &MetricField, v: &Option<Vec<f64>>, dt: f64, t: f64) -> Result<MetricField> {
    match v {
        None => Ok(bg.clone()),
        Some(v) => metric(bg, axpy(bg.data(), dt, v), t),
    }
}

fn finish_bg(
    bg: &MetricField,
    k1: &Option<Vec<f64>>,
    k2: &Option<Vec<f64>>,
    dt: f64,
    t: f64,
) -> Result<MetricField> {
    match (k1, k2) {
        (Some(a), Some(b)) => metric(bg, heun(bg.data(), dt, a, b), t),
        _ => Ok(bg.clone()),
    }
}

/// One step of the Ricci–DeTurck flow for `g` and the Ricci flow for `bg`.
pub fn step_rdt(state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    Ok(step_rdt_monitored(state, dt, scheme)?.0)
}

/// [`step_rdt`] that also returns the monitoring row of `state`, taken from
/// the first velocity evaluation.
fn step_rdt_monitored(state: &FlowState, dt: f64, scheme: Scheme) -> Result<(FlowState, SeriesRow)> {
    let t1 = state.t + dt;
    let v1 = geometry::rdt_velocity(&state.g, &state.bg)?;
    let row = series_row(state, dt, &v1.scalar, v1.norms)?;
    let k1 = v1.velocity;
    let b1 = ricci_velocity(&state.bg)?;
    let g1 = metric(&state.g, axpy(state.g.data(), dt, &k1), t1)?;
    let bg1 = advance_bg(&state.bg, &b1, dt, t1)?;
    let (g, bg) = match scheme {
        Scheme::ExplicitEuler => (g1, bg1),
        Scheme::ExplicitRk2 => {
            let (k2, _) = geometry::ricci_deturck_rhs(&g1, &bg1)?;
            let b2 = ricci_velocity(&bg1)?;
            (
                metric(&state.g, heun(state.g.data(), dt, &k1, &k2), t1)?,
                finish_bg(&state.bg, &b1, &b2, dt, t1)?,
            )
        }
    };
    Ok((FlowState::new(t1, g, bg)?, row))
}

/// One step of the perturbation equation for `h` and the Ricci flow for
/// `bg`; `g` is reassembled as `bg + h`.
pub fn step_perturbation(state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    let t1 = state.t + dt;
    let h0 = state.h.to_packed_sym();
    let k1 = geometry::perturbation_rhs(&h0, &state.bg).map_err(degeneration(state.t))?;
    let b1 = ricci_velocity(&state.bg)?;
    let h1 = axpy(&h0, dt, &k1);
    let bg1 = advance_bg(&state.bg, &b1, dt, t1)?;
    let (h, bg) = match scheme {
        Scheme::ExplicitEuler => (h1, bg1),
        Scheme::ExplicitRk2 => {
            let k2 = geometry::perturbation_rhs(&h1, &bg1).map_err(degeneration(t1))?;
            let b2 = ricci_velocity(&bg1)?;
            (heun(&h0, dt, &k1, &k2), finish_bg(&state.bg, &b1, &b2, dt, t1)?)
        }
    };
    let g = metric(&bg, axpy(bg.data(), 1.0, &h), t1)?;
    FlowState::new(t1, g, bg)
}

/// One monitored row: `(t, dt, min R, max R, ‖∇h‖_∞, ‖∇²h‖_∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub dt: f64,
    pub min_scalar: f64,
    pub max_scalar: f64,
    pub grad_h: f64,
    pub hess_h: f64,
}

/// Snapshots and monitoring series of one flow run.
#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub solver: Solver,
    pub states: Vec<FlowState>,
    pub dt_history: Vec<f64>,
    pub series: Vec<SeriesRow>,
}

impl FlowTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    /// Snapshot at time `t` (matched to 1e-12 relative).
    pub fn state_at(&self, t: f64) -> Result<&FlowState> {
        self.states
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or(Error::SnapshotMissing(t))
    }

    pub fn min_scalar_series(&self) -> Vec<(f64, f64)> {
        self.series.iter().map(|r| (r.t, r.min_scalar)).collect()
    }

    pub fn deriv_norm_series(&self) -> Vec<(f64, f64, f64)> {
        self.series.iter().map(|r| (r.t, r.grad_h, r.hess_h)).collect()
    }
}

fn series_row(
    state: &FlowState,
    dt: f64,
    scalar: &[f64],
    norms: Option<(f64, f64)>,
) -> Result<SeriesRow> {
    let (min_scalar, max_scalar) = par::min_max(scalar);
    let (grad_h, hess_h) = match norms {
        Some(n) => n,
        None => geometry::covariant_derivative_norms(&state.h.to_packed_sym(), &state.bg)?,
    };
    Ok(SeriesRow {
        t: state.t,
        dt,
        min_scalar,
        max_scalar,
        grad_h,
        hess_h,
    })
}

fn monitor(state: &FlowState, dt: f64) -> Result<SeriesRow> {
    let scalar = geometry::scalar_curvature(&state.g)?;
    series_row(state, dt, &scalar, None)
}

/// Integrates from `(g0, bg0)` at `t = 0` to `cfg.t_final`, keeping states
/// at `0`, every snapshot time and `t_final`, and a monitoring row before
/// every step and at the end.
pub fn run_flow(
    g0: MetricField,
    bg0: MetricField,
    solver: Solver,
    cfg: &StepperConfig,
) -> Result<FlowTrajectory> {
    cfg.validate()?;
    g0.grid().ensure_same(bg0.grid(), "initial data and background")?;
    let dist = g0.relative_distance(&bg0)?;
    if dist > cfg.eps_run {
        return Err(Error::Config(format!(
            "initial metric is {dist:.4} from the background, above eps_run = {}",
            cfg.eps_run
        )));
    }
    let mut state = FlowState::new(0.0, g0, bg0)?;
    let mut traj = FlowTrajectory {
        solver,
        states: vec![state.clone()],
        dt_history: Vec::new(),
        series: Vec::new(),
    };
    for stop in cfg.stops() {
        while state.t < stop {
            let cfl = cfl_dt(&state.g, cfg.cfl_safety).min(cfl_dt(&state.bg, cfg.cfl_safety));
            if !(cfl >= MIN_DT) {
                return Err(Error::HorizonTooLarge {
                    time: state.t,
                    dt: cfl,
                });
            }
            let remaining = stop - state.t;
            let dt = if remaining <= cfl * (1.0 + 1e-9) {
                remaining
            } else if remaining < 2.0 * cfl {
                0.5 * remaining
            } else {
                cfl
            };
            let (mut next, row) = match solver {
                Solver::RicciDeTurck => step_rdt_monitored(&state, dt, cfg.scheme)?,
                Solver::Perturbation => {
                    let row = monitor(&state, dt)?;
                    (step_perturbation(&state, dt, cfg.scheme)?, row)
                }
            };
            traj.series.push(row);
            if dt == remaining {
                next.t = stop;
            }
            traj.dt_history.push(dt);
            state = next;
        }
        traj.states.push(state.clone());
    }
    traj.series.push(monitor(&state, 0.0)?);
    Ok(traj)
}

#[cfg(test)]
mod tests;
