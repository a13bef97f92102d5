//! Tracking the diffeomorphisms that turn a Ricci–DeTurck flow into a Ricci
//! flow: `∂_t χ_t(x) = X(χ_t(x), t)` with `χ_{t0} = id`, where `X` is the
//! DeTurck field of the flow.
//!
//! Positions are stored unwrapped (continuous in time, not reduced modulo
//! the period); everything that samples a field wraps them.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fd;
use crate::field::{MetricField, TensorField};
use crate::flow::FlowTrajectory;
use crate::geometry;
use crate::grid::{sym_index, GridSpec};
use crate::interp::Interpolator;
use crate::linalg::{self, Mat};
use crate::par;

/// Backward integration stops here rather than at 0.
pub const T_MIN: f64 = 1e-4;
/// Reliability threshold `‖∇²h‖·h²` for the anchor snapshot.
pub const ANCHOR_THRESHOLD: f64 = 0.1;
/// Required sample density per decade of time for diameter queries.
pub const SAMPLES_PER_DECADE: f64 = 16.0;
/// Fixed-point iterations for inverting `χ_t`.
const INVERSE_ITERATIONS: usize = 20;
/// Substeps keep `max|X|·Δt` below this fraction of the grid spacing.
const STEP_FRACTION: f64 = 0.125;
/// Substeps allowed per interval before declaring the step size too large.
const MAX_SUBSTEPS: usize = 1024;

/// Piecewise-linear-in-time vector field given by snapshots.
#[derive(Clone, Debug)]
pub struct VelocityHistory {
    grid: GridSpec,
    times: Vec<f64>,
    fields: Vec<Vec<f64>>,
    speeds: Vec<f64>,
}

impl VelocityHistory {
    /// `fields` are (0,1) tensors at strictly increasing `times`.
    pub fn new(grid: GridSpec, times: Vec<f64>, fields: Vec<TensorField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::Config(
                "velocity history needs one field per time".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "velocity history times must increase".into(),
            ));
        }
        let np = grid.num_points();
        let mut data = Vec::with_capacity(fields.len());
        let mut speeds = Vec::with_capacity(fields.len());
        for f in fields {
            f.grid().ensure_same(&grid, "velocity field")?;
            if f.valence() != (0, 1) {
                return Err(Error::Config("velocity fields must be vector fields".into()));
            }
            let v = f.into_data();
            let sq: Vec<f64> = (0..np)
                .map(|p| (0..grid.dim).map(|a| v[a * np + p].powi(2)).sum::<f64>())
                .collect();
            speeds.push(par::max_abs(&sq).sqrt());
            data.push(v);
        }
        Ok(VelocityHistory {
            grid,
            times,
            fields: data,
            speeds,
        })
    }

    /// DeTurck fields of every positive-time snapshot.
    pub fn from_trajectory(traj: &FlowTrajectory) -> Result<Self> {
        let states: Vec<_> = traj.states.iter().filter(|s| s.t > 0.0).collect();
        let first = states
            .first()
            .ok_or_else(|| Error::InsufficientSnapshots("no snapshot after t = 0".into()))?;
        let grid = *first.g.grid();
        let mut times = Vec::new();
        let mut fields = Vec::new();
        for s in states {
            if times.last().is_some_and(|&t: &f64| s.t <= t) {
                continue;
            }
            times.push(s.t);
            fields.push(geometry::deturck_field(&s.g, &s.bg)?);
        }
        Self::new(grid, times, fields)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = (self.times[0], *self.times.last().unwrap());
        let slack = 1e-12 * hi.abs().max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(Error::Config(format!(
                "t = {t:.6e} lies outside the velocity history [{lo:.6e}, {hi:.6e}]"
            )));
        }
        Ok(())
    }

    /// Index `i` with `times[i] <= t <= times[i + 1]` and the weight of `i + 1`.
    fn bracket(&self, t: f64) -> (usize, f64) {
        let n = self.times.len();
        if n == 1 {
            return (0, 0.0);
        }
        let i = self.times.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let w = ((t - self.times[i]) / (self.times[i + 1] - self.times[i])).clamp(0.0, 1.0);
        (i, w)
    }

    /// Speed bound over `[a, b]`.
    fn max_speed(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = (a.min(b), a.max(b));
        let (i, _) = self.bracket(lo);
        let (j, _) = self.bracket(hi);
        self.speeds[i..=(j + 1).min(self.speeds.len() - 1)]
            .iter()
            .fold(0.0, |m: f64, s| m.max(*s))
    }

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64; 3]) {
        let (i, w) = self.bracket(t);
        let dim = self.grid.dim;
        let mut a = [0.0; 3];
        Interpolator::new(&self.grid, &self.fields[i]).eval(x, &mut a);
        if w > 0.0 {
            let mut b = [0.0; 3];
            Interpolator::new(&self.grid, &self.fields[i + 1]).eval(x, &mut b);
            for k in 0..dim {
                a[k] = (1.0 - w) * a[k] + w * b[k];
            }
        }
        *out = a;
    }
}

/// Which points are tracked.
#[derive(Clone, Debug, PartialEq)]
pub enum TracerSet {
    /// Every grid point, in grid order.
    Grid,
    Points(Vec<[f64; 3]>),
}

impl TracerSet {
    fn starts(&self, grid: &GridSpec) -> Vec<[f64; 3]> {
        match self {
            TracerSet::Grid => (0..grid.num_points()).map(|p| grid.coords(p)).collect(),
            TracerSet::Points(v) => v.clone(),
        }
    }
}

/// Sampled positions `χ_t(x)` of a set of tracers.
#[derive(Clone, Debug)]
pub struct DiffeoTrack {
    pub grid: GridSpec,
    pub t0: f64,
    /// Increasing; contains `t0`.
    pub sample_times: Vec<f64>,
    pub tracer_set: TracerSet,
    /// `positions[k][i]` is tracer `i` at `sample_times[k]`, unwrapped.
    pub positions: Vec<Vec<[f64; 3]>>,
}

impl DiffeoTrack {
    /// Track from explicitly given positions, e.g. a synthetic map.
    pub fn from_positions(
        grid: GridSpec,
        t0: f64,
        sample_times: Vec<f64>,
        tracer_set: TracerSet,
        positions: Vec<Vec<[f64; 3]>>,
    ) -> Result<Self> {
        let count = tracer_set.starts(&grid).len();
        if sample_times.len() != positions.len() || positions.iter().any(|p| p.len() != count) {
            return Err(Error::Config("positions do not match samples and tracers".into()));
        }
        if sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sample times must increase".into()));
        }
        Ok(DiffeoTrack {
            grid,
            t0,
            sample_times,
            tracer_set,
            positions,
        })
    }

    pub fn tracer_count(&self) -> usize {
        self.positions.first().map_or(0, |p| p.len())
    }

    pub fn sample_index(&self, t: f64) -> Result<usize> {
        self.sample_times
            .iter()
            .position(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| Error::Config(format!("t = {t:.6e} is not a sample time")))
    }

    pub fn positions_at(&self, t: f64) -> Result<&[[f64; 3]]> {
        Ok(&self.positions[self.sample_index(t)?])
    }

    /// Track CSV: `tracer_id,t,x_1..x_n`, positions reduced to `[0, L)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.grid.dim;
        let cols: Vec<String> = (1..=dim).map(|a| format!("x_{a}")).collect();
        writeln!(w, "tracer_id,t,{}", cols.join(","))?;
        for i in 0..self.tracer_count() {
            for (k, t) in self.sample_times.iter().enumerate() {
                let x = &self.positions[k][i];
                let xs: Vec<String> = (0..dim)
                    .map(|a| x[a].rem_euclid(self.grid.period).to_string())
                    .collect();
                writeln!(w, "{i},{t},{}", xs.join(","))?;
            }
        }
        Ok(())
    }
}

/// Log-spaced times from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let m = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=m)
        .map(|k| {
            if k == m {
                hi
            } else {
                lo * 10f64.powf(decades * k as f64 / m as f64)
            }
        })
        .collect()
}

/// First positive snapshot time where `‖∇²h‖·h² < 0.1`.
pub fn anchor_time(traj: &FlowTrajectory) -> Result<f64> {
    for s in traj.states.iter().filter(|s| s.t > 0.0) {
        let h = s.g.grid().spacing();
        let (_, hess) = geometry::covariant_derivative_norms(&s.h().to_packed_sym(), &s.bg)?;
        if hess * h * h < ANCHOR_THRESHOLD {
            return Ok(s.t);
        }
    }
    Err(Error::InsufficientSnapshots(
        "no snapshot is smooth enough to anchor the diffeomorphisms".into(),
    ))
}

/// Integrates `χ` along the DeTurck field of `traj` for every grid point.
pub fn integrate_chi(traj: &FlowTrajectory, t0: f64, sample_times: &[f64]) -> Result<DiffeoTrack> {
    let hist = VelocityHistory::from_trajectory(traj)?;
    integrate_field(&hist, t0, sample_times, TracerSet::Grid)
}

/// Heun (RK2) integration of `dχ/dt = X(χ, t)` from `χ_{t0} = id`, backward
/// to the smallest sample time and forward to the largest. Each interval
/// between consecutive sample or snapshot times is split so that
/// `max|X|·Δt ≤ h/8`.
pub fn integrate_field(
    hist: &VelocityHistory,
    t0: f64,
    sample_times: &[f64],
    tracer_set: TracerSet,
) -> Result<DiffeoTrack> {
    let grid = hist.grid;
    if sample_times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Config("sample times must be positive".into()));
    }
    hist.check_time(t0)?;
    let mut samples: Vec<f64> = sample_times.to_vec();
    samples.push(t0);
    samples.sort_by(f64::total_cmp);
    samples.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    for &t in &samples {
        hist.check_time(t)?;
    }
    let (lo, hi) = (samples[0], *samples.last().unwrap());
    let mut events: Vec<f64> = samples.clone();
    events.extend(hist.times.iter().copied().filter(|t| *t > lo && *t < hi));
    events.sort_by(f64::total_cmp);
    events.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    let i0 = events
        .iter()
        .position(|t| (t - t0).abs() <= 1e-12 * t0.abs().max(1.0))
        .expect("t0 is an event");

    let h = grid.spacing();
    let substeps = |a: f64, b: f64| -> Result<usize> {
        let disp = hist.max_speed(a, b) * (b - a).abs();
        let m = (disp / (STEP_FRACTION * h)).ceil().max(1.0) as usize;
        if m > MAX_SUBSTEPS {
            return Err(Error::StepSize {
                time: a,
                displacement: disp / MAX_SUBSTEPS as f64,
                spacing: h,
            });
        }
        Ok(m)
    };
    // Legs walked from t0: backward then forward, as (from, to, substeps).
    let mut backward = Vec::new();
    for k in (1..=i0).rev() {
        backward.push((events[k], events[k - 1], substeps(events[k], events[k - 1])?));
    }
    let mut forward = Vec::new();
    for k in i0..events.len() - 1 {
        forward.push((events[k], events[k + 1], substeps(events[k], events[k + 1])?));
    }

    let starts = tracer_set.starts(&grid);
    let is_sample = |t: f64| samples.iter().position(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0));
    let dim = grid.dim;
    let paths: Vec<Vec<(usize, [f64; 3])>> = par::map_indices(starts.len(), |i| {
        let mut out = vec![(is_sample(t0).unwrap(), starts[i])];
        for legs in [&backward, &forward] {
            let mut x = starts[i];
            for &(a, b, m) in legs.iter() {
                let dt = (b - a) / m as f64;
                for s in 0..m {
                    let t = a + s as f64 * dt;
                    let t1 = if s + 1 == m { b } else { t + dt };
                    let mut k1 = [0.0; 3];
                    hist.eval(&x, t, &mut k1);
                    let mut y = x;
                    for c in 0..dim {
                        y[c] += dt * k1[c];
                    }
                    let mut k2 = [0.0; 3];
                    hist.eval(&y, t1, &mut k2);
                    for c in 0..dim {
                        x[c] += 0.5 * dt * (k1[c] + k2[c]);
                    }
                }
                if let Some(k) = is_sample(b) {
                    out.push((k, x));
                }
            }
        }
        out
    });
    let mut positions = vec![vec![[0.0; 3]; starts.len()]; samples.len()];
    for (i, path) in paths.into_iter().enumerate() {
        for (k, x) in path {
            positions[k][i] = x;
        }
    }
    DiffeoTrack::from_positions(grid, t0, samples, tracer_set, positions)
}

/// Displacement `χ_t(x) - x` at grid points (component-major) and its
/// Jacobian `δ + ∂d` (`jac[(a * n + b) * np + p] = ∂_b χ^a`).
fn displacement_and_jacobian(track: &DiffeoTrack, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if track.tracer_set != TracerSet::Grid {
        return Err(Error::Config(
            "resampling a metric needs a track over every grid point".into(),
        ));
    }
    let grid = track.grid;
    let (n, np) = (grid.dim, grid.num_points());
    let pos = track.positions_at(t)?;
    let mut disp = vec![0.0; n * np];
    for (p, x) in pos.iter().enumerate() {
        let y = grid.coords(p);
        for a in 0..n {
            disp[a * np + p] = x[a] - y[a];
        }
    }
    let grads = fd::gradients(&grid, &disp);
    let mut jac = vec![0.0; n * n * np];
    for a in 0..n {
        for b in 0..n {
            let dst = &mut jac[(a * n + b) * np..(a * n + b + 1) * np];
            dst.copy_from_slice(&grads[b][a]);
            if a == b {
                dst.iter_mut().for_each(|v| *v += 1.0);
            }
        }
    }
    for p in 0..np {
        let j = jac_at(&jac, n, np, p);
        let det = match n {
            2 => linalg::det::<2>(&[[j[0][0], j[0][1]], [j[1][0], j[1][1]]]),
            _ => linalg::det::<3>(&j),
        };
        if !(det > 0.0) {
            return Err(Error::Fold {
                point: p,
                jacobian: det,
            });
        }
    }
    Ok((disp, jac))
}

fn jac_at(jac: &[f64], n: usize, np: usize, p: usize) -> Mat<3> {
    let mut j = [[0.0; 3]; 3];
    for a in 0..n {
        for b in 0..n {
            j[a][b] = jac[(a * n + b) * np + p];
        }
    }
    j
}

fn unpack<const D: usize>(packed: &[f64]) -> Mat<D> {
    let mut m = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            m[i][j] = packed[sym_index(i.max(j), i.min(j))];
        }
    }
    m
}

fn shrink<const D: usize>(m: &Mat<3>) -> Mat<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j]))
}

/// `Aᵀ g A`, packed.
fn congruence<const D: usize>(g: &Mat<D>, a: &Mat<D>) -> [f64; 6] {
    let ga = linalg::mat_mul(g, a);
    let m = linalg::mat_mul(&linalg::transpose(a), &ga);
    let mut out = [0.0; 6];
    for i in 0..D {
        for j in 0..=i {
            out[sym_index(i, j)] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
    out
}

fn assemble(grid: GridSpec, rows: Vec<[f64; 6]>) -> Result<MetricField> {
    let np = grid.num_points();
    let nc = grid.sym_components();
    let mut data = vec![0.0; nc * np];
    for (p, r) in rows.iter().enumerate() {
        for c in 0..nc {
            data[c * np + p] = r[c];
        }
    }
    MetricField::new(grid, data)
}

/// `(χ_t)_* g` on the grid: for each grid point `y`, `x = χ_t⁻¹(y)` by
/// fixed-point iteration on the interpolated displacement, then
/// `J(x)⁻ᵀ g(x) J(x)⁻¹`.
pub fn pushforward_metric(g: &MetricField, track: &DiffeoTrack, t: f64) -> Result<MetricField> {
    g.grid().ensure_same(&track.grid, "pushforward")?;
    let grid = track.grid;
    let (disp, jac) = displacement_and_jacobian(track, t)?;
    if disp.iter().all(|v| *v == 0.0) {
        return Ok(g.clone());
    }
    let (n, np) = (grid.dim, grid.num_points());
    let id = Interpolator::new(&grid, &disp);
    let ig = Interpolator::new(&grid, g.data());
    let ij = Interpolator::new(&grid, &jac);
    let tol = 1e-8 * grid.spacing();
    let rows: Vec<Result<[f64; 6]>> = par::map_indices(np, |p| {
        let y = grid.coords(p);
        let mut d = [0.0; 3];
        id.eval(&y, &mut d);
        let mut x = [0.0; 3];
        for a in 0..n {
            x[a] = y[a] - d[a];
        }
        for _ in 0..INVERSE_ITERATIONS {
            id.eval(&x, &mut d);
            for a in 0..n {
                x[a] = y[a] - d[a];
            }
        }
        id.eval(&x, &mut d);
        let resid = (0..n).map(|a| (x[a] + d[a] - y[a]).abs()).fold(0.0, f64::max);
        let mut jv = [0.0; 9];
        ij.eval(&x, &mut jv);
        let mut j = [[0.0; 3]; 3];
        for a in 0..n {
            for b in 0..n {
                j[a][b] = jv[a * n + b];
            }
        }
        let fold = |det: f64| Error::Fold {
            point: p,
            jacobian: det,
        };
        let mut gv = [0.0; 6];
        ig.eval(&x, &mut gv);
        match n {
            2 => {
                let j2 = shrink::<2>(&j);
                let det = linalg::det(&j2);
                let inv = linalg::inverse(&j2).filter(|_| resid <= tol && det > 0.0);
                Ok(congruence(&unpack::<2>(&gv), &inv.ok_or_else(|| fold(det))?))
            }
            _ => {
                let det = linalg::det(&j);
                let inv = linalg::inverse(&j).filter(|_| resid <= tol && det > 0.0);
                Ok(congruence(&unpack::<3>(&gv), &inv.ok_or_else(|| fold(det))?))
            }
        }
    });
    assemble(grid, rows.into_iter().collect::<Result<_>>()?)
}

/// `χ_t^* g` on the grid: `J(x)ᵀ g(χ_t(x)) J(x)`.
pub fn pullback_metric(g: &MetricField, track: &DiffeoTrack, t: f64) -> Result<MetricField> {
    g.grid().ensure_same(&track.grid, "pullback")?;
    let grid = track.grid;
    let (disp, jac) = displacement_and_jacobian(track, t)?;
    if disp.iter().all(|v| *v == 0.0) {
        return Ok(g.clone());
    }
    let (n, np) = (grid.dim, grid.num_points());
    let pos = track.positions_at(t)?;
    let ig = Interpolator::new(&grid, g.data());
    let rows: Vec<[f64; 6]> = par::map_indices(np, |p| {
        let mut gv = [0.0; 6];
        ig.eval(&pos[p], &mut gv);
        let j = jac_at(&jac, n, np, p);
        match n {
            2 => congruence(&unpack::<2>(&gv), &shrink::<2>(&j)),
            _ => congruence(&unpack::<3>(&gv), &j),
        }
    });
    assemble(grid, rows)
}

/// The regularizing Ricci flow `g̃_t = χ_t^* g_t` and its pushforward
/// `(χ_t)_* g̃_t`, which should converge to `g_0` in `C⁰` as `t → 0`.
#[derive(Clone, Debug)]
pub struct PulledBackFlow {
    pub times: Vec<f64>,
    pub ricci_flow: Vec<MetricField>,
    pub metrics: Vec<MetricField>,
}

/// Evaluated at every sample time of `track` that is also a snapshot.
pub fn pulled_back_flow(traj: &FlowTrajectory, track: &DiffeoTrack) -> Result<PulledBackFlow> {
    let mut out = PulledBackFlow {
        times: Vec::new(),
        ricci_flow: Vec::new(),
        metrics: Vec::new(),
    };
    for &t in &track.sample_times {
        let Ok(state) = traj.state_at(t) else {
            continue;
        };
        let tilde = pullback_metric(&state.g, track, t)?;
        out.metrics.push(pushforward_metric(&tilde, track, t)?);
        out.ricci_flow.push(tilde);
        out.times.push(t);
    }
    if out.times.is_empty() {
        return Err(Error::InsufficientSnapshots(
            "no sample time coincides with a snapshot".into(),
        ));
    }
    Ok(out)
}

impl PulledBackFlow {
    /// `(t, ‖(χ_t)_* g̃_t − g_0‖)` in the operator norm relative to `g_0`.
    pub fn c0_distances(&self, g0: &MetricField) -> Result<Vec<(f64, f64)>> {
        self.times
            .iter()
            .zip(&self.metrics)
            .map(|(t, m)| Ok((*t, m.relative_distance(g0)?)))
            .collect()
    }
}

/// Diameter of `{χ_s(x) : s ≤ t}` in the flat background distance.
pub fn tracer_diameter(track: &DiffeoTrack, tracer: usize, t: f64) -> Result<f64> {
    let k = track.sample_index(t)?;
    check_density(track, k)?;
    let mut diam: f64 = 0.0;
    for a in 0..=k {
        for b in 0..a {
            let (x, y) = (&track.positions[a][tracer], &track.positions[b][tracer]);
            diam = diam.max(track.grid.torus_distance(x, y));
        }
    }
    Ok(diam)
}

fn check_density(track: &DiffeoTrack, k: usize) -> Result<()> {
    let (lo, t) = (track.sample_times[0], track.sample_times[k]);
    let need = (SAMPLES_PER_DECADE * (t / lo).log10() - 1e-9).ceil();
    if ((k + 1) as f64) < need {
        return Err(Error::InsufficientSampling(format!(
            "{} samples in [{lo:.3e}, {t:.3e}], need {need}",
            k + 1
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiameterRow {
    pub tracer: usize,
    pub t: f64,
    pub diam: f64,
    pub ratio: f64,
}

/// Diameter and `diam/√t` for the given tracers at every sample time.
pub fn diameter_table(track: &DiffeoTrack, tracers: &[usize]) -> Result<Vec<DiameterRow>> {
    let ns = track.sample_times.len();
    check_density(track, ns - 1)?;
    let rows: Vec<Vec<DiameterRow>> = par::map_indices(tracers.len(), |q| {
        let i = tracers[q];
        let mut diam: f64 = 0.0;
        let mut out = Vec::with_capacity(ns);
        for k in 0..ns {
            let x = &track.positions[k][i];
            for b in 0..k {
                diam = diam.max(track.grid.torus_distance(x, &track.positions[b][i]));
            }
            let t = track.sample_times[k];
            out.push(DiameterRow {
                tracer: i,
                t,
                diam,
                ratio: diam / t.sqrt(),
            });
        }
        out
    });
    Ok(rows.into_iter().flatten().collect())
}

/// Largest `diam/√t` over rows with `t` in `[lo, hi]`.
pub fn sqrt_t_constant(rows: &[DiameterRow], lo: f64, hi: f64) -> f64 {
    rows.iter()
        .filter(|r| r.t >= lo * (1.0 - 1e-12) && r.t <= hi * (1.0 + 1e-12))
        .fold(0.0, |m, r| m.max(r.ratio))
}

/// Diameter CSV: `tracer_id,t,diam,diam_over_sqrt_t`.
pub fn write_diameter_csv<W: Write>(rows: &[DiameterRow], mut w: W) -> Result<()> {
    writeln!(w, "tracer_id,t,diam,diam_over_sqrt_t")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.tracer, r.t, r.diam, r.ratio)?;
    }
    Ok(())
}
