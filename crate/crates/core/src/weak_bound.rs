//! Weak scalar curvature lower bounds: infima of `R(g_t)` over geodesic
//! balls of radius `C t^β`, their small-time liminf and the infimum over
//! `C`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::MetricField;
use crate::flow::FlowTrajectory;
use crate::geometry;
use crate::grid::{sym_index, GridSpec};
use crate::par;

/// Number of smallest sampled times whose minimum stands in for the liminf.
pub const LIMINF_WINDOW: usize = 3;
pub const DEFAULT_BETA: f64 = 0.4;
pub const DEFAULT_C_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// `tol_wb = 0.05 (1 + |κ|)`.
pub fn tolerance(kappa: f64) -> f64 {
    0.05 * (1.0 + kappa.abs())
}

/// Dyadic times `0.1 · 2^{-k}` down to `1e-4`, decreasing.
pub fn default_t_grid() -> Vec<f64> {
    (0..)
        .map(|k| 0.1 * 0.5f64.powi(k))
        .take_while(|t| *t >= 1e-4)
        .collect()
}

/// Primitive lattice steps with entries in `[-2, 2]`: 16 in two dimensions
/// (axes, diagonals, knight moves) and 98 in three.
fn neighbour_offsets(dim: usize) -> Vec<[isize; 3]> {
    let mut out = Vec::new();
    let range = -2..=2isize;
    for a in range.clone() {
        for b in range.clone() {
            for c in if dim == 3 { range.clone() } else { 0..=0 } {
                let v = [a, b, c];
                let g = v.iter().fold(0, |g, x| gcd(g, x.unsigned_abs()));
                if g == 1 {
                    out.push(v);
                }
            }
        }
    }
    out
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `g`-distances from a grid point, by Dijkstra on the lattice graph.
#[derive(Clone, Debug)]
pub struct GeodesicDistanceField {
    pub source: usize,
    /// `y - coords(source)` when the requested point was snapped.
    pub snap_offset: [f64; 3],
    /// `INFINITY` beyond the search radius.
    pub dist: Vec<f64>,
}

/// Distances from `y` (snapped to the nearest grid point). Edge weights are
/// `√(Δxᵀ ḡ Δx)` with `ḡ` the mean of the endpoint metrics.
pub fn geodesic_distance(g: &MetricField, y: &[f64]) -> Result<GeodesicDistanceField> {
    geodesic_distance_within(g, y, f64::INFINITY)
}

/// As [`geodesic_distance`], stopping once distances exceed `radius`.
pub fn geodesic_distance_within(
    g: &MetricField,
    y: &[f64],
    radius: f64,
) -> Result<GeodesicDistanceField> {
    geometry::check_condition(g)?;
    let grid = *g.grid();
    let (source, snap_offset) = grid.snap(y);
    let dist = dijkstra(g, &grid, source, radius);
    Ok(GeodesicDistanceField {
        source,
        snap_offset,
        dist,
    })
}

fn dijkstra(g: &MetricField, grid: &GridSpec, source: usize, radius: f64) -> Vec<f64> {
    let dim = grid.dim;
    let h = grid.spacing();
    let np = grid.num_points();
    let offsets = neighbour_offsets(dim);
    // Quadratic-form coefficients per offset: `Δx_i Δx_j` grouped by packed
    // component, so the squared length at a point is a dot product.
    let nc = grid.sym_components();
    let coeffs: Vec<Vec<f64>> = offsets
        .iter()
        .map(|o| {
            let mut c = vec![0.0; nc];
            for i in 0..dim {
                for j in 0..=i {
                    let f = if i == j { 1.0 } else { 2.0 };
                    c[sym_index(i, j)] = f * o[i] as f64 * o[j] as f64 * h * h;
                }
            }
            c
        })
        .collect();
    let data = g.data();
    let quad = |p: usize, c: &[f64]| -> f64 { (0..nc).map(|k| c[k] * data[k * np + p]).sum() };
    let mut dist = vec![f64::INFINITY; np];
    let mut done = vec![false; np];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, p)) = heap.pop() {
        if done[p] {
            continue;
        }
        if d > radius {
            break;
        }
        done[p] = true;
        for (o, c) in offsets.iter().zip(&coeffs) {
            let q = grid.shifted(p, &o[..dim]);
            if done[q] {
                continue;
            }
            let w = (0.5 * (quad(p, c) + quad(q, c))).sqrt();
            let nd = d + w;
            if nd < dist[q] {
                dist[q] = nd;
                heap.push(Entry(nd, q));
            }
        }
    }
    for (d, f) in dist.iter_mut().zip(&done) {
        if !f || *d > radius {
            *d = f64::INFINITY;
        }
    }
    dist
}

fn ball_min(scalar: &[f64], dist: &[f64], radius: f64) -> f64 {
    scalar
        .iter()
        .zip(dist)
        .filter(|(_, d)| **d <= radius)
        .fold(f64::INFINITY, |m, (r, _)| m.min(*r))
}

/// `inf R(g_t)` over `{dist_{g_t}(y, ·) ≤ C t^β}`.
pub fn ball_inf_scalar(traj: &FlowTrajectory, y: &[f64], c: f64, beta: f64, t: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Config(format!("C must be positive, got {c}")));
    }
    let g = &traj.state_at(t)?.g;
    let radius = c * t.powf(beta);
    let field = geodesic_distance_within(g, y, radius)?;
    let scalar = geometry::scalar_curvature(g)?;
    Ok(ball_min(&scalar, &field.dist, radius))
}

/// Result of evaluating the weak lower bound at one point.
#[derive(Clone, Debug)]
pub struct WeakBoundEstimate {
    pub point: [f64; 3],
    pub beta: f64,
    pub c_grid: Vec<f64>,
    /// Decreasing.
    pub t_grid: Vec<f64>,
    /// `ball_inf[i][j]` for `c_grid[i]`, `t_grid[j]`.
    pub ball_inf: Vec<Vec<f64>>,
    pub per_c_liminf: Vec<f64>,
    pub estimate: f64,
    /// The minimising `C` is the first or last of the grid.
    pub endpoint_minimizer: bool,
    /// `(κ, passed)`.
    pub kappa_test: Option<(f64, bool)>,
}

impl WeakBoundEstimate {
    /// Passes iff `estimate ≥ κ − tol_wb(κ)`.
    pub fn test_kappa(&mut self, kappa: f64) -> bool {
        let pass = self.estimate >= kappa - tolerance(kappa);
        self.kappa_test = Some((kappa, pass));
        pass
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let p: Vec<String> = self.point.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(s, "point {}  beta {}", p.join(" "), self.beta);
        let head: Vec<String> = self.t_grid.iter().map(|t| format!("{t:>12.4e}")).collect();
        let _ = writeln!(s, "{:>8} {}  liminf", "C \\ t", head.join(" "));
        for (i, c) in self.c_grid.iter().enumerate() {
            let row: Vec<String> = self.ball_inf[i].iter().map(|v| format!("{v:>12.5}")).collect();
            let _ = writeln!(s, "{c:>8} {}  {:.5}", row.join(" "), self.per_c_liminf[i]);
        }
        let _ = writeln!(s, "estimate {:.6}", self.estimate);
        if self.endpoint_minimizer {
            let _ = writeln!(s, "note: minimising C is an endpoint of the C grid");
        }
        if let Some((k, pass)) = self.kappa_test {
            let verdict = if pass { "pass" } else { "fail" };
            let _ = writeln!(s, "kappa {k} tol {:.4} -> {verdict}", tolerance(k));
        }
        s
    }
}

/// Checks `β ∈ (0, ½)` and the grid sizes; returns the t grid sorted
/// decreasing without duplicates.
pub fn validate_grids(beta: f64, c_grid: &[f64], t_grid: &[f64]) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Config(format!("beta must lie in (0, 1/2), got {beta}")));
    }
    if c_grid.len() < 4 || c_grid.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::InsufficientGrids(
            "C grid needs at least 4 positive entries".into(),
        ));
    }
    let mut ts = t_grid.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    if ts.len() < 6 || !(ts[ts.len() - 1] > 0.0) || ts[0] / ts[ts.len() - 1] < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InsufficientGrids(
            "t grid needs at least 6 positive times spanning two decades".into(),
        ));
    }
    Ok(ts)
}

/// Per-time data shared by every point and every `C`.
struct Slice<'a> {
    g: &'a MetricField,
    scalar: Vec<f64>,
}

fn slices<'a>(traj: &'a FlowTrajectory, t_grid: &[f64]) -> Result<Vec<Slice<'a>>> {
    t_grid
        .iter()
        .map(|&t| {
            let g = &traj.state_at(t)?.g;
            Ok(Slice {
                g,
                scalar: geometry::scalar_curvature(g)?,
            })
        })
        .collect()
}

fn estimate_at(
    slices: &[Slice],
    y: &[f64],
    beta: f64,
    c_grid: &[f64],
    t_grid: &[f64],
) -> Result<WeakBoundEstimate> {
    let cmax = c_grid.iter().fold(0.0, |m: f64, c| m.max(*c));
    let columns: Vec<Result<Vec<f64>>> = par::map_indices(t_grid.len(), |j| {
        let rmax = cmax * t_grid[j].powf(beta);
        let field = geodesic_distance_within(slices[j].g, y, rmax)?;
        Ok(c_grid
            .iter()
            .map(|c| ball_min(&slices[j].scalar, &field.dist, c * t_grid[j].powf(beta)))
            .collect())
    });
    let columns: Vec<Vec<f64>> = columns.into_iter().collect::<Result<_>>()?;
    let ball_inf: Vec<Vec<f64>> = (0..c_grid.len())
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect();
    let window = LIMINF_WINDOW.min(t_grid.len());
    let per_c_liminf: Vec<f64> = ball_inf
        .iter()
        .map(|row| row[row.len() - window..].iter().fold(f64::INFINITY, |m, v| m.min(*v)))
        .collect();
    let (argmin, estimate) = per_c_liminf
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(k, m), (i, v)| if *v < m { (i, *v) } else { (k, m) });
    let mut point = [0.0; 3];
    point[..y.len()].copy_from_slice(y);
    let distinct = per_c_liminf.iter().any(|v| *v != estimate);
    Ok(WeakBoundEstimate {
        point,
        beta,
        c_grid: c_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        ball_inf,
        per_c_liminf,
        estimate,
        endpoint_minimizer: distinct && (argmin == 0 || argmin == c_grid.len() - 1),
        kappa_test: None,
    })
}

/// The weak lower bound at `y`, using the flow snapshots at `t_grid`.
pub fn weak_lower_bound(
    traj: &FlowTrajectory,
    y: &[f64],
    beta: f64,
    c_grid: &[f64],
    t_grid: &[f64],
) -> Result<WeakBoundEstimate> {
    let ts = validate_grids(beta, c_grid, t_grid)?;
    let sl = slices(traj, &ts)?;
    estimate_at(&sl, y, beta, c_grid, &ts)
}

/// [`weak_lower_bound`] at several points, sharing curvature evaluations.
pub fn weak_lower_bounds(
    traj: &FlowTrajectory,
    points: &[[f64; 3]],
    beta: f64,
    c_grid: &[f64],
    t_grid: &[f64],
) -> Result<Vec<WeakBoundEstimate>> {
    let ts = validate_grids(beta, c_grid, t_grid)?;
    let sl = slices(traj, &ts)?;
    let dim = traj
        .states
        .first()
        .map(|s| s.g.grid().dim)
        .ok_or_else(|| Error::InsufficientSnapshots("empty trajectory".into()))?;
    points
        .iter()
        .map(|p| estimate_at(&sl, &p[..dim], beta, c_grid, &ts))
        .collect()
}

#[cfg(test)]
mod tests;
