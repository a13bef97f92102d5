//! Integral-equation solver for the perturbation equation on a flat torus.
//!
//! With a flat background the perturbation equation reads
//! `∂_t h = Δh + Q0(h) + ∂_p F^p(h)`, so
//! `h_t = K_t * h_0 + ∫_0^t K_{t−s} * Q0_s + ∂_p K_{t−s} * F^p_s ds`
//! with `K` the periodic heat kernel. The spatial convolutions are midpoint
//! sums on the grid, evaluated with FFTs; the time integral uses the
//! substitution `s = t − u²` and the trapezoid rule in `u`. The nonlinear
//! terms are inserted by Picard iteration.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::{MetricField, TensorField};
use crate::geometry;
use crate::grid::GridSpec;
use crate::spectral::fft_nd;

/// Largest admissible `‖h_0‖_∞`.
pub const MAX_AMPLITUDE: f64 = 0.1;

/// Truncation of the lattice image sum must stay below this.
pub const TAIL_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatKernelSpec {
    pub grid: GridSpec,
    /// Images `k` with `|k_i| ≤ image_radius` are summed.
    pub image_radius: usize,
    pub t_floor: f64,
}

impl HeatKernelSpec {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            image_radius: 1,
            t_floor: 1e-6,
        }
    }

    /// `exp(−(K L)² / 4t)`, the size of the first omitted image.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let r = self.image_radius as f64 * self.grid.period;
        (-r * r / (4.0 * t)).exp()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= self.t_floor) {
            return Err(Error::BelowTimeFloor {
                t,
                floor: self.t_floor,
            });
        }
        if self.tail_bound(t) >= TAIL_TOLERANCE {
            return Err(Error::Config(format!(
                "image radius {} too small for t = {t}",
                self.image_radius
            )));
        }
        Ok(())
    }

    fn images(&self, dim: usize) -> Vec<[f64; 3]> {
        let k = self.image_radius as i64;
        let l = self.grid.period;
        let mut out = Vec::new();
        let range = || -k..=k;
        for a in range() {
            for b in range() {
                for c in range() {
                    let v = [a as f64 * l, b as f64 * l, c as f64 * l];
                    if (dim < 2 && b != 0) || (dim < 3 && c != 0) {
                        continue;
                    }
                    out.push(v);
                }
            }
        }
        out
    }
}

/// `Σ_k (4πt)^{−n/2} exp(−|x − y + kL|² / 4t)` over the truncated lattice,
/// with `n = x.len()`.
pub fn torus_heat_kernel(x: &[f64], y: &[f64], t: f64, spec: &HeatKernelSpec) -> Result<f64> {
    spec.check_time(t)?;
    let n = x.len();
    if y.len() != n || n == 0 || n > 3 {
        return Err(Error::Validation("points must share a dimension of 1 to 3".into()));
    }
    let norm = (4.0 * std::f64::consts::PI * t).powf(-0.5 * n as f64);
    let mut s = 0.0;
    for k in spec.images(n) {
        let d2: f64 = (0..n).map(|a| (x[a] - y[a] + k[a]).powi(2)).sum();
        s += (-d2 / (4.0 * t)).exp();
    }
    Ok(norm * s)
}

/// FFTs of the discrete heat kernel and its gradient at time `t`.
///
/// The kernel is normalised to unit discrete mass and each gradient
/// component to unit first moment, so that for `t ≪ h²` the convolutions
/// tend to the identity and to the centred difference instead of to zero.
/// Exponents are shifted before exponentiation to avoid underflow.
struct KernelHat {
    k: Vec<Complex<f64>>,
    grad: Vec<Vec<Complex<f64>>>,
}

fn kernel_hat(spec: &HeatKernelSpec, t: f64) -> KernelHat {
    let grid = &spec.grid;
    let n = grid.dim;
    let np = grid.num_points();
    let h = grid.spacing();
    let images = spec.images(n);
    let mut k = vec![Complex::new(0.0, 0.0); np];
    let mut grad = vec![vec![Complex::new(0.0, 0.0); np]; n];
    let (mut mass, mut moment) = (0.0, vec![0.0; n]);
    let npa = grid.points_per_axis as i64;
    for p in 0..np {
        let idx = grid.multi_index(p);
        let mut z = [0.0; 3];
        for a in 0..n {
            let i = idx[a] as i64;
            z[a] = if i <= npa / 2 { i } else { i - npa } as f64 * h;
        }
        let (mut kv, mut gv) = (0.0, [0.0; 3]);
        for im in &images {
            let w: Vec<f64> = (0..n).map(|a| z[a] + im[a]).collect();
            let d2: f64 = w.iter().map(|v| v * v).sum();
            kv += (-d2 / (4.0 * t)).exp();
            if d2 == 0.0 {
                continue;
            }
            let e = (-(d2 - h * h) / (4.0 * t)).exp();
            for a in 0..n {
                gv[a] -= w[a] * e;
            }
        }
        mass += kv;
        k[p].re = kv;
        for a in 0..n {
            moment[a] -= z[a] * gv[a];
            grad[a][p].re = gv[a];
        }
    }
    k.iter_mut().for_each(|v| v.re /= mass);
    fft_nd(grid, &mut k, false);
    for (a, g) in grad.iter_mut().enumerate() {
        g.iter_mut().for_each(|v| v.re /= moment[a]);
        fft_nd(grid, g, false);
    }
    KernelHat { k, grad }
}

/// Picard iterates of the integral equation, on a time grid that contains
/// the requested times.
#[derive(Clone, Debug)]
pub struct DuhamelSolution {
    pub times: Vec<f64>,
    pub h_series: Vec<TensorField>,
    pub iterations_used: usize,
    /// `max_t ‖h^{(k)}_t − h^{(k−1)}_t‖_∞` for `k = 1, 2, …`.
    pub fixedpoint_residual_series: Vec<f64>,
}

impl DuhamelSolution {
    pub fn at(&self, t: f64) -> Result<&TensorField> {
        self.times
            .iter()
            .position(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|i| &self.h_series[i])
            .ok_or(Error::SnapshotMissing(t))
    }
}

/// Quadrature resolution of [`duhamel_iterate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    /// Trapezoid intervals in `u = √(t − s)`.
    pub u_intervals: usize,
    /// Nodes of the internal time grid, graded as `t_max (m/M)²`.
    pub time_nodes: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            u_intervals: 16,
            time_nodes: 24,
        }
    }
}

pub fn duhamel_iterate(
    h0: &TensorField,
    times: &[f64],
    spec: &HeatKernelSpec,
    max_iter: usize,
) -> Result<DuhamelSolution> {
    duhamel_iterate_with(h0, times, spec, max_iter, Quadrature::default())
}

pub fn duhamel_iterate_with(
    h0: &TensorField,
    times: &[f64],
    spec: &HeatKernelSpec,
    max_iter: usize,
    quad: Quadrature,
) -> Result<DuhamelSolution> {
    let grid = spec.grid;
    h0.grid().ensure_same(&grid, "initial perturbation")?;
    if h0.valence() != (2, 0) || !h0.is_symmetric(1e-12) {
        return Err(Error::Validation("h0 must be a symmetric (2,0) tensor".into()));
    }
    if h0.max_abs() > MAX_AMPLITUDE {
        return Err(Error::Validation(format!(
            "‖h0‖ = {} exceeds the small-data bound {MAX_AMPLITUDE}",
            h0.max_abs()
        )));
    }
    if times.is_empty() || max_iter == 0 || quad.u_intervals == 0 || quad.time_nodes == 0 {
        return Err(Error::Config("need times, max_iter ≥ 1 and a non-empty quadrature".into()));
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    for &t in times {
        spec.check_time(t)?;
    }
    // Internal grid: 0, graded nodes and the requested times.
    let mut nodes: Vec<f64> = (1..=quad.time_nodes)
        .map(|m| t_max * (m as f64 / quad.time_nodes as f64).powi(2))
        .chain(times.iter().copied())
        .collect();
    nodes.push(0.0);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t_max);
    for &t in &nodes[1..] {
        spec.check_time(t)?;
    }

    let bg = MetricField::flat(grid);
    let np = grid.num_points();
    let nc = grid.sym_components();
    let n = grid.dim;
    let h0p = h0.to_packed_sym();
    let h0_hat = to_hat(&grid, &h0p, nc);

    // Kernels at every node time and every u-node, cached by node.
    let ju = quad.u_intervals;
    let homogeneous: Vec<Vec<Complex<f64>>> = nodes
        .iter()
        .map(|&t| {
            if t == 0.0 {
                h0_hat.clone()
            } else {
                let kh = kernel_hat(spec, t);
                multiply(&h0_hat, &kh.k, nc, np)
            }
        })
        .collect();
    let mut u_kernels: Vec<Vec<(f64, f64, KernelHat)>> = Vec::with_capacity(nodes.len());
    for &t in &nodes {
        let mut row = Vec::new();
        if t > 0.0 {
            let du = t.sqrt() / ju as f64;
            for j in 1..=ju {
                let u = j as f64 * du;
                let w = if j == ju { 0.5 } else { 1.0 } * du * 2.0 * u;
                let tau = (u * u).max(spec.t_floor);
                row.push((w, t - u * u, kernel_hat(spec, tau)));
            }
        }
        u_kernels.push(row);
    }

    let mut current: Vec<Vec<f64>> = homogeneous.iter().map(|c| from_hat(&grid, c, nc)).collect();
    let mut residuals = Vec::new();
    let mut iterations = 0;
    let mut rises = 0;
    for _ in 0..max_iter {
        iterations += 1;
        // Sources at every node from the current iterate.
        let mut q_hat = Vec::with_capacity(nodes.len());
        let mut f_hat = Vec::with_capacity(nodes.len());
        for h in &current {
            let parts = geometry::perturbation_parts(h, &bg)?;
            q_hat.push(to_hat(&grid, &parts.q0, nc));
            f_hat.push(to_hat(&grid, &parts.flux, n * nc));
        }
        let mut next = Vec::with_capacity(nodes.len());
        for (m, row) in u_kernels.iter().enumerate() {
            let mut acc = homogeneous[m].clone();
            for (w, s, kh) in row {
                let (lo, hi, theta) = bracket(&nodes, *s);
                for c in 0..nc {
                    for q in 0..np {
                        let mut src = kh.k[q] * lerp(q_hat[lo][c * np + q], q_hat[hi][c * np + q], theta);
                        for p in 0..n {
                            let i = (p * nc + c) * np + q;
                            src += kh.grad[p][q] * lerp(f_hat[lo][i], f_hat[hi][i], theta);
                        }
                        acc[c * np + q] += *w * src;
                    }
                }
            }
            next.push(from_hat(&grid, &acc, nc));
        }
        let r = next
            .iter()
            .zip(&current)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        for (m, h) in next.iter().enumerate() {
            if nodes[m] > 0.0 {
                let full: Vec<f64> = bg.data().iter().zip(h).map(|(a, b)| a + b).collect();
                MetricField::new(grid, full).map_err(|e| match e {
                    Error::InvalidMetric { point, .. } => Error::DegeneratePerturbation { point },
                    other => other,
                })?;
            }
        }
        current = next;
        if let Some(&prev) = residuals.last() {
            rises = if r > prev { rises + 1 } else { 0 };
        }
        residuals.push(r);
        if rises >= 2 {
            return Err(Error::Divergence {
                iteration: iterations,
                residuals,
            });
        }
        let scale = current
            .iter()
            .flat_map(|h| h.iter())
            .fold(0.0_f64, |a, v| a.max(v.abs()));
        if r <= 1e-13 * scale.max(1e-300) || r == 0.0 {
            break;
        }
    }

    let mut out_times = Vec::new();
    let mut h_series = Vec::new();
    for &t in times {
        let m = nodes
            .iter()
            .position(|s| (s - t).abs() <= 1e-14 * t_max)
            .expect("requested times are nodes");
        out_times.push(t);
        h_series.push(TensorField::from_packed_sym(grid, &current[m]));
    }
    Ok(DuhamelSolution {
        times: out_times,
        h_series,
        iterations_used: iterations,
        fixedpoint_residual_series: residuals,
    })
}

/// Indices and weight for linear interpolation at `s` in sorted `nodes`.
fn bracket(nodes: &[f64], s: f64) -> (usize, usize, f64) {
    let hi = nodes.partition_point(|v| *v < s).clamp(1, nodes.len() - 1);
    let lo = hi - 1;
    let theta = ((s - nodes[lo]) / (nodes[hi] - nodes[lo])).clamp(0.0, 1.0);
    (lo, hi, theta)
}

#[inline]
fn lerp(a: Complex<f64>, b: Complex<f64>, theta: f64) -> Complex<f64> {
    a + (b - a) * theta
}

fn to_hat(grid: &GridSpec, data: &[f64], ncomp: usize) -> Vec<Complex<f64>> {
    let np = grid.num_points();
    let mut out: Vec<Complex<f64>> = data.iter().map(|v| Complex::new(*v, 0.0)).collect();
    for c in 0..ncomp {
        fft_nd(grid, &mut out[c * np..(c + 1) * np], false);
    }
    out
}

fn from_hat(grid: &GridSpec, data: &[Complex<f64>], ncomp: usize) -> Vec<f64> {
    let np = grid.num_points();
    let mut tmp = data.to_vec();
    for c in 0..ncomp {
        fft_nd(grid, &mut tmp[c * np..(c + 1) * np], true);
    }
    tmp.iter().map(|v| v.re / np as f64).collect()
}

fn multiply(a: &[Complex<f64>], k: &[Complex<f64>], ncomp: usize, np: usize) -> Vec<Complex<f64>> {
    let mut out = a.to_vec();
    for c in 0..ncomp {
        for q in 0..np {
            out[c * np + q] *= k[q];
        }
    }
    out
}

#[cfg(test)]
mod tests;
