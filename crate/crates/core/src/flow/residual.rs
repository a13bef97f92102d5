use super::FlowTrajectory;
use crate::error::{Error, Result};
use crate::geometry;
use crate::par;

/// Residuals of the scalar curvature evolution along the background flow.
#[derive(Clone, Debug)]
pub struct ScalarResidual {
    pub time: f64,
    /// `∂_t R − ΔR − 2|Ric|²`
    pub equality: Vec<f64>,
    /// `∂_t R − ΔR − (2/n) R²`, nonnegative for an exact Ricci flow.
    pub inequality: Vec<f64>,
    pub max_abs: f64,
    pub min_inequality: f64,
}

/// Evaluates the residuals at snapshot `i` of the background trajectory,
/// differencing in time with snapshots `i − 1` and `i + 1`.
pub fn scalar_evolution_residual(traj: &FlowTrajectory, i: usize) -> Result<ScalarResidual> {
    if i == 0 || i + 1 >= traj.states.len() {
        return Err(Error::InsufficientSnapshots(format!(
            "snapshot {i} needs neighbours on both sides ({} snapshots)",
            traj.states.len()
        )));
    }
    let (a, b, c) = (&traj.states[i - 1], &traj.states[i], &traj.states[i + 1]);
    let (h1, h2) = (b.t - a.t, c.t - b.t);
    let ra = geometry::scalar_curvature(&a.bg)?;
    let (ric, rb) = geometry::ricci_and_scalar(&b.bg)?;
    let rc = geometry::scalar_curvature(&c.bg)?;
    let lap = geometry::laplace_beltrami(&b.bg, &rb)?;
    let ric2 = geometry::ricci_norm_squared(&b.bg, &ric);
    let n = b.bg.grid().dim as f64;
    let (wa, wb, wc) = (
        -h2 / (h1 * (h1 + h2)),
        (h2 - h1) / (h1 * h2),
        h1 / (h2 * (h1 + h2)),
    );
    let mut equality = Vec::with_capacity(rb.len());
    let mut inequality = Vec::with_capacity(rb.len());
    for p in 0..rb.len() {
        let dt = wa * ra[p] + wb * rb[p] + wc * rc[p];
        equality.push(dt - lap[p] - 2.0 * ric2[p]);
        inequality.push(dt - lap[p] - 2.0 / n * rb[p] * rb[p]);
    }
    let max_abs = par::max_abs(&equality);
    let min_inequality = par::min_max(&inequality).0;
    Ok(ScalarResidual {
        time: b.t,
        equality,
        inequality,
        max_abs,
        min_inequality,
    })
}
