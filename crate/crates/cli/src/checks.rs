//! Named invariant checks evaluated on a finished run.

use std::fmt;
use std::str::FromStr;

use riccilab::flow::{FlowTrajectory, SeriesRow};
use riccilab::initial_data::{Family, GeneratorSpec};
use riccilab::weak_bound::WeakBoundEstimate;
use riccilab::{geometry, par};
use serde::Serialize;

use crate::config::{ExperimentConfig, T_MIN};
use crate::error::{CliError, CliResult};

/// Relative slack of the curvature bounds: `0.05·(1 + |bound|)`.
pub const REL_TOL: f64 = 0.05;

/// `sup √t‖∇h‖` and `sup t‖∇²h‖` may not exceed this multiple of `‖h₀‖_∞`.
pub const DECAY_CEILING: f64 = 1.0;

/// Time by which flat recovery is judged, and its curvature threshold.
pub const RECOVERY_TIME: f64 = 0.05;
pub const RECOVERY_SCALAR: f64 = 0.05;

/// A monotone sequence may exceed its running minimum by this fraction.
pub const MONOTONE_SLACK: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    UniversalBound,
    Preservation,
    DerivativeDecay,
    WeakBound,
    FlatRecovery,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::UniversalBound,
        Check::Preservation,
        Check::DerivativeDecay,
        Check::WeakBound,
        Check::FlatRecovery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::UniversalBound => "universal-bound",
            Check::Preservation => "preservation",
            Check::DerivativeDecay => "derivative-decay",
            Check::WeakBound => "weak-bound",
            Check::FlatRecovery => "flat-recovery",
        }
    }

    /// Whether the check can be run for this config at all.
    pub fn validate(self, cfg: &ExperimentConfig, gen: &GeneratorSpec, points: &[[f64; 3]]) -> CliResult<()> {
        let fail = |why: &str| Err(CliError::Config(format!("check `{}` {why}", self.name())));
        match self {
            Check::Preservation if !smooth_start(gen, cfg.generator.member.as_deref()) => {
                fail("needs smooth initial data")
            }
            Check::WeakBound if points.is_empty() || cfg.evaluator.kappa.is_none() => {
                fail("needs evaluator points and kappa")
            }
            Check::FlatRecovery if cfg.stepper.t_final < RECOVERY_TIME => {
                fail(&format!("needs T ≥ {RECOVERY_TIME}"))
            }
            Check::DerivativeDecay if cfg.stepper.t_final <= T_MIN => fail(&format!("needs T > {T_MIN}")),
            _ => Ok(()),
        }
    }
}

/// The flowed metric is smooth: a smooth family, or a mollified element.
pub fn smooth_start(gen: &GeneratorSpec, member: Option<&str>) -> bool {
    match gen.family {
        Family::MollifiedSequence => member != Some("base"),
        f => f.is_smooth(),
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown check `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(check: Check, pass: bool, detail: String) -> Self {
        Self {
            name: check.name().into(),
            pass,
            detail,
        }
    }
}

/// Worst `(row, margin)` of `min R − (bound − tol)` over the selected rows.
fn worst<'a>(
    rows: impl Iterator<Item = &'a SeriesRow>,
    bound: impl Fn(f64) -> (f64, f64),
) -> Option<(&'a SeriesRow, f64)> {
    rows.map(|r| {
        let (b, tol) = bound(r.t);
        (r, r.min_scalar - (b - tol))
    })
    .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// `min R(g_t) ≥ −n/(2t) − 0.05(1 + n/(2t))` for every monitored `t ≥ 1e-4`.
pub fn universal_bound(series: &[SeriesRow], dim: usize) -> CheckOutcome {
    let n = dim as f64;
    let w = worst(series.iter().filter(|r| r.t >= T_MIN), |t| {
        let b = -n / (2.0 * t);
        (b, REL_TOL * (1.0 + b.abs()))
    });
    let (pass, detail) = match w {
        Some((r, m)) => (
            m >= 0.0,
            format!("tightest at t = {:.4e}: min R = {:.5}, margin {:.4e}", r.t, r.min_scalar, m),
        ),
        None => (true, format!("no monitored times at or after {T_MIN}")),
    };
    CheckOutcome::new(Check::UniversalBound, pass, detail)
}

/// The comparison curve `κ₀ / (1 − (2κ₀/n) t)`.
pub fn preservation_curve(kappa0: f64, dim: usize, t: f64) -> f64 {
    kappa0 / (1.0 - 2.0 * kappa0 / dim as f64 * t)
}

/// Horizon `min(T, n/(4|κ₀|))` on which the curve is checked.
pub fn preservation_horizon(kappa0: f64, dim: usize, t_final: f64) -> f64 {
    if kappa0 == 0.0 {
        t_final
    } else {
        t_final.min(dim as f64 / (4.0 * kappa0.abs()))
    }
}

/// `min R(g_t) ≥ κ₀/(1 − (2κ₀/n)t) − 0.05(1 + |κ₀|)` up to the horizon.
pub fn preservation(series: &[SeriesRow], dim: usize, kappa0: f64, t_final: f64) -> CheckOutcome {
    let horizon = preservation_horizon(kappa0, dim, t_final);
    let tol = REL_TOL * (1.0 + kappa0.abs());
    let rows = series.iter().filter(|r| r.t <= horizon * (1.0 + 1e-12));
    let w = worst(rows, |t| (preservation_curve(kappa0, dim, t), tol));
    let (pass, detail) = match w {
        Some((r, m)) => (
            m >= 0.0,
            format!(
                "kappa0 = {kappa0:.5}, horizon {horizon:.4}; tightest at t = {:.4e}: min R = {:.5} vs curve {:.5}, margin {m:.4e}",
                r.t,
                r.min_scalar,
                preservation_curve(kappa0, dim, r.t)
            ),
        ),
        None => (true, "no monitored times".into()),
    };
    CheckOutcome::new(Check::Preservation, pass, detail)
}

/// `(sup √t‖∇h‖, sup t‖∇²h‖)` over monitored `t ∈ [lo, hi]`.
pub fn decay_constants(series: &[SeriesRow], lo: f64, hi: f64) -> (f64, f64) {
    series
        .iter()
        .filter(|r| r.t >= lo && r.t <= hi * (1.0 + 1e-12))
        .fold((0.0, 0.0), |(a, b), r| {
            (f64::max(a, r.t.sqrt() * r.grad_h), f64::max(b, r.t * r.hess_h))
        })
}

pub fn derivative_decay(series: &[SeriesRow], h0_inf: f64, t_final: f64) -> CheckOutcome {
    let (c1, c2) = decay_constants(series, T_MIN, t_final);
    let ceiling = DECAY_CEILING * h0_inf;
    let pass = c1.is_finite() && c2.is_finite() && c1 <= ceiling && c2 <= ceiling;
    CheckOutcome::new(
        Check::DerivativeDecay,
        pass,
        format!("sup sqrt(t)|dh| = {c1:.5}, sup t|ddh| = {c2:.5}, ceiling {ceiling:.5}"),
    )
}

pub fn weak_bound(estimates: &mut [WeakBoundEstimate], kappa: f64) -> CheckOutcome {
    let failed: Vec<usize> = estimates
        .iter_mut()
        .enumerate()
        .filter_map(|(i, e)| (!e.test_kappa(kappa)).then_some(i))
        .collect();
    let lowest = estimates.iter().map(|e| e.estimate).fold(f64::INFINITY, f64::min);
    let detail = if failed.is_empty() {
        format!("all {} points ≥ {kappa} − tol; lowest estimate {lowest:.5}", estimates.len())
    } else {
        format!("points {failed:?} below {kappa} − tol; lowest estimate {lowest:.5}")
    };
    CheckOutcome::new(Check::WeakBound, failed.is_empty(), detail)
}

/// Distance of every snapshot to its flat representative, the constant
/// metric of its spatial averages. A flat torus need not flow back to δ
/// itself, only to some constant metric.
pub fn flat_distances(traj: &FlowTrajectory) -> riccilab::Result<Vec<(f64, f64)>> {
    traj.states
        .iter()
        .map(|s| Ok((s.t, s.g.relative_distance(&s.g.mean())?)))
        .collect()
}

/// Times at which `(t, d)` exceeds its running minimum by more than
/// [`MONOTONE_SLACK`].
pub fn slack_rises(d: &[(f64, f64)]) -> Vec<f64> {
    let mut low = f64::INFINITY;
    let mut rises = Vec::new();
    for &(t, v) in d {
        if v > low * (1.0 + MONOTONE_SLACK) {
            rises.push(t);
        }
        low = low.min(v);
    }
    rises
}

/// `max|R| ≤ 0.05` by `t = 0.05`, and the distance to the flat
/// representative non-increasing.
pub fn flat_recovery(traj: &FlowTrajectory) -> riccilab::Result<CheckOutcome> {
    let state = traj
        .states
        .iter()
        .find(|s| s.t >= RECOVERY_TIME * (1.0 - 1e-12))
        .ok_or(riccilab::Error::SnapshotMissing(RECOVERY_TIME))?;
    let (lo, hi) = par::min_max(&geometry::scalar_curvature(&state.g)?);
    let max_r = lo.abs().max(hi.abs());
    let d = flat_distances(traj)?;
    let rises = slack_rises(&d);
    let pass = max_r <= RECOVERY_SCALAR && rises.is_empty();
    let mut detail = format!(
        "max|R| = {max_r:.4e} at t = {:.4e}; |g - mean(g)| from {:.4e} to {:.4e}",
        state.t,
        d[0].1,
        d[d.len() - 1].1
    );
    if !rises.is_empty() {
        detail.push_str(&format!("; increases at t = {rises:?}"));
    }
    Ok(CheckOutcome::new(Check::FlatRecovery, pass, detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, min_scalar: f64) -> SeriesRow {
        SeriesRow {
            t,
            dt: 1e-3,
            min_scalar,
            max_scalar: 0.0,
            grad_h: 0.0,
            hess_h: 0.0,
        }
    }

    #[test]
    fn curve_arithmetic() {
        // κ₀ = −1, n = 3, t = 0.3: −1/1.2.
        assert!((preservation_curve(-1.0, 3, 0.3) + 1.0 / 1.2).abs() < 1e-15);
        assert_eq!(preservation_horizon(-1.0, 3, 1.0), 0.75);
        assert_eq!(preservation_horizon(0.0, 2, 0.25), 0.25);
    }

    #[test]
    fn preservation_is_one_sided() {
        let above = [row(0.0, -1.0), row(0.3, -0.8)];
        assert!(preservation(&above, 3, -1.0, 0.5).pass);
        let below = [row(0.0, -1.0), row(0.3, -0.8333 - 0.11)];
        assert!(!preservation(&below, 3, -1.0, 0.5).pass);
        // Rows past the horizon are ignored.
        let late = [row(0.0, -1.0), row(0.9, -5.0)];
        assert!(preservation(&late, 3, -1.0, 1.0).pass);
    }

    #[test]
    fn universal_bound_ignores_early_rows() {
        let rows = [row(0.0, -1e9), row(5e-5, -1e9), row(0.01, -100.0)];
        assert!(universal_bound(&rows, 2).pass);
        assert!(!universal_bound(&[row(0.01, -110.0)], 2).pass);
    }

    #[test]
    fn slack_tolerates_small_rises() {
        let d = [(0.0, 1.0), (0.1, 1.04), (0.2, 0.5), (0.3, 0.52), (0.4, 0.6)];
        assert_eq!(slack_rises(&d), vec![0.4]);
    }

    #[test]
    fn names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert_eq!("nope".parse::<Check>().unwrap_err().exit_code(), 2);
    }
}
