//! generate → flow → evaluate through the public API only.

use std::f64::consts::TAU;

use riccilab::flow::{run_flow, Solver, StepperConfig};
use riccilab::geometry::scalar_curvature;
use riccilab::initial_data::{generate, Family, GeneratorSpec};
use riccilab::weak_bound::{default_t_grid, weak_lower_bounds};
use riccilab::{GridSpec, MetricField};

fn flow(family: Family, amplitude: f64, solver: Solver, t_final: f64) -> riccilab::flow::FlowTrajectory {
    let grid = GridSpec::new(2, 32, TAU).unwrap();
    let g0 = generate(&grid, &GeneratorSpec::new(family, amplitude)).unwrap().primary().clone();
    let mut cfg = StepperConfig::new(t_final);
    cfg.snapshot_times = default_t_grid().into_iter().filter(|t| *t <= t_final).collect();
    run_flow(g0, MetricField::flat(grid), solver, &cfg).unwrap()
}

#[test]
fn both_solvers_track_the_same_flow() {
    let a = flow(Family::Conformal, 0.05, Solver::RicciDeTurck, 0.02);
    let b = flow(Family::Conformal, 0.05, Solver::Perturbation, 0.02);
    let (ga, gb) = (&a.states.last().unwrap().g, &b.states.last().unwrap().g);
    // Different discretisations of one flow: they agree to truncation
    // error (about 1e-7 here), far below the 0.05 amplitude.
    let gap = ga.max_abs_diff(gb).unwrap();
    assert!(gap < 1e-6, "gap {gap:e}");
}

#[test]
fn kink_flow_respects_the_universal_bound() {
    let traj = flow(Family::LipschitzKink, 0.08, Solver::RicciDeTurck, 0.05);
    for row in traj.series.iter().filter(|r| r.t >= 1e-4) {
        assert!(row.min_scalar >= -1.0 / row.t, "t = {}: min R = {}", row.t, row.min_scalar);
    }
    // Smoothing: the monitored second derivatives fall once the kink is resolved.
    let last = traj.series.last().unwrap();
    assert!(last.hess_h < traj.series[1].hess_h);
}

#[test]
fn smooth_estimates_follow_the_initial_curvature() {
    let traj = flow(Family::Conformal, 0.05, Solver::RicciDeTurck, 0.1);
    let g0 = &traj.states[0].g;
    let r0 = scalar_curvature(g0).unwrap();
    let grid = *g0.grid();
    let points = [[1.0, 2.0, 0.0], [4.0, 0.5, 0.0]];
    let est = weak_lower_bounds(&traj, &points, 0.4, &[0.5, 1.0, 2.0, 4.0], &default_t_grid()).unwrap();
    for (p, e) in points.iter().zip(&est) {
        let r = r0[grid.snap(&p[..2]).0];
        assert!((e.estimate - r).abs() < 0.05 * (1.0 + r.abs()), "{p:?}: {} vs {r}", e.estimate);
    }
}
