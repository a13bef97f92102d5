use super::*;
use crate::flow::{run_flow, Solver, StepperConfig};
use std::f64::consts::PI;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(2, n, 2.0 * PI).unwrap()
}

fn wobbly(g: GridSpec) -> MetricField {
    MetricField::from_fn(g, |x| {
        let s = 0.08 * (x[0] + 2.0 * x[1]).sin();
        let c = 0.05 * (x[0] - x[1]).cos();
        [[1.0 + s, c, 0.0], [c, 1.0 - 0.5 * s, 0.0], [0.0; 3]]
    })
    .unwrap()
}

fn flow(g0: MetricField) -> FlowTrajectory {
    let bg = MetricField::flat(*g0.grid());
    let mut cfg = StepperConfig::new(0.1);
    cfg.cfl_safety = 0.5;
    cfg.snapshot_times = default_t_grid();
    run_flow(g0, bg, Solver::RicciDeTurck, &cfg).unwrap()
}

#[test]
fn neighbourhoods() {
    assert_eq!(neighbour_offsets(2).len(), 16);
    assert_eq!(neighbour_offsets(3).len(), 98);
}

#[test]
fn flat_distances() {
    let g = grid(64);
    let flat = MetricField::flat(g);
    let f = geodesic_distance(&flat, &[0.0, 0.0]).unwrap();
    assert_eq!(f.dist[f.source], 0.0);
    let axis = f.dist[g.flat_index(&[32, 0])];
    let diag = f.dist[g.flat_index(&[32, 32])];
    assert!((axis - PI).abs() < 0.03 * PI);
    assert!((diag - PI * 2f64.sqrt()).abs() < 0.03 * PI * 2f64.sqrt());
}

#[test]
fn constant_conformal_scaling_is_exact() {
    let g = grid(32);
    let c: f64 = 0.3;
    let base = geodesic_distance(&MetricField::flat(g), &[1.0, 2.0]).unwrap();
    let scaled = geodesic_distance(&MetricField::constant(g, (2.0 * c).exp()).unwrap(), &[1.0, 2.0]).unwrap();
    for (a, b) in base.dist.iter().zip(&scaled.dist) {
        assert!((b - c.exp() * a).abs() <= 1e-12 * b.max(1.0));
    }
}

#[test]
fn small_balls_match_the_metric() {
    let g = grid(64);
    let m = wobbly(g);
    let src = g.flat_index(&[10, 20]);
    let f = geodesic_distance(&m, &g.coords(src)[..2]).unwrap();
    let gm = m.at::<2>(src);
    let h = g.spacing();
    for a in -4i64..=4 {
        for b in -4i64..=4 {
            if a == 0 && b == 0 || a * a + b * b > 16 {
                continue;
            }
            let dx = [a as f64 * h, b as f64 * h];
            let exact = (gm[0][0] * dx[0] * dx[0] + 2.0 * gm[0][1] * dx[0] * dx[1] + gm[1][1] * dx[1] * dx[1]).sqrt();
            let q = g.shifted(src, &[a as isize, b as isize]);
            assert!((f.dist[q] / exact - 1.0).abs() < 0.05, "{a} {b} {} {exact}", f.dist[q]);
        }
    }
}

#[test]
fn triangle_inequality_and_symmetry() {
    let g = grid(32);
    let m = wobbly(g);
    let lmax = (0..g.num_points()).map(|p| crate::linalg::sym_eigenvalues::<2>(&m.at::<2>(p))[1]).fold(0.0, f64::max);
    let slack = 2.0 * g.spacing() * lmax.sqrt();
    let pts = [3usize, 200, 517, 900];
    let fields: Vec<_> = pts.iter().map(|&p| geodesic_distance(&m, &g.coords(p)[..2]).unwrap()).collect();
    for (i, &p) in pts.iter().enumerate() {
        for (j, &q) in pts.iter().enumerate() {
            assert!((fields[i].dist[q] - fields[j].dist[p]).abs() <= slack);
            for &r in &pts {
                assert!(fields[i].dist[r] <= fields[i].dist[q] + fields[j].dist[r] + slack);
            }
        }
    }
}

#[test]
fn bounded_search_agrees_inside_the_radius() {
    let g = grid(32);
    let m = wobbly(g);
    let full = geodesic_distance(&m, &[1.0, 1.0]).unwrap();
    let part = geodesic_distance_within(&m, &[1.0, 1.0], 1.2).unwrap();
    for (a, b) in full.dist.iter().zip(&part.dist) {
        if *a <= 1.2 {
            assert_eq!(a, b);
        } else {
            assert!(b.is_infinite());
        }
    }
}

#[test]
fn flat_trajectory_estimates_zero() {
    let traj = flow(MetricField::flat(grid(32)));
    let t = default_t_grid();
    assert_eq!(ball_inf_scalar(&traj, &[1.0, 1.0], 1.0, 0.4, t[3]).unwrap(), 0.0);
    let mut est = weak_lower_bound(&traj, &[1.0, 1.0], 0.4, &DEFAULT_C_GRID, &t).unwrap();
    assert_eq!(est.estimate, 0.0);
    assert!(est.test_kappa(0.0));
    assert!(!est.endpoint_minimizer);
    assert!(est.report().contains("-> pass"));
}

#[test]
fn grids_and_beta_are_validated() {
    let traj = flow(MetricField::flat(grid(16)));
    let t = default_t_grid();
    let y = [0.0, 0.0];
    assert!(matches!(weak_lower_bound(&traj, &y, 0.5, &DEFAULT_C_GRID, &t), Err(Error::Config(_))));
    assert!(matches!(weak_lower_bound(&traj, &y, 0.4, &[1.0, 2.0], &t), Err(Error::InsufficientGrids(_))));
    assert!(matches!(weak_lower_bound(&traj, &y, 0.4, &DEFAULT_C_GRID, &t[..4]), Err(Error::InsufficientGrids(_))));
    assert!(matches!(weak_lower_bound(&traj, &y, 0.4, &DEFAULT_C_GRID, &[0.1, 0.09, 0.08, 0.07, 0.06, 0.05]), Err(Error::InsufficientGrids(_))));
    assert!(matches!(ball_inf_scalar(&traj, &y, 1.0, 0.4, 0.0123), Err(Error::SnapshotMissing(_))));
}

#[test]
fn smooth_data_recovers_the_classical_value() {
    let g = grid(64);
    let spec = crate::initial_data::GeneratorSpec::new(crate::initial_data::Family::Conformal, 0.05);
    let g0 = crate::initial_data::generate(&g, &spec).unwrap().primary().clone();
    let r0 = geometry::scalar_curvature(&g0).unwrap();
    let traj = flow(g0);
    let t = default_t_grid();
    let points: Vec<[f64; 3]> = [5usize, 700, 2100, 3333].iter().map(|&p| g.coords(p)).collect();
    let ests = weak_lower_bounds(&traj, &points, DEFAULT_BETA, &DEFAULT_C_GRID, &t).unwrap();
    for (e, pt) in ests.iter().zip(&points) {
        let r = r0[g.snap(pt).0];
        assert!((e.estimate - r).abs() <= tolerance(r), "{} vs {r}", e.estimate);
        for j in 0..t.len() {
            for i in 1..e.c_grid.len() {
                assert!(e.ball_inf[i][j] <= e.ball_inf[i - 1][j]);
            }
        }
        assert!(e.per_c_liminf.iter().all(|v| e.estimate <= *v));
    }
    // A radius past the torus diameter sees the global minimum.
    let s = traj.state_at(t[0]).unwrap();
    let (lo, _) = par::min_max(&geometry::scalar_curvature(&s.g).unwrap());
    assert_eq!(ball_inf_scalar(&traj, &[0.0, 0.0], 100.0, 0.4, t[0]).unwrap(), lo);
}
