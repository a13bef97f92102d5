use super::*;
use crate::grid::GridSpec;
use std::f64::consts::PI;

fn grid(dim: usize, n: usize) -> GridSpec {
    GridSpec::new(dim, n, 2.0 * PI).unwrap()
}

fn conformal(g: GridSpec, amp: f64) -> MetricField {
    MetricField::from_fn(g, move |x| {
        let e = (2.0 * amp * x[0].sin() * x[1].sin()).exp();
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(g.dim) {
            row[i] = e;
        }
        m
    })
    .unwrap()
}

fn wobbly(g: GridSpec, amp: f64) -> MetricField {
    MetricField::from_fn(g, move |x| {
        let s = amp * (x[0] + 2.0 * x[1]).sin();
        let c = amp * 0.7 * (x[0] - x[1]).cos();
        let z = if g.dim == 3 { amp * 0.5 * x[2].sin() } else { 0.0 };
        [[1.0 + s, c, z], [c, 1.0 - 0.5 * s, 0.3 * z], [z, 0.3 * z, 1.0 + c]]
    })
    .unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

#[test]
fn cfl_examples() {
    let flat = MetricField::flat(grid(2, 64));
    let dt = cfl_dt(&flat, 0.25);
    assert!((dt - 0.25 * (2.0 * PI / 64.0).powi(2) / 4.0).abs() < 1e-15);
    assert!((dt - 6.02e-4).abs() < 1e-6);
    let four = MetricField::constant(grid(2, 64), 4.0).unwrap();
    assert!((cfl_dt(&four, 0.25) / dt - 4.0).abs() < 1e-12);
    let aniso = MetricField::from_fn(grid(2, 64), |_| [[1.0, 0.0, 0.0], [0.0, 100.0, 0.0], [0.0; 3]]).unwrap();
    assert!((cfl_dt(&aniso, 0.25) - dt).abs() < 1e-15);
}

#[test]
fn ricci_step_examples() {
    let flat = MetricField::flat(grid(2, 16));
    let out = step_ricci(&flat, 0.1, Scheme::ExplicitRk2, 0.0).unwrap();
    assert_eq!(out.data(), flat.data());

    let g = conformal(grid(2, 32), 0.1);
    let dt = 1e-3;
    let euler = step_ricci(&g, dt, Scheme::ExplicitEuler, 0.0).unwrap();
    let (ric, _) = geometry::ricci_and_scalar(&g).unwrap();
    let expected: Vec<f64> = g.data().iter().zip(&ric).map(|(a, r)| a - 2.0 * dt * r).collect();
    assert_eq!(euler.data(), &expected[..]);

    // On a surface Ric = (R/2) g, so the metric shrinks where R > 0.
    let rk = step_ricci(&g, dt, Scheme::ExplicitRk2, 0.0).unwrap();
    let r = geometry::scalar_curvature(&g).unwrap();
    for p in 0..g.grid().num_points() {
        if r[p] > 1e-3 {
            assert!(rk.entry(p, 0, 0) < g.entry(p, 0, 0));
        }
    }
}

#[test]
fn deturck_linearisation_is_the_heat_equation() {
    let gr = grid(2, 64);
    let flat = MetricField::flat(gr);
    let eps = 1e-6;
    let hfun = |x: &[f64]| [x[0].sin() * x[1].cos(), 0.5 * (x[0] + x[1]).sin(), (2.0 * x[1]).cos()];
    let g = MetricField::from_fn(gr, |x| {
        let h = hfun(x);
        [[1.0 + eps * h[0], eps * h[1], 0.0], [eps * h[1], 1.0 + eps * h[2], 0.0], [0.0; 3]]
    })
    .unwrap();
    let (rhs, _) = geometry::ricci_deturck_rhs(&g, &flat).unwrap();
    let np = gr.num_points();
    for c in 0..3 {
        let comp: Vec<f64> = (0..np).map(|p| hfun(&gr.coords(p))[c]).collect();
        let lap = crate::fd::laplacian(&gr, &comp);
        let lin: Vec<f64> = rhs[c * np..(c + 1) * np].iter().map(|v| v / eps).collect();
        let e = max_diff(&lin, &lap);
        assert!(e < 1e-3, "component {c}: {e}");
    }
}

/// The two velocity fields for h must agree up to truncation error.
fn rhs_gap(g: &MetricField, bg: &MetricField) -> f64 {
    let (rdt, _) = geometry::ricci_deturck_rhs(g, bg).unwrap();
    let (ric_bg, _) = if bg.is_constant() {
        (vec![0.0; rdt.len()], vec![])
    } else {
        geometry::ricci_and_scalar(bg).unwrap()
    };
    let via_g: Vec<f64> = rdt.iter().zip(&ric_bg).map(|(a, r)| a + 2.0 * r).collect();
    let h = g.perturbation(bg).unwrap().to_packed_sym();
    let pert = geometry::perturbation_rhs(&h, bg).unwrap();
    max_diff(&via_g, &pert) / par::max_abs(&via_g)
}

#[test]
fn perturbation_velocity_matches_deturck_velocity() {
    for dim in [2, 3] {
        let n = if dim == 2 { 32 } else { 16 };
        let coarse = rhs_gap(&wobbly(grid(dim, n), 0.1), &MetricField::flat(grid(dim, n)));
        let fine = rhs_gap(&wobbly(grid(dim, 2 * n), 0.1), &MetricField::flat(grid(dim, 2 * n)));
        assert!(fine < 1e-2 && coarse / fine > 10.0, "flat bg, n={dim}: {coarse} {fine}");

        let curved = |n| {
            let gr = grid(dim, n);
            let bg = conformal(gr, 0.15);
            let g = MetricField::from_fn(gr, |x| {
                let e = (0.3 * x[0].sin() * x[1].sin()).exp();
                let s = 0.08 * (x[0] + 2.0 * x[1]).sin();
                let c = 0.05 * (x[0] - x[1]).cos();
                let z = if dim == 3 { 0.04 * x[2].sin() } else { 0.0 };
                [[e + s, c, z], [c, e - 0.5 * s, 0.3 * z], [z, 0.3 * z, e + c]]
            })
            .unwrap();
            rhs_gap(&g, &bg)
        };
        let (coarse, fine) = (curved(n), curved(2 * n));
        assert!(fine < 1e-2 && coarse / fine > 10.0, "curved bg, n={dim}: {coarse} {fine}");
    }
}

#[test]
fn matched_background_follows_ricci_flow() {
    let g = conformal(grid(2, 32), 0.1);
    let mut state = FlowState::new(0.0, g.clone(), g).unwrap();
    let dt = cfl_dt(&state.g, 0.25);
    for _ in 0..50 {
        state = step_rdt(&state, dt, Scheme::ExplicitRk2).unwrap();
    }
    assert!(state.g.max_abs_diff(&state.bg).unwrap() <= 1e-10);

    let flat = MetricField::flat(grid(3, 8));
    let s = FlowState::new(0.0, flat.clone(), flat.clone()).unwrap();
    let next = step_rdt(&s, 0.01, Scheme::ExplicitRk2).unwrap();
    assert_eq!(next.g.data(), flat.data());
}

#[test]
fn zero_perturbation_stays_zero() {
    let flat = MetricField::flat(grid(2, 16));
    let s = FlowState::new(0.0, flat.clone(), flat).unwrap();
    let next = step_perturbation(&s, 1e-3, Scheme::ExplicitRk2).unwrap();
    assert_eq!(next.h().max_abs(), 0.0);
}

#[test]
fn lowest_mode_decays_like_heat() {
    let gr = grid(2, 32);
    let eps = 1e-3;
    let g = MetricField::from_fn(gr, |x| {
        let v = 1.0 + eps * x[0].sin();
        [[v, 0.0, 0.0], [0.0, v, 0.0], [0.0; 3]]
    })
    .unwrap();
    let mut cfg = StepperConfig::new(0.1);
    cfg.snapshot_times = vec![0.05];
    let traj = run_flow(g, MetricField::flat(gr), Solver::Perturbation, &cfg).unwrap();
    let p = gr.flat_index(&[8, 0]);
    for s in &traj.states[1..] {
        let amp = s.h().get(p, &[0, 0]) / eps;
        assert!((amp / (-s.t).exp() - 1.0).abs() < 0.05, "t={} amp={amp}", s.t);
    }
}

#[test]
fn flat_run_is_stationary_and_monitored() {
    let gr = grid(2, 16);
    let mut cfg = StepperConfig::new(0.05);
    cfg.snapshot_times = vec![0.01, 0.02];
    let traj = run_flow(MetricField::flat(gr), MetricField::flat(gr), Solver::RicciDeTurck, &cfg).unwrap();
    assert_eq!(traj.times(), vec![0.0, 0.01, 0.02, 0.05]);
    assert!(traj.states.iter().all(|s| s.g.data() == MetricField::flat(gr).data()));
    assert!(traj.min_scalar_series().iter().all(|(_, r)| *r == 0.0));
    assert_eq!(traj.series.len(), traj.dt_history.len() + 1);
    let sum: f64 = traj.dt_history.iter().sum();
    assert!((sum - 0.05).abs() < 1e-12);
}

#[test]
fn runs_are_deterministic() {
    let gr = grid(2, 16);
    let cfg = StepperConfig::new(0.02);
    let a = run_flow(wobbly(gr, 0.05), MetricField::flat(gr), Solver::RicciDeTurck, &cfg).unwrap();
    let b = run_flow(wobbly(gr, 0.05), MetricField::flat(gr), Solver::RicciDeTurck, &cfg).unwrap();
    assert_eq!(a.states.last().unwrap().g.data(), b.states.last().unwrap().g.data());
    assert_eq!(a.series, b.series);
}

#[test]
fn degeneration_carries_time_and_point() {
    let gr = grid(2, 16);
    let s = FlowState::new(0.0, wobbly(gr, 0.05), MetricField::flat(gr)).unwrap();
    let err = step_rdt(&s, 50.0, Scheme::ExplicitEuler).unwrap_err();
    assert!(matches!(err, Error::FlowDegeneration { time, .. } if time == 50.0), "{err:?}");
}

#[test]
fn invalid_config_is_rejected() {
    let mut cfg = StepperConfig::new(0.1);
    cfg.cfl_safety = 1.5;
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    let mut cfg = StepperConfig::new(0.1);
    cfg.snapshot_times = vec![0.2];
    assert!(cfg.validate().is_err());
}

#[test]
fn scalar_evolution_on_background_flow() {
    let flat = MetricField::flat(grid(2, 16));
    let mut cfg = StepperConfig::new(0.02);
    cfg.snapshot_times = vec![0.01];
    let traj = run_flow(flat.clone(), flat, Solver::RicciDeTurck, &cfg).unwrap();
    assert_eq!(scalar_evolution_residual(&traj, 1).unwrap().max_abs, 0.0);
    assert!(scalar_evolution_residual(&traj, 0).is_err());

    let residual = |n: usize, stride: f64| {
        let g = conformal(grid(2, n), 0.1);
        let mut cfg = StepperConfig::new(0.02 + stride);
        cfg.snapshot_times = vec![0.02 - stride, 0.02];
        let traj = run_flow(g.clone(), g, Solver::RicciDeTurck, &cfg).unwrap();
        scalar_evolution_residual(&traj, 2).unwrap()
    };
    let coarse = residual(32, 4e-3);
    let fine = residual(64, 2e-3);
    assert!(fine.max_abs < coarse.max_abs / 2.0, "{} {}", coarse.max_abs, fine.max_abs);
    assert!(fine.min_inequality > -0.05 * (1.0 + fine.max_abs));
}
