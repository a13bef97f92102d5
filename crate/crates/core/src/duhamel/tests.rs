use super::*;
use crate::flow::{self, Scheme};
use std::f64::consts::PI;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(2, n, 2.0 * PI).unwrap()
}

fn diagonal_h(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> TensorField {
    let np = grid.num_points();
    let mut packed = vec![0.0; 3 * np];
    for p in 0..np {
        let v = f(&grid.coords(p)[..2]);
        packed[p] = v;
        packed[2 * np + p] = v;
    }
    TensorField::from_packed_sym(grid, &packed)
}

#[test]
fn kernel_has_unit_mass() {
    let g = grid(128);
    let spec = HeatKernelSpec::new(g);
    let h = g.spacing();
    let mut mass = 0.0;
    for p in 0..g.num_points() {
        let x = g.coords(p);
        mass += torus_heat_kernel(&x[..2], &[0.0, 0.0], 0.01, &spec).unwrap() * h * h;
    }
    assert!((mass - 1.0).abs() < 1e-10, "mass {mass}");
}

#[test]
fn kernel_is_symmetric_and_matches_single_image() {
    let spec = HeatKernelSpec::new(grid(16));
    let a = torus_heat_kernel(&[0.3, 1.0], &[2.0, -0.5], 0.05, &spec).unwrap();
    let b = torus_heat_kernel(&[2.0, -0.5], &[0.3, 1.0], 0.05, &spec).unwrap();
    assert_eq!(a, b);
    let v = torus_heat_kernel(&[0.4], &[0.4], 0.01, &spec).unwrap();
    let exact = 1.0 / (4.0 * PI * 0.01_f64).sqrt();
    assert!((v - exact).abs() < 1e-12 && (v - 2.8209).abs() < 1e-4);
}

#[test]
fn kernel_rejects_times_below_floor() {
    let spec = HeatKernelSpec::new(grid(16));
    let err = torus_heat_kernel(&[0.0, 0.0], &[0.0, 0.0], 1e-7, &spec).unwrap_err();
    assert!(matches!(err, Error::BelowTimeFloor { .. }));
}

#[test]
fn zero_data_stays_zero() {
    let g = grid(16);
    let h0 = TensorField::zeros(g, 2, 0);
    let sol = duhamel_iterate(&h0, &[0.01], &HeatKernelSpec::new(g), 12).unwrap();
    assert_eq!(sol.iterations_used, 1);
    assert_eq!(sol.at(0.01).unwrap().max_abs(), 0.0);
}

#[test]
fn linear_regime_follows_heat_decay() {
    let g = grid(32);
    let a = 1e-3;
    let h0 = diagonal_h(g, |x| a * x[0].sin());
    let times = [0.01, 0.02];
    let sol = duhamel_iterate(&h0, &times, &HeatKernelSpec::new(g), 1).unwrap();
    for &t in &times {
        let exact = diagonal_h(g, |x| a * (-t).exp() * x[0].sin());
        let err = sol.at(t).unwrap().max_abs_diff(&exact).unwrap();
        assert!(err < 0.01 * a, "t = {t}: error {err}");
    }
}

#[test]
fn small_data_iteration_contracts() {
    let g = grid(32);
    let h0 = diagonal_h(g, |x| 0.05 * (x[0].sin() * x[1].cos()));
    let sol = duhamel_iterate(&h0, &[0.02], &HeatKernelSpec::new(g), 12).unwrap();
    let r = &sol.fixedpoint_residual_series;
    assert!(r.len() >= 3, "residuals {r:?}");
    for w in r.windows(2).take(4) {
        if w[0] > 1e-12 {
            assert!(w[1] <= 0.9 * w[0], "residuals {r:?}");
        }
    }
    assert!(sol.iterations_used <= 12);
}

#[test]
fn agrees_with_time_stepping() {
    let g = grid(32);
    let h0 = diagonal_h(g, |x| 0.05 * (x[0].sin() * x[1].cos() + 0.5 * (x[0] + x[1]).cos()));
    let t = 0.01;
    let sol = duhamel_iterate(&h0, &[t], &HeatKernelSpec::new(g), 12).unwrap();
    let bg = MetricField::flat(g);
    let gm = MetricField::from_background_plus(&bg, &h0).unwrap();
    let mut cfg = flow::StepperConfig::new(t);
    cfg.scheme = Scheme::ExplicitRk2;
    let traj = flow::run_flow(gm, bg, flow::Solver::Perturbation, &cfg).unwrap();
    let stepped = traj.state_at(t).unwrap().h();
    let gap = sol.at(t).unwrap().max_abs_diff(stepped).unwrap();
    assert!(gap < 2e-5, "gap {gap}");
}

#[test]
fn oversized_data_is_rejected() {
    let g = grid(16);
    let h0 = diagonal_h(g, |x| 0.5 * x[0].sin());
    assert!(duhamel_iterate(&h0, &[0.01], &HeatKernelSpec::new(g), 12).is_err());
}
