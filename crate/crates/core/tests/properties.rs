//! Invariants over randomly drawn inputs.

use std::f64::consts::TAU;
use std::sync::LazyLock;

use proptest::prelude::*;
use riccilab::flow::{cfl_dt, run_flow, FlowTrajectory, Solver, StepperConfig};
use riccilab::geometry::scalar_curvature;
use riccilab::initial_data::{generate, Family, GeneratorSpec};
use riccilab::weak_bound::{default_t_grid, validate_grids, weak_lower_bound};
use riccilab::{gfb, stats, GridSpec, MetricField};

fn grid(dim: usize, n: usize) -> GridSpec {
    GridSpec::new(dim, n, TAU).unwrap()
}

fn random_smooth(dim: usize, n: usize, seed: u64, amplitude: f64) -> MetricField {
    let mut spec = GeneratorSpec::new(Family::RandomSmooth, amplitude);
    spec.seed = seed;
    generate(&grid(dim, n), &spec).unwrap().primary().clone()
}

/// `A Aᵀ + εI` from nine entries, restricted to `dim`.
fn spd(dim: usize, a: [f64; 9]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            m[i][j] = (0..dim).map(|k| a[3 * i + k] * a[3 * j + k]).sum::<f64>();
        }
        m[i][i] += 0.5;
    }
    m
}

/// Conformal data flowed briefly; shared by the weak-bound properties.
static TRAJ: LazyLock<FlowTrajectory> = LazyLock::new(|| {
    let g0 = generate(&grid(2, 32), &GeneratorSpec::new(Family::Conformal, 0.05))
        .unwrap()
        .primary()
        .clone();
    let mut cfg = StepperConfig::new(0.1);
    cfg.snapshot_times = default_t_grid();
    run_flow(g0.clone(), MetricField::flat(*g0.grid()), Solver::RicciDeTurck, &cfg).unwrap()
});

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_metrics_have_zero_curvature(dim in 2usize..=3, a in prop::array::uniform9(-1.0f64..1.0)) {
        let m = spd(dim, a);
        let g = MetricField::from_fn(grid(dim, 8), move |_| m).unwrap();
        let r = scalar_curvature(&g).unwrap();
        prop_assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn scalar_curvature_scales_inversely(seed in 0u64..1000, c in 0.5f64..2.0) {
        let g = random_smooth(2, 32, seed, 0.05);
        let r = scalar_curvature(&g).unwrap();
        let rc = scalar_curvature(&g.scaled(c).unwrap()).unwrap();
        for (a, b) in r.iter().zip(&rc) {
            prop_assert!((a / c - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn scalar_curvature_commutes_with_grid_shifts(seed in 0u64..1000, sx in 0usize..32, sy in 0usize..32) {
        let g = random_smooth(2, 32, seed, 0.05);
        let gr = *g.grid();
        let shifted_index = move |p: usize| {
            let i = gr.multi_index(p);
            gr.flat_index(&[(i[0] + sx) % 32, (i[1] + sy) % 32])
        };
        let g2 = {
            let src = g.clone();
            MetricField::from_fn(gr, move |x| {
                let p = shifted_index(gr.snap(x).0);
                let mut m = [[0.0; 3]; 3];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] = src.entry(p, i, j);
                    }
                }
                m
            })
            .unwrap()
        };
        let (r, r2) = (scalar_curvature(&g).unwrap(), scalar_curvature(&g2).unwrap());
        for p in 0..gr.num_points() {
            prop_assert!((r2[p] - r[shifted_index(p)]).abs() < 1e-13);
        }
    }

    #[test]
    fn gfb_round_trip_is_bit_exact(dim in 2usize..=3, seed in 0u64..1000) {
        let g = random_smooth(dim, 8, seed, 0.05);
        let header = gfb::GfbHeader { grid: *g.grid(), covariant: 2, contravariant: 0, count: g.grid().sym_components() };
        let mut bytes = Vec::new();
        gfb::write(&mut bytes, &header, g.data()).unwrap();
        let (h, data) = gfb::read(bytes.as_slice()).unwrap();
        prop_assert_eq!(h.grid, *g.grid());
        prop_assert!(data.iter().zip(g.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn cfl_step_scales_with_the_metric(seed in 0u64..1000, c in 0.25f64..4.0, s in 0.05f64..1.0) {
        let g = random_smooth(2, 16, seed, 0.05);
        let ratio = cfl_dt(&g.scaled(c).unwrap(), s) / cfl_dt(&g, s);
        prop_assert!((ratio / c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_is_a_constant_average(dim in 2usize..=3, seed in 0u64..1000) {
        let g = random_smooth(dim, 8, seed, 0.08);
        let m = g.mean();
        prop_assert!(m.is_constant());
        prop_assert!(m.lambda_min() > 0.0);
        let np = g.grid().num_points() as f64;
        let avg = g.component(0, 0).iter().sum::<f64>() / np;
        prop_assert!((m.entry(0, 0, 0) - avg).abs() < 1e-14);
    }

    #[test]
    fn power_laws_fit_exactly(slope in -2.0f64..2.0, scale in 0.1f64..10.0) {
        let t: Vec<f64> = (0..8).map(|k| 1e-4 * 2f64.powi(k)).collect();
        let y: Vec<f64> = t.iter().map(|t| scale * t.powf(slope)).collect();
        let fit = stats::loglog_fit(&t, &y).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!(fit.slope_ci.0 <= fit.slope && fit.slope <= fit.slope_ci.1);
    }

    #[test]
    fn time_grids_come_back_sorted_decreasing(mut t in prop::collection::vec(1e-4f64..1e-1, 6..12)) {
        t.push(1e-4);
        t.push(1e-2);
        let sorted = validate_grids(0.4, &[0.5, 1.0, 2.0, 4.0], &t).unwrap();
        prop_assert!(sorted.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(sorted.len(), t.len());
    }

    #[test]
    fn beta_outside_the_open_half_interval_is_rejected(beta in prop_oneof![-1.0f64..=0.0, 0.5f64..2.0]) {
        prop_assert!(validate_grids(beta, &[0.5, 1.0, 2.0, 4.0], &default_t_grid()).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn larger_balls_see_lower_infima(x in 0.0f64..TAU, y in 0.0f64..TAU, beta in 0.1f64..0.49) {
        let c = [0.5, 1.0, 2.0, 4.0];
        let e = weak_lower_bound(&TRAJ, &[x, y], beta, &c, &default_t_grid()).unwrap();
        for pair in e.ball_inf.windows(2) {
            prop_assert!(pair[0].iter().zip(&pair[1]).all(|(small, large)| large <= small));
        }
        prop_assert!(e.per_c_liminf.iter().all(|l| e.estimate <= *l));
    }
}
