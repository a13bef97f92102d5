use super::*;
use crate::fd;

fn grid(dim: usize, n: usize) -> GridSpec {
    GridSpec::new(dim, n, 2.0 * PI).unwrap()
}

fn single_of(g: Generated) -> MetricField {
    match g {
        Generated::Single(g) => g,
        other => panic!("expected a single metric, got {other:?}"),
    }
}

#[test]
fn family_names_round_trip() {
    for f in Family::ALL {
        assert_eq!(f.name().parse::<Family>().unwrap(), f);
    }
    assert!("cube".parse::<Family>().is_err());
}

#[test]
fn flat_is_exact_identity() {
    let g = single_of(generate(&grid(3, 8), &GeneratorSpec::new(Family::Flat, 0.0)).unwrap());
    assert_eq!(g.lambda_min(), 1.0);
    assert!(g.is_constant());
    assert_eq!(g.entry(5, 0, 0), 1.0);
    assert_eq!(g.entry(5, 1, 0), 0.0);
}

#[test]
fn conformal_matches_curvature_formula() {
    let gr = grid(2, 64);
    let a = 0.2;
    let g = single_of(generate(&gr, &GeneratorSpec::new(Family::Conformal, a)).unwrap());
    let r = geometry::scalar_curvature(&g).unwrap();
    let mut err = 0.0_f64;
    let mut scale = 0.0_f64;
    for p in 0..gr.num_points() {
        let x = gr.coords(p);
        let phi = conformal_factor(&gr, a, &x);
        let exact = -2.0 * (-2.0 * phi).exp() * conformal_factor_laplacian(&gr, a, &x);
        err = err.max((r[p] - exact).abs());
        scale = scale.max(exact.abs());
    }
    assert!(err / scale < 1e-3, "relative error {}", err / scale);
}

#[test]
fn random_smooth_is_seeded_and_scaled() {
    let gr = grid(3, 16);
    let mut spec = GeneratorSpec::new(Family::RandomSmooth, 0.1);
    spec.seed = 7;
    let a = single_of(generate(&gr, &spec).unwrap());
    let b = single_of(generate(&gr, &spec).unwrap());
    assert_eq!(a.data(), b.data());
    spec.seed = 8;
    let c = single_of(generate(&gr, &spec).unwrap());
    assert!(a.max_abs_diff(&c).unwrap() > 1e-3);
    let d = a.relative_distance(&MetricField::flat(gr)).unwrap();
    assert!((d - 0.1).abs() < 1e-12, "distance {d}");
    assert!(a.lambda_min() >= 0.9 - 1e-12);
}

#[test]
fn random_smooth_is_band_limited() {
    let gr = grid(2, 32);
    let g = single_of(generate(&gr, &GeneratorSpec::new(Family::RandomSmooth, 0.1)).unwrap());
    let np = gr.num_points();
    let mut c: Vec<Complex<f64>> = g.data()[..np].iter().map(|v| Complex::new(*v, 0.0)).collect();
    fft_nd(&gr, &mut c, false);
    for (p, v) in c.iter().enumerate() {
        let idx = gr.multi_index(p);
        let high = (0..2).any(|a| wavenumber(idx[a], 32).abs() > RANDOM_MODES);
        if high {
            assert!(v.norm() < 1e-10 * np as f64);
        }
    }
}

#[test]
fn kink_is_lipschitz_but_not_c1() {
    let mut grad = Vec::new();
    let mut second = Vec::new();
    for n in [32, 64, 128] {
        let gr = grid(2, n);
        let g = single_of(generate(&gr, &GeneratorSpec::new(Family::LipschitzKink, 0.1)).unwrap());
        let f = &g.data()[..gr.num_points()];
        let max = |v: Vec<f64>| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        grad.push(max(fd::d1(&gr, f, 0)));
        second.push(max(fd::d2(&gr, f, 0)));
    }
    for w in grad.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "gradient ratio {}", w[1] / w[0]);
    }
    for w in second.windows(2) {
        let r = w[1] / w[0];
        assert!((1.7..2.3).contains(&r), "second difference ratio {r}");
    }
}

#[test]
fn pullback_is_flat_off_the_kinks_and_bilipschitz() {
    let gr = grid(2, 64);
    let a = 0.2;
    let g = single_of(generate(&gr, &GeneratorSpec::new(Family::BilipschitzPullback, a)).unwrap());
    // det DΦ = 1 − a² ψ'ψ' ≥ 1 − a².
    assert!(g.lambda_min() > 0.5);
    let r = geometry::scalar_curvature(&g).unwrap();
    let h = gr.spacing();
    for p in 0..gr.num_points() {
        let x = gr.coords(p);
        let near = |s: f64| {
            let s = s.rem_euclid(PI);
            s.min(PI - s) < 3.0 * h
        };
        if !near(x[0]) && !near(x[1]) {
            assert!(r[p].abs() < 1e-9, "R = {} at {:?}", r[p], x);
        }
    }
    let y = tent_map(&gr, a, &[0.1, 0.2]);
    assert!((y[0] - (0.1 + a * tent(2.0 * PI, 0.2))).abs() < 1e-15);
}

#[test]
fn second_order_pair_agrees_to_order_two_and_a_half() {
    let gr = grid(2, 128);
    let mut spec = GeneratorSpec::new(Family::SecondOrderPair, 0.05);
    spec.pair_scale = 1.0;
    spec.eta = 0.5;
    let (a, b) = match generate(&gr, &spec).unwrap() {
        Generated::Pair(a, b) => (a, b),
        other => panic!("expected a pair, got {other:?}"),
    };
    let x0 = pair_center(&gr);
    let h = gr.spacing();
    let np = gr.num_points();
    let mut pts = Vec::new();
    for m in [2.0, 4.0, 8.0] {
        let r = m * h;
        let mut sup = 0.0_f64;
        for p in 0..np {
            let x = gr.coords(p);
            if gr.torus_distance(&x[..2], &x0[..2]) <= r + 1e-12 {
                for c in 0..3 {
                    sup = sup.max((a.data()[c * np + p] - b.data()[c * np + p]).abs());
                }
            }
        }
        pts.push((r.ln(), sup.ln()));
    }
    let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
    assert!((slope - 2.5).abs() < 0.1, "slope {slope}");
}

#[test]
fn mollified_concave_kink_converges() {
    let gr = grid(2, 64);
    let mut spec = GeneratorSpec::new(Family::MollifiedSequence, -0.3);
    spec.mollify_scales = vec![0.6, 0.4, 0.3, 0.2];
    let seq = match generate(&gr, &spec).unwrap() {
        Generated::Sequence(s) => s,
        other => panic!("expected a sequence, got {other:?}"),
    };
    let d = seq.distances();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "distances {d:?}");
    let k = &seq.kappas;
    let n = k.len();
    assert!((k[n - 1] - k[n - 2]).abs() < 0.05, "kappas {k:?}");
}

#[test]
fn oversized_amplitude_is_rejected() {
    let gr = grid(2, 16);
    let err = generate(&gr, &GeneratorSpec::new(Family::RandomSmooth, 0.6)).unwrap_err();
    assert!(matches!(err, Error::Amplitude(_)), "{err}");
    let err = generate(&gr, &GeneratorSpec::new(Family::LipschitzKink, -1.5)).unwrap_err();
    assert!(matches!(err, Error::Amplitude(_)), "{err}");
}
