//! Acceptance suites: one per criterion, all built on the shipped configs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riccilab::duhamel::{self, HeatKernelSpec, Quadrature};
use riccilab::flow::{self, Solver, StepperConfig};
use riccilab::initial_data::{self, conformal_factor, conformal_factor_laplacian, pair_center, Family, GeneratorSpec, Generated};
use riccilab::stats;
use riccilab::weak_bound::{self, tolerance};
use riccilab::{diffeo, geometry, GridSpec, MetricField, TensorField};
use serde::Serialize;
use serde_json::{json, Value};

use crate::checks::{self, CheckOutcome};
use crate::compare::{self, decay_fit, scalar_gap, GapRow};
use crate::config::{ExperimentConfig, T_MIN};
use crate::error::{CliError, CliResult};
use crate::pipeline::{self, RunOutput};
use crate::shipped::{expand, shipped, shipped_runs};

pub const SUITES: [(u8, &str); 10] = [
    (1, "curvature-oracle"),
    (2, "preservation"),
    (3, "universal-bound"),
    (4, "cross-validation"),
    (5, "smoothing"),
    (6, "classical-agreement"),
    (7, "decay"),
    (8, "torus-rigidity"),
    (9, "continuity"),
    (10, "beta-robustness"),
];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub criterion: u8,
    pub name: String,
    /// Every check passed and the runtime stayed within its budget.
    pub pass: bool,
    /// Every numerical check passed, regardless of runtime.
    pub checks_pass: bool,
    pub elapsed_s: f64,
    pub budget_s: Option<f64>,
    pub details: Vec<String>,
    pub metrics: Value,
}

impl SuiteOutcome {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("[{verdict}] criterion {:>2} {:<20} {:>8.1} s", self.criterion, self.name, self.elapsed_s);
        if let Some(b) = self.budget_s {
            if self.elapsed_s > b {
                s.push_str(&format!("  (over the {b} s budget)"));
            }
        }
        if !self.checks_pass {
            s.push_str("  (checks failed)");
        }
        s
    }
}

/// Runs shared between suites, keyed by the config echo.
#[derive(Default)]
pub struct Lab {
    runs: Mutex<HashMap<String, Arc<RunOutput>>>,
}

impl Lab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn run(&self, cfg: &ExperimentConfig) -> CliResult<Arc<RunOutput>> {
        let key = cfg.echo();
        if let Some(r) = self.runs.lock().expect("lab lock").get(&key) {
            return Ok(r.clone());
        }
        let exp = cfg.validate()?;
        let start = Instant::now();
        let out = Arc::new(pipeline::execute(&exp)?);
        info!("run {} took {:.1} s", cfg.name, start.elapsed().as_secs_f64());
        self.runs.lock().expect("lab lock").insert(key, out.clone());
        Ok(out)
    }
}

struct Builder {
    criterion: u8,
    start: Instant,
    ok: bool,
    details: Vec<String>,
    metrics: serde_json::Map<String, Value>,
    budget: Option<f64>,
}

impl Builder {
    fn new(criterion: u8) -> Self {
        Self {
            criterion,
            start: Instant::now(),
            ok: true,
            details: Vec::new(),
            metrics: serde_json::Map::new(),
            budget: None,
        }
    }

    fn check(&mut self, pass: bool, detail: impl Into<String>) {
        let d = detail.into();
        self.details.push(format!("{} {d}", if pass { "ok  " } else { "FAIL" }));
        self.ok &= pass;
    }

    fn outcome(&mut self, o: &CheckOutcome, run: &str) {
        self.check(o.pass, format!("{run}: {} ({})", o.name, o.detail));
    }

    fn note(&mut self, detail: impl Into<String>) {
        self.details.push(format!("     {}", detail.into()));
    }

    fn metric(&mut self, key: &str, v: Value) {
        self.metrics.insert(key.into(), v);
    }

    fn finish(self) -> SuiteOutcome {
        let elapsed = self.start.elapsed().as_secs_f64();
        let in_budget = self.budget.is_none_or(|b| elapsed <= b);
        let name = SUITES[self.criterion as usize - 1].1.to_string();
        SuiteOutcome {
            criterion: self.criterion,
            name,
            pass: self.ok && in_budget,
            checks_pass: self.ok,
            elapsed_s: elapsed,
            budget_s: self.budget,
            details: self.details,
            metrics: Value::Object(self.metrics),
        }
    }
}

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|(_, n)| *n).chain(["all"]).collect()
}

/// Runs the named suite (`all` runs every one in order).
pub fn run_suite(name: &str, lab: &Lab) -> CliResult<Vec<SuiteOutcome>> {
    if name == "all" {
        return SUITES.iter().map(|(c, _)| run_criterion(*c, lab)).collect();
    }
    let (c, _) = SUITES
        .iter()
        .find(|(_, n)| *n == name)
        .ok_or_else(|| CliError::Config(format!("unknown suite `{name}` (known: {})", suite_names().join(", "))))?;
    Ok(vec![run_criterion(*c, lab)?])
}

pub fn run_criterion(c: u8, lab: &Lab) -> CliResult<SuiteOutcome> {
    info!("suite {}", SUITES[c as usize - 1].1);
    match c {
        1 => curvature_oracle(),
        2 => preservation(lab),
        3 => universal_bound(lab),
        4 => cross_validation(),
        5 => smoothing(lab),
        6 => classical_agreement(lab),
        7 => decay(lab),
        8 => torus_rigidity(lab),
        9 => continuity(lab),
        10 => beta_robustness(lab),
        _ => Err(CliError::Config(format!("no criterion {c}"))),
    }
}

pub fn summary_json(outcomes: &[SuiteOutcome]) -> Value {
    json!({
        "pass": outcomes.iter().all(|o| o.pass),
        "suites": outcomes,
    })
}

fn grid2(n: usize) -> GridSpec {
    GridSpec::new(2, n, std::f64::consts::TAU).expect("valid grid")
}

/// Relative max-norm error of the conformal scalar curvature and its
/// refinement order.
pub fn curvature_oracle() -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(1);
    b.budget = Some(10.0);
    let amplitude = shipped("conformal").generator.amplitude;
    let mut errs = Vec::new();
    for n in [64, 128] {
        let grid = grid2(n);
        let g = initial_data::generate(&grid, &GeneratorSpec::new(Family::Conformal, amplitude))?;
        let r = geometry::scalar_curvature(g.primary())?;
        let (mut err, mut scale) = (0.0f64, 0.0f64);
        for (p, rp) in r.iter().enumerate() {
            let x = grid.coords(p);
            let phi = conformal_factor(&grid, amplitude, &x);
            let exact = -2.0 * (-2.0 * phi).exp() * conformal_factor_laplacian(&grid, amplitude, &x);
            err = err.max((rp - exact).abs());
            scale = scale.max(exact.abs());
        }
        errs.push(err / scale);
        b.note(format!("N = {n}: relative error {:.3e}", err / scale));
    }
    let order = stats::convergence_order(errs[0], errs[1], 2.0);
    b.check(errs[1] <= 1e-3, format!("relative error at N = 128 is {:.3e} (≤ 1e-3)", errs[1]));
    b.check(order >= 3.5, format!("order between N = 64 and 128 is {order:.3} (≥ 3.5)"));
    b.metric("relative_error", json!(errs));
    b.metric("order", json!(order));
    Ok(b.finish())
}

/// Random-smooth runs stay above the comparison curve of their own
/// measured `κ₀`.
pub fn preservation(lab: &Lab) -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(2);
    b.budget = Some(300.0);
    let mut kappas = Vec::new();
    for base in ["random-smooth-2d", "random-smooth-3d"] {
        for cfg in expand(&shipped(base)) {
            let out = lab.run(&cfg)?;
            let kappa0 = pipeline::min_scalar(&out.g0)?;
            kappas.push(json!({"run": cfg.name, "kappa0": kappa0}));
            let o = checks::preservation(&out.traj.series, out.exp.grid.dim, kappa0, out.exp.stepper.t_final);
            b.outcome(&o, &cfg.name);
        }
    }
    b.metric("kappa0", Value::Array(kappas));
    Ok(b.finish())
}

/// `min R ≥ −n/(2t) − tol` on every shipped run.
pub fn universal_bound(lab: &Lab) -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(3);
    for cfg in shipped_runs() {
        let out = lab.run(&cfg)?;
        let o = checks::universal_bound(&out.traj.series, out.exp.grid.dim);
        b.outcome(&o, &cfg.name);
    }
    Ok(b.finish())
}

/// Values of `fine` at the points of the grid with half its resolution.
fn restrict(fine: &TensorField, coarse: GridSpec) -> TensorField {
    let fg = *fine.grid();
    let (npc, npf) = (coarse.num_points(), fg.num_points());
    let nc = fine.data().len() / npf;
    let mut data = vec![0.0; nc * npc];
    for p in 0..npc {
        let idx = coarse.multi_index(p);
        let q = fg.flat_index(&idx.map(|i| 2 * i)[..coarse.dim]);
        for c in 0..nc {
            data[c * npc + p] = fine.data()[c * npf + q];
        }
    }
    let (co, contra) = fine.valence();
    TensorField::new(coarse, co, contra, data).expect("same layout")
}

fn perturbation_run(g0: &MetricField, cfl: f64, times: &[f64]) -> CliResult<flow::FlowTrajectory> {
    let t_final = times.iter().copied().fold(0.0, f64::max);
    let mut cfg = StepperConfig::new(t_final);
    cfg.cfl_safety = cfl;
    cfg.snapshot_times = times.to_vec();
    Ok(flow::run_flow(g0.clone(), MetricField::flat(*g0.grid()), Solver::Perturbation, &cfg)?)
}

/// Direct vs perturbation stepping over a refinement ladder, and the
/// Duhamel iteration against the perturbation stepper.
pub fn cross_validation() -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(4);
    let spec = GeneratorSpec::new(Family::Conformal, shipped("conformal").generator.amplitude);
    let t_final = 0.02;
    let mut ladder = Vec::new();
    for n in [16, 32, 64] {
        let grid = grid2(n);
        let g0 = initial_data::generate(&grid, &spec)?.primary().clone();
        let mut cfg = StepperConfig::new(t_final);
        cfg.cfl_safety = 0.5;
        let run = |solver| flow::run_flow(g0.clone(), MetricField::flat(grid), solver, &cfg);
        let (a, p) = (run(Solver::RicciDeTurck)?, run(Solver::Perturbation)?);
        let gap = a.state_at(t_final)?.g.max_abs_diff(&p.state_at(t_final)?.g)?;
        let dt = a.dt_history.iter().copied().fold(0.0, f64::max);
        let model = dt + grid.spacing().powi(4);
        b.note(format!("N = {n}: gap {gap:.3e}, dt {dt:.3e}, dt + h^4 = {model:.3e}"));
        ladder.push((n, gap, model));
    }
    // C is fitted on the coarsest level; finer levels must stay under it.
    let c = ladder[0].1 / ladder[0].2;
    for &(n, gap, model) in &ladder[1..] {
        b.check(gap <= c * model * (1.0 + 1e-12), format!("N = {n}: gap {gap:.3e} ≤ C(dt + h^4) = {:.3e}", c * model));
    }
    b.metric("ladder", json!(ladder.iter().map(|(n, g, m)| json!({"N": n, "gap": g, "dt_plus_h4": m})).collect::<Vec<_>>()));
    b.metric("fitted_C", json!(c));

    // Duhamel against the stepper on three data sets at three times.
    let n = 32;
    let grid = grid2(n);
    let amp = 0.05;
    let times = [0.005, 0.01, 0.02];
    let kspec = HeatKernelSpec::new(grid);
    let fine_quad = Quadrature {
        u_intervals: 32,
        time_nodes: 48,
    };
    let cfl = StepperConfig::new(1.0).cfl_safety;
    let mut rows = Vec::new();
    for family in [Family::Conformal, Family::RandomSmooth, Family::LipschitzKink] {
        // The coarse data is the fine data restricted, so both levels
        // sample one function (generators normalise on their own grid).
        let spec = GeneratorSpec::new(family, amp);
        let fine_grid = grid2(2 * n);
        let flat_fine = MetricField::flat(fine_grid);
        let g0_fine = initial_data::generate(&fine_grid, &spec)?.primary().clone();
        let h0_fine = g0_fine.perturbation(&flat_fine)?;
        let h0 = restrict(&h0_fine, grid);
        let g0 = MetricField::from_background_plus(&MetricField::flat(grid), &h0)?;

        let sol = duhamel::duhamel_iterate(&h0, &times, &kspec, compare::DUHAMEL_ITERATIONS)?;
        let sol_fine_t = duhamel::duhamel_iterate_with(&h0, &times, &kspec, compare::DUHAMEL_ITERATIONS, fine_quad)?;
        let sol_fine_x = duhamel::duhamel_iterate(&h0_fine, &times, &HeatKernelSpec::new(fine_grid), compare::DUHAMEL_ITERATIONS)?;
        let stepped = perturbation_run(&g0, cfl, &times)?;
        let halved = perturbation_run(&g0, 0.5 * cfl, &times)?;
        let refined = perturbation_run(&g0_fine, cfl, &times)?;
        for &t in &times {
            let d = sol.at(t)?;
            let h = stepped.state_at(t)?.h();
            let gap = d.max_abs_diff(h)?;
            // Quadrature: time rule refined, and the spatial (midpoint) rule
            // refined through the kernel on the doubled grid.
            let e_quad = d.max_abs_diff(sol_fine_t.at(t)?)? + d.max_abs_diff(&restrict(sol_fine_x.at(t)?, grid))?;
            let e_time = h.max_abs_diff(halved.state_at(t)?.h())?;
            let e_space = h.max_abs_diff(&restrict(refined.state_at(t)?.h(), grid))?;
            let budget = 2.0 * (e_quad + e_time + e_space);
            b.check(
                gap <= budget,
                format!(
                    "{family} t = {t}: Duhamel gap {gap:.3e} ≤ 2(quad {e_quad:.2e} + time {e_time:.2e} + space {e_space:.2e}) = {budget:.3e}"
                ),
            );
            rows.push(json!({"family": family.name(), "t": t, "gap": gap, "e_quad": e_quad, "e_time": e_time, "e_space": e_space}));
        }
    }
    b.metric("duhamel", Value::Array(rows));
    Ok(b.finish())
}

/// Derivative-decay constants of the kink run, stable under refinement.
pub fn smoothing(lab: &Lab) -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(5);
    let base = shipped("kink");
    let mut fine = base.clone();
    fine.name = "kink-refined".into();
    fine.grid.points_per_axis *= 2;
    fine.checks = vec!["derivative-decay".into()];
    fine.evaluator.points.clear();
    fine.evaluator.kappa = None;
    let mut consts = Vec::new();
    for cfg in [&base, &fine] {
        let out = lab.run(cfg)?;
        let (c1, c2) = checks::decay_constants(&out.traj.series, T_MIN, cfg.stepper.t_final);
        let h0 = out.g0.perturbation(&MetricField::flat(out.exp.grid))?.max_abs();
        let o = checks::derivative_decay(&out.traj.series, h0, cfg.stepper.t_final);
        b.outcome(&o, &format!("N = {}", cfg.grid.points_per_axis));
        consts.push((c1, c2));
    }
    let rel = |a: f64, f: f64| (a - f).abs() / f;
    let (r1, r2) = (rel(consts[0].0, consts[1].0), rel(consts[0].1, consts[1].1));
    b.check(r1 <= 0.15, format!("sqrt(t)|dh| constant changes by {:.2}% under refinement (≤ 15%)", 100.0 * r1));
    b.check(r2 <= 0.15, format!("t|ddh| constant changes by {:.2}% under refinement (≤ 15%)", 100.0 * r2));
    b.metric("constants", json!(consts));
    Ok(b.finish())
}

/// Points drawn uniformly on the torus from a fixed seed.
pub fn random_points(grid: &GridSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..grid.dim).map(|_| rng.random_range(0.0..grid.period)).collect())
        .collect()
}

/// Weak-bound estimates of a smooth metric against its classical scalar
/// curvature.
pub fn classical_agreement(lab: &Lab) -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(6);
    let mut cfg = shipped("conformal");
    cfg.name = "conformal-random-points".into();
    let grid = cfg.validate()?.grid;
    cfg.evaluator.points = random_points(&grid, 10, 6);
    cfg.evaluator.kappa = None;
    cfg.checks = vec!["universal-bound".into()];
    let out = lab.run(&cfg)?;
    let r0 = geometry::scalar_curvature(&out.g0)?;
    let mut rows = Vec::new();
    for e in &out.estimates {
        let r = r0[grid.snap(&e.point[..grid.dim]).0];
        let err = (e.estimate - r).abs();
        b.check(
            err <= tolerance(r),
            format!("point {:.3?}: estimate {:.5} vs R {r:.5} (|diff| {err:.2e} ≤ {:.4})", &e.point[..grid.dim], e.estimate, tolerance(r)),
        );
        rows.push(json!({"point": &e.point[..grid.dim], "estimate": e.estimate, "classical": r}));
    }
    b.metric("points", Value::Array(rows));
    Ok(b.finish())
}

/// Fit window of the decay experiment.
pub const DECAY_WINDOW: (f64, f64) = (1e-4, 1e-2);

fn scalar_gaps(a: &RunOutput, bb: &RunOutput, c: f64, beta: f64) -> CliResult<Vec<GapRow>> {
    let x0 = pair_center(&a.exp.grid);
    let mut rows = Vec::new();
    for s in &a.traj.states {
        let t = s.t;
        if t < DECAY_WINDOW.0 * (1.0 - 1e-12) || t > DECAY_WINDOW.1 * (1.0 + 1e-12) {
            continue;
        }
        // Only times both runs snapshot; their evaluator grids may differ.
        let Ok(other) = bb.traj.state_at(t) else { continue };
        let gap = scalar_gap(&s.g, &other.g, &x0, c * t.powf(beta))?;
        rows.push(GapRow { t, gap });
    }
    Ok(rows)
}

/// Scalar-curvature gap of the second-order pair decays like `t^ω`; the
/// zeroth-order control does not.
pub fn decay(lab: &Lab) -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(7);
    let c = 1.0;
    let mut fits = serde_json::Map::new();
    for (label, first, second) in [("pair", "pair-first", "pair-second"), ("control", "control-first", "control-second")] {
        let (fa, fb) = (shipped(first), shipped(second));
        let beta = fa.evaluator.beta;
        let (ra, rb) = (lab.run(&fa)?, lab.run(&fb)?);
        let rows = scalar_gaps(&ra, &rb, c, beta)?;
        let (fit, degenerate) = decay_fit(&rows)?;
        let gaps: Vec<String> = rows.iter().map(|r| format!("{:.2e}@{:.1e}", r.gap, r.t)).collect();
        b.note(format!("{label} gaps: {}", gaps.join(" ")));
        match (label, fit) {
            (_, None) => b.check(false, format!("{label}: fit degenerate")),
            ("pair", Some(f)) => b.check(
                !degenerate && f.slope_ci.0 > 0.0,
                format!("pair: omega = {:.4}, 95% band [{:.4}, {:.4}] (lower bound > 0)", f.slope, f.slope_ci.0, f.slope_ci.1),
            ),
            (_, Some(f)) => b.check(
                f.slope <= 0.0,
                format!("control: slope {:.4}, 95% band [{:.4}, {:.4}] (slope ≤ 0)", f.slope, f.slope_ci.0, f.slope_ci.1),
            ),
        }
        fits.insert(label.into(), json!(rows));
    }
    b.metric("gaps", Value::Object(fits));
    Ok(b.finish())
}

/// The bi-Lipschitz pullback of flat flows back to flat, with tracers
/// moving at most like `√t`.
pub fn torus_rigidity(lab: &Lab) -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(8);
    let cfg = shipped("pullback");
    let out = lab.run(&cfg)?;
    let rec = checks::flat_recovery(&out.traj)?;
    b.outcome(&rec, &cfg.name);
    let track = out
        .track
        .as_ref()
        .ok_or_else(|| CliError::Config("pullback config must track".into()))?;
    let k = diffeo::sqrt_t_constant(&track.diameters, T_MIN, cfg.stepper.t_final);
    b.check(k.is_finite(), format!("tracer sqrt(t)-diameter constant {k:.4} over [{T_MIN}, {}]", cfg.stepper.t_final));
    let at = |t: f64| track.c0.iter().find(|(s, _)| (s - t).abs() <= 1e-12 * t).map(|(_, d)| *d);
    if let (Some(lo), Some(hi)) = (at(1e-4), at(1e-2)) {
        b.note(format!("C0 distance of the pushed-forward flow: {hi:.3e} at t = 1e-2, {lo:.3e} at t = 1e-4"));
    }
    b.note(format!("anchor time {:.3e}", track.anchor));
    b.metric("sqrt_t_constant", json!(k));
    b.metric("flat_distance", json!(checks::flat_distances(&out.traj)?));
    Ok(b.finish())
}

/// Mollified elements preserve their own bounds; the rough limit keeps a
/// weak bound at the limiting κ.
pub fn continuity(lab: &Lab) -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(9);
    let base = shipped("mollified-base");
    let exp = base.validate()?;
    let Generated::Sequence(seq) = initial_data::generate(&exp.grid, &exp.generator)? else {
        return Err(CliError::Config("mollified-base must generate a sequence".into()));
    };
    let k = &seq.kappas;
    b.note(format!("scales {:?}, kappa_i {:.5?}", seq.scales, k));
    let cauchy = (k[k.len() - 1] - k[k.len() - 2]).abs();
    b.check(cauchy <= 0.05, format!("kappa_i Cauchy gap at the two finest scales {cauchy:.2e} (≤ 0.05)"));
    for cfg in expand(&shipped("mollified-element")) {
        let out = lab.run(&cfg)?;
        let kappa_i = pipeline::min_scalar(&out.g0)?;
        let o = checks::preservation(&out.traj.series, exp.grid.dim, kappa_i, cfg.stepper.t_final);
        b.outcome(&o, &cfg.name);
    }
    let limit = k[k.len() - 1];
    let out = lab.run(&base)?;
    for e in &out.estimates {
        b.check(
            e.estimate >= limit - tolerance(limit),
            format!("limit metric at {:.3?}: estimate {:.5} ≥ lim kappa {limit:.5} − {:.4}", &e.point[..exp.grid.dim], e.estimate, tolerance(limit)),
        );
    }
    b.metric("kappas", json!(k));
    b.metric("estimates", json!(out.estimates.iter().map(|e| e.estimate).collect::<Vec<_>>()));
    Ok(b.finish())
}

pub const BETAS: [f64; 3] = [0.3, 0.4, 0.45];

/// Weak-bound verdicts agree for every β on every shipped generator.
pub fn beta_robustness(lab: &Lab) -> CliResult<SuiteOutcome> {
    let mut b = Builder::new(10);
    let mut table = serde_json::Map::new();
    for name in ["flat", "conformal", "random-smooth-2d", "kink", "pullback", "pair-first", "mollified-base"] {
        let cfg = shipped(name);
        let kappa = cfg
            .evaluator
            .kappa
            .ok_or_else(|| CliError::Config(format!("{name} has no kappa")))?;
        let out = lab.run(&cfg)?;
        let mut verdicts = Vec::new();
        let mut lows = Vec::new();
        for beta in BETAS {
            let mut est = weak_bound::weak_lower_bounds(&out.traj, &out.exp.points, beta, &out.exp.c_grid, &out.exp.t_grid)?;
            let verdict = est.iter_mut().all(|e| e.test_kappa(kappa));
            verdicts.push(verdict);
            lows.push(est.iter().map(|e| e.estimate).fold(f64::INFINITY, f64::min));
        }
        let same = verdicts.iter().all(|v| *v == verdicts[0]);
        b.check(
            same,
            format!("{name} (kappa {kappa}): verdicts {verdicts:?}, lowest estimates {:.4?} for beta {BETAS:?}", lows),
        );
        table.insert(name.into(), json!({"kappa": kappa, "verdicts": verdicts, "lowest": lows}));
    }
    b.metric("verdicts", Value::Object(table));
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_a_config_error() {
        let err = run_suite("bogus", &Lab::new()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn restriction_picks_even_points() {
        let fine = grid2(16);
        let coarse = grid2(8);
        let data: Vec<f64> = (0..fine.num_points()).map(|p| p as f64).collect();
        let t = TensorField::new(fine, 0, 0, data).unwrap();
        let r = restrict(&t, coarse);
        assert_eq!(r.data()[1], fine.flat_index(&[0, 2]) as f64);
        assert_eq!(r.data()[coarse.flat_index(&[7, 1])], fine.flat_index(&[14, 2]) as f64);
    }

    #[test]
    fn random_points_are_seeded() {
        let g = grid2(16);
        assert_eq!(random_points(&g, 3, 1), random_points(&g, 3, 1));
        assert_ne!(random_points(&g, 3, 1), random_points(&g, 3, 2));
        assert!(random_points(&g, 50, 3).iter().flatten().all(|v| (0.0..g.period).contains(v)));
    }
}
