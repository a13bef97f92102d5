//! generate → flow → track → evaluate → check, and the run directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, info};
use riccilab::diffeo::{self, DiameterRow, DiffeoTrack};
use riccilab::flow::{self, FlowTrajectory, SeriesRow};
use riccilab::initial_data::{self, Generated, Provenance};
use riccilab::weak_bound::{self, WeakBoundEstimate};
use riccilab::{geometry, MetricField};
use serde_json::json;

use crate::checks::{self, Check, CheckOutcome};
use crate::config::{Experiment, T_MIN};
use crate::error::{CliError, CliResult};

/// At most this many tracers enter the diameter table.
pub const DIAMETER_TRACERS: usize = 4096;

#[derive(Clone, Debug)]
pub struct TrackOutput {
    pub anchor: f64,
    pub track: DiffeoTrack,
    pub diameters: Vec<DiameterRow>,
    /// `(t, ‖(χ_t)_* g̃_t − g₀‖)`.
    pub c0: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub exp: Experiment,
    pub provenance: Provenance,
    pub g0: MetricField,
    pub traj: FlowTrajectory,
    pub estimates: Vec<WeakBoundEstimate>,
    pub track: Option<TrackOutput>,
    pub checks: Vec<CheckOutcome>,
}

impl RunOutput {
    pub fn failed_checks(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
    }
}

/// The member of generated data a config asks for.
pub fn select_member(data: &Generated, member: Option<&str>) -> CliResult<MetricField> {
    let Some(m) = member else {
        return Ok(data.primary().clone());
    };
    data.members()
        .into_iter()
        .find(|(label, _)| label == m)
        .map(|(_, g)| g.clone())
        .ok_or_else(|| CliError::Config(format!("generated data has no member `{m}`")))
}

pub fn initial_metric(exp: &Experiment) -> CliResult<(Generated, MetricField)> {
    let data = initial_data::generate(&exp.grid, &exp.generator)?;
    let g0 = select_member(&data, exp.member.as_deref())?;
    Ok((data, g0))
}

/// Flows `g0` against the flat background with the experiment's stepper.
pub fn flow(exp: &Experiment, g0: MetricField) -> CliResult<FlowTrajectory> {
    let bg = MetricField::flat(exp.grid);
    Ok(flow::run_flow(g0, bg, exp.solver, &exp.stepper)?)
}

pub fn execute(exp: &Experiment) -> CliResult<RunOutput> {
    let (data, g0) = initial_metric(exp)?;
    let provenance = initial_data::provenance(&exp.generator, &data)?;
    info!("{}: flowing {} to T = {}", exp.config.name, exp.generator.family, exp.stepper.t_final);
    let traj = flow(exp, g0.clone())?;
    debug!("{}: {} steps", exp.config.name, traj.dt_history.len());

    let mut estimates = if exp.points.is_empty() {
        Vec::new()
    } else {
        weak_bound::weak_lower_bounds(&traj, &exp.points, exp.beta, &exp.c_grid, &exp.t_grid)?
    };
    if let Some(k) = exp.kappa {
        for e in &mut estimates {
            e.test_kappa(k);
        }
    }

    let track = if exp.track_samples.is_empty() {
        None
    } else {
        Some(track(&traj, &g0, &exp.track_samples)?)
    };

    let mut outcomes = Vec::new();
    for check in &exp.checks {
        outcomes.push(run_check(*check, exp, &g0, &traj, &mut estimates)?);
    }
    Ok(RunOutput {
        exp: exp.clone(),
        provenance,
        g0,
        traj,
        estimates,
        track,
        checks: outcomes,
    })
}

pub fn track(traj: &FlowTrajectory, g0: &MetricField, samples: &[f64]) -> CliResult<TrackOutput> {
    let anchor = diffeo::anchor_time(traj)?;
    let track = diffeo::integrate_chi(traj, anchor, samples)?;
    let n = track.tracer_count();
    let stride = n.div_ceil(DIAMETER_TRACERS);
    let tracers: Vec<usize> = (0..n).step_by(stride).collect();
    let diameters = diffeo::diameter_table(&track, &tracers)?;
    let c0 = diffeo::pulled_back_flow(traj, &track)?.c0_distances(g0)?;
    Ok(TrackOutput {
        anchor,
        track,
        diameters,
        c0,
    })
}

fn run_check(
    check: Check,
    exp: &Experiment,
    g0: &MetricField,
    traj: &FlowTrajectory,
    estimates: &mut [WeakBoundEstimate],
) -> CliResult<CheckOutcome> {
    let dim = exp.grid.dim;
    let t_final = exp.stepper.t_final;
    Ok(match check {
        Check::UniversalBound => checks::universal_bound(&traj.series, dim),
        Check::Preservation => {
            let kappa0 = min_scalar(g0)?;
            checks::preservation(&traj.series, dim, kappa0, t_final)
        }
        Check::DerivativeDecay => {
            let h0 = g0.perturbation(&MetricField::flat(exp.grid))?.max_abs();
            checks::derivative_decay(&traj.series, h0, t_final)
        }
        Check::WeakBound => {
            let kappa = exp.kappa.expect("validated: weak-bound has kappa");
            checks::weak_bound(estimates, kappa)
        }
        Check::FlatRecovery => checks::flat_recovery(traj)?,
    })
}

pub fn min_scalar(g: &MetricField) -> CliResult<f64> {
    Ok(geometry::scalar_curvature(g)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// File name of the snapshot at `t`; the time is written in shortest
/// round-trip form so it parses back exactly.
pub fn snapshot_name(t: f64) -> String {
    format!("snapshot_{t:e}.gfb")
}

pub fn parse_snapshot_name(name: &str) -> Option<f64> {
    name.strip_prefix("snapshot_")?.strip_suffix(".gfb")?.parse().ok()
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(CliError::io(format!("cannot create {}", path.display())))
}

/// Fails early (exit 2) if `dir` cannot be created or written.
pub fn ensure_writable(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .and_then(|_| tempfile_probe(dir))
        .map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", dir.display())))
}

fn tempfile_probe(dir: &Path) -> std::io::Result<()> {
    let probe = dir.join(".write-probe");
    File::create(&probe)?;
    fs::remove_file(probe)
}

pub fn write_series<W: Write>(rows: &[SeriesRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,dt,min_R,max_R,grad_h_inf,hess_h_inf")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.t, r.dt, r.min_scalar, r.max_scalar, r.grad_h, r.hess_h)?;
    }
    w.flush()
}

pub fn provenance_json(p: &Provenance) -> serde_json::Value {
    json!({
        "family": p.family.name(),
        "amplitude": p.amplitude,
        "seed": p.seed,
        "eta": p.eta,
        "pair_scale": p.pair_scale,
        "mollify_scales": p.mollify_scales,
        "min_eigenvalue": p.min_eigenvalue,
        "min_scalar": p.min_scalar,
        "kappas": p.kappas,
        "kappa_target": p.kappa_target,
    })
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> CliResult<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io {
        context: format!("writing {name}"),
        source: e.into(),
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(CliError::io(format!("writing {name}")))
}

/// Writes the run directory and returns its path.
pub fn write_run(out: &RunOutput, dir: &Path) -> CliResult<PathBuf> {
    ensure_writable(dir)?;
    let io = |what: &str| CliError::io(format!("writing {what} in {}", dir.display()));
    let mut w = create(dir, "config.toml")?;
    w.write_all(out.exp.config.echo().as_bytes())
        .and_then(|_| w.flush())
        .map_err(io("config.toml"))?;
    write_series(&out.traj.series, create(dir, "series.csv")?).map_err(io("series.csv"))?;
    write_json(dir, "provenance.json", &provenance_json(&out.provenance))?;
    if out.exp.config.outputs.snapshots {
        for s in &out.traj.states {
            s.g.write_gfb(&dir.join(snapshot_name(s.t)))?;
        }
    }
    if !out.estimates.is_empty() {
        let mut w = create(dir, "estimates.txt")?;
        for e in &out.estimates {
            writeln!(w, "{}", e.report()).map_err(io("estimates.txt"))?;
        }
        let mut w = create(dir, "estimates.csv")?;
        let dim = out.exp.grid.dim;
        let coords: Vec<String> = (1..=dim).map(|i| format!("x_{i}")).collect();
        let result = (|| {
            writeln!(w, "{},estimate,kappa,pass,endpoint_minimizer", coords.join(","))?;
            for e in &out.estimates {
                let x: Vec<String> = e.point[..dim].iter().map(f64::to_string).collect();
                let (k, pass) = match e.kappa_test {
                    Some((k, p)) => (k.to_string(), p.to_string()),
                    None => (String::new(), String::new()),
                };
                writeln!(w, "{},{},{k},{pass},{}", x.join(","), e.estimate, e.endpoint_minimizer)?;
            }
            w.flush()
        })();
        result.map_err(io("estimates.csv"))?;
    }
    if let Some(t) = &out.track {
        t.track.write_csv(create(dir, "track.csv")?)?;
        diffeo::write_diameter_csv(&t.diameters, create(dir, "diameter.csv")?)?;
        let mut w = create(dir, "c0_distance.csv")?;
        let result = (|| {
            writeln!(w, "t,c0_distance")?;
            for (t, d) in &t.c0 {
                writeln!(w, "{t},{d}")?;
            }
            w.flush()
        })();
        result.map_err(io("c0_distance.csv"))?;
    }
    let summary = json!({
        "name": out.exp.config.name,
        "steps": out.traj.dt_history.len(),
        "anchor_time": out.track.as_ref().map(|t| t.anchor),
        "sqrt_t_constant": out.track.as_ref().map(|t| diffeo::sqrt_t_constant(&t.diameters, T_MIN, out.exp.stepper.t_final)),
        "checks": out.checks,
        "pass": out.checks.iter().all(|c| c.pass),
    });
    write_json(dir, "checks.json", &summary)?;
    Ok(dir.to_path_buf())
}

/// `run` for one config: execute, write, and turn failed checks into an
/// error carrying their names.
pub fn run_experiment(exp: &Experiment, root: Option<&Path>) -> CliResult<RunOutput> {
    let dir = exp.run_dir(root);
    ensure_writable(&dir)?;
    let out = execute(exp)?;
    write_run(&out, &dir)?;
    for c in &out.checks {
        info!("{}: {} {} ({})", exp.config.name, c.name, if c.pass { "pass" } else { "FAIL" }, c.detail);
    }
    Ok(out)
}
