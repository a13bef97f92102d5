//! Comparisons between two run directories.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use riccilab::duhamel::{self, HeatKernelSpec};
use riccilab::initial_data::pair_center;
use riccilab::stats::{self, LineFit};
use riccilab::weak_bound::geodesic_distance_within;
use riccilab::{geometry, MetricField};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::pipeline::parse_snapshot_name;

/// Picard iterations allowed for the Duhamel reference.
pub const DUHAMEL_ITERATIONS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ScalarDecay,
    TrajectoryDiff,
    DuhamelVsStepper,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::ScalarDecay => "scalar-decay",
            Mode::TrajectoryDiff => "trajectory-diff",
            Mode::DuhamelVsStepper => "duhamel-vs-stepper",
        }
    }
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        [Mode::ScalarDecay, Mode::TrajectoryDiff, Mode::DuhamelVsStepper]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown compare mode `{s}`")))
    }
}

/// A run read back from disk.
pub struct LoadedRun {
    pub dir: PathBuf,
    pub exp: Experiment,
    /// Snapshots sorted by time.
    pub snapshots: Vec<(f64, MetricField)>,
}

impl LoadedRun {
    pub fn at(&self, t: f64) -> Option<&MetricField> {
        self.snapshots.iter().find(|(s, _)| *s == t).map(|(_, g)| g)
    }
}

pub fn load_run(dir: &Path) -> CliResult<LoadedRun> {
    let exp = ExperimentConfig::load(&dir.join("config.toml"))?.validate()?;
    let entries = std::fs::read_dir(dir).map_err(CliError::io(format!("cannot list {}", dir.display())))?;
    let mut snapshots = Vec::new();
    for entry in entries {
        let path = entry.map_err(CliError::io(format!("cannot list {}", dir.display())))?.path();
        let Some(t) = path.file_name().and_then(|n| n.to_str()).and_then(parse_snapshot_name) else {
            continue;
        };
        snapshots.push((t, MetricField::read_gfb(&path)?));
    }
    snapshots.sort_by(|a, b| a.0.total_cmp(&b.0));
    if snapshots.is_empty() {
        return Err(CliError::Incompatible(format!("{} holds no snapshots", dir.display())));
    }
    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        exp,
        snapshots,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    pub t: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

impl From<&LineFit> for SlopeFit {
    fn from(f: &LineFit) -> Self {
        Self {
            slope: f.slope,
            ci_low: f.slope_ci.0,
            ci_high: f.slope_ci.1,
            points: f.points,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub mode: Mode,
    pub rows: Vec<GapRow>,
    /// Log-log fit of the gaps (scalar-decay only).
    pub fit: Option<SlopeFit>,
    /// The gaps carry no slope information (e.g. identical runs).
    pub degenerate: bool,
    pub note: String,
}

impl CompareReport {
    pub fn max_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.gap).fold(0.0, f64::max)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode {}", self.mode.name());
        let _ = writeln!(s, "{:>14} {:>14}", "t", "gap");
        for r in &self.rows {
            let _ = writeln!(s, "{:>14.6e} {:>14.6e}", r.t, r.gap);
        }
        if let Some(f) = &self.fit {
            let _ = writeln!(
                s,
                "slope {:.4}  95% band [{:.4}, {:.4}]  ({} points)",
                f.slope, f.ci_low, f.ci_high, f.points
            );
        }
        if self.degenerate {
            let _ = writeln!(s, "slope fit rejected: degenerate gaps");
        }
        if !self.note.is_empty() {
            let _ = writeln!(s, "{}", self.note);
        }
        s
    }
}

/// Parameters of the scalar-decay comparison.
#[derive(Clone, Debug)]
pub struct DecayOptions {
    /// Ball exponent; the first run's evaluator β when `None`.
    pub beta: Option<f64>,
    /// Ball radius is `c·t^β`.
    pub c: f64,
    /// Ball centre; the pair centre when `None`.
    pub point: Option<[f64; 3]>,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            beta: None,
            c: 1.0,
            point: None,
            t_min: 0.0,
            t_max: f64::INFINITY,
        }
    }
}

/// `sup |R(ga) − R(gb)|` over the `ga`-geodesic ball of `radius` about `x0`.
pub fn scalar_gap(ga: &MetricField, gb: &MetricField, x0: &[f64], radius: f64) -> CliResult<f64> {
    let ra = geometry::scalar_curvature(ga)?;
    let rb = geometry::scalar_curvature(gb)?;
    let ball = geodesic_distance_within(ga, &x0[..ga.grid().dim], radius)?;
    Ok(ball
        .dist
        .iter()
        .enumerate()
        .filter(|(_, d)| **d <= radius)
        .map(|(p, _)| (ra[p] - rb[p]).abs())
        .fold(0.0, f64::max))
}

/// Log-log fit of the gaps; `None` with `degenerate = true` when fewer
/// than three gaps are positive or the fit itself is degenerate.
pub fn decay_fit(rows: &[GapRow]) -> CliResult<(Option<LineFit>, bool)> {
    let pos: Vec<&GapRow> = rows.iter().filter(|r| r.gap > 0.0).collect();
    if pos.len() < 3 {
        return Ok((None, true));
    }
    let t: Vec<f64> = pos.iter().map(|r| r.t).collect();
    let g: Vec<f64> = pos.iter().map(|r| r.gap).collect();
    let fit = stats::loglog_fit(&t, &g)?;
    let degenerate = fit.degenerate;
    Ok((Some(fit), degenerate))
}

fn common_times(a: &LoadedRun, b: &LoadedRun) -> CliResult<Vec<f64>> {
    a.exp.grid.ensure_same(&b.exp.grid, "compared runs").map_err(|e| CliError::Incompatible(e.to_string()))?;
    let times: Vec<f64> = a
        .snapshots
        .iter()
        .map(|(t, _)| *t)
        .filter(|t| *t > 0.0 && b.at(*t).is_some())
        .collect();
    if times.is_empty() {
        return Err(CliError::Incompatible(format!(
            "{} and {} share no positive snapshot time",
            a.dir.display(),
            b.dir.display()
        )));
    }
    Ok(times)
}

pub fn scalar_decay(a: &LoadedRun, b: &LoadedRun, opts: &DecayOptions) -> CliResult<CompareReport> {
    let beta = opts.beta.unwrap_or(a.exp.beta);
    let x0 = opts.point.unwrap_or_else(|| pair_center(&a.exp.grid));
    let mut rows = Vec::new();
    for t in common_times(a, b)? {
        if t < opts.t_min || t > opts.t_max {
            continue;
        }
        let radius = opts.c * t.powf(beta);
        let gap = scalar_gap(a.at(t).expect("common"), b.at(t).expect("common"), &x0, radius)?;
        rows.push(GapRow { t, gap });
    }
    let (fit, degenerate) = decay_fit(&rows)?;
    Ok(CompareReport {
        mode: Mode::ScalarDecay,
        fit: fit.as_ref().map(SlopeFit::from),
        rows,
        degenerate,
        note: format!("ball radius {}·t^{beta} about {:?}", opts.c, &x0[..a.exp.grid.dim]),
    })
}

pub fn trajectory_diff(a: &LoadedRun, b: &LoadedRun) -> CliResult<CompareReport> {
    let rows = common_times(a, b)?
        .into_iter()
        .map(|t| {
            let gap = a.at(t).expect("common").max_abs_diff(b.at(t).expect("common"))?;
            Ok(GapRow { t, gap })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(CompareReport {
        mode: Mode::TrajectoryDiff,
        degenerate: rows.iter().all(|r| r.gap == 0.0),
        rows,
        fit: None,
        note: String::new(),
    })
}

/// Duhamel solution from `a`'s initial perturbation against `b`'s
/// snapshots; both runs need a flat background.
pub fn duhamel_vs_stepper(a: &LoadedRun, b: &LoadedRun) -> CliResult<CompareReport> {
    a.exp.grid.ensure_same(&b.exp.grid, "compared runs").map_err(|e| CliError::Incompatible(e.to_string()))?;
    let grid = a.exp.grid;
    let g0 = a
        .at(0.0)
        .ok_or_else(|| CliError::Incompatible(format!("{} has no t = 0 snapshot", a.dir.display())))?;
    let flat = MetricField::flat(grid);
    let h0 = g0.perturbation(&flat)?;
    let times: Vec<f64> = b.snapshots.iter().map(|(t, _)| *t).filter(|t| *t > 0.0).collect();
    if times.is_empty() {
        return Err(CliError::Incompatible(format!("{} has no positive snapshot", b.dir.display())));
    }
    let sol = duhamel::duhamel_iterate(&h0, &times, &HeatKernelSpec::new(grid), DUHAMEL_ITERATIONS)?;
    let rows = times
        .iter()
        .map(|&t| {
            let h = b.at(t).expect("listed").perturbation(&flat)?;
            Ok(GapRow {
                t,
                gap: sol.at(t)?.max_abs_diff(&h)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(CompareReport {
        mode: Mode::DuhamelVsStepper,
        rows,
        fit: None,
        degenerate: false,
        note: format!("{} Picard iterations", sol.iterations_used),
    })
}

pub fn compare(a: &Path, b: &Path, mode: Mode, opts: &DecayOptions) -> CliResult<CompareReport> {
    let (ra, rb) = (load_run(a)?, load_run(b)?);
    match mode {
        Mode::ScalarDecay => scalar_decay(&ra, &rb, opts),
        Mode::TrajectoryDiff => trajectory_diff(&ra, &rb),
        Mode::DuhamelVsStepper => duhamel_vs_stepper(&ra, &rb),
    }
}
