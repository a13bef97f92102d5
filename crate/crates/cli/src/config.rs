//! Experiment configs: the TOML schema, its validation into solver types,
//! and the echo written next to every run.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use riccilab::flow::{Scheme, Solver, StepperConfig};
use riccilab::initial_data::{Family, GeneratorSpec};
use riccilab::{diffeo, weak_bound, GridSpec};
use serde::{Deserialize, Serialize};

use crate::checks::Check;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Named invariant checks run after the flow.
    #[serde(default)]
    pub checks: Vec<String>,
    pub grid: GridSection,
    pub generator: GeneratorSection,
    pub stepper: StepperSection,
    #[serde(default)]
    pub evaluator: EvaluatorSection,
    #[serde(default)]
    pub outputs: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub points_per_axis: usize,
    #[serde(default = "default_period")]
    pub period: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub family: String,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_pair_scale")]
    pub pair_scale: f64,
    #[serde(default = "default_mollify_scales")]
    pub mollify_scales: Vec<f64>,
    #[serde(default = "default_base")]
    pub base: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_target: Option<f64>,
    /// Which metric of a pair or sequence to flow: `first`/`second`,
    /// `base`/`element<i>`. Defaults to the first of a pair and the finest
    /// element of a sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_eps_run")]
    pub eps_run: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Adds log-spaced snapshots from 1e-4 to T at this many per decade.
    #[serde(default)]
    pub snapshots_per_decade: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatorSection {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(rename = "C_grid", default = "default_c_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "weak_bound::default_t_grid")]
    pub t_grid: Vec<f64>,
    /// Points at which the weak lower bound is evaluated; none skips it.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "yes")]
    pub snapshots: bool,
    /// Integrate the gauge diffeomorphisms and write tracer tables.
    #[serde(default)]
    pub track: bool,
}

fn default_period() -> f64 {
    TAU
}
fn default_eta() -> f64 {
    0.5
}
fn default_pair_scale() -> f64 {
    1.0
}
fn default_mollify_scales() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}
fn default_base() -> String {
    Family::LipschitzKink.name().into()
}
fn default_solver() -> String {
    "ricci-deturck".into()
}
fn default_scheme() -> String {
    "explicit-rk2".into()
}
fn default_cfl() -> f64 {
    0.25
}
fn default_eps_run() -> f64 {
    0.1
}
fn default_beta() -> f64 {
    weak_bound::DEFAULT_BETA
}
fn default_c_grid() -> Vec<f64> {
    weak_bound::DEFAULT_C_GRID.to_vec()
}
fn default_directory() -> PathBuf {
    PathBuf::from("runs")
}
fn yes() -> bool {
    true
}

impl Default for EvaluatorSection {
    fn default() -> Self {
        Self {
            beta: default_beta(),
            c_grid: default_c_grid(),
            t_grid: weak_bound::default_t_grid(),
            points: Vec::new(),
            kappa: None,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            snapshots: true,
            track: false,
        }
    }
}

/// Smallest time of tracer samples and of the derivative-decay window.
pub const T_MIN: f64 = 1e-4;

/// Samples per decade used for tracking.
pub const TRACK_PER_DECADE: u32 = 16;

/// A config checked against every solver precondition.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub grid: GridSpec,
    pub generator: GeneratorSpec,
    pub member: Option<String>,
    pub solver: Solver,
    /// Snapshot times include the evaluator's t grid and tracker samples.
    pub stepper: StepperConfig,
    pub beta: f64,
    pub c_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    pub kappa: Option<f64>,
    pub checks: Vec<Check>,
    pub track_samples: Vec<f64>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn parse_family(s: &str) -> CliResult<Family> {
    s.parse().map_err(|e: riccilab::Error| bad(e.to_string()))
}

pub fn parse_solver(s: &str) -> CliResult<Solver> {
    match s {
        "ricci-deturck" => Ok(Solver::RicciDeTurck),
        "perturbation" => Ok(Solver::Perturbation),
        other => Err(bad(format!("unknown solver `{other}`"))),
    }
}

pub fn parse_scheme(s: &str) -> CliResult<Scheme> {
    match s {
        "explicit-rk2" => Ok(Scheme::ExplicitRk2),
        "explicit-euler" => Ok(Scheme::ExplicitEuler),
        other => Err(bad(format!("unknown scheme `{other}`"))),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    /// Every field written out, defaults included.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config fields are all representable in TOML")
    }

    pub fn validate(&self) -> CliResult<Experiment> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(bad(format!(
                "name `{}` must be non-empty and use only [A-Za-z0-9._-]",
                self.name
            )));
        }
        let g = &self.grid;
        let grid = GridSpec::new(g.dim, g.points_per_axis, g.period)?;

        let gen = &self.generator;
        let mut generator = GeneratorSpec::new(parse_family(&gen.family)?, gen.amplitude);
        generator.seed = gen.seed;
        generator.eta = gen.eta;
        generator.pair_scale = gen.pair_scale;
        generator.mollify_scales = gen.mollify_scales.clone();
        generator.base = parse_family(&gen.base)?;
        generator.kappa_target = gen.kappa_target;
        generator.validate()?;
        if let Some(m) = &gen.member {
            let ok = match generator.family {
                Family::SecondOrderPair => m == "first" || m == "second",
                Family::MollifiedSequence => {
                    m == "base"
                        || m.strip_prefix("element")
                            .and_then(|i| i.parse::<usize>().ok())
                            .is_some_and(|i| i < gen.mollify_scales.len())
                }
                _ => false,
            };
            if !ok {
                return Err(bad(format!("member `{m}` does not exist for family `{}`", gen.family)));
            }
        }

        let st = &self.stepper;
        let solver = parse_solver(&st.solver)?;
        let mut stepper = StepperConfig::new(st.t_final);
        stepper.scheme = parse_scheme(&st.scheme)?;
        stepper.cfl_safety = st.cfl_safety;
        stepper.eps_run = st.eps_run;
        stepper.snapshot_times = st.snapshot_times.clone();
        stepper.validate()?;

        let ev = &self.evaluator;
        let mut points = Vec::with_capacity(ev.points.len());
        for p in &ev.points {
            if p.len() != grid.dim || p.iter().any(|v| !v.is_finite()) {
                return Err(bad(format!("evaluator point {p:?} needs {} finite coordinates", grid.dim)));
            }
            let mut x = [0.0; 3];
            x[..grid.dim].copy_from_slice(p);
            points.push(x);
        }
        let t_grid = weak_bound::validate_grids(ev.beta, &ev.c_grid, &ev.t_grid)?;
        if !points.is_empty() && t_grid[0] > st.t_final {
            return Err(bad(format!("t grid reaches {} beyond T = {}", t_grid[0], st.t_final)));
        }
        if let Some(k) = ev.kappa {
            if !k.is_finite() {
                return Err(bad("kappa must be finite"));
            }
        }

        let checks = self
            .checks
            .iter()
            .map(|c| c.parse::<Check>())
            .collect::<CliResult<Vec<_>>>()?;
        for c in &checks {
            c.validate(self, &generator, &points)?;
        }

        let track_samples = if self.outputs.track {
            if st.t_final <= T_MIN {
                return Err(bad(format!("tracking needs T > {T_MIN}")));
            }
            diffeo::log_spaced(T_MIN, st.t_final, TRACK_PER_DECADE as usize)
        } else {
            Vec::new()
        };
        if st.snapshots_per_decade > 0 {
            if st.t_final <= T_MIN {
                return Err(bad(format!("snapshots_per_decade needs T > {T_MIN}")));
            }
            stepper
                .snapshot_times
                .extend(diffeo::log_spaced(T_MIN, st.t_final, st.snapshots_per_decade as usize));
        }
        if !points.is_empty() {
            stepper.snapshot_times.extend(&t_grid);
        }
        stepper.snapshot_times.extend(&track_samples);
        stepper.snapshot_times.sort_by(f64::total_cmp);
        stepper.snapshot_times.dedup();

        Ok(Experiment {
            config: self.clone(),
            grid,
            generator,
            member: gen.member.clone(),
            solver,
            stepper,
            beta: ev.beta,
            c_grid: ev.c_grid.clone(),
            t_grid,
            points,
            kappa: ev.kappa,
            checks,
            track_samples,
        })
    }
}

impl Experiment {
    /// The directory this run writes to under `root` (the config's own
    /// output directory when `root` is `None`).
    pub fn run_dir(&self, root: Option<&Path>) -> PathBuf {
        root.unwrap_or(&self.config.outputs.directory).join(&self.config.name)
    }
}
