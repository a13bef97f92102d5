use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use riccilab_cli::compare::{self, DecayOptions, Mode};
use riccilab_cli::config::ExperimentConfig;
use riccilab_cli::pipeline;
use riccilab_cli::suites::{self, Lab};
use riccilab_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "riccilab", version, about = "Ricci-DeTurck flow experiments on periodic grids")]
struct Cli {
    /// Worker threads; independent configs of `run` are spread over them.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output root (overrides the configs' own output directories).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace the generator seed of every config.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// -v for progress, -vv for details.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, flow, evaluate and check one or more configs.
    Run { configs: Vec<PathBuf> },
    /// Compare two run directories.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long)]
        mode: String,
        /// Ball exponent for scalar-decay (default: run A's evaluator beta).
        #[arg(long)]
        beta: Option<f64>,
        /// Ball radius constant for scalar-decay.
        #[arg(long, default_value_t = 1.0)]
        radius_c: f64,
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        t_max: f64,
    },
    /// Run an acceptance suite by name, or `all`.
    Suite { name: String },
    /// Write the initial data of a config (GFB1 plus provenance) only.
    Generate { config: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.generator.seed = s;
    }
    Ok(cfg)
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        pipeline::ensure_writable(dir)?;
    }
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text + "\n").map_err(CliError::io(format!("cannot write {}", path.display())))
}

fn cmd_run(cli: &Cli, paths: &[PathBuf]) -> CliResult<()> {
    if paths.is_empty() {
        return Err(CliError::Config("run needs at least one config".into()));
    }
    // Validate everything before any compute.
    let mut exps = Vec::new();
    for p in paths {
        exps.push(load(p, cli.seed_override)?.validate()?);
    }
    let mut dirs: Vec<PathBuf> = exps.iter().map(|e| e.run_dir(cli.out.as_deref())).collect();
    for d in &dirs {
        pipeline::ensure_writable(d)?;
    }
    dirs.sort();
    if dirs.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Config("two configs write to the same run directory".into()));
    }
    let root = cli.out.as_deref();
    let results: Vec<CliResult<_>> = fan_out(&exps, |e| pipeline::run_experiment(e, root));
    let mut failed = Vec::new();
    let mut first_err = None;
    for (e, r) in exps.iter().zip(results) {
        match r {
            Ok(out) => {
                for c in &out.checks {
                    println!("{} {}: {} ({})", e.config.name, c.name, if c.pass { "pass" } else { "FAIL" }, c.detail);
                }
                for est in &out.estimates {
                    if let Some((k, pass)) = est.kappa_test {
                        println!("{} estimate {:.6} at {:?} vs kappa {k}: {}", e.config.name, est.estimate, &est.point[..e.grid.dim], if pass { "pass" } else { "fail" });
                    } else {
                        println!("{} estimate {:.6} at {:?}", e.config.name, est.estimate, &est.point[..e.grid.dim]);
                    }
                }
                failed.extend(out.failed_checks().into_iter().map(|c| format!("{}:{c}", e.config.name)));
            }
            Err(err) => {
                error!("{}: {err}", e.config.name);
                first_err.get_or_insert(err);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Checks(failed))
    }
}

#[cfg(feature = "parallel")]
fn fan_out<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn fan_out<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

fn cmd_generate(cli: &Cli, path: &Path) -> CliResult<()> {
    let exp = load(path, cli.seed_override)?.validate()?;
    let dir = exp.run_dir(cli.out.as_deref());
    pipeline::ensure_writable(&dir)?;
    let data = riccilab::initial_data::generate(&exp.grid, &exp.generator)?;
    for (label, g) in data.members() {
        let file = dir.join(format!("{label}.gfb"));
        g.write_gfb(&file)?;
        println!("{}", file.display());
    }
    let prov = riccilab::initial_data::provenance(&exp.generator, &data)?;
    write_json(&dir.join("provenance.json"), &pipeline::provenance_json(&prov))
}

fn cmd_suite(cli: &Cli, name: &str) -> CliResult<()> {
    let lab = Lab::new();
    let outcomes = suites::run_suite(name, &lab)?;
    for o in &outcomes {
        println!("{}", o.line());
        for d in &o.details {
            println!("    {d}");
        }
    }
    let summary = suites::summary_json(&outcomes);
    if let Some(out) = &cli.out {
        write_json(&out.join(format!("suite_{name}.json")), &summary)?;
    } else {
        println!("{}", serde_json::to_string(&summary).expect("json values serialize"));
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Checks(failed))
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Run { configs } => cmd_run(cli, configs),
        Command::Compare {
            run_a,
            run_b,
            mode,
            beta,
            radius_c,
            t_min,
            t_max,
        } => {
            let mode: Mode = mode.parse()?;
            let opts = DecayOptions {
                beta: *beta,
                c: *radius_c,
                point: None,
                t_min: *t_min,
                t_max: *t_max,
            };
            let report = compare::compare(run_a, run_b, mode, &opts)?;
            print!("{}", report.render());
            if let Some(out) = &cli.out {
                let value = serde_json::to_value(&report).expect("report serializes");
                write_json(&out.join(format!("compare_{}.json", mode.name())), &value)?;
            }
            Ok(())
        }
        Command::Suite { name } => cmd_suite(cli, name),
        Command::Generate { config } => cmd_generate(cli, config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    #[cfg(feature = "parallel")]
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            error!("cannot size the worker pool: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
