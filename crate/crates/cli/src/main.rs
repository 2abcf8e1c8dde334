use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dprgda::diagnostics::{sosp_check, EigenSettings};
use dprgda::experiment::{compare, run_experiment, write_outputs, ExperimentConfig, SavedIterate};
use dprgda::problems::{MatrixSensingInstance, MatrixSensingSpec};
use dprgda::RandomSource;

#[derive(Parser)]
#[command(name = "dprgda", version, about = "Private recursive gradient descent-ascent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a matrix-sensing instance file.
    Generate(GenerateArgs),
    /// Run one method and write trajectory, summary and budget report.
    Run(RunArgs),
    /// Run several methods on one shared instance and rank them.
    Compare(CompareArgs),
    /// Second-order stationarity certificate of a saved iterate.
    Check(CheckArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 20)]
    p: usize,
    #[arg(long, default_value_t = 20)]
    q: usize,
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 0.01)]
    sigma_noise: f64,
    #[arg(long, default_value_t = 1.0)]
    target_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

/// Options shared by `run` and `compare`; flags override config-file values.
#[derive(Args, Clone, Default)]
struct Overrides {
    /// Config file: JSON or `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the file and before flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    eta_h: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    #[arg(long)]
    t_thres: Option<String>,
    #[arg(long)]
    d_bar: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    inner_k: Option<String>,
    #[arg(long)]
    period_q: Option<String>,
    #[arg(long)]
    s1: Option<String>,
    #[arg(long)]
    s2: Option<String>,
    #[arg(long)]
    big_t: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    eig_every: Option<String>,
    /// Disable privacy noise.
    #[arg(long)]
    no_private: bool,
    /// Use the whole dataset for every batch.
    #[arg(long)]
    full_batch: bool,
}

impl Overrides {
    fn build(&self) -> Result<ExperimentConfig, dprgda::Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| dprgda::Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k, v)?;
        }
        let flags = [
            ("instance", &self.instance),
            ("eta", &self.eta),
            ("eta_h", &self.eta_h),
            ("radius", &self.radius),
            ("t_thres", &self.t_thres),
            ("d_bar", &self.d_bar),
            ("alpha", &self.alpha),
            ("lambda", &self.lambda),
            ("inner_k", &self.inner_k),
            ("period_q", &self.period_q),
            ("s1", &self.s1),
            ("s2", &self.s2),
            ("big_t", &self.big_t),
            ("eps", &self.eps),
            ("delta", &self.delta),
            ("seed", &self.seed),
            ("eig_every", &self.eig_every),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        if self.no_private {
            cfg.private = false;
        }
        if self.full_batch {
            cfg.full_batch = true;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    method: Option<String>,
    /// Output directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// One config file per compared run; overrides apply to all of them.
    #[arg(long = "run-config")]
    run_configs: Vec<PathBuf>,
    /// Comma-separated methods to compare when no run configs are given.
    #[arg(long, value_delimiter = ',', default_value = "dp-rgda,dp-spider-min,dp-sgda")]
    methods: Vec<String>,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    instance: PathBuf,
    /// `iterate.json` written by `run`.
    #[arg(long)]
    iterate: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    rho_phi: f64,
    #[arg(long, default_value_t = 5e-4)]
    h: f64,
    #[arg(long, default_value_t = 500)]
    maxiter: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(dprgda::Error::from)?)
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let spec = MatrixSensingSpec {
        p: a.p,
        q: a.q,
        rank: a.rank,
        n: a.n,
        sigma_noise: a.sigma_noise,
        target_scale: a.target_scale,
    };
    let inst = MatrixSensingInstance::generate(&mut RandomSource::new(a.seed), &spec)?;
    fs::write(&a.out, serde_json::to_string(&inst)?).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{}", serde_json::json!({ "instance": a.out, "dim_x": inst.dim_x(), "n": inst.n }));
    Ok(())
}

fn run(a: &RunArgs) -> Result<()> {
    let mut cfg = a.overrides.build()?;
    if let Some(m) = &a.method {
        cfg.set("method", m)?;
    }
    if let Some(o) = &a.output {
        cfg.output = Some(o.clone());
    }
    let result = run_experiment(&cfg)?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    write_outputs(&result, &dir).with_context(|| format!("writing outputs to {}", dir.display()))?;
    println!("{}", serde_json::to_string_pretty(&result.summary)?);
    Ok(())
}

fn compare_cmd(a: &CompareArgs) -> Result<()> {
    let configs = if a.run_configs.is_empty() {
        a.methods
            .iter()
            .map(|m| {
                let mut c = a.overrides.build()?;
                c.set("method", m)?;
                Ok(c)
            })
            .collect::<Result<Vec<_>, dprgda::Error>>()?
    } else {
        a.run_configs
            .iter()
            .map(|p| {
                let o = Overrides { config: Some(p.clone()), ..a.overrides.clone() };
                o.build()
            })
            .collect::<Result<Vec<_>, dprgda::Error>>()?
    };
    let cmp = compare(&configs)?;
    let dir = a.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    cmp.write(&dir).with_context(|| format!("writing outputs to {}", dir.display()))?;
    print!("{}", cmp.to_table());
    Ok(())
}

fn check(a: &CheckArgs) -> Result<()> {
    let inst: MatrixSensingInstance = read_json(&a.instance)?;
    inst.validate()?;
    let saved: SavedIterate = read_json(&a.iterate)?;
    if saved.x.len() != inst.dim_x() {
        return Err(dprgda::Error::DimensionMismatch {
            what: "iterate",
            expected: inst.dim_x(),
            actual: saved.x.len(),
        }
        .into());
    }
    let settings = EigenSettings { h: a.h, maxiter: a.maxiter, tol: a.tol, ..Default::default() };
    let cert = sosp_check(&inst, &saved.x, a.alpha, a.rho_phi, &settings)?;
    println!("{}", serde_json::to_string_pretty(&cert)?);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    match err.downcast_ref::<dprgda::Error>() {
        Some(e @ dprgda::Error::InfeasibleBudget(_)) => (3, e.kind()),
        Some(
            e @ (dprgda::Error::InvalidParameter { .. }
            | dprgda::Error::Config(_)
            | dprgda::Error::DimensionMismatch { .. }),
        ) => (2, e.kind()),
        Some(e) => (1, e.kind()),
        None => (1, "error"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = exit_code(&err);
            eprintln!("{}", serde_json::json!({ "error": kind, "message": format!("{err:#}") }));
            ExitCode::from(code)
        }
    }
}
