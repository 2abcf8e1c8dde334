//! Experiment configuration, single runs, multi-method comparisons and
//! their file outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{dp_sgda, dp_spider_min, SgdaSteps};
use crate::diagnostics::{certificate, EigenMethod, EigenSettings, Evaluator, SospCertificate};
use crate::error::{Error, Result};
use crate::escape::{run, OutputSource, RunHooks, StopReason};
use crate::params::{AlgoParams, ClipPlacement};
use crate::privacy::{calibrate_for, BudgetReport, Calibration, IncrementalSensitivity, MethodKind, PrivacyBudget, PrivacyConfig};
use crate::problems::{MatrixSensingInstance, MatrixSensingSpec, ResidualLoss};
use crate::rng::RandomSource;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub problem: MatrixSensingSpec,
    /// Load the instance from this file instead of generating it.
    pub instance: Option<PathBuf>,
    /// Seed of instance generation; defaults to `seed`.
    pub instance_seed: Option<u64>,
    pub method: MethodKind,
    pub params: AlgoParams,
    /// Replace both batch sizes by the sample count.
    pub full_batch: bool,
    pub private: bool,
    pub epsilon: f64,
    pub delta: f64,
    pub calibration: Calibration,
    pub incremental: IncrementalSensitivity,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub eigen: EigenSettings,
    /// Estimate `lambda_min` every this many iterations (0: final point only).
    pub eig_every: usize,
    pub sgda: SgdaSteps,
    /// Step size of SPIDER minimization.
    pub spider_eta: f64,
    /// Hessian-Lipschitz constant used by the certificate.
    pub rho_phi: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: MatrixSensingSpec::default(),
            instance: None,
            instance_seed: None,
            method: MethodKind::DpRgda,
            params: AlgoParams::default(),
            full_batch: false,
            private: true,
            epsilon: 2.0,
            delta: 1e-6,
            calibration: Calibration::default(),
            incremental: IncrementalSensitivity::default(),
            seed: 0,
            output: None,
            eigen: EigenSettings::default(),
            eig_every: 1,
            sgda: SgdaSteps::default(),
            spider_eta: 0.005,
            rho_phi: 1.0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse {value:?} for {key} as a boolean"))),
    }
}

impl MethodKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "dp-rgda" => Ok(MethodKind::DpRgda),
            "dp-sgda" => Ok(MethodKind::DpSgda),
            "dp-spider-min" => Ok(MethodKind::DpSpiderMin),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

impl ExperimentConfig {
    /// Sets one option by name; `-` and `_` are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        let p = &mut self.params;
        match k {
            "p" => self.problem.p = parse(k, value)?,
            "q" => self.problem.q = parse(k, value)?,
            "rank" | "r_rank" => self.problem.rank = parse(k, value)?,
            "n" => self.problem.n = parse(k, value)?,
            "sigma_noise" => self.problem.sigma_noise = parse(k, value)?,
            "target_scale" => self.problem.target_scale = parse(k, value)?,
            "instance" => self.instance = Some(PathBuf::from(value.trim())),
            "instance_seed" => self.instance_seed = Some(parse(k, value)?),
            "method" => self.method = MethodKind::parse(value)?,
            "eta" => p.eta = parse(k, value)?,
            "eta_h" => p.eta_h = parse(k, value)?,
            "radius" | "r" => p.radius = parse(k, value)?,
            "t_thres" => p.t_thres = parse(k, value)?,
            "d_bar" => p.d_bar = parse(k, value)?,
            "alpha" => p.alpha = parse(k, value)?,
            "lambda" => p.lambda = parse(k, value)?,
            "inner_k" => p.inner_k = parse(k, value)?,
            "period_q" => p.period_q = parse(k, value)?,
            "s1" => p.s1 = parse(k, value)?,
            "s2" => p.s2 = parse(k, value)?,
            "big_t" => p.big_t = parse(k, value)?,
            "clip" => {
                p.clip_refresh = parse(k, value)?;
                p.clip_incremental = p.clip_refresh;
            }
            "clip_refresh" => p.clip_refresh = parse(k, value)?,
            "clip_incremental" => p.clip_incremental = parse(k, value)?,
            "clip_placement" => {
                p.clip_placement = match value.trim() {
                    "per-sample" => ClipPlacement::PerSample,
                    "aggregate" => ClipPlacement::Aggregate,
                    other => return Err(Error::Config(format!("unknown clip placement {other:?}"))),
                }
            }
            "full_batch" => self.full_batch = parse_bool(k, value)?,
            "private" => self.private = parse_bool(k, value)?,
            "eps" | "epsilon" => self.epsilon = parse(k, value)?,
            "delta" => self.delta = parse(k, value)?,
            "calibration" => {
                self.calibration = match value.trim() {
                    "accountant" => Calibration::default(),
                    "closed-form" | "formula" => Calibration::ClosedForm { constant: 1.0 },
                    other => return Err(Error::Config(format!("unknown calibration {other:?}"))),
                }
            }
            "noise_constant" => match &mut self.calibration {
                Calibration::ClosedForm { constant } => *constant = parse(k, value)?,
                Calibration::Accountant { .. } => {
                    return Err(Error::Config("noise_constant requires calibration = closed-form".into()))
                }
            },
            "delta_prime_fraction" => match &mut self.calibration {
                Calibration::Accountant { delta_prime_fraction } => *delta_prime_fraction = parse(k, value)?,
                Calibration::ClosedForm { .. } => {
                    return Err(Error::Config("delta_prime_fraction requires calibration = accountant".into()))
                }
            },
            "lipschitz" => {
                self.incremental = IncrementalSensitivity::LipschitzScaled { lipschitz: parse(k, value)? }
            }
            "seed" => self.seed = parse(k, value)?,
            "output" => self.output = Some(PathBuf::from(value.trim())),
            "h" => self.eigen.h = parse(k, value)?,
            "maxiter" => self.eigen.maxiter = parse(k, value)?,
            "tol" => self.eigen.tol = parse(k, value)?,
            "eig_method" => {
                self.eigen.method = match value.trim() {
                    "lanczos" => EigenMethod::Lanczos,
                    "shifted-power" | "power" => EigenMethod::ShiftedPower,
                    other => return Err(Error::Config(format!("unknown eigensolver {other:?}"))),
                }
            }
            "eig_every" => self.eig_every = parse(k, value)?,
            "sgda_eta_x" => self.sgda.eta_x = parse(k, value)?,
            "sgda_eta_y" => self.sgda.eta_y = parse(k, value)?,
            "spider_eta" => self.spider_eta = parse(k, value)?,
            "rho_phi" => self.rho_phi = parse(k, value)?,
            _ => return Err(Error::Config(format!("unknown option {key:?}"))),
        }
        Ok(())
    }

    /// Parses a JSON document or `key = value` lines (`#` starts a comment).
    pub fn from_text(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let mut cfg = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn privacy(&self) -> Result<PrivacyConfig> {
        let budget = if self.private { PrivacyBudget::new(self.epsilon, self.delta)? } else { PrivacyBudget::disabled() };
        Ok(PrivacyConfig { budget, calibration: self.calibration, incremental: self.incremental })
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.instance.is_none() {
            self.problem.validate()?;
        }
        self.privacy()?;
        self.eigen.validate()?;
        if !(self.rho_phi > 0.0 && self.rho_phi.is_finite()) {
            return Err(Error::param("rho_phi", "must be positive and finite"));
        }
        if !(self.spider_eta > 0.0 && self.spider_eta.is_finite()) {
            return Err(Error::param("spider_eta", "must be positive and finite"));
        }
        if !(self.sgda.eta_x > 0.0 && self.sgda.eta_y > 0.0) {
            return Err(Error::param("sgda_eta", "step sizes must be positive"));
        }
        if let Some(n) = self.instance.is_none().then_some(self.problem.n) {
            self.resolved_params(n).validate(n)?;
        }
        Ok(())
    }

    pub fn resolved_params(&self, n: usize) -> AlgoParams {
        if self.full_batch {
            self.params.clone().full_batch(n)
        } else {
            self.params.clone()
        }
    }

    pub fn load_instance(&self) -> Result<MatrixSensingInstance> {
        match &self.instance {
            Some(path) => {
                let inst: MatrixSensingInstance = serde_json::from_str(&fs::read_to_string(path)?)?;
                inst.validate()?;
                Ok(inst)
            }
            None => MatrixSensingInstance::generate(&mut RandomSource::new(self.instance_seed.unwrap_or(self.seed)), &self.problem),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub seed: u64,
    pub phi: f64,
    pub grad_norm: f64,
    pub lambda_min: f64,
    pub lambda_converged: bool,
    pub certificate: SospCertificate,
    pub iterations: usize,
    pub stop_reason: Option<StopReason>,
    pub output_source: Option<OutputSource>,
    pub episodes: usize,
    pub eps_spent: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: Summary,
    pub trajectory: Trajectory,
    pub report: BudgetReport,
    pub x_out: Vec<f64>,
}

/// Runs the configured method on an already loaded instance.
pub fn run_on(config: &ExperimentConfig, instance: &MatrixSensingInstance) -> Result<ExperimentResult> {
    config.validate()?;
    let n = instance.n;
    let params = config.resolved_params(n);
    params.validate(n)?;
    let calibrated = calibrate_for(config.method, &params, &config.privacy()?, n)?;
    let mut rng = RandomSource::new(config.seed);
    let (x0, y0) = instance.initial_point(&mut rng);
    let evaluator = Evaluator { phi: instance, eigen: config.eigen, eig_every: config.eig_every };
    let spend = config.private.then_some(&calibrated.report);
    let mut hooks = RunHooks { evaluator: Some(&evaluator), spend, observer: None };

    let started = Instant::now();
    let (x_out, trajectory, iterations, stop_reason, output_source, episodes, queries) = match config.method {
        MethodKind::DpRgda => {
            let out = run(instance, &mut rng, &x0, &y0, &params, &calibrated.noise, &mut hooks)?;
            (out.x_out, out.trajectory, out.iterations, Some(out.reason), Some(out.source), out.episodes, out.queries)
        }
        MethodKind::DpSgda => {
            let out = dp_sgda(instance, &mut rng, &x0, &y0, &params, config.sgda, &calibrated.noise, &hooks)?;
            (out.x_out, out.trajectory, params.big_t, None, None, 0, out.queries)
        }
        MethodKind::DpSpiderMin => {
            let out = dp_spider_min(&ResidualLoss(instance), &mut rng, &x0, &params, config.spider_eta, &calibrated.noise, &hooks)?;
            (out.x_out, out.trajectory, params.big_t, None, None, 0, out.queries)
        }
    };
    let wall_time_s = started.elapsed().as_secs_f64();

    let last = trajectory.last().expect("runs always emit an output row");
    let eig = evaluator.evaluate(last.t, &x_out, true).lambda_min.expect("final evaluation estimates curvature");
    let cert = certificate(last.grad_norm.unwrap_or(f64::NAN), eig, params.alpha, config.rho_phi);
    let summary = Summary {
        method: config.method.name().to_string(),
        seed: config.seed,
        phi: last.phi.unwrap_or(f64::NAN),
        grad_norm: cert.grad_norm,
        lambda_min: eig.value,
        lambda_converged: eig.converged,
        certificate: cert,
        iterations,
        stop_reason,
        output_source,
        episodes,
        eps_spent: spend.map(|r| r.eps_spent(queries)),
        wall_time_s,
    };
    Ok(ExperimentResult { summary, trajectory, report: calibrated.report, x_out })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let instance = config.load_instance()?;
    run_on(config, &instance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedIterate {
    pub method: String,
    pub x: Vec<f64>,
}

/// Writes `trajectory.csv`, `summary.json`, `budget.json`, `budget.txt` and `iterate.json`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trajectory.csv"), result.trajectory.to_csv())?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&result.summary)?)?;
    fs::write(dir.join("budget.json"), result.report.to_json()?)?;
    fs::write(dir.join("budget.txt"), result.report.to_text())?;
    let saved = SavedIterate { method: result.summary.method.clone(), x: result.x_out.clone() };
    fs::write(dir.join("iterate.json"), serde_json::to_string(&saved)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub phi: f64,
    pub grad_norm: f64,
    pub lambda_min: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// Sorted by final `phi`, ascending.
    pub rows: Vec<ComparisonRow>,
    pub results: Vec<ExperimentResult>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,phi,grad_norm,lambda_min\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", r.method, r.phi, r.grad_norm, r.lambda_min));
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:<16}{:>14}{:>14}{:>14}\n", "method", "phi", "grad_norm", "lambda_min");
        for r in &self.rows {
            s.push_str(&format!("{:<16}{:>14.6}{:>14.6}{:>14.6}\n", r.method, r.phi, r.grad_norm, r.lambda_min));
        }
        s
    }

    /// One CSV per metric with a column per method, indexed by iteration.
    pub fn panel_csvs(&self) -> Vec<(&'static str, String)> {
        type Pick = fn(&crate::trajectory::TrajectoryRow) -> Option<f64>;
        let panels: [(&'static str, Pick); 3] = [
            ("phi", |r| r.phi),
            ("grad_norm", |r| r.grad_norm),
            ("lambda_min", |r| r.lambda_min),
        ];
        let len = self.results.iter().map(|r| r.trajectory.len()).max().unwrap_or(0);
        panels
            .iter()
            .map(|(name, pick)| {
                let mut s = String::from("t");
                for r in &self.results {
                    s.push(',');
                    s.push_str(&r.summary.method);
                }
                s.push('\n');
                for i in 0..len {
                    s.push_str(&i.to_string());
                    for r in &self.results {
                        s.push(',');
                        if let Some(v) = r.trajectory.rows.get(i).and_then(pick) {
                            s.push_str(&format!("{v:e}"));
                        }
                    }
                    s.push('\n');
                }
                (*name, s)
            })
            .collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("comparison.csv"), self.to_csv())?;
        fs::write(dir.join("comparison.txt"), self.to_table())?;
        for (name, csv) in self.panel_csvs() {
            fs::write(dir.join(format!("panel_{name}.csv")), csv)?;
        }
        for r in &self.results {
            write_outputs(r, &dir.join(&r.summary.method))?;
        }
        Ok(())
    }
}

/// Runs every config on one shared instance and ranks the methods.
pub fn compare(configs: &[ExperimentConfig]) -> Result<Comparison> {
    let first = configs.first().ok_or_else(|| Error::Config("nothing to compare".into()))?;
    for c in configs {
        c.validate()?;
    }
    let instance = first.load_instance()?;
    for c in &configs[1..] {
        if c.private != first.private || c.epsilon != first.epsilon || c.delta != first.delta {
            return Err(Error::Config("compared configs must share the privacy budget".into()));
        }
        if c.load_instance()? != instance {
            return Err(Error::Config("compared configs resolve to different instances".into()));
        }
    }
    let results = configs.iter().map(|c| run_on(c, &instance)).collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<ComparisonRow> = results
        .iter()
        .map(|r| ComparisonRow {
            method: r.summary.method.clone(),
            phi: r.summary.phi,
            grad_norm: r.summary.grad_norm,
            lambda_min: r.summary.lambda_min,
        })
        .collect();
    rows.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    Ok(Comparison { rows, results })
}
