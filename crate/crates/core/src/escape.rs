//! Outer loop: normalized descent while the privatized gradient is large,
//! otherwise a perturbed escape episode whose accumulated movement decides
//! between resuming descent and returning the episode's anchor.

use serde::{Deserialize, Serialize};

use crate::diagnostics::Evaluator;
use crate::error::{Error, Result};
use crate::oracle::MinimaxOracle;
use crate::params::AlgoParams;
use crate::privacy::{BudgetReport, NoiseScale};
use crate::rng::RandomSource;
use crate::spider::{inner_loop, EstimatorPair, InnerResult, IterateState};
use crate::trajectory::{Trajectory, TrajectoryRow};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Descent,
    Escape,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Descent => "descent",
            Mode::Escape => "escape",
        }
    }
}

/// Phase-machine state.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub mode: Mode,
    /// Iteration index of the current episode's anchor.
    pub m_s: usize,
    pub anchor: Vec<f64>,
    pub esc: usize,
    /// Episodes started so far.
    pub s: usize,
    /// `||v_j||^2` for `j = m_s+1..t`; empty while descending.
    pub sq_norms: Vec<f64>,
}

impl Phase {
    pub fn new(dim: usize) -> Self {
        Self {
            mode: Mode::Descent,
            m_s: 0,
            anchor: vec![0.0; dim],
            esc: 0,
            s: 0,
            sq_norms: Vec::new(),
        }
    }

    /// `D = eta_H^2 sum ||v_j||^2` of the current episode.
    pub fn movement(&self, eta_h: f64) -> f64 {
        eta_h * eta_h * self.sq_norms.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EscapeDecision {
    Continue(Vec<f64>),
    /// Movement exceeded the threshold; carries `x_{t+1}` and the rescaled step `eta_t`.
    ExitToDescent { x_next: Vec<f64>, eta_t: f64 },
    Terminate(Vec<f64>),
}

/// `x - (eta / ||v||) v`.
pub fn descent_step(x: &[f64], v: &[f64], eta: f64) -> Vec<f64> {
    let n = vecops::norm(v);
    debug_assert!(n > 0.0, "descent step needs a non-zero direction");
    let mut out = x.to_vec();
    vecops::axpy(-eta / n, v, &mut out);
    out
}

/// Starts an escape episode anchored at `x_t` and returns the perturbed point.
pub fn enter_escape(phase: &mut Phase, rng: &mut RandomSource, t: usize, x: &[f64], radius: f64) -> Vec<f64> {
    phase.mode = Mode::Escape;
    phase.m_s = t;
    phase.anchor = x.to_vec();
    phase.esc = 0;
    phase.s += 1;
    phase.sq_norms.clear();
    let xi = rng.uniform_ball(x.len(), radius);
    vecops::add(x, &xi)
}

/// One step of an escape episode at iteration `t > m_s`.
pub fn escape_step(
    phase: &mut Phase,
    t: usize,
    x: &[f64],
    v: &[f64],
    eta_h: f64,
    d_bar: f64,
    t_thres: usize,
) -> EscapeDecision {
    debug_assert_eq!(phase.mode, Mode::Escape);
    phase.sq_norms.push(vecops::norm_sq(v));
    let elapsed = (t - phase.m_s) as f64;
    let total: f64 = phase.sq_norms.iter().sum();
    if eta_h * eta_h * total > elapsed * d_bar {
        let eta_t = (elapsed * d_bar / total).sqrt();
        let mut next = x.to_vec();
        vecops::axpy(-eta_t, v, &mut next);
        phase.mode = Mode::Descent;
        phase.sq_norms.clear();
        phase.esc = 0;
        return EscapeDecision::ExitToDescent { x_next: next, eta_t };
    }
    let mut next = x.to_vec();
    vecops::axpy(-eta_h, v, &mut next);
    phase.esc += 1;
    if phase.esc >= t_thres {
        EscapeDecision::Terminate(phase.anchor.clone())
    } else {
        EscapeDecision::Continue(next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    EscapeExhausted,
    IterationBudget,
}

/// Where the returned point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum OutputSource {
    Anchor { t: usize },
    /// No escape episode ever started; the point carries no certificate.
    FinalIterate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub x_out: Vec<f64>,
    pub reason: StopReason,
    pub source: OutputSource,
    pub x_last: Vec<f64>,
    pub y_last: Vec<f64>,
    /// Escape episodes started.
    pub episodes: usize,
    /// Outer iterations executed.
    pub iterations: usize,
    /// Private queries answered per coordinate block.
    pub queries: usize,
    pub trajectory: Trajectory,
}

impl RunOutcome {
    pub fn certified(&self) -> bool {
        self.reason == StopReason::EscapeExhausted
    }
}

/// What the outer loop did at iteration `t`, for observers.
#[derive(Debug)]
pub struct StepRecord<'a> {
    pub t: usize,
    pub mode: Mode,
    pub x: &'a [f64],
    pub x_next: &'a [f64],
    pub inner: &'a InnerResult,
    /// Set when an escape episode exited with a rescaled step.
    pub exit_eta: Option<f64>,
    pub terminated: bool,
}

/// Optional instrumentation of a run. None of it touches private state.
#[derive(Default)]
pub struct RunHooks<'a> {
    pub evaluator: Option<&'a Evaluator<'a>>,
    pub spend: Option<&'a BudgetReport>,
    pub observer: Option<&'a mut dyn FnMut(&StepRecord<'_>)>,
}

pub(crate) fn row(
    hooks: &RunHooks<'_>,
    t: usize,
    phase: &str,
    x: &[f64],
    v_norm: Option<f64>,
    used: usize,
    last: bool,
) -> TrajectoryRow {
    let eval = hooks.evaluator.map(|e| e.evaluate(t, x, last));
    TrajectoryRow {
        t,
        phase: phase.to_string(),
        phi: eval.map(|e| e.phi),
        grad_norm: eval.map(|e| e.grad_norm),
        lambda_min: eval.and_then(|e| e.lambda_min).map(|l| l.value),
        v_norm,
        eps_spent: hooks.spend.map(|r| r.eps_spent(used)),
    }
}

fn check_start<O: MinimaxOracle + ?Sized>(oracle: &O, x0: &[f64], y0: &[f64]) -> Result<()> {
    if x0.len() != oracle.dim_x() {
        return Err(Error::DimensionMismatch { what: "x0", expected: oracle.dim_x(), actual: x0.len() });
    }
    if y0.len() != oracle.dim_y() {
        return Err(Error::DimensionMismatch { what: "y0", expected: oracle.dim_y(), actual: y0.len() });
    }
    if !vecops::all_finite(x0) || !vecops::all_finite(y0) {
        return Err(Error::param("x0", "starting point must be finite"));
    }
    Ok(())
}

/// Runs the private outer loop for at most `params.big_t` iterations.
///
/// All noise scales are fixed up front in `noise`. The trajectory holds one
/// row per executed iteration plus a final `output` row for the returned point.
pub fn run<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    rng: &mut RandomSource,
    x0: &[f64],
    y0: &[f64],
    params: &AlgoParams,
    noise: &NoiseScale,
    hooks: &mut RunHooks<'_>,
) -> Result<RunOutcome> {
    params.validate(oracle.num_samples())?;
    check_start(oracle, x0, y0)?;

    let mut x = x0.to_vec();
    let mut x_prev: Option<Vec<f64>> = None;
    let mut y = crate::oracle::project_y(oracle, y0);
    let mut est: Option<EstimatorPair> = None;
    let mut phase = Phase::new(x.len());
    let mut trajectory = Trajectory::default();
    let mut queries = 0;
    let mut stop: Option<Vec<f64>> = None;
    let mut iterations = 0;

    for t in 0..params.big_t {
        let inner = inner_loop(
            oracle,
            rng,
            &IterateState { t, x: &x, x_prev: x_prev.as_deref(), y: &y, estimators: est.as_ref() },
            params,
            noise,
        );
        queries += inner.queries;
        iterations = t + 1;
        let v = &inner.v_out;
        let v_norm = vecops::norm(v);
        let mode = phase.mode;
        trajectory.push(row(hooks, t, mode.label(), &x, Some(v_norm), queries, false));

        let mut exit_eta = None;
        let x_next = match mode {
            Mode::Descent if v_norm >= params.alpha => descent_step(&x, v, params.eta),
            Mode::Descent => enter_escape(&mut phase, rng, t, &x, params.radius),
            Mode::Escape => match escape_step(&mut phase, t, &x, v, params.eta_h, params.d_bar, params.t_thres) {
                EscapeDecision::Continue(next) => next,
                EscapeDecision::ExitToDescent { x_next, eta_t } => {
                    exit_eta = Some(eta_t);
                    x_next
                }
                EscapeDecision::Terminate(anchor) => {
                    stop = Some(anchor);
                    x.clone()
                }
            },
        };
        if let Some(obs) = hooks.observer.as_mut() {
            obs(&StepRecord {
                t,
                mode,
                x: &x,
                x_next: &x_next,
                inner: &inner,
                exit_eta,
                terminated: stop.is_some(),
            });
        }
        y = inner.y_next;
        est = Some(EstimatorPair { v: inner.v_out, u: inner.u_out });
        if stop.is_some() {
            break;
        }
        x_prev = Some(std::mem::replace(&mut x, x_next));
        if !vecops::all_finite(&x) {
            log::warn!("iterate became non-finite at t = {}", t + 1);
        }
    }

    let (x_out, reason, source) = match stop {
        Some(anchor) => (anchor, StopReason::EscapeExhausted, OutputSource::Anchor { t: phase.m_s }),
        None if phase.s > 0 => (phase.anchor.clone(), StopReason::IterationBudget, OutputSource::Anchor { t: phase.m_s }),
        None => (x.clone(), StopReason::IterationBudget, OutputSource::FinalIterate),
    };
    trajectory.push(row(hooks, iterations, "output", &x_out, None, queries, true));
    Ok(RunOutcome {
        x_out,
        reason,
        source,
        x_last: x,
        y_last: y,
        episodes: phase.s,
        iterations,
        queries,
        trajectory,
    })
}
