//! Noise calibration for the refresh and incremental query classes.

use serde::{Deserialize, Serialize};

use super::accountant::{account, BlockReport, BudgetReport, ClassReport, PrivacyBudget, QueryClass, QueryKind};
use super::mechanism::gaussian_sigma;
use crate::error::{Error, Result};
use crate::params::AlgoParams;

/// How per-query noise is derived from the global budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Calibration {
    /// The closed-form sigma expressions of the inner updater, times a universal constant.
    ClosedForm { constant: f64 },
    /// Sensitivity `2C/B` per query with the per-query budget from composition.
    /// `delta_prime_fraction` of each block's delta is reserved as composition slack.
    Accountant { delta_prime_fraction: f64 },
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration::Accountant {
            delta_prime_fraction: 0.5,
        }
    }
}

/// Sensitivity model of the incremental (gradient-difference) queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum IncrementalSensitivity {
    /// The averaged difference is clipped, so sensitivity is `2 C_u / S2`.
    #[default]
    Clipped,
    /// Sensitivity `2 L ||w_k - w_{k-1}|| / S2` from gradient Lipschitzness; the
    /// noise scale is then proportional to the step's movement.
    LipschitzScaled { lipschitz: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyConfig {
    pub budget: PrivacyBudget,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default)]
    pub incremental: IncrementalSensitivity,
}

impl PrivacyConfig {
    pub fn new(budget: PrivacyBudget) -> Self {
        Self {
            budget,
            calibration: Calibration::default(),
            incremental: IncrementalSensitivity::default(),
        }
    }

    pub fn disabled() -> Self {
        Self::new(PrivacyBudget::disabled())
    }
}

/// Standard deviations of the four noise sources of the inner updater.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseScale {
    pub sigma_refresh_x: f64,
    pub sigma_refresh_y: f64,
    pub sigma_inc_x: f64,
    pub sigma_inc_y: f64,
    /// Incremental sigmas are per unit of `||w_k - w_{k-1}||`.
    #[serde(default)]
    pub inc_per_unit_movement: bool,
}

impl NoiseScale {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_refresh_x == 0.0 && self.sigma_refresh_y == 0.0 && self.sigma_inc_x == 0.0 && self.sigma_inc_y == 0.0
    }

    /// Incremental sigmas `(x, y)` for a step that moved the iterate by `movement`.
    pub fn incremental(&self, movement: f64) -> (f64, f64) {
        if self.inc_per_unit_movement {
            (self.sigma_inc_x * movement, self.sigma_inc_y * movement)
        } else {
            (self.sigma_inc_x, self.sigma_inc_y)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    DpRgda,
    DpSgda,
    DpSpiderMin,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::DpRgda => "dp-rgda",
            MethodKind::DpSgda => "dp-sgda",
            MethodKind::DpSpiderMin => "dp-spider-min",
        }
    }

    /// Independently accounted coordinate blocks.
    fn blocks(self) -> &'static [&'static str] {
        match self {
            MethodKind::DpRgda | MethodKind::DpSgda => &["x", "y"],
            MethodKind::DpSpiderMin => &["x"],
        }
    }
}

/// Query classes answered by each coordinate block of `method`.
///
/// DP-RGDA refreshes `ceil(T/q)` times and makes `T K` incremental queries;
/// SPIDER minimization replaces the increment of refresh steps by the refresh
/// itself; DP-SGDA makes one clipped-mean query per step.
pub fn method_schedule(method: MethodKind, params: &AlgoParams) -> Vec<QueryClass> {
    let t = params.big_t;
    let refreshes = t.div_ceil(params.period_q.max(1));
    match method {
        MethodKind::DpRgda => vec![
            QueryClass::refresh(params.clip_refresh, params.s1, refreshes),
            QueryClass::incremental(params.clip_incremental, params.s2, t * params.inner_k),
        ],
        MethodKind::DpSpiderMin => vec![
            QueryClass::refresh(params.clip_refresh, params.s1, refreshes),
            QueryClass::incremental(params.clip_incremental, params.s2, t - refreshes),
        ],
        MethodKind::DpSgda => vec![QueryClass::refresh(params.clip_refresh, params.s2, t)],
    }
}

/// Noise scales plus the report documenting how they were derived.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrated {
    pub noise: NoiseScale,
    pub report: BudgetReport,
}

/// Calibrates DP-RGDA's noise for a dataset of `n` samples.
pub fn calibrate_noise(params: &AlgoParams, privacy: &PrivacyConfig, n: usize) -> Result<Calibrated> {
    calibrate_for(MethodKind::DpRgda, params, privacy, n)
}

pub fn calibrate_for(method: MethodKind, params: &AlgoParams, privacy: &PrivacyConfig, n: usize) -> Result<Calibrated> {
    params.validate(n)?;
    let budget = &privacy.budget;
    let blocks = method.blocks();
    let schedule = method_schedule(method, params);

    let (lipschitz, per_unit) = match privacy.incremental {
        IncrementalSensitivity::Clipped => (None, false),
        IncrementalSensitivity::LipschitzScaled { lipschitz } => {
            if !(lipschitz > 0.0) {
                return Err(Error::param("lipschitz", "must be positive"));
            }
            (Some(lipschitz), method != MethodKind::DpSgda)
        }
    };
    let inc_batch = params.s2 as f64;
    // Sensitivity of one class as reported and used by the accountant.
    let class_sensitivity = |c: &QueryClass| match (c.kind, lipschitz) {
        (QueryKind::Incremental, Some(l)) => 2.0 * l / inc_batch,
        _ => c.sensitivity,
    };

    let mut reports = Vec::with_capacity(blocks.len());
    let mut sigmas = (0.0, 0.0);
    let block_budget = budget.split(blocks.len());
    let delta_prime_fraction = match privacy.calibration {
        Calibration::Accountant { delta_prime_fraction } => {
            if !(delta_prime_fraction > 0.0 && delta_prime_fraction < 1.0) {
                return Err(Error::param("delta_prime_fraction", "must lie in (0, 1)"));
            }
            delta_prime_fraction
        }
        Calibration::ClosedForm { constant } => {
            if !(constant > 0.0) {
                return Err(Error::param("noise_constant", "must be positive"));
            }
            0.5
        }
    };

    for name in blocks {
        let allocation = account(&schedule, &block_budget, delta_prime_fraction * block_budget.delta)?;
        let mut classes = Vec::with_capacity(schedule.len());
        for c in &schedule {
            let sensitivity = class_sensitivity(c);
            let movement_scaled = per_unit && c.kind == QueryKind::Incremental;
            let sigma = if budget.is_disabled() {
                0.0
            } else {
                match privacy.calibration {
                    Calibration::Accountant { .. } => {
                        gaussian_sigma(sensitivity, allocation.per_query_eps, allocation.per_query_delta)?
                    }
                    Calibration::ClosedForm { constant } => {
                        closed_form_sigma(method, c.kind, params, budget, n, constant, lipschitz)
                    }
                }
            };
            match c.kind {
                QueryKind::Refresh => sigmas.0 = sigma,
                QueryKind::Incremental => sigmas.1 = sigma,
            }
            classes.push(ClassReport {
                kind: c.kind,
                sensitivity,
                count: c.count,
                sigma,
                per_unit_movement: movement_scaled,
            });
        }
        reports.push(BlockReport {
            name: (*name).to_string(),
            target_eps: block_budget.epsilon,
            target_delta: block_budget.delta,
            allocation,
            classes,
        });
    }

    let (composed_eps, composed_delta) = reports.iter().fold((0.0, 0.0), |(e, d), b| {
        (e + b.allocation.total_eps, d + b.allocation.total_delta)
    });
    let report = BudgetReport {
        method: method.name().to_string(),
        calibration: match privacy.calibration {
            Calibration::ClosedForm { .. } => "closed-form".into(),
            Calibration::Accountant { .. } => "accountant".into(),
        },
        target_eps: budget.epsilon,
        target_delta: budget.delta,
        blocks: reports,
        composed_eps,
        composed_delta,
    };

    let (refresh, inc) = sigmas;
    let noise = match method {
        // One query class; the sgda noise lives in the refresh slots.
        MethodKind::DpSgda => NoiseScale {
            sigma_refresh_x: refresh,
            sigma_refresh_y: refresh,
            ..NoiseScale::zero()
        },
        MethodKind::DpSpiderMin => NoiseScale {
            sigma_refresh_x: refresh,
            sigma_inc_x: inc,
            inc_per_unit_movement: per_unit,
            ..NoiseScale::zero()
        },
        MethodKind::DpRgda => NoiseScale {
            sigma_refresh_x: refresh,
            sigma_refresh_y: refresh,
            sigma_inc_x: inc,
            sigma_inc_y: inc,
            inc_per_unit_movement: per_unit,
        },
    };
    Ok(Calibrated { noise, report })
}

/// `c C sqrt(ln(1/delta)) / eps * max{1/S, branch}` with the refresh branch
/// `sqrt(T)/(sqrt(q) n)` and the incremental branch `sqrt(T)/n`.
fn closed_form_sigma(
    method: MethodKind,
    kind: QueryKind,
    params: &AlgoParams,
    budget: &PrivacyBudget,
    n: usize,
    constant: f64,
    lipschitz: Option<f64>,
) -> f64 {
    let eps = budget.epsilon;
    let n = n as f64;
    let t = params.big_t as f64;
    let log_term = (1.0 / budget.delta).ln().sqrt();
    match (method, kind) {
        (MethodKind::DpSgda, _) => {
            constant * params.clip_refresh * log_term / eps * (1.0 / params.s2 as f64).max(t.sqrt() / n)
        }
        (_, QueryKind::Refresh) => {
            let q = params.period_q as f64;
            constant * params.clip_refresh * log_term / eps * (1.0 / params.s1 as f64).max(t.sqrt() / (q.sqrt() * n))
        }
        (_, QueryKind::Incremental) => match lipschitz {
            Some(l) => 2.0 * constant * l * (1.25 / budget.delta).ln().sqrt() / (n * eps),
            None => constant * params.clip_incremental * log_term / eps * (1.0 / params.s2 as f64).max(t.sqrt() / n),
        },
    }
}
