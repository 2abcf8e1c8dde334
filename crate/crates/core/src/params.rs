//! Tunables of the outer and inner loops, problem constants, and presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the clip is applied inside a batch query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ClipPlacement {
    /// Clip the batch-averaged quantity once.
    Aggregate,
    /// Clip each per-sample gradient (or gradient difference) before averaging.
    #[default]
    PerSample,
}

/// All tunables of DP-RGDA.
///
/// Defaults are the matrix-sensing experiment settings: `T = 400`, `K = 5`,
/// `q = 10`, `S1 = 200`, `S2 = 50`, clip threshold 1, descent step 0.2 and
/// ascent step 0.8. The escape-phase values are harness choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoParams {
    /// Normalized descent step length.
    pub eta: f64,
    /// Escape-phase step size.
    pub eta_h: f64,
    /// Perturbation radius.
    pub radius: f64,
    /// Escape steps before the anchor is certified.
    pub t_thres: usize,
    /// Average squared movement threshold.
    pub d_bar: f64,
    /// First-order target; gradients below it trigger the escape phase.
    pub alpha: f64,
    /// Inner projected-ascent step.
    pub lambda: f64,
    /// Inner ascent steps per outer iteration.
    pub inner_k: usize,
    /// Refresh period of the recursive estimators.
    pub period_q: usize,
    /// Refresh batch size.
    pub s1: usize,
    /// Incremental batch size.
    pub s2: usize,
    /// Outer iteration budget.
    pub big_t: usize,
    /// Clip threshold of refresh queries (C_v).
    pub clip_refresh: f64,
    /// Clip threshold of incremental queries (C_u).
    pub clip_incremental: f64,
    pub clip_placement: ClipPlacement,
}

impl Default for AlgoParams {
    fn default() -> Self {
        Self {
            eta: 0.2,
            eta_h: 0.2,
            radius: 0.01,
            t_thres: 20,
            d_bar: 1e-4,
            alpha: 0.05,
            lambda: 0.8,
            inner_k: 5,
            period_q: 10,
            s1: 200,
            s2: 50,
            big_t: 400,
            clip_refresh: 1.0,
            clip_incremental: 1.0,
            clip_placement: ClipPlacement::PerSample,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

impl AlgoParams {
    /// Checks the parameter invariants against a dataset of `n` samples.
    pub fn validate(&self, n: usize) -> Result<()> {
        positive("eta", self.eta)?;
        positive("eta_h", self.eta_h)?;
        positive("alpha", self.alpha)?;
        positive("lambda", self.lambda)?;
        positive("d_bar", self.d_bar)?;
        positive("clip_refresh", self.clip_refresh)?;
        positive("clip_incremental", self.clip_incremental)?;
        if !(self.radius >= 0.0) || self.radius.is_infinite() {
            return Err(Error::param("radius", format!("must be finite and non-negative, got {}", self.radius)));
        }
        for (name, v) in [
            ("t_thres", self.t_thres),
            ("inner_k", self.inner_k),
            ("period_q", self.period_q),
            ("s1", self.s1),
            ("s2", self.s2),
        ] {
            if v == 0 {
                return Err(Error::param(name, "must be at least 1"));
            }
        }
        if self.s1 > n {
            return Err(Error::param("s1", format!("batch {} exceeds sample count {n}", self.s1)));
        }
        if self.s2 > n {
            return Err(Error::param("s2", format!("batch {} exceeds sample count {n}", self.s2)));
        }
        Ok(())
    }

    /// Full-batch variant: `S1 = S2 = n`.
    pub fn full_batch(mut self, n: usize) -> Self {
        self.s1 = n;
        self.s2 = n;
        self
    }
}

/// Smoothness and curvature constants of a problem.
///
/// These never come out of the data; they are supplied by the user and only
/// feed parameter presets and the SOSP threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Gradient Lipschitz constant of `f`.
    pub lipschitz: f64,
    /// Strong-concavity modulus in `y`.
    pub mu: f64,
    /// Hessian Lipschitz constant of `f`.
    pub rho: f64,
    /// Per-sample gradient norm bound.
    pub grad_bound: f64,
    /// Gradient Lipschitz constant of the value function.
    pub l_phi: f64,
    /// Hessian Lipschitz constant of the value function.
    pub rho_phi: f64,
}

impl Default for ProblemConstants {
    fn default() -> Self {
        Self {
            lipschitz: 1.0,
            mu: 1.0,
            rho: 1.0,
            grad_bound: 1.0,
            l_phi: 1.0,
            rho_phi: 1.0,
        }
    }
}

impl ProblemConstants {
    pub fn kappa(&self) -> f64 {
        self.lipschitz / self.mu
    }

    /// `alpha_H = sqrt(rho_Phi * alpha)`.
    pub fn alpha_h(&self, alpha: f64) -> f64 {
        (self.rho_phi * alpha).sqrt()
    }
}

/// `sqrt(d ln(1/delta)) / (n eps)`, the privacy term driving the presets.
pub fn privacy_rate(d: usize, n: usize, eps: f64, delta: f64) -> f64 {
    (d as f64 * (1.0 / delta).ln()).sqrt() / (n as f64 * eps)
}

/// Escape-phase parameters from the perturbed-descent scalings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeScalings {
    pub radius: f64,
    pub t_thres: usize,
    pub d_bar: f64,
    /// Travel distance that certifies an escape.
    pub travel: f64,
}

/// `r = L_Phi eta_H alpha_H / (C rho_Phi)`,
/// `t_thres = 2 ln(eta_H alpha_H L_Phi / (C rho_Phi r0)) / eta_H` with `r0 = delta2 r / sqrt(d)`,
/// `R = 1 / (2 L_Phi eta_H)` and `D_bar = R^2 / t_thres^2`.
pub fn escape_scalings(
    constants: &ProblemConstants,
    alpha: f64,
    eta_h: f64,
    c: f64,
    delta2: f64,
    d: usize,
) -> EscapeScalings {
    let alpha_h = constants.alpha_h(alpha);
    let radius = constants.l_phi * eta_h * alpha_h / (c * constants.rho_phi);
    let r0 = delta2 * radius / (d as f64).sqrt();
    let t_thres = (2.0 * (eta_h * alpha_h * constants.l_phi / (c * constants.rho_phi * r0)).ln() / eta_h)
        .ceil()
        .max(1.0) as usize;
    let travel = 1.0 / (2.0 * constants.l_phi * eta_h);
    let d_bar = travel * travel / (t_thres * t_thres) as f64;
    EscapeScalings {
        radius,
        t_thres,
        d_bar,
        travel,
    }
}

impl AlgoParams {
    /// Empirical-risk preset: `eta = 1/(2L)`, `S1 = n`, `K = 1`, and `S2`, `T`,
    /// `q` from the privacy rate. Escape parameters use [`escape_scalings`]
    /// with `C = 1`, `delta2 = 0.1`, `eta_H = eta`.
    pub fn erm_preset(
        constants: &ProblemConstants,
        n: usize,
        d: usize,
        eps: f64,
        delta: f64,
        initial_gap: f64,
    ) -> Self {
        let l = constants.lipschitz;
        let m = constants.grad_bound;
        let log_inv = (1.0 / delta).ln();
        let rate = privacy_rate(d, n, eps, delta);
        let nf = n as f64;
        let s2 = ((m * nf * eps / (initial_gap * l * d as f64 * log_inv).sqrt()).powf(2.0 / 3.0))
            .max((m * nf * d as f64 * log_inv).powf(1.0 / 3.0) / (l * initial_gap).powf(1.0 / 6.0));
        let big_t = ((l * initial_gap).powf(0.25) / (m.sqrt() * rate))
            .powf(4.0 / 3.0)
            .max(nf * eps / ((d as f64).sqrt() * log_inv));
        let big_t = big_t.ceil().max(1.0) as usize;
        let q = (nf * nf * eps * eps / (l * l * big_t as f64 * d as f64 * log_inv)).floor();
        let alpha = rate.powf(2.0 / 3.0);
        let eta = 1.0 / (2.0 * l);
        let esc = escape_scalings(constants, alpha, eta, 1.0, 0.1, d);
        Self {
            eta,
            eta_h: eta,
            radius: esc.radius,
            t_thres: esc.t_thres,
            d_bar: esc.d_bar,
            alpha,
            lambda: 1.0 / (6.0 * l),
            inner_k: 1,
            period_q: (q as usize).max(1),
            s1: n,
            s2: (s2.ceil() as usize).clamp(1, n),
            big_t,
            clip_refresh: m,
            clip_incremental: m,
            clip_placement: ClipPlacement::Aggregate,
        }
    }

    /// Population preset with all hidden constants set to 1 and failure
    /// probability `delta1`: `lambda = 1/(6L)`, `K = ceil(kappa)`, `S1 = n`.
    pub fn population_preset(
        constants: &ProblemConstants,
        n: usize,
        d: usize,
        eps: f64,
        delta: f64,
        delta1: f64,
        big_t: usize,
    ) -> Self {
        let l = constants.lipschitz;
        let kappa = constants.kappa();
        let rate = privacy_rate(d, n, eps, delta);
        let log4 = (4.0 / delta1).ln();
        let s2 = log4 * log4 * kappa * rate.powf(-1.0 / 3.0);
        let q = rate.powf(-1.0 / 3.0).ceil().max(1.0) as usize;
        let alpha = (n as f64).powf(-1.0 / 3.0) + rate.sqrt();
        Self {
            eta: rate.sqrt() / (l * log4),
            eta_h: rate.sqrt() / (l * log4),
            radius: rate.sqrt() / (l * log4),
            t_thres: escape_scalings(constants, alpha, rate.sqrt() / (l * log4), 1.0, 0.1, d).t_thres,
            d_bar: rate / (l * l * log4 * log4),
            alpha,
            lambda: 1.0 / (6.0 * l),
            inner_k: kappa.ceil().max(1.0) as usize,
            period_q: q,
            s1: n,
            s2: (s2.ceil() as usize).clamp(1, n),
            big_t,
            clip_refresh: constants.grad_bound,
            clip_incremental: constants.grad_bound,
            clip_placement: ClipPlacement::Aggregate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        AlgoParams::default().validate(400).unwrap();
    }

    #[test]
    fn rejects_zero_lambda_and_oversized_batches() {
        let p = AlgoParams {
            lambda: 0.0,
            ..AlgoParams::default()
        };
        assert!(matches!(p.validate(400), Err(Error::InvalidParameter { name: "lambda", .. })));
        assert!(AlgoParams::default().validate(100).is_err());
        let p = AlgoParams {
            t_thres: 0,
            ..AlgoParams::default()
        };
        assert!(p.validate(400).is_err());
    }

    #[test]
    fn infinite_movement_threshold_is_allowed() {
        let p = AlgoParams {
            d_bar: f64::INFINITY,
            ..AlgoParams::default()
        };
        p.validate(400).unwrap();
    }

    #[test]
    fn presets_are_valid() {
        let c = ProblemConstants::default();
        let erm = AlgoParams::erm_preset(&c, 1000, 10, 1.0, 1e-5, 1.0);
        erm.validate(1000).unwrap();
        assert_eq!(erm.s1, 1000);
        assert_eq!(erm.inner_k, 1);
        let pop = AlgoParams::population_preset(&c, 1000, 10, 1.0, 1e-5, 0.1, 100);
        pop.validate(1000).unwrap();
        assert!((pop.lambda - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn escape_scalings_are_consistent() {
        let c = ProblemConstants::default();
        let s = escape_scalings(&c, 0.01, 0.5, 0.01, 0.1, 2);
        assert!(s.radius > 0.0 && s.t_thres >= 1);
        // t_thres * sqrt(D_bar) equals the travel radius by construction.
        assert!((s.t_thres as f64 * s.d_bar.sqrt() - s.travel).abs() < 1e-12);
    }
}
