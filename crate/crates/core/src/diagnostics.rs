//! Non-private evaluation: gradient mapping, Hessian-vector products on
//! `Phi`, minimum-eigenvalue estimates and the second-order certificate.
//!
//! Nothing here draws from the noise streams or touches a budget.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{full_gradient, MinimaxOracle, ValueFunction};
use crate::vecops;

/// `G_lambda(x, y) = (y - Pi_Y(y + lambda grad_y f(x, y))) / lambda`.
pub fn gradient_mapping<O: MinimaxOracle + ?Sized>(oracle: &O, x: &[f64], y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be positive and finite"));
    }
    let (_, gy) = full_gradient(oracle, x, y);
    let mut step = y.to_vec();
    vecops::axpy(lambda, &gy, &mut step);
    oracle.domain().project(&mut step);
    Ok(y.iter().zip(&step).map(|(a, b)| (a - b) / lambda).collect())
}

/// Central-difference Hessian-vector product of `Phi` along `direction`.
pub fn hvp<V: ValueFunction + ?Sized>(phi: &V, x: &[f64], direction: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    vecops::axpy(h, direction, &mut xp);
    vecops::axpy(-h, direction, &mut xm);
    let gp = phi.value_gradient(&xp);
    let gm = phi.value_gradient(&xm);
    gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    #[default]
    Lanczos,
    ShiftedPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenSettings {
    /// Finite-difference step of the Hessian-vector product.
    pub h: f64,
    pub maxiter: usize,
    pub tol: f64,
    pub method: EigenMethod,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self {
            h: 5e-4,
            maxiter: 500,
            tol: 1e-4,
            method: EigenMethod::Lanczos,
        }
    }
}

impl EigenSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::param("h", "must be positive and finite"));
        }
        if self.maxiter == 0 {
            return Err(Error::param("maxiter", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

const START_SEED: u64 = 0x1a4c_7e0f;

fn start_vector(dim: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(START_SEED);
    let mut v = crate::rng::sample_uniform_ball(&mut rng, dim, 1.0);
    let n = vecops::norm(&v);
    vecops::scale(1.0 / n, &mut v);
    v
}

/// Smallest eigenvalue of a symmetric operator given by its action.
pub fn min_eigenvalue_of<F: FnMut(&[f64]) -> Vec<f64>>(
    dim: usize,
    apply: F,
    maxiter: usize,
    tol: f64,
    method: EigenMethod,
) -> EigenEstimate {
    if dim == 0 {
        return EigenEstimate { value: f64::NAN, converged: false, iterations: 0 };
    }
    match method {
        EigenMethod::Lanczos => lanczos(dim, apply, maxiter, tol),
        EigenMethod::ShiftedPower => shifted_power(dim, apply, maxiter, tol),
    }
}

/// Estimate of `lambda_min(hess Phi(x))` from finite-difference products.
pub fn min_eigenvalue<V: ValueFunction + ?Sized>(phi: &V, x: &[f64], settings: &EigenSettings) -> Result<EigenEstimate> {
    settings.validate()?;
    Ok(min_eigenvalue_of(
        x.len(),
        |d| hvp(phi, x, d, settings.h),
        settings.maxiter,
        settings.tol,
        settings.method,
    ))
}

fn tridiagonal_min(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (val, eig.eigenvectors[(m - 1, idx)])
}

fn lanczos<F: FnMut(&[f64]) -> Vec<f64>>(dim: usize, mut apply: F, maxiter: usize, tol: f64) -> EigenEstimate {
    let mut basis: Vec<Vec<f64>> = vec![start_vector(dim)];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut estimate = f64::NAN;
    for j in 0..maxiter.min(dim) {
        let mut w = apply(&basis[j]);
        alpha.push(vecops::dot(&basis[j], &w));
        // Two passes of full reorthogonalization.
        for _ in 0..2 {
            for b in &basis {
                let c = vecops::dot(b, &w);
                vecops::axpy(-c, b, &mut w);
            }
        }
        let b_next = vecops::norm(&w);
        let (theta, s_last) = tridiagonal_min(&alpha, &beta);
        estimate = theta;
        let scale = alpha.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        if b_next * s_last.abs() < tol || b_next <= 1e-12 * scale || j + 1 == dim {
            return EigenEstimate { value: theta, converged: true, iterations: j + 1 };
        }
        beta.push(b_next);
        vecops::scale(1.0 / b_next, &mut w);
        basis.push(w);
    }
    EigenEstimate { value: estimate, converged: false, iterations: maxiter.min(dim) }
}

fn power<F: FnMut(&[f64]) -> Vec<f64>>(dim: usize, apply: &mut F, maxiter: usize, tol: f64) -> (f64, f64, bool, usize) {
    let mut q = start_vector(dim);
    let mut rq = f64::NAN;
    let mut last_norm = 0.0;
    for it in 1..=maxiter {
        let w = apply(&q);
        let next = vecops::dot(&q, &w);
        last_norm = vecops::norm(&w);
        if (next - rq).abs() < tol {
            return (next, last_norm, true, it);
        }
        rq = next;
        if last_norm == 0.0 {
            return (0.0, 0.0, true, it);
        }
        q = w;
        vecops::scale(1.0 / last_norm, &mut q);
    }
    (rq, last_norm, false, maxiter)
}

fn shifted_power<F: FnMut(&[f64]) -> Vec<f64>>(dim: usize, mut apply: F, maxiter: usize, tol: f64) -> EigenEstimate {
    let (_, norm_est, _, used) = power(dim, &mut apply, maxiter, tol);
    let shift = 1.05 * norm_est + tol;
    let mut shifted = |v: &[f64]| {
        let mut w = apply(v);
        for (wi, vi) in w.iter_mut().zip(v) {
            *wi = shift * vi - *wi;
        }
        w
    };
    let (top, _, converged, its) = power(dim, &mut shifted, maxiter, tol * 1e-2);
    EigenEstimate { value: shift - top, converged, iterations: used + its }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SospCertificate {
    pub grad_norm: f64,
    pub lambda_min: f64,
    pub alpha: f64,
    pub alpha_h: f64,
    pub passes: bool,
    /// False when the eigensolver stopped at `maxiter`; `lambda_min` is then the last estimate.
    pub eigen_converged: bool,
}

/// Checks `||grad Phi(x)|| <= alpha` and `lambda_min >= -sqrt(rho_phi alpha)`.
pub fn sosp_check<V: ValueFunction + ?Sized>(
    phi: &V,
    x: &[f64],
    alpha: f64,
    rho_phi: f64,
    settings: &EigenSettings,
) -> Result<SospCertificate> {
    if !(alpha > 0.0) {
        return Err(Error::param("alpha", "must be positive"));
    }
    if !(rho_phi > 0.0 && rho_phi.is_finite()) {
        return Err(Error::param("rho_phi", "must be positive and finite"));
    }
    let grad_norm = vecops::norm(&phi.value_gradient(x));
    let eig = min_eigenvalue(phi, x, settings)?;
    Ok(certificate(grad_norm, eig, alpha, rho_phi))
}

pub(crate) fn certificate(grad_norm: f64, eig: EigenEstimate, alpha: f64, rho_phi: f64) -> SospCertificate {
    let alpha_h = (rho_phi * alpha).sqrt();
    SospCertificate {
        grad_norm,
        lambda_min: eig.value,
        alpha,
        alpha_h,
        passes: grad_norm <= alpha && eig.value >= -alpha_h,
        eigen_converged: eig.converged,
    }
}

/// Exact-hook instruments used by the optimizers to fill trajectory rows.
pub struct Evaluator<'a> {
    pub phi: &'a dyn ValueFunction,
    pub eigen: EigenSettings,
    /// Estimate `lambda_min` every this many iterations; 0 means only at the end.
    pub eig_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub phi: f64,
    pub grad_norm: f64,
    pub lambda_min: Option<EigenEstimate>,
}

impl<'a> Evaluator<'a> {
    pub fn new(phi: &'a dyn ValueFunction) -> Self {
        Self { phi, eigen: EigenSettings::default(), eig_every: 1 }
    }

    pub fn with_eig_every(mut self, every: usize) -> Self {
        self.eig_every = every;
        self
    }

    pub fn evaluate(&self, t: usize, x: &[f64], last: bool) -> Evaluation {
        let want_eig = last || (self.eig_every > 0 && t % self.eig_every == 0);
        Evaluation {
            phi: self.phi.value(x),
            grad_norm: vecops::norm(&self.phi.value_gradient(x)),
            lambda_min: want_eig.then(|| {
                min_eigenvalue_of(
                    x.len(),
                    |d| hvp(self.phi, x, d, self.eigen.h),
                    self.eigen.maxiter,
                    self.eigen.tol,
                    self.eigen.method,
                )
            }),
        }
    }
}
