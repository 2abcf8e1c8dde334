//! Synthetic low-rank matrix sensing posed as a minimax problem.
//!
//! Per-sample loss `F_i(U, V, y) = y_i (<A_i, U V^T> - b_i) - y_i^2 / 2`; the
//! oracle's batch mean supplies the `1/n`. Maximizing over `y` recovers the
//! least-squares value `Phi(U, V) = (1/2n) sum_i r_i^2`.
//!
//! The x-variable is `vec(U) || vec(V)`, both row-major, of length `(p+q) r`.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{ExactMinimax, MinimaxOracle, MinimizationOracle, ValueFunction};
use crate::rng::{RandomSource, Stream};

/// Shape and noise level of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatrixSensingSpec {
    pub p: usize,
    pub q: usize,
    pub rank: usize,
    pub n: usize,
    pub sigma_noise: f64,
    /// Frobenius norm of the planted matrix.
    pub target_scale: f64,
}

impl Default for MatrixSensingSpec {
    fn default() -> Self {
        Self {
            p: 20,
            q: 20,
            rank: 3,
            n: 400,
            sigma_noise: 0.01,
            target_scale: 1.0,
        }
    }
}

impl MatrixSensingSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q), ("rank", self.rank), ("n", self.n)] {
            if v == 0 {
                return Err(Error::param(name, "must be at least 1"));
            }
        }
        if self.rank > self.p.min(self.q) {
            return Err(Error::param(
                "rank",
                format!("rank {} exceeds min(p, q) = {}", self.rank, self.p.min(self.q)),
            ));
        }
        if !(self.sigma_noise >= 0.0 && self.sigma_noise.is_finite()) {
            return Err(Error::param("sigma_noise", "must be finite and non-negative"));
        }
        if !(self.target_scale >= 0.0 && self.target_scale.is_finite()) {
            return Err(Error::param("target_scale", "must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn dim_x(&self) -> usize {
        (self.p + self.q) * self.rank
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSensingInstance {
    pub p: usize,
    pub q: usize,
    pub rank: usize,
    pub n: usize,
    pub sigma_noise: f64,
    /// `n` sensing matrices, each `p x q` row-major.
    pub sensing: Vec<Vec<f64>>,
    pub measurements: Vec<f64>,
    /// Planted matrix, `p x q` row-major.
    pub x_star: Vec<f64>,
}

impl MatrixSensingInstance {
    /// Draws `A_i ~ N(0, 1/(pq))`, a planted rank-`r` matrix and noisy measurements.
    pub fn generate(rng: &mut RandomSource, spec: &MatrixSensingSpec) -> Result<Self> {
        spec.validate()?;
        let MatrixSensingSpec { p, q, rank, n, .. } = *spec;
        let rng = rng.stream(Stream::Data);
        let std = Normal::new(0.0, 1.0).expect("unit normal");

        let u: Vec<f64> = (0..p * rank).map(|_| std.sample(rng)).collect();
        let v: Vec<f64> = (0..q * rank).map(|_| std.sample(rng)).collect();
        let mut x_star = vec![0.0; p * q];
        for a in 0..p {
            for b in 0..q {
                x_star[a * q + b] = (0..rank).map(|k| u[a * rank + k] * v[b * rank + k]).sum();
            }
        }
        let fro = crate::vecops::norm(&x_star);
        let factor = if fro > 0.0 { spec.target_scale / fro } else { 0.0 };
        crate::vecops::scale(factor, &mut x_star);

        let entry = Normal::new(0.0, (1.0 / (p * q) as f64).sqrt()).expect("positive std");
        let sensing: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p * q).map(|_| entry.sample(rng)).collect())
            .collect();
        let measurements = sensing
            .iter()
            .map(|a| crate::vecops::dot(a, &x_star) + spec.sigma_noise * std.sample(rng))
            .collect();
        Ok(Self {
            p,
            q,
            rank,
            n,
            sigma_noise: spec.sigma_noise,
            sensing,
            measurements,
            x_star,
        })
    }

    /// Builds an instance from explicit data, checking shapes.
    pub fn from_parts(
        p: usize,
        q: usize,
        rank: usize,
        sensing: Vec<Vec<f64>>,
        measurements: Vec<f64>,
    ) -> Result<Self> {
        let inst = Self {
            p,
            q,
            rank,
            n: sensing.len(),
            sigma_noise: 0.0,
            sensing,
            measurements,
            x_star: vec![0.0; p * q],
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        MatrixSensingSpec {
            p: self.p,
            q: self.q,
            rank: self.rank,
            n: self.n,
            sigma_noise: self.sigma_noise,
            target_scale: 1.0,
        }
        .validate()?;
        let pq = self.p * self.q;
        let check = |what, expected, actual| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { what, expected, actual })
            }
        };
        check("sensing count", self.n, self.sensing.len())?;
        check("measurement count", self.n, self.measurements.len())?;
        check("planted matrix entries", pq, self.x_star.len())?;
        for a in &self.sensing {
            check("sensing matrix entries", pq, a.len())?;
        }
        Ok(())
    }

    pub fn spec(&self) -> MatrixSensingSpec {
        MatrixSensingSpec {
            p: self.p,
            q: self.q,
            rank: self.rank,
            n: self.n,
            sigma_noise: self.sigma_noise,
            target_scale: crate::vecops::norm(&self.x_star),
        }
    }

    /// `U_0, V_0` with i.i.d. `N(0, 0.1^2)` entries and `y_0 = 0`.
    pub fn initial_point(&self, rng: &mut RandomSource) -> (Vec<f64>, Vec<f64>) {
        let x0 = rng.gaussian_vec(Stream::Init, self.dim_x(), 0.1);
        (x0, vec![0.0; self.n])
    }

    pub fn dim_x(&self) -> usize {
        (self.p + self.q) * self.rank
    }

    /// `U V^T`, row-major `p x q`.
    pub fn product(&self, x: &[f64]) -> Vec<f64> {
        let (p, q, r) = (self.p, self.q, self.rank);
        let (u, v) = x.split_at(p * r);
        let mut m = vec![0.0; p * q];
        for a in 0..p {
            let ua = &u[a * r..(a + 1) * r];
            for b in 0..q {
                let vb = &v[b * r..(b + 1) * r];
                m[a * q + b] = ua.iter().zip(vb).map(|(s, t)| s * t).sum();
            }
        }
        m
    }

    /// `r_i = <A_i, U V^T> - b_i` for every sample.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let m = self.product(x);
        self.sensing
            .iter()
            .zip(&self.measurements)
            .map(|(a, b)| crate::vecops::dot(a, &m) - b)
            .collect()
    }

    fn residual(&self, m: &[f64], i: usize) -> f64 {
        crate::vecops::dot(&self.sensing[i], m) - self.measurements[i]
    }

    /// Writes `weight * (A V, A^T U)` into `g` for the matrix `a`.
    fn accumulate_factor_gradient(&self, a: &[f64], x: &[f64], weight: f64, g: &mut [f64]) {
        let (p, q, r) = (self.p, self.q, self.rank);
        let (u, v) = x.split_at(p * r);
        let (gu, gv) = g.split_at_mut(p * r);
        for row in 0..p {
            let ua = &u[row * r..(row + 1) * r];
            for col in 0..q {
                let w = weight * a[row * q + col];
                if w == 0.0 {
                    continue;
                }
                let vb = &v[col * r..(col + 1) * r];
                for k in 0..r {
                    gu[row * r + k] += w * vb[k];
                    gv[col * r + k] += w * ua[k];
                }
            }
        }
    }

    /// `G = (1/n) sum_i r_i A_i` at `x`, with the residuals.
    fn weighted_sensing(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let res = self.residuals(x);
        let mut g = vec![0.0; self.p * self.q];
        for (a, r) in self.sensing.iter().zip(&res) {
            crate::vecops::axpy(*r / self.n as f64, a, &mut g);
        }
        (g, res)
    }
}

impl MinimaxOracle for MatrixSensingInstance {
    fn num_samples(&self) -> usize {
        self.n
    }
    fn dim_x(&self) -> usize {
        MatrixSensingInstance::dim_x(self)
    }
    fn dim_y(&self) -> usize {
        self.n
    }

    fn sample_gradient(&self, x: &[f64], y: &[f64], i: usize, gx: &mut [f64], gy: &mut [f64]) {
        let m = self.product(x);
        gx.fill(0.0);
        self.accumulate_factor_gradient(&self.sensing[i], x, y[i], gx);
        gy.fill(0.0);
        gy[i] = self.residual(&m, i) - y[i];
    }
}

impl ValueFunction for MatrixSensingInstance {
    fn dim(&self) -> usize {
        MatrixSensingInstance::dim_x(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * crate::vecops::norm_sq(&self.residuals(x)) / self.n as f64
    }

    fn value_gradient(&self, x: &[f64]) -> Vec<f64> {
        let (g, _) = self.weighted_sensing(x);
        let mut out = vec![0.0; MatrixSensingInstance::dim_x(self)];
        self.accumulate_factor_gradient(&g, x, 1.0, &mut out);
        out
    }
}

impl ExactMinimax for MatrixSensingInstance {
    fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let res = self.residuals(x);
        res.iter().zip(y).map(|(r, yi)| yi * r - 0.5 * yi * yi).sum::<f64>() / self.n as f64
    }

    fn inner_maximizer(&self, x: &[f64]) -> Vec<f64> {
        self.residuals(x)
    }
}

/// The squared-residual losses `1/2 r_i^2` as a finite-sum minimization problem.
#[derive(Debug, Clone, Copy)]
pub struct ResidualLoss<'a>(pub &'a MatrixSensingInstance);

impl MinimizationOracle for ResidualLoss<'_> {
    fn num_samples(&self) -> usize {
        self.0.n
    }
    fn dim(&self) -> usize {
        self.0.dim_x()
    }
    fn sample_gradient(&self, x: &[f64], i: usize, g: &mut [f64]) {
        let m = self.0.product(x);
        let r = self.0.residual(&m, i);
        g.fill(0.0);
        self.0.accumulate_factor_gradient(&self.0.sensing[i], x, r, g);
    }
}

impl ValueFunction for ResidualLoss<'_> {
    fn dim(&self) -> usize {
        self.0.dim_x()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(x)
    }
    fn value_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.0.value_gradient(x)
    }
}
