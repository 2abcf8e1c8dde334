//! The data-access surface of a minimax problem.
//!
//! [`MinimaxOracle`] is the only way optimizers touch data: per-sample
//! gradients of `F(x, y; xi_i)` and the projection onto `Y`. Exact evaluation
//! hooks ([`ValueFunction`], [`ExactMinimax`]) exist for diagnostics only and
//! never feed back into an optimizer's iterates.

use serde::{Deserialize, Serialize};

use crate::vecops;

/// Convex feasible set for the y block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    /// `Y = R^{d2}`.
    #[default]
    Unconstrained,
    /// Euclidean ball of `radius` around the origin.
    Ball { radius: f64 },
}

impl Domain {
    /// Euclidean projection, in place.
    pub fn project(&self, y: &mut [f64]) {
        match *self {
            Domain::Unconstrained => {}
            Domain::Ball { radius } => {
                let n = vecops::norm(y);
                if n > radius {
                    vecops::scale(radius / n, y);
                }
            }
        }
    }

    pub fn projected(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        self.project(&mut out);
        out
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        match *self {
            Domain::Unconstrained => true,
            Domain::Ball { radius } => vecops::norm(y) <= radius * (1.0 + 1e-12),
        }
    }
}

/// Per-sample gradient access to `F(x, y; xi_i)`.
///
/// Implementations must be deterministic in `(x, y, i)`.
pub trait MinimaxOracle {
    fn num_samples(&self) -> usize;
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;

    fn domain(&self) -> Domain {
        Domain::Unconstrained
    }

    /// Writes `grad_x F(x, y; xi_i)` into `gx` and `grad_y F(x, y; xi_i)` into `gy`.
    fn sample_gradient(&self, x: &[f64], y: &[f64], i: usize, gx: &mut [f64], gy: &mut [f64]);
}

impl<T: MinimaxOracle + ?Sized> MinimaxOracle for &T {
    fn num_samples(&self) -> usize {
        (**self).num_samples()
    }
    fn dim_x(&self) -> usize {
        (**self).dim_x()
    }
    fn dim_y(&self) -> usize {
        (**self).dim_y()
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn sample_gradient(&self, x: &[f64], y: &[f64], i: usize, gx: &mut [f64], gy: &mut [f64]) {
        (**self).sample_gradient(x, y, i, gx, gy)
    }
}

/// Projects `y` onto the oracle's feasible set.
pub fn project_y<O: MinimaxOracle + ?Sized>(oracle: &O, y: &[f64]) -> Vec<f64> {
    oracle.domain().projected(y)
}

/// Exact empirical gradients `(grad_x f_S, grad_y f_S)` at `(x, y)`.
///
/// Evaluation only; sums run in sample order.
pub fn full_gradient<O: MinimaxOracle + ?Sized>(oracle: &O, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = oracle.num_samples();
    let (mut sx, mut sy) = (vec![0.0; oracle.dim_x()], vec![0.0; oracle.dim_y()]);
    let (mut gx, mut gy) = (vec![0.0; oracle.dim_x()], vec![0.0; oracle.dim_y()]);
    for i in 0..n {
        oracle.sample_gradient(x, y, i, &mut gx, &mut gy);
        vecops::axpy(1.0, &gx, &mut sx);
        vecops::axpy(1.0, &gy, &mut sy);
    }
    let inv = 1.0 / n as f64;
    vecops::scale(inv, &mut sx);
    vecops::scale(inv, &mut sy);
    (sx, sy)
}

/// A smooth function `Phi: R^d -> R` with an exact gradient.
pub trait ValueFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn value_gradient(&self, x: &[f64]) -> Vec<f64>;
}

impl<T: ValueFunction + ?Sized> ValueFunction for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn value_gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).value_gradient(x)
    }
}

/// Minimax problems whose value function `Phi(x) = max_y f(x, y)` and inner
/// maximizer are available in closed form (or to solver precision).
pub trait ExactMinimax: MinimaxOracle + ValueFunction {
    /// `f(x, y)`, the empirical objective.
    fn objective(&self, x: &[f64], y: &[f64]) -> f64;
    /// `y*(x) = argmax_{y in Y} f(x, y)`.
    fn inner_maximizer(&self, x: &[f64]) -> Vec<f64>;
}

/// Per-sample gradient access for plain finite-sum minimization.
pub trait MinimizationOracle {
    fn num_samples(&self) -> usize;
    fn dim(&self) -> usize;
    fn sample_gradient(&self, x: &[f64], i: usize, g: &mut [f64]);
}
