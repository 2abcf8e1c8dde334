//! Analytic quadratic problems with known spectra and maximizers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::oracle::{Domain, ExactMinimax, MinimaxOracle, MinimizationOracle, ValueFunction};

/// `Phi(x) = 1/2 x^T H x` for a symmetric `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub h: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn new(h: DMatrix<f64>) -> Self {
        assert!(h.is_square(), "quadratic form needs a square matrix");
        Self { h }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }
}

impl ValueFunction for QuadraticForm {
    fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.h * &x))
    }

    fn value_gradient(&self, x: &[f64]) -> Vec<f64> {
        (&self.h * DVector::from_column_slice(x)).as_slice().to_vec()
    }
}

/// Finite-sum quadratic minimax problem
///
/// `F_i(x, y) = 1/2 x^T Hx x + x^T B y + 1/2 y^T Hy y + a_i^T x + c_i^T y`
///
/// with `Hy` negative definite, so the inner problem is `mu`-strongly
/// concave with `mu = -lambda_max(Hy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSaddle {
    pub h_x: DMatrix<f64>,
    pub coupling: DMatrix<f64>,
    pub h_y: DMatrix<f64>,
    pub shift_x: Vec<Vec<f64>>,
    pub shift_y: Vec<Vec<f64>>,
    pub domain: Domain,
}

impl QuadraticSaddle {
    pub fn new(
        h_x: DMatrix<f64>,
        coupling: DMatrix<f64>,
        h_y: DMatrix<f64>,
        shift_x: Vec<Vec<f64>>,
        shift_y: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let (d1, d2) = (h_x.nrows(), h_y.nrows());
        if !h_x.is_square() || !h_y.is_square() {
            return Err(Error::Config("curvature matrices must be square".into()));
        }
        if coupling.shape() != (d1, d2) {
            return Err(Error::DimensionMismatch {
                what: "coupling rows",
                expected: d1,
                actual: coupling.nrows(),
            });
        }
        if shift_x.is_empty() || shift_x.len() != shift_y.len() {
            return Err(Error::Config("need the same positive number of x and y shifts".into()));
        }
        if shift_x.iter().any(|s| s.len() != d1) || shift_y.iter().any(|s| s.len() != d2) {
            return Err(Error::Config("shift dimensions do not match the blocks".into()));
        }
        let max_eig = h_y.clone().symmetric_eigenvalues().max();
        if !(max_eig < 0.0) {
            return Err(Error::Config(format!(
                "y curvature must be negative definite (largest eigenvalue {max_eig})"
            )));
        }
        Ok(Self {
            h_x,
            coupling,
            h_y,
            shift_x,
            shift_y,
            domain: Domain::Unconstrained,
        })
    }

    /// Uncoupled problem with diagonal curvatures and `n` zero shifts.
    pub fn separable(hx_diag: &[f64], hy_diag: &[f64], n: usize) -> Result<Self> {
        let d1 = hx_diag.len();
        let d2 = hy_diag.len();
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(hx_diag)),
            DMatrix::zeros(d1, d2),
            DMatrix::from_diagonal(&DVector::from_column_slice(hy_diag)),
            vec![vec![0.0; d1]; n],
            vec![vec![0.0; d2]; n],
        )
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// Strong-concavity modulus `-lambda_max(Hy)`.
    pub fn mu(&self) -> f64 {
        -self.h_y.clone().symmetric_eigenvalues().max()
    }

    /// Smoothness of the inner problem, `-lambda_min(Hy)`.
    pub fn inner_lipschitz(&self) -> f64 {
        -self.h_y.clone().symmetric_eigenvalues().min()
    }

    fn mean(shifts: &[Vec<f64>]) -> DVector<f64> {
        let mut m = DVector::zeros(shifts[0].len());
        for s in shifts {
            m += DVector::from_column_slice(s);
        }
        m / shifts.len() as f64
    }

    /// Full-batch `(grad_x f, grad_y f)`.
    pub fn gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let xv = DVector::from_column_slice(x);
        let yv = DVector::from_column_slice(y);
        let gx = &self.h_x * &xv + &self.coupling * &yv + Self::mean(&self.shift_x);
        let gy = self.coupling.transpose() * &xv + &self.h_y * &yv + Self::mean(&self.shift_y);
        (gx.as_slice().to_vec(), gy.as_slice().to_vec())
    }
}

impl MinimaxOracle for QuadraticSaddle {
    fn num_samples(&self) -> usize {
        self.shift_x.len()
    }
    fn dim_x(&self) -> usize {
        self.h_x.nrows()
    }
    fn dim_y(&self) -> usize {
        self.h_y.nrows()
    }
    fn domain(&self) -> Domain {
        self.domain
    }

    fn sample_gradient(&self, x: &[f64], y: &[f64], i: usize, gx: &mut [f64], gy: &mut [f64]) {
        let (d1, d2) = (self.dim_x(), self.dim_y());
        for r in 0..d1 {
            let mut s = self.shift_x[i][r];
            for c in 0..d1 {
                s += self.h_x[(r, c)] * x[c];
            }
            for c in 0..d2 {
                s += self.coupling[(r, c)] * y[c];
            }
            gx[r] = s;
        }
        for r in 0..d2 {
            let mut s = self.shift_y[i][r];
            for c in 0..d1 {
                s += self.coupling[(c, r)] * x[c];
            }
            for c in 0..d2 {
                s += self.h_y[(r, c)] * y[c];
            }
            gy[r] = s;
        }
    }
}

impl ExactMinimax for QuadraticSaddle {
    fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let yv = DVector::from_column_slice(y);
        0.5 * xv.dot(&(&self.h_x * &xv))
            + xv.dot(&(&self.coupling * &yv))
            + 0.5 * yv.dot(&(&self.h_y * &yv))
            + Self::mean(&self.shift_x).dot(&xv)
            + Self::mean(&self.shift_y).dot(&yv)
    }

    fn inner_maximizer(&self, x: &[f64]) -> Vec<f64> {
        let xv = DVector::from_column_slice(x);
        let rhs = self.coupling.transpose() * &xv + Self::mean(&self.shift_y);
        let neg_hy = -self.h_y.clone();
        let unconstrained = neg_hy
            .clone()
            .cholesky()
            .expect("negative-definite y curvature")
            .solve(&rhs);
        match self.domain {
            Domain::Unconstrained => unconstrained.as_slice().to_vec(),
            Domain::Ball { .. } => {
                // Projected ascent with step 1/L converges linearly at rate 1 - mu/L.
                let step = 1.0 / self.inner_lipschitz();
                let mut y = self.domain.projected(unconstrained.as_slice());
                for _ in 0..100_000 {
                    let g = &rhs + &self.h_y * DVector::from_column_slice(&y);
                    let mut next: Vec<f64> = y.iter().zip(g.iter()).map(|(a, b)| a + step * b).collect();
                    self.domain.project(&mut next);
                    let moved = crate::vecops::distance(&next, &y);
                    y = next;
                    if moved < 1e-15 {
                        break;
                    }
                }
                y
            }
        }
    }
}

impl ValueFunction for QuadraticSaddle {
    fn dim(&self) -> usize {
        self.dim_x()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.objective(x, &self.inner_maximizer(x))
    }

    fn value_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient(x, &self.inner_maximizer(x)).0
    }
}

/// A quadratic form seen as a finite sum of identical per-sample losses.
impl MinimizationOracle for QuadraticForm {
    fn num_samples(&self) -> usize {
        1
    }
    fn dim(&self) -> usize {
        self.h.nrows()
    }
    fn sample_gradient(&self, x: &[f64], _i: usize, g: &mut [f64]) {
        g.copy_from_slice(&self.value_gradient(x));
    }
}
