//! Problem instances exposing the [`MinimaxOracle`](crate::oracle::MinimaxOracle) surface.

mod matrix_sensing;
mod quadratic;

pub use matrix_sensing::{MatrixSensingInstance, MatrixSensingSpec, ResidualLoss};
pub use quadratic::{QuadraticForm, QuadraticSaddle};
