//! Differentially private recursive gradient descent-ascent (DP-RGDA).
//!
//! The crate finds approximate second-order stationary points of
//! nonconvex-strongly-concave minimax problems `min_x max_{y in Y} f(x, y)`
//! under (epsilon, delta)-differential privacy. It is organised around:
//!
//! - [`oracle`]: the per-sample gradient surface that is the only access to data,
//! - [`privacy`]: clipping, the Gaussian mechanism, noise calibration and accounting,
//! - [`spider`]: the privatized recursive (SPIDER) estimators and inner ascent loop,
//! - [`escape`]: the outer descent / perturb-and-monitor state machine,
//! - [`problems`]: matrix sensing and analytic quadratic instances,
//! - [`diagnostics`]: evaluation-only curvature and stationarity instruments,
//! - [`baselines`]: DP-SGDA and SPIDER minimization on the value function,
//! - [`experiment`]: configuration, runs, comparisons and file outputs.

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod escape;
pub mod experiment;
mod noise_draw;
pub mod oracle;
pub mod params;
pub mod privacy;
pub mod problems;
pub mod rng;
pub mod spider;
pub mod trajectory;
pub mod vecops;

pub use error::{Error, Result};
pub use escape::{run, Phase, RunHooks, RunOutcome, StopReason};
pub use oracle::{Domain, ExactMinimax, MinimaxOracle, MinimizationOracle, ValueFunction};
pub use params::{AlgoParams, ClipPlacement, ProblemConstants};
pub use privacy::{NoiseScale, PrivacyBudget};
pub use rng::{RandomSource, Stream};
pub use trajectory::{Trajectory, TrajectoryRow};

/// Real vector in the x block (`d1` coordinates).
pub type PointX = Vec<f64>;
/// Real vector in the y block (`d2` coordinates).
pub type PointY = Vec<f64>;
