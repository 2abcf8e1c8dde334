//! Comparison methods: DP-SGDA on the saddle objective and private SPIDER
//! minimization run directly on the value function's finite sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escape::{row, RunHooks};
use crate::noise_draw;
use crate::oracle::{MinimaxOracle, MinimizationOracle};
use crate::params::{AlgoParams, ClipPlacement};
use crate::privacy::{clip_in_place, NoiseScale};
use crate::rng::{RandomSource, Stream};
use crate::spider::sample_batch;
use crate::trajectory::Trajectory;
use crate::vecops;

/// Step sizes of the simultaneous gradient descent-ascent baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdaSteps {
    pub eta_x: f64,
    pub eta_y: f64,
}

impl Default for SgdaSteps {
    fn default() -> Self {
        Self { eta_x: 0.002, eta_y: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub x_out: Vec<f64>,
    pub y_out: Option<Vec<f64>>,
    /// Private queries answered per coordinate block.
    pub queries: usize,
    pub trajectory: Trajectory,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be positive and finite"))
    }
}

/// DP-SGDA: `params.big_t` steps on batches of `params.s2`, per-sample
/// clipping at `params.clip_refresh`, noise from the refresh slots of `noise`.
/// The observer in `hooks` is not called.
pub fn dp_sgda<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    rng: &mut RandomSource,
    x0: &[f64],
    y0: &[f64],
    params: &AlgoParams,
    steps: SgdaSteps,
    noise: &NoiseScale,
    hooks: &RunHooks<'_>,
) -> Result<BaselineOutcome> {
    params.validate(oracle.num_samples())?;
    positive("eta_x", steps.eta_x)?;
    positive("eta_y", steps.eta_y)?;
    if x0.len() != oracle.dim_x() || y0.len() != oracle.dim_y() {
        return Err(Error::DimensionMismatch {
            what: "starting point",
            expected: oracle.dim_x() + oracle.dim_y(),
            actual: x0.len() + y0.len(),
        });
    }
    let domain = oracle.domain();
    let mut x = x0.to_vec();
    let mut y = domain.projected(y0);
    let mut gx = vec![0.0; x.len()];
    let mut gy = vec![0.0; y.len()];
    let mut trajectory = Trajectory::default();
    for t in 0..params.big_t {
        let batch = sample_batch(rng.stream(Stream::Subsampling), oracle.num_samples(), params.s2);
        let mut mx = vec![0.0; x.len()];
        let mut my = vec![0.0; y.len()];
        for &i in &batch {
            oracle.sample_gradient(&x, &y, i, &mut gx, &mut gy);
            clip_in_place(&mut gx, params.clip_refresh);
            clip_in_place(&mut gy, params.clip_refresh);
            vecops::axpy(1.0, &gx, &mut mx);
            vecops::axpy(1.0, &gy, &mut my);
        }
        let inv = 1.0 / batch.len() as f64;
        vecops::scale(inv, &mut mx);
        vecops::scale(inv, &mut my);
        noise_draw::add_gaussian(rng, &mut mx, noise.sigma_refresh_x);
        noise_draw::add_gaussian(rng, &mut my, noise.sigma_refresh_y);
        trajectory.push(row(hooks, t, "descent", &x, Some(vecops::norm(&mx)), t + 1, false));
        vecops::axpy(-steps.eta_x, &mx, &mut x);
        vecops::axpy(steps.eta_y, &my, &mut y);
        domain.project(&mut y);
    }
    let queries = params.big_t;
    trajectory.push(row(hooks, queries, "output", &x, None, queries, true));
    Ok(BaselineOutcome { x_out: x, y_out: Some(y), queries, trajectory })
}

fn clipped_mean<O: MinimizationOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    old: Option<&[f64]>,
    batch: &[usize],
    clip: f64,
    placement: ClipPlacement,
) -> Vec<f64> {
    let d = oracle.dim();
    let mut g = vec![0.0; d];
    let mut h = vec![0.0; d];
    let mut m = vec![0.0; d];
    for &i in batch {
        oracle.sample_gradient(x, i, &mut g);
        if let Some(old) = old {
            oracle.sample_gradient(old, i, &mut h);
            for (a, b) in g.iter_mut().zip(&h) {
                *a -= b;
            }
        }
        if placement == ClipPlacement::PerSample {
            clip_in_place(&mut g, clip);
        }
        vecops::axpy(1.0, &g, &mut m);
    }
    vecops::scale(1.0 / batch.len() as f64, &mut m);
    if placement == ClipPlacement::Aggregate {
        clip_in_place(&mut m, clip);
    }
    m
}

/// Private SPIDER minimization with plain steps `x <- x - eta v`.
///
/// Refresh and incremental privatization match the inner updater's x block;
/// refresh steps answer only the refresh query. The observer in `hooks` is
/// not called.
pub fn dp_spider_min<O: MinimizationOracle + ?Sized>(
    oracle: &O,
    rng: &mut RandomSource,
    x0: &[f64],
    params: &AlgoParams,
    eta: f64,
    noise: &NoiseScale,
    hooks: &RunHooks<'_>,
) -> Result<BaselineOutcome> {
    params.validate(oracle.num_samples())?;
    positive("eta", eta)?;
    if x0.len() != oracle.dim() {
        return Err(Error::DimensionMismatch { what: "x0", expected: oracle.dim(), actual: x0.len() });
    }
    let n = oracle.num_samples();
    let mut x = x0.to_vec();
    let mut x_prev = x.clone();
    let mut v = vec![0.0; x.len()];
    let mut trajectory = Trajectory::default();
    for t in 0..params.big_t {
        if t % params.period_q == 0 {
            let batch = sample_batch(rng.stream(Stream::Subsampling), n, params.s1);
            v = clipped_mean(oracle, &x, None, &batch, params.clip_refresh, params.clip_placement);
            noise_draw::add_gaussian(rng, &mut v, noise.sigma_refresh_x);
        } else {
            let batch = sample_batch(rng.stream(Stream::Subsampling), n, params.s2);
            let diff = clipped_mean(oracle, &x, Some(&x_prev), &batch, params.clip_incremental, params.clip_placement);
            vecops::axpy(1.0, &diff, &mut v);
            let movement = if noise.inc_per_unit_movement { vecops::distance(&x, &x_prev) } else { 1.0 };
            noise_draw::add_gaussian(rng, &mut v, noise.incremental(movement).0);
        }
        trajectory.push(row(hooks, t, "descent", &x, Some(vecops::norm(&v)), t + 1, false));
        x_prev.copy_from_slice(&x);
        vecops::axpy(-eta, &v, &mut x);
    }
    let queries = params.big_t;
    trajectory.push(row(hooks, queries, "output", &x, None, queries, true));
    Ok(BaselineOutcome { x_out: x, y_out: None, queries, trajectory })
}
