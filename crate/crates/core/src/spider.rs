//! Privatized recursive (SPIDER) estimators and the inner ascent loop.
//!
//! At outer step `t` the estimators `(v, u)` of `(grad_x f, grad_y f)` are
//! either refreshed from a batch of `S1` samples (every `q` steps) or carried
//! over, then updated `K` times from gradient differences on batches of `S2`
//! samples while `y` takes projected ascent steps at the fixed anchor `x_t`.
//! Every batch query is clipped and perturbed before it touches the state.

use rand::Rng;

use crate::noise_draw;
use crate::oracle::{Domain, MinimaxOracle};
use crate::params::{AlgoParams, ClipPlacement};
use crate::privacy::{clip_in_place, NoiseScale};
use crate::rng::{RandomSource, Stream};
use crate::vecops;

/// Recursive estimates `v ~ grad_x f` and `u ~ grad_y f` at the current iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorPair {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
}

/// Input of one inner-loop call.
#[derive(Debug, Clone, Copy)]
pub struct IterateState<'a> {
    pub t: usize,
    pub x: &'a [f64],
    /// `x_{t-1}`; `None` at `t = 0`.
    pub x_prev: Option<&'a [f64]>,
    pub y: &'a [f64],
    /// `(v_{t-1}, u_{t-1})`; `None` before the first refresh.
    pub estimators: Option<&'a EstimatorPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerStep {
    pub y: Vec<f64>,
    /// `||G~_lambda(y_{t,k})||` computed from the privatized `u_{t,k}`.
    pub mapping_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub y_next: Vec<f64>,
    pub v_out: Vec<f64>,
    pub u_out: Vec<f64>,
    pub selected_k: usize,
    pub inner_path: Vec<InnerStep>,
    pub refreshed: bool,
    /// Private queries answered by each coordinate block during this call.
    pub queries: usize,
}

/// Indices of a batch drawn without replacement; the full dataset when `size >= n`.
pub fn sample_batch<R: Rng + ?Sized>(rng: &mut R, n: usize, size: usize) -> Vec<usize> {
    if size >= n {
        return (0..n).collect();
    }
    let mut idx = rand::seq::index::sample(rng, n, size).into_vec();
    idx.sort_unstable();
    idx
}

/// `||(y - Pi_Y(y + lambda u)) / lambda||`.
pub fn mapping_norm(domain: &Domain, y: &[f64], u: &[f64], lambda: f64) -> f64 {
    let mut step = y.to_vec();
    vecops::axpy(lambda, u, &mut step);
    domain.project(&mut step);
    vecops::distance(y, &step) / lambda
}

struct Buffers {
    gx: Vec<f64>,
    gy: Vec<f64>,
    hx: Vec<f64>,
    hy: Vec<f64>,
}

impl Buffers {
    fn new<O: MinimaxOracle + ?Sized>(oracle: &O) -> Self {
        Self {
            gx: vec![0.0; oracle.dim_x()],
            gy: vec![0.0; oracle.dim_y()],
            hx: vec![0.0; oracle.dim_x()],
            hy: vec![0.0; oracle.dim_y()],
        }
    }
}

/// Clipped batch mean of per-sample gradients at `(x, y)`.
fn clipped_mean<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    y: &[f64],
    batch: &[usize],
    clip: f64,
    placement: ClipPlacement,
    buf: &mut Buffers,
) -> (Vec<f64>, Vec<f64>) {
    let mut mx = vec![0.0; oracle.dim_x()];
    let mut my = vec![0.0; oracle.dim_y()];
    for &i in batch {
        oracle.sample_gradient(x, y, i, &mut buf.gx, &mut buf.gy);
        if placement == ClipPlacement::PerSample {
            clip_in_place(&mut buf.gx, clip);
            clip_in_place(&mut buf.gy, clip);
        }
        vecops::axpy(1.0, &buf.gx, &mut mx);
        vecops::axpy(1.0, &buf.gy, &mut my);
    }
    let inv = 1.0 / batch.len() as f64;
    vecops::scale(inv, &mut mx);
    vecops::scale(inv, &mut my);
    if placement == ClipPlacement::Aggregate {
        clip_in_place(&mut mx, clip);
        clip_in_place(&mut my, clip);
    }
    (mx, my)
}

/// Clipped batch mean of per-sample gradient differences between `new` and `old`.
#[allow(clippy::too_many_arguments)]
fn clipped_mean_difference<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    old: (&[f64], &[f64]),
    new: (&[f64], &[f64]),
    batch: &[usize],
    clip: f64,
    placement: ClipPlacement,
    buf: &mut Buffers,
) -> (Vec<f64>, Vec<f64>) {
    let mut mx = vec![0.0; oracle.dim_x()];
    let mut my = vec![0.0; oracle.dim_y()];
    for &i in batch {
        oracle.sample_gradient(new.0, new.1, i, &mut buf.gx, &mut buf.gy);
        oracle.sample_gradient(old.0, old.1, i, &mut buf.hx, &mut buf.hy);
        for (g, h) in buf.gx.iter_mut().zip(&buf.hx) {
            *g -= h;
        }
        for (g, h) in buf.gy.iter_mut().zip(&buf.hy) {
            *g -= h;
        }
        if placement == ClipPlacement::PerSample {
            clip_in_place(&mut buf.gx, clip);
            clip_in_place(&mut buf.gy, clip);
        }
        vecops::axpy(1.0, &buf.gx, &mut mx);
        vecops::axpy(1.0, &buf.gy, &mut my);
    }
    let inv = 1.0 / batch.len() as f64;
    vecops::scale(inv, &mut mx);
    vecops::scale(inv, &mut my);
    if placement == ClipPlacement::Aggregate {
        clip_in_place(&mut mx, clip);
        clip_in_place(&mut my, clip);
    }
    (mx, my)
}

/// Large-batch refresh: `v = omega + Clip(mean grad_x F, C_v)`, `u = tau + Clip(mean grad_y F, C_v)`.
pub fn refresh<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    rng: &mut RandomSource,
    x: &[f64],
    y: &[f64],
    params: &AlgoParams,
    noise: &NoiseScale,
) -> EstimatorPair {
    let mut buf = Buffers::new(oracle);
    refresh_with(oracle, rng, x, y, params, noise, &mut buf)
}

fn refresh_with<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    rng: &mut RandomSource,
    x: &[f64],
    y: &[f64],
    params: &AlgoParams,
    noise: &NoiseScale,
    buf: &mut Buffers,
) -> EstimatorPair {
    let batch = sample_batch(rng.stream(Stream::Subsampling), oracle.num_samples(), params.s1);
    let (mut v, mut u) = clipped_mean(oracle, x, y, &batch, params.clip_refresh, params.clip_placement, buf);
    noise_draw::add_gaussian(rng, &mut v, noise.sigma_refresh_x);
    noise_draw::add_gaussian(rng, &mut u, noise.sigma_refresh_y);
    EstimatorPair { v, u }
}

/// SPIDER increment from `w_old = (x_old, y_old)` to `w_new = (x_new, y_new)`.
///
/// Noise is added even when the two points coincide, so the mechanism does
/// not depend on the data.
pub fn incremental_update<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    rng: &mut RandomSource,
    prev: &EstimatorPair,
    w_old: (&[f64], &[f64]),
    w_new: (&[f64], &[f64]),
    params: &AlgoParams,
    noise: &NoiseScale,
) -> EstimatorPair {
    let mut buf = Buffers::new(oracle);
    incremental_with(oracle, rng, prev, w_old, w_new, params, noise, &mut buf)
}

#[allow(clippy::too_many_arguments)]
fn incremental_with<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    rng: &mut RandomSource,
    prev: &EstimatorPair,
    w_old: (&[f64], &[f64]),
    w_new: (&[f64], &[f64]),
    params: &AlgoParams,
    noise: &NoiseScale,
    buf: &mut Buffers,
) -> EstimatorPair {
    let batch = sample_batch(rng.stream(Stream::Subsampling), oracle.num_samples(), params.s2);
    let (dx, dy) = clipped_mean_difference(
        oracle,
        w_old,
        w_new,
        &batch,
        params.clip_incremental,
        params.clip_placement,
        buf,
    );
    let movement = if noise.inc_per_unit_movement {
        (vecops::distance(w_old.0, w_new.0).powi(2) + vecops::distance(w_old.1, w_new.1).powi(2)).sqrt()
    } else {
        1.0
    };
    let (sx, sy) = noise.incremental(movement);
    let mut v = prev.v.clone();
    let mut u = prev.u.clone();
    vecops::axpy(1.0, &dx, &mut v);
    vecops::axpy(1.0, &dy, &mut u);
    noise_draw::add_gaussian(rng, &mut v, sx);
    noise_draw::add_gaussian(rng, &mut u, sy);
    EstimatorPair { v, u }
}

/// One call of the inner updater at outer step `state.t`.
///
/// Candidates are `y_{t,0..K-1}`, each paired with the estimators computed at
/// it; the one with the smallest privatized gradient mapping wins (lowest `k`
/// on ties).
pub fn inner_loop<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    rng: &mut RandomSource,
    state: &IterateState<'_>,
    params: &AlgoParams,
    noise: &NoiseScale,
) -> InnerResult {
    let domain = oracle.domain();
    let mut buf = Buffers::new(oracle);
    let refreshing = state.t % params.period_q == 0 || state.estimators.is_none();

    // A refreshed estimate already sits at (x_t, y_t), so the first difference
    // is taken from there; a carried one sits at (x_{t-1}, y_t).
    let (mut est, mut prev_x) = match (refreshing, state.estimators, state.x_prev) {
        (false, Some(e), Some(xp)) => (e.clone(), xp.to_vec()),
        (false, Some(e), None) => (e.clone(), state.x.to_vec()),
        _ => (
            refresh_with(oracle, rng, state.x, state.y, params, noise, &mut buf),
            state.x.to_vec(),
        ),
    };
    let mut prev_y = state.y.to_vec();
    let mut y = state.y.to_vec();

    let mut path = Vec::with_capacity(params.inner_k);
    let mut estimates = Vec::with_capacity(params.inner_k);
    for _ in 0..params.inner_k {
        est = incremental_with(
            oracle,
            rng,
            &est,
            (&prev_x, &prev_y),
            (state.x, &y),
            params,
            noise,
            &mut buf,
        );
        path.push(InnerStep {
            y: y.clone(),
            mapping_norm: mapping_norm(&domain, &y, &est.u, params.lambda),
        });
        estimates.push(est.clone());
        prev_x.copy_from_slice(state.x);
        prev_y.copy_from_slice(&y);
        vecops::axpy(params.lambda, &est.u, &mut y);
        domain.project(&mut y);
    }

    let selected_k = path
        .iter()
        .enumerate()
        .fold(0, |best, (k, s)| if s.mapping_norm < path[best].mapping_norm { k } else { best });
    let EstimatorPair { v, u } = estimates.swap_remove(selected_k);
    InnerResult {
        y_next: path[selected_k].y.clone(),
        v_out: v,
        u_out: u,
        selected_k,
        inner_path: path,
        refreshed: refreshing,
        queries: params.inner_k + usize::from(refreshing),
    }
}
