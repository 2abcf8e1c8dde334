use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::vecops;

/// Scales `x` onto the ball of radius `c` if it lies outside it.
///
/// The zero vector is returned unchanged.
pub fn clip(x: &[f64], c: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    clip_in_place(&mut out, c);
    out
}

pub fn clip_in_place(x: &mut [f64], c: f64) {
    debug_assert!(c > 0.0, "clip threshold must be positive");
    let n = vecops::norm(x);
    if n > c {
        vecops::scale(c / n, x);
    }
}

/// Standard deviation of the Gaussian mechanism: `sensitivity * sqrt(ln(1.25/delta)) / eps`.
pub fn gaussian_sigma(sensitivity: f64, eps: f64, delta: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if !(sensitivity >= 0.0) {
        return Err(Error::param(
            "sensitivity",
            format!("must be non-negative, got {sensitivity}"),
        ));
    }
    if eps >= 1.0 {
        log::warn!("Gaussian mechanism used with eps = {eps} >= 1, outside its classical regime");
    }
    if eps.is_infinite() {
        return Ok(0.0);
    }
    Ok(sensitivity * (1.25 / delta).ln().sqrt() / eps)
}

/// Releases `value + z` with `z ~ N(0, sigma^2 I)` calibrated by [`gaussian_sigma`].
pub fn gaussian_mechanism<R: Rng + ?Sized>(
    rng: &mut R,
    value: &[f64],
    sensitivity: f64,
    eps: f64,
    delta: f64,
) -> Result<Vec<f64>> {
    let sigma = gaussian_sigma(sensitivity, eps, delta)?;
    if sigma == 0.0 {
        return Ok(value.to_vec());
    }
    Ok(value
        .iter()
        .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect())
}
