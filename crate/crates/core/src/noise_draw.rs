use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{RandomSource, Stream};

/// Adds i.i.d. `N(0, sigma^2)` noise from the Gaussian-noise stream; no draws when `sigma == 0`.
pub(crate) fn add_gaussian(rng: &mut RandomSource, v: &mut [f64], sigma: f64) {
    if sigma == 0.0 {
        return;
    }
    let r = rng.stream(Stream::GaussianNoise);
    for vi in v.iter_mut() {
        *vi += sigma * r.sample::<f64, _>(StandardNormal);
    }
}
