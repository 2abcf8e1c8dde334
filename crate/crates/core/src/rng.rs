//! Seeded randomness with independent named streams.
//!
//! Every stream is a ChaCha20 generator keyed by the run seed and separated
//! by the ChaCha stream id, so draws on one stream never shift another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Mini-batch selection.
    Subsampling,
    /// Privacy noise of the Gaussian mechanism.
    GaussianNoise,
    /// Escape-phase ball perturbations.
    Perturbation,
    /// Randomness owned by baseline methods.
    Baseline,
    /// Synthetic data generation.
    Data,
    /// Initial iterates.
    Init,
}

impl Stream {
    const ALL: [Stream; 6] = [
        Stream::Subsampling,
        Stream::GaussianNoise,
        Stream::Perturbation,
        Stream::Baseline,
        Stream::Data,
        Stream::Init,
    ];

    fn id(self) -> u64 {
        match self {
            Stream::Subsampling => 1,
            Stream::GaussianNoise => 2,
            Stream::Perturbation => 3,
            Stream::Baseline => 4,
            Stream::Data => 5,
            Stream::Init => 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    streams: [ChaCha20Rng; 6],
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        let streams = Stream::ALL.map(|s| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(s.id());
            rng
        });
        Self { seed, streams }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&mut self, stream: Stream) -> &mut ChaCha20Rng {
        &mut self.streams[stream.id() as usize - 1]
    }

    /// Fills a vector with i.i.d. `N(0, sigma^2)` draws from `stream`.
    pub fn gaussian_vec(&mut self, stream: Stream, dim: usize, sigma: f64) -> Vec<f64> {
        let rng = self.stream(stream);
        (0..dim)
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Uniform draw over the closed ball of `radius` in `dim` dimensions,
    /// from the perturbation stream.
    pub fn uniform_ball(&mut self, dim: usize, radius: f64) -> Vec<f64> {
        sample_uniform_ball(self.stream(Stream::Perturbation), dim, radius)
    }
}

/// Uniform sample from the `dim`-dimensional ball of the given radius.
///
/// Direction is a normalised standard Gaussian; the radius is `radius * U^(1/dim)`.
pub fn sample_uniform_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    assert!(dim >= 1, "ball dimension must be positive");
    assert!(radius >= 0.0, "ball radius must be non-negative");
    if radius == 0.0 {
        return vec![0.0; dim];
    }
    let mut dir: Vec<f64> = loop {
        let d: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if vecops::norm(&d) > 0.0 {
            break d;
        }
    };
    let u: f64 = rng.random();
    let rho = radius * u.powf(1.0 / dim as f64);
    let scale = rho / vecops::norm(&dir);
    vecops::scale(scale, &mut dir);
    dir
}
