//! The statistics-based generator: fit mean and covariance, sample from the
//! fitted normal, clamp each coordinate to `[-1, 1]`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, GaussianParams};
use crate::symmat::{CholeskyFactor, MatrixError};

#[derive(Debug, Error)]
pub enum MechanismError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("covariance is not positive-definite: {0}")]
    Covariance(#[from] MatrixError),
}

/// Reproducible random source: xoshiro256** seeded through SplitMix64, with
/// Box–Muller normal deviates.
///
/// Both generators have published reference constants, so a stream can be
/// replayed by any other implementation given the seed.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256StarStar,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi]`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (sin, cos) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(radius * sin);
        radius * cos
    }
}

/// Draws from `N(μ, Σ)` as `μ + L z` with `L` the Cholesky factor of `Σ`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    factor: CholeskyFactor,
}

impl GaussianSampler {
    pub fn new(params: &GaussianParams) -> Result<Self, MechanismError> {
        Ok(Self {
            mean: params.mean.clone(),
            factor: params.covariance.cholesky()?,
        })
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Vec<f64> {
        let z: Vec<f64> = (0..self.mean.len()).map(|_| rng.standard_normal()).collect();
        self.factor
            .mul_vec(&z)
            .into_iter()
            .zip(&self.mean)
            .map(|(lz, m)| m + lz)
            .collect()
    }
}

/// One unclipped draw from `N(μ, Σ)`.
pub fn sample_gaussian(
    params: &GaussianParams,
    rng: &mut SeededRng,
) -> Result<Vec<f64>, MechanismError> {
    Ok(GaussianSampler::new(params)?.sample(rng))
}

pub fn clip(y: &[f64]) -> Vec<f64> {
    y.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub output_count: usize,
}

/// Output of [`generate_with_preclip`].
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub records: Dataset,
    /// The same draws before clamping.
    pub preclip: Vec<Vec<f64>>,
}

impl Generated {
    /// `(row, column)` of every coordinate the clamp changed.
    pub fn clipped_cells(&self) -> Vec<(usize, usize)> {
        self.preclip
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| v.abs() > 1.0)
                    .map(move |(j, _)| (i, j))
            })
            .collect()
    }
}

/// Emits `cfg.output_count` synthetic records from `data`.
pub fn generate(data: &Dataset, cfg: GeneratorConfig) -> Result<Dataset, MechanismError> {
    Ok(generate_with_preclip(data, cfg)?.records)
}

pub fn generate_with_preclip(
    data: &Dataset,
    cfg: GeneratorConfig,
) -> Result<Generated, MechanismError> {
    let sampler = GaussianSampler::new(&data.mean_cov()?)?;
    let mut rng = SeededRng::new(cfg.seed);
    let preclip: Vec<Vec<f64>> = (0..cfg.output_count)
        .map(|_| sampler.sample(&mut rng))
        .collect();
    let clipped = preclip.iter().map(|y| clip(y)).collect();
    Ok(Generated {
        records: Dataset::new(data.dim(), clipped)?,
        preclip,
    })
}
