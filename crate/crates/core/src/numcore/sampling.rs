use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly distributed Euclidean unit vector.
pub fn unit_direction<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 1e-8 {
            return g / n;
        }
    }
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Axis-aligned box used to draw sample points inside a patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SamplingRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(FinslerError::InvalidParameter("sampling region bounds mismatch".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(FinslerError::InvalidParameter("sampling region is empty".into()));
        }
        Ok(SamplingRegion { lo, hi })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        SamplingRegion {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    /// Box of the given half-width around `center`.
    pub fn around(center: &[f64], half_width: f64) -> Self {
        SamplingRegion {
            lo: center.iter().map(|c| c - half_width).collect(),
            hi: center.iter().map(|c| c + half_width).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| 0.5 * (self.lo[i] + self.hi[i]))
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            if self.lo[i] == self.hi[i] {
                self.lo[i]
            } else {
                rng.random_range(self.lo[i]..self.hi[i])
            }
        })
    }
}
