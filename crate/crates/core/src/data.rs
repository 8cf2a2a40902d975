//! Initial velocity profiles.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{forward_transform, inverse_transform, Grid, PhysicalField};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `amplitude * exp(-|x - center|^2 / width^2)`
    Gaussian {
        width: f64,
        amplitude: f64,
        center: Vec<f64>,
    },
    /// Smooth compactly supported bump
    /// `amplitude * exp(1 - 1 / (1 - |x|^2 / radius^2))` inside the ball.
    Bump { radius: f64, amplitude: f64 },
    /// Seeded white noise low-pass filtered to `|xi| <= cutoff`, scaled to
    /// unit maximum.
    RandomSmooth { seed: u64, cutoff: f64 },
}

impl InitialData {
    pub fn gaussian(width: f64, amplitude: f64) -> Self {
        InitialData::Gaussian {
            width,
            amplitude,
            center: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialData::Gaussian {
                width, amplitude, ..
            } => {
                if !(*width > 0.0) {
                    return Err(Error::param("width", "gaussian width must be positive"));
                }
                if !amplitude.is_finite() {
                    return Err(Error::param("amplitude", "must be finite"));
                }
            }
            InitialData::Bump { radius, amplitude } => {
                if !(*radius > 0.0) {
                    return Err(Error::param("radius", "bump radius must be positive"));
                }
                if !amplitude.is_finite() {
                    return Err(Error::param("amplitude", "must be finite"));
                }
            }
            InitialData::RandomSmooth { cutoff, .. } => {
                if !(*cutoff > 0.0) {
                    return Err(Error::param("cutoff", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Grid) -> Result<PhysicalField> {
        self.validate()?;
        match self {
            InitialData::Gaussian {
                width,
                amplitude,
                center,
            } => {
                let (w2, a) = (width * width, *amplitude);
                Ok(grid.sample(|x| {
                    let d2: f64 = x
                        .iter()
                        .enumerate()
                        .map(|(i, v)| {
                            let c = center.get(i).copied().unwrap_or(0.0);
                            (v - c) * (v - c)
                        })
                        .sum();
                    a * (-d2 / w2).exp()
                }))
            }
            InitialData::Bump { radius, amplitude } => {
                let (r2, a) = (radius * radius, *amplitude);
                Ok(grid.sample(|x| {
                    let q = x.iter().map(|v| v * v).sum::<f64>() / r2;
                    if q < 1.0 {
                        a * (1.0 - 1.0 / (1.0 - q)).exp()
                    } else {
                        0.0
                    }
                }))
            }
            InitialData::RandomSmooth { seed, cutoff } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let noise: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let field = PhysicalField::from_real(*grid, &noise)?;
                let filtered = forward_transform(&field)?.apply_radial(|r| if r <= *cutoff { 1.0 } else { 0.0 });
                let back = inverse_transform(&filtered)?;
                let real: Vec<f64> = back.real_parts();
                let peak = real.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
                let values: Vec<Complex64> = real.iter().map(|v| Complex64::new(v * scale, 0.0)).collect();
                PhysicalField::new(*grid, values)
            }
        }
    }
}
