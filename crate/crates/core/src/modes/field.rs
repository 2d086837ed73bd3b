use num_complex::Complex64;
use rayon::prelude::*;

use super::{RadialProfile, SpiralSpectrum};
use crate::error::{Error, Result};

/// Complex scalar field sampled at pixel centers on a grid centered on the
/// optical axis. Samples are stored row-major, top row (`j = 0`) first.
///
/// Pixel `(i, j)` sits at `x = (i − w/2 + ½)·pitch`, `y = (j − h/2 + ½)·pitch`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    width: usize,
    height: usize,
    pitch: f64,
    samples: Vec<Complex64>,
}

impl FieldGrid {
    pub fn new(width: usize, height: usize, pitch: f64, samples: Vec<Complex64>) -> Result<Self> {
        check_grid(width, height, pitch)?;
        if samples.len() != width * height {
            return Err(Error::GeometryMismatch(format!(
                "{} samples for a {width}x{height} grid",
                samples.len()
            )));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::invalid("samples", "all samples must be finite"));
        }
        Ok(Self {
            width,
            height,
            pitch,
            samples,
        })
    }

    pub fn zeros(width: usize, height: usize, pitch: f64) -> Result<Self> {
        Self::from_fn(width, height, pitch, |_, _| Complex64::new(0.0, 0.0))
    }

    /// Build a grid from a function of physical coordinates `(x, y)`.
    pub fn from_fn<F>(width: usize, height: usize, pitch: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        check_grid(width, height, pitch)?;
        let mut samples = vec![Complex64::new(0.0, 0.0); width * height];
        samples
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(j, row)| {
                let y = coord(j, height, pitch);
                for (i, s) in row.iter_mut().enumerate() {
                    *s = f(coord(i, width, pitch), y);
                }
            });
        Self::new(width, height, pitch, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.samples[j * self.width + i]
    }

    /// Physical `(x, y)` of pixel `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (coord(i, self.width, self.pitch), coord(j, self.height, self.pitch))
    }

    /// Same geometry, new samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Self::new(self.width, self.height, self.pitch, samples)
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        Self {
            width: self.width,
            height: self.height,
            pitch: self.pitch,
            samples: self.samples.par_iter().map(|&s| f(s)).collect(),
        }
    }

    /// `Σ|E|²·pitch²`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.pitch * self.pitch
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.pitch == other.pitch
    }

    /// Inner product `⟨self|other⟩ = Σ conj(self)·other·pitch²`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::GeometryMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let sum: Complex64 = self
            .samples
            .par_iter()
            .zip(other.samples.par_iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.pitch * self.pitch)
    }

    /// Normalized overlap `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`, in `[0, 1]`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let ab = self.inner(other)?.norm_sqr();
        let aa = self.inner(self)?.re;
        let bb = other.inner(other)?.re;
        if aa == 0.0 || bb == 0.0 {
            return Ok(0.0);
        }
        Ok(ab / (aa * bb))
    }

    /// Bilinear interpolation at fractional pixel coordinates; zero outside.
    pub fn sample_bilinear(&self, fi: f64, fj: f64) -> Complex64 {
        crate::sampling::bilinear(self.width, self.height, fi, fj, |i, j| self.at(i, j), Complex64::new(0.0, 0.0))
    }
}

pub(crate) fn coord(index: usize, count: usize, pitch: f64) -> f64 {
    (index as f64 - count as f64 / 2.0 + 0.5) * pitch
}

fn check_grid(width: usize, height: usize, pitch: f64) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("grid", format!("empty grid {width}x{height}")));
    }
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(Error::invalid("pitch", format!("must be positive, got {pitch}")));
    }
    Ok(())
}

/// Largest ring radius a grid accepts: `0.45·min(width, height)·pitch`.
pub fn ring_limit(width: usize, height: usize, pitch: f64) -> f64 {
    0.45 * width.min(height) as f64 * pitch
}

/// Sample `Σ α·R_p^ℓ(ρ)·exp(iNℓϕ)` at every pixel center.
///
/// Rejects grids on which the outermost `p = 0` ring `ω·sqrt(ℓ_max/2)`
/// lies beyond [`ring_limit`].
pub fn synthesize_field(
    spectrum: &SpiralSpectrum,
    width: usize,
    height: usize,
    pitch: f64,
) -> Result<FieldGrid> {
    check_grid(width, height, pitch)?;
    let ring = spectrum.waist() * (spectrum.max_abs_ell() as f64 / 2.0).sqrt();
    let limit = ring_limit(width, height, pitch);
    if ring > limit * (1.0 + 1e-12) {
        return Err(Error::RingExceedsGrid {
            ring_radius_m: ring,
            limit_m: limit,
        });
    }
    let terms = spectrum
        .components()
        .iter()
        .map(|c| {
            Ok((
                RadialProfile::new(c.mode.p, c.mode.ell, spectrum.waist())?,
                c.mode.harmonic() as f64,
                c.amplitude,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    FieldGrid::from_fn(width, height, pitch, |x, y| {
        let rho = x.hypot(y);
        let phi = y.atan2(x);
        terms
            .iter()
            .map(|(radial, harmonic, amp)| amp * radial.eval(rho) * Complex64::from_polar(1.0, harmonic * phi))
            .sum()
    })
}
