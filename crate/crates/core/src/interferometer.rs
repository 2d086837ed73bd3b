//! Dove-prism Mach-Zehnder: a field interfered with its own mirror image.
//!
//! The prism flips rows (`y → −y`, so `ϕ → −ϕ`). With balanced splitters the
//! output is `|E + e^{iδ}·flip(E)|²/2`. For a `p = 0` spectrum this is
//! `2·|Σ α R_ℓ(ρ) cos(Nℓϕ − δ/2)|²`, and each component draws `2N|ℓ|` spokes.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{save_pgm16, save_png_preview, to_u16_scaled, write_pgm16};
use crate::modes::{FieldGrid, RadialProfile, SpiralSpectrum};

/// Circumference must hold this many pixels per spoke for azimuthal analysis.
pub const NYQUIST_FACTOR: usize = 4;

/// Non-negative intensity image on a square-pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferogram {
    width: usize,
    height: usize,
    pitch: f64,
    intensity: Vec<f64>,
}

impl Interferogram {
    pub fn new(width: usize, height: usize, pitch: f64, intensity: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width * height != intensity.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} samples for a {width}x{height} interferogram",
                intensity.len()
            )));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::invalid("pitch", format!("must be positive, got {pitch}")));
        }
        if let Some(v) = intensity.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("intensity", format!("must be finite and >= 0, got {v}")));
        }
        Ok(Self {
            width,
            height,
            pitch,
            intensity,
        })
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

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn into_intensity(self) -> Vec<f64> {
        self.intensity
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.intensity[j * self.width + i]
    }

    /// Optical axis in pixel-index coordinates.
    pub fn center(&self) -> [f64; 2] {
        [(self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0]
    }

    pub fn max(&self) -> f64 {
        self.intensity.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ I·pitch²`.
    pub fn integrated(&self) -> f64 {
        self.intensity.iter().sum::<f64>() * self.pitch * self.pitch
    }

    /// Largest absolute pixel difference divided by the larger image maximum.
    pub fn max_relative_difference(&self, other: &Self) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::GeometryMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let scale = self.max().max(other.max());
        let diff = self
            .intensity
            .iter()
            .zip(&other.intensity)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    /// Max-normalized 16-bit samples.
    pub fn to_u16(&self) -> Vec<u16> {
        to_u16_scaled(&self.intensity)
    }

    pub fn write_pgm<W: Write>(&self, w: W) -> Result<()> {
        write_pgm16(w, self.width, self.height, &self.to_u16())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        save_pgm16(path, self.width, self.height, &self.to_u16())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        save_png_preview(path, self.width, self.height, &self.intensity)
    }
}

/// Mirror the field through the x axis: `E(x, y) → E(x, −y)`.
pub fn dove_flip(field: &FieldGrid) -> FieldGrid {
    let w = field.width();
    let flipped: Vec<Complex64> = field
        .samples()
        .chunks(w)
        .rev()
        .flatten()
        .copied()
        .collect();
    field
        .with_samples(flipped)
        .expect("row reversal keeps the geometry")
}

/// `|E + flip(E)|² / 2`.
pub fn interfere_exact(field: &FieldGrid) -> Interferogram {
    interfere_exact_with_piston(field, 0.0)
}

/// `|E + e^{iδ}·flip(E)|² / 2`, with `δ` the relative arm phase.
pub fn interfere_exact_with_piston(field: &FieldGrid, piston: f64) -> Interferogram {
    let flipped = dove_flip(field);
    let rot = Complex64::from_polar(1.0, piston);
    let intensity = field
        .samples()
        .par_iter()
        .zip(flipped.samples().par_iter())
        .map(|(a, b)| 0.5 * (a + rot * b).norm_sqr())
        .collect();
    Interferogram {
        width: field.width(),
        height: field.height(),
        pitch: field.pitch(),
        intensity,
    }
}

/// Closed-form interferogram of a `p = 0` spectrum, evaluated at `(ρ, ϕ)`.
#[derive(Debug, Clone)]
pub struct AnalyticInterferogram {
    terms: Vec<(RadialProfile, f64, Complex64)>,
    piston: f64,
}

impl AnalyticInterferogram {
    pub fn new(spectrum: &SpiralSpectrum) -> Result<Self> {
        Self::with_piston(spectrum, 0.0)
    }

    pub fn with_piston(spectrum: &SpiralSpectrum, piston: f64) -> Result<Self> {
        let terms = spectrum
            .components()
            .iter()
            .map(|c| {
                if c.mode.p != 0 {
                    return Err(Error::invalid(
                        "spectrum",
                        format!("closed form needs p = 0 components, got p = {}", c.mode.p),
                    ));
                }
                Ok((
                    RadialProfile::new(0, c.mode.ell, spectrum.waist())?,
                    c.mode.harmonic() as f64,
                    c.amplitude,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { terms, piston })
    }

    /// `2·|Σ α R_ℓ(ρ) cos(Nℓϕ − δ/2)|²`.
    pub fn eval(&self, rho: f64, phi: f64) -> f64 {
        let half = 0.5 * self.piston;
        let s: Complex64 = self
            .terms
            .iter()
            .map(|(r, h, a)| a * (r.eval(rho) * (h * phi - half).cos()))
            .sum();
        2.0 * s.norm_sqr()
    }

    /// Per-ring form `Σ |α R_ℓ(ρ)|² (1 + cos(2Nℓϕ − δ))`, which drops the
    /// cross terms between rings.
    pub fn eval_factored(&self, rho: f64, phi: f64) -> f64 {
        self.terms
            .iter()
            .map(|(r, h, a)| (a * r.eval(rho)).norm_sqr() * (1.0 + (2.0 * h * phi - self.piston).cos()))
            .sum()
    }

    fn render<F>(&self, width: usize, height: usize, pitch: f64, f: F) -> Result<Interferogram>
    where
        F: Fn(&Self, f64, f64) -> f64 + Sync,
    {
        let grid = FieldGrid::zeros(width, height, pitch)?;
        let mut intensity = vec![0.0; width * height];
        intensity.par_chunks_mut(width).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                let (x, y) = grid.coords(i, j);
                *v = f(self, x.hypot(y), y.atan2(x));
            }
        });
        Interferogram::new(width, height, pitch, intensity)
    }
}

/// Closed-form interferogram sampled at pixel centers; equal to
/// `interfere_exact(synthesize_field(spectrum, ..))` up to round-off.
pub fn interferogram_analytic(
    spectrum: &SpiralSpectrum,
    width: usize,
    height: usize,
    pitch: f64,
) -> Result<Interferogram> {
    interferogram_analytic_with_piston(spectrum, width, height, pitch, 0.0)
}

pub fn interferogram_analytic_with_piston(
    spectrum: &SpiralSpectrum,
    width: usize,
    height: usize,
    pitch: f64,
    piston: f64,
) -> Result<Interferogram> {
    AnalyticInterferogram::with_piston(spectrum, piston)?.render(width, height, pitch, AnalyticInterferogram::eval)
}

/// Sum of independent rings, ignoring their overlap. Only accurate for well-separated rings.
pub fn interferogram_factored(
    spectrum: &SpiralSpectrum,
    width: usize,
    height: usize,
    pitch: f64,
) -> Result<Interferogram> {
    AnalyticInterferogram::new(spectrum)?.render(width, height, pitch, AnalyticInterferogram::eval_factored)
}

/// Spokes drawn by one component: `2·N·|ℓ|`.
pub fn spoke_count(n_fold: u32, ell: i32) -> u64 {
    2 * n_fold as u64 * ell.unsigned_abs() as u64
}

/// Refuse azimuthal analysis of `harmonic` spokes on a ring of `radius_px`
/// unless its circumference holds [`NYQUIST_FACTOR`] pixels per spoke.
pub fn check_ring_sampling(radius_px: f64, harmonic: u64) -> Result<()> {
    let circumference = 2.0 * std::f64::consts::PI * radius_px;
    let required = NYQUIST_FACTOR * harmonic as usize;
    if circumference < required as f64 {
        return Err(Error::Undersampled {
            circumference_px: circumference,
            required_px: required,
            harmonic: harmonic as usize,
            factor: required as f64 / circumference,
        });
    }
    Ok(())
}

/// [`check_ring_sampling`] for every component's peak ring on a grid of the given pitch.
pub fn check_spectrum_sampling(spectrum: &SpiralSpectrum, pitch: f64) -> Result<()> {
    for c in spectrum.components() {
        let radius_px = spectrum.waist() * (c.mode.ell.unsigned_abs() as f64 / 2.0).sqrt() / pitch;
        check_ring_sampling(radius_px, spoke_count(c.mode.n_fold, c.mode.ell))?;
    }
    Ok(())
}

/// CSV `radius_px,mean_intensity`.
pub fn write_radial_csv<W: Write>(w: W, profile: &[(f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["radius_px", "mean_intensity"])?;
    for (r, v) in profile {
        out.write_record([r.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// CSV `phi_rad,intensity`.
pub fn write_azimuthal_csv<W: Write>(w: W, cut: &[(f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["phi_rad", "intensity"])?;
    for (phi, v) in cut {
        out.write_record([phi.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
