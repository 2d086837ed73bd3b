//! Fraunhofer relay of an illuminated hologram through a 4f system.
//!
//! The relay is a unitary, centered 2-D DFT. Spatial frequencies are in
//! cycles per pixel, so a grating of period `P` pixels puts its first order
//! at `1/P`. An iris in the Fourier plane selects that order, which is then
//! shifted back to the axis and transformed back to the image plane.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::hologram::{GratingSpec, HologramImage, SlmGeometry};
use crate::modes::FieldGrid;

/// Circular pass band in the Fourier plane, in cycles per pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrisSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

impl IrisSpec {
    pub fn new(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", format!("iris radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Centered on the grating carrier with half the carrier magnitude as radius.
    pub fn for_grating(grating: &GratingSpec) -> Self {
        let c = grating.carrier();
        Self {
            center: c,
            radius: 0.5 * c[0].hypot(c[1]),
        }
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn fft_rows(data: &mut [Complex64], width: usize, plan: &Arc<dyn Fft<f64>>) {
    data.par_chunks_mut(width).for_each(|row| plan.process(row));
}

fn transpose(data: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(height).enumerate().for_each(|(i, col)| {
        for (j, c) in col.iter_mut().enumerate() {
            *c = data[j * width + i];
        }
    });
    out
}

/// Swap quadrants; self-inverse for even dimensions.
fn fftshift(data: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let (hw, hh) = (width / 2, height / 2);
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(j, row)| {
        let src = ((j + hh) % height) * width;
        for (i, o) in row.iter_mut().enumerate() {
            *o = data[src + (i + hw) % width];
        }
    });
    out
}

fn centered_dft(samples: &[Complex64], width: usize, height: usize, dir: Direction) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let (row_plan, col_plan) = match dir {
        Direction::Forward => (planner.plan_fft_forward(width), planner.plan_fft_forward(height)),
        Direction::Inverse => (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height)),
    };
    let mut data = fftshift(samples, width, height);
    fft_rows(&mut data, width, &row_plan);
    let mut t = transpose(&data, width, height);
    fft_rows(&mut t, height, &col_plan);
    let data = transpose(&t, height, width);
    let scale = 1.0 / ((width * height) as f64).sqrt();
    let mut out = fftshift(&data, width, height);
    out.par_iter_mut().for_each(|v| *v *= scale);
    out
}

fn check_even(field: &FieldGrid) -> Result<()> {
    if field.width() % 2 != 0 || field.height() % 2 != 0 {
        return Err(Error::OddDimensions {
            width: field.width(),
            height: field.height(),
        });
    }
    Ok(())
}

/// Centered unitary 2-D DFT. The zero frequency lands on pixel
/// `(width/2, height/2)`; the returned pitch is the x frequency step
/// `1/(width·pitch)` in cycles per meter.
pub fn far_field(field: &FieldGrid) -> Result<FieldGrid> {
    check_even(field)?;
    let (w, h) = (field.width(), field.height());
    let out = centered_dft(field.samples(), w, h, Direction::Forward);
    FieldGrid::new(w, h, 1.0 / (w as f64 * field.pitch()), out)
}

/// Inverse of [`far_field`].
pub fn inverse_far_field(spectrum: &FieldGrid) -> Result<FieldGrid> {
    check_even(spectrum)?;
    let (w, h) = (spectrum.width(), spectrum.height());
    let out = centered_dft(spectrum.samples(), w, h, Direction::Inverse);
    FieldGrid::new(w, h, 1.0 / (w as f64 * spectrum.pitch()), out)
}

/// Unit-amplitude plane wave over the SLM.
pub fn plane_wave(geometry: &SlmGeometry) -> Result<FieldGrid> {
    FieldGrid::from_fn(geometry.width, geometry.height, geometry.pitch, |_, _| {
        Complex64::new(1.0, 0.0)
    })
}

/// Gaussian beam `exp(−ρ²/w²)` centered on the SLM.
pub fn gaussian_illumination(geometry: &SlmGeometry, waist: f64) -> Result<FieldGrid> {
    if !(waist > 0.0) {
        return Err(Error::invalid("waist", "illumination waist must be positive"));
    }
    FieldGrid::from_fn(geometry.width, geometry.height, geometry.pitch, |x, y| {
        Complex64::new((-(x * x + y * y) / (waist * waist)).exp(), 0.0)
    })
}

/// Width of the zero-order footprint used by the iris check: two frequency bins.
pub fn zero_order_width(width: usize, height: usize) -> f64 {
    2.0 / width.min(height) as f64
}

/// Display `holo` on the SLM, relay through the 4f system, keep the iris pass
/// band, move it back on axis and return the image-plane field.
pub fn reconstruct_first_order(
    holo: &HologramImage,
    illumination: &FieldGrid,
    iris: &IrisSpec,
) -> Result<FieldGrid> {
    let g = holo.geometry();
    if illumination.width() != g.width || illumination.height() != g.height {
        return Err(Error::GeometryMismatch(format!(
            "illumination {}x{} does not match SLM {}x{}",
            illumination.width(),
            illumination.height(),
            g.width,
            g.height
        )));
    }
    let distance = iris.center[0].hypot(iris.center[1]);
    let zero_width = zero_order_width(g.width, g.height);
    if distance < iris.radius + zero_width {
        return Err(Error::IrisOverlapsZeroOrder {
            distance,
            radius: iris.radius,
            zero_order_width: zero_width,
        });
    }

    let phases = holo.phases();
    let modulated = illumination.with_samples(
        illumination
            .samples()
            .par_iter()
            .zip(phases.par_iter())
            .map(|(e, &p)| e * Complex64::from_polar(1.0, p))
            .collect(),
    )?;
    let spectrum = far_field(&modulated)?;

    let (w, h) = (g.width, g.height);
    let shift_x = (iris.center[0] * w as f64).round() as isize;
    let shift_y = (iris.center[1] * h as f64).round() as isize;
    let r2 = iris.radius * iris.radius;
    let mut passed = vec![Complex64::new(0.0, 0.0); w * h];
    for ky in 0..h {
        let fy = (ky as f64 - (h / 2) as f64) / h as f64 - iris.center[1];
        for kx in 0..w {
            let fx = (kx as f64 - (w / 2) as f64) / w as f64 - iris.center[0];
            if fx * fx + fy * fy > r2 {
                continue;
            }
            let tx = (kx as isize - shift_x).rem_euclid(w as isize) as usize;
            let ty = (ky as isize - shift_y).rem_euclid(h as isize) as usize;
            passed[ty * w + tx] = spectrum.at(kx, ky);
        }
    }
    let recon = inverse_far_field(&spectrum.with_samples(passed)?)?;
    FieldGrid::new(w, h, illumination.pitch(), recon.into_samples())
}
