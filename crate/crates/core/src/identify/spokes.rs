use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::profile::ImageData;
use crate::error::{Error, Result};
use crate::interferometer::{check_ring_sampling, NYQUIST_FACTOR};

/// Dominant azimuthal harmonic on a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpokeEstimate {
    pub count: u64,
    /// Share of the non-DC power in the winning harmonic.
    pub power_fraction: f64,
}

/// Largest harmonic a ring of `radius_px` can resolve under the sampling guard.
pub fn max_resolvable_harmonic(radius_px: f64) -> u64 {
    (2.0 * PI * radius_px / NYQUIST_FACTOR as f64).floor().max(0.0) as u64
}

/// `|X_k|²` of `M = 4·max_harmonic` bilinear samples on the circle.
pub fn azimuthal_power<I: ImageData + ?Sized>(
    image: &I,
    center: [f64; 2],
    radius_px: f64,
    max_harmonic: u64,
) -> Result<Vec<f64>> {
    if max_harmonic == 0 {
        return Err(Error::invalid("max_harmonic", "must be >= 1"));
    }
    check_ring_sampling(radius_px, max_harmonic)?;
    let m = NYQUIST_FACTOR * max_harmonic as usize;
    let mut buf: Vec<Complex64> = (0..m)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / m as f64;
            let v = image.sample(center[0] + radius_px * t.cos(), center[1] + radius_px * t.sin());
            Complex64::new(v, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    Ok(buf.iter().map(|c| c.norm_sqr()).collect())
}

/// Spoke count on the circle of `radius_px` around `center`: the strongest
/// harmonic in `1..=max_harmonic`. A featureless ring gives `(0, 0.0)`.
pub fn count_spokes_on_ring<I: ImageData + ?Sized>(
    image: &I,
    center: [f64; 2],
    radius_px: f64,
    max_harmonic: u64,
) -> Result<SpokeEstimate> {
    let power = azimuthal_power(image, center, radius_px, max_harmonic)?;
    let m = power.len();
    let ac: f64 = power[1..=m / 2].iter().sum();
    if !(ac > 1e-24 * power[0].max(f64::MIN_POSITIVE)) {
        return Ok(SpokeEstimate {
            count: 0,
            power_fraction: 0.0,
        });
    }
    let (n, p) = (1..=max_harmonic as usize)
        .map(|k| (k, power[k]))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(SpokeEstimate {
        count: n as u64,
        power_fraction: (p / ac).clamp(0.0, 1.0),
    })
}

/// Spokes around the full circle from `n0` spokes counted in an arc of `θ` degrees.
pub fn spokes_from_arc(theta_deg: f64, n0: u32) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg <= 360.0) {
        return Err(Error::invalid("theta_deg", format!("must lie in (0, 360], got {theta_deg}")));
    }
    if n0 == 0 {
        return Err(Error::invalid("n0", "must be >= 1"));
    }
    Ok(360.0 * n0 as f64 / theta_deg)
}
