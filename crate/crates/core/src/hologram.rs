//! Phase-only SLM holograms.
//!
//! The desired phase is added to a linear (blazed) grating, wrapped to
//! `[0, 2π)` and multiplied by a per-pixel blaze depth `M`. The depth is the
//! inverse of the first-order efficiency `sinc²(π(1 − M))`, so the first
//! diffracted order carries the desired intensity. The result is quantized to
//! the SLM's 8-bit gray levels.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modes::{ring_limit, FieldGrid};

const TWO_PI: f64 = 2.0 * PI;

/// Pixel layout of the modulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlmGeometry {
    pub width: usize,
    pub height: usize,
    /// Pixel pitch in meters.
    pub pitch: f64,
    pub gray_levels: u16,
}

impl Default for SlmGeometry {
    /// 792×600 pixels at 20 µm, 8-bit.
    fn default() -> Self {
        Self {
            width: 792,
            height: 600,
            pitch: 20e-6,
            gray_levels: 256,
        }
    }
}

impl SlmGeometry {
    /// Active area `(width, height)` in meters.
    pub fn active_area(&self) -> (f64, f64) {
        (self.width as f64 * self.pitch, self.height as f64 * self.pitch)
    }
}

/// Linear phase ramp added to the desired phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GratingSpec {
    /// Period in pixels, `> 1`.
    pub period: f64,
    /// Unit vector along which the phase increases.
    pub orientation: [f64; 2],
}

impl Default for GratingSpec {
    /// Horizontal ramp, 4 pixels per period.
    fn default() -> Self {
        Self {
            period: 4.0,
            orientation: [1.0, 0.0],
        }
    }
}

impl GratingSpec {
    pub fn new(period: f64, orientation: [f64; 2]) -> Result<Self> {
        if !(period > 1.0 && period.is_finite()) {
            return Err(Error::invalid("period", format!("must exceed 1 pixel, got {period}")));
        }
        let norm = orientation[0].hypot(orientation[1]);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("orientation", "must be a nonzero vector"));
        }
        Ok(Self {
            period,
            orientation: [orientation[0] / norm, orientation[1] / norm],
        })
    }

    /// Carrier spatial frequency in cycles per pixel.
    pub fn carrier(&self) -> [f64; 2] {
        [self.orientation[0] / self.period, self.orientation[1] / self.period]
    }

    /// Grating phase at pixel `(i, j)`, unwrapped.
    pub fn phase_at(&self, i: usize, j: usize) -> f64 {
        TWO_PI * (i as f64 * self.orientation[0] + j as f64 * self.orientation[1]) / self.period
    }
}

/// How the target intensity is imprinted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shaping {
    /// Blaze depth from the target intensity.
    #[default]
    Blaze,
    /// Full blaze everywhere (`M ≡ 1`): pure phase addition.
    Off,
}

/// An 8-bit SLM frame, row-major, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct HologramImage {
    geometry: SlmGeometry,
    gray: Vec<u8>,
}

impl HologramImage {
    pub fn new(geometry: SlmGeometry, gray: Vec<u8>) -> Result<Self> {
        if gray.len() != geometry.width * geometry.height {
            return Err(Error::GeometryMismatch(format!(
                "{} gray values for a {}x{} SLM",
                gray.len(),
                geometry.width,
                geometry.height
            )));
        }
        if let Some(&g) = gray.iter().find(|&&g| g as u16 >= geometry.gray_levels) {
            return Err(Error::invalid("gray", format!("value {g} exceeds gray levels")));
        }
        Ok(Self { geometry, gray })
    }

    pub fn geometry(&self) -> SlmGeometry {
        self.geometry
    }

    pub fn gray(&self) -> &[u8] {
        &self.gray
    }

    pub fn at(&self, i: usize, j: usize) -> u8 {
        self.gray[j * self.geometry.width + i]
    }

    /// Phase displayed by each pixel, bin-centered.
    pub fn phases(&self) -> Vec<f64> {
        self.gray.iter().map(|&g| gray_to_phase(g)).collect()
    }

    /// Binary P5 PGM, maxval 255.
    pub fn write_pgm<W: Write>(&self, w: W) -> Result<()> {
        crate::io::write_pgm8(w, self.geometry.width, self.geometry.height, &self.gray)
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_pgm(file)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// First-order efficiency of a blaze of depth `m` (fraction of 2π).
pub fn first_order_efficiency(m: f64) -> f64 {
    sinc(PI * (1.0 - m)).powi(2)
}

/// Blaze depth `M ∈ [0, 1]` solving `sinc²(π(1 − M)) = i_desired`, by bisection.
pub fn blaze_depth_from_intensity(i_desired: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&i_desired) {
        return Err(Error::invalid(
            "i_desired",
            format!("must lie in [0, 1], got {i_desired}"),
        ));
    }
    Ok(blaze_depth_unchecked(i_desired))
}

fn blaze_depth_unchecked(i_desired: f64) -> f64 {
    if i_desired <= 0.0 {
        return 0.0;
    }
    // within rounding of full efficiency
    if i_desired >= 1.0 - 1e-12 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if first_order_efficiency(mid) < i_desired {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `floor(((φ mod 2π)/2π)·256)`, clamped to 255.
pub fn quantize_phase(phase: f64) -> u8 {
    quantize_turns(phase.rem_euclid(TWO_PI) / TWO_PI)
}

/// Center of the phase bin of a gray level, `(g + ½)·2π/256`.
pub fn gray_to_phase(gray: u8) -> f64 {
    (gray as f64 + 0.5) * TWO_PI / 256.0
}

/// Azimuthal pixels available per 2π of phase on a circle of `radius_px`.
pub fn pixels_per_period(radius_px: f64, harmonic: i64) -> Result<f64> {
    if harmonic == 0 {
        return Err(Error::invalid("harmonic", "must be nonzero"));
    }
    if !(radius_px > 0.0) {
        return Err(Error::invalid("radius_px", "must be positive"));
    }
    Ok(TWO_PI * radius_px / harmonic.unsigned_abs() as f64)
}

/// Beam waist that places the `ℓ_max` ring at the largest radius the grid
/// accepts, `0.45·min(width, height)·pitch`. For `ℓ_max = 0` the Gaussian
/// gets a third of that radius.
pub fn fitted_waist(max_abs_ell: u32, width: usize, height: usize, pitch: f64) -> f64 {
    let radius = ring_limit(width, height, pitch);
    if max_abs_ell == 0 {
        radius / 3.0
    } else {
        radius / (max_abs_ell as f64 / 2.0).sqrt()
    }
}

fn check_target(target: &FieldGrid, geometry: &SlmGeometry) -> Result<()> {
    let pitch_ok = (target.pitch() - geometry.pitch).abs() <= 1e-12 * geometry.pitch;
    if target.width() != geometry.width || target.height() != geometry.height || !pitch_ok {
        return Err(Error::GeometryMismatch(format!(
            "target {}x{} @ {:e} m does not match SLM {}x{} @ {:e} m",
            target.width(),
            target.height(),
            target.pitch(),
            geometry.width,
            geometry.height,
            geometry.pitch
        )));
    }
    Ok(())
}

/// Pre-quantization SLM phase in turns (fractions of 2π), `[0, 1)`.
///
/// Working in turns keeps rational grating phases such as `3/8` exact, so
/// gray levels of a pure grating do not depend on radian round-off.
fn hologram_turns(
    target: &FieldGrid,
    grating: &GratingSpec,
    geometry: &SlmGeometry,
    shaping: Shaping,
) -> Result<Vec<f64>> {
    check_target(target, geometry)?;
    let max_intensity = target
        .samples()
        .iter()
        .map(|s| s.norm_sqr())
        .fold(0.0, f64::max);
    let width = geometry.width;
    let [ox, oy] = grating.orientation;
    let mut turns = vec![0.0; target.samples().len()];
    turns
        .par_chunks_mut(width)
        .zip(target.samples().par_chunks(width))
        .enumerate()
        .for_each(|(j, (out, row))| {
            for (i, (o, s)) in out.iter_mut().zip(row).enumerate() {
                let depth = match shaping {
                    Shaping::Off => 1.0,
                    Shaping::Blaze if max_intensity > 0.0 => {
                        blaze_depth_unchecked(s.norm_sqr() / max_intensity)
                    }
                    Shaping::Blaze => 0.0,
                };
                let ramp = (i as f64 * ox + j as f64 * oy) / grating.period;
                *o = (s.arg() / TWO_PI + 0.5 * (1.0 - depth) + ramp).rem_euclid(1.0) * depth;
            }
        });
    Ok(turns)
}

fn quantize_turns(turns: f64) -> u8 {
    ((turns.rem_euclid(1.0) * 256.0).floor() as i64).clamp(0, 255) as u8
}

/// Pre-quantization SLM phase `((arg E + π(1−M) + φ_grating) mod 2π)·M` for every pixel.
///
/// A blaze of depth `M` gives its first order an extra phase `π(M−1)`; the
/// `π(1−M)` term cancels it so the diffracted phase follows `arg E`.
pub fn hologram_phase(
    target: &FieldGrid,
    grating: &GratingSpec,
    geometry: &SlmGeometry,
    shaping: Shaping,
) -> Result<Vec<f64>> {
    Ok(hologram_turns(target, grating, geometry, shaping)?
        .into_iter()
        .map(|t| t * TWO_PI)
        .collect())
}

/// Blaze-shaped hologram of `target` on the given SLM.
pub fn synthesize_hologram(
    target: &FieldGrid,
    grating: &GratingSpec,
    geometry: &SlmGeometry,
) -> Result<HologramImage> {
    synthesize_hologram_with(target, grating, geometry, Shaping::Blaze)
}

pub fn synthesize_hologram_with(
    target: &FieldGrid,
    grating: &GratingSpec,
    geometry: &SlmGeometry,
    shaping: Shaping,
) -> Result<HologramImage> {
    let turns = hologram_turns(target, grating, geometry, shaping)?;
    let gray = turns.par_iter().map(|&t| quantize_turns(t)).collect();
    HologramImage::new(*geometry, gray)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{synthesize_field, ModeIndex, SpiralComponent, SpiralSpectrum};
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn slm_area() {
        let (w, h) = SlmGeometry::default().active_area();
        assert!((w - 15.84e-3).abs() < 1e-12);
        assert!((h - 12.0e-3).abs() < 1e-12);
    }

    #[test]
    fn blaze_depth_examples() {
        assert_eq!(blaze_depth_from_intensity(1.0).unwrap(), 1.0);
        assert_eq!(blaze_depth_from_intensity(0.0).unwrap(), 0.0);
        let m = blaze_depth_from_intensity(0.5).unwrap();
        assert!((m - 0.5570).abs() < 1e-4, "{m}");
        // sinc(1.3916)² ≈ 0.5
        assert!((sinc(PI * (1.0 - m)).powi(2) - 0.5).abs() < 1e-10);
        assert!((PI * (1.0 - m) - 1.3916).abs() < 1e-4);
        assert!(blaze_depth_from_intensity(-0.1).is_err());
        assert!(blaze_depth_from_intensity(1.5).is_err());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_phase(0.0), 0);
        assert_eq!(quantize_phase(PI), 128);
        assert_eq!(quantize_phase(TWO_PI - 1e-3), 255);
        assert_eq!(quantize_phase(-1e-3), 255);
        assert_eq!(quantize_phase(gray_to_phase(17)), 17);
    }

    #[test]
    fn pixel_budget() {
        let r = 2666.0 / TWO_PI;
        let v = pixels_per_period(r, 400).unwrap();
        assert!((v - 6.665).abs() < 1e-9);
        assert!((pixels_per_period(100.0, 100).unwrap() - TWO_PI).abs() < 1e-12);
        assert!((pixels_per_period(r, 120).unwrap() - 2666.0 / 120.0).abs() < 1e-9);
        assert!(pixels_per_period(r, 0).is_err());
    }

    fn uniform_target(geometry: &SlmGeometry, value: Complex64) -> FieldGrid {
        FieldGrid::from_fn(geometry.width, geometry.height, geometry.pitch, |_, _| value).unwrap()
    }

    fn small_slm() -> SlmGeometry {
        SlmGeometry {
            width: 64,
            height: 48,
            ..SlmGeometry::default()
        }
    }

    #[test]
    fn zero_target_gives_blank_frame() {
        let g = small_slm();
        let h = synthesize_hologram(&uniform_target(&g, Complex64::new(0.0, 0.0)), &GratingSpec::default(), &g)
            .unwrap();
        assert!(h.gray().iter().all(|&v| v == 0));
    }

    #[test]
    fn uniform_target_is_pure_grating() {
        let g = small_slm();
        let grating = GratingSpec::new(8.0, [1.0, 0.0]).unwrap();
        let h = synthesize_hologram(&uniform_target(&g, Complex64::new(0.3, 0.0)), &grating, &g).unwrap();
        for j in 0..g.height {
            for i in 0..g.width {
                assert_eq!(h.at(i, j), (32 * (i % 8)) as u8);
            }
        }
    }

    #[test]
    fn first_order_follows_target_amplitude_and_phase() {
        // one grating period sampled finely; c1 is the first Fourier coefficient
        let n = 512;
        let g = SlmGeometry {
            width: n,
            height: 2,
            ..SlmGeometry::default()
        };
        let grating = GratingSpec::new(n as f64, [1.0, 0.0]).unwrap();
        let peak = uniform_target(&g, Complex64::new(1.0, 0.0));
        for (amp, arg) in [(0.9, 0.3), (0.5, -2.0), (0.2, 1.1)] {
            // second row stays at unit amplitude and sets the normalization
            let mut t = peak.samples().to_vec();
            t[..n].fill(Complex64::from_polar(amp, arg));
            let target = FieldGrid::new(n, 2, g.pitch, t).unwrap();
            let phase = hologram_phase(&target, &grating, &g, Shaping::Blaze).unwrap();
            let c1: Complex64 = (0..n)
                .map(|i| {
                    Complex64::from_polar(1.0, phase[i])
                        * Complex64::from_polar(1.0, -TWO_PI * i as f64 / n as f64)
                })
                .sum::<Complex64>()
                / n as f64;
            assert!((c1.norm() - amp).abs() < 1e-3, "{amp}: {}", c1.norm());
            let dphi = (c1.arg() - arg + PI).rem_euclid(TWO_PI) - PI;
            assert!(dphi.abs() < 1e-2, "{amp}: {dphi}");
        }
    }

    #[test]
    fn rejects_mismatched_geometry() {
        let g = small_slm();
        let t = FieldGrid::zeros(10, 10, g.pitch).unwrap();
        assert!(matches!(
            synthesize_hologram(&t, &GratingSpec::default(), &g),
            Err(Error::GeometryMismatch(_))
        ));
    }

    #[test]
    fn grating_validation() {
        assert!(GratingSpec::new(1.0, [1.0, 0.0]).is_err());
        assert!(GratingSpec::new(4.0, [0.0, 0.0]).is_err());
        let g = GratingSpec::new(4.0, [3.0, 4.0]).unwrap();
        assert!((g.orientation[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn fitted_waist_places_outer_ring_at_limit() {
        let w = fitted_waist(120, 792, 600, 20e-6);
        assert!((w * 60f64.sqrt() - 0.45 * 600.0 * 20e-6).abs() < 1e-15);
    }

    /// Walks the ring, subtracts the known ramp and unwraps; returns cycles.
    fn ring_winding(holo: &HologramImage, grating: &GratingSpec, r: f64) -> f64 {
        let g = holo.geometry();
        let (ci, cj) = ((g.width as f64 - 1.0) / 2.0, (g.height as f64 - 1.0) / 2.0);
        let m = 8 * 1700;
        let mut total = 0.0;
        let mut prev = None;
        for k in 0..=m {
            let t = TWO_PI * (k % m) as f64 / m as f64;
            let i = (ci + r * t.cos()).round() as usize;
            let j = (cj + r * t.sin()).round() as usize;
            let ph = gray_to_phase(holo.at(i, j)) - grating.phase_at(i, j);
            if let Some(p) = prev {
                let mut d: f64 = ph - p;
                d -= TWO_PI * (d / TWO_PI).round();
                total += d;
            }
            prev = Some(ph);
        }
        total / TWO_PI
    }

    #[test]
    fn three_ring_hologram_winds_120_times_on_outer_ring() {
        let g = SlmGeometry::default();
        let comps = [(120, 0.68), (80, 0.57), (50, 0.46)]
            .iter()
            .map(|&(l, a)| SpiralComponent::new(ModeIndex::modified(l, 1), Complex64::new(a, 0.0)))
            .collect();
        let waist = fitted_waist(120, g.width, g.height, g.pitch);
        let spec = SpiralSpectrum::new(comps, waist).unwrap();
        let target = synthesize_field(&spec, g.width, g.height, g.pitch).unwrap();
        let grating = GratingSpec::default();
        let r = 0.45 * 600.0;

        let plain = synthesize_hologram_with(&target, &grating, &g, Shaping::Off).unwrap();
        let cycles = ring_winding(&plain, &grating, r);
        assert!((cycles - 120.0).abs() < 1e-9, "{cycles}");

        // blaze depth slightly below 1 off the intensity maximum shortens each wrap
        let shaped = synthesize_hologram(&target, &grating, &g).unwrap();
        let cycles = ring_winding(&shaped, &grating, r);
        assert!((cycles - 120.0).abs() < 0.1, "{cycles}");
    }

    proptest! {
        #[test]
        fn blaze_depth_round_trip(i in 0.0f64..=1.0) {
            let m = blaze_depth_from_intensity(i).unwrap();
            prop_assert!((first_order_efficiency(m) - i).abs() < 1e-9);
        }

        #[test]
        fn blaze_depth_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(blaze_depth_from_intensity(lo).unwrap() <= blaze_depth_from_intensity(hi).unwrap());
        }

        #[test]
        fn quantize_is_periodic(phi in -100.0f64..100.0) {
            prop_assert_eq!(quantize_phase(phi), quantize_phase(phi + TWO_PI));
        }

        #[test]
        fn global_phase_shifts_unshaped_hologram(delta in -3.0f64..3.0, seed in 0u64..1000) {
            let g = SlmGeometry { width: 16, height: 12, ..SlmGeometry::default() };
            let t = FieldGrid::from_fn(g.width, g.height, g.pitch, |x, y| {
                Complex64::from_polar(1.0, (x * 3.1e3 + y * y * 1.7e7 + seed as f64).sin() * 3.0)
            }).unwrap();
            let rot = t.map(|s| s * Complex64::from_polar(1.0, delta));
            let grating = GratingSpec::default();
            let a = hologram_phase(&t, &grating, &g, Shaping::Off).unwrap();
            let b = hologram_phase(&rot, &grating, &g, Shaping::Off).unwrap();
            for (x, y) in a.iter().zip(&b) {
                let d = (y - x - delta).rem_euclid(TWO_PI);
                prop_assert!(d < 1e-9 || TWO_PI - d < 1e-9);
            }
        }

        #[test]
        fn unit_intensity_is_pure_phase_addition(seed in 0u64..1000) {
            let g = SlmGeometry { width: 16, height: 12, ..SlmGeometry::default() };
            let t = FieldGrid::from_fn(g.width, g.height, g.pitch, |x, y| {
                Complex64::from_polar(1.0, (x * 2.3e3 - y * 4.1e3 + seed as f64).cos() * 3.0)
            }).unwrap();
            let grating = GratingSpec::default();
            let a = hologram_phase(&t, &grating, &g, Shaping::Blaze).unwrap();
            let b = hologram_phase(&t, &grating, &g, Shaping::Off).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
