//! Inverse problem: rings, spokes and the spiral spectrum behind an interferogram.
//!
//! A `p = 0` component of helicity `Nℓ` shows up as a ring at radius
//! `ω·sqrt(|ℓ|/2)` carrying `2N|ℓ|` spokes, with a radial-profile peak height
//! close to `|α|²/sqrt(|ℓ|)`. [`recover_spectrum`] runs the whole chain:
//! [`find_center`], [`radial_bins`], [`detect_rings`], then
//! [`count_spokes_on_ring`] on every ring.

mod profile;
mod spokes;

pub use profile::{
    annulus_power, detect_rings, find_center, radial_bins, radial_profile_of, ImageData, RadialBin, RadialPeak,
    RingDetection, MIN_BIN_PIXELS, MIN_PROMINENCE, SMOOTHING_WINDOW,
};
pub use spokes::{azimuthal_power, count_spokes_on_ring, max_resolvable_harmonic, spokes_from_arc, SpokeEstimate};

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::{ModeIndex, SpiralComponent, SpiralSpectrum};

/// How ring brightness is turned into a weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Brightness {
    /// Smoothed radial-profile peak height; weight ∝ height·sqrt(|ℓ|).
    #[default]
    PeakHeight,
    /// Pixel sum over the ring's annulus; weight ∝ sum.
    AnnulusPower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoverOptions {
    /// Waist in meters; fitted to the ring radii when absent.
    pub waist_hint: Option<f64>,
    pub brightness: Brightness,
    /// Rings whose spoke harmonic holds less than this share of the
    /// azimuthal AC power are reported but left out of the spectrum.
    pub min_power_fraction: f64,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        Self {
            waist_hint: None,
            brightness: Brightness::default(),
            min_power_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingReport {
    pub radius_px: f64,
    pub radius_m: f64,
    pub spoke_count: u64,
    pub harmonic_power_fraction: f64,
    /// Smoothed radial-profile peak height.
    pub brightness: f64,
    /// Pixel sum over the ring's annulus.
    pub annulus_power: f64,
    /// `n / (2N)`; may be fractional when `N` is wrong.
    pub inferred_abs_ell: f64,
    pub integer_ell: bool,
    /// Weight in the recovered spectrum; zero for rings left out.
    pub weight: f64,
    /// Number of detected rings merged into this one (same spoke count).
    pub merged: usize,
}

impl RingReport {
    pub fn abs_ell(&self) -> Option<u32> {
        self.integer_ell.then_some(self.inferred_abs_ell as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// No ring passed detection.
    NoRings,
    /// Rings were found but none gives an integer `|ℓ|` for the assumed `N`.
    InconsistentNFold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult {
    pub status: Status,
    pub assumed_n_fold: u32,
    /// Pixel-index coordinates of the optical axis.
    pub center: [f64; 2],
    pub pitch: f64,
    /// Ordered by radius.
    pub rings: Vec<RingReport>,
    pub axial_blob: Option<RadialPeak>,
    /// Weights only: amplitudes are `sqrt(weight)` with zero phase.
    pub recovered: Option<SpiralSpectrum>,
    pub warnings: Vec<String>,
}

impl IdentificationResult {
    /// Recovered `|ℓ|` values in radius order.
    pub fn abs_ells(&self) -> Vec<u32> {
        self.rings
            .iter()
            .filter(|r| r.weight > 0.0)
            .filter_map(RingReport::abs_ell)
            .collect()
    }

    pub fn spoke_counts(&self) -> Vec<u64> {
        self.rings.iter().map(|r| r.spoke_count).collect()
    }

    /// Weight of `|ℓ|` in the recovered spectrum (zero when absent).
    pub fn weight_of(&self, abs_ell: u32) -> f64 {
        self.rings
            .iter()
            .filter(|r| r.abs_ell() == Some(abs_ell))
            .map(|r| r.weight)
            .sum()
    }

    /// Human-readable summary.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let status = match self.status {
            Status::Ok => "ok",
            Status::NoRings => "no rings detected",
            Status::InconsistentNFold => "inconsistent n-fold",
        };
        let _ = writeln!(s, "status: {status}");
        let _ = writeln!(s, "assumed N: {}", self.assumed_n_fold);
        let _ = writeln!(s, "center (px): {:.2}, {:.2}", self.center[0], self.center[1]);
        if let Some(b) = &self.axial_blob {
            let _ = writeln!(s, "axial blob: brightness {:.6e} (not a ring)", b.brightness);
        }
        let _ = writeln!(s, "rings: {}", self.rings.len());
        for (k, r) in self.rings.iter().enumerate() {
            let ell = if r.integer_ell {
                format!("{}", r.inferred_abs_ell as u64)
            } else {
                format!("{:.3} (non-integer)", r.inferred_abs_ell)
            };
            let _ = writeln!(
                s,
                "  #{k}: r = {:.2} px ({:.4e} m), spokes {}, confidence {:.3}, brightness {:.4e}, |l| = {ell}, weight {:.4}",
                r.radius_px, r.radius_m, r.spoke_count, r.harmonic_power_fraction, r.brightness, r.weight
            );
        }
        if let Some(spec) = &self.recovered {
            let _ = writeln!(s, "waist: {:.6e} m", spec.waist());
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    /// CSV with one row per ring.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "ring_index",
            "radius_px",
            "radius_m",
            "spoke_count",
            "power_fraction",
            "brightness",
            "inferred_abs_ell",
            "weight",
        ])?;
        for (k, r) in self.rings.iter().enumerate() {
            out.write_record([
                k.to_string(),
                r.radius_px.to_string(),
                r.radius_m.to_string(),
                r.spoke_count.to_string(),
                r.harmonic_power_fraction.to_string(),
                r.brightness.to_string(),
                r.inferred_abs_ell.to_string(),
                r.weight.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// [`recover_spectrum_with`] using the default options and an optional waist.
pub fn recover_spectrum<I: ImageData + ?Sized>(
    image: &I,
    assumed_n_fold: u32,
    waist_hint: Option<f64>,
) -> Result<IdentificationResult> {
    recover_spectrum_with(
        image,
        assumed_n_fold,
        &RecoverOptions {
            waist_hint,
            ..RecoverOptions::default()
        },
    )
}

pub fn recover_spectrum_with<I: ImageData + ?Sized>(
    image: &I,
    assumed_n_fold: u32,
    options: &RecoverOptions,
) -> Result<IdentificationResult> {
    if assumed_n_fold == 0 {
        return Err(Error::invalid("n_fold", "must be >= 1"));
    }
    if let Some(w) = options.waist_hint {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::invalid("waist_hint", format!("must be positive, got {w}")));
        }
    }
    let pitch = image.pitch();
    let center = find_center(image);
    let bins = radial_bins(image, center)?;
    let profile: Vec<(f64, f64)> = bins.iter().map(|b| (b.radius, b.mean)).collect();
    let detection = detect_rings(&profile);
    let mut result = IdentificationResult {
        status: Status::NoRings,
        assumed_n_fold,
        center,
        pitch,
        rings: Vec::new(),
        axial_blob: detection.axial_blob,
        recovered: None,
        warnings: Vec::new(),
    };
    if detection.is_empty() {
        return Ok(result);
    }

    let powers = annulus_power(&bins, &detection.rings);
    let two_n = 2 * assumed_n_fold as u64;
    let mut rings: Vec<RingReport> = Vec::new();
    for (peak, &annulus) in detection.rings.iter().zip(&powers) {
        let max_harmonic = max_resolvable_harmonic(peak.radius);
        let est = if max_harmonic == 0 {
            SpokeEstimate {
                count: 0,
                power_fraction: 0.0,
            }
        } else {
            count_spokes_on_ring(image, center, peak.radius, max_harmonic)?
        };
        let ring = RingReport {
            radius_px: peak.radius,
            radius_m: peak.radius * pitch,
            spoke_count: est.count,
            harmonic_power_fraction: est.power_fraction,
            brightness: peak.brightness,
            annulus_power: annulus,
            inferred_abs_ell: est.count as f64 / two_n as f64,
            integer_ell: est.count > 0 && est.count % two_n == 0,
            weight: 0.0,
            merged: 1,
        };
        if let Some(prev) = rings.iter_mut().find(|r| r.spoke_count == ring.spoke_count && ring.spoke_count > 0) {
            result.warnings.push(format!(
                "rings at {:.1} px and {:.1} px share {} spokes; merged",
                prev.radius_px, ring.radius_px, ring.spoke_count
            ));
            let total = prev.brightness + ring.brightness;
            prev.radius_px = (prev.radius_px * prev.brightness + ring.radius_px * ring.brightness) / total;
            prev.radius_m = prev.radius_px * pitch;
            prev.brightness = total;
            prev.annulus_power += ring.annulus_power;
            prev.harmonic_power_fraction = prev.harmonic_power_fraction.max(ring.harmonic_power_fraction);
            prev.merged += 1;
        } else {
            rings.push(ring);
        }
    }

    for r in &rings {
        if r.spoke_count == 0 {
            result
                .warnings
                .push(format!("ring at {:.1} px shows no azimuthal structure", r.radius_px));
        } else if !r.integer_ell {
            result.warnings.push(format!(
                "ring at {:.1} px: {} spokes is not a multiple of 2N = {two_n} (|l| = {:.3})",
                r.radius_px, r.spoke_count, r.inferred_abs_ell
            ));
        }
    }

    let usable = |r: &RingReport| r.integer_ell && r.harmonic_power_fraction >= options.min_power_fraction;
    let raw: Vec<f64> = rings
        .iter()
        .map(|r| {
            if !usable(r) {
                return 0.0;
            }
            match options.brightness {
                Brightness::PeakHeight => r.brightness * r.inferred_abs_ell.sqrt(),
                Brightness::AnnulusPower => r.annulus_power,
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        result.status = Status::InconsistentNFold;
        result.rings = rings;
        return Ok(result);
    }
    for (r, w) in rings.iter_mut().zip(&raw) {
        r.weight = w / total;
    }

    let waist = match options.waist_hint {
        Some(w) => w,
        None => {
            // least squares for radius = ω·s, s = sqrt(|ℓ|/2)
            let (num, den) = rings.iter().filter(|r| r.weight > 0.0).fold((0.0, 0.0), |(n, d), r| {
                let s = (r.inferred_abs_ell / 2.0).sqrt();
                (n + r.radius_m * s, d + s * s)
            });
            num / den
        }
    };
    let components = rings
        .iter()
        .filter(|r| r.weight > 0.0)
        .map(|r| {
            SpiralComponent::new(
                ModeIndex::modified(r.inferred_abs_ell as i32, assumed_n_fold),
                Complex64::new(r.weight.sqrt(), 0.0),
            )
        })
        .collect();
    result.recovered = Some(SpiralSpectrum::new(components, waist)?.normalized()?);
    result.status = Status::Ok;
    result.rings = rings;
    Ok(result)
}
