//! Laguerre-Gaussian mode mathematics at the beam waist.
//!
//! A standard mode is `R_p^ℓ(ρ)·exp(iℓϕ)`. The modified mode keeps the
//! `p = 0` radial profile of `ℓ` but carries `N`-fold phase helicity,
//! `R_0^ℓ(ρ)·exp(iNℓϕ)`. [`ModeIndex`] covers both cases through `n_fold`.
//!
//! Radial profiles are normalized to unit power over the transverse plane,
//! `2π ∫ R² ρ dρ = 1`, and are evaluated in log space so that azimuthal
//! indices of several hundred do not overflow.

mod decompose;
mod field;

pub use decompose::{decompose_nfold, gauss_legendre, Decomposition};
pub use field::{ring_limit, synthesize_field, FieldGrid};

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Radial index `p`, azimuthal index `ℓ` and helicity multiplier `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub p: u32,
    pub ell: i32,
    pub n_fold: u32,
}

impl ModeIndex {
    pub fn new(p: u32, ell: i32, n_fold: u32) -> Result<Self> {
        if n_fold == 0 {
            return Err(Error::invalid("n_fold", "must be >= 1"));
        }
        Ok(Self { p, ell, n_fold })
    }

    /// Standard LG mode (`N = 1`).
    pub fn standard(p: u32, ell: i32) -> Self {
        Self { p, ell, n_fold: 1 }
    }

    /// Modified `p = 0` mode with `N`-fold helicity.
    pub fn modified(ell: i32, n_fold: u32) -> Self {
        Self {
            p: 0,
            ell,
            n_fold: n_fold.max(1),
        }
    }

    /// The azimuthal harmonic `N·ℓ` carried by the phase.
    pub fn harmonic(&self) -> i64 {
        self.n_fold as i64 * self.ell as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralComponent {
    pub mode: ModeIndex,
    pub amplitude: Complex64,
}

impl SpiralComponent {
    pub fn new(mode: ModeIndex, amplitude: Complex64) -> Self {
        Self { mode, amplitude }
    }
}

/// A weighted superposition of (modified) LG modes sharing one beam waist.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralSpectrum {
    components: Vec<SpiralComponent>,
    waist: f64,
}

impl SpiralSpectrum {
    pub fn new(components: Vec<SpiralComponent>, waist: f64) -> Result<Self> {
        check_waist(waist)?;
        let mut seen = std::collections::HashSet::new();
        for c in &components {
            if c.mode.n_fold == 0 {
                return Err(Error::invalid("n_fold", "must be >= 1"));
            }
            if !(c.amplitude.re.is_finite() && c.amplitude.im.is_finite()) {
                return Err(Error::invalid("amplitude", "must be finite"));
            }
            if !seen.insert(c.mode) {
                return Err(Error::DuplicateMode(c.mode));
            }
        }
        Ok(Self { components, waist })
    }

    /// Equal-weight superposition of modified modes `|N,ℓ⟩` (not normalized).
    pub fn uniform(ells: &[i32], n_fold: u32, waist: f64) -> Result<Self> {
        let comps = ells
            .iter()
            .map(|&l| Ok(SpiralComponent::new(ModeIndex::new(0, l, n_fold)?, Complex64::new(1.0, 0.0))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps, waist)
    }

    pub fn components(&self) -> &[SpiralComponent] {
        &self.components
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn with_waist(&self, waist: f64) -> Result<Self> {
        check_waist(waist)?;
        Ok(Self {
            components: self.components.clone(),
            waist,
        })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `Σ|α|²`.
    pub fn power(&self) -> f64 {
        self.components.iter().map(|c| c.amplitude.norm_sqr()).sum()
    }

    /// Largest `|ℓ|` over all components (0 for an empty spectrum).
    pub fn max_abs_ell(&self) -> u32 {
        self.components
            .iter()
            .map(|c| c.mode.ell.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn amplitude_of(&self, mode: ModeIndex) -> Option<Complex64> {
        self.components
            .iter()
            .find(|c| c.mode == mode)
            .map(|c| c.amplitude)
    }

    /// Rescale so that `Σ|α|² = 1`, keeping relative phases.
    pub fn normalized(&self) -> Result<Self> {
        let power = self.power();
        if !(power > 0.0) {
            return Err(Error::ZeroSpectrum);
        }
        let scale = power.sqrt().recip();
        Ok(self.scaled(Complex64::new(scale, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| SpiralComponent::new(c.mode, c.amplitude * factor))
                .collect(),
            waist: self.waist,
        }
    }

    /// `a·self + b·other`, merging shared modes. Both spectra must share a waist.
    pub fn linear_combination(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        if self.waist != other.waist {
            return Err(Error::invalid(
                "waist",
                format!("cannot combine spectra with waists {} and {}", self.waist, other.waist),
            ));
        }
        let mut merged: Vec<SpiralComponent> = self.scaled(a).components;
        for c in other.components() {
            let amp = c.amplitude * b;
            match merged.iter_mut().find(|m| m.mode == c.mode) {
                Some(m) => m.amplitude += amp,
                None => merged.push(SpiralComponent::new(c.mode, amp)),
            }
        }
        Self::new(merged, self.waist)
    }
}

fn check_waist(waist: f64) -> Result<()> {
    if !(waist > 0.0 && waist.is_finite()) {
        return Err(Error::invalid("waist", format!("must be positive and finite, got {waist}")));
    }
    Ok(())
}

/// Generalized Laguerre polynomial `L_p^α(x)` by the three-term recurrence.
pub fn laguerre(p: u32, alpha: u32, x: f64) -> f64 {
    let a = alpha as f64;
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..p {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln(n!)` by direct summation; exact enough for the factorial ratios here.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Precomputed radial profile `R_p^ℓ(ρ)` for a fixed `(p, |ℓ|, ω)`.
#[derive(Debug, Clone, Copy)]
pub struct RadialProfile {
    p: u32,
    abs_ell: u32,
    waist: f64,
    ln_norm: f64,
}

impl RadialProfile {
    pub fn new(p: u32, ell: i32, waist: f64) -> Result<Self> {
        check_waist(waist)?;
        let abs_ell = ell.unsigned_abs();
        // A = sqrt(2 p! / (π (p+|ℓ|)!)) / ω
        let ln_norm = 0.5
            * (2f64.ln() + ln_factorial(p as u64) - PI.ln() - ln_factorial(p as u64 + abs_ell as u64))
            - waist.ln();
        Ok(Self {
            p,
            abs_ell,
            waist,
            ln_norm,
        })
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let s = rho / self.waist;
        let poly = if self.p == 0 {
            1.0
        } else {
            laguerre(self.p, self.abs_ell, 2.0 * s * s)
        };
        if self.abs_ell == 0 {
            return (self.ln_norm - s * s).exp() * poly;
        }
        if rho <= 0.0 {
            return 0.0;
        }
        let ln_mag = self.ln_norm + self.abs_ell as f64 * (SQRT_2 * s).ln() - s * s;
        ln_mag.exp() * poly
    }
}

/// `R_p^ℓ(ρ)` under unit transverse-power normalization.
pub fn radial_profile(mode: ModeIndex, waist: f64, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::invalid("rho", format!("must be >= 0, got {rho}")));
    }
    Ok(RadialProfile::new(mode.p, mode.ell, waist)?.eval(rho))
}

/// Radius `ω·sqrt(|ℓ|/2)` of the bright ring of a `p = 0` mode.
pub fn peak_radius(ell: i32, waist: f64) -> Result<f64> {
    if ell == 0 {
        return Err(Error::invalid("ell", "a p=0, ell=0 mode has no ring"));
    }
    check_waist(waist)?;
    Ok(waist * (ell.unsigned_abs() as f64 / 2.0).sqrt())
}

/// Normalize a spectrum to unit total weight.
pub fn normalize(spectrum: &SpiralSpectrum) -> Result<SpiralSpectrum> {
    spectrum.normalized()
}

/// State seen when the interferometer is run backwards: every `|N,ℓ⟩` is
/// split equally into `|N,ℓ⟩` and `|N,−ℓ⟩`, shared modes are merged, and
/// the result renormalized. Components are ordered by `(N, ℓ, p)`.
pub fn backward_detection_spectrum(spectrum: &SpiralSpectrum) -> Result<SpiralSpectrum> {
    let mut merged: BTreeMap<(u32, i32, u32), Complex64> = BTreeMap::new();
    for c in spectrum.components() {
        if c.mode.ell == 0 {
            return Err(Error::invalid(
                "ell",
                "backward detection is undefined for an ell=0 component",
            ));
        }
        let half = c.amplitude / SQRT_2;
        for ell in [c.mode.ell, -c.mode.ell] {
            *merged
                .entry((c.mode.n_fold, ell, c.mode.p))
                .or_insert(Complex64::new(0.0, 0.0)) += half;
        }
    }
    let components = merged
        .into_iter()
        .map(|((n_fold, ell, p), amp)| SpiralComponent::new(ModeIndex { p, ell, n_fold }, amp))
        .collect();
    SpiralSpectrum::new(components, spectrum.waist())?.normalized()
}
