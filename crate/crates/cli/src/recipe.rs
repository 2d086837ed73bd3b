//! TOML recipe files describing a superposition and how to image it.
//!
//! ```toml
//! waist_m = 1.2e-3          # optional; fitted to the grid when absent
//!
//! [grid]
//! width = 1024
//! height = 1024
//! pitch_m = 1e-5
//!
//! [[components]]
//! ell = 50
//! n_fold = 1
//! amp_re = 1.0
//! amp_im = 0.0
//!
//! [detector]               # optional
//! width = 512
//! height = 512
//! mean_flux = 1.0
//! seed = 7
//!
//! [grating]                # optional
//! period_px = 4.0
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use oam_lattice::detector::DetectorSpec;
use oam_lattice::hologram::{fitted_waist, GratingSpec, Shaping};
use oam_lattice::{ModeIndex, SpiralComponent, SpiralSpectrum};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waist_m: Option<f64>,
    pub grid: Grid,
    pub components: Vec<Component>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<Detector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grating: Option<Grating>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub pitch_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    #[serde(default)]
    pub p: u32,
    pub ell: i32,
    #[serde(default = "one")]
    pub n_fold: u32,
    pub amp_re: f64,
    #[serde(default)]
    pub amp_im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detector {
    pub width: usize,
    pub height: usize,
    pub mean_flux: f64,
    #[serde(default)]
    pub read_noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grating {
    #[serde(default = "default_period")]
    pub period_px: f64,
    #[serde(default = "default_orientation")]
    pub orientation: [f64; 2],
    #[serde(default = "yes")]
    pub shape_intensity: bool,
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

fn default_period() -> f64 {
    GratingSpec::default().period
}

fn default_orientation() -> [f64; 2] {
    GratingSpec::default().orientation
}

impl Default for Grating {
    fn default() -> Self {
        Self {
            period_px: default_period(),
            orientation: default_orientation(),
            shape_intensity: true,
        }
    }
}

fn field_error(field: impl std::fmt::Display, reason: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{field}: {reason}"))
}

impl Recipe {
    /// Parse and validate; errors name the offending line or field.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let recipe: Recipe = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("recipe fields are plain TOML values")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(w) = self.waist_m {
            if !(w > 0.0 && w.is_finite()) {
                return Err(field_error("waist_m", format!("must be positive, got {w}")));
            }
        }
        let g = &self.grid;
        if g.width == 0 || g.height == 0 {
            return Err(field_error("grid", format!("empty grid {}x{}", g.width, g.height)));
        }
        if !(g.pitch_m > 0.0 && g.pitch_m.is_finite()) {
            return Err(field_error("grid.pitch_m", format!("must be positive, got {}", g.pitch_m)));
        }
        if self.components.is_empty() {
            return Err(field_error("components", "at least one component is required"));
        }
        for (k, c) in self.components.iter().enumerate() {
            if c.n_fold == 0 {
                return Err(field_error(format!("components[{k}].n_fold"), "must be >= 1"));
            }
            if !(c.amp_re.is_finite() && c.amp_im.is_finite()) {
                return Err(field_error(format!("components[{k}]"), "amplitude must be finite"));
            }
        }
        if let Some(d) = &self.detector {
            d.spec().validate().map_err(|e| field_error("detector", e))?;
        }
        if let Some(gr) = &self.grating {
            GratingSpec::new(gr.period_px, gr.orientation).map_err(|e| field_error("grating", e))?;
        }
        Ok(())
    }

    pub fn max_abs_ell(&self) -> u32 {
        self.components.iter().map(|c| c.ell.unsigned_abs()).max().unwrap_or(0)
    }

    /// `waist_m`, or the waist that puts the outermost ring at the grid limit.
    pub fn waist_for(&self, width: usize, height: usize, pitch: f64) -> f64 {
        self.waist_m
            .unwrap_or_else(|| fitted_waist(self.max_abs_ell(), width, height, pitch))
    }

    pub fn spectrum_for(&self, width: usize, height: usize, pitch: f64) -> Result<SpiralSpectrum, CliError> {
        let components = self
            .components
            .iter()
            .map(|c| {
                Ok(SpiralComponent::new(
                    ModeIndex::new(c.p, c.ell, c.n_fold)?,
                    Complex64::new(c.amp_re, c.amp_im),
                ))
            })
            .collect::<Result<Vec<_>, oam_lattice::Error>>()?;
        Ok(SpiralSpectrum::new(components, self.waist_for(width, height, pitch))?)
    }

    /// Spectrum on the recipe's own grid.
    pub fn spectrum(&self) -> Result<SpiralSpectrum, CliError> {
        self.spectrum_for(self.grid.width, self.grid.height, self.grid.pitch_m)
    }

    /// Smallest helicity factor among the components, used to read spoke counts.
    pub fn n_fold(&self) -> u32 {
        self.components.iter().map(|c| c.n_fold).min().unwrap_or(1)
    }

    pub fn grating(&self) -> Grating {
        self.grating.unwrap_or_default()
    }

    pub fn grating_spec(&self) -> Result<GratingSpec, CliError> {
        let g = self.grating();
        Ok(GratingSpec::new(g.period_px, g.orientation)?)
    }

    pub fn shaping(&self) -> Shaping {
        if self.grating().shape_intensity {
            Shaping::Blaze
        } else {
            Shaping::Off
        }
    }

    /// Pixel pitch of an image of the given size produced from this recipe:
    /// the grid pitch, or the binned detector pitch.
    pub fn pitch_for_image(&self, width: usize, height: usize) -> Option<f64> {
        if (width, height) == (self.grid.width, self.grid.height) {
            return Some(self.grid.pitch_m);
        }
        self.detector
            .filter(|d| (d.width, d.height) == (width, height))
            .map(|d| self.grid.pitch_m * self.grid.width as f64 / d.width as f64)
    }
}

impl Detector {
    pub fn spec(&self) -> DetectorSpec {
        DetectorSpec {
            width: self.width,
            height: self.height,
            mean_flux: self.mean_flux,
            read_noise_sigma: self.read_noise_sigma,
            seed: self.seed,
        }
    }

    pub fn from_spec(spec: &DetectorSpec) -> Self {
        Self {
            width: spec.width,
            height: spec.height,
            mean_flux: spec.mean_flux,
            read_noise_sigma: spec.read_noise_sigma,
            seed: spec.seed,
        }
    }
}
