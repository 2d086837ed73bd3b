use std::path::{Path, PathBuf};

use oam_lattice::detector::{photon_sample, CountImage, DetectorSpec};
use oam_lattice::hologram::{quantize_phase, synthesize_hologram_with, HologramImage, Shaping, SlmGeometry};
use oam_lattice::identify::{find_center, radial_profile_of, recover_spectrum, IdentificationResult, ImageData, Status};
use oam_lattice::interferometer::{interfere_exact, interferogram_analytic, write_radial_csv, Interferogram};
use oam_lattice::io::{load_pgm, save_pgm16, save_pgm8, save_png_preview, to_u16_scaled};
use oam_lattice::modes::{ring_limit, synthesize_field};
use oam_lattice::propagation::{plane_wave, reconstruct_first_order, IrisSpec};

use crate::recipe::{Component, Grid, Recipe};
use crate::CliError;

/// Where a command writes: `<dir>/<name>.<suffix>`.
#[derive(Debug, Clone)]
pub struct Output {
    pub dir: PathBuf,
    pub name: String,
    /// Also write PNG previews next to the PGMs.
    pub png: bool,
}

impl Output {
    pub fn new(dir: impl Into<PathBuf>, name: impl Into<String>) -> Self {
        Self {
            dir: dir.into(),
            name: name.into(),
            png: false,
        }
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}.{suffix}", self.name))
    }

    fn prepare(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir)?;
        Ok(())
    }
}

/// Field intensity (16-bit) and phase (8-bit) images on the recipe grid.
pub fn synth(recipe: &Recipe, out: &Output) -> Result<Vec<PathBuf>, CliError> {
    out.prepare()?;
    let g = recipe.grid;
    let field = synthesize_field(&recipe.spectrum()?, g.width, g.height, g.pitch_m)?;
    let intensity: Vec<f64> = field.samples().iter().map(|s| s.norm_sqr()).collect();
    let phase: Vec<u8> = field.samples().iter().map(|s| quantize_phase(s.arg())).collect();

    let mut files = vec![out.path("intensity.pgm"), out.path("phase.pgm")];
    save_pgm16(&files[0], g.width, g.height, &to_u16_scaled(&intensity))?;
    save_pgm8(&files[1], g.width, g.height, &phase)?;
    if out.png {
        let p = out.path("intensity.png");
        save_png_preview(&p, g.width, g.height, &intensity)?;
        files.push(p);
    }
    Ok(files)
}

#[derive(Debug)]
pub struct HoloOutcome {
    pub hologram: HologramImage,
    pub files: Vec<PathBuf>,
    /// `|⟨target|recon⟩|²` of the first-order reconstruction, when requested.
    pub fidelity: Option<f64>,
}

/// SLM hologram of the recipe's superposition. The target is generated on
/// the SLM itself, so a missing `waist_m` is fitted to the SLM.
pub fn holo(recipe: &Recipe, out: &Output, shaping: Option<Shaping>, check: bool) -> Result<HoloOutcome, CliError> {
    out.prepare()?;
    let slm = SlmGeometry::default();
    let spectrum = recipe.spectrum_for(slm.width, slm.height, slm.pitch)?;
    let target = synthesize_field(&spectrum, slm.width, slm.height, slm.pitch)?;
    let grating = recipe.grating_spec()?;
    let hologram = synthesize_hologram_with(&target, &grating, &slm, shaping.unwrap_or(recipe.shaping()))?;
    let path = out.path("holo.pgm");
    hologram.save_pgm(&path)?;
    let mut files = vec![path];
    if out.png {
        let p = out.path("holo.png");
        let values: Vec<f64> = hologram.gray().iter().map(|&g| g as f64).collect();
        save_png_preview(&p, slm.width, slm.height, &values)?;
        files.push(p);
    }
    let fidelity = if check {
        let recon = reconstruct_first_order(&hologram, &plane_wave(&slm)?, &IrisSpec::for_grating(&grating))?;
        Some(target.fidelity(&recon)?)
    } else {
        None
    };
    Ok(HoloOutcome {
        hologram,
        files,
        fidelity,
    })
}

/// How the interferogram is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldPath {
    /// Closed form straight from the spectrum.
    #[default]
    Analytic,
    /// Synthesize the field and interfere it with its mirror image.
    Exact,
}

/// What [`interfere`] produced.
#[derive(Debug)]
pub enum Frame {
    Intensity(Interferogram),
    Counts(CountImage),
}

impl Frame {
    fn as_image(&self) -> &dyn ImageData {
        match self {
            Frame::Intensity(i) => i,
            Frame::Counts(c) => c,
        }
    }
}

#[derive(Debug)]
pub struct InterfereOutcome {
    pub frame: Frame,
    pub identification: IdentificationResult,
    pub files: Vec<PathBuf>,
}

/// Interferogram (or photon-count frame) plus ring and radial-profile CSVs.
pub fn interfere(
    recipe: &Recipe,
    out: &Output,
    path: FieldPath,
    detector: Option<DetectorSpec>,
) -> Result<InterfereOutcome, CliError> {
    out.prepare()?;
    let g = recipe.grid;
    let spectrum = recipe.spectrum()?;
    let image = match path {
        FieldPath::Analytic => {
            // keep the analytic path under the same clipping rule as the exact one
            let ring = spectrum.waist() * (spectrum.max_abs_ell() as f64 / 2.0).sqrt();
            let limit = ring_limit(g.width, g.height, g.pitch_m);
            if ring > limit * (1.0 + 1e-12) {
                return Err(oam_lattice::Error::RingExceedsGrid {
                    ring_radius_m: ring,
                    limit_m: limit,
                }
                .into());
            }
            interferogram_analytic(&spectrum, g.width, g.height, g.pitch_m)?
        }
        FieldPath::Exact => interfere_exact(&synthesize_field(&spectrum, g.width, g.height, g.pitch_m)?),
    };
    let mut files = Vec::new();
    let frame = match detector {
        Some(spec) => {
            let counts = photon_sample(&image, &spec)?;
            let p = out.path("counts.pgm");
            counts.save_pgm(&p)?;
            files.push(p);
            Frame::Counts(counts)
        }
        None => {
            let p = out.path("interferogram.pgm");
            image.save_pgm(&p)?;
            files.push(p);
            if out.png {
                let p = out.path("interferogram.png");
                image.save_png(&p)?;
                files.push(p);
            }
            Frame::Intensity(image)
        }
    };

    let view = frame.as_image();
    let identification = recover_spectrum(view, recipe.n_fold(), None)?;
    let p = out.path("rings.csv");
    identification.write_csv(std::fs::File::create(&p)?)?;
    files.push(p);
    let p = out.path("radial.csv");
    let profile = radial_profile_of(view, find_center(view))?;
    write_radial_csv(std::fs::File::create(&p)?, &profile)?;
    files.push(p);
    Ok(InterfereOutcome {
        frame,
        identification,
        files,
    })
}

#[derive(Debug)]
pub struct IdentifyOutcome {
    pub identification: IdentificationResult,
    /// Recipe re-creating the recovered superposition, if any.
    pub recipe: Option<Recipe>,
    pub files: Vec<PathBuf>,
}

/// Recipe reproducing an identification on a grid at least as large as the image.
pub fn recipe_from(result: &IdentificationResult, width: usize, height: usize) -> Option<Recipe> {
    let spectrum = result.recovered.as_ref()?;
    let pitch = result.pitch;
    let ring = spectrum.waist() * (spectrum.max_abs_ell() as f64 / 2.0).sqrt();
    // grow the grid when the fitted waist lands just beyond the clipping limit
    let need = (ring / (0.45 * pitch)).ceil() as usize;
    let grow = |n: usize| if n >= need { n } else { need + need % 2 };
    Some(Recipe {
        waist_m: Some(spectrum.waist()),
        grid: Grid {
            width: grow(width),
            height: grow(height),
            pitch_m: pitch,
        },
        components: spectrum
            .components()
            .iter()
            .map(|c| Component {
                p: c.mode.p,
                ell: c.mode.ell,
                n_fold: c.mode.n_fold,
                amp_re: c.amplitude.re,
                amp_im: c.amplitude.im,
            })
            .collect(),
        detector: None,
        grating: None,
    })
}

/// Identify the superposition behind a PGM frame. Writes the ring CSV, a
/// recipe and optionally a text report; no rings or an inconsistent
/// helicity factor come back as errors after the files are written.
pub fn identify(
    image_path: &Path,
    n_fold: u32,
    pitch: f64,
    out: &Output,
    report: Option<&Path>,
) -> Result<IdentifyOutcome, CliError> {
    out.prepare()?;
    let gray = load_pgm(image_path)?;
    let image = CountImage::from_gray(&gray, pitch)?;
    let identification = recover_spectrum(&image, n_fold, None)?;

    let mut files = Vec::new();
    let p = out.path("rings.csv");
    identification.write_csv(std::fs::File::create(&p)?)?;
    files.push(p);
    if let Some(r) = report {
        std::fs::write(r, identification.report())?;
        files.push(r.to_path_buf());
    }
    let recipe = recipe_from(&identification, gray.width, gray.height);
    if let Some(r) = &recipe {
        let p = out.path("recipe.toml");
        std::fs::write(&p, r.to_toml())?;
        files.push(p);
    }
    match identification.status {
        Status::Ok => Ok(IdentifyOutcome {
            identification,
            recipe,
            files,
        }),
        Status::NoRings => Err(CliError::NoRings(image_path.display().to_string())),
        Status::InconsistentNFold => Err(CliError::InconsistentNFold(format!(
            "no ring spoke count is a multiple of 2N = {}",
            2 * n_fold
        ))),
    }
}
