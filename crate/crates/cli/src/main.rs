use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oam_lattice::detector::DetectorSpec;
use oam_lattice::hologram::Shaping;
use oamlat::commands::{self, FieldPath, Output};
use oamlat::{bundled, exit, CliError, Recipe};

#[derive(Parser)]
#[command(name = "oamlat", version, about = "Simulate and identify high-OAM spiral superpositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "OAMLAT_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Base name of the output files (default: recipe or image stem).
    #[arg(long)]
    name: Option<String>,
    /// Also write PNG previews.
    #[arg(long)]
    png: bool,
}

impl OutArgs {
    fn output(&self, default_name: &str) -> Output {
        Output {
            dir: self.out_dir.clone(),
            name: self.name.clone().unwrap_or_else(|| default_name.to_string()),
            png: self.png,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Field intensity and phase images of a recipe.
    Synth {
        /// Recipe file or bundled recipe name.
        recipe: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// 8-bit SLM hologram of a recipe.
    Holo {
        recipe: String,
        /// Pure phase grating, no intensity shaping.
        #[arg(long)]
        no_shaping: bool,
        /// Reconstruct the first order and print its fidelity.
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Interferogram (or photon-count frame) of a recipe.
    Interfere {
        recipe: String,
        /// Synthesize the field and interfere it with its mirror image.
        #[arg(long, conflicts_with = "analytic")]
        exact: bool,
        /// Closed-form interferogram (default).
        #[arg(long)]
        analytic: bool,
        /// Photon-count frame. Uses the recipe's detector section, overridden by
        /// KEY=VALUE pairs (flux, seed, sigma, width, height).
        #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
        detector: Option<Vec<String>>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Recover the spiral spectrum behind an interferogram or count frame.
    Identify {
        /// 8- or 16-bit PGM image.
        image: PathBuf,
        /// Helicity factor N assumed for the superposition.
        #[arg(long, default_value_t = 1)]
        n_fold: u32,
        /// Pixel pitch in metres.
        #[arg(long)]
        pitch_m: Option<f64>,
        /// Recipe the image came from; supplies the pitch when --pitch-m is absent.
        #[arg(long)]
        recipe: Option<String>,
        /// Write a human-readable report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// List the bundled recipes.
    Recipes,
}

fn detector_spec(recipe: &Recipe, overrides: &[String]) -> Result<DetectorSpec, CliError> {
    // without a detector section, count on the simulation grid itself
    let mut spec = recipe.detector.map(|d| d.spec()).unwrap_or(DetectorSpec {
        width: recipe.grid.width,
        height: recipe.grid.height,
        ..DetectorSpec::default()
    });
    for kv in overrides {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("--detector {kv}: expected KEY=VALUE")))?;
        let bad = |e: &dyn std::fmt::Display| CliError::Parse(format!("--detector {key}: {e}"));
        match key {
            "flux" | "mean_flux" => spec.mean_flux = value.parse().map_err(|e| bad(&e))?,
            "sigma" | "read_noise_sigma" => spec.read_noise_sigma = value.parse().map_err(|e| bad(&e))?,
            "seed" => spec.seed = value.parse().map_err(|e| bad(&e))?,
            "width" => spec.width = value.parse().map_err(|e| bad(&e))?,
            "height" => spec.height = value.parse().map_err(|e| bad(&e))?,
            _ => return Err(bad(&"unknown key (flux, seed, sigma, width, height)")),
        }
    }
    spec.validate().map_err(|e| CliError::Parse(format!("--detector: {e}")))?;
    Ok(spec)
}

fn image_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image")
        .to_string()
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { recipe, out } => {
            let (r, stem) = bundled::resolve(&recipe)?;
            print_files(&commands::synth(&r, &out.output(&stem))?);
        }
        Command::Holo {
            recipe,
            no_shaping,
            check,
            out,
        } => {
            let (r, stem) = bundled::resolve(&recipe)?;
            let shaping = no_shaping.then_some(Shaping::Off);
            let outcome = commands::holo(&r, &out.output(&stem), shaping, check)?;
            print_files(&outcome.files);
            if let Some(f) = outcome.fidelity {
                println!("first-order fidelity {f:.4}");
            }
        }
        Command::Interfere {
            recipe,
            exact,
            analytic: _,
            detector,
            out,
        } => {
            let (r, stem) = bundled::resolve(&recipe)?;
            let spec = detector.map(|kv| detector_spec(&r, &kv)).transpose()?;
            let path = if exact { FieldPath::Exact } else { FieldPath::Analytic };
            let outcome = commands::interfere(&r, &out.output(&stem), path, spec)?;
            print_files(&outcome.files);
            print!("{}", outcome.identification.report());
        }
        Command::Identify {
            image,
            n_fold,
            pitch_m,
            recipe,
            report,
            out,
        } => {
            let pitch = match (pitch_m, recipe) {
                (Some(p), _) => p,
                (None, Some(arg)) => {
                    let (r, _) = bundled::resolve(&arg)?;
                    let gray = oam_lattice::io::load_pgm(&image)?;
                    r.pitch_for_image(gray.width, gray.height).ok_or_else(|| {
                        CliError::Parse(format!(
                            "{}: {}x{} matches neither the recipe grid nor its detector; pass --pitch-m",
                            image.display(),
                            gray.width,
                            gray.height
                        ))
                    })?
                }
                (None, None) => {
                    eprintln!("warning: no --pitch-m or --recipe, radii reported with a 1 m pitch");
                    1.0
                }
            };
            let output = out.output(&image_stem(&image));
            let outcome = commands::identify(&image, n_fold, pitch, &output, report.as_deref())?;
            print_files(&outcome.files);
            print!("{}", outcome.identification.report());
        }
        Command::Recipes => {
            for name in bundled::names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
