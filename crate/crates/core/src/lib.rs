//! Forward and inverse simulation of high orbital-angular-momentum superpositions.
//!
//! The forward chain builds modified Laguerre-Gaussian superpositions
//! ([`modes`]), encodes them as phase-only SLM holograms ([`hologram`]),
//! checks the first diffraction order through a 4f relay ([`propagation`]),
//! and forms the Dove-prism Mach-Zehnder interferogram ([`interferometer`])
//! as seen by an ideal or photon-counting camera ([`detector`]).
//! [`identify`] inverts the last step: it finds the concentric spoke rings and
//! recovers the spiral spectrum from them.

pub mod detector;
pub mod error;
pub mod hologram;
pub mod identify;
pub mod interferometer;
pub mod io;
pub mod modes;
pub mod propagation;
mod sampling;

pub use error::{Error, Result};
pub use modes::{FieldGrid, ModeIndex, SpiralComponent, SpiralSpectrum};
