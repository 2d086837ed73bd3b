use thiserror::Error;

use crate::modes::ModeIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("spectrum has no nonzero amplitude")]
    ZeroSpectrum,

    #[error("duplicate mode (p={}, ell={}, N={}) in spectrum", .0.p, .0.ell, .0.n_fold)]
    DuplicateMode(ModeIndex),

    #[error(
        "ring exceeds grid: outermost ring radius {ring_radius_m:.4e} m is beyond the \
         allowed {limit_m:.4e} m (0.45 x smallest grid side)"
    )]
    RingExceedsGrid { ring_radius_m: f64, limit_m: f64 },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("grid dimensions must be even for the centered transform, got {width}x{height}")]
    OddDimensions { width: usize, height: usize },

    #[error(
        "quadrature for c_{p} did not converge: last two estimates {previous:e} and {current:e} \
         at order {order}"
    )]
    QuadratureNonConvergence {
        p: u32,
        previous: f64,
        current: f64,
        order: usize,
    },

    #[error(
        "iris passband overlaps the zero order: carrier distance {distance:.4} cycles/px is \
         below iris radius {radius:.4} + zero-order width {zero_order_width:.4}"
    )]
    IrisOverlapsZeroOrder {
        distance: f64,
        radius: f64,
        zero_order_width: f64,
    },

    #[error(
        "ring undersampled: circumference {circumference_px:.1} px < {required_px} px required \
         to resolve harmonic {harmonic}; increase resolution by at least {factor:.2}x"
    )]
    Undersampled {
        circumference_px: f64,
        required_px: usize,
        harmonic: usize,
        factor: f64,
    },

    #[error("upsampling is not supported: source {src_w}x{src_h} is coarser than target {dst_w}x{dst_h}")]
    Upsampling {
        src_w: usize,
        src_h: usize,
        dst_w: usize,
        dst_h: usize,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by a valid but unsatisfiable configuration
    /// (clipping grids, undersampled rings, mismatched geometry).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::RingExceedsGrid { .. }
                | Error::GeometryMismatch(_)
                | Error::OddDimensions { .. }
                | Error::IrisOverlapsZeroOrder { .. }
                | Error::Undersampled { .. }
                | Error::Upsampling { .. }
        )
    }
}
