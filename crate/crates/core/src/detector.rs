//! Camera models: box resampling onto a detector grid and photon-count sampling.
//!
//! Random stream: pixel `k` (row-major) draws from
//! `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(k)`, first a Poisson
//! count, then (if enabled) one Gaussian read-noise sample. The mapping does
//! not depend on thread count.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interferometer::Interferogram;
use crate::io::{save_pgm16, write_pgm16, GrayImage};

/// Fraction of the peak above which a pixel counts as illuminated.
pub const ILLUMINATED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub width: usize,
    pub height: usize,
    /// Mean photons per illuminated pixel.
    pub mean_flux: f64,
    pub read_noise_sigma: f64,
    pub seed: u64,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self {
            width: 768,
            height: 288,
            mean_flux: 1.0,
            read_noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("detector", format!("empty grid {}x{}", self.width, self.height)));
        }
        if !(self.mean_flux >= 0.0 && self.mean_flux.is_finite()) {
            return Err(Error::invalid("mean_flux", format!("must be >= 0, got {}", self.mean_flux)));
        }
        if !(self.read_noise_sigma >= 0.0 && self.read_noise_sigma.is_finite()) {
            return Err(Error::invalid(
                "read_noise_sigma",
                format!("must be >= 0, got {}", self.read_noise_sigma),
            ));
        }
        Ok(())
    }
}

/// Integer counts per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct CountImage {
    width: usize,
    height: usize,
    pitch: f64,
    counts: Vec<u32>,
}

impl CountImage {
    pub fn new(width: usize, height: usize, pitch: f64, counts: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || width * height != counts.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} counts for a {width}x{height} image",
                counts.len()
            )));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::invalid("pitch", format!("must be positive, got {pitch}")));
        }
        Ok(Self {
            width,
            height,
            pitch,
            counts,
        })
    }

    /// Counts read back from a PGM, one count per gray level.
    pub fn from_gray(image: &GrayImage, pitch: f64) -> Result<Self> {
        Self::new(
            image.width,
            image.height,
            pitch,
            image.pixels.iter().map(|&p| p as u32).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> u32 {
        self.counts[j * self.width + i]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Raw counts, saturating at 65535.
    pub fn to_u16(&self) -> Vec<u16> {
        self.counts.iter().map(|&c| c.min(u16::MAX as u32) as u16).collect()
    }

    pub fn write_pgm<W: Write>(&self, w: W) -> Result<()> {
        write_pgm16(w, self.width, self.height, &self.to_u16())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        save_pgm16(path, self.width, self.height, &self.to_u16())
    }
}

/// 1-D box weights: destination cell `d` covers source `[d·f, (d+1)·f)`.
fn box_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let f = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let (lo, hi) = (d as f64 * f, (d + 1) as f64 * f);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap / f))
                })
                .collect()
        })
        .collect()
}

/// Area-average `image` onto the detector grid.
///
/// Both axes must shrink by the same factor so pixels stay square; the
/// output pitch grows by that factor and `Σ I·pitch²` is preserved.
pub fn resample(image: &Interferogram, spec: &DetectorSpec) -> Result<Interferogram> {
    spec.validate()?;
    let (sw, sh) = (image.width(), image.height());
    let (dw, dh) = (spec.width, spec.height);
    if dw > sw || dh > sh {
        return Err(Error::Upsampling {
            src_w: sw,
            src_h: sh,
            dst_w: dw,
            dst_h: dh,
        });
    }
    let (fx, fy) = (sw as f64 / dw as f64, sh as f64 / dh as f64);
    if (fx - fy).abs() > 1e-9 * fx {
        return Err(Error::GeometryMismatch(format!(
            "{sw}x{sh} onto {dw}x{dh} scales x by {fx} and y by {fy}; pixels must stay square"
        )));
    }
    if (dw, dh) == (sw, sh) {
        return Ok(image.clone());
    }
    let wx = box_weights(sw, dw);
    let wy = box_weights(sh, dh);

    // rows first, then columns
    let src = image.intensity();
    let mut rows = vec![0.0; dw * sh];
    rows.par_chunks_mut(dw).enumerate().for_each(|(j, out)| {
        let line = &src[j * sw..(j + 1) * sw];
        for (o, w) in out.iter_mut().zip(&wx) {
            *o = w.iter().map(|&(s, k)| line[s] * k).sum();
        }
    });
    let mut out = vec![0.0; dw * dh];
    out.par_chunks_mut(dw).zip(wy.par_iter()).for_each(|(row, w)| {
        for &(s, k) in w {
            for (o, v) in row.iter_mut().zip(&rows[s * dw..(s + 1) * dw]) {
                *o += v * k;
            }
        }
    });
    Interferogram::new(dw, dh, image.pitch() * fx, out)
}

/// Expected counts per pixel: intensity scaled so the illuminated pixels
/// (above [`ILLUMINATED_FRACTION`] of the peak) average `mean_flux`.
pub fn expected_counts(image: &Interferogram, mean_flux: f64) -> Vec<f64> {
    let threshold = ILLUMINATED_FRACTION * image.max();
    let (sum, n) = image
        .intensity()
        .iter()
        .filter(|&&v| v > threshold)
        .fold((0.0, 0usize), |(s, n), &v| (s + v, n + 1));
    if n == 0 || sum <= 0.0 {
        return vec![0.0; image.intensity().len()];
    }
    let scale = mean_flux * n as f64 / sum;
    image.intensity().iter().map(|v| v * scale).collect()
}

/// Photon-count frame on the detector grid: Poisson counts plus rounded
/// Gaussian read noise, clipped at zero. Images on a finer grid are
/// [`resample`]d first.
pub fn photon_sample(image: &Interferogram, spec: &DetectorSpec) -> Result<CountImage> {
    spec.validate()?;
    let resampled;
    let image = if (image.width(), image.height()) == (spec.width, spec.height) {
        image
    } else {
        resampled = resample(image, spec)?;
        &resampled
    };
    let lambda = expected_counts(image, spec.mean_flux);
    let noise = if spec.read_noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.read_noise_sigma).map_err(|e| Error::invalid("read_noise_sigma", e.to_string()))?)
    } else {
        None
    };
    let counts = lambda
        .par_iter()
        .enumerate()
        .map(|(k, &l)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(k as u64);
            let photons = if l > 0.0 {
                Poisson::new(l).map(|p| p.sample(&mut rng)).unwrap_or(0.0)
            } else {
                0.0
            };
            let read = noise.map_or(0.0, |n| n.sample(&mut rng));
            (photons + read).round().max(0.0) as u32
        })
        .collect();
    CountImage::new(image.width(), image.height(), image.pitch(), counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::read_pgm;
    use proptest::prelude::*;
    use rand::Rng;

    fn image(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> Interferogram {
        let v = (0..h).flat_map(|j| (0..w).map(move |i| (i, j))).map(|(i, j)| f(i, j)).collect();
        Interferogram::new(w, h, 1.0, v).unwrap()
    }

    fn spec(w: usize, h: usize) -> DetectorSpec {
        DetectorSpec {
            width: w,
            height: h,
            ..DetectorSpec::default()
        }
    }

    #[test]
    fn default_is_the_emccd_frame() {
        let d = DetectorSpec::default();
        assert_eq!((d.width, d.height), (768, 288));
    }

    #[test]
    fn identical_geometry_is_identity() {
        let img = image(12, 8, |i, j| (i * 3 + j) as f64);
        assert_eq!(resample(&img, &spec(12, 8)).unwrap(), img);
    }

    #[test]
    fn binning_examples() {
        let flat = image(8, 6, |_, _| 3.5);
        let out = resample(&flat, &spec(4, 3)).unwrap();
        assert!(out.intensity().iter().all(|v| (v - 3.5).abs() < 1e-12));
        assert_eq!(out.pitch(), 2.0);
        let checker = image(8, 6, |i, j| if (i + j) % 2 == 0 { 0.0 } else { 2.0 });
        let out = resample(&checker, &spec(4, 3)).unwrap();
        assert!(out.intensity().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn fractional_binning_preserves_total() {
        let img = image(30, 24, |i, j| ((i * 7 + j * 13) % 11) as f64);
        let out = resample(&img, &spec(20, 16)).unwrap();
        assert!((out.integrated() - img.integrated()).abs() < 1e-9 * img.integrated());
        // a 1.5x cell straddles pixel boundaries: first cell = (a + b/2) / 1.5 along each axis
        let ramp = image(3, 3, |i, _| i as f64);
        let out = resample(&ramp, &spec(2, 2)).unwrap();
        assert!((out.at(0, 0) - 0.5 / 1.5 * 1.0).abs() < 1e-12);
        assert!((out.at(1, 0) - (0.5 * 1.0 + 2.0) / 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_upsampling_and_stretching() {
        let img = image(8, 8, |_, _| 1.0);
        assert!(matches!(resample(&img, &spec(16, 16)), Err(Error::Upsampling { .. })));
        assert!(matches!(resample(&img, &spec(4, 8)), Err(Error::GeometryMismatch(_))));
    }

    #[test]
    fn zero_flux_gives_zero_counts() {
        let img = image(50, 40, |i, j| (i + j) as f64);
        let d = DetectorSpec {
            mean_flux: 0.0,
            ..spec(50, 40)
        };
        assert_eq!(photon_sample(&img, &d).unwrap().total(), 0);
        let blank = image(10, 10, |_, _| 0.0);
        assert_eq!(photon_sample(&blank, &spec(10, 10)).unwrap().total(), 0);
    }

    #[test]
    fn unit_flux_mean() {
        let img = image(1000, 1000, |_, _| 1.0);
        let counts = photon_sample(&img, &spec(1000, 1000)).unwrap();
        let mean = counts.total() as f64 / 1e6;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    /// Ramp from 0.02 to 1 along x, so every pixel is illuminated.
    fn ramp() -> Interferogram {
        image(1000, 1000, |i, _| 0.02 + 0.98 * i as f64 / 999.0)
    }

    #[test]
    fn zero_fraction_follows_poisson_per_bin() {
        let img = ramp();
        let flux = 0.16;
        let lambda = expected_counts(&img, flux);
        let counts = photon_sample(&img, &DetectorSpec { mean_flux: flux, seed: 3, ..spec(1000, 1000) }).unwrap();
        // ten bins of 100 columns each
        for b in 0..10 {
            let (mut zeros, mut expected, mut n) = (0.0, 0.0, 0.0);
            for j in 0..1000 {
                for i in b * 100..(b + 1) * 100 {
                    let k = j * 1000 + i;
                    zeros += (counts.counts()[k] == 0) as u8 as f64;
                    expected += (-lambda[k]).exp();
                    n += 1.0;
                }
            }
            let p = expected / n;
            let sigma = (p * (1.0 - p) / n).sqrt();
            assert!((zeros / n - p).abs() < 5.0 * sigma, "bin {b}: {} vs {p}", zeros / n);
        }
    }

    #[test]
    fn variance_matches_mean_per_bin() {
        let img = ramp();
        let counts = photon_sample(&img, &DetectorSpec { seed: 11, ..spec(1000, 1000) }).unwrap();
        for b in 0..10 {
            let vals: Vec<f64> = (0..1000)
                .flat_map(|j| (b * 100..(b + 1) * 100).map(move |i| j * 1000 + i))
                .map(|k| counts.counts()[k] as f64)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            let ratio = var / mean;
            assert!((0.9..=1.1).contains(&ratio), "bin {b}: {ratio}");
        }
    }

    #[test]
    fn seed_fixes_the_frame() {
        let img = ramp();
        let a = photon_sample(&img, &DetectorSpec { seed: 7, ..spec(1000, 1000) }).unwrap();
        let b = photon_sample(&img, &DetectorSpec { seed: 7, ..spec(1000, 1000) }).unwrap();
        let c = photon_sample(&img, &DetectorSpec { seed: 8, ..spec(1000, 1000) }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stream_mapping_is_per_pixel() {
        let img = image(5, 4, |i, j| 1.0 + (i * j) as f64);
        let d = DetectorSpec {
            mean_flux: 3.0,
            read_noise_sigma: 0.5,
            seed: 42,
            ..spec(5, 4)
        };
        let counts = photon_sample(&img, &d).unwrap();
        let lambda = expected_counts(&img, 3.0);
        for (k, &l) in lambda.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            rng.set_stream(k as u64);
            let photons: f64 = Poisson::new(l).unwrap().sample(&mut rng);
            let read: f64 = Normal::new(0.0, 0.5).unwrap().sample(&mut rng);
            assert_eq!(counts.counts()[k], (photons + read).round().max(0.0) as u32);
        }
        // an unrelated draw shows the streams are distinct
        let mut r0 = ChaCha8Rng::seed_from_u64(42);
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        r1.set_stream(1);
        assert_ne!(r0.gen::<u64>(), r1.gen::<u64>());
    }

    #[test]
    fn read_noise_is_clipped_at_zero() {
        let img = image(200, 200, |_, _| 1.0);
        let d = DetectorSpec {
            mean_flux: 0.0,
            read_noise_sigma: 2.0,
            ..spec(200, 200)
        };
        let counts = photon_sample(&img, &d).unwrap();
        let zeros = counts.counts().iter().filter(|&&c| c == 0).count() as f64 / 40_000.0;
        // P(round(N(0,2)) <= 0) = Φ(0.25) ≈ 0.599
        assert!((zeros - 0.599).abs() < 0.02, "{zeros}");
        assert!(counts.total() > 0);
    }

    #[test]
    fn scale_free_in_input_intensity() {
        let img = ramp();
        let scaled = Interferogram::new(1000, 1000, 1.0, img.intensity().iter().map(|v| v * 4.0).collect()).unwrap();
        let d = DetectorSpec { seed: 5, ..spec(1000, 1000) };
        assert_eq!(photon_sample(&img, &d).unwrap(), photon_sample(&scaled, &d).unwrap());
        let odd = Interferogram::new(1000, 1000, 1.0, img.intensity().iter().map(|v| v * 3.7).collect()).unwrap();
        let a = photon_sample(&img, &d).unwrap();
        let b = photon_sample(&odd, &d).unwrap();
        let same = a.counts().iter().zip(b.counts()).filter(|(x, y)| x == y).count();
        assert!(same as f64 > 0.999 * 1e6);
    }

    #[test]
    fn samples_on_the_detector_grid() {
        let img = image(64, 48, |i, _| i as f64);
        let counts = photon_sample(&img, &spec(32, 24)).unwrap();
        assert_eq!((counts.width(), counts.height(), counts.pitch()), (32, 24, 2.0));
    }

    #[test]
    fn counts_round_trip_through_pgm() {
        let c = CountImage::new(3, 2, 1e-5, vec![0, 1, 2, 70000, 5, 65535]).unwrap();
        let mut buf = Vec::new();
        c.write_pgm(&mut buf).unwrap();
        let back = CountImage::from_gray(&read_pgm(&buf).unwrap(), 1e-5).unwrap();
        assert_eq!(back.counts(), &[0, 1, 2, 65535, 5, 65535]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn binning_preserves_total(w in 1usize..8, h in 1usize..8, q in 1usize..4, extra in 0usize..4, seed in 0u64..1000) {
            // source w·p × h·p onto w·q × h·q, so the factor p/q may be fractional
            let p = q + extra;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = Interferogram::new(w * p, h * p, 1.0, (0..w * p * h * p).map(|_| rng.gen::<f64>()).collect())
                .unwrap();
            let out = resample(&img, &spec(w * q, h * q)).unwrap();
            prop_assert!((out.integrated() - img.integrated()).abs() < 1e-9 * img.integrated().max(1e-300));
        }
    }
}
