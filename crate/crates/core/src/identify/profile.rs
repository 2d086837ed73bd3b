use rayon::prelude::*;

use crate::detector::CountImage;
use crate::error::{Error, Result};
use crate::interferometer::Interferogram;
use crate::sampling::bilinear;

/// Read-only view of a real-valued image in pixel-index coordinates.
pub trait ImageData: Sync {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    /// Pixel pitch in meters.
    fn pitch(&self) -> f64;
    fn value(&self, i: usize, j: usize) -> f64;

    /// Bilinear sample; zero outside the image.
    fn sample(&self, fi: f64, fj: f64) -> f64 {
        bilinear(self.width(), self.height(), fi, fj, |i, j| self.value(i, j), 0.0)
    }
}

impl ImageData for Interferogram {
    fn width(&self) -> usize {
        Interferogram::width(self)
    }
    fn height(&self) -> usize {
        Interferogram::height(self)
    }
    fn pitch(&self) -> f64 {
        Interferogram::pitch(self)
    }
    fn value(&self, i: usize, j: usize) -> f64 {
        self.at(i, j)
    }
}

impl ImageData for CountImage {
    fn width(&self) -> usize {
        CountImage::width(self)
    }
    fn height(&self) -> usize {
        CountImage::height(self)
    }
    fn pitch(&self) -> f64 {
        CountImage::pitch(self)
    }
    fn value(&self, i: usize, j: usize) -> f64 {
        self.at(i, j) as f64
    }
}

/// Annuli holding fewer pixels are dropped from the profile.
pub const MIN_BIN_PIXELS: usize = 8;

/// One 1-pixel-wide annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBin {
    /// Mean distance of the member pixels from the center, in pixels.
    pub radius: f64,
    pub mean: f64,
    pub sum: f64,
    pub pixels: usize,
}

/// Annuli at `round(r)` around `center` (pixel-index coordinates).
pub fn radial_bins<I: ImageData + ?Sized>(image: &I, center: [f64; 2]) -> Result<Vec<RadialBin>> {
    let (w, h) = (image.width(), image.height());
    let [cx, cy] = center;
    if !(cx >= 0.0 && cy >= 0.0 && cx <= (w - 1) as f64 && cy <= (h - 1) as f64) {
        return Err(Error::invalid(
            "center",
            format!("({cx}, {cy}) lies outside the {w}x{h} image"),
        ));
    }
    let corners = [(0.0, 0.0), (w as f64, 0.0), (0.0, h as f64), (w as f64, h as f64)];
    let r_max = corners
        .iter()
        .map(|(x, y)| (x - cx).hypot(y - cy))
        .fold(0.0, f64::max);
    let n_bins = r_max.round() as usize + 2;

    let zero = || (vec![0.0; n_bins], vec![0.0; n_bins], vec![0usize; n_bins]);
    let (rsum, vsum, count) = (0..h)
        .into_par_iter()
        .fold(zero, |(mut rs, mut vs, mut c), j| {
            let dy = j as f64 - cy;
            for i in 0..w {
                let r = (i as f64 - cx).hypot(dy);
                let b = r.round() as usize;
                rs[b] += r;
                vs[b] += image.value(i, j);
                c[b] += 1;
            }
            (rs, vs, c)
        })
        .reduce(zero, |mut a, b| {
            for k in 0..n_bins {
                a.0[k] += b.0[k];
                a.1[k] += b.1[k];
                a.2[k] += b.2[k];
            }
            a
        });
    Ok((0..n_bins)
        .filter(|&k| count[k] >= MIN_BIN_PIXELS)
        .map(|k| RadialBin {
            radius: rsum[k] / count[k] as f64,
            mean: vsum[k] / count[k] as f64,
            sum: vsum[k],
            pixels: count[k],
        })
        .collect())
}

/// Azimuthal means as `(radius_px, mean_intensity)`.
pub fn radial_profile_of<I: ImageData + ?Sized>(image: &I, center: [f64; 2]) -> Result<Vec<(f64, f64)>> {
    Ok(radial_bins(image, center)?
        .into_iter()
        .map(|b| (b.radius, b.mean))
        .collect())
}

fn sharpness<I: ImageData + ?Sized>(image: &I, center: [f64; 2]) -> f64 {
    radial_bins(image, center)
        .map(|bins| bins.iter().map(|b| b.mean * b.mean).sum())
        .unwrap_or(f64::NEG_INFINITY)
}

/// Intensity centroid, refined over ±3 px (whole, then half pixels) to
/// maximize the sum of squared radial-profile values.
pub fn find_center<I: ImageData + ?Sized>(image: &I) -> [f64; 2] {
    let (w, h) = (image.width(), image.height());
    let (sx, sy, s) = (0..h)
        .into_par_iter()
        .map(|j| {
            (0..w).fold((0.0, 0.0, 0.0), |(sx, sy, s), i| {
                let v = image.value(i, j);
                (sx + v * i as f64, sy + v * j as f64, s + v)
            })
        })
        .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let geometric = [(w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0];
    let start = if s > 0.0 { [sx / s, sy / s] } else { geometric };

    let best_of = |base: [f64; 2], step: f64, reach: i32| {
        let candidates: Vec<[f64; 2]> = (-reach..=reach)
            .flat_map(|dy| (-reach..=reach).map(move |dx| [base[0] + dx as f64 * step, base[1] + dy as f64 * step]))
            .collect();
        candidates
            .into_par_iter()
            .map(|c| (sharpness(image, c), c))
            // ties go to the candidate closest to `base`
            .reduce(
                || (f64::NEG_INFINITY, base),
                |a, b| {
                    let da = (a.1[0] - base[0]).hypot(a.1[1] - base[1]);
                    let db = (b.1[0] - base[0]).hypot(b.1[1] - base[1]);
                    if b.0 > a.0 || (b.0 == a.0 && db < da) {
                        b
                    } else {
                        a
                    }
                },
            )
            .1
    };
    let coarse = best_of(start, 1.0, 3);
    best_of(coarse, 0.5, 1)
}

/// A detected radial maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPeak {
    /// Sub-bin radius in pixels.
    pub radius: f64,
    /// Smoothed profile height at the peak.
    pub brightness: f64,
    pub prominence: f64,
    /// Index into the profile.
    pub bin: usize,
}

/// Peaks of a radial profile.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RingDetection {
    /// Peaks away from the axis, ordered by radius.
    pub rings: Vec<RadialPeak>,
    /// A maximum in the innermost bin: on-axis light, not a ring.
    pub axial_blob: Option<RadialPeak>,
}

impl RingDetection {
    pub fn is_empty(&self) -> bool {
        self.rings.is_empty()
    }
}

/// Smoothing window of [`detect_rings`], in bins.
pub const SMOOTHING_WINDOW: usize = 3;
/// Minimum topographic prominence relative to the smoothed global maximum.
pub const MIN_PROMINENCE: f64 = 0.05;

fn smooth(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let half = SMOOTHING_WINDOW / 2;
    (0..n)
        .map(|k| {
            let (lo, hi) = (k.saturating_sub(half), (k + half).min(n - 1));
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Height above the higher of the two bases; an edge peak only has one base.
fn prominence(s: &[f64], k: usize) -> f64 {
    let peak = s[k];
    let base = |side: &mut dyn Iterator<Item = &f64>| -> Option<f64> {
        let mut low = None;
        for &v in side {
            if v > peak {
                break;
            }
            low = Some(low.map_or(v, |l: f64| l.min(v)));
        }
        low
    };
    let left = base(&mut s[..k].iter().rev());
    let right = base(&mut s[k + 1..].iter());
    match (left, right) {
        (Some(l), Some(r)) => peak - l.max(r),
        (Some(b), None) | (None, Some(b)) => peak - b,
        (None, None) => peak,
    }
}

/// Local maxima of the 3-bin moving average whose prominence reaches 5% of
/// its global maximum, refined to sub-bin radius by a parabola.
pub fn detect_rings(profile: &[(f64, f64)]) -> RingDetection {
    if profile.is_empty() {
        return RingDetection::default();
    }
    let values: Vec<f64> = profile.iter().map(|p| p.1).collect();
    let s = smooth(&values);
    let top = s.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return RingDetection::default();
    }
    let n = s.len();
    let mut out = RingDetection::default();
    for k in 0..n {
        let rises = k == 0 || s[k] > s[k - 1];
        let holds = k + 1 == n || s[k] >= s[k + 1];
        if !(rises && holds) {
            continue;
        }
        let prom = prominence(&s, k);
        if prom < MIN_PROMINENCE * top {
            continue;
        }
        let radius = if k > 0 && k + 1 < n {
            let denom = s[k - 1] - 2.0 * s[k] + s[k + 1];
            let offset = if denom < 0.0 {
                (0.5 * (s[k - 1] - s[k + 1]) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let spacing = 0.5 * (profile[k + 1].0 - profile[k - 1].0);
            profile[k].0 + offset * spacing
        } else {
            profile[k].0
        };
        let peak = RadialPeak {
            radius,
            brightness: s[k],
            prominence: prom,
            bin: k,
        };
        if k == 0 {
            out.axial_blob = Some(peak);
        } else {
            out.rings.push(peak);
        }
    }
    out
}

/// Sum of pixel values in the bins assigned to each ring: bins are split at
/// the profile minimum between neighboring rings.
pub fn annulus_power(bins: &[RadialBin], rings: &[RadialPeak]) -> Vec<f64> {
    let means: Vec<f64> = bins.iter().map(|b| b.mean).collect();
    let s = smooth(&means);
    let mut edges = vec![0usize];
    for pair in rings.windows(2) {
        let (a, b) = (pair[0].bin, pair[1].bin);
        let valley = (a..=b).min_by(|&x, &y| s[x].total_cmp(&s[y])).unwrap_or(a);
        edges.push(valley);
    }
    edges.push(bins.len());
    rings
        .iter()
        .enumerate()
        .map(|(r, _)| bins[edges[r]..edges[r + 1]].iter().map(|b| b.sum).sum())
        .collect()
}
