//! Bilinear sampling on pixel-index coordinates (pixel `(i, j)` centered at `(i, j)`).

use std::ops::{Add, Mul};

pub(crate) fn bilinear<T, F>(width: usize, height: usize, fi: f64, fj: f64, at: F, zero: T) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    F: Fn(usize, usize) -> T,
{
    if !(fi >= 0.0 && fj >= 0.0) || fi > (width - 1) as f64 || fj > (height - 1) as f64 {
        return zero;
    }
    let i0 = (fi.floor() as usize).min(width.saturating_sub(2));
    let j0 = (fj.floor() as usize).min(height.saturating_sub(2));
    let (i1, j1) = ((i0 + 1).min(width - 1), (j0 + 1).min(height - 1));
    let (tx, ty) = (fi - i0 as f64, fj - j0 as f64);
    at(i0, j0) * ((1.0 - tx) * (1.0 - ty))
        + at(i1, j0) * (tx * (1.0 - ty))
        + at(i0, j1) * ((1.0 - tx) * ty)
        + at(i1, j1) * (tx * ty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_plane() {
        let f = |i: usize, j: usize| 2.0 * i as f64 - 3.0 * j as f64 + 1.0;
        let v = bilinear(5, 4, 2.25, 1.5, f, 0.0);
        assert!((v - (2.0 * 2.25 - 3.0 * 1.5 + 1.0)).abs() < 1e-12);
        assert_eq!(bilinear(5, 4, 4.0, 3.0, f, 0.0), f(4, 3));
        assert_eq!(bilinear(5, 4, -0.1, 1.0, f, 0.0), 0.0);
        assert_eq!(bilinear(5, 4, 1.0, 3.5, f, 0.0), 0.0);
    }
}
