use std::f64::consts::PI;

use super::{ModeIndex, RadialProfile};
use crate::error::{Error, Result};

/// Radial overlaps `c_p` of a modified mode with the standard modes
/// `LG_p^{Nℓ}` of the same waist.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub coefficients: Vec<f64>,
    /// `Σ c_p²`, the fraction of power captured by `p = 0..=p_max`.
    pub captured_power: f64,
    /// Final Gauss-Legendre order.
    pub order: usize,
}

const CONVERGENCE_TOL: f64 = 1e-13;
const MAX_ORDER: usize = 8192;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn overlaps(base: &RadialProfile, targets: &[RadialProfile], upper: f64, order: usize) -> Vec<f64> {
    let (nodes, weights) = gauss_legendre(order);
    let half = 0.5 * upper;
    let mut acc = vec![0.0; targets.len()];
    for (x, w) in nodes.iter().zip(&weights) {
        let rho = half * (x + 1.0);
        let f = base.eval(rho) * rho * w;
        if f == 0.0 {
            continue;
        }
        for (a, t) in acc.iter_mut().zip(targets) {
            *a += f * t.eval(rho);
        }
    }
    acc.iter().map(|a| 2.0 * PI * half * a).collect()
}

/// Decompose the modified mode `R_0^ℓ(ρ)·exp(iNℓϕ)` onto `R_p^{Nℓ}(ρ)·exp(iNℓϕ)`
/// for `p = 0..=p_max`.
///
/// Quadrature runs over `[0, 8ω·sqrt(max(|ℓ|, N|ℓ|, 1))]`; the order is
/// doubled until successive estimates agree to 1e-13.
pub fn decompose_nfold(mode: ModeIndex, waist: f64, p_max: u32) -> Result<Decomposition> {
    if mode.p != 0 {
        return Err(Error::invalid("mode", "decomposition expects a p=0 modified mode"));
    }
    if mode.n_fold == 0 {
        return Err(Error::invalid("n_fold", "must be >= 1"));
    }
    let base = RadialProfile::new(0, mode.ell, waist)?;
    let n_ell = i32::try_from(mode.harmonic())
        .map_err(|_| Error::invalid("ell", "N·ℓ out of range"))?;
    let targets = (0..=p_max)
        .map(|p| RadialProfile::new(p, n_ell, waist))
        .collect::<Result<Vec<_>>>()?;
    let span = (mode.ell.unsigned_abs() as f64 * mode.n_fold as f64).max(1.0);
    let upper = 8.0 * waist * span.sqrt();

    let mut order = 64 + 4 * (p_max as usize + n_ell.unsigned_abs() as usize);
    let mut previous = overlaps(&base, &targets, upper, order);
    loop {
        let next_order = order * 2;
        let current = overlaps(&base, &targets, upper, next_order);
        let worst = previous
            .iter()
            .zip(&current)
            .enumerate()
            .map(|(p, (a, b))| (p, (a - b).abs(), *a, *b))
            .max_by(|x, y| x.1.total_cmp(&y.1));
        let converged = worst.map_or(true, |w| w.1 < CONVERGENCE_TOL);
        if converged {
            let captured_power = current.iter().map(|c| c * c).sum();
            return Ok(Decomposition {
                coefficients: current,
                captured_power,
                order: next_order,
            });
        }
        if next_order >= MAX_ORDER {
            let (p, _, prev, cur) = worst.unwrap();
            return Err(Error::QuadratureNonConvergence {
                p: p as u32,
                previous: prev,
                current: cur,
                order: next_order,
            });
        }
        order = next_order;
        previous = current;
    }
}
