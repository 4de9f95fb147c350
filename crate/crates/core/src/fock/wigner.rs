use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use super::states::DensityMatrix;
use crate::error::{ensure, Result};
use crate::linalg::ZERO;

/// Rectangular phase-space grid with `resolution` points per axis,
/// endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub resolution: usize,
}

impl Grid {
    pub fn square(extent: f64, resolution: usize) -> Result<Self> {
        let g = Self {
            x_min: -extent,
            x_max: extent,
            p_min: -extent,
            p_max: extent,
            resolution,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.resolution >= 2, || "Wigner grid needs at least 2 points per axis".into())?;
        ensure(self.x_max > self.x_min && self.p_max > self.p_min, || "empty Wigner grid range".into())
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x_min, self.x_max, self.resolution)
    }

    pub fn ps(&self) -> Vec<f64> {
        Self::axis(self.p_min, self.p_max, self.resolution)
    }

    /// Square extent covering `sigmas` standard deviations of the state
    /// around its mean in both quadratures.
    pub fn covering(rho: &DensityMatrix, sigmas: f64, resolution: usize) -> Result<Self> {
        let d = rho.cutoff();
        let a = rho.mean_a();
        let n: f64 = (0..d).map(|k| k as f64 * rho.matrix()[(k, k)].re).sum();
        // <x^2> + <p^2> = <n> + 1/2
        let spread = (n + 0.5).sqrt();
        let centre = (2.0f64).sqrt() * a.norm();
        Self::square(centre + sigmas * spread, resolution)
    }
}

/// Wigner function on `grid`, `w[(i, j)] = W(x_i, p_j)`, for quadratures
/// `x = (a + a^dag)/sqrt 2`, `p = (a - a^dag)/(i sqrt 2)` so that the
/// vacuum gives `exp(-(x^2 + p^2)) / pi`.
///
/// Uses the stable three-term recursion for the Laguerre-weighted
/// phase-space functions of `|m><k|`.
pub fn wigner(rho: &DensityMatrix, grid: &Grid) -> Result<Mat<f64>> {
    grid.validate()?;
    let d = rho.cutoff();
    let m = rho.matrix();
    let xs = grid.xs();
    let ps = grid.ps();
    let mut out = Mat::<f64>::zeros(xs.len(), ps.len());
    let mut wl = vec![ZERO; d];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            let alpha = c64::new(x, p) / (2.0f64).sqrt();
            let two_a = alpha * 2.0;
            wl[0] = c64::new((-2.0 * alpha.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
            let mut w = m[(0, 0)].re * wl[0].re;
            for k in 1..d {
                wl[k] = two_a * wl[k - 1] / (k as f64).sqrt();
                w += 2.0 * (m[(0, k)] * wl[k]).re;
            }
            for q in 1..d {
                let mut temp = wl[q];
                wl[q] = (two_a.conj() * temp - wl[q - 1] * (q as f64).sqrt()) / (q as f64).sqrt();
                w += (m[(q, q)] * wl[q]).re;
                for k in q + 1..d {
                    let next = (two_a * wl[k - 1] - temp * (q as f64).sqrt()) / (k as f64).sqrt();
                    temp = wl[k];
                    wl[k] = next;
                    w += 2.0 * (m[(q, k)] * wl[k]).re;
                }
            }
            out[(i, j)] = w;
        }
    }
    Ok(out)
}

/// Trapezoidal integral of a grid function.
pub fn integrate(grid: &Grid, w: &Mat<f64>) -> f64 {
    let n = grid.resolution;
    let hx = (grid.x_max - grid.x_min) / (n - 1) as f64;
    let hp = (grid.p_max - grid.p_min) / (n - 1) as f64;
    let weight = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += weight(i) * weight(j) * w[(i, j)];
        }
    }
    acc * hx * hp
}
