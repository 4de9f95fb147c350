use faer::{c64, Mat, Side};
use serde::{Deserialize, Serialize};

use super::{symplectic_form, squeezing_db, Symplectic, VACUUM_VARIANCE};
use crate::error::{ensure, Error, Result};

/// Single-mode squeezing applied identically to every input mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingSpec {
    /// Squeezing strength `xi >= 0`; the minimum variance is `e^-xi / 2`.
    pub strength: f64,
    /// Squeezing phase in radians.
    pub phase: f64,
}

impl SqueezingSpec {
    pub fn new(strength: f64, phase: f64) -> Result<Self> {
        ensure(strength >= 0.0 && strength.is_finite(), || {
            format!("squeezing strength must be finite and >= 0, got {strength}")
        })?;
        Ok(Self { strength, phase })
    }

    pub fn decibels(&self) -> f64 {
        squeezing_db(self.strength)
    }

    /// Covariance block of one squeezed mode, in vacuum = 1/2 units.
    pub fn block(&self) -> [[f64; 2]; 2] {
        let (ch, sh) = (self.strength.cosh(), self.strength.sinh());
        let (c, s) = (self.phase.cos(), self.phase.sin());
        [
            [VACUUM_VARIANCE * (ch + c * sh), VACUUM_VARIANCE * s * sh],
            [VACUUM_VARIANCE * s * sh, VACUUM_VARIANCE * (ch - c * sh)],
        ]
    }
}

/// A Gaussian state described by its first and second moments.
#[derive(Debug, Clone)]
pub struct GaussianState {
    cov: Mat<f64>,
    mean: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GaussianStateRepr {
    modes: usize,
    cov: Vec<Vec<f64>>,
    mean: Vec<f64>,
}

impl Serialize for GaussianState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GaussianStateRepr {
            modes: self.modes(),
            cov: (0..self.cov.nrows())
                .map(|i| (0..self.cov.ncols()).map(|j| self.cov[(i, j)]).collect())
                .collect(),
            mean: self.mean.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GaussianState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = GaussianStateRepr::deserialize(deserializer)?;
        let dim = 2 * repr.modes;
        if repr.cov.len() != dim || repr.cov.iter().any(|r| r.len() != dim) || repr.mean.len() != dim {
            return Err(serde::de::Error::custom("covariance shape does not match mode count"));
        }
        Ok(GaussianState {
            cov: Mat::from_fn(dim, dim, |i, j| repr.cov[i][j]),
            mean: repr.mean,
        })
    }
}

impl GaussianState {
    /// Builds a zero-mean state from a covariance matrix, checking symmetry and
    /// the uncertainty relation.
    pub fn from_covariance(cov: Mat<f64>) -> Result<Self> {
        let dim = cov.nrows();
        ensure(dim > 0 && dim % 2 == 0 && cov.ncols() == dim, || {
            format!("covariance must be a non-empty even square matrix, got {}x{}", dim, cov.ncols())
        })?;
        let state = Self {
            cov,
            mean: vec![0.0; dim],
        };
        let asym = state.symmetry_error();
        ensure(asym <= 1e-12, || format!("covariance not symmetric (max deviation {asym:.3e})"))?;
        let min_eig = state.uncertainty_min_eigenvalue();
        ensure(min_eig >= -1e-10, || {
            format!("covariance violates the uncertainty relation (eigenvalue {min_eig:.3e})")
        })?;
        Ok(state)
    }

    pub(crate) fn from_covariance_unchecked(cov: Mat<f64>) -> Self {
        let dim = cov.nrows();
        Self {
            cov,
            mean: vec![0.0; dim],
        }
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        ensure(modes >= 1, || "vacuum needs at least one mode".into())?;
        let dim = 2 * modes;
        Ok(Self::from_covariance_unchecked(Mat::from_fn(dim, dim, |i, j| {
            if i == j {
                VACUUM_VARIANCE
            } else {
                0.0
            }
        })))
    }

    /// Product of `modes` identically squeezed single-mode states.
    pub fn squeezed_input(modes: usize, spec: &SqueezingSpec) -> Result<Self> {
        ensure(modes >= 1, || "input state needs at least one mode".into())?;
        let block = spec.block();
        let dim = 2 * modes;
        Ok(Self::from_covariance_unchecked(Mat::from_fn(dim, dim, |i, j| {
            if i / 2 == j / 2 {
                block[i % 2][j % 2]
            } else {
                0.0
            }
        })))
    }

    pub fn modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn covariance(&self) -> &Mat<f64> {
        &self.cov
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `self ⊗ other`, with `self`'s modes first.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.cov.nrows(), other.cov.nrows());
        let cov = Mat::from_fn(a + b, a + b, |i, j| match (i < a, j < a) {
            (true, true) => self.cov[(i, j)],
            (false, false) => other.cov[(i - a, j - a)],
            _ => 0.0,
        });
        let mut mean = self.mean.clone();
        mean.extend_from_slice(&other.mean);
        GaussianState { cov, mean }
    }

    /// `cov <- S cov S^T`.
    pub fn apply(&self, s: &Symplectic) -> Result<GaussianState> {
        let m = s.matrix();
        if m.nrows() != self.cov.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.cov.nrows(),
                actual: m.nrows(),
            });
        }
        let cov = m * &self.cov * m.transpose();
        // symmetrize away rounding so repeated application keeps the invariant
        let dim = cov.nrows();
        let cov = Mat::from_fn(dim, dim, |i, j| 0.5 * (cov[(i, j)] + cov[(j, i)]));
        let mean = (0..dim)
            .map(|i| (0..dim).map(|k| m[(i, k)] * self.mean[k]).sum())
            .collect();
        Ok(GaussianState { cov, mean })
    }

    /// Reduced state on the listed modes, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<GaussianState> {
        ensure(!keep.is_empty(), || "partial trace needs a non-empty set of kept modes".into())?;
        let n = self.modes();
        if let Some(&bad) = keep.iter().find(|&&k| k >= n) {
            return Err(Error::InvalidParameter(format!("mode index {bad} out of range for {n} modes")));
        }
        let mut seen = vec![false; n];
        for &k in keep {
            ensure(!seen[k], || format!("mode {k} listed twice"))?;
            seen[k] = true;
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let cov = Mat::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]);
        let mean = idx.iter().map(|&i| self.mean[i]).collect();
        Ok(GaussianState { cov, mean })
    }

    /// `1 / sqrt(det(2 cov))`.
    pub fn purity(&self) -> f64 {
        let two_cov = Mat::from_fn(self.cov.nrows(), self.cov.ncols(), |i, j| 2.0 * self.cov[(i, j)]);
        match two_cov.llt(Side::Lower) {
            Ok(llt) => {
                let l = llt.L();
                let log_det: f64 = (0..l.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum();
                (-0.5 * log_det).exp()
            }
            Err(_) => f64::NAN,
        }
    }

    /// Mean photon number `tr(cov)/2 - N/2` (zero-mean states).
    pub fn mean_photon_number(&self) -> f64 {
        let tr: f64 = (0..self.cov.nrows()).map(|i| self.cov[(i, i)]).sum();
        tr / 2.0 - self.modes() as f64 / 2.0
    }

    pub fn symmetry_error(&self) -> f64 {
        let n = self.cov.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.cov[(i, j)] - self.cov[(j, i)]).abs());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + (i/2) Omega`.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let n = self.cov.nrows();
        let om = symplectic_form(n / 2);
        let h = Mat::<c64>::from_fn(n, n, |i, j| c64::new(self.cov[(i, j)], 0.5 * om[(i, j)]));
        match h.self_adjoint_eigenvalues(Side::Lower) {
            Ok(ev) => ev.into_iter().fold(f64::INFINITY, f64::min),
            Err(_) => f64::NAN,
        }
    }

    /// Checks every state invariant: symmetry, uncertainty and purity bounds.
    pub fn validate(&self) -> Result<()> {
        let asym = self.symmetry_error();
        if asym > 1e-12 {
            return Err(Error::Numerical(format!("covariance asymmetry {asym:.3e}")));
        }
        let min_eig = self.uncertainty_min_eigenvalue();
        if !(min_eig >= -1e-10) {
            return Err(Error::Numerical(format!("uncertainty relation violated ({min_eig:.3e})")));
        }
        let p = self.purity();
        if !(p > 0.0 && p <= 1.0 + 1e-10) {
            return Err(Error::Numerical(format!("purity {p} out of (0, 1]")));
        }
        Ok(())
    }

    /// Smallest quadrature variance over all single-mode rotations of mode `k`.
    pub fn min_quadrature_variance(&self, k: usize) -> f64 {
        let (a, b, c) = (self.cov[(2 * k, 2 * k)], self.cov[(2 * k, 2 * k + 1)], self.cov[(2 * k + 1, 2 * k + 1)]);
        0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn vacuum_shapes() {
        let v1 = GaussianState::vacuum(1).unwrap();
        assert_eq!(v1.covariance()[(0, 0)], 0.5);
        assert_eq!(v1.covariance()[(0, 1)], 0.0);
        assert_eq!(v1.covariance()[(1, 1)], 0.5);
        let v2 = GaussianState::vacuum(2).unwrap();
        assert_eq!(v2.covariance().nrows(), 4);
        for i in 0..4 {
            assert_eq!(v2.covariance()[(i, i)], 0.5);
        }
        assert!((GaussianState::vacuum(12).unwrap().purity() - 1.0).abs() < 1e-12);
        assert!(GaussianState::vacuum(0).is_err());
    }

    #[test]
    fn zero_squeezing_is_vacuum() {
        for phase in [0.0, 0.3, 2.0, -1.0] {
            let s = GaussianState::squeezed_input(3, &SqueezingSpec::new(0.0, phase).unwrap()).unwrap();
            let v = GaussianState::vacuum(3).unwrap();
            assert!(max_abs_diff(s.covariance().as_ref(), v.covariance().as_ref()) < 1e-15);
        }
    }

    #[test]
    fn squeezed_input_phase_zero() {
        let s = GaussianState::squeezed_input(1, &SqueezingSpec::new(0.75, 0.0).unwrap()).unwrap();
        let c = s.covariance();
        assert!((c[(0, 0)] - 0.5 * 0.75f64.exp()).abs() < 1e-14);
        assert!((c[(1, 1)] - 0.5 * (-0.75f64).exp()).abs() < 1e-14);
        assert!((c[(1, 1)] - 0.236183).abs() < 1e-6);
        assert!((s.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezed_input_phase_half_pi() {
        let s = GaussianState::squeezed_input(1, &SqueezingSpec::new(0.75, std::f64::consts::FRAC_PI_2).unwrap())
            .unwrap();
        let c = s.covariance();
        assert!((c[(0, 1)] - 0.5 * 0.75f64.sinh()).abs() < 1e-14);
        assert!((c[(0, 1)] - 0.4109).abs() < 1e-3);
        assert!((c[(0, 0)] - 0.5 * 0.75f64.cosh()).abs() < 1e-14);
        assert!((c[(1, 1)] - 0.5 * 0.75f64.cosh()).abs() < 1e-14);
        // eigenvalues e^{±xi}/2
        assert!((s.min_quadrature_variance(0) - 0.5 * (-0.75f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn invalid_strength_rejected() {
        assert!(SqueezingSpec::new(-0.1, 0.0).is_err());
        assert!(SqueezingSpec::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn partial_trace_product_and_errors() {
        let a = GaussianState::squeezed_input(1, &SqueezingSpec::new(0.4, 0.2).unwrap()).unwrap();
        let b = GaussianState::vacuum(2).unwrap();
        let ab = a.tensor(&b);
        let back = ab.partial_trace(&[0]).unwrap();
        assert_eq!(max_abs_diff(back.covariance().as_ref(), a.covariance().as_ref()), 0.0);
        let all = ab.partial_trace(&[0, 1, 2]).unwrap();
        assert_eq!(max_abs_diff(all.covariance().as_ref(), ab.covariance().as_ref()), 0.0);
        assert!(ab.partial_trace(&[]).is_err());
        assert!(ab.partial_trace(&[3]).is_err());
        assert!(ab.partial_trace(&[1, 1]).is_err());
    }

    #[test]
    fn unphysical_covariance_rejected() {
        let cov = Mat::from_fn(2, 2, |i, j| if i == j { 0.1 } else { 0.0 });
        assert!(GaussianState::from_covariance(cov).is_err());
        let asym = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else if i < j { 0.1 } else { 0.0 });
        assert!(GaussianState::from_covariance(asym).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = GaussianState::squeezed_input(2, &SqueezingSpec::new(0.3, 1.0).unwrap()).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains("\"cov\":[["));
        let back: GaussianState = serde_json::from_str(&js).unwrap();
        assert_eq!(max_abs_diff(back.covariance().as_ref(), s.covariance().as_ref()), 0.0);
    }
}
