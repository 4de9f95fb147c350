use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::symplectic_form;
use crate::error::{ensure, Error, Result};

/// Largest contraction factor `rho(S)^2 / 2` accepted for a loop crystal.
/// The loop update `cov -> S (cov + cov_in) S^T / 2` only has a fixed point
/// when this is below one.
pub const MAX_LOOP_GAIN: f64 = 0.9;
const MAX_CRYSTAL_DRAWS: usize = 10_000;

/// Real `2N x 2N` matrix acting on `(x1, p1, ..., xN, pN)`.
#[derive(Debug, Clone)]
pub struct Symplectic {
    matrix: Mat<f64>,
}

impl Symplectic {
    /// Wraps a matrix after checking `S Omega S^T = Omega` to 1e-10.
    pub fn new(matrix: Mat<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        ensure(dim > 0 && dim % 2 == 0 && matrix.ncols() == dim, || {
            format!("symplectic matrix must be even and square, got {}x{}", dim, matrix.ncols())
        })?;
        let s = Self { matrix };
        let err = s.symplectic_error();
        if err > 1e-10 {
            return Err(Error::Numerical(format!("matrix is not symplectic (deviation {err:.3e})")));
        }
        Ok(s)
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            matrix: Mat::identity(2 * modes, 2 * modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    /// 50:50 coupler on `2N` modes: loop mode `i` (index `i`) mixes with
    /// input mode `i` (index `N + i`). Output `i` carries `(loop + in)/sqrt 2`
    /// and becomes the new loop; output `N + i` carries `(loop - in)/sqrt 2`
    /// and is sent to the detectors.
    pub fn beam_splitter_5050(modes: usize) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let dim = 4 * modes;
        let mut m = Mat::<f64>::zeros(dim, dim);
        for i in 0..modes {
            for q in 0..2 {
                let l = 2 * i + q;
                let r = 2 * (modes + i) + q;
                m[(l, l)] = h;
                m[(l, r)] = h;
                m[(r, l)] = h;
                m[(r, r)] = -h;
            }
        }
        Self { matrix: m }
    }

    /// Real representation of the passive map `a -> U a`.
    pub fn from_unitary(u: &Mat<c64>) -> Result<Self> {
        let n = u.nrows();
        ensure(n > 0 && u.ncols() == n, || "unitary must be square and non-empty".into())?;
        let m = Mat::from_fn(2 * n, 2 * n, |r, c| {
            let z = u[(r / 2, c / 2)];
            match (r % 2, c % 2) {
                (0, 0) | (1, 1) => z.re,
                (0, 1) => -z.im,
                _ => z.im,
            }
        });
        Self::new(m)
    }

    /// Haar-distributed `N x N` unitary drawn from `rng`.
    pub fn haar_unitary<R: rand::Rng + ?Sized>(modes: usize, rng: &mut R) -> Mat<c64> {
        let z = Mat::<c64>::from_fn(modes, modes, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let qr = z.qr();
        let q = qr.compute_Q();
        let r = qr.R();
        Mat::from_fn(modes, modes, |i, j| {
            let d = r[(j, j)];
            let ph = if d.norm() > 0.0 { d / d.norm() } else { c64::new(1.0, 0.0) };
            q[(i, j)] * ph
        })
    }

    /// Equal single-mode squeezers `diag(e^{xi/2}, e^{-xi/2})` on every mode.
    pub fn equal_squeezers(modes: usize, xi: f64) -> Self {
        let (up, down) = ((0.5 * xi).exp(), (-0.5 * xi).exp());
        Self {
            matrix: Mat::from_fn(2 * modes, 2 * modes, |i, j| {
                if i != j {
                    0.0
                } else if i % 2 == 0 {
                    up
                } else {
                    down
                }
            }),
        }
    }

    /// Loop crystal `O1 D O2` with Haar passive interferometers drawn from
    /// `seed` and equal squeezing `xi_c` on every mode. Draws whose loop gain
    /// `rho(S)^2 / 2` reaches [`MAX_LOOP_GAIN`] are rejected and redrawn from
    /// the same stream, so the reservoir always has a fading memory.
    pub fn crystal(modes: usize, xi_c: f64, seed: u64) -> Result<Self> {
        ensure(modes >= 1, || "crystal needs at least one mode".into())?;
        ensure(xi_c >= 0.0 && xi_c.is_finite(), || {
            format!("cavity squeezing must be finite and >= 0, got {xi_c}")
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Self::equal_squeezers(modes, xi_c);
        for draw in 0..MAX_CRYSTAL_DRAWS {
            let o1 = Self::from_unitary(&Self::haar_unitary(modes, &mut rng))?;
            let o2 = Self::from_unitary(&Self::haar_unitary(modes, &mut rng))?;
            let s = o1.compose(&d).compose(&o2);
            let gain = s.spectral_radius()?.powi(2) / 2.0;
            if gain < MAX_LOOP_GAIN {
                if draw > 0 {
                    log::debug!("crystal seed {seed}: accepted draw {draw} (loop gain {gain:.3})");
                }
                return Ok(s);
            }
        }
        Err(Error::InvalidParameter(format!(
            "no contractive crystal found for xi_c = {xi_c} after {MAX_CRYSTAL_DRAWS} draws"
        )))
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &Symplectic) -> Symplectic {
        Symplectic {
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// `S^-1 = -Omega S^T Omega`.
    pub fn inverse(&self) -> Symplectic {
        let om = symplectic_form(self.modes());
        let inv = &om * self.matrix.transpose() * &om;
        Symplectic {
            matrix: Mat::from_fn(inv.nrows(), inv.ncols(), |i, j| -inv[(i, j)]),
        }
    }

    /// Max-abs deviation of `S Omega S^T` from `Omega`.
    pub fn symplectic_error(&self) -> f64 {
        let om = symplectic_form(self.modes());
        let lhs = &self.matrix * &om * self.matrix.transpose();
        crate::linalg::max_abs_diff(lhs.as_ref(), om.as_ref())
    }

    /// Max-abs deviation of `S S^T` from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        let dim = self.matrix.nrows();
        let sst = &self.matrix * self.matrix.transpose();
        crate::linalg::max_abs_diff(sst.as_ref(), Mat::<f64>::identity(dim, dim).as_ref())
    }

    /// Singular values sorted descending; for a symplectic matrix they come in
    /// pairs `(e^{r}, e^{-r})` that are the Bloch-Messiah squeezing factors.
    pub fn squeezing_spectrum(&self) -> Result<Vec<f64>> {
        let mut sv = self
            .matrix
            .singular_values()
            .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
        sv.sort_by(|a, b| b.total_cmp(a));
        Ok(sv)
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> Result<f64> {
        let dim = self.matrix.nrows();
        let mc = Mat::<c64>::from_fn(dim, dim, |i, j| c64::new(self.matrix[(i, j)], 0.0));
        let ev = mc
            .eigenvalues()
            .map_err(|e| Error::Numerical(format!("eigenvalue solver failed: {e:?}")))?;
        Ok(ev.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{squeezing_db, GaussianState, SqueezingSpec};
    use crate::linalg::max_abs_diff;

    #[test]
    fn beam_splitter_is_orthogonal_symplectic() {
        for n in 1..4 {
            let bs = Symplectic::beam_splitter_5050(n);
            assert!(bs.symplectic_error() < 1e-14);
            assert!(bs.orthogonality_error() < 1e-14);
            let v = GaussianState::vacuum(2 * n).unwrap();
            let out = v.apply(&bs).unwrap();
            assert!(max_abs_diff(out.covariance().as_ref(), v.covariance().as_ref()) < 1e-15);
        }
    }

    #[test]
    fn beam_splitter_mixes_squeezed_loop_with_vacuum() {
        let loop_ = GaussianState::squeezed_input(1, &SqueezingSpec::new(0.75, 0.0).unwrap()).unwrap();
        let both = loop_.tensor(&GaussianState::vacuum(1).unwrap());
        let out = both.apply(&Symplectic::beam_splitter_5050(1)).unwrap();
        let c = out.covariance();
        let e = 0.75f64.exp();
        let var = (e / 2.0 + 0.5) / 2.0;
        let cross = (e / 2.0 - 0.5) / 2.0;
        assert!((c[(0, 0)] - var).abs() < 1e-14);
        assert!((c[(2, 2)] - var).abs() < 1e-14);
        assert!((c[(0, 2)] - cross).abs() < 1e-14);
        let kept = out.partial_trace(&[1]).unwrap();
        let sq = 0.5 * e;
        assert!(kept.covariance()[(0, 0)] > 0.5 && kept.covariance()[(0, 0)] < sq);
        assert!((kept.covariance()[(0, 0)] - 0.5 * (sq + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn crystal_passive_when_unsqueezed() {
        let s = Symplectic::crystal(4, 0.0, 11).unwrap();
        assert!(s.symplectic_error() < 1e-10);
        assert!(s.orthogonality_error() < 1e-10);
        let v = GaussianState::vacuum(4).unwrap();
        let out = v.apply(&s).unwrap();
        assert!(max_abs_diff(out.covariance().as_ref(), v.covariance().as_ref()) < 1e-12);
    }

    #[test]
    fn crystal_bloch_messiah_round_trip() {
        let xi = 1.5;
        let s = Symplectic::crystal(5, xi, 3).unwrap();
        assert!(s.symplectic_error() < 1e-10);
        let sv = s.squeezing_spectrum().unwrap();
        for (k, v) in sv.iter().enumerate() {
            let want = if k < 5 { (xi / 2.0).exp() } else { (-xi / 2.0).exp() };
            assert!((v - want).abs() < 1e-8, "{k}: {v} vs {want}");
        }
        assert!((squeezing_db(xi) + 6.51).abs() < 0.01);
        assert!(s.spectral_radius().unwrap().powi(2) / 2.0 < MAX_LOOP_GAIN);
    }

    #[test]
    fn crystal_is_seed_deterministic() {
        let a = Symplectic::crystal(3, 0.7, 42).unwrap();
        let b = Symplectic::crystal(3, 0.7, 42).unwrap();
        let c = Symplectic::crystal(3, 0.7, 43).unwrap();
        assert_eq!(max_abs_diff(a.matrix().as_ref(), b.matrix().as_ref()), 0.0);
        assert!(max_abs_diff(a.matrix().as_ref(), c.matrix().as_ref()) > 1e-3);
    }

    #[test]
    fn inverse_undoes_application() {
        let s = Symplectic::crystal(3, 1.1, 5).unwrap();
        let st = GaussianState::squeezed_input(3, &SqueezingSpec::new(0.4, 0.9).unwrap()).unwrap();
        let back = st.apply(&s).unwrap().apply(&s.inverse()).unwrap();
        assert!(max_abs_diff(back.covariance().as_ref(), st.covariance().as_ref()) < 1e-10);
        let id = s.compose(&s.inverse());
        assert!(max_abs_diff(id.matrix().as_ref(), Mat::<f64>::identity(6, 6).as_ref()) < 1e-10);
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let st = GaussianState::vacuum(2).unwrap();
        assert!(matches!(
            st.apply(&Symplectic::identity(3)),
            Err(Error::DimensionMismatch { expected: 4, actual: 6 })
        ));
    }

    #[test]
    fn non_symplectic_rejected() {
        let m = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 0.0 });
        assert!(Symplectic::new(m).is_err());
    }
}
