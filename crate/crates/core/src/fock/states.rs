use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::operators::lowering_power;
use super::FockSpace;
use crate::error::{ensure, Error, Result};
use crate::linalg::{dot_c, expm, norm_sqr_c, ZERO};

/// Anything with a photon-number distribution.
pub trait Populations {
    fn populations(&self) -> Vec<f64>;

    fn mean_photon_number(&self) -> f64 {
        self.populations().iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

/// `(<n^2> - <n>^2 - <n>) / <n>`.
pub fn mandel_q<S: Populations + ?Sized>(state: &S) -> Result<f64> {
    let p = state.populations();
    let total: f64 = p.iter().sum();
    let n1: f64 = p.iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>() / total;
    let n2: f64 = p.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum::<f64>() / total;
    if !(n1 > 1e-12) {
        return Err(Error::InvalidParameter(
            "Mandel Q is undefined for a state with zero mean photon number".into(),
        ));
    }
    Ok((n2 - n1 * n1 - n1) / n1)
}

/// Normalized ket in a truncated number basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KetJson", into = "KetJson")]
pub struct PureState {
    amps: Vec<c64>,
}

#[derive(Serialize, Deserialize)]
struct KetJson {
    real: Vec<f64>,
    imag: Vec<f64>,
}

impl From<PureState> for KetJson {
    fn from(s: PureState) -> Self {
        KetJson {
            real: s.amps.iter().map(|z| z.re).collect(),
            imag: s.amps.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<KetJson> for PureState {
    type Error = Error;
    fn try_from(k: KetJson) -> Result<Self> {
        ensure(k.real.len() == k.imag.len(), || "real/imag length mismatch".into())?;
        PureState::new(k.real.iter().zip(&k.imag).map(|(r, i)| c64::new(*r, *i)).collect())
    }
}

impl PureState {
    pub const NORM_TOLERANCE: f64 = 1e-10;

    pub fn new(amps: Vec<c64>) -> Result<Self> {
        ensure(amps.len() >= 2, || "a ket needs at least two levels".into())?;
        let norm = norm_sqr_c(&amps).sqrt();
        ensure((norm - 1.0).abs() <= Self::NORM_TOLERANCE, || {
            format!("ket norm {norm} differs from 1")
        })?;
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(mut amps: Vec<c64>) -> Result<Self> {
        let norm = norm_sqr_c(&amps).sqrt();
        ensure(norm > 0.0 && norm.is_finite(), || "cannot normalize a zero ket".into())?;
        amps.iter_mut().for_each(|z| *z /= norm);
        Self::new(amps)
    }

    pub fn cutoff(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr_c(&self.amps).sqrt()
    }

    /// `<a>`.
    pub fn mean_a(&self) -> c64 {
        (1..self.amps.len())
            .map(|k| self.amps[k - 1].conj() * self.amps[k] * (k as f64).sqrt())
            .sum()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &PureState) -> Result<c64> {
        check_dims(self.cutoff(), other.cutoff())?;
        Ok(dot_c(&self.amps, &other.amps))
    }

    /// Zero-padded copy in a larger basis.
    pub fn embed(&self, cutoff: usize) -> Result<PureState> {
        ensure(cutoff >= self.cutoff(), || {
            format!("cannot embed a {}-level ket into {cutoff} levels", self.cutoff())
        })?;
        let mut amps = self.amps.clone();
        amps.resize(cutoff, ZERO);
        Ok(PureState { amps })
    }

    /// `e^{i theta n} |psi>`, which maps `|beta>` to `|beta e^{i theta}>`.
    pub fn rotated(&self, theta: f64) -> PureState {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, z)| z * c64::from_polar(1.0, theta * k as f64))
            .collect();
        PureState { amps }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let d = self.cutoff();
        let data = Mat::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj());
        DensityMatrix { data }
    }
}

impl Populations for PureState {
    fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Hermitian, unit-trace, positive semidefinite `D x D` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: Mat<c64>,
}

/// Row-major nested arrays of the real and imaginary parts.
#[derive(Serialize, Deserialize)]
struct DensityJson {
    cutoff: usize,
    real: Vec<Vec<f64>>,
    imag: Vec<Vec<f64>>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.cutoff();
        DensityJson {
            cutoff: d,
            real: (0..d).map(|i| (0..d).map(|j| self.data[(i, j)].re).collect()).collect(),
            imag: (0..d).map(|i| (0..d).map(|j| self.data[(i, j)].im).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = DensityJson::deserialize(de)?;
        let d = j.cutoff;
        let rows_ok = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|r| r.len() == d);
        if !rows_ok(&j.real) || !rows_ok(&j.imag) {
            return Err(D::Error::custom(format!("density matrix arrays must be {d} x {d}")));
        }
        let data = Mat::from_fn(d, d, |r, c| c64::new(j.real[r][c], j.imag[r][c]));
        DensityMatrix::new(data).map_err(D::Error::custom)
    }
}

impl DensityMatrix {
    pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
    pub const TRACE_TOLERANCE: f64 = 1e-8;
    pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

    pub fn new(data: Mat<c64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(data)?;
        rho.validate()?;
        Ok(rho)
    }

    fn from_matrix_unchecked(data: Mat<c64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                actual: data.ncols(),
            });
        }
        ensure(data.nrows() >= 2, || "a density matrix needs at least two levels".into())?;
        Ok(Self { data })
    }

    /// Hermitizes and trace-normalizes an approximate state, e.g. a solver
    /// output, then validates it.
    pub fn from_approximate(data: Mat<c64>) -> Result<Self> {
        let d = data.nrows();
        let mut rho = Self::from_matrix_unchecked(data)?;
        rho.data = Mat::from_fn(d, d, |i, j| (rho.data[(i, j)] + rho.data[(j, i)].conj()) * 0.5);
        let tr = rho.trace().re;
        ensure(tr.is_finite() && tr.abs() > 1e-300, || "state has zero trace".into())?;
        rho.data.col_iter_mut().for_each(|c| c.iter_mut().for_each(|z| *z /= tr));
        rho.validate()?;
        Ok(rho)
    }

    /// From column-major `vec(rho)`, as produced by the master-equation solvers.
    pub fn from_vectorized(d: usize, v: &[c64]) -> Result<Self> {
        if v.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: v.len(),
            });
        }
        Self::from_approximate(Mat::from_fn(d, d, |i, j| v[i + d * j]))
    }

    /// Checks the invariants with the class tolerances.
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_error();
        ensure(h <= Self::HERMITICITY_TOLERANCE, || format!("density matrix not Hermitian ({h:e})"))?;
        let tr = self.trace();
        ensure((tr - c64::new(1.0, 0.0)).norm() <= Self::TRACE_TOLERANCE, || {
            format!("density matrix trace {tr} differs from 1")
        })?;
        let lo = self.min_eigenvalue()?;
        ensure(lo >= -Self::POSITIVITY_TOLERANCE, || {
            format!("density matrix has negative eigenvalue {lo:e}")
        })
    }

    pub fn cutoff(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.data.as_ref()
    }

    /// Column-major `vec(rho)`.
    pub fn vectorize(&self) -> Vec<c64> {
        let d = self.cutoff();
        (0..d * d).map(|k| self.data[(k % d, k / d)]).collect()
    }

    pub fn trace(&self) -> c64 {
        (0..self.cutoff()).map(|i| self.data[(i, i)]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.cutoff();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let herm = Mat::from_fn(self.cutoff(), self.cutoff(), |i, j| {
            (self.data[(i, j)] + self.data[(j, i)].conj()) * 0.5
        });
        herm.self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Numerical(format!("Hermitian eigenvalues failed: {e:?}")))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn purity(&self) -> f64 {
        self.data.col_iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum()
    }

    /// `tr(rho A)`.
    pub fn expect(&self, op: MatRef<'_, c64>) -> Result<c64> {
        check_dims(self.cutoff(), op.nrows())?;
        check_dims(self.cutoff(), op.ncols())?;
        let d = self.cutoff();
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += self.data[(i, k)] * op[(k, i)];
            }
        }
        Ok(acc)
    }

    /// `<a> = sum_k sqrt(k) rho_{k, k-1}`.
    pub fn mean_a(&self) -> c64 {
        (1..self.cutoff()).map(|k| self.data[(k, k - 1)] * (k as f64).sqrt()).sum()
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with_pure(&self, psi: &PureState) -> Result<f64> {
        check_dims(self.cutoff(), psi.cutoff())?;
        let d = self.cutoff();
        let a = psi.amplitudes();
        let mut acc = ZERO;
        for j in 0..d {
            if a[j] == ZERO {
                continue;
            }
            let mut col = ZERO;
            for i in 0..d {
                col += a[i].conj() * self.data[(i, j)];
            }
            acc += col * a[j];
        }
        Ok(acc.re)
    }

    /// `||rho - sigma||_1 / 2`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        check_dims(self.cutoff(), other.cutoff())?;
        let d = self.cutoff();
        let diff = Mat::from_fn(d, d, |i, j| self.data[(i, j)] - other.data[(i, j)]);
        let ev = diff
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Numerical(format!("Hermitian eigenvalues failed: {e:?}")))?;
        Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
    }

    /// Zero-padded copy in a larger basis.
    pub fn embed(&self, cutoff: usize) -> Result<DensityMatrix> {
        let d = self.cutoff();
        ensure(cutoff >= d, || format!("cannot embed a {d}-level state into {cutoff} levels"))?;
        let data = Mat::from_fn(cutoff, cutoff, |i, j| if i < d && j < d { self.data[(i, j)] } else { ZERO });
        Ok(DensityMatrix { data })
    }

    /// `e^{i theta n} rho e^{-i theta n}`.
    pub fn rotated(&self, theta: f64) -> DensityMatrix {
        let d = self.cutoff();
        let data = Mat::from_fn(d, d, |i, j| {
            self.data[(i, j)] * c64::from_polar(1.0, theta * (i as f64 - j as f64))
        });
        DensityMatrix { data }
    }
}

impl Populations for DensityMatrix {
    fn populations(&self) -> Vec<f64> {
        (0..self.cutoff()).map(|i| self.data[(i, i)].re).collect()
    }
}

/// Free-function form of [`DensityMatrix::rotated`].
pub fn rotate_density(rho: &DensityMatrix, theta: f64) -> DensityMatrix {
    rho.rotated(theta)
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

pub fn fock_state(k: usize, space: FockSpace) -> Result<PureState> {
    ensure(k < space.cutoff(), || format!("|{k}> lies outside a {}-level basis", space.cutoff()))?;
    let mut amps = vec![ZERO; space.cutoff()];
    amps[k] = c64::new(1.0, 0.0);
    Ok(PureState { amps })
}

/// `|beta>`; same truncation rules as [`squeezed_coherent`].
pub fn coherent(beta: c64, space: FockSpace) -> Result<PureState> {
    squeezed_coherent(beta, ZERO, space)
}

/// Truncation allowance: the photon distribution's mean plus this many
/// standard deviations must fit below the top level.
pub const HEADROOM_SIGMAS: f64 = 5.0;
/// Norm lost to truncation above which a warning is logged.
pub const TRUNCATION_WARNING: f64 = 1e-6;

/// `D(beta) S(xi) |0>` with `S(xi) = exp((xi^* a^2 - xi a^dag^2) / 2)`,
/// so real `xi = r` squeezes `x` and gives `<n> = sinh^2 r` at `beta = 0`.
///
/// Built in a padded basis, checked for headroom, truncated and renormalized.
pub fn squeezed_coherent(beta: c64, xi: c64, space: FockSpace) -> Result<PureState> {
    ensure(beta.re.is_finite() && beta.im.is_finite() && xi.re.is_finite() && xi.im.is_finite(), || {
        "non-finite state parameters".into()
    })?;
    let d = space.cutoff();
    let pad = (2 * d).max(d + 60);
    let padded = if xi == ZERO {
        coherent_amplitudes(beta, pad)
    } else {
        let vac = squeezed_vacuum_amplitudes(xi, pad);
        if beta == ZERO {
            vac
        } else {
            let a = lowering_power(FockSpace::new(pad)?, 1).to_dense();
            let gen = Mat::from_fn(pad, pad, |i, j| beta * a[(j, i)].conj() - beta.conj() * a[(i, j)]);
            let disp = expm(gen.as_ref())?;
            let mut out = vec![ZERO; pad];
            crate::linalg::matvec_into(disp.as_ref(), &vac, &mut out);
            out
        }
    };
    let pops: Vec<f64> = padded.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = pops.iter().sum();
    let mean: f64 = pops.iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>() / total;
    let var: f64 = pops.iter().enumerate().map(|(k, p)| (k as f64 - mean).powi(2) * p).sum::<f64>() / total;
    let reach = mean + HEADROOM_SIGMAS * var.sqrt();
    if reach > (d - 1) as f64 {
        return Err(Error::InsufficientCutoff {
            cutoff: d,
            reason: format!(
                "state with <n> = {mean:.3} and sd {:.3} needs levels up to {reach:.1}",
                var.sqrt()
            ),
        });
    }
    let kept: f64 = pops[..d].iter().sum();
    let deficit = 1.0 - kept / total;
    if deficit > TRUNCATION_WARNING {
        log::warn!("truncating to {d} levels drops {deficit:.2e} of the norm");
    }
    PureState::normalized(padded[..d].to_vec())
}

/// Minimal cutoff satisfying the headroom rule for `D(beta) S(xi) |0>`.
pub fn required_cutoff(beta: c64, xi: c64) -> usize {
    let r = xi.norm();
    let theta = xi.arg();
    let b2 = beta.norm_sqr();
    let mean = b2 + r.sinh().powi(2);
    let var = b2 * ((2.0 * r).cosh() - (2.0 * r).sinh() * (theta - 2.0 * beta.arg()).cos())
        + 0.5 * (2.0 * r).sinh().powi(2);
    (mean + HEADROOM_SIGMAS * var.max(0.0).sqrt()).ceil() as usize + 2
}

fn coherent_amplitudes(beta: c64, len: usize) -> Vec<c64> {
    let mut amps = Vec::with_capacity(len);
    let mut c = c64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for k in 1..len {
        c = c * beta / (k as f64).sqrt();
        amps.push(c);
    }
    amps
}

fn squeezed_vacuum_amplitudes(xi: c64, len: usize) -> Vec<c64> {
    let r = xi.norm();
    let ratio = -c64::from_polar(r.tanh(), xi.arg());
    let mut amps = vec![ZERO; len];
    let mut c = c64::new(1.0 / r.cosh().sqrt(), 0.0);
    let mut k = 0usize;
    while 2 * k < len {
        amps[2 * k] = c;
        // c_{2k+2} / c_{2k} = ratio * sqrt((2k+1)(2k+2)) / (2k+2)
        let f = (((2 * k + 1) * (2 * k + 2)) as f64).sqrt() / (2 * k + 2) as f64;
        c = c * ratio * f;
        k += 1;
    }
    amps
}
