use std::collections::HashMap;

use faer::{c64, Mat};

use super::liouvillian::Liouvillian;
use super::states::DensityMatrix;
use crate::error::{ensure, Error, Result};
use crate::linalg::{expm, matvec_into, ZERO};

/// Trace drift per step above which the renormalization is logged.
pub const TRACE_DRIFT_LOG: f64 = 1e-9;

/// Exact propagator `exp(L dt)` for a master equation, applied block by
/// block. Exponentials are cached per step length, so evolution on a
/// uniform grid costs one exponential per block.
#[derive(Debug, Clone)]
pub struct Propagator {
    cutoff: usize,
    blocks: Vec<Vec<usize>>,
    generators: Vec<Mat<c64>>,
    cache: HashMap<i64, Vec<Mat<c64>>>,
}

fn step_key(dt: f64) -> i64 {
    (dt * 1e12).round() as i64
}

impl Propagator {
    pub fn new(l: &Liouvillian) -> Self {
        let blocks = l.blocks();
        let mut local = vec![0usize; l.dim()];
        let mut owner = vec![0usize; l.dim()];
        for (bi, members) in blocks.iter().enumerate() {
            for (k, &g) in members.iter().enumerate() {
                local[g] = k;
                owner[g] = bi;
            }
        }
        let mut generators: Vec<Mat<c64>> = blocks.iter().map(|b| Mat::zeros(b.len(), b.len())).collect();
        for &(r, c, v) in l.entries() {
            generators[owner[c]][(local[r], local[c])] += v;
        }
        Self {
            cutoff: l.cutoff(),
            blocks,
            generators,
            cache: HashMap::new(),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Computes and caches `exp(L dt)` for later shared use by [`Propagator::apply`].
    pub fn prepare(&mut self, dt: f64) -> Result<()> {
        ensure(dt >= 0.0 && dt.is_finite(), || format!("invalid step length {dt}"))?;
        let key = step_key(dt);
        if key != 0 && !self.cache.contains_key(&key) {
            let exps = self
                .generators
                .iter()
                .map(|g| {
                    let scaled = Mat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] * dt);
                    expm(scaled.as_ref())
                })
                .collect::<Result<Vec<_>>>()?;
            self.cache.insert(key, exps);
        }
        Ok(())
    }

    /// `exp(L dt) v` for a column-major vectorized operator `v`.
    pub fn step(&mut self, v: &[c64], dt: f64) -> Result<Vec<c64>> {
        self.prepare(dt)?;
        self.apply(v, dt)
    }

    /// Like [`Propagator::step`] but only with step lengths already prepared.
    pub fn apply(&self, v: &[c64], dt: f64) -> Result<Vec<c64>> {
        let n = self.cutoff * self.cutoff;
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v.len(),
            });
        }
        let key = step_key(dt);
        if key == 0 {
            return Ok(v.to_vec());
        }
        let exps = self
            .cache
            .get(&key)
            .ok_or_else(|| Error::InvalidParameter(format!("step length {dt} was not prepared")))?;
        let mut out = vec![ZERO; n];
        for (members, e) in self.blocks.iter().zip(exps) {
            let x: Vec<c64> = members.iter().map(|&g| v[g]).collect();
            if x.iter().all(|z| *z == ZERO) {
                continue;
            }
            let mut y = vec![ZERO; x.len()];
            matvec_into(e.as_ref(), &x, &mut y);
            for (&g, yi) in members.iter().zip(y) {
                out[g] = yi;
            }
        }
        Ok(out)
    }
}

/// `rho(t)` at each requested time (ascending, starting at or after 0).
/// The trace is restored at each output; drifts above
/// [`TRACE_DRIFT_LOG`] are logged.
pub fn evolve(rho0: &DensityMatrix, l: &Liouvillian, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    let mut prop = Propagator::new(l);
    evolve_with(&mut prop, rho0, times)
}

/// [`evolve`] with a caller-owned propagator, reusing its cached exponentials.
pub fn evolve_with(prop: &mut Propagator, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    check_times(times)?;
    let mut t = 0.0;
    for &target in times {
        prop.prepare(target - t)?;
        t = target;
    }
    evolve_prepared(prop, rho0, times)
}

/// [`evolve`] through a shared propagator whose step lengths were all
/// prepared beforehand.
pub fn evolve_prepared(prop: &Propagator, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    let d = prop.cutoff();
    if rho0.cutoff() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: rho0.cutoff(),
        });
    }
    check_times(times)?;
    let mut v = rho0.vectorize();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        v = prop.apply(&v, target - t)?;
        t = target;
        let tr: c64 = (0..d).map(|i| v[i * (d + 1)]).sum();
        let drift = (tr - c64::new(1.0, 0.0)).norm();
        if drift > TRACE_DRIFT_LOG {
            log::debug!("trace drift {drift:.2e} at t = {t}; renormalized");
        }
        let rho = DensityMatrix::from_vectorized(d, &v)?;
        v = rho.vectorize();
        out.push(rho);
    }
    Ok(out)
}

fn check_times(times: &[f64]) -> Result<()> {
    ensure(times.iter().all(|t| t.is_finite() && *t >= 0.0), || "times must be finite and >= 0".into())?;
    ensure(times.windows(2).all(|w| w[0] <= w[1]), || "times must be ascending".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::states::fock_state;
    use crate::fock::{FockSpace, ResonatorParams};

    #[test]
    fn single_photon_decay() {
        let p = ResonatorParams {
            n: 2,
            m: 2,
            delta: 0.4,
            eta: 0.0,
            gamma_m: 0.3,
        };
        let space = FockSpace::new(6).unwrap();
        let l = Liouvillian::new(&p, space).unwrap();
        let rho0 = fock_state(1, space).unwrap().to_density();
        let times: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
        let out = evolve(&rho0, &l, &times).unwrap();
        assert!(crate::linalg::max_abs_diff_c(out[0].matrix(), rho0.matrix()) < 1e-15);
        for (t, rho) in times.iter().zip(&out) {
            assert!((rho.matrix()[(1, 1)].re - (-t).exp()).abs() < 1e-10);
        }
    }
}
