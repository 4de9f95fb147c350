//! Single driven-dissipative oscillator in a truncated Fock basis.
//!
//! The model is
//! `drho/dt = -i[H, rho] + gamma_1 D[a] rho + gamma_m D[a^m] rho` with
//! `H = Delta a^dag a + i eta (a^n - a^dag^n)` in units where `gamma_1 = 1`.
//! Density matrices are vectorized column-major: `vec(rho)[i + D j] = rho_ij`.

mod cutoff;
mod evolve;
mod liouvillian;
mod operators;
mod spectrum;
mod states;
mod steady;
mod wigner;

pub use cutoff::{check_cutoff, converge_cutoff, doubling_drift, CutoffReport, CutoffSearch, CutoffStep};
pub use evolve::{evolve, evolve_prepared, evolve_with, Propagator};
pub use liouvillian::Liouvillian;
pub use operators::{hamiltonian, ladder_operators, lowering_power, SparseOp};
pub use spectrum::{dense_spectrum, spectrum, Eigenpair, SpectrumOptions};
pub use states::{
    coherent, fock_state, mandel_q, required_cutoff, rotate_density, squeezed_coherent, DensityMatrix,
    Populations, PureState,
};
pub use steady::steady_state;
pub use wigner::{integrate, wigner, Grid};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Number basis `|0>, ..., |D-1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    cutoff: usize,
}

impl FockSpace {
    pub fn new(cutoff: usize) -> Result<Self> {
        ensure(cutoff >= 2, || format!("Fock cutoff must be >= 2, got {cutoff}"))?;
        Ok(Self { cutoff })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }
}

/// Resonator parameters in units of the linear loss rate `gamma_1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    /// Drive order.
    pub n: usize,
    /// Nonlinear dissipation order.
    pub m: usize,
    pub delta: f64,
    pub eta: f64,
    pub gamma_m: f64,
}

impl ResonatorParams {
    pub const GAMMA_1: f64 = 1.0;

    pub fn validate(&self) -> Result<()> {
        ensure(self.n >= 2 && self.m >= 2, || {
            format!("drive and dissipation orders must be >= 2, got n = {}, m = {}", self.n, self.m)
        })?;
        ensure(self.gamma_m > 0.0 && self.gamma_m.is_finite(), || {
            format!("gamma_m must be > 0, got {}", self.gamma_m)
        })?;
        ensure(self.eta >= 0.0 && self.eta.is_finite(), || format!("eta must be >= 0, got {}", self.eta))?;
        ensure(self.delta.is_finite(), || "delta must be finite".into())
    }

    /// Lobe amplitude `|beta| = (2 n eta / (m gamma_m))^(1 / (2m - n))`.
    pub fn lobe_amplitude(&self) -> Result<f64> {
        self.validate()?;
        ensure(2 * self.m != self.n, || "lobe amplitude undefined for 2m = n".into())?;
        let base = 2.0 * self.n as f64 * self.eta / (self.m as f64 * self.gamma_m);
        Ok(base.powf(1.0 / (2.0 * self.m as f64 - self.n as f64)))
    }

    pub(crate) fn check_cutoff(&self, space: FockSpace) -> Result<()> {
        let need = self.n.max(self.m);
        if space.cutoff() <= need {
            return Err(crate::Error::InsufficientCutoff {
                cutoff: space.cutoff(),
                reason: format!("must exceed max(n, m) = {need}"),
            });
        }
        Ok(())
    }
}
