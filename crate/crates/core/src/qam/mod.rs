//! Associative memory on the metastable lobes of the driven-dissipative
//! resonator: spectral windows, lobe references, quantum-jump trajectories
//! and the retrieval experiments built on them.

mod experiment;
mod lobes;
mod records;
mod trajectory;
mod window;

pub use experiment::{
    angular_regions, basins, probe_state, is_angular_partition, run_success, sample_initial_state, Assessed,
    BasinPoint, BasinSpec, QamSetup, SetupOptions, SuccessResult, SuccessRow, SuccessRun, SuccessSpec, Trial,
};
pub use lobes::{apriori_lobe, assign_lobe, build_lobe_set, phase_lobe, Assignment, Lobe, LobeOverlap, LobeSet};
pub use records::{eigenvalue_rows, fock_rows, wigner_rows, EigenvalueRow, FockRow, WignerRow};
pub use trajectory::{trajectory_rng, JumpEvent, JumpRow, McEngine, TrajectoryRecord, TrajectoryRow, TrajectorySample};
pub use window::{metastable_window, window_from_eigenvalues, MetastableWindow, WindowOptions};

use std::f64::consts::PI;

use crate::error::{ensure, Result};
use crate::fock::ResonatorParams;

/// `|beta| = (2 n eta / (m gamma_m))^(1 / (2m - n))`.
pub fn lobe_amplitude(params: &ResonatorParams) -> Result<f64> {
    params.lobe_amplitude()
}

/// Drive strength giving lobes with `|beta|^2 = mean_photon`.
pub fn eta_for_mean_photon(n: usize, m: usize, gamma_m: f64, mean_photon: f64) -> Result<f64> {
    ensure(2 * m != n, || "lobe amplitude undefined for 2m = n".into())?;
    ensure(mean_photon >= 0.0 && mean_photon.is_finite(), || {
        format!("mean photon number must be >= 0, got {mean_photon}")
    })?;
    let beta = mean_photon.sqrt();
    Ok(m as f64 * gamma_m * beta.powf(2.0 * m as f64 - n as f64) / (2.0 * n as f64))
}

/// Lobe phases `(2j + 1) pi / n`, `j = 0..n`.
pub fn lobe_phases(n: usize) -> Vec<f64> {
    (0..n).map(|j| (2 * j + 1) as f64 * PI / n as f64).collect()
}
