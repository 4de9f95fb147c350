use serde::{Deserialize, Serialize};

use super::liouvillian::Liouvillian;
use super::states::{DensityMatrix, Populations};
use super::steady::steady_state;
use super::{FockSpace, ResonatorParams};
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSearch {
    pub min_cutoff: usize,
    pub max_cutoff: usize,
    /// Largest accepted change of any steady-state population on doubling.
    pub tolerance: f64,
}

impl Default for CutoffSearch {
    fn default() -> Self {
        Self {
            min_cutoff: 32,
            max_cutoff: 160,
            tolerance: 1e-6,
        }
    }
}

impl CutoffSearch {
    pub const GROWTH: f64 = 1.5;

    pub fn validate(&self) -> Result<()> {
        ensure(self.min_cutoff >= 2 && self.min_cutoff <= self.max_cutoff, || {
            format!("cutoff range {}..={} is empty", self.min_cutoff, self.max_cutoff)
        })?;
        ensure(self.tolerance > 0.0, || "cutoff tolerance must be > 0".into())
    }

    /// First cutoff tried: at least `4 |beta|^2` from the lobe estimate.
    pub fn initial(&self, params: &ResonatorParams) -> usize {
        let beta2 = params.lobe_amplitude().map(|b| b * b).unwrap_or(0.0);
        self.min_cutoff
            .max((4.0 * beta2).ceil() as usize)
            .max(params.n.max(params.m) + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffStep {
    pub cutoff: usize,
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffReport {
    pub accepted: usize,
    pub drift: f64,
    pub tolerance: f64,
    pub history: Vec<CutoffStep>,
    /// Steady state at the accepted cutoff.
    pub steady: DensityMatrix,
}

fn steady_at(params: &ResonatorParams, d: usize) -> Result<DensityMatrix> {
    steady_state(&Liouvillian::new(params, FockSpace::new(d)?)?)
}

/// Largest population change between cutoffs `d` and `2d`, counting the
/// mass the larger basis puts above `d` as a change.
pub fn doubling_drift(small: &DensityMatrix, large: &DensityMatrix) -> f64 {
    let ps = small.populations();
    let pl = large.populations();
    let shared = ps.iter().zip(&pl).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let tail: f64 = pl[ps.len()..].iter().map(|p| p.abs()).sum();
    shared.max(tail)
}

/// Drift of the steady state at one fixed cutoff.
pub fn check_cutoff(params: &ResonatorParams, d: usize) -> Result<(f64, DensityMatrix)> {
    let small = steady_at(params, d)?;
    let large = steady_at(params, 2 * d)?;
    Ok((doubling_drift(&small, &large), small))
}

/// Grows the cutoff by [`CutoffSearch::GROWTH`] from
/// [`CutoffSearch::initial`] until the doubling drift is below tolerance.
pub fn converge_cutoff(params: &ResonatorParams, search: &CutoffSearch) -> Result<CutoffReport> {
    params.validate()?;
    search.validate()?;
    let mut d = search.initial(params);
    let mut history = Vec::new();
    let mut last = f64::INFINITY;
    while d <= search.max_cutoff {
        let (drift, steady) = check_cutoff(params, d)?;
        log::info!("cutoff {d}: doubling drift {drift:.3e}");
        history.push(CutoffStep { cutoff: d, drift });
        last = drift;
        if drift < search.tolerance {
            return Ok(CutoffReport {
                accepted: d,
                drift,
                tolerance: search.tolerance,
                history,
                steady,
            });
        }
        d = ((d as f64) * CutoffSearch::GROWTH).ceil() as usize;
    }
    Err(Error::CutoffNotConverged {
        max_cutoff: search.max_cutoff,
        drift: last,
    })
}
