use std::f64::consts::PI;

use faer::c64;
use serde::{Deserialize, Serialize};

use super::lobe_phases;
use crate::error::{ensure, Result};
use crate::fock::{
    coherent, evolve_with, mandel_q, DensityMatrix, FockSpace, Populations, Propagator, PureState, ResonatorParams,
};

/// One stored memory: a lobe reference state and its summary numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lobe {
    pub index: usize,
    pub phase: f64,
    pub reference: DensityMatrix,
    pub mean_a: (f64, f64),
    pub mean_photon: f64,
    pub mandel_q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LobeSet {
    pub n: usize,
    pub amplitude: f64,
    pub lobes: Vec<Lobe>,
}

impl LobeSet {
    pub fn cutoff(&self) -> usize {
        self.lobes[0].reference.cutoff()
    }

    /// Same references, zero-padded to a larger cutoff.
    pub fn embed(&self, cutoff: usize) -> Result<LobeSet> {
        let lobes = self
            .lobes
            .iter()
            .map(|l| {
                Ok(Lobe {
                    reference: l.reference.embed(cutoff)?,
                    ..l.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LobeSet { lobes, ..self.clone() })
    }
}

/// Lobe `j` is the coherent state `|beta| e^{i (2j+1) pi / n}` evolved
/// under the master equation up to `t_start`.
pub fn build_lobe_set(
    params: &ResonatorParams,
    space: FockSpace,
    prop: &mut Propagator,
    t_start: f64,
) -> Result<LobeSet> {
    let amplitude = params.lobe_amplitude()?;
    ensure(amplitude > 0.0, || "lobes need a nonzero drive".into())?;
    let lobes = lobe_phases(params.n)
        .into_iter()
        .enumerate()
        .map(|(index, phase)| {
            let psi = coherent(c64::from_polar(amplitude, phase), space)?;
            let reference = evolve_with(prop, &psi.to_density(), &[t_start])?.remove(0);
            let a = reference.mean_a();
            Ok(Lobe {
                index,
                phase,
                mean_a: (a.re, a.im),
                mean_photon: reference.mean_photon_number(),
                mandel_q: mandel_q(&reference)?,
                reference,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LobeSet {
        n: params.n,
        amplitude,
        lobes,
    })
}

/// Similarity of a state to a lobe reference `rho_j`.
pub trait LobeOverlap {
    /// `<psi| rho_j |psi>` for kets, `tr(rho rho_j)` for mixed states.
    fn overlap_with(&self, lobe: &DensityMatrix) -> Result<f64>;
}

impl LobeOverlap for PureState {
    fn overlap_with(&self, lobe: &DensityMatrix) -> Result<f64> {
        lobe.fidelity_with_pure(self)
    }
}

impl LobeOverlap for DensityMatrix {
    fn overlap_with(&self, lobe: &DensityMatrix) -> Result<f64> {
        let d = self.cutoff();
        ensure(lobe.cutoff() == d, || format!("cutoff {} vs lobe cutoff {}", d, lobe.cutoff()))?;
        let (a, b) = (self.matrix(), lobe.matrix());
        let mut acc = 0.0;
        for i in 0..d {
            for k in 0..d {
                acc += (a[(i, k)] * b[(k, i)]).re;
            }
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub index: usize,
    /// Time-averaged overlap with each lobe.
    pub scores: Vec<f64>,
    pub tie: bool,
}

/// Scores closer than this (relative) to the best count as a tie.
const TIE_TOLERANCE: f64 = 1e-9;

/// Lobe with the largest overlap averaged over `states`; ties go to the
/// smallest index and are logged.
pub fn assign_lobe<S: LobeOverlap>(states: &[S], lobes: &LobeSet) -> Result<Assignment> {
    ensure(!states.is_empty(), || "no states inside the window to assign".into())?;
    let mut scores = vec![0.0; lobes.lobes.len()];
    for s in states {
        for (acc, lobe) in scores.iter_mut().zip(&lobes.lobes) {
            *acc += s.overlap_with(&lobe.reference)?;
        }
    }
    scores.iter_mut().for_each(|x| *x /= states.len() as f64);
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let close = |x: f64| best - x <= TIE_TOLERANCE * best.abs().max(f64::MIN_POSITIVE);
    let index = scores.iter().position(|&x| close(x)).unwrap_or(0);
    let tie = scores.iter().filter(|&&x| close(x)).count() > 1;
    if tie {
        log::info!("lobe assignment tie at scores {scores:?}; chose {index}");
    }
    Ok(Assignment { index, scores, tie })
}

/// Lobe most similar to the initial state.
pub fn apriori_lobe(psi0: &PureState, lobes: &LobeSet) -> Result<Assignment> {
    assign_lobe(std::slice::from_ref(psi0), lobes)
}

/// Nearest lobe phase to `arg <a>`; ties go to the smallest index.
pub fn phase_lobe(mean_a: c64, n: usize) -> usize {
    let arg = mean_a.arg();
    let phases = lobe_phases(n);
    let dist = |j: usize| {
        let d = (arg - phases[j]).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    };
    (0..n)
        .min_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)))
        .unwrap_or(0)
}
