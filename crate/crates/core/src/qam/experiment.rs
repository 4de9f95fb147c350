use std::f64::consts::PI;

use faer::c64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lobes::{apriori_lobe, assign_lobe, build_lobe_set, phase_lobe, LobeSet};
use super::trajectory::{trajectory_rng, McEngine, TrajectoryRecord, TrajectorySample};
use super::window::{metastable_window, MetastableWindow, WindowOptions};
use crate::error::{ensure, Error, Result};
use crate::fock::{
    check_cutoff, coherent, converge_cutoff, evolve_prepared, required_cutoff, squeezed_coherent, CutoffSearch,
    FockSpace, Liouvillian, Propagator, PureState, ResonatorParams,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupOptions {
    pub search: CutoffSearch,
    /// Fixed cutoff; still checked against a doubled basis.
    pub cutoff: Option<usize>,
    pub window: WindowOptions,
    /// Output grid spacing.
    pub dt: f64,
    /// Continue with a warning when a fixed cutoff fails the check.
    pub allow_unconverged: bool,
}

/// The per-parameter-set prelude shared read-only by every trajectory:
/// converged cutoff, metastable window and lobe references.
#[derive(Debug, Clone)]
pub struct QamSetup {
    pub params: ResonatorParams,
    pub cutoff: usize,
    pub cutoff_drift: f64,
    pub window: MetastableWindow,
    pub eigenvalues: Vec<c64>,
    pub lobes: LobeSet,
    pub dt: f64,
}

impl QamSetup {
    pub fn prepare(params: &ResonatorParams, opts: &SetupOptions) -> Result<Self> {
        params.validate()?;
        ensure(opts.dt > 0.0 && opts.dt.is_finite(), || format!("dt must be > 0, got {}", opts.dt))?;
        let (base, drift) = match opts.cutoff {
            Some(d) => {
                let (drift, _) = check_cutoff(params, d)?;
                if drift > opts.search.tolerance {
                    if !opts.allow_unconverged {
                        return Err(Error::CutoffNotConverged { max_cutoff: d, drift });
                    }
                    log::warn!("cutoff {d} not converged (drift {drift:.3e}); continuing");
                }
                (d, drift)
            }
            None => {
                let report = converge_cutoff(params, &opts.search)?;
                (report.accepted, report.drift)
            }
        };
        let amplitude = params.lobe_amplitude()?;
        let cutoff = base.max(required_cutoff(c64::new(amplitude, 0.0), c64::new(0.0, 0.0)));
        let space = FockSpace::new(cutoff)?;
        let l = Liouvillian::new(params, space)?;
        let (window, eigenvalues) = metastable_window(&l, params.n, &opts.window)?;
        let mut prop = Propagator::new(&l);
        let lobes = build_lobe_set(params, space, &mut prop, window.t_start)?;
        log::info!(
            "setup n={} m={} eta={:.4}: D={cutoff}, window [{:.4}, {:.4}], gap {:.1}",
            params.n,
            params.m,
            params.eta,
            window.t_start,
            window.t_end,
            window.gap_ratio
        );
        Ok(Self {
            params: *params,
            cutoff,
            cutoff_drift: drift,
            window,
            eigenvalues,
            lobes,
            dt: opts.dt,
        })
    }

    /// Grid times at which the window assignment is averaged.
    pub fn assessment_times(&self) -> Result<Vec<f64>> {
        self.window.assessment_times(self.dt)
    }

    /// Runs one trajectory from `psi0` through the assessed window, with
    /// lobes already embedded at the engine's cutoff.
    pub fn assess(
        &self,
        engine: &McEngine,
        lobes: &LobeSet,
        psi0: &PureState,
        index: usize,
        rng: &mut rand_chacha::ChaCha8Rng,
        t_max: Option<f64>,
    ) -> Result<Assessed> {
        let t_start = self.window.t_start;
        let t_end = self.window.assessed_end;
        let end = t_max.unwrap_or(t_end).max(t_end);
        let apriori = apriori_lobe(psi0, lobes)?;
        let mut samples = Vec::new();
        let mut inside = Vec::new();
        let mut mean_a = c64::new(0.0, 0.0);
        let jumps = engine.run(psi0, engine.steps_for(end)?, rng, |t, psi| {
            samples.push(TrajectorySample::of(t, psi));
            if t >= t_start - 1e-9 && t <= t_end + 1e-9 {
                mean_a += psi.mean_a();
                inside.push(psi.clone());
            }
            Ok(())
        })?;
        ensure(!inside.is_empty(), || {
            format!("output step {} leaves no grid time in the window", engine.dt())
        })?;
        let assigned = assign_lobe(&inside, lobes)?;
        let phase = phase_lobe(mean_a, lobes.n);
        Ok(Assessed {
            record: TrajectoryRecord {
                index,
                samples,
                jumps,
                apriori_lobe: Some(apriori.index),
                assigned_lobe: Some(assigned.index),
            },
            apriori: apriori.index,
            assigned: assigned.index,
            phase,
            tie: apriori.tie || assigned.tie,
        })
    }
}

/// Outcome of one trajectory assessed over the window.
#[derive(Debug, Clone)]
pub struct Assessed {
    pub record: TrajectoryRecord,
    pub apriori: usize,
    pub assigned: usize,
    /// Nearest lobe phase to the window-averaged `<a>`.
    pub phase: usize,
    pub tie: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessSpec {
    pub trajectories: usize,
    pub seed: u64,
    /// Initial amplitude modulus range in units of `|beta|`.
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub squeezing_max: f64,
}

impl SuccessSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.trajectories > 0, || "trajectories must be > 0".into())?;
        ensure(
            0.0 <= self.amplitude_min && self.amplitude_min <= self.amplitude_max && self.amplitude_max.is_finite(),
            || "need 0 <= amplitude_min <= amplitude_max".into(),
        )?;
        ensure(self.squeezing_max >= 0.0 && self.squeezing_max.is_finite(), || {
            "squeezing_max must be >= 0".into()
        })
    }
}

/// Random initial displacement and squeezing.
pub fn sample_initial_state<R: Rng>(rng: &mut R, amplitude: f64, spec: &SuccessSpec) -> (c64, c64) {
    let r = amplitude * (spec.amplitude_min + (spec.amplitude_max - spec.amplitude_min) * rng.random::<f64>());
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = spec.squeezing_max * rng.random::<f64>();
    let chi = 2.0 * PI * rng.random::<f64>();
    (c64::from_polar(r, phi), c64::from_polar(s, chi))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuccessResult {
    pub n: usize,
    pub m: usize,
    pub mean_photon: f64,
    pub eta: f64,
    pub cutoff: usize,
    pub trajectories: usize,
    pub successes: usize,
    pub p_hat: f64,
    pub stderr: f64,
    pub baseline: f64,
    /// Fraction of trajectories where the phase classifier agrees with the assignment.
    pub phase_agreement: f64,
    pub ties: usize,
    pub window: MetastableWindow,
}

/// Success CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub n: usize,
    pub m: usize,
    pub mean_photon: f64,
    pub trajectories: usize,
    pub p_hat: f64,
    pub stderr: f64,
    pub baseline: f64,
}

impl SuccessResult {
    pub fn row(&self) -> SuccessRow {
        SuccessRow {
            n: self.n,
            m: self.m,
            mean_photon: self.mean_photon,
            trajectories: self.trajectories,
            p_hat: self.p_hat,
            stderr: self.stderr,
            baseline: self.baseline,
        }
    }
}

/// Trajectory engine and lobes at a cutoff that holds every sampled state.
pub struct SuccessRun<'a> {
    setup: &'a QamSetup,
    spec: SuccessSpec,
    engine: McEngine,
    lobes: LobeSet,
}

/// Outcome of one success trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub apriori: usize,
    pub assigned: usize,
    pub phase: usize,
    pub tie: bool,
}

impl<'a> SuccessRun<'a> {
    pub fn new(setup: &'a QamSetup, spec: &SuccessSpec) -> Result<Self> {
        spec.validate()?;
        let amplitude = setup.lobes.amplitude;
        // anti-squeezed along the displacement: largest photon-number spread
        let worst = required_cutoff(
            c64::new(spec.amplitude_max * amplitude, 0.0),
            c64::new(-spec.squeezing_max, 0.0),
        );
        let cutoff = setup.cutoff.max(worst);
        let space = FockSpace::new(cutoff)?;
        Ok(Self {
            setup,
            spec: *spec,
            engine: McEngine::new(&setup.params, space, setup.dt)?,
            lobes: setup.lobes.embed(cutoff)?,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.engine.dim()
    }

    /// Trial `index`; the sampled initial state is rotated by
    /// `rotation * 2 pi / n` before the run.
    pub fn trial(&self, index: usize, rotation: usize) -> Result<Trial> {
        let mut rng = trajectory_rng(self.spec.seed, index);
        let (alpha, xi) = sample_initial_state(&mut rng, self.lobes.amplitude, &self.spec);
        let space = FockSpace::new(self.cutoff())?;
        let mut psi0 = squeezed_coherent(alpha, xi, space)?;
        if rotation % self.lobes.n != 0 {
            psi0 = psi0.rotated(2.0 * PI * rotation as f64 / self.lobes.n as f64);
        }
        let a = self.setup.assess(&self.engine, &self.lobes, &psi0, index, &mut rng, None)?;
        Ok(Trial {
            apriori: a.apriori,
            assigned: a.assigned,
            phase: a.phase,
            tie: a.tie,
        })
    }

    pub fn trials(&self, rotation: usize) -> Result<Vec<Trial>> {
        (0..self.spec.trajectories)
            .into_par_iter()
            .map(|i| self.trial(i, rotation))
            .collect()
    }

    pub fn summarize(&self, mean_photon: f64, trials: &[Trial]) -> SuccessResult {
        let count = trials.len();
        let successes = trials.iter().filter(|t| t.apriori == t.assigned).count();
        let agree = trials.iter().filter(|t| t.phase == t.assigned).count();
        let p_hat = successes as f64 / count as f64;
        SuccessResult {
            n: self.setup.params.n,
            m: self.setup.params.m,
            mean_photon,
            eta: self.setup.params.eta,
            cutoff: self.cutoff(),
            trajectories: count,
            successes,
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / count as f64).sqrt(),
            baseline: 1.0 / self.setup.params.n as f64,
            phase_agreement: agree as f64 / count as f64,
            ties: trials.iter().filter(|t| t.tie).count(),
            window: self.setup.window,
        }
    }
}

/// Success probability of retrieving the a-priori lobe for one setup.
pub fn run_success(setup: &QamSetup, spec: &SuccessSpec) -> Result<SuccessResult> {
    let run = SuccessRun::new(setup, spec)?;
    let trials = run.trials(0)?;
    Ok(run.summarize(setup.lobes.amplitude.powi(2), &trials))
}

/// Initial state of the single-lobe regime study:
/// `D(scale |beta| e^{i phase}) S(squeezing e^{i squeezing_phase}) |0>`.
pub fn probe_state(
    amplitude: f64,
    scale: f64,
    phase: f64,
    squeezing: f64,
    squeezing_phase: f64,
    min_cutoff: usize,
) -> Result<PureState> {
    let beta = c64::from_polar(scale * amplitude, phase);
    let xi = c64::from_polar(squeezing, squeezing_phase);
    let space = FockSpace::new(min_cutoff.max(required_cutoff(beta, xi)))?;
    squeezed_coherent(beta, xi, space)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinSpec {
    pub radial_points: usize,
    pub angular_points: usize,
    /// Radii in units of `|beta|`.
    pub amplitude_min: f64,
    pub amplitude_max: f64,
}

/// Basin CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinPoint {
    pub re_alpha: f64,
    pub im_alpha: f64,
    pub assigned_lobe: usize,
}

impl BasinSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.radial_points > 0 && self.angular_points > 0, || "basin grid must be nonempty".into())?;
        ensure(
            0.0 < self.amplitude_min && self.amplitude_min <= self.amplitude_max && self.amplitude_max.is_finite(),
            || "need 0 < amplitude_min <= amplitude_max".into(),
        )
    }

    /// Ring-major polar grid; angles `(k + 1/2) 2 pi / A` avoid the lobe midpoints.
    pub fn points(&self, amplitude: f64) -> Vec<c64> {
        let radii: Vec<f64> = if self.radial_points == 1 {
            vec![0.5 * (self.amplitude_min + self.amplitude_max)]
        } else {
            (0..self.radial_points)
                .map(|i| {
                    self.amplitude_min
                        + (self.amplitude_max - self.amplitude_min) * i as f64 / (self.radial_points - 1) as f64
                })
                .collect()
        };
        radii
            .iter()
            .flat_map(|&r| {
                (0..self.angular_points).map(move |k| {
                    c64::from_polar(
                        r * amplitude,
                        (k as f64 + 0.5) * 2.0 * PI / self.angular_points as f64,
                    )
                })
            })
            .collect()
    }
}

/// Lobe reached from coherent states on a polar grid, classified from the
/// master-equation evolution over the assessed window.
pub fn basins(setup: &QamSetup, spec: &BasinSpec) -> Result<Vec<BasinPoint>> {
    spec.validate()?;
    let amplitude = setup.lobes.amplitude;
    let cutoff = setup
        .cutoff
        .max(required_cutoff(c64::new(spec.amplitude_max * amplitude, 0.0), c64::new(0.0, 0.0)));
    let space = FockSpace::new(cutoff)?;
    let lobes = setup.lobes.embed(cutoff)?;
    let l = Liouvillian::new(&setup.params, space)?;
    let times = setup.assessment_times()?;
    let mut prop = Propagator::new(&l);
    prop.prepare(times[0])?;
    for w in times.windows(2) {
        prop.prepare(w[1] - w[0])?;
    }
    spec.points(amplitude)
        .into_par_iter()
        .map(|alpha| {
            let rho0 = coherent(alpha, space)?.to_density();
            let states = evolve_prepared(&prop, &rho0, &times)?;
            let a = assign_lobe(&states, &lobes)?;
            Ok(BasinPoint {
                re_alpha: alpha.re,
                im_alpha: alpha.im,
                assigned_lobe: a.index,
            })
        })
        .collect()
}

/// Number of cyclic runs of equal labels on each ring of a ring-major grid.
pub fn angular_regions(points: &[BasinPoint], angular_points: usize) -> Vec<usize> {
    points
        .chunks(angular_points)
        .map(|ring| {
            let changes = (0..ring.len())
                .filter(|&k| ring[k].assigned_lobe != ring[(k + 1) % ring.len()].assigned_lobe)
                .count();
            changes.max(1)
        })
        .collect()
}

/// Every ring splits into exactly `n` contiguous arcs, one per lobe.
pub fn is_angular_partition(points: &[BasinPoint], angular_points: usize, n: usize) -> bool {
    angular_regions(points, angular_points).iter().all(|&r| r == n)
        && points.chunks(angular_points).all(|ring| {
            let mut seen = vec![false; n];
            ring.iter().for_each(|p| {
                if p.assigned_lobe < n {
                    seen[p.assigned_lobe] = true
                }
            });
            seen.into_iter().all(|s| s)
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(l: usize) -> BasinPoint {
        BasinPoint {
            re_alpha: 0.0,
            im_alpha: 0.0,
            assigned_lobe: l,
        }
    }

    #[test]
    fn regions_counted_cyclically() {
        let ring: Vec<BasinPoint> = [2, 0, 0, 0, 1, 1, 1, 2, 2].iter().map(|&l| point(l)).collect();
        assert_eq!(angular_regions(&ring, 9), vec![3]);
        assert!(is_angular_partition(&ring, 9, 3));
        let broken: Vec<BasinPoint> = [0, 1, 0, 1, 2, 2].iter().map(|&l| point(l)).collect();
        assert!(!is_angular_partition(&broken, 6, 3));
        let same: Vec<BasinPoint> = [1, 1, 1].iter().map(|&l| point(l)).collect();
        assert_eq!(angular_regions(&same, 3), vec![1]);
    }

    #[test]
    fn grid_avoids_midpoints() {
        let spec = BasinSpec {
            radial_points: 2,
            angular_points: 24,
            amplitude_min: 0.5,
            amplitude_max: 1.5,
        };
        let pts = spec.points(2.0);
        assert_eq!(pts.len(), 48);
        assert!((pts[0].norm() - 1.0).abs() < 1e-12 && (pts[24].norm() - 3.0).abs() < 1e-12);
        assert!(pts.iter().all(|z| (z.arg() * 3.0 / PI).fract().abs() > 1e-6));
    }

    #[test]
    fn sampling_in_range() {
        let spec = SuccessSpec {
            trajectories: 1,
            seed: 0,
            amplitude_min: 0.5,
            amplitude_max: 1.5,
            squeezing_max: 0.5,
        };
        let mut rng = trajectory_rng(1, 0);
        for _ in 0..200 {
            let (a, x) = sample_initial_state(&mut rng, 2.0, &spec);
            assert!((1.0..=3.0).contains(&a.norm()));
            assert!(x.norm() <= 0.5);
        }
    }
}
