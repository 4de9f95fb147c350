use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::fock::{hamiltonian, lowering_power, mandel_q, FockSpace, PureState, ResonatorParams, SparseOp};
use crate::linalg::{expm, matvec_into, norm_sqr_c, ZERO};

/// Bisection depth computed up front; deeper levels are built on demand.
const BASE_LEVELS: usize = 10;
/// Deepest allowed bisection level before giving up on locating a jump.
const MAX_LEVELS: usize = 48;

#[derive(Debug, Clone)]
struct Channel {
    op: SparseOp,
    rate: f64,
    tag: String,
}

/// Monte Carlo wavefunction integrator on a fixed output grid of spacing `dt`.
///
/// Between jumps the unnormalized state follows `exp(-i H_eff tau)` with
/// `H_eff = H - (i/2) sum_k rate_k L_k^dag L_k`; a jump fires when the
/// squared norm falls below a uniform threshold. The jump time is found by
/// bisecting `dt` into halves, using precomputed exponentials for each level.
#[derive(Debug, Clone)]
pub struct McEngine {
    dim: usize,
    dt: f64,
    blocks: Vec<Vec<usize>>,
    h_eff: Vec<Mat<c64>>,
    levels: Vec<Vec<Mat<c64>>>,
    channels: Vec<Channel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub operator: String,
}

/// Observables of the normalized trajectory state at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub mean_a: (f64, f64),
    pub mean_photon: f64,
    /// Undefined at zero photon number.
    pub mandel_q: Option<f64>,
}

impl TrajectorySample {
    pub fn of(t: f64, psi: &PureState) -> Self {
        let a = psi.mean_a();
        Self {
            t,
            mean_a: (a.re, a.im),
            mean_photon: crate::fock::Populations::mean_photon_number(psi),
            mandel_q: mandel_q(psi).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub samples: Vec<TrajectorySample>,
    pub jumps: Vec<JumpEvent>,
    pub apriori_lobe: Option<usize>,
    pub assigned_lobe: Option<usize>,
}

/// Trajectory CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub re_a: f64,
    pub im_a: f64,
    pub mean_photon: f64,
    pub mandel_q: Option<f64>,
    pub assigned_lobe: Option<usize>,
}

/// Jump-log CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRow {
    pub trajectory: usize,
    pub t: f64,
    pub operator: String,
}

impl TrajectoryRecord {
    pub fn rows(&self) -> Vec<TrajectoryRow> {
        self.samples
            .iter()
            .map(|s| TrajectoryRow {
                t: s.t,
                re_a: s.mean_a.0,
                im_a: s.mean_a.1,
                mean_photon: s.mean_photon,
                mandel_q: s.mandel_q,
                assigned_lobe: self.assigned_lobe,
            })
            .collect()
    }

    pub fn jump_rows(&self) -> Vec<JumpRow> {
        self.jumps
            .iter()
            .map(|j| JumpRow {
                trajectory: self.index,
                t: j.t,
                operator: j.operator.clone(),
            })
            .collect()
    }
}

fn components(dim: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; dim];
    for i in 0..dim {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn exp_level(h_eff: &[Mat<c64>], dt: f64, level: usize) -> Result<Vec<Mat<c64>>> {
    let tau = dt / (1u64 << level) as f64;
    h_eff
        .iter()
        .map(|h| {
            let g = Mat::from_fn(h.nrows(), h.ncols(), |i, j| c64::new(0.0, -tau) * h[(i, j)]);
            expm(g.as_ref())
        })
        .collect()
}

impl McEngine {
    /// Resonator with jumps `sqrt(gamma_1) a` and `sqrt(gamma_m) a^m`.
    pub fn new(params: &ResonatorParams, space: FockSpace, dt: f64) -> Result<Self> {
        params.validate()?;
        let h = hamiltonian(params, space)?;
        let jumps = vec![
            (lowering_power(space, 1), ResonatorParams::GAMMA_1, "a".to_string()),
            (lowering_power(space, params.m), params.gamma_m, format!("a^{}", params.m)),
        ];
        Self::from_operators(&h, jumps, dt)
    }

    /// Arbitrary Hamiltonian and jump channels `(L, rate, tag)`.
    pub fn from_operators(h: &SparseOp, jumps: Vec<(SparseOp, f64, String)>, dt: f64) -> Result<Self> {
        ensure(dt > 0.0 && dt.is_finite(), || format!("output step must be > 0, got {dt}"))?;
        let dim = h.dim;
        for (l, rate, tag) in &jumps {
            if l.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: l.dim,
                });
            }
            ensure(*rate >= 0.0 && rate.is_finite(), || format!("rate of {tag} must be >= 0"))?;
        }
        let mut full = h.to_dense();
        for (l, rate, _) in &jumps {
            let ll = l.adjoint().mul(l);
            for &(i, j, v) in &ll.entries {
                full[(i, j)] -= c64::new(0.0, 0.5 * rate) * v;
            }
        }
        let blocks = components(
            dim,
            (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).filter(|&(i, j)| full[(i, j)] != ZERO),
        );
        let h_eff: Vec<Mat<c64>> = blocks
            .iter()
            .map(|b| Mat::from_fn(b.len(), b.len(), |i, j| full[(b[i], b[j])]))
            .collect();
        let levels = (0..=BASE_LEVELS)
            .map(|k| exp_level(&h_eff, dt, k))
            .collect::<Result<Vec<_>>>()?;
        let channels = jumps
            .into_iter()
            .filter(|(_, rate, _)| *rate > 0.0)
            .map(|(op, rate, tag)| Channel { op, rate, tag })
            .collect();
        Ok(Self {
            dim,
            dt,
            blocks,
            h_eff,
            levels,
            channels,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn propagate(&self, mats: &[Mat<c64>], psi: &[c64], out: &mut [c64]) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (b, m) in self.blocks.iter().zip(mats) {
            x.clear();
            x.extend(b.iter().map(|&i| psi[i]));
            y.resize(b.len(), ZERO);
            matvec_into(m.as_ref(), &x, &mut y);
            for (&i, &v) in b.iter().zip(&y) {
                out[i] = v;
            }
        }
    }

    /// Runs one trajectory over `steps` grid intervals. `sample` sees the
    /// normalized state at every grid time `k dt`, starting from `k = 0`.
    pub fn run<F>(&self, psi0: &PureState, steps: usize, rng: &mut ChaCha8Rng, mut sample: F) -> Result<Vec<JumpEvent>>
    where
        F: FnMut(f64, &PureState) -> Result<()>,
    {
        if psi0.cutoff() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: psi0.cutoff(),
            });
        }
        let mut run = Run {
            engine: self,
            extra: Vec::new(),
            psi: psi0.amplitudes().to_vec(),
            scratch: vec![ZERO; self.dim],
            threshold: 1.0 - rng.random::<f64>(),
            t: 0.0,
            jumps: Vec::new(),
        };
        sample(0.0, psi0)?;
        for k in 1..=steps {
            run.advance(0, rng)?;
            let t = k as f64 * self.dt;
            run.t = t;
            let state = PureState::normalized(run.psi.clone())?;
            sample(t, &state)?;
        }
        Ok(run.jumps)
    }

    /// Convenience wrapper: stream `(seed, index)`, observables at every grid
    /// time, and the normalized states from `store_from` on.
    pub fn trajectory(
        &self,
        psi0: &PureState,
        t_max: f64,
        seed: u64,
        index: usize,
        store_from: f64,
    ) -> Result<(TrajectoryRecord, Vec<PureState>)> {
        let steps = self.steps_for(t_max)?;
        let mut rng = trajectory_rng(seed, index);
        let mut samples = Vec::with_capacity(steps + 1);
        let mut stored = Vec::new();
        let jumps = self.run(psi0, steps, &mut rng, |t, psi| {
            samples.push(TrajectorySample::of(t, psi));
            if t >= store_from - 1e-9 {
                stored.push(psi.clone());
            }
            Ok(())
        })?;
        Ok((
            TrajectoryRecord {
                index,
                samples,
                jumps,
                apriori_lobe: None,
                assigned_lobe: None,
            },
            stored,
        ))
    }

    /// Grid intervals needed to reach `t_max`.
    pub fn steps_for(&self, t_max: f64) -> Result<usize> {
        ensure(t_max >= 0.0 && t_max.is_finite(), || format!("invalid end time {t_max}"))?;
        Ok((t_max / self.dt - 1e-9).ceil().max(0.0) as usize)
    }
}

/// ChaCha8 stream `index` of `seed`.
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

struct Run<'a> {
    engine: &'a McEngine,
    extra: Vec<Vec<Mat<c64>>>,
    psi: Vec<c64>,
    scratch: Vec<c64>,
    threshold: f64,
    t: f64,
    jumps: Vec<JumpEvent>,
}

impl Run<'_> {
    fn ensure_level(&mut self, k: usize) -> Result<()> {
        while k > BASE_LEVELS + self.extra.len() {
            let next = BASE_LEVELS + 1 + self.extra.len();
            self.extra.push(exp_level(&self.engine.h_eff, self.engine.dt, next)?);
        }
        Ok(())
    }

    fn advance(&mut self, k: usize, rng: &mut ChaCha8Rng) -> Result<()> {
        let tau = self.engine.dt / (1u64 << k) as f64;
        let mut next = std::mem::take(&mut self.scratch);
        self.ensure_level(k)?;
        let mats = if k <= BASE_LEVELS {
            &self.engine.levels[k]
        } else {
            &self.extra[k - BASE_LEVELS - 1]
        };
        self.engine.propagate(mats, &self.psi, &mut next);
        let before = norm_sqr_c(&self.psi);
        let after = norm_sqr_c(&next);
        if after > self.threshold {
            self.scratch = std::mem::replace(&mut self.psi, next);
            self.t += tau;
            return Ok(());
        }
        if k >= BASE_LEVELS && after >= 0.5 * before {
            self.scratch = std::mem::replace(&mut self.psi, next);
            self.t += tau;
            return self.jump(rng);
        }
        self.scratch = next;
        ensure(k < MAX_LEVELS, || format!("could not resolve a jump near t = {:.6}", self.t))
            .map_err(|e| Error::Numerical(e.to_string()))?;
        self.advance(k + 1, rng)?;
        self.advance(k + 1, rng)
    }

    fn jump(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let mut outs = Vec::with_capacity(self.engine.channels.len());
        let mut weights = Vec::with_capacity(self.engine.channels.len());
        for c in &self.engine.channels {
            let mut y = vec![ZERO; self.engine.dim];
            c.op.apply(&self.psi, &mut y);
            weights.push(c.rate * norm_sqr_c(&y));
            outs.push(y);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numerical(format!(
                "norm decayed at t = {:.6} but no jump channel is active",
                self.t
            )));
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        let y = &outs[pick];
        let scale = 1.0 / norm_sqr_c(y).sqrt();
        self.psi = y.iter().map(|v| v * scale).collect();
        self.threshold = 1.0 - rng.random::<f64>();
        self.jumps.push(JumpEvent {
            t: self.t,
            operator: self.engine.channels[pick].tag.clone(),
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::fock_state;

    #[test]
    fn single_photon_jumps_once() {
        let space = FockSpace::new(4).unwrap();
        let h = SparseOp::zeros(4);
        let engine = McEngine::from_operators(&h, vec![(lowering_power(space, 1), 1.0, "a".into())], 0.1).unwrap();
        let psi = fock_state(1, space).unwrap();
        for seed in 0..20 {
            let (rec, _) = engine.trajectory(&psi, 20.0, 7, seed, 0.0).unwrap();
            assert!(rec.jumps.len() <= 1);
            for s in &rec.samples {
                let expect = if rec.jumps.first().is_some_and(|j| j.t <= s.t + 1e-12) { 0.0 } else { 1.0 };
                assert!((s.mean_photon - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reproducible_per_stream() {
        let p = ResonatorParams {
            n: 3,
            m: 4,
            delta: 0.4,
            eta: 13.02,
            gamma_m: 0.2,
        };
        let space = FockSpace::new(24).unwrap();
        let engine = McEngine::new(&p, space, 0.05).unwrap();
        let psi = crate::fock::coherent(c64::new(1.0, 1.0), space).unwrap();
        let a = engine.trajectory(&psi, 1.0, 3, 5, 0.0).unwrap().0;
        let b = engine.trajectory(&psi, 1.0, 3, 5, 0.0).unwrap().0;
        let c = engine.trajectory(&psi, 1.0, 3, 6, 0.0).unwrap().0;
        assert_eq!(a, b);
        assert_ne!(a.jumps, c.jumps);
        assert_eq!(a.samples.len(), 21);
        assert!(a.jumps.iter().any(|j| j.operator == "a^4"));
    }
}
