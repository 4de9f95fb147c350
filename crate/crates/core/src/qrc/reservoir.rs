use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::gaussian::{
    homodyne_moments, observable_len, GaussianState, ObservableVector, SqueezingSpec, Symplectic,
    VACUUM_VARIANCE,
};

/// Map from an input sample to the squeezing phase of the injected pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// `phi = pi s / 4`
    #[default]
    QuarterPi,
    /// `phi = pi s / 2`
    HalfPi,
    /// `phi = pi s`
    Pi,
}

impl Encoding {
    pub const ALL: [Encoding; 3] = [Encoding::QuarterPi, Encoding::HalfPi, Encoding::Pi];

    pub fn phase(self, s: f64) -> f64 {
        match self {
            Encoding::QuarterPi => PI * s / 4.0,
            Encoding::HalfPi => PI * s / 2.0,
            Encoding::Pi => PI * s,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Encoding::QuarterPi => "quarter-pi",
            Encoding::HalfPi => "half-pi",
            Encoding::Pi => "pi",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Encoding::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown encoding preset '{s}' (quarter-pi, half-pi, pi)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub modes: usize,
    pub input_squeezing: f64,
    pub cavity_squeezing: f64,
    #[serde(default)]
    pub encoding: Encoding,
    pub network_seed: u64,
    /// Variance `s^2` of the additive readout noise on every observable.
    #[serde(default)]
    pub noise_variance: f64,
    #[serde(default)]
    pub noise_seed: u64,
}

impl ReservoirConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.modes >= 1, || "reservoir needs at least one mode".into())?;
        for (name, v) in [
            ("input_squeezing", self.input_squeezing),
            ("cavity_squeezing", self.cavity_squeezing),
            ("noise_variance", self.noise_variance),
        ] {
            ensure(v >= 0.0 && v.is_finite(), || format!("{name} must be finite and >= 0, got {v}"))?;
        }
        Ok(())
    }
}

/// Noise variance expressed as a fraction of the vacuum quadrature variance.
pub fn relative_noise_intensity(noise_variance: f64) -> f64 {
    noise_variance / VACUUM_VARIANCE
}

/// One loop round trip, composed literally from the Gaussian primitives.
///
/// Returns the next loop state and the noiseless moments of the measured arm.
pub fn step_reservoir(
    loop_state: &GaussianState,
    s_k: f64,
    cfg: &ReservoirConfig,
    crystal: &Symplectic,
) -> Result<(GaussianState, ObservableVector)> {
    let n = cfg.modes;
    if loop_state.modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: loop_state.modes(),
        });
    }
    if crystal.modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: crystal.modes(),
        });
    }
    let pulse = GaussianState::squeezed_input(
        n,
        &SqueezingSpec::new(cfg.input_squeezing, cfg.encoding.phase(s_k))?,
    )?;
    let mixed = loop_state.tensor(&pulse).apply(&Symplectic::beam_splitter_5050(n))?;
    let measured: Vec<usize> = (n..2 * n).collect();
    let kept: Vec<usize> = (0..n).collect();
    let obs = homodyne_moments(&mixed.partial_trace(&measured)?)?;
    let next = mixed.partial_trace(&kept)?.apply(crystal)?;
    Ok((next, obs))
}

/// `O_meas = O_ideal + u`, `u ~ N(0, s^2)` entry-wise.
pub fn add_readout_noise<R: rand::Rng + ?Sized>(
    ideal: &ObservableVector,
    noise_variance: f64,
    rng: &mut R,
) -> Result<ObservableVector> {
    ensure(noise_variance >= 0.0 && noise_variance.is_finite(), || {
        format!("noise variance must be finite and >= 0, got {noise_variance}")
    })?;
    if noise_variance == 0.0 {
        return Ok(ideal.clone());
    }
    let dist = Normal::new(0.0, noise_variance.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(ObservableVector {
        modes: ideal.modes,
        values: ideal.values.iter().map(|v| v + dist.sample(rng)).collect(),
    })
}

/// A reservoir with its crystal fixed by the network seed.
#[derive(Debug, Clone)]
pub struct Reservoir {
    cfg: ReservoirConfig,
    crystal: Symplectic,
}

impl Reservoir {
    pub fn new(cfg: ReservoirConfig) -> Result<Self> {
        cfg.validate()?;
        let crystal = Symplectic::crystal(cfg.modes, cfg.cavity_squeezing, cfg.network_seed)?;
        Ok(Self { cfg, crystal })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.cfg
    }

    pub fn crystal(&self) -> &Symplectic {
        &self.crystal
    }

    /// Noiseless observable rows starting from a vacuum loop.
    pub fn ideal_rows(&self, inputs: &[f64]) -> Result<Mat<f64>> {
        self.ideal_rows_from(&GaussianState::vacuum(self.cfg.modes)?, inputs)
    }

    /// Noiseless observable rows from an arbitrary initial loop state.
    ///
    /// For the product input `loop ⊗ pulse` both coupler outputs have
    /// covariance `(cov_loop + cov_pulse) / 2`, so the round trip reduces to
    /// that average followed by the crystal; [`step_reservoir`] is the
    /// literal composition and agrees to rounding.
    pub fn ideal_rows_from(&self, initial: &GaussianState, inputs: &[f64]) -> Result<Mat<f64>> {
        ensure(!inputs.is_empty(), || "input sequence is empty".into())?;
        let n = self.cfg.modes;
        if initial.modes() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: initial.modes(),
            });
        }
        let dim = 2 * n;
        let s = self.crystal.matrix();
        let st = s.transpose().to_owned();
        let mut cov = initial.covariance().clone();
        let mut rows = Mat::<f64>::zeros(inputs.len(), observable_len(n));
        let mut avg = Mat::<f64>::zeros(dim, dim);
        for (k, &sk) in inputs.iter().enumerate() {
            let block = SqueezingSpec::new(self.cfg.input_squeezing, self.cfg.encoding.phase(sk))?.block();
            for j in 0..dim {
                for i in 0..dim {
                    let pulse = if i / 2 == j / 2 { block[i % 2][j % 2] } else { 0.0 };
                    avg[(i, j)] = 0.5 * (cov[(i, j)] + pulse);
                }
            }
            write_moments(&avg, n, rows.as_mut().row_mut(k));
            let next = s * &avg * &st;
            cov = Mat::from_fn(dim, dim, |i, j| 0.5 * (next[(i, j)] + next[(j, i)]));
        }
        if rows.as_ref().col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::Numerical("reservoir observables diverged".into()));
        }
        Ok(rows)
    }

    /// Rows with readout noise drawn from the configured noise seed.
    pub fn run(&self, inputs: &[f64]) -> Result<Mat<f64>> {
        let ideal = self.ideal_rows(inputs)?;
        noisy_rows(&ideal, self.cfg.noise_variance, self.cfg.noise_seed)
    }
}

fn write_moments(cov: &Mat<f64>, n: usize, mut row: faer::RowMut<'_, f64>) {
    let s = |i: usize, j: usize| cov[(2 * i, 2 * j)];
    let mut c = 0;
    for i in 0..n {
        for j in i..n {
            row[c] = s(i, j);
            c += 1;
        }
    }
    for i in 0..n {
        for j in i..n {
            row[c] = s(i, i) * s(j, j) + 2.0 * s(i, j) * s(i, j);
            c += 1;
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                row[c] = 3.0 * s(i, i) * s(i, j);
                c += 1;
            }
        }
    }
}

/// Convenience wrapper: build the reservoir and return its noiseless rows.
pub fn ideal_rows(cfg: &ReservoirConfig, inputs: &[f64]) -> Result<Mat<f64>> {
    Reservoir::new(cfg.clone())?.ideal_rows(inputs)
}

/// Adds i.i.d. Gaussian noise of the given variance to every entry, row by row.
pub fn noisy_rows(ideal: &Mat<f64>, noise_variance: f64, seed: u64) -> Result<Mat<f64>> {
    ensure(noise_variance >= 0.0 && noise_variance.is_finite(), || {
        format!("noise variance must be finite and >= 0, got {noise_variance}")
    })?;
    if noise_variance == 0.0 {
        return Ok(ideal.clone());
    }
    let dist = Normal::new(0.0, noise_variance.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ideal.clone();
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            out[(i, j)] += dist.sample(&mut rng);
        }
    }
    Ok(out)
}
