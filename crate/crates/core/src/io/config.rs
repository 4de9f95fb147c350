//! Experiment configuration.
//!
//! Configs are TOML files with one table per concern. Every key has a
//! default, so an empty file is valid. A run manifest (JSON with a `config`
//! object) is also accepted, which lets a past run be replayed exactly.
//!
//! ```toml
//! [qrc]
//! modes = 12
//! input_squeezing = 0.75
//! cavity_squeezing = [0.0, 1.5]
//! noise_intensity = [0.0, 0.2]
//!
//! [split]
//! washout = 300
//! train = 3000
//! test = 700
//!
//! [qam]
//! n = 3
//! m = 4
//! eta = 13.02
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_series, lorenz_intensity, normalize_minmax01, ColumnSelector, SeriesFormat, Split, TimeSeries};
use crate::error::{Error, Result};
use crate::fock::{CutoffSearch, ResonatorParams};
use crate::qam::{eta_for_mean_photon, SetupOptions, WindowOptions};
use crate::qrc::{Encoding, ReservoirConfig, SweepSpec};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub qrc: QrcSection,
    pub data: DataSection,
    pub split: Split,
    pub qam: QamSection,
    pub wigner: WignerSection,
    pub trajectories: TrajectorySection,
    pub success: SuccessSection,
    pub basins: BasinSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QrcSection {
    pub modes: usize,
    pub input_squeezing: f64,
    /// Cavity squeezing strengths to sweep; `qrc-run` uses the first.
    pub cavity_squeezing: Vec<f64>,
    /// Readout-noise intensities relative to the vacuum variance
    /// (`0.2` means `s^2 = 0.1`); `qrc-run` uses the first.
    pub noise_intensity: Vec<f64>,
    pub encoding: Encoding,
    pub network_seed: u64,
    pub noise_seed: u64,
    pub realizations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl Default for QrcSection {
    fn default() -> Self {
        Self {
            modes: 12,
            input_squeezing: 0.75,
            cavity_squeezing: vec![0.0],
            noise_intensity: vec![0.0],
            encoding: Encoding::QuarterPi,
            network_seed: 1,
            noise_seed: 1000,
            realizations: 20,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Dataset file, relative to the config file. Absent: synthetic series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// `plain` or `csv`.
    pub format: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<ColumnSelector>,
    pub synthetic_length: usize,
    pub synthetic_seed: u64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: None,
            format: "plain".into(),
            column: None,
            synthetic_length: 4001,
            synthetic_seed: 0,
        }
    }
}

impl DataSection {
    pub fn series_format(&self) -> Result<SeriesFormat> {
        match self.format.as_str() {
            "plain" => Ok(SeriesFormat::Plain),
            "csv" => Ok(SeriesFormat::Csv {
                column: self.column.clone().unwrap_or(ColumnSelector::Index(0)),
            }),
            other => Err(Error::Config(format!("data.format must be 'plain' or 'csv', got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QamSection {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub gamma_m: f64,
    /// Drive strength; exclusive with `mean_photon`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Target lobe photon number `|beta|^2`; the drive is solved from it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_photon: Option<f64>,
    /// Fixed Fock cutoff. Absent: chosen automatically.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    pub min_cutoff: usize,
    pub max_cutoff: usize,
    pub convergence_tolerance: f64,
    pub eigenvalues: usize,
    pub fast_efolds: f64,
    pub slow_fraction: f64,
    pub assessment_time: f64,
    pub dt: f64,
}

impl Default for QamSection {
    fn default() -> Self {
        Self {
            n: 3,
            m: 4,
            delta: 0.4,
            gamma_m: 0.2,
            eta: None,
            mean_photon: None,
            cutoff: None,
            min_cutoff: 32,
            max_cutoff: 160,
            convergence_tolerance: 1e-6,
            eigenvalues: 8,
            fast_efolds: 5.0,
            slow_fraction: 0.2,
            assessment_time: 10.0,
            dt: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerSection {
    /// Half-width of the square `(x, p)` grid. Absent: from the lobe amplitude.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    pub resolution: usize,
}

impl Default for WignerSection {
    fn default() -> Self {
        Self {
            extent: None,
            resolution: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    pub count: usize,
    pub seed: u64,
    /// Simulation end time. Absent: end of the assessed window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Initial displacement `amplitude_scale * |beta| * e^{i amplitude_phase}`.
    pub amplitude_scale: f64,
    pub amplitude_phase: f64,
    /// Initial squeezing `squeezing * e^{i squeezing_phase}`.
    pub squeezing: f64,
    pub squeezing_phase: f64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            count: 4,
            seed: 0,
            t_max: None,
            amplitude_scale: 1.5,
            amplitude_phase: std::f64::consts::FRAC_PI_3,
            squeezing: 0.5,
            squeezing_phase: -0.15 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuccessSection {
    pub mean_photon: Vec<f64>,
    /// Dissipation orders to compare; empty means `qam.m` only.
    pub m: Vec<usize>,
    pub trajectories: usize,
    pub seed: u64,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub squeezing_max: f64,
}

impl Default for SuccessSection {
    fn default() -> Self {
        Self {
            mean_photon: vec![8.0],
            m: vec![3, 4],
            trajectories: 200,
            seed: 0,
            amplitude_min: 0.5,
            amplitude_max: 1.5,
            squeezing_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinSection {
    pub radial_points: usize,
    pub angular_points: usize,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
}

impl Default for BasinSection {
    fn default() -> Self {
        Self {
            radial_points: 3,
            angular_points: 24,
            amplitude_min: 0.5,
            amplitude_max: 1.5,
        }
    }
}

/// One documented configuration key.
#[derive(Debug, Clone, Copy)]
pub struct ConfigKey {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(key: &'static str, default: &'static str, help: &'static str) -> ConfigKey {
    ConfigKey { key, default, help }
}

pub const QRC_KEYS: &[ConfigKey] = &[
    key("qrc.modes", "12", "number of loop modes N"),
    key("qrc.input_squeezing", "0.75", "input pulse squeezing strength xi_in"),
    key("qrc.cavity_squeezing", "[0.0]", "list of crystal squeezing strengths xi_c"),
    key("qrc.noise_intensity", "[0.0]", "list of readout-noise variances relative to vacuum (0.2 = 20%)"),
    key("qrc.encoding", "\"quarter-pi\"", "input phase preset: quarter-pi, half-pi, pi"),
    key("qrc.network_seed", "1", "crystal seed; realization i uses seed + i"),
    key("qrc.noise_seed", "1000", "readout-noise seed; realization i uses seed + i"),
    key("qrc.realizations", "20", "independent realizations per sweep cell"),
    key("qrc.lambda", "auto", "ridge penalty; auto = 1e-9 tr(Xc^T Xc)/features"),
];

pub const DATA_KEYS: &[ConfigKey] = &[
    key("data.path", "none", "dataset file relative to the config; none = synthetic series"),
    key("data.format", "\"plain\"", "plain (one value per line) or csv"),
    key("data.column", "0", "csv column name or zero-based index"),
    key("data.synthetic_length", "4001", "length of the synthetic chaotic series"),
    key("data.synthetic_seed", "0", "seed of the synthetic series"),
    key("split.washout", "300", "initial steps discarded before training"),
    key("split.train", "3000", "training steps"),
    key("split.test", "700", "test steps"),
];

pub const QAM_KEYS: &[ConfigKey] = &[
    key("qam.n", "3", "drive order n"),
    key("qam.m", "4", "nonlinear dissipation order m"),
    key("qam.delta", "0.4", "detuning in units of gamma_1"),
    key("qam.gamma_m", "0.2", "nonlinear dissipation rate in units of gamma_1"),
    key("qam.eta", "none", "drive strength (set eta or mean_photon)"),
    key("qam.mean_photon", "6.25 if eta unset", "target lobe photon number |beta|^2; eta is solved from it"),
    key("qam.cutoff", "auto", "fixed Fock cutoff D; auto = convergence search"),
    key("qam.min_cutoff", "32", "smallest cutoff tried by the automatic search"),
    key("qam.max_cutoff", "160", "largest cutoff allowed"),
    key("qam.convergence_tolerance", "1e-6", "max population change when the cutoff doubles"),
    key("qam.eigenvalues", "8", "Liouvillian eigenvalues computed (at least n + 2)"),
    key("qam.fast_efolds", "5.0", "window start: e-foldings of the fastest non-metastable mode"),
    key("qam.slow_fraction", "0.2", "window end: allowed decay of the slowest metastable mode"),
    key("qam.assessment_time", "10.0", "longest stretch of the window used for lobe assignment"),
    key("qam.dt", "0.05", "output grid spacing of trajectories"),
];

pub const WIGNER_KEYS: &[ConfigKey] = &[
    key("wigner.extent", "auto", "half-width of the phase-space grid"),
    key("wigner.resolution", "101", "grid points per axis"),
];

pub const TRAJECTORY_KEYS: &[ConfigKey] = &[
    key("trajectories.count", "4", "number of trajectories"),
    key("trajectories.seed", "0", "trajectory seed; trajectory i uses stream i"),
    key("trajectories.t_max", "auto", "end time; auto = end of the assessed window"),
    key("trajectories.amplitude_scale", "1.5", "initial |alpha| in units of |beta|"),
    key("trajectories.amplitude_phase", "pi/3", "initial arg(alpha)"),
    key("trajectories.squeezing", "0.5", "initial squeezing modulus"),
    key("trajectories.squeezing_phase", "-0.15 pi", "initial squeezing phase"),
];

pub const SUCCESS_KEYS: &[ConfigKey] = &[
    key("success.mean_photon", "[8.0]", "lobe photon numbers to test"),
    key("success.m", "[3, 4]", "dissipation orders to compare; empty = qam.m"),
    key("success.trajectories", "200", "trajectories per setting"),
    key("success.seed", "0", "sampling and trajectory seed"),
    key("success.amplitude_min", "0.5", "smallest initial |alpha| / |beta|"),
    key("success.amplitude_max", "1.5", "largest initial |alpha| / |beta|"),
    key("success.squeezing_max", "0.5", "largest initial squeezing modulus"),
];

pub const BASIN_KEYS: &[ConfigKey] = &[
    key("basins.radial_points", "3", "radii on the polar grid"),
    key("basins.angular_points", "24", "angles on the polar grid"),
    key("basins.amplitude_min", "0.5", "smallest |alpha| / |beta|"),
    key("basins.amplitude_max", "1.5", "largest |alpha| / |beta|"),
];

impl QamSection {
    /// Lobe photon number used when neither `eta` nor `mean_photon` is set.
    pub const DEFAULT_MEAN_PHOTON: f64 = 6.25;

    /// Resonator parameters, optionally with another dissipation order or
    /// lobe photon number (which then fixes the drive).
    pub fn params(&self, m: Option<usize>, mean_photon: Option<f64>) -> Result<ResonatorParams> {
        let m = m.unwrap_or(self.m);
        let eta = match (mean_photon, self.eta, self.mean_photon) {
            (Some(p), _, _) => eta_for_mean_photon(self.n, m, self.gamma_m, p)?,
            (None, Some(e), _) => e,
            (None, None, p) => {
                eta_for_mean_photon(self.n, m, self.gamma_m, p.unwrap_or(Self::DEFAULT_MEAN_PHOTON))?
            }
        };
        let params = ResonatorParams {
            n: self.n,
            m,
            delta: self.delta,
            eta,
            gamma_m: self.gamma_m,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn cutoff_search(&self) -> CutoffSearch {
        CutoffSearch {
            min_cutoff: self.min_cutoff,
            max_cutoff: self.max_cutoff,
            tolerance: self.convergence_tolerance,
        }
    }

    pub fn window_options(&self) -> WindowOptions {
        WindowOptions {
            eigenvalues: self.eigenvalues,
            fast_efolds: self.fast_efolds,
            slow_fraction: self.slow_fraction,
            assessment_time: self.assessment_time,
        }
    }

    pub fn setup_options(&self, allow_unconverged: bool) -> SetupOptions {
        SetupOptions {
            search: self.cutoff_search(),
            cutoff: self.cutoff,
            window: self.window_options(),
            dt: self.dt,
            allow_unconverged,
        }
    }
}

impl Config {
    /// Raw series from `data.path`, or the synthetic stand-in when absent.
    pub fn raw_series(&self) -> Result<TimeSeries> {
        match &self.data.path {
            Some(p) => load_series(p, &self.data.series_format()?),
            None => lorenz_intensity(self.data.synthetic_length, self.data.synthetic_seed),
        }
    }

    /// Series scaled to `[0, 1]` with the map fitted on washout + train only.
    pub fn training_series(&self) -> Result<TimeSeries> {
        let raw = self.raw_series()?;
        self.split.validate(raw.len())?;
        normalize_minmax01(&raw, 0..self.split.washout + self.split.train)
    }

    /// Reservoir of `qrc-run`: first cavity and noise settings, realization 0.
    pub fn reservoir_config(&self) -> ReservoirConfig {
        self.sweep_spec().realization(self.qrc.cavity_squeezing[0], self.qrc.noise_intensity[0], 0)
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        let q = &self.qrc;
        SweepSpec {
            modes: q.modes,
            input_squeezing: q.input_squeezing,
            cavity_squeezing: q.cavity_squeezing.clone(),
            noise_intensity: q.noise_intensity.clone(),
            encoding: q.encoding,
            network_seed: q.network_seed,
            noise_seed: q.noise_seed,
            realizations: q.realizations,
            split: self.split,
            lambda: q.lambda,
        }
    }

    /// Reads TOML, or JSON (a bare config or a run manifest) by extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)?
        } else {
            Self::from_toml_str(&text)?
        };
        if let (Some(p), Some(dir)) = (&cfg.data.path, path.parent()) {
            if p.is_relative() {
                cfg.data.path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let inner = match value.get("config") {
            Some(c) => c.clone(),
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate_qrc(&self) -> Result<()> {
        let q = &self.qrc;
        let bad = |m: String| Err(Error::Config(m));
        if q.modes == 0 {
            return bad("qrc.modes must be >= 1".into());
        }
        if !(q.input_squeezing >= 0.0 && q.input_squeezing.is_finite()) {
            return bad(format!("qrc.input_squeezing must be >= 0, got {}", q.input_squeezing));
        }
        if q.cavity_squeezing.is_empty() || q.cavity_squeezing.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return bad("qrc.cavity_squeezing must be a non-empty list of values >= 0".into());
        }
        if q.noise_intensity.is_empty() || q.noise_intensity.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return bad("qrc.noise_intensity must be a non-empty list of values >= 0".into());
        }
        if q.realizations == 0 {
            return bad("qrc.realizations must be >= 1".into());
        }
        if let Some(l) = q.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("qrc.lambda must be >= 0, got {l}"));
            }
        }
        if self.split.train == 0 || self.split.test == 0 {
            return bad("split.train and split.test must be positive".into());
        }
        if self.data.path.is_none() && self.data.synthetic_length < self.split.required_len() {
            return bad(format!(
                "data.synthetic_length {} is shorter than the split needs ({})",
                self.data.synthetic_length,
                self.split.required_len()
            ));
        }
        self.data.series_format()?;
        Ok(())
    }

    pub fn validate_qam(&self) -> Result<()> {
        let q = &self.qam;
        let bad = |m: String| Err(Error::Config(m));
        if q.n < 2 || q.m < 2 {
            return bad(format!("qam.n and qam.m must be >= 2, got n = {}, m = {}", q.n, q.m));
        }
        if !(q.gamma_m > 0.0 && q.gamma_m.is_finite()) {
            return bad(format!("qam.gamma_m must be > 0, got {}", q.gamma_m));
        }
        if !q.delta.is_finite() {
            return bad("qam.delta must be finite".into());
        }
        match (q.eta, q.mean_photon) {
            (Some(_), Some(_)) => return bad("set only one of qam.eta and qam.mean_photon".into()),
            (Some(e), None) if !(e >= 0.0 && e.is_finite()) => return bad(format!("qam.eta must be >= 0, got {e}")),
            (None, Some(p)) if !(p > 0.0 && p.is_finite()) => {
                return bad(format!("qam.mean_photon must be > 0, got {p}"))
            }
            _ => {}
        }
        if let Some(d) = q.cutoff {
            if d <= q.n.max(q.m) {
                return bad(format!("qam.cutoff {d} must exceed max(n, m) = {}", q.n.max(q.m)));
            }
        }
        if q.min_cutoff < 2 || q.max_cutoff < q.min_cutoff {
            return bad("need 2 <= qam.min_cutoff <= qam.max_cutoff".into());
        }
        if !(q.convergence_tolerance > 0.0) {
            return bad("qam.convergence_tolerance must be > 0".into());
        }
        if q.eigenvalues < q.n + 2 {
            return bad(format!("qam.eigenvalues must be at least n + 2 = {}", q.n + 2));
        }
        for (name, v) in [
            ("qam.fast_efolds", q.fast_efolds),
            ("qam.slow_fraction", q.slow_fraction),
            ("qam.assessment_time", q.assessment_time),
            ("qam.dt", q.dt),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if self.wigner.resolution < 2 {
            return bad("wigner.resolution must be >= 2".into());
        }
        let t = &self.trajectories;
        if t.count == 0 || !(t.amplitude_scale >= 0.0) || !(t.squeezing >= 0.0) {
            return bad("trajectories.count must be >= 1 and amplitudes non-negative".into());
        }
        let s = &self.success;
        if s.trajectories == 0
            || s.mean_photon.iter().any(|p| !(*p > 0.0))
            || !(0.0 <= s.amplitude_min && s.amplitude_min <= s.amplitude_max)
            || !(s.squeezing_max >= 0.0)
            || s.m.iter().any(|&m| m < 2)
        {
            return bad("success section has an invalid value".into());
        }
        let b = &self.basins;
        if b.radial_points == 0 || b.angular_points == 0 || !(0.0 <= b.amplitude_min && b.amplitude_min <= b.amplitude_max) {
            return bad("basins section has an invalid value".into());
        }
        Ok(())
    }
}
