use faer::MatRef;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::readout::{nmse, train_readout, TrainedReadout};
use super::reservoir::{noisy_rows, Encoding, Reservoir, ReservoirConfig};
use crate::error::{ensure, Error, Result};
use crate::gaussian::{squeezing_db, VACUUM_VARIANCE};
use crate::io::{CsvRecord, Split};

/// One-step-ahead forecast outcome on a single split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastResult {
    pub config: ReservoirConfig,
    pub split: Split,
    pub train_nmse: f64,
    pub test_nmse: f64,
    /// Test NMSE of predicting the training-target mean at every step.
    pub baseline_test_nmse: f64,
    pub readout: TrainedReadout,
    /// Test-window predictions and targets, aligned with `first_test_step`.
    pub predictions: Vec<f64>,
    pub targets: Vec<f64>,
    pub first_test_step: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PredictionRow {
    pub k: usize,
    pub target: f64,
    pub prediction: f64,
}

impl CsvRecord for PredictionRow {
    const HEADER: &'static [&'static str] = &["k", "target", "prediction"];
}

impl ForecastResult {
    pub fn prediction_rows(&self) -> Vec<PredictionRow> {
        self.predictions
            .iter()
            .zip(&self.targets)
            .enumerate()
            .map(|(i, (p, t))| PredictionRow {
                k: self.first_test_step + i,
                target: *t,
                prediction: *p,
            })
            .collect()
    }
}

/// Trains and scores a readout on precomputed observable rows, where row `k`
/// was produced by input `series[k]` and is asked to predict `series[k + 1]`.
pub fn forecast_from_rows(
    config: &ReservoirConfig,
    rows: MatRef<'_, f64>,
    series: &[f64],
    split: Split,
    lambda: Option<f64>,
) -> Result<ForecastResult> {
    split.validate(series.len())?;
    ensure(rows.nrows() >= split.total(), || {
        format!("{} observable rows, split needs {}", rows.nrows(), split.total())
    })?;
    let fit_end = split.washout + split.train;
    let targets_all: Vec<f64> = series[1..=split.total()].to_vec();
    let readout = train_readout(rows.subrows(0, fit_end), &targets_all[..fit_end], split.washout, lambda)?;

    let train_pred = readout.predict(rows.subrows(split.washout, split.train));
    let train_tgt = &targets_all[split.washout..fit_end];
    let test_pred = readout.predict(rows.subrows(fit_end, split.test));
    let test_tgt = &targets_all[fit_end..split.total()];

    let mean = train_tgt.iter().sum::<f64>() / train_tgt.len() as f64;
    let baseline = nmse(&vec![mean; test_tgt.len()], test_tgt)?;
    Ok(ForecastResult {
        config: config.clone(),
        split,
        train_nmse: nmse(&train_pred, train_tgt)?,
        test_nmse: nmse(&test_pred, test_tgt)?,
        baseline_test_nmse: baseline,
        readout,
        predictions: test_pred,
        targets: test_tgt.to_vec(),
        first_test_step: fit_end,
    })
}

/// Runs the reservoir over `series` (already normalized) and forecasts.
pub fn forecast(config: &ReservoirConfig, series: &[f64], split: Split, lambda: Option<f64>) -> Result<ForecastResult> {
    split.validate(series.len())?;
    let res = Reservoir::new(config.clone())?;
    let rows = res.run(&series[..split.total()])?;
    forecast_from_rows(config, rows.as_ref(), series, split, lambda)
}

/// Grid of cavity squeezing x noise intensity x realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub modes: usize,
    pub input_squeezing: f64,
    pub cavity_squeezing: Vec<f64>,
    /// Noise variances as fractions of the vacuum variance.
    pub noise_intensity: Vec<f64>,
    pub encoding: Encoding,
    pub network_seed: u64,
    pub noise_seed: u64,
    pub realizations: usize,
    pub split: Split,
    pub lambda: Option<f64>,
}

impl SweepSpec {
    /// Configuration of realization `i`: crystal seed `network_seed + i`,
    /// noise seed `noise_seed + i`. The same noise seed is reused across
    /// cavity settings and noise levels, so comparisons are paired.
    pub fn realization(&self, cavity_squeezing: f64, noise_intensity: f64, i: usize) -> ReservoirConfig {
        ReservoirConfig {
            modes: self.modes,
            input_squeezing: self.input_squeezing,
            cavity_squeezing,
            encoding: self.encoding,
            network_seed: self.network_seed.wrapping_add(i as u64),
            noise_variance: noise_intensity * VACUUM_VARIANCE,
            noise_seed: self.noise_seed.wrapping_add(i as u64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "cavity_squeezing_dB")]
    pub cavity_squeezing_db: f64,
    pub noise_relative_intensity: f64,
    pub seed: u64,
    pub train_nmse: f64,
    pub test_nmse: f64,
}

impl CsvRecord for SweepRow {
    const HEADER: &'static [&'static str] =
        &["cavity_squeezing_dB", "noise_relative_intensity", "seed", "train_nmse", "test_nmse"];
}

/// Runs the whole grid. Noiseless rows are computed once per (cavity,
/// realization) and reused for every noise level. Output is ordered by
/// cavity, then noise, then realization, independent of scheduling.
pub fn run_sweep(spec: &SweepSpec, series: &[f64]) -> Result<Vec<SweepRow>> {
    spec.split.validate(series.len())?;
    ensure(spec.realizations > 0, || "sweep needs at least one realization".into())?;
    ensure(
        !spec.cavity_squeezing.is_empty() && !spec.noise_intensity.is_empty(),
        || "sweep grid is empty".into(),
    )?;
    if let Some(x) = spec.noise_intensity.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::InvalidParameter(format!("negative noise intensity {x}")));
    }
    let inputs = &series[..spec.split.total()];
    let tasks: Vec<(usize, usize)> = (0..spec.cavity_squeezing.len())
        .flat_map(|c| (0..spec.realizations).map(move |i| (c, i)))
        .collect();
    let cells: Vec<Vec<SweepRow>> = tasks
        .par_iter()
        .map(|&(c, i)| -> Result<Vec<SweepRow>> {
            let xi_c = spec.cavity_squeezing[c];
            let base = spec.realization(xi_c, 0.0, i);
            let ideal = Reservoir::new(base)?.ideal_rows(inputs)?;
            spec.noise_intensity
                .iter()
                .map(|&rel| {
                    let cfg = spec.realization(xi_c, rel, i);
                    let rows = noisy_rows(&ideal, cfg.noise_variance, cfg.noise_seed)?;
                    let r = forecast_from_rows(&cfg, rows.as_ref(), series, spec.split, spec.lambda)?;
                    Ok(SweepRow {
                        cavity_squeezing_db: squeezing_db(xi_c),
                        noise_relative_intensity: rel,
                        seed: cfg.network_seed,
                        train_nmse: r.train_nmse,
                        test_nmse: r.test_nmse,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let (nc, nn, nr) = (spec.cavity_squeezing.len(), spec.noise_intensity.len(), spec.realizations);
    let mut out = Vec::with_capacity(nc * nn * nr);
    for c in 0..nc {
        for n in 0..nn {
            for i in 0..nr {
                out.push(cells[c * nr + i][n]);
            }
        }
    }
    Ok(out)
}
