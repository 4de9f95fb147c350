use std::path::{Path, PathBuf};

use qlight_core::fock::{
    check_cutoff, converge_cutoff, mandel_q, spectrum, wigner, CutoffStep, DensityMatrix, FockSpace, Grid, Liouvillian,
    Populations, ResonatorParams, SpectrumOptions,
};
use qlight_core::io::{write_csv, write_json, Config, CsvRecord, DatasetInfo, RunManifest};
use qlight_core::qam::{
    angular_regions, basins, eigenvalue_rows, probe_state, fock_rows, is_angular_partition, trajectory_rng,
    wigner_rows, window_from_eigenvalues, BasinSpec, McEngine, MetastableWindow, QamSetup, SuccessResult, SuccessRun,
    SuccessSpec,
};
use qlight_core::qrc::{forecast, run_sweep};
use qlight_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::Common;

/// Files written under the output directory, echoed into `manifest.json`.
struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Outputs {
    fn new(dir: &Path, command: &str, config: &Config) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest::new(command, config),
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        self.manifest.outputs.push(name.to_string());
        Ok(p)
    }

    fn csv<T: CsvRecord>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let p = self.path(name)?;
        write_csv(&p, rows)
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name)?;
        write_json(&p, value)
    }

    fn finish(mut self) -> Result<()> {
        let p = self.path("manifest.json")?;
        self.manifest.outputs.pop();
        write_json(&p, &self.manifest)
    }
}

pub fn run(name: &str, common: &Common) -> Result<()> {
    let mut cfg = match &common.config {
        Some(p) => Config::from_path(p)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        match name {
            "qrc-run" | "qrc-sweep" => {
                cfg.qrc.network_seed = seed;
                cfg.qrc.noise_seed = seed;
            }
            "qam-trajectories" => cfg.trajectories.seed = seed,
            "qam-success" => cfg.success.seed = seed,
            _ => {}
        }
    }
    if name.starts_with("qrc") {
        cfg.validate_qrc()?;
    } else {
        cfg.validate_qam()?;
    }
    let mut out = Outputs::new(&common.out, name, &cfg)?;
    match name {
        "qrc-run" => qrc_run(&cfg, &mut out)?,
        "qrc-sweep" => qrc_sweep(&cfg, &mut out)?,
        "qam-steady" => qam_steady(&cfg, common.force, &mut out)?,
        "qam-spectrum" => qam_spectrum(&cfg, common.force, &mut out)?,
        "qam-trajectories" => qam_trajectories(&cfg, common.force, &mut out)?,
        "qam-success" => qam_success(&cfg, common.force, &mut out)?,
        "qam-basins" => qam_basins(&cfg, common.force, &mut out)?,
        "check-convergence" => check_convergence(&cfg, &mut out)?,
        other => unreachable!("unknown subcommand {other}"),
    }
    out.finish()
}

fn dataset(cfg: &Config, out: &mut Outputs) -> Result<Vec<f64>> {
    let series = cfg.training_series()?;
    out.manifest.dataset = Some(DatasetInfo {
        path: cfg.data.path.clone(),
        sha256: series.sha256.clone(),
        len: series.len(),
    });
    if cfg.data.path.is_none() {
        out.manifest.seeds.insert("synthetic".into(), cfg.data.synthetic_seed);
    }
    out.manifest.seeds.insert("network".into(), cfg.qrc.network_seed);
    out.manifest.seeds.insert("noise".into(), cfg.qrc.noise_seed);
    Ok(series.values)
}

fn qrc_run(cfg: &Config, out: &mut Outputs) -> Result<()> {
    let series = dataset(cfg, out)?;
    let rc = cfg.reservoir_config();
    let result = forecast(&rc, &series, cfg.split, cfg.qrc.lambda)?;
    log::info!(
        "test NMSE {:.4e} (constant predictor {:.4e})",
        result.test_nmse,
        result.baseline_test_nmse
    );
    out.json("forecast.json", &result)?;
    out.csv("predictions.csv", &result.prediction_rows())
}

fn qrc_sweep(cfg: &Config, out: &mut Outputs) -> Result<()> {
    let series = dataset(cfg, out)?;
    let rows = run_sweep(&cfg.sweep_spec(), &series)?;
    log::info!("{} sweep rows", rows.len());
    out.csv("sweep.csv", &rows)
}

/// Cutoff from the config: fixed and checked, or searched.
fn resolve_cutoff(cfg: &Config, params: &ResonatorParams, force: bool) -> Result<(usize, f64, DensityMatrix)> {
    match cfg.qam.cutoff {
        Some(d) => {
            let (drift, steady) = check_cutoff(params, d)?;
            if drift > cfg.qam.convergence_tolerance {
                if !force {
                    return Err(Error::CutoffNotConverged { max_cutoff: d, drift });
                }
                log::warn!("cutoff {d} not converged (drift {drift:.3e}); continuing because of --force");
            }
            Ok((d, drift, steady))
        }
        None => {
            let r = converge_cutoff(params, &cfg.qam.cutoff_search())?;
            Ok((r.accepted, r.drift, r.steady))
        }
    }
}

#[derive(Serialize)]
struct SteadySummary {
    params: ResonatorParams,
    cutoff: usize,
    cutoff_drift: f64,
    lobe_amplitude: Option<f64>,
    mean_photon: f64,
    mandel_q: Option<f64>,
    mean_a: (f64, f64),
    purity: f64,
    trace_distance_under_rotation: f64,
    state: DensityMatrix,
}

fn qam_steady(cfg: &Config, force: bool, out: &mut Outputs) -> Result<()> {
    let params = cfg.qam.params(None, None)?;
    let (cutoff, drift, rho) = resolve_cutoff(cfg, &params, force)?;
    let amplitude = params.lobe_amplitude().ok();
    let grid = match cfg.wigner.extent {
        Some(e) => Grid::square(e, cfg.wigner.resolution)?,
        None => Grid::covering(&rho, 4.0, cfg.wigner.resolution)?,
    };
    let w = wigner(&rho, &grid)?;
    let a = rho.mean_a();
    let rotated = rho.rotated(2.0 * std::f64::consts::PI / params.n as f64);
    let summary = SteadySummary {
        params,
        cutoff,
        cutoff_drift: drift,
        lobe_amplitude: amplitude,
        mean_photon: rho.mean_photon_number(),
        mandel_q: mandel_q(&rho).ok(),
        mean_a: (a.re, a.im),
        purity: rho.purity(),
        trace_distance_under_rotation: rotated.trace_distance(&rho)?,
        state: rho.clone(),
    };
    log::info!(
        "steady state at D = {cutoff}: <n> = {:.4}, Q = {:?}",
        summary.mean_photon,
        summary.mandel_q
    );
    out.json("steady.json", &summary)?;
    out.csv("wigner.csv", &wigner_rows(&grid, &w))?;
    out.csv("fock.csv", &fock_rows(&rho))
}

#[derive(Serialize)]
struct SpectrumSummary {
    params: ResonatorParams,
    cutoff: usize,
    gap_ratio: Option<f64>,
    window: Option<MetastableWindow>,
    diagnostic: Option<String>,
}

fn qam_spectrum(cfg: &Config, force: bool, out: &mut Outputs) -> Result<()> {
    let params = cfg.qam.params(None, None)?;
    let (cutoff, _, _) = resolve_cutoff(cfg, &params, force)?;
    let l = Liouvillian::new(&params, FockSpace::new(cutoff)?)?;
    let pairs = spectrum(&l, &SpectrumOptions::new(cfg.qam.eigenvalues))?;
    let values: Vec<_> = pairs.iter().map(|p| p.value).collect();
    let n = params.n;
    let slow = values[1..n].iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let gap_ratio = (slow > 0.0).then(|| values[n].re.abs() / slow);
    let (window, diagnostic) = match window_from_eigenvalues(&values, n, &cfg.qam.window_options()) {
        Ok(w) => (Some(w), None),
        Err(Error::NoMetastableWindow(msg)) => {
            log::warn!("no metastable window: {msg}");
            (None, Some(msg))
        }
        Err(e) => return Err(e),
    };
    out.csv("eigenvalues.csv", &eigenvalue_rows(&values))?;
    out.json(
        "spectrum.json",
        &SpectrumSummary {
            params,
            cutoff,
            gap_ratio,
            window,
            diagnostic,
        },
    )
}

#[derive(Serialize)]
struct LobeSummary {
    index: usize,
    phase: f64,
    mean_a: (f64, f64),
    mean_photon: f64,
    mandel_q: f64,
}

#[derive(Serialize)]
struct SetupSummary {
    params: ResonatorParams,
    cutoff: usize,
    cutoff_drift: f64,
    window: MetastableWindow,
    eigenvalues: Vec<(f64, f64)>,
    lobe_amplitude: f64,
    lobes: Vec<LobeSummary>,
}

impl SetupSummary {
    fn of(s: &QamSetup) -> Self {
        Self {
            params: s.params,
            cutoff: s.cutoff,
            cutoff_drift: s.cutoff_drift,
            window: s.window,
            eigenvalues: s.eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
            lobe_amplitude: s.lobes.amplitude,
            lobes: s
                .lobes
                .lobes
                .iter()
                .map(|l| LobeSummary {
                    index: l.index,
                    phase: l.phase,
                    mean_a: l.mean_a,
                    mean_photon: l.mean_photon,
                    mandel_q: l.mandel_q,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct TrajectorySummary {
    index: usize,
    apriori_lobe: usize,
    assigned_lobe: usize,
    phase_lobe: usize,
    jumps: usize,
}

#[derive(Serialize)]
struct TrajectoriesReport {
    setup: SetupSummary,
    initial_cutoff: usize,
    t_max: f64,
    trajectories: Vec<TrajectorySummary>,
}

fn qam_trajectories(cfg: &Config, force: bool, out: &mut Outputs) -> Result<()> {
    let params = cfg.qam.params(None, None)?;
    let setup = QamSetup::prepare(&params, &cfg.qam.setup_options(force))?;
    let t = &cfg.trajectories;
    let psi0 = probe_state(
        setup.lobes.amplitude,
        t.amplitude_scale,
        t.amplitude_phase,
        t.squeezing,
        t.squeezing_phase,
        setup.cutoff,
    )?;
    let d = psi0.cutoff();
    let engine = McEngine::new(&params, FockSpace::new(d)?, setup.dt)?;
    let lobes = setup.lobes.embed(d)?;
    let t_max = t.t_max.unwrap_or(setup.window.assessed_end).max(setup.window.assessed_end);
    out.manifest.seeds.insert("trajectories".into(), t.seed);
    let runs = (0..t.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(t.seed, i);
            setup.assess(&engine, &lobes, &psi0, i, &mut rng, Some(t_max))
        })
        .collect::<Result<Vec<_>>>()?;
    let width = (t.count.saturating_sub(1)).to_string().len().max(3);
    let mut jumps = Vec::new();
    for r in &runs {
        out.csv(&format!("trajectories/trajectory_{:0width$}.csv", r.record.index), &r.record.rows())?;
        jumps.extend(r.record.jump_rows());
    }
    out.csv("jumps.csv", &jumps)?;
    let report = TrajectoriesReport {
        setup: SetupSummary::of(&setup),
        initial_cutoff: d,
        t_max,
        trajectories: runs
            .iter()
            .map(|r| TrajectorySummary {
                index: r.record.index,
                apriori_lobe: r.apriori,
                assigned_lobe: r.assigned,
                phase_lobe: r.phase,
                jumps: r.record.jumps.len(),
            })
            .collect(),
    };
    out.json("trajectories.json", &report)
}

#[derive(Serialize)]
struct Skipped {
    m: usize,
    mean_photon: f64,
    reason: String,
}

#[derive(Serialize)]
struct SuccessReport {
    results: Vec<SuccessResult>,
    skipped: Vec<Skipped>,
}

fn qam_success(cfg: &Config, force: bool, out: &mut Outputs) -> Result<()> {
    let s = &cfg.success;
    let ms = if s.m.is_empty() { vec![cfg.qam.m] } else { s.m.clone() };
    let spec = SuccessSpec {
        trajectories: s.trajectories,
        seed: s.seed,
        amplitude_min: s.amplitude_min,
        amplitude_max: s.amplitude_max,
        squeezing_max: s.squeezing_max,
    };
    out.manifest.seeds.insert("success".into(), s.seed);
    let mut report = SuccessReport {
        results: Vec::new(),
        skipped: Vec::new(),
    };
    for &m in &ms {
        for &p in &s.mean_photon {
            let params = cfg.qam.params(Some(m), Some(p))?;
            let setup = match QamSetup::prepare(&params, &cfg.qam.setup_options(force)) {
                Ok(s) => s,
                Err(Error::NoMetastableWindow(reason)) => {
                    log::warn!("m = {m}, <n> = {p}: skipped, no metastable window ({reason})");
                    report.skipped.push(Skipped { m, mean_photon: p, reason });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let run = SuccessRun::new(&setup, &spec)?;
            let trials = run.trials(0)?;
            let r = run.summarize(p, &trials);
            log::info!(
                "m = {m}, <n> = {p}: p = {:.3} +- {:.3} (baseline {:.3}), phase agreement {:.3}",
                r.p_hat,
                r.stderr,
                r.baseline,
                r.phase_agreement
            );
            report.results.push(r);
        }
    }
    let rows: Vec<_> = report.results.iter().map(|r| r.row()).collect();
    out.csv("success.csv", &rows)?;
    out.json("success.json", &report)?;
    if report.results.is_empty() {
        return Err(Error::NoMetastableWindow("no setting has a metastable window".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct BasinReport {
    setup: SetupSummary,
    regions_per_ring: Vec<usize>,
    angular_partition: bool,
}

fn qam_basins(cfg: &Config, force: bool, out: &mut Outputs) -> Result<()> {
    let params = cfg.qam.params(None, None)?;
    let setup = QamSetup::prepare(&params, &cfg.qam.setup_options(force))?;
    let b = &cfg.basins;
    let spec = BasinSpec {
        radial_points: b.radial_points,
        angular_points: b.angular_points,
        amplitude_min: b.amplitude_min,
        amplitude_max: b.amplitude_max,
    };
    let points = basins(&setup, &spec)?;
    let report = BasinReport {
        setup: SetupSummary::of(&setup),
        regions_per_ring: angular_regions(&points, spec.angular_points),
        angular_partition: is_angular_partition(&points, spec.angular_points, params.n),
    };
    log::info!("regions per ring {:?}", report.regions_per_ring);
    out.csv("basins.csv", &points)?;
    out.json("basins.json", &report)
}

#[derive(Serialize)]
struct ConvergenceReport {
    params: ResonatorParams,
    converged: bool,
    accepted: Option<usize>,
    drift: f64,
    tolerance: f64,
    history: Vec<CutoffStep>,
}

fn check_convergence(cfg: &Config, out: &mut Outputs) -> Result<()> {
    let params = cfg.qam.params(None, None)?;
    let tolerance = cfg.qam.convergence_tolerance;
    let (report, failure) = match cfg.qam.cutoff {
        Some(d) => {
            let (drift, _) = check_cutoff(&params, d)?;
            let ok = drift <= tolerance;
            let report = ConvergenceReport {
                params,
                converged: ok,
                accepted: ok.then_some(d),
                drift,
                tolerance,
                history: vec![CutoffStep { cutoff: d, drift }],
            };
            (report, (!ok).then_some(Error::CutoffNotConverged { max_cutoff: d, drift }))
        }
        None => match converge_cutoff(&params, &cfg.qam.cutoff_search()) {
            Ok(r) => (
                ConvergenceReport {
                    params,
                    converged: true,
                    accepted: Some(r.accepted),
                    drift: r.drift,
                    tolerance,
                    history: r.history,
                },
                None,
            ),
            Err(Error::CutoffNotConverged { max_cutoff, drift }) => (
                ConvergenceReport {
                    params,
                    converged: false,
                    accepted: None,
                    drift,
                    tolerance,
                    history: Vec::new(),
                },
                Some(Error::CutoffNotConverged { max_cutoff, drift }),
            ),
            Err(e) => return Err(e),
        },
    };
    match report.accepted {
        Some(d) => log::info!("accepted cutoff {d} (drift {:.3e})", report.drift),
        None => log::warn!("cutoff not converged (drift {:.3e})", report.drift),
    }
    out.json("convergence.json", &report)?;
    failure.map_or(Ok(()), Err)
}
