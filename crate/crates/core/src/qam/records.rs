use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use super::experiment::{BasinPoint, SuccessRow};
use super::trajectory::{JumpRow, TrajectoryRow};
use crate::fock::{DensityMatrix, Grid, Populations};
use crate::io::CsvRecord;

/// One Wigner grid value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerRow {
    pub x: f64,
    pub p: f64,
    pub w: f64,
}

/// Photon-number probability `p_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockRow {
    pub k: usize,
    pub p_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRow {
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

impl CsvRecord for WignerRow {
    const HEADER: &'static [&'static str] = &["x", "p", "w"];
}

impl CsvRecord for FockRow {
    const HEADER: &'static [&'static str] = &["k", "p_k"];
}

impl CsvRecord for EigenvalueRow {
    const HEADER: &'static [&'static str] = &["index", "re", "im"];
}

impl CsvRecord for TrajectoryRow {
    const HEADER: &'static [&'static str] = &["t", "re_a", "im_a", "mean_photon", "mandel_q", "assigned_lobe"];
}

impl CsvRecord for JumpRow {
    const HEADER: &'static [&'static str] = &["trajectory", "t", "operator"];
}

impl CsvRecord for SuccessRow {
    const HEADER: &'static [&'static str] = &["n", "m", "mean_photon", "trajectories", "p_hat", "stderr", "baseline"];
}

impl CsvRecord for BasinPoint {
    const HEADER: &'static [&'static str] = &["re_alpha", "im_alpha", "assigned_lobe"];
}

/// Grid values in `x`-major order.
pub fn wigner_rows(grid: &Grid, w: &Mat<f64>) -> Vec<WignerRow> {
    let (xs, ps) = (grid.xs(), grid.ps());
    xs.iter()
        .enumerate()
        .flat_map(|(i, &x)| ps.iter().enumerate().map(move |(j, &p)| (i, j, x, p)))
        .map(|(i, j, x, p)| WignerRow { x, p, w: w[(i, j)] })
        .collect()
}

pub fn fock_rows(rho: &DensityMatrix) -> Vec<FockRow> {
    rho.populations()
        .into_iter()
        .enumerate()
        .map(|(k, p_k)| FockRow { k, p_k })
        .collect()
}

pub fn eigenvalue_rows(values: &[c64]) -> Vec<EigenvalueRow> {
    values
        .iter()
        .enumerate()
        .map(|(index, z)| EigenvalueRow {
            index,
            re: z.re,
            im: z.im,
        })
        .collect()
}
