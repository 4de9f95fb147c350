use serde::{Deserialize, Serialize};

use super::GaussianState;
use crate::error::{Error, Result};

/// Homodyne x-quadrature moments of an `N`-mode state.
///
/// Layout, each family in lexicographic `(i, j)` order:
/// 1. `<x_i x_j>` for `i <= j`
/// 2. `<x_i^2 x_j^2>` for `i <= j`
/// 3. `<x_i^3 x_j>` for `i != j`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableVector {
    pub modes: usize,
    pub values: Vec<f64>,
}

impl ObservableVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `N(N+1) + N(N-1)`.
pub fn observable_len(modes: usize) -> usize {
    modes * (modes + 1) + modes * modes.saturating_sub(1)
}

/// Column labels matching [`homodyne_moments`], e.g. `xx_0_1`, `x2x2_0_0`, `x3x_1_0`.
pub fn moment_labels(modes: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(observable_len(modes));
    for i in 0..modes {
        for j in i..modes {
            out.push(format!("xx_{i}_{j}"));
        }
    }
    for i in 0..modes {
        for j in i..modes {
            out.push(format!("x2x2_{i}_{j}"));
        }
    }
    for i in 0..modes {
        for j in 0..modes {
            if i != j {
                out.push(format!("x3x_{i}_{j}"));
            }
        }
    }
    out
}

/// Second and fourth x-moments from Wick's theorem on the x-x block.
pub fn homodyne_moments(state: &GaussianState) -> Result<ObservableVector> {
    if let Some(m) = state.mean().iter().find(|m| **m != 0.0) {
        return Err(Error::InvalidParameter(format!(
            "homodyne moments need a zero-mean state (found mean entry {m})"
        )));
    }
    let n = state.modes();
    let cov = state.covariance();
    let s = |i: usize, j: usize| cov[(2 * i, 2 * j)];
    let mut values = Vec::with_capacity(observable_len(n));
    for i in 0..n {
        for j in i..n {
            values.push(s(i, j));
        }
    }
    for i in 0..n {
        for j in i..n {
            values.push(s(i, i) * s(j, j) + 2.0 * s(i, j) * s(i, j));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values.push(3.0 * s(i, i) * s(i, j));
            }
        }
    }
    Ok(ObservableVector { modes: n, values })
}
