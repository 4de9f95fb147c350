//! Zero-mean multimode Gaussian states.
//!
//! Quadratures are ordered `R = (x1, p1, ..., xN, pN)` with the vacuum
//! variance fixed at 1/2, so the vacuum covariance matrix is `I/2` and the
//! symplectic form is `N` copies of `[[0, 1], [-1, 0]]` on the diagonal.

mod moments;
mod state;
mod symplectic;

pub use moments::{homodyne_moments, moment_labels, observable_len, ObservableVector};
pub use state::{GaussianState, SqueezingSpec};
pub use symplectic::Symplectic;

use faer::Mat;

/// Variance of each vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Symplectic form for `modes` modes in `(x1, p1, ...)` ordering.
pub fn symplectic_form(modes: usize) -> Mat<f64> {
    Mat::from_fn(2 * modes, 2 * modes, |i, j| {
        if i / 2 != j / 2 {
            0.0
        } else if i % 2 == 0 && j == i + 1 {
            1.0
        } else if i % 2 == 1 && j + 1 == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// Squeezing strength expressed in decibels, `10 log10(e^-xi)`.
pub fn squeezing_db(xi: f64) -> f64 {
    10.0 * (-xi).exp().log10()
}

/// Inverse of [`squeezing_db`].
pub fn squeezing_from_db(db: f64) -> f64 {
    -(10f64.powf(db / 10.0)).ln()
}
