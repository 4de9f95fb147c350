use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Linear readout `y = w . x + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedReadout {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

impl TrainedReadout {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn predict(&self, rows: MatRef<'_, f64>) -> Vec<f64> {
        (0..rows.nrows())
            .map(|i| self.bias + (0..rows.ncols()).map(|j| self.weights[j] * rows[(i, j)]).sum::<f64>())
            .collect()
    }
}

/// `1e-9 * tr(Xc^T Xc) / features` for the centred design matrix, floored at
/// `1e-300` so a fully constant design still gets a positive ridge.
pub fn default_lambda(centred_gram_trace: f64, features: usize) -> f64 {
    (1e-9 * centred_gram_trace / features.max(1) as f64).max(1e-300)
}

/// Ridge regression with an unpenalized bias on rows `washout..`.
///
/// Columns are centred on the training rows so the bias absorbs the means.
/// With a ridge, columns whose spread is below `1e-12` of the largest entry
/// carry no information and get weight zero. `lambda = None` picks
/// [`default_lambda`]; an explicit `Some(0.0)` is ordinary least squares on
/// every column and fails on a singular Gram matrix.
pub fn train_readout(
    rows: MatRef<'_, f64>,
    targets: &[f64],
    washout: usize,
    lambda: Option<f64>,
) -> Result<TrainedReadout> {
    if rows.nrows() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.nrows(),
            actual: targets.len(),
        });
    }
    ensure(washout < rows.nrows(), || {
        format!("washout {washout} leaves no training rows out of {}", rows.nrows())
    })?;
    if let Some(l) = lambda {
        ensure(l >= 0.0 && l.is_finite(), || format!("ridge lambda must be finite and >= 0, got {l}"))?;
    }
    let t = rows.nrows() - washout;
    let f = rows.ncols();
    let x = rows.subrows(washout, t);
    let y = &targets[washout..];

    let means: Vec<f64> = (0..f).map(|j| x.col(j).iter().sum::<f64>() / t as f64).collect();
    let y_mean = y.iter().sum::<f64>() / t as f64;
    let exact = lambda == Some(0.0);
    let scale = x
        .col_iter()
        .flat_map(|c| c.iter().copied())
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let active: Vec<usize> = (0..f)
        .filter(|&j| {
            if exact {
                return true;
            }
            let spread = x.col(j).iter().map(|v| (v - means[j]).abs()).fold(0.0, f64::max);
            spread > 1e-12 * scale
        })
        .collect();

    let xc = Mat::<f64>::from_fn(t, active.len(), |i, k| x[(i, active[k])] - means[active[k]]);
    let yc = Mat::<f64>::from_fn(t, 1, |i, _| y[i] - y_mean);
    let mut gram = xc.transpose() * &xc;
    let trace: f64 = (0..active.len()).map(|k| gram[(k, k)]).sum();
    let lam = lambda.unwrap_or_else(|| default_lambda(trace, active.len()));
    for k in 0..active.len() {
        gram[(k, k)] += lam;
    }
    let rhs = xc.transpose() * &yc;

    let w_active = if active.is_empty() {
        Mat::<f64>::zeros(0, 1)
    } else {
        match gram.llt(Side::Lower) {
            Ok(llt) => llt.solve(&rhs),
            Err(_) if lam > 0.0 => gram.partial_piv_lu().solve(&rhs),
            Err(_) => {
                return Err(Error::Singular(
                    "normal equations are singular; use a positive ridge lambda".into(),
                ))
            }
        }
    };
    let mut weights = vec![0.0; f];
    for (k, &j) in active.iter().enumerate() {
        weights[j] = w_active[(k, 0)];
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Singular("readout weights are not finite".into()));
    }
    let bias = y_mean - weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
    Ok(TrainedReadout {
        weights,
        bias,
        lambda: lam,
    })
}

/// `<(y - yhat)^2> / <yhat^2>` where `yhat` are the targets.
pub fn nmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    ensure(!targets.is_empty(), || "nmse of an empty set".into())?;
    let norm: f64 = targets.iter().map(|t| t * t).sum();
    ensure(norm > 0.0, || "nmse undefined for all-zero targets".into())?;
    let err: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(err / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nmse_hand_values() {
        assert_eq!(nmse(&[1.0, 2.0], &[2.0, 2.0]).unwrap(), 0.125);
        assert_eq!(nmse(&[0.0, 0.0, 0.0], &[1.0, -2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(nmse(&[1.0, -2.0], &[1.0, -2.0]).unwrap(), 0.0);
        assert!(nmse(&[1.0], &[0.0]).is_err());
        assert!(nmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_targets_give_zero_readout() {
        let rows = Mat::from_fn(30, 4, |i, j| ((i * 7 + j * 3) % 11) as f64);
        let r = train_readout(rows.as_ref(), &[0.0; 30], 5, None).unwrap();
        assert!(r.weights.iter().all(|w| w.abs() < 1e-12));
        assert!(r.bias.abs() < 1e-12);
    }

    #[test]
    fn constant_rows_with_zero_lambda_are_singular() {
        let rows = Mat::from_fn(10, 3, |_, j| 1.0 + j as f64);
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(
            train_readout(rows.as_ref(), &y, 0, Some(0.0)),
            Err(Error::Singular(_))
        ));
        // with a ridge the constant columns are dropped and the bias fits the mean
        let r = train_readout(rows.as_ref(), &y, 0, None).unwrap();
        assert!(r.weights.iter().all(|w| *w == 0.0));
        assert!((r.bias - 4.5).abs() < 1e-12);
        let dup = Mat::from_fn(10, 2, |i, _| i as f64);
        assert!(matches!(
            train_readout(dup.as_ref(), &y, 0, Some(0.0)),
            Err(Error::Singular(_))
        ));
    }
}
