use faer::{c64, Mat};

use super::{FockSpace, ResonatorParams};
use crate::error::Result;

/// Sparse `D x D` operator as `(row, col, value)` entries without duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    pub dim: usize,
    pub entries: Vec<(usize, usize, c64)>,
}

impl SparseOp {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> SparseOp {
        SparseOp {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect(),
        }
    }

    /// `self * other`, merging duplicate positions.
    pub fn mul(&self, other: &SparseOp) -> SparseOp {
        let mut acc = std::collections::BTreeMap::new();
        for &(i, k, a) in &self.entries {
            for &(k2, j, b) in &other.entries {
                if k == k2 {
                    *acc.entry((i, j)).or_insert(c64::new(0.0, 0.0)) += a * b;
                }
            }
        }
        SparseOp {
            dim: self.dim,
            entries: acc.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[c64], y: &mut [c64]) {
        y.iter_mut().for_each(|v| *v = c64::new(0.0, 0.0));
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
    }
}

/// `a^k` with `a |j> = sqrt(j) |j-1>`.
pub fn lowering_power(space: FockSpace, k: usize) -> SparseOp {
    let d = space.cutoff();
    let entries = (k..d)
        .map(|j| {
            let c: f64 = ((j - k + 1)..=j).map(|q| q as f64).product::<f64>().sqrt();
            (j - k, j, c64::new(c, 0.0))
        })
        .collect();
    SparseOp { dim: d, entries }
}

/// Dense `(a, a^dag, n)`. The truncated `a^dag` maps `|D-1>` to zero, so
/// `[a, a^dag]` equals the identity except in the last diagonal entry.
pub fn ladder_operators(space: FockSpace) -> (Mat<c64>, Mat<c64>, Mat<c64>) {
    let a = lowering_power(space, 1).to_dense();
    let ad = a.adjoint().to_owned();
    let d = space.cutoff();
    let n = Mat::<c64>::from_fn(d, d, |i, j| if i == j { c64::new(i as f64, 0.0) } else { c64::new(0.0, 0.0) });
    (a, ad, n)
}

/// `H = Delta a^dag a + i eta (a^n - a^dag^n)`.
pub fn hamiltonian(params: &ResonatorParams, space: FockSpace) -> Result<SparseOp> {
    params.validate()?;
    if space.cutoff() <= params.n {
        return Err(crate::Error::InsufficientCutoff {
            cutoff: space.cutoff(),
            reason: format!("must exceed drive order n = {}", params.n),
        });
    }
    let d = space.cutoff();
    let mut entries: Vec<(usize, usize, c64)> = (0..d)
        .filter(|&k| params.delta != 0.0 && k > 0)
        .map(|k| (k, k, c64::new(params.delta * k as f64, 0.0)))
        .collect();
    if params.eta != 0.0 {
        for (i, j, c) in lowering_power(space, params.n).entries {
            entries.push((i, j, c * c64::new(0.0, params.eta)));
            entries.push((j, i, c * c64::new(0.0, -params.eta)));
        }
    }
    entries.sort_by_key(|e| (e.1, e.0));
    Ok(SparseOp { dim: d, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff_c;

    #[test]
    fn lowering_operator_d3() {
        let (a, ad, n) = ladder_operators(FockSpace::new(3).unwrap());
        let s2 = 2f64.sqrt();
        let want = [[0.0, 1.0, 0.0], [0.0, 0.0, s2], [0.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(i, j)], c64::new(want[i][j], 0.0));
            }
            assert_eq!(n[(i, i)].re, i as f64);
        }
        let comm = &a * &ad - &ad * &a;
        assert!((comm[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((comm[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!((comm[(2, 2)].re - (-2.0)).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_entries_n2() {
        let p = ResonatorParams {
            n: 2,
            m: 2,
            delta: 0.0,
            eta: 0.7,
            gamma_m: 0.2,
        };
        let h = hamiltonian(&p, FockSpace::new(4).unwrap()).unwrap().to_dense();
        let s2 = 2f64.sqrt();
        let s6 = 6f64.sqrt();
        assert!((h[(0, 2)] - c64::new(0.0, 0.7 * s2)).norm() < 1e-15);
        assert!((h[(2, 0)] - c64::new(0.0, -0.7 * s2)).norm() < 1e-15);
        assert!((h[(1, 3)] - c64::new(0.0, 0.7 * s6)).norm() < 1e-15);
        assert!((h[(3, 1)] - c64::new(0.0, -0.7 * s6)).norm() < 1e-15);
        assert!(max_abs_diff_c(h.as_ref(), h.adjoint().to_owned().as_ref()) < 1e-15);
    }

    #[test]
    fn undriven_hamiltonian_is_diagonal() {
        let p = ResonatorParams {
            n: 3,
            m: 4,
            delta: 0.4,
            eta: 0.0,
            gamma_m: 0.2,
        };
        let h = hamiltonian(&p, FockSpace::new(6).unwrap()).unwrap().to_dense();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 0.4 * i as f64 } else { 0.0 };
                assert!((h[(i, j)] - c64::new(want, 0.0)).norm() < 1e-15);
            }
        }
        assert!(hamiltonian(&p, FockSpace::new(3).unwrap()).is_err());
    }
}
