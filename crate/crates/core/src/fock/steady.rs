use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};

use super::liouvillian::Liouvillian;
use super::states::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::ZERO;

/// Relative residual `||L x|| / (||L||_1 ||x||)` accepted for a steady state.
pub const STEADY_RESIDUAL: f64 = 1e-8;

/// Solves `L x = 0` with one equation replaced by `tr(rho) = 1`.
fn bordered_solve(l: &Liouvillian, replaced_row: usize) -> Result<Vec<c64>> {
    let d = l.cutoff();
    let n = l.dim();
    let mut trip: Vec<Triplet<usize, usize, c64>> = l
        .entries()
        .iter()
        .filter(|e| e.0 != replaced_row)
        .map(|&(r, c, v)| Triplet::new(r, c, v))
        .collect();
    trip.extend((0..d).map(|k| Triplet::new(replaced_row, k * (d + 1), c64::new(1.0, 0.0))));
    let a = SparseColMat::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| Error::AmbiguousSteadyState(format!("bordered system is singular: {e:?}")))?;
    let mut b = Mat::<c64>::zeros(n, 1);
    b[(replaced_row, 0)] = c64::new(1.0, 0.0);
    lu.solve_in_place(b.as_mut());
    Ok((0..n).map(|i| b[(i, 0)]).collect())
}

fn residual(l: &Liouvillian, x: &[c64]) -> f64 {
    let y = l.apply(x);
    let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    ny / (l.norm_1() * nx).max(f64::MIN_POSITIVE)
}

/// Unique stationary state of a trace-preserving generator.
///
/// The system is solved twice, with the normalization replacing two
/// different population equations; a one-dimensional null space gives the
/// same answer both times, anything else is reported as ambiguous.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let tp = l.trace_preservation_error();
    if tp > 1e-10 * l.norm_1().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "generator is not trace preserving (error {tp:e})"
        )));
    }
    let d = l.cutoff();
    let x = bordered_solve(l, 0)?;
    let y = bordered_solve(l, (d - 1) * (d + 1))?;
    let finite = |v: &[c64]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    if !finite(&x) || !finite(&y) {
        return Err(Error::AmbiguousSteadyState("bordered system is singular".into()));
    }
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let gap = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let res = residual(l, &x);
    if gap > 1e-6 * scale || res > STEADY_RESIDUAL {
        return Err(Error::AmbiguousSteadyState(format!(
            "bordered solutions differ by {gap:.2e}, residual {res:.2e}"
        )));
    }
    let x: Vec<c64> = x.into_iter().map(|z| if z.norm() < 1e-300 { ZERO } else { z }).collect();
    DensityMatrix::from_vectorized(d, &x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FockSpace, ResonatorParams};

    #[test]
    fn undriven_relaxes_to_vacuum() {
        let p = ResonatorParams {
            n: 3,
            m: 4,
            delta: 0.4,
            eta: 0.0,
            gamma_m: 0.2,
        };
        let l = Liouvillian::new(&p, FockSpace::new(8).unwrap()).unwrap();
        let rho = steady_state(&l).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(rho.populations_tail() < 1e-12);
    }

    #[test]
    fn zero_generator_is_ambiguous() {
        let l = Liouvillian::from_entries(3, vec![]).unwrap();
        assert!(matches!(steady_state(&l), Err(Error::AmbiguousSteadyState(_))));
    }

    #[test]
    fn two_dark_states_are_ambiguous() {
        // |2><2| decays to |0><0| only; |1><1| is a second fixed point
        let d = 3;
        let idx = |i: usize, j: usize| i + d * j;
        let mut e = vec![
            (idx(0, 0), idx(2, 2), c64::new(1.0, 0.0)),
            (idx(2, 2), idx(2, 2), c64::new(-1.0, 0.0)),
        ];
        for k in 0..d {
            for q in 0..d {
                if k != q {
                    e.push((idx(k, q), idx(k, q), c64::new(-1.0, 0.0)));
                }
            }
        }
        let l = Liouvillian::from_entries(d, e).unwrap();
        assert!(l.trace_preservation_error() < 1e-15);
        assert!(matches!(steady_state(&l), Err(Error::AmbiguousSteadyState(_))));
    }

    trait Tail {
        fn populations_tail(&self) -> f64;
    }

    impl Tail for DensityMatrix {
        fn populations_tail(&self) -> f64 {
            use crate::fock::states::Populations;
            self.populations()[1..].iter().map(|p| p.abs()).sum()
        }
    }
}
