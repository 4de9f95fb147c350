//! Small dense linear-algebra helpers shared by the Gaussian and Fock engines.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

pub(crate) const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// Maximum absolute element-wise difference of two real matrices.
pub fn max_abs_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    worst
}

/// Maximum absolute element-wise difference of two complex matrices.
pub fn max_abs_diff_c(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

fn norm_1(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn lincomb(n: usize, terms: &[(f64, &Mat<c64>)], identity: f64) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(n, n);
    for (coef, m) in terms {
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] += m[(i, j)] * *coef;
            }
        }
    }
    for i in 0..n {
        out[(i, i)] += c64::new(identity, 0.0);
    }
    out
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.ncols(),
        });
    }
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("expm of non-finite matrix".into()));
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a = Mat::<c64>::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = lincomb(n, &[(b[13], &a6), (b[11], &a4), (b[9], &a2)], 0.0);
    let u_poly = &a6 * &inner_u + lincomb(n, &[(b[7], &a6), (b[5], &a4), (b[3], &a2)], b[1]);
    let u = &a * &u_poly;
    let inner_v = lincomb(n, &[(b[12], &a6), (b[10], &a4), (b[8], &a2)], 0.0);
    let v = &a6 * &inner_v + lincomb(n, &[(b[6], &a6), (b[4], &a4), (b[2], &a2)], b[0]);

    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom.partial_piv_lu().solve(&numer);
    for _ in 0..s {
        r = &r * &r;
    }
    if r.as_ref().col_iter().any(|c| c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(Error::Numerical("expm produced non-finite entries".into()));
    }
    Ok(r)
}

/// Inner product `<x, y>` (conjugate-linear in `x`).
pub(crate) fn dot_c(x: &[c64], y: &[c64]) -> c64 {
    x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

pub(crate) fn norm_sqr_c(x: &[c64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Dense matrix-vector product into a preallocated buffer.
pub(crate) fn matvec_into(m: MatRef<'_, c64>, x: &[c64], out: &mut [c64]) {
    out.iter_mut().for_each(|z| *z = ZERO);
    for (j, xj) in x.iter().enumerate() {
        if *xj == ZERO {
            continue;
        }
        let col = m.col(j);
        for (o, mij) in out.iter_mut().zip(col.iter()) {
            *o += mij * xj;
        }
    }
}
