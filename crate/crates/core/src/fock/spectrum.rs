use std::cmp::Ordering;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::liouvillian::Liouvillian;
use crate::error::{Error, Result};
use crate::linalg::{dot_c, norm_sqr_c, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Number of eigenvalues returned.
    pub count: usize,
    /// Real shift of the shift-invert transform.
    pub shift: f64,
    /// Relative Ritz residual accepted as converged.
    pub tolerance: f64,
    /// Largest Krylov basis per block.
    pub max_krylov: usize,
    /// Blocks up to this size are diagonalized densely.
    pub dense_block_limit: usize,
}

impl SpectrumOptions {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            shift: 1e-3,
            tolerance: 1e-11,
            max_krylov: 600,
            dense_block_limit: 400,
        }
    }
}

/// Eigenvalue with its right eigenvector reshaped to a `D x D` matrix.
///
/// Eigenmatrices with nonzero trace are scaled to unit trace; traceless ones
/// to unit Frobenius norm with their largest entry real and positive.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: c64,
    pub matrix: Mat<c64>,
    /// `||L v - lambda v|| / ||v||`.
    pub residual: f64,
}

/// `|Re|` ascending on a 1e-10 grid, so conjugate pairs stay together and
/// are ordered by imaginary part.
fn order(a: &c64, b: &c64) -> Ordering {
    let q = |z: &c64| (z.re.abs() * 1e10).round();
    q(a).total_cmp(&q(b))
        .then(a.im.total_cmp(&b.im))
        .then(b.re.total_cmp(&a.re))
}

fn finish(l: &Liouvillian, value: c64, v: Vec<c64>) -> Eigenpair {
    let d = l.cutoff();
    let lv = l.apply(&v);
    let nv = norm_sqr_c(&v).sqrt();
    let res = lv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - value * b).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / nv.max(f64::MIN_POSITIVE);
    let mut m = Mat::from_fn(d, d, |i, j| v[i + d * j]);
    let tr: c64 = (0..d).map(|i| m[(i, i)]).sum();
    let fro = m.col_iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = if tr.norm() > 1e-6 * fro {
        tr
    } else {
        let big = m
            .col_iter()
            .flat_map(|c| c.iter())
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(ZERO);
        if big == ZERO {
            c64::new(1.0, 0.0)
        } else {
            big / big.norm() * fro
        }
    };
    m.col_iter_mut().for_each(|c| c.iter_mut().for_each(|z| *z /= scale));
    Eigenpair {
        value,
        matrix: m,
        residual: res,
    }
}

/// All eigenpairs of the dense generator, ordered by `|Re|`; the first
/// `count` are returned. Intended as a reference for small cutoffs.
pub fn dense_spectrum(l: &Liouvillian, count: usize) -> Result<Vec<Eigenpair>> {
    let evd = l
        .to_dense()
        .eigen()
        .map_err(|e| Error::NoConvergence(format!("dense eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut idx: Vec<usize> = (0..s.nrows()).collect();
    idx.sort_by(|&a, &b| order(&s[a], &s[b]));
    Ok(idx
        .into_iter()
        .take(count)
        .map(|k| finish(l, s[k], u.col(k).iter().copied().collect()))
        .collect())
}

struct Block<'a> {
    members: &'a [usize],
    entries: Vec<(usize, usize, c64)>,
}

impl Block<'_> {
    fn size(&self) -> usize {
        self.members.len()
    }

    fn lift(&self, local: &[c64], dim: usize) -> Vec<c64> {
        let mut v = vec![ZERO; dim];
        for (k, &g) in self.members.iter().enumerate() {
            v[g] = local[k];
        }
        v
    }
}

fn dense_block(b: &Block<'_>) -> Result<Vec<(c64, Vec<c64>)>> {
    let n = b.size();
    let mut m = Mat::<c64>::zeros(n, n);
    for &(r, c, v) in &b.entries {
        m[(r, c)] += v;
    }
    let evd = m
        .eigen()
        .map_err(|e| Error::NoConvergence(format!("block eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    Ok((0..n).map(|k| (s[k], u.col(k).iter().copied().collect())).collect())
}

/// Shift-invert Arnoldi with full reorthogonalization. The basis is grown
/// until the `want` dominant Ritz values of `(B - sigma)^{-1}` converge.
fn arnoldi_block(b: &Block<'_>, want: usize, opts: &SpectrumOptions, seed: u64) -> Result<Vec<(c64, Vec<c64>)>> {
    let n = b.size();
    let sigma = c64::new(opts.shift, 0.0);
    let mut trip: Vec<Triplet<usize, usize, c64>> = b.entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    trip.extend((0..n).map(|i| Triplet::new(i, i, -sigma)));
    let a = SparseColMat::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| Error::Numerical(format!("shift {} hits the spectrum: {e:?}", opts.shift)))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v0: Vec<c64> = (0..n)
        .map(|_| c64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let nv = norm_sqr_c(&v0).sqrt();
    v0.iter_mut().for_each(|z| *z /= nv);

    let max_m = opts.max_krylov.min(n);
    let mut basis: Vec<Vec<c64>> = vec![v0];
    // h[j] holds column j of the Hessenberg matrix (length j + 2)
    let mut h: Vec<Vec<c64>> = Vec::new();
    let mut rhs = Mat::<c64>::zeros(n, 1);
    let check_every = 10;
    loop {
        let j = h.len();
        for i in 0..n {
            rhs[(i, 0)] = basis[j][i];
        }
        lu.solve_in_place(rhs.as_mut());
        let mut w: Vec<c64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        let mut col = vec![ZERO; j + 2];
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot_c(q, &w);
                col[i] += c;
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = norm_sqr_c(&w).sqrt();
        col[j + 1] = c64::new(beta, 0.0);
        h.push(col);
        let m = j + 1;
        let breakdown = beta <= 1e-14 * h.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        if !breakdown {
            w.iter_mut().for_each(|z| *z /= beta);
            basis.push(w);
        }
        let done = breakdown || m == max_m;
        if !(done || (m >= want + 2 && m % check_every == 0)) {
            continue;
        }
        let hm = Mat::from_fn(m, m, |r, c| if r < h[c].len() { h[c][r] } else { ZERO });
        let evd = hm
            .eigen()
            .map_err(|e| Error::NoConvergence(format!("Ritz eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&p, &q| s[q].norm().total_cmp(&s[p].norm()).then(p.cmp(&q)));
        idx.truncate(want.min(m));
        let hnext = if breakdown { 0.0 } else { beta };
        let converged = idx.iter().all(|&k| {
            let y = u.col(k);
            let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            hnext * y[m - 1].norm() / ny <= opts.tolerance * s[k].norm()
        });
        if converged || breakdown {
            return Ok(idx
                .into_iter()
                .map(|k| {
                    let y = u.col(k);
                    let mut x = vec![ZERO; n];
                    for (c, q) in basis.iter().take(m).enumerate() {
                        let yc = y[c];
                        x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += yc * qi);
                    }
                    (sigma + c64::new(1.0, 0.0) / s[k], x)
                })
                .collect());
        }
        if done {
            return Err(Error::NoConvergence(format!(
                "shift-invert Arnoldi did not converge {want} eigenvalues with {m} Krylov vectors"
            )));
        }
    }
}

/// The `count` eigenvalues nearest the origin, ordered by `|Re|` ascending.
///
/// The generator is split into its independent blocks. Small blocks are
/// diagonalized densely, large ones by shift-invert Arnoldi; each block
/// contributes its `count + 6` eigenvalues closest to the shift.
pub fn spectrum(l: &Liouvillian, opts: &SpectrumOptions) -> Result<Vec<Eigenpair>> {
    if opts.count == 0 || opts.count > l.dim() {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue count {} outside 1..={}",
            opts.count,
            l.dim()
        )));
    }
    let blocks = l.blocks();
    let mut local = vec![0usize; l.dim()];
    let mut owner = vec![0usize; l.dim()];
    for (bi, members) in blocks.iter().enumerate() {
        for (k, &g) in members.iter().enumerate() {
            local[g] = k;
            owner[g] = bi;
        }
    }
    let mut per_block: Vec<Vec<(usize, usize, c64)>> = vec![Vec::new(); blocks.len()];
    for &(r, c, v) in l.entries() {
        per_block[owner[c]].push((local[r], local[c], v));
    }
    let want = opts.count + 6;
    let mut found: Vec<(c64, Vec<c64>)> = Vec::new();
    for (bi, (members, entries)) in blocks.iter().zip(per_block).enumerate() {
        let b = Block { members, entries };
        let pairs = if b.size() <= opts.dense_block_limit {
            let mut all = dense_block(&b)?;
            let sigma = c64::new(opts.shift, 0.0);
            all.sort_by(|p, q| (p.0 - sigma).norm().total_cmp(&(q.0 - sigma).norm()));
            all.truncate(want);
            all
        } else {
            arnoldi_block(&b, want.min(b.size() - 1), opts, bi as u64)?
        };
        found.extend(pairs.into_iter().map(|(val, x)| (val, b.lift(&x, l.dim()))));
    }
    found.sort_by(|p, q| order(&p.0, &q.0));
    found.truncate(opts.count);
    let out: Vec<Eigenpair> = found.into_iter().map(|(val, v)| finish(l, val, v)).collect();
    if let Some(bad) = out.iter().find(|p| p.value.re > 1e-8) {
        log::warn!("eigenvalue {} has positive real part", bad.value);
    }
    Ok(out)
}
