use std::collections::HashMap;

use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};

use super::operators::{hamiltonian, lowering_power, SparseOp};
use super::{FockSpace, ResonatorParams};
use crate::error::{Error, Result};

/// Sparse `D^2 x D^2` generator acting on column-major `vec(rho)`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    cutoff: usize,
    /// Sorted by `(col, row)`, no duplicates.
    entries: Vec<(usize, usize, c64)>,
    matrix: SparseColMat<usize, c64>,
}

struct Builder {
    d: usize,
    acc: HashMap<(usize, usize), c64>,
}

impl Builder {
    fn add(&mut self, row: usize, col: usize, v: c64) {
        *self.acc.entry((row, col)).or_insert(c64::new(0.0, 0.0)) += v;
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i + self.d * j
    }

    fn hamiltonian(&mut self, h: &SparseOp) {
        let d = self.d;
        for &(i, k, v) in &h.entries {
            for j in 0..d {
                // -i H rho
                self.add(self.idx(i, j), self.idx(k, j), v * c64::new(0.0, -1.0));
                // +i rho H, using H_{kj'} with (k, j') = (i, k) relabelled
                self.add(self.idx(j, k), self.idx(j, i), v * c64::new(0.0, 1.0));
            }
        }
    }

    fn dissipator(&mut self, l: &SparseOp, rate: f64) {
        let d = self.d;
        for &(i, k, a) in &l.entries {
            for &(j, q, b) in &l.entries {
                self.add(self.idx(i, j), self.idx(k, q), a * b.conj() * rate);
            }
        }
        let ldl = l.adjoint().mul(l);
        for &(r, c, v) in &ldl.entries {
            let half = v * (-0.5 * rate);
            for j in 0..d {
                // -1/2 L^dag L rho
                self.add(self.idx(r, j), self.idx(c, j), half);
                // -1/2 rho L^dag L: (rho M)_{j c} = rho_{j r} M_{r c}
                self.add(self.idx(j, c), self.idx(j, r), half);
            }
        }
    }
}

impl Liouvillian {
    pub fn new(params: &ResonatorParams, space: FockSpace) -> Result<Self> {
        params.validate()?;
        params.check_cutoff(space)?;
        Self::from_operators(
            &hamiltonian(params, space)?,
            &[
                (lowering_power(space, 1), ResonatorParams::GAMMA_1),
                (lowering_power(space, params.m), params.gamma_m),
            ],
        )
    }

    /// `-i[H, rho] + sum_k gamma_k D[L_k] rho` for arbitrary operators.
    pub fn from_operators(h: &SparseOp, jumps: &[(SparseOp, f64)]) -> Result<Self> {
        let d = h.dim;
        let mut b = Builder {
            d,
            acc: HashMap::new(),
        };
        b.hamiltonian(h);
        for (l, rate) in jumps {
            if l.dim != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: l.dim,
                });
            }
            b.dissipator(l, *rate);
        }
        let entries = b.acc.into_iter().map(|((r, c), v)| (r, c, v)).collect();
        Self::from_entries(d, entries)
    }

    /// Builds a generator from raw `(row, col, value)` entries on `vec(rho)`
    /// for a `d`-level system; duplicates are summed.
    pub fn from_entries(d: usize, entries: Vec<(usize, usize, c64)>) -> Result<Self> {
        let n = d * d;
        let mut acc: HashMap<(usize, usize), c64> = HashMap::new();
        for (r, c, v) in entries {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: r.max(c) + 1,
                });
            }
            *acc.entry((r, c)).or_insert(c64::new(0.0, 0.0)) += v;
        }
        let mut entries: Vec<(usize, usize, c64)> =
            acc.into_iter().filter(|(_, v)| *v != c64::new(0.0, 0.0)).map(|((r, c), v)| (r, c, v)).collect();
        entries.sort_by_key(|e| (e.1, e.0));
        let trip: Vec<Triplet<usize, usize, c64>> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let matrix = SparseColMat::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
        Ok(Self {
            cutoff: d,
            entries,
            matrix,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// `D^2`.
    pub fn dim(&self) -> usize {
        self.cutoff * self.cutoff
    }

    pub fn entries(&self) -> &[(usize, usize, c64)] {
        &self.entries
    }

    pub fn matrix(&self) -> &SparseColMat<usize, c64> {
        &self.matrix
    }

    pub fn apply(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![c64::new(0.0, 0.0); x.len()];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.dim();
        let mut m = Mat::<c64>::zeros(n, n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest column absolute sum.
    pub fn norm_1(&self) -> f64 {
        let mut col = vec![0.0; self.dim()];
        for &(_, c, v) in &self.entries {
            col[c] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// Max over columns of `|vec(I)^T L e_c|`; zero for a trace-preserving generator.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.cutoff;
        let mut col = vec![c64::new(0.0, 0.0); self.dim()];
        for &(r, c, v) in &self.entries {
            if r % (d + 1) == 0 {
                col[c] += v;
            }
        }
        col.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Index sets of the independent blocks of the generator (connected
    /// components of its sparsity graph), ordered by smallest member.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(r, c, _) in &self.entries {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }
}
