use faer::{c64, Mat};
use proptest::prelude::*;
use qlight_core::fock::{
    coherent, dense_spectrum, evolve, fock_state, integrate, lowering_power, required_cutoff, squeezed_coherent,
    steady_state, wigner, FockSpace, Grid, Liouvillian, Populations, ResonatorParams, SparseOp,
};

fn kron(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let (p, q) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * p, a.ncols() * q, |r, c| a[(r / p, c / q)] * b[(r % p, c % q)])
}

fn dagger(a: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

fn transpose(a: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)])
}

fn conj(a: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj())
}

/// Column-major superoperator from `vec(A X B) = (B^T kron A) vec(X)`.
fn kron_generator(h: &Mat<c64>, jumps: &[(Mat<c64>, f64)]) -> Mat<c64> {
    let d = h.nrows();
    let id = Mat::<c64>::identity(d, d);
    let mi = c64::new(0.0, -1.0);
    let mut l = (kron(&id, h) - kron(&transpose(h), &id)) * faer::Scale(mi);
    for (op, rate) in jumps {
        let ldl = dagger(op) * op;
        let term = kron(&conj(op), op) - (kron(&id, &ldl) + kron(&transpose(&ldl), &id)) * faer::Scale(c64::new(0.5, 0.0));
        l += term * faer::Scale(c64::new(*rate, 0.0));
    }
    l
}

fn max_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

fn params() -> impl Strategy<Value = ResonatorParams> {
    (2usize..=4, 2usize..=4, -1.0f64..1.0, 0.0f64..3.0, 0.05f64..1.0).prop_map(|(n, m, delta, eta, gamma_m)| {
        ResonatorParams {
            n,
            m,
            delta,
            eta,
            gamma_m,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sparse_generator_matches_kron_oracle(p in params()) {
        let space = FockSpace::new(6).unwrap();
        let l = Liouvillian::new(&p, space).unwrap();
        let a = lowering_power(space, 1).to_dense();
        let n_op = dagger(&a) * &a;
        let an = lowering_power(space, p.n).to_dense();
        let i = c64::new(0.0, 1.0);
        let h = n_op * faer::Scale(c64::new(p.delta, 0.0)) + (&an - dagger(&an)) * faer::Scale(i * p.eta);
        let am = lowering_power(space, p.m).to_dense();
        let want = kron_generator(&h, &[(a, 1.0), (am, p.gamma_m)]);
        prop_assert!(max_diff(&l.to_dense(), &want) < 1e-12);
    }

    #[test]
    fn generator_preserves_trace(p in params(), d in 6usize..=12) {
        let l = Liouvillian::new(&p, FockSpace::new(d).unwrap()).unwrap();
        prop_assert!(l.trace_preservation_error() < 1e-12 * l.norm_1());
        let rho0 = fock_state(1, FockSpace::new(d).unwrap()).unwrap().to_density();
        for rho in evolve(&rho0, &l, &[0.3, 1.7]).unwrap() {
            prop_assert!((rho.trace() - c64::new(1.0, 0.0)).norm() < 1e-10);
            prop_assert!(rho.hermiticity_error() < 1e-10);
        }
    }

    #[test]
    fn steady_state_is_rotation_invariant(p in params()) {
        let l = Liouvillian::new(&p, FockSpace::new(16).unwrap()).unwrap();
        let rho = steady_state(&l).unwrap();
        let turned = rho.rotated(std::f64::consts::TAU / p.n as f64);
        prop_assert!(rho.trace_distance(&turned).unwrap() < 1e-8);
        prop_assert!(rho.min_eigenvalue().unwrap() > -1e-9);
        let r = l.apply(&rho.vectorize());
        prop_assert!(r.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-9 * l.norm_1());
    }

    #[test]
    fn state_fits_required_cutoff(re in -3.0f64..3.0, im in -3.0f64..3.0, r in 0.0f64..1.0, th in 0.0f64..std::f64::consts::TAU) {
        let beta = c64::new(re, im);
        let xi = c64::new(r * th.cos(), r * th.sin());
        let d = required_cutoff(beta, xi);
        let psi = squeezed_coherent(beta, xi, FockSpace::new(d).unwrap()).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        let wide = squeezed_coherent(beta, xi, FockSpace::new(2 * d).unwrap()).unwrap();
        prop_assert!((wide.mean_a() - beta).norm() < 1e-4 * (1.0 + beta.norm()));
        prop_assert!((psi.mean_a() - beta).norm() < 1e-2 * (1.0 + beta.norm()));
    }
}

#[test]
fn undriven_steady_state_is_vacuum() {
    let p = ResonatorParams {
        n: 3,
        m: 4,
        delta: 0.4,
        eta: 0.0,
        gamma_m: 0.2,
    };
    let rho = steady_state(&Liouvillian::new(&p, FockSpace::new(10).unwrap()).unwrap()).unwrap();
    let pops = rho.populations();
    assert!((pops[0] - 1.0).abs() < 1e-12);
    assert!(rho.purity() > 1.0 - 1e-12);
}

#[test]
fn damped_oscillator_spectrum() {
    let d = 6;
    let delta = 0.7;
    let space = FockSpace::new(d).unwrap();
    let a = lowering_power(space, 1);
    let h = SparseOp {
        dim: d,
        entries: (1..d).map(|k| (k, k, c64::new(delta * k as f64, 0.0))).collect(),
    };
    let l = Liouvillian::from_operators(&h, &[(a, 1.0)]).unwrap();
    let got = dense_spectrum(&l, d * d).unwrap();
    let mut want: Vec<c64> = (0..d)
        .flat_map(|j| (0..d).map(move |k| c64::new(-0.5 * (j + k) as f64, -delta * (j as f64 - k as f64))))
        .collect();
    for e in &got {
        let pos = want
            .iter()
            .position(|w| (w - e.value).norm() < 1e-8)
            .unwrap_or_else(|| panic!("unexpected eigenvalue {:?}", e.value));
        want.swap_remove(pos);
    }
    assert!(want.is_empty());
    assert!(got[0].value.norm() < 1e-12);
}

#[test]
fn wigner_is_normalized() {
    let space = FockSpace::new(30).unwrap();
    let grid = Grid::square(7.0, 161).unwrap();
    for rho in [
        coherent(c64::new(1.2, -0.8), space).unwrap().to_density(),
        fock_state(3, space).unwrap().to_density(),
        squeezed_coherent(c64::new(0.5, 0.0), c64::new(0.4, 0.3), space).unwrap().to_density(),
    ] {
        let w = wigner(&rho, &grid).unwrap();
        assert!((integrate(&grid, &w) - 1.0).abs() < 1e-6);
    }
    let vac = fock_state(0, space).unwrap().to_density();
    let w = wigner(&vac, &Grid::square(1.0, 3).unwrap()).unwrap();
    assert!((w[(1, 1)] - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
    assert!((w[(2, 1)] - (-1.0f64).exp() / std::f64::consts::PI).abs() < 1e-12);
}

