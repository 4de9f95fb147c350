use faer::{Mat, Side};
use proptest::prelude::*;
use qlight_core::gaussian::{
    homodyne_moments, moment_labels, observable_len, squeezing_db, squeezing_from_db, GaussianState, SqueezingSpec,
    Symplectic,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Hermite nodes and weights for `int exp(-t^2) f(t) dt` (Golub-Welsch).
fn gauss_hermite(k: usize) -> (Vec<f64>, Vec<f64>) {
    let j = Mat::<f64>::from_fn(k, k, |a, b| {
        if a + 1 == b || b + 1 == a {
            ((a.max(b)) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = j.self_adjoint_eigen(Side::Lower).unwrap();
    let nodes: Vec<f64> = (0..k).map(|i| eig.S()[i]).collect();
    let weights = (0..k).map(|i| std::f64::consts::PI.sqrt() * eig.U()[(0, i)].powi(2)).collect();
    (nodes, weights)
}

/// `E[f(x_i, x_j)]` for a zero-mean bivariate normal by tensor Gauss-Hermite quadrature.
fn bivariate_expectation(s: [[f64; 2]; 2], f: impl Fn(f64, f64) -> f64) -> f64 {
    let (t, w) = gauss_hermite(12);
    let l00 = s[0][0].sqrt();
    let l10 = s[1][0] / l00;
    let l11 = (s[1][1] - l10 * l10).max(0.0).sqrt();
    let mut acc = 0.0;
    for (a, wa) in t.iter().zip(&w) {
        for (b, wb) in t.iter().zip(&w) {
            let (z0, z1) = (std::f64::consts::SQRT_2 * a, std::f64::consts::SQRT_2 * b);
            acc += wa * wb * f(l00 * z0, l10 * z0 + l11 * z1);
        }
    }
    acc / std::f64::consts::PI
}

/// Moments in the library's layout, each from quadrature on a pair marginal.
fn oracle_moments(state: &GaussianState) -> Vec<f64> {
    let n = state.modes();
    let c = state.covariance();
    let pair = |i: usize, j: usize| [[c[(2 * i, 2 * i)], c[(2 * i, 2 * j)]], [c[(2 * j, 2 * i)], c[(2 * j, 2 * j)]]];
    let single = |i: usize, f: fn(f64) -> f64| bivariate_expectation([[c[(2 * i, 2 * i)], 0.0], [0.0, 1.0]], |x, _| f(x));
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            out.push(if i == j {
                single(i, |x| x * x)
            } else {
                bivariate_expectation(pair(i, j), |x, y| x * y)
            });
        }
    }
    for i in 0..n {
        for j in i..n {
            out.push(if i == j {
                single(i, |x| x.powi(4))
            } else {
                bivariate_expectation(pair(i, j), |x, y| x * x * y * y)
            });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push(bivariate_expectation(pair(i, j), |x, y| x.powi(3) * y));
            }
        }
    }
    out
}

fn random_state(modes: usize, rng: &mut ChaCha8Rng) -> GaussianState {
    let spec = SqueezingSpec::new(rng.random_range(0.0..1.2), rng.random_range(0.0..std::f64::consts::TAU)).unwrap();
    let s = GaussianState::squeezed_input(modes, &spec).unwrap();
    let u = Symplectic::from_unitary(&Symplectic::haar_unitary(modes, rng)).unwrap();
    let sq = Symplectic::equal_squeezers(modes, rng.random_range(0.0..0.8));
    s.apply(&u.compose(&sq)).unwrap()
}

fn random_composition(modes: usize, rng: &mut ChaCha8Rng, passive_only: bool) -> Symplectic {
    let mut s = Symplectic::identity(modes);
    for _ in 0..rng.random_range(1..6) {
        let op = match rng.random_range(0..if passive_only { 2 } else { 4 }) {
            0 => Symplectic::from_unitary(&Symplectic::haar_unitary(modes, rng)).unwrap(),
            1 if modes % 2 == 0 => Symplectic::beam_splitter_5050(modes / 2),
            1 => Symplectic::identity(modes),
            2 => Symplectic::equal_squeezers(modes, rng.random_range(0.0..1.0)),
            _ => Symplectic::crystal(modes, rng.random_range(0.0..0.6), rng.random()).unwrap(),
        };
        s = op.compose(&s);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn compositions_stay_symplectic(modes in 1usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_composition(modes, &mut rng, false);
        let scale = s.matrix().norm_max().powi(2).max(1.0);
        prop_assert!(s.symplectic_error() <= 1e-10 * scale);
        let st = random_state(modes, &mut rng).apply(&s).unwrap();
        prop_assert!(st.symmetry_error() <= 1e-10 * st.covariance().norm_max());
        prop_assert!(st.uncertainty_min_eigenvalue() >= -1e-9 * st.covariance().norm_max());
    }

    #[test]
    fn passive_maps_conserve_photon_number(modes in 1usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = random_state(modes, &mut rng);
        let s = random_composition(modes, &mut rng, true);
        let after = st.apply(&s).unwrap();
        prop_assert!((after.mean_photon_number() - st.mean_photon_number()).abs() <= 1e-10 * (1.0 + st.mean_photon_number()));
        prop_assert!(s.orthogonality_error() < 1e-10);
    }

    #[test]
    fn moments_match_quadrature(modes in 1usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = random_state(modes, &mut rng);
        let got = homodyne_moments(&st).unwrap();
        let want = oracle_moments(&st);
        prop_assert_eq!(got.len(), observable_len(modes));
        prop_assert_eq!(want.len(), got.len());
        let scale = want.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for (g, w) in got.values.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-6 * scale, "{g} vs {w}");
        }
    }

    #[test]
    fn decibels_round_trip(xi in 0.0f64..3.0) {
        prop_assert!((squeezing_from_db(squeezing_db(xi)) - xi).abs() < 1e-12);
    }
}

#[test]
fn observable_layout() {
    assert_eq!(observable_len(12), 12 * 13 + 12 * 11);
    let labels = moment_labels(2);
    assert_eq!(labels, ["xx_0_0", "xx_0_1", "xx_1_1", "x2x2_0_0", "x2x2_0_1", "x2x2_1_1", "x3x_0_1", "x3x_1_0"]);
}

#[test]
fn vacuum_moments() {
    let v = homodyne_moments(&GaussianState::vacuum(2).unwrap()).unwrap();
    assert_eq!(v.values, vec![0.5, 0.0, 0.5, 0.75, 0.25, 0.75, 0.0, 0.0]);
}
