use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TimeSeries;
use crate::error::{ensure, Result};

const SIGMA: f64 = 10.0;
const RHO: f64 = 28.0;
const BETA: f64 = 8.0 / 3.0;
/// Time between samples.
pub const SAMPLE_INTERVAL: f64 = 0.1;
const SUBSTEPS: usize = 10;
const TRANSIENT: usize = 500;
/// `x^2` of the attractor stays below this bound in practice; it maps to 255.
const INTENSITY_FULL_SCALE: f64 = 400.0;

fn lorenz(v: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = v;
    [SIGMA * (y - x), x * (RHO - z) - y, x * y - BETA * z]
}

fn rk4(v: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = lorenz(v);
    let k2 = lorenz(add(v, k1, h / 2.0));
    let k3 = lorenz(add(v, k2, h / 2.0));
    let k4 = lorenz(add(v, k3, h));
    [
        v[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        v[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        v[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Laser-like chaotic intensity series: the squared `x` coordinate of the
/// Lorenz-63 flow (sigma 10, rho 28, beta 8/3), sampled every
/// [`SAMPLE_INTERVAL`] and quantized to integers `0..=255` like an 8-bit
/// digitizer. The seed perturbs the initial point; the first 500 samples are
/// discarded.
pub fn lorenz_intensity(len: usize, seed: u64) -> Result<TimeSeries> {
    ensure(len > 0, || "synthetic series length must be positive".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = [
        1.0 + rng.random_range(-0.5..0.5),
        1.0 + rng.random_range(-0.5..0.5),
        1.0 + rng.random_range(-0.5..0.5),
    ];
    let h = SAMPLE_INTERVAL / SUBSTEPS as f64;
    let mut out = Vec::with_capacity(len);
    for k in 0..TRANSIENT + len {
        for _ in 0..SUBSTEPS {
            v = rk4(v, h);
        }
        if k >= TRANSIENT {
            let level = (255.0 * v[0] * v[0] / INTENSITY_FULL_SCALE).round().clamp(0.0, 255.0);
            out.push(level);
        }
    }
    TimeSeries::from_values(out)
}
