use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::fock::{spectrum, Liouvillian, SpectrumOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowOptions {
    pub eigenvalues: usize,
    /// Window opens after this many e-foldings of the slowest fast mode.
    pub fast_efolds: f64,
    /// Window closes once the fastest metastable mode has decayed this much.
    pub slow_fraction: f64,
    /// Longest stretch after the opening used for lobe assignment.
    pub assessment_time: f64,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            eigenvalues: 8,
            fast_efolds: 5.0,
            slow_fraction: 0.2,
            assessment_time: 10.0,
        }
    }
}

/// Time span in which the state sits on the metastable lobe manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetastableWindow {
    pub t_start: f64,
    pub t_end: f64,
    /// `|Re lambda_{n+1}| / max_{2 <= j <= n} |Re lambda_j|`.
    pub gap_ratio: f64,
    /// `min(t_end, t_start + assessment_time)`.
    pub assessed_end: f64,
}

impl MetastableWindow {
    /// Gap ratios at or below this value are reported as weak.
    pub const WEAK_GAP: f64 = 25.0;

    /// Grid times `k dt` inside `[t_start, assessed_end]`.
    pub fn assessment_times(&self, dt: f64) -> Result<Vec<f64>> {
        let first = (self.t_start / dt - 1e-9).ceil() as usize;
        let last = (self.assessed_end / dt + 1e-9).floor() as usize;
        ensure(last >= first, || {
            format!(
                "output step {dt} leaves no grid time in the window [{}, {}]",
                self.t_start, self.assessed_end
            )
        })?;
        Ok((first..=last).map(|k| k as f64 * dt).collect())
    }
}

/// Window from eigenvalues sorted by `|Re|` (the first being the steady state).
pub fn window_from_eigenvalues(values: &[c64], n: usize, opts: &WindowOptions) -> Result<MetastableWindow> {
    ensure(values.len() >= n + 1, || {
        format!("need at least n + 1 = {} eigenvalues, got {}", n + 1, values.len())
    })?;
    let slow = values[1..n].iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let fast = values[n].re.abs();
    ensure(fast > 0.0, || "first non-metastable eigenvalue is zero".into())?;
    let gap_ratio = if slow > 0.0 { fast / slow } else { f64::INFINITY };
    let t_start = opts.fast_efolds / fast;
    let t_end = if slow > 0.0 { opts.slow_fraction / slow } else { f64::INFINITY };
    if !(t_start < t_end) {
        return Err(Error::NoMetastableWindow(format!(
            "window would open at t = {t_start:.4} but closes at t = {t_end:.4} (gap ratio {gap_ratio:.3})"
        )));
    }
    if gap_ratio <= MetastableWindow::WEAK_GAP {
        log::warn!("weak spectral separation: gap ratio {gap_ratio:.2}");
    }
    Ok(MetastableWindow {
        t_start,
        t_end,
        gap_ratio,
        assessed_end: t_end.min(t_start + opts.assessment_time),
    })
}

/// Spectrum plus window for a drive of order `n`.
pub fn metastable_window(l: &Liouvillian, n: usize, opts: &WindowOptions) -> Result<(MetastableWindow, Vec<c64>)> {
    ensure(opts.eigenvalues >= n + 2, || {
        format!("need at least n + 2 = {} eigenvalues, got {}", n + 2, opts.eigenvalues)
    })?;
    let pairs = spectrum(l, &SpectrumOptions::new(opts.eigenvalues))?;
    let values: Vec<c64> = pairs.iter().map(|p| p.value).collect();
    Ok((window_from_eigenvalues(&values, n, opts)?, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_arithmetic() {
        let v = [
            c64::new(0.0, 0.0),
            c64::new(-0.01, 0.001),
            c64::new(-0.01, -0.001),
            c64::new(-20.0, 0.0),
        ];
        let w = window_from_eigenvalues(&v, 3, &WindowOptions::default()).unwrap();
        assert!((w.t_start - 0.25).abs() < 1e-12);
        assert!((w.t_end - 20.0).abs() < 1e-12);
        assert!((w.gap_ratio - 2000.0).abs() < 1e-9);
        assert!((w.assessed_end - 10.25).abs() < 1e-12);
        let t = w.assessment_times(0.05).unwrap();
        assert!((t[0] - 0.25).abs() < 1e-12 && (t.last().unwrap() - 10.25).abs() < 1e-9);
    }

    #[test]
    fn no_separation_is_an_error() {
        let v = [c64::new(0.0, 0.0), c64::new(-0.5, 0.4), c64::new(-0.5, -0.4), c64::new(-1.0, 0.0)];
        assert!(matches!(
            window_from_eigenvalues(&v, 3, &WindowOptions::default()),
            Err(Error::NoMetastableWindow(_))
        ));
    }
}
