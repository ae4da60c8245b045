//! Rescaled eigenvalue positions near a reference energy and a
//! Kolmogorov-Smirnov comparison of their spacings with the exponential
//! law.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::disorder::{sample_field, SingleSiteDensity};
use crate::error::{Error, Result};
use crate::geometry::build_cube;
use crate::ids::fmt17;
use crate::operator::build_anderson;
use crate::runner::parallel_map;
use crate::spectral::full_spectrum;

pub const DEFAULT_WINDOW: f64 = 10.0;
pub const DEFAULT_KS_THRESHOLD: f64 = 0.15;
pub const MIN_SPACINGS: usize = 50;

/// Positions `x = L^d (eps - E)` with `|x| <= X`, per realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingSample {
    pub energy: f64,
    pub volume: usize,
    pub window: f64,
    pub seed: u64,
    /// Sorted positions of each realization.
    pub positions: Vec<Vec<f64>>,
    /// Consecutive spacings of each realization's positions.
    pub spacings: Vec<Vec<f64>>,
    pub notice: Option<String>,
}

impl SpacingSample {
    /// Builds the sample from full spectra, one per realization.
    pub fn from_spectra(energy: f64, volume: usize, window: f64, seed: u64, spectra: &[Vec<f64>]) -> Self {
        let scale = volume as f64;
        let positions: Vec<Vec<f64>> = spectra
            .iter()
            .map(|s| {
                let mut x: Vec<f64> = s
                    .iter()
                    .map(|&ev| scale * (ev - energy))
                    .filter(|x| x.abs() <= window)
                    .collect();
                x.sort_by(f64::total_cmp);
                x
            })
            .collect();
        let spacings = positions
            .iter()
            .map(|x| x.windows(2).map(|w| w[1] - w[0]).collect())
            .collect();
        let notice = positions
            .iter()
            .all(Vec::is_empty)
            .then(|| format!("no eigenvalues within |x| <= {window} of E = {energy}"));
        SpacingSample {
            energy,
            volume,
            window,
            seed,
            positions,
            spacings,
            notice,
        }
    }

    pub fn realizations(&self) -> usize {
        self.positions.len()
    }

    pub fn position_count(&self) -> usize {
        self.positions.iter().map(Vec::len).sum()
    }

    /// All spacings, realization by realization.
    pub fn pooled_spacings(&self) -> Vec<f64> {
        self.spacings.iter().flatten().copied().collect()
    }

    /// `realization,position` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# energy={}", fmt17(self.energy));
        let _ = writeln!(out, "# volume={}", self.volume);
        let _ = writeln!(out, "# window={}", fmt17(self.window));
        let _ = writeln!(out, "# R={}", self.realizations());
        let _ = writeln!(out, "# seed={}", self.seed);
        out.push_str("realization,position\n");
        for (r, xs) in self.positions.iter().enumerate() {
            for x in xs {
                let _ = writeln!(out, "{r},{}", fmt17(*x));
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Parameters of a spacing collection run.
#[derive(Debug, Clone)]
pub struct SpacingRun<'a> {
    pub dim: usize,
    pub side: usize,
    pub density: &'a SingleSiteDensity,
    pub energy: f64,
    pub window: f64,
    pub realizations: usize,
    pub seed: u64,
    pub workers: usize,
}

pub fn collect_spacings(run: &SpacingRun<'_>) -> Result<SpacingSample> {
    if !(run.window > 0.0 && run.window.is_finite()) {
        return Err(Error::param("algorithm.X", "window must be positive"));
    }
    if run.realizations == 0 {
        return Err(Error::param("mc.R", "need at least one realization"));
    }
    let g = build_cube(run.dim, run.side)?;
    let spectra = parallel_map(run.realizations, run.workers, |r| {
        let field = sample_field(run.density, &g, run.seed, r as u64);
        Ok(full_spectrum(&build_anderson(&g, &field)?)?.into_values())
    })?;
    let sample = SpacingSample::from_spectra(run.energy, g.len(), run.window, run.seed, &spectra);
    if let Some(n) = &sample.notice {
        log::warn!("{n}");
    }
    Ok(sample)
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// the exponential law with the given rate.
pub fn ks_exponential(samples: &[f64], rate: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-rate * x.max(0.0)).exp();
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonReport {
    pub rate: f64,
    pub spacing_count: usize,
    pub ks_distance: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
    pub notice: Option<String>,
}

/// KS test of the pooled spacings against `Exponential(rate)`.
pub fn poisson_test(s: &SpacingSample, rate: f64, threshold: f64) -> PoissonReport {
    let spacings = s.pooled_spacings();
    let count = spacings.len();
    if count < MIN_SPACINGS {
        return PoissonReport {
            rate,
            spacing_count: count,
            ks_distance: None,
            threshold,
            passed: false,
            notice: Some(format!("insufficient data: {count} spacings, need at least {MIN_SPACINGS}")),
        };
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return PoissonReport {
            rate,
            spacing_count: count,
            ks_distance: None,
            threshold,
            passed: false,
            notice: Some(format!("rate {rate} is not a positive intensity")),
        };
    }
    let d = ks_exponential(&spacings, rate);
    PoissonReport {
        rate,
        spacing_count: count,
        ks_distance: Some(d),
        threshold,
        passed: d <= threshold,
        notice: None,
    }
}

/// `(number of pooled positions) / (R 2X)`.
pub fn intensity_estimate(s: &SpacingSample) -> f64 {
    if s.realizations() == 0 {
        return 0.0;
    }
    s.position_count() as f64 / (s.realizations() as f64 * 2.0 * s.window)
}

/// Standard error of [`intensity_estimate`] from the spread of the
/// per-realization counts.
pub fn intensity_stderr(s: &SpacingSample) -> f64 {
    let r = s.realizations();
    if r < 2 {
        return 0.0;
    }
    let per: Vec<f64> = s.positions.iter().map(|x| x.len() as f64 / (2.0 * s.window)).collect();
    let mean = per.iter().sum::<f64>() / r as f64;
    let var = per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
    (var / r as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Exp};

    #[test]
    fn single_eigenvalue_gives_no_spacing() {
        let s = SpacingSample::from_spectra(0.0, 10, 1.0, 0, &[vec![-5.0, 0.05, 5.0]]);
        assert_eq!(s.positions, vec![vec![0.5]]);
        assert!(s.spacings[0].is_empty());
        assert!(s.notice.is_none());
    }

    #[test]
    fn empty_window_is_a_notice() {
        let s = SpacingSample::from_spectra(0.0, 10, 1.0, 0, &[vec![-5.0, 5.0]]);
        assert!(s.notice.is_some());
        assert_eq!(intensity_estimate(&s), 0.0);
        let r = poisson_test(&s, 1.0, DEFAULT_KS_THRESHOLD);
        assert!(!r.passed && r.ks_distance.is_none() && r.notice.unwrap().contains("insufficient"));
    }

    #[test]
    fn intensity_arithmetic() {
        let s = SpacingSample::from_spectra(0.0, 1, 1.0, 0, &[vec![-0.9, -0.1, 0.2, 0.8]]);
        assert_eq!(intensity_estimate(&s), 2.0);
    }

    #[test]
    fn free_positions_are_identical_across_realizations() {
        let d = SingleSiteDensity::point_mass(0.0);
        let s = collect_spacings(&SpacingRun {
            dim: 1,
            side: 200,
            density: &d,
            energy: 0.0,
            window: 30.0,
            realizations: 3,
            seed: 9,
            workers: 2,
        })
        .unwrap();
        assert!(!s.positions[0].is_empty());
        assert_eq!(s.positions[0], s.positions[1]);
        assert_eq!(s.positions[1], s.positions[2]);
    }

    #[test]
    fn exponential_spacings_pass() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let exp = Exp::new(1.0).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| exp.sample(&mut rng)).collect();
        let d = ks_exponential(&xs, 1.0);
        assert!(d < 0.02, "{d}");
    }

    #[test]
    fn uniform_order_statistics_pass() {
        // i.i.d. uniform points on a long interval have exponential gaps
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let (volume, window) = (1000usize, 400.0);
        let spectra: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..400).map(|_| rng.random_range(-0.4..0.4)).collect())
            .collect();
        let s = SpacingSample::from_spectra(0.0, volume, window, 0, &spectra);
        let rate = intensity_estimate(&s);
        assert!((rate - 0.5).abs() < 0.05);
        let r = poisson_test(&s, rate, DEFAULT_KS_THRESHOLD);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn picket_fence_fails() {
        let spectrum: Vec<f64> = (0..200).map(|k| -0.1 + 0.001 * k as f64).collect();
        let s = SpacingSample::from_spectra(0.0, 1000, 100.0, 0, &[spectrum]);
        let r = poisson_test(&s, intensity_estimate(&s), DEFAULT_KS_THRESHOLD);
        assert!(!r.passed && r.ks_distance.unwrap() > 0.3);
    }

    #[test]
    fn csv_lists_every_position() {
        let s = SpacingSample::from_spectra(0.0, 1, 1.0, 3, &[vec![0.1, -0.2], vec![0.5]]);
        let csv = s.to_csv();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "realization,position");
        assert_eq!(rows.len(), 4);
        assert!(rows[1].starts_with("0,-2.0"));
    }
}
