//! Single-site laws and reproducible i.i.d. disorder fields.
//!
//! Every site value is a pure function of `(seed, realization, site)`: word
//! `2 * site` of the ChaCha20 stream selected by `realization` under key
//! `seed`. Fields can therefore be regenerated piecemeal or in parallel and
//! always come out bit-identical.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CubeGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    Uniform,
    PiecewiseConstant,
    TruncatedCustom,
    /// Degenerate law concentrated at a single energy. Useful as a
    /// disorder-free control; it has no density and cannot feed the lower
    /// bound.
    PointMass,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Uniform,
    /// `values[i]` on `[edges[i], edges[i+1])`; `mass[i]` is the cumulative
    /// probability up to `edges[i]`.
    Steps {
        edges: Vec<f64>,
        values: Vec<f64>,
        mass: Vec<f64>,
    },
    /// Piecewise-linear density through the nodes `(w[i], rho[i])`.
    Table {
        w: Vec<f64>,
        rho: Vec<f64>,
        mass: Vec<f64>,
    },
    Point,
}

/// Law of a single on-site coupling `omega_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSiteDensity {
    shape: Shape,
    w_minus: f64,
    w_plus: f64,
    rho_min: f64,
    rho_max: Option<f64>,
}

fn check_support(w_minus: f64, w_plus: f64) -> Result<()> {
    if !(w_minus.is_finite() && w_plus.is_finite()) {
        return Err(Error::param("W_minus/W_plus", "support endpoints must be finite"));
    }
    if w_minus >= w_plus {
        return Err(Error::param("W_plus", format!("need W_minus < W_plus, got [{w_minus}, {w_plus}]")));
    }
    Ok(())
}

impl SingleSiteDensity {
    /// Uniform law on `[w_minus, w_plus]`.
    pub fn uniform(w_minus: f64, w_plus: f64) -> Result<Self> {
        check_support(w_minus, w_plus)?;
        let rho = 1.0 / (w_plus - w_minus);
        Ok(SingleSiteDensity {
            shape: Shape::Uniform,
            w_minus,
            w_plus,
            rho_min: rho,
            rho_max: Some(rho),
        })
    }

    /// Step density taking `values[i]` on `[edges[i], edges[i+1])`. The
    /// values are normalized to unit mass.
    pub fn piecewise_constant(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || values.len() + 1 != edges.len() {
            return Err(Error::param("table", "need k+1 edges for k step values"));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("table", "edges must be strictly increasing"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("table", "step values must be finite and nonnegative"));
        }
        let raw: f64 = values.iter().zip(edges.windows(2)).map(|(v, e)| v * (e[1] - e[0])).sum();
        if !(raw > 0.0) {
            return Err(Error::param("table", "density has zero mass"));
        }
        let values: Vec<f64> = values.iter().map(|v| v / raw).collect();
        let mut mass = Vec::with_capacity(edges.len());
        let mut acc = 0.0;
        mass.push(0.0);
        for (v, e) in values.iter().zip(edges.windows(2)) {
            acc += v * (e[1] - e[0]);
            mass.push(acc);
        }
        let rho_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let rho_max = values.iter().copied().fold(0.0, f64::max);
        Ok(SingleSiteDensity {
            w_minus: edges[0],
            w_plus: edges[edges.len() - 1],
            shape: Shape::Steps { edges, values, mass },
            rho_min,
            rho_max: Some(rho_max),
        })
    }

    /// Piecewise-linear density through tabulated `(w, rho(w))` pairs,
    /// normalized to unit mass. Sampling inverts the (piecewise-quadratic)
    /// distribution function exactly.
    pub fn truncated_custom(table: &[(f64, f64)]) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::param("table", "need at least two (w, rho) pairs"));
        }
        if table.windows(2).any(|p| !(p[0].0 < p[1].0)) {
            return Err(Error::param("table", "abscissae must be strictly increasing"));
        }
        if table.iter().any(|&(w, r)| !(w.is_finite() && r.is_finite() && r >= 0.0)) {
            return Err(Error::param("table", "entries must be finite with rho >= 0"));
        }
        let w: Vec<f64> = table.iter().map(|p| p.0).collect();
        let raw: f64 = table.windows(2).map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0)).sum();
        if !(raw > 0.0) {
            return Err(Error::param("table", "density has zero mass"));
        }
        let rho: Vec<f64> = table.iter().map(|p| p.1 / raw).collect();
        let mut mass = vec![0.0];
        let mut acc = 0.0;
        for i in 0..w.len() - 1 {
            acc += 0.5 * (rho[i] + rho[i + 1]) * (w[i + 1] - w[i]);
            mass.push(acc);
        }
        let rho_min = rho.iter().copied().fold(f64::INFINITY, f64::min);
        let rho_max = rho.iter().copied().fold(0.0, f64::max);
        Ok(SingleSiteDensity {
            w_minus: w[0],
            w_plus: w[w.len() - 1],
            shape: Shape::Table { w, rho, mass },
            rho_min,
            rho_max: Some(rho_max),
        })
    }

    /// The degenerate law `omega_0 = value` almost surely.
    pub fn point_mass(value: f64) -> Self {
        SingleSiteDensity {
            shape: Shape::Point,
            w_minus: value,
            w_plus: value,
            rho_min: 0.0,
            rho_max: None,
        }
    }

    /// Overrides the declared floor and ceiling. `rho_max = None` marks the
    /// ceiling as unbounded, which disables the upper-bound check.
    pub fn with_declared_bounds(mut self, rho_min: f64, rho_max: Option<f64>) -> Result<Self> {
        if !(rho_min.is_finite() && rho_min >= 0.0) {
            return Err(Error::param("rho_min", "must be finite and nonnegative"));
        }
        if let Some(m) = rho_max {
            if !(m.is_finite() && m >= rho_min) {
                return Err(Error::param("rho_max", "must be finite and at least rho_min"));
            }
        }
        self.rho_min = rho_min;
        self.rho_max = rho_max;
        Ok(self)
    }

    pub fn kind(&self) -> DensityKind {
        match self.shape {
            Shape::Uniform => DensityKind::Uniform,
            Shape::Steps { .. } => DensityKind::PiecewiseConstant,
            Shape::Table { .. } => DensityKind::TruncatedCustom,
            Shape::Point => DensityKind::PointMass,
        }
    }

    pub fn w_minus(&self) -> f64 {
        self.w_minus
    }

    pub fn w_plus(&self) -> f64 {
        self.w_plus
    }

    /// Declared essential infimum on `[W-, W+]`.
    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    /// Declared essential supremum; `None` means unbounded.
    pub fn rho_max(&self) -> Option<f64> {
        self.rho_max
    }

    /// Density at `w`; zero outside the support. A point mass has no
    /// density and evaluates to zero everywhere.
    pub fn density(&self, w: f64) -> f64 {
        if w < self.w_minus || w > self.w_plus {
            return 0.0;
        }
        match &self.shape {
            Shape::Uniform => 1.0 / (self.w_plus - self.w_minus),
            Shape::Steps { edges, values, .. } => {
                let i = segment(edges, w);
                values[i]
            }
            Shape::Table { w: nodes, rho, .. } => {
                let i = segment(nodes, w);
                let t = (w - nodes[i]) / (nodes[i + 1] - nodes[i]);
                rho[i] + t * (rho[i + 1] - rho[i])
            }
            Shape::Point => 0.0,
        }
    }

    /// Maps a uniform variate `u` in `[0, 1)` to a sample of the law.
    pub fn quantile(&self, u: f64) -> f64 {
        let width = self.w_plus - self.w_minus;
        let w = match &self.shape {
            Shape::Uniform => self.w_minus + u * width,
            Shape::Point => self.w_minus,
            Shape::Steps { edges, values, mass } => {
                let i = segment(mass, u);
                if values[i] > 0.0 {
                    edges[i] + (u - mass[i]) / values[i]
                } else {
                    edges[i]
                }
            }
            Shape::Table { w, rho, mass } => {
                let i = segment(mass, u);
                let m = u - mass[i];
                let h = w[i + 1] - w[i];
                let slope = (rho[i + 1] - rho[i]) / h;
                // solve rho_i t + slope t^2 / 2 = m for t in [0, h]
                let t = if slope.abs() < 1e-300 {
                    if rho[i] > 0.0 {
                        m / rho[i]
                    } else {
                        0.0
                    }
                } else {
                    let disc = (rho[i] * rho[i] + 2.0 * slope * m).max(0.0);
                    2.0 * m / (rho[i] + disc.sqrt()).max(f64::MIN_POSITIVE)
                };
                w[i] + t.clamp(0.0, h)
            }
        };
        w.clamp(self.w_minus, self.w_plus)
    }

    /// `int rho` over the support by the trapezoid rule on `points` nodes.
    pub fn total_mass(&self, points: usize) -> f64 {
        match &self.shape {
            Shape::Point => 1.0,
            Shape::Steps { mass, .. } | Shape::Table { mass, .. } => mass[mass.len() - 1],
            Shape::Uniform => {
                let n = points.max(2);
                let h = (self.w_plus - self.w_minus) / (n - 1) as f64;
                (0..n)
                    .map(|k| {
                        let wt = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                        wt * self.density(self.w_minus + k as f64 * h)
                    })
                    .sum::<f64>()
                    * h
            }
        }
    }
}

/// Index `i` with `nodes[i] <= x < nodes[i+1]`, clamped to the valid range.
fn segment(nodes: &[f64], x: f64) -> usize {
    let k = nodes.partition_point(|&v| v <= x);
    k.saturating_sub(1).min(nodes.len() - 2)
}

/// Uniform variate in `[0, 1)` from the top 53 bits of a word.
fn unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn stream(seed: u64, realization: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    rng
}

/// The raw uniform variate attached to `(seed, realization, site)`.
pub fn site_uniform(seed: u64, realization: u64, site: usize) -> f64 {
    let mut rng = stream(seed, realization);
    // word positions count 32-bit words; each site owns two 64-bit draws
    rng.set_word_pos(4 * site as u128);
    unit(rng.next_u64())
}

/// One realization of the on-site potential on a cube.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderField {
    sites: usize,
    seed: u64,
    realization: u64,
    values: Vec<f64>,
}

impl DisorderField {
    /// A field with explicitly given values (no seed record).
    pub fn from_values(values: Vec<f64>) -> Self {
        DisorderField {
            sites: values.len(),
            seed: 0,
            realization: 0,
            values,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.sites
    }

    pub fn is_empty(&self) -> bool {
        self.sites == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn realization(&self) -> u64 {
        self.realization
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Draws i.i.d. couplings for every site of `g`.
pub fn sample_field(
    density: &SingleSiteDensity,
    g: &CubeGeometry,
    seed: u64,
    realization: u64,
) -> DisorderField {
    let mut rng = stream(seed, realization);
    let values = (0..g.len())
        .map(|_| {
            let u = unit(rng.next_u64());
            // the odd word is reserved so that site s always owns words 2s, 2s+1
            rng.next_u64();
            density.quantile(u)
        })
        .collect();
    DisorderField {
        sites: g.len(),
        seed,
        realization,
        values,
    }
}

/// Almost-sure spectrum of the infinite-volume operator: `[-2d, 2d] + supp rho`.
pub fn deterministic_spectrum(density: &SingleSiteDensity, dim: usize) -> Vec<(f64, f64)> {
    deterministic_spectrum_for_support(dim, density.w_minus, density.w_plus)
}

pub fn deterministic_spectrum_for_support(dim: usize, w_minus: f64, w_plus: f64) -> Vec<(f64, f64)> {
    let band = 2.0 * dim as f64;
    vec![(-band + w_minus, band + w_plus)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorCheck {
    pub passed: bool,
    pub measured_min: f64,
    pub declared_min: f64,
}

/// Tolerance used when comparing the measured floor to the declared one.
pub const FLOOR_TOLERANCE: f64 = 1e-12;

/// Evaluates `rho` on `points` evenly spaced nodes of `[W-, W+]` and compares
/// the smallest value against the declared floor.
pub fn density_floor_check(density: &SingleSiteDensity, points: usize) -> Result<FloorCheck> {
    if points < 2 {
        return Err(Error::param("grid points", "need at least 2"));
    }
    let (a, b) = (density.w_minus, density.w_plus);
    let measured = (0..points)
        .map(|k| {
            let w = if k + 1 == points {
                b
            } else {
                a + (b - a) * k as f64 / (points - 1) as f64
            };
            density.density(w)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(FloorCheck {
        passed: measured >= density.rho_min - FLOOR_TOLERANCE && density.rho_min > 0.0,
        measured_min: measured,
        declared_min: density.rho_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_cube;

    #[test]
    fn uniform_stays_in_support() {
        let rho = SingleSiteDensity::uniform(0.0, 1.0).unwrap();
        let g = build_cube(2, 30).unwrap();
        for r in 0..4 {
            let f = sample_field(&rho, &g, 7, r);
            assert_eq!(f.len(), 900);
            assert!(f.values().iter().all(|&w| (0.0..=1.0).contains(&w)));
        }
    }

    #[test]
    fn near_degenerate_width() {
        let w0 = 0.3;
        let rho = SingleSiteDensity::uniform(w0, w0 + 1e-12).unwrap();
        let g = build_cube(1, 100).unwrap();
        let f = sample_field(&rho, &g, 1, 0);
        assert!(f.values().iter().all(|&w| (w - w0).abs() <= 1e-12));
    }

    #[test]
    fn uniform_mean_oracle() {
        let rho = SingleSiteDensity::uniform(0.0, 1.0).unwrap();
        let g = build_cube(1, 100_000).unwrap();
        let f = sample_field(&rho, &g, 2024, 3);
        let mean = f.values().iter().sum::<f64>() / f.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn sites_are_individually_addressable() {
        let rho = SingleSiteDensity::uniform(-1.0, 3.0).unwrap();
        let g = build_cube(1, 50).unwrap();
        let f = sample_field(&rho, &g, 99, 5);
        for site in [0, 1, 17, 49] {
            let u = site_uniform(99, 5, site);
            assert_eq!(f.values()[site], rho.quantile(u));
        }
        assert_eq!(f, sample_field(&rho, &g, 99, 5));
        assert_ne!(f.values(), sample_field(&rho, &g, 99, 6).values());
        assert_ne!(f.values(), sample_field(&rho, &g, 98, 5).values());
    }

    #[test]
    fn spectrum_is_minkowski_sum() {
        let u01 = SingleSiteDensity::uniform(0.0, 1.0).unwrap();
        assert_eq!(deterministic_spectrum(&u01, 1), vec![(-2.0, 3.0)]);
        let sym = SingleSiteDensity::uniform(-1.0, 1.0).unwrap();
        assert_eq!(deterministic_spectrum(&sym, 2), vec![(-5.0, 5.0)]);
        assert_eq!(deterministic_spectrum(&SingleSiteDensity::point_mass(0.0), 3), vec![(-6.0, 6.0)]);
    }

    #[test]
    fn floor_checks() {
        let u = SingleSiteDensity::uniform(0.0, 1.0).unwrap();
        let c = density_floor_check(&u, 101).unwrap();
        assert!(c.passed);
        assert_eq!(c.measured_min, 1.0);

        let vanishing = SingleSiteDensity::truncated_custom(&[(0.0, 1.5), (0.5, 0.0), (1.0, 1.5)])
            .unwrap()
            .with_declared_bounds(0.1, Some(3.0))
            .unwrap();
        let c = density_floor_check(&vanishing, 101).unwrap();
        assert!(!c.passed);
        assert_eq!(c.measured_min, 0.0);

        let steps = SingleSiteDensity::piecewise_constant(vec![0.0, 0.5, 1.0], vec![0.5, 1.5]).unwrap();
        let c = density_floor_check(&steps, 1001).unwrap();
        assert!(c.passed);
        assert!((c.measured_min - 0.5).abs() < 1e-15);
        assert_eq!(steps.rho_max(), Some(1.5));

        assert!(density_floor_check(&u, 1).is_err());
    }

    #[test]
    fn masses_are_normalized() {
        let steps = SingleSiteDensity::piecewise_constant(vec![-1.0, 0.0, 2.0], vec![3.0, 1.0]).unwrap();
        assert!((steps.total_mass(0) - 1.0).abs() < 1e-14);
        let table = SingleSiteDensity::truncated_custom(&[(0.0, 1.0), (1.0, 2.0), (3.0, 0.5)]).unwrap();
        assert!((table.total_mass(0) - 1.0).abs() < 1e-14);
        let u = SingleSiteDensity::uniform(2.0, 5.0).unwrap();
        assert!((u.total_mass(1000) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_distribution() {
        let table = SingleSiteDensity::truncated_custom(&[(0.0, 1.0), (1.0, 2.0), (3.0, 0.5)]).unwrap();
        // integrate the density numerically up to quantile(u) and compare with u
        for &u in &[0.0, 0.1, 0.35, 0.5, 0.77, 0.999] {
            let w = table.quantile(u);
            let n = 20_000;
            let h = (w - table.w_minus()) / n as f64;
            let cdf: f64 = (0..n)
                .map(|k| table.density(table.w_minus() + (k as f64 + 0.5) * h))
                .sum::<f64>()
                * h;
            assert!((cdf - u).abs() < 1e-6, "u={u} cdf={cdf}");
        }
        let steps = SingleSiteDensity::piecewise_constant(vec![0.0, 0.5, 1.0], vec![0.5, 1.5]).unwrap();
        assert!((steps.quantile(0.25) - 0.5).abs() < 1e-15);
        assert!((steps.quantile(0.625) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn invalid_densities() {
        assert!(SingleSiteDensity::uniform(1.0, 1.0).is_err());
        assert!(SingleSiteDensity::piecewise_constant(vec![0.0, 1.0], vec![]).is_err());
        assert!(SingleSiteDensity::truncated_custom(&[(0.0, 1.0)]).is_err());
        assert!(SingleSiteDensity::truncated_custom(&[(0.0, 0.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn uniform_histogram_is_flat() {
        // 10^6 samples in 20 bins; each bin within 5 standard errors of flat
        let rho = SingleSiteDensity::uniform(-2.0, 3.0).unwrap();
        let g = build_cube(1, 1_000_000).unwrap();
        let f = sample_field(&rho, &g, 11, 0);
        let bins = 20;
        let mut counts = vec![0usize; bins];
        for &w in f.values() {
            let b = (((w + 2.0) / 5.0) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let n = f.len() as f64;
        let p = 1.0 / bins as f64;
        let se = (n * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n * p).abs() <= 5.0 * se);
        }
    }
}
