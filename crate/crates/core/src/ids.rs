//! Integrated density of states and density of states.
//!
//! The empirical IDS of the Anderson model is the disorder average of
//! `#{eigenvalues <= E} / L^d` over independent realizations, computed by
//! inertia counting. The DOS is its centered difference quotient. The free
//! Laplacian IDS is available exactly on finite cubes and, in infinite
//! volume, as the distribution function of a sum of `d` independent
//! arcsine variables `2 cos(theta)`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, OnceLock, RwLock};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::disorder::{sample_field, SingleSiteDensity};
use crate::error::{Error, Result};
use crate::geometry::build_cube;
use crate::operator::{build_anderson, build_dirichlet_laplacian};
use crate::runner::parallel_map;
use crate::spectral::{full_spectrum, InertiaCounter, NUDGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Ids,
    Dos,
    FreeIds,
}

/// A tabulated curve `E -> value` with Monte Carlo errors and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCurve {
    pub kind: CurveKind,
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard error per point; zero for exact curves.
    pub stderr: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
    /// Per-realization values (`samples[r][k]` at `energies[k]`), kept so
    /// derived curves can propagate errors correctly.
    pub samples: Option<Vec<Vec<f64>>>,
}

impl SpectralCurve {
    pub fn exact(kind: CurveKind, energies: Vec<f64>, values: Vec<f64>) -> Self {
        let stderr = vec![0.0; values.len()];
        SpectralCurve {
            kind,
            energies,
            values,
            stderr,
            metadata: BTreeMap::new(),
            samples: None,
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// CSV text: `# key=value` comment lines, a header, and
    /// `energy,value,stderr` rows at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let kind = match self.kind {
            CurveKind::Ids => "ids",
            CurveKind::Dos => "dos",
            CurveKind::FreeIds => "free-ids",
        };
        let _ = writeln!(out, "# kind={kind}");
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("energy,value,stderr\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt17(self.energies[i]),
                fmt17(self.values[i]),
                fmt17(self.stderr[i])
            );
        }
        out
    }

    /// Parses the format written by [`SpectralCurve::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let mut kind = CurveKind::Ids;
        let (mut energies, mut values, mut stderr) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line == "energy,value,stderr" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    if k == "kind" {
                        kind = match v {
                            "ids" => CurveKind::Ids,
                            "dos" => CurveKind::Dos,
                            "free-ids" => CurveKind::FreeIds,
                            other => return Err(Error::param("kind", format!("unknown curve kind {other}"))),
                        };
                    } else {
                        metadata.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::param("csv", format!("line {}: {e}", lineno + 1)))
            };
            if cols.len() != 3 {
                return Err(Error::param("csv", format!("line {}: expected 3 columns", lineno + 1)));
            }
            energies.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
            stderr.push(parse(cols[2])?);
        }
        Ok(SpectralCurve {
            kind,
            energies,
            values,
            stderr,
            metadata,
            samples: None,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Shortest-free fixed format with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `min, min + step, ..` up to `max` (inclusive within round-off). Points
/// are computed as `min + k * step`, never by accumulation.
pub fn energy_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param("grid.step", "must be positive"));
    }
    if !(min.is_finite() && max.is_finite() && max >= min) {
        return Err(Error::param("grid.max", "need finite min <= max"));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| min + k as f64 * step).collect())
}

fn check_ascending(energies: &[f64]) -> Result<()> {
    if energies.is_empty() {
        return Err(Error::param("energies", "grid is empty"));
    }
    if energies.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("energies", "grid must be strictly ascending"));
    }
    Ok(())
}

fn mean_and_stderr(samples: &[Vec<f64>], k: usize) -> (f64, f64) {
    let r = samples.len() as f64;
    let mean = samples.iter().map(|s| s[k]).sum::<f64>() / r;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Parameters of an empirical IDS run.
#[derive(Debug, Clone)]
pub struct IdsRun<'a> {
    pub dim: usize,
    pub side: usize,
    pub density: &'a SingleSiteDensity,
    pub energies: &'a [f64],
    pub realizations: usize,
    pub seed: u64,
    pub workers: usize,
}

/// Normalized counts `#{eigenvalues <= E} / L^d` of one realization.
pub fn realization_ids(run: &IdsRun<'_>, realization: u64) -> Result<Vec<f64>> {
    let g = build_cube(run.dim, run.side)?;
    let field = sample_field(run.density, &g, run.seed, realization);
    let h = build_anderson(&g, &field)?;
    let counter = InertiaCounter::new(&h);
    let volume = g.len() as f64;
    run.energies
        .iter()
        .map(|&e| counter.count(e).map(|c| c.count as f64 / volume))
        .collect()
}

/// Disorder-averaged finite-volume IDS on `run.energies`.
pub fn empirical_ids(run: &IdsRun<'_>) -> Result<SpectralCurve> {
    if run.realizations == 0 {
        return Err(Error::param("mc.R", "need at least one realization"));
    }
    check_ascending(run.energies)?;
    build_cube(run.dim, run.side)?;
    let samples = parallel_map(run.realizations, run.workers, |r| {
        realization_ids(run, r as u64).inspect_err(|e| log::error!("realization {r} failed: {e}"))
    })?;
    let (values, stderr) = (0..run.energies.len()).map(|k| mean_and_stderr(&samples, k)).unzip();
    let mut metadata = BTreeMap::new();
    metadata.insert("d".into(), run.dim.to_string());
    metadata.insert("L".into(), run.side.to_string());
    metadata.insert("R".into(), run.realizations.to_string());
    metadata.insert("seed".into(), run.seed.to_string());
    density_metadata(run.density, &mut metadata);
    Ok(SpectralCurve {
        kind: CurveKind::Ids,
        energies: run.energies.to_vec(),
        values,
        stderr,
        metadata,
        samples: Some(samples),
    })
}

pub(crate) fn density_metadata(density: &SingleSiteDensity, metadata: &mut BTreeMap<String, String>) {
    metadata.insert("density".into(), format!("{:?}", density.kind()).to_lowercase());
    metadata.insert("W_minus".into(), fmt17(density.w_minus()));
    metadata.insert("W_plus".into(), fmt17(density.w_plus()));
    metadata.insert("rho_min".into(), fmt17(density.rho_min()));
    metadata.insert(
        "rho_max".into(),
        density.rho_max().map_or_else(|| "unbounded".to_string(), fmt17),
    );
}

fn interpolate(energies: &[f64], values: &[f64], e: f64) -> f64 {
    let k = energies.partition_point(|&x| x <= e);
    if k == 0 {
        return values[0];
    }
    if k >= energies.len() {
        return values[energies.len() - 1];
    }
    let (x0, x1) = (energies[k - 1], energies[k]);
    let t = (e - x0) / (x1 - x0);
    values[k - 1] + t * (values[k] - values[k - 1])
}

/// Centered difference quotient `(N(E + h/2) - N(E - h/2)) / h` at every
/// grid point whose stencil fits inside the grid. Off-grid stencil points
/// use linear interpolation. With per-realization samples the standard
/// error is that of the per-realization quotients; otherwise the endpoint
/// errors are combined as if independent.
pub fn empirical_dos(curve: &SpectralCurve, h: f64) -> Result<SpectralCurve> {
    if curve.len() < 2 {
        return Err(Error::param("energies", "need at least two grid points"));
    }
    check_ascending(&curve.energies)?;
    let spacing = curve
        .energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let coarsest = curve.energies.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if !(h.is_finite() && h >= 2.0 * coarsest * (1.0 - 1e-9)) {
        return Err(Error::param(
            "algorithm.h",
            format!("bin width {h} is below twice the grid spacing {coarsest}"),
        ));
    }
    let lo = curve.energies[0];
    let hi = curve.energies[curve.len() - 1];
    let slack = 1e-9 * spacing;
    let (mut energies, mut values, mut stderr) = (Vec::new(), Vec::new(), Vec::new());
    let mut sample_out: Option<Vec<Vec<f64>>> = curve.samples.as_ref().map(|s| vec![Vec::new(); s.len()]);
    for &e in &curve.energies {
        let (a, b) = (e - h / 2.0, e + h / 2.0);
        if a < lo - slack || b > hi + slack {
            continue;
        }
        let (a, b) = (a.max(lo), b.min(hi));
        energies.push(e);
        match &curve.samples {
            Some(samples) => {
                let q: Vec<f64> = samples
                    .iter()
                    .map(|s| (interpolate(&curve.energies, s, b) - interpolate(&curve.energies, s, a)) / h)
                    .collect();
                let r = q.len() as f64;
                let mean = q.iter().sum::<f64>() / r;
                let se = if q.len() < 2 {
                    0.0
                } else {
                    (q.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
                };
                values.push(mean);
                stderr.push(se);
                if let Some(out) = sample_out.as_mut() {
                    for (o, v) in out.iter_mut().zip(&q) {
                        o.push(*v);
                    }
                }
            }
            None => {
                let na = interpolate(&curve.energies, &curve.values, a);
                let nb = interpolate(&curve.energies, &curve.values, b);
                let sa = interpolate(&curve.energies, &curve.stderr, a);
                let sb = interpolate(&curve.energies, &curve.stderr, b);
                values.push((nb - na) / h);
                stderr.push((sa * sa + sb * sb).sqrt() / h);
            }
        }
    }
    let mut metadata = curve.metadata.clone();
    metadata.insert("h".into(), fmt17(h));
    Ok(SpectralCurve {
        kind: CurveKind::Dos,
        energies,
        values,
        stderr,
        metadata,
        samples: sample_out,
    })
}

type SpectrumCache = RwLock<HashMap<(usize, usize), Arc<Vec<f64>>>>;

fn free_spectrum_cache() -> &'static SpectrumCache {
    static CACHE: OnceLock<SpectrumCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Sorted eigenvalues of the Dirichlet Laplacian on the cube of side `ell`
/// in dimension `dim`.
///
/// The operator is the Kronecker sum of `dim` copies of the one-dimensional
/// Dirichlet Laplacian (exterior-neighbor counts add up axis by axis), so
/// its spectrum is the set of sums of one-dimensional eigenvalues. Results
/// are cached.
pub fn free_dirichlet_spectrum(dim: usize, ell: usize) -> Result<Arc<Vec<f64>>> {
    build_cube(dim, ell)?;
    if let Some(s) = free_spectrum_cache().read().expect("cache lock").get(&(dim, ell)) {
        return Ok(Arc::clone(s));
    }
    let line = full_spectrum(&build_dirichlet_laplacian(&build_cube(1, ell)?))?.into_values();
    let mut sums = vec![0.0];
    for _ in 0..dim {
        sums = sums.iter().flat_map(|&s| line.iter().map(move |&v| s + v)).collect();
    }
    sums.sort_by(f64::total_cmp);
    let sums = Arc::new(sums);
    free_spectrum_cache()
        .write()
        .expect("cache lock")
        .entry((dim, ell))
        .or_insert_with(|| Arc::clone(&sums));
    Ok(sums)
}

/// `N^(0)_ell(lambda) = ell^-d #{eigenvalues of L_ell <= lambda}`.
pub fn free_ids_finite(dim: usize, ell: usize, lambda: f64) -> Result<f64> {
    if ell == 0 {
        return Err(Error::param("ell", "must be at least 1"));
    }
    let spec = free_dirichlet_spectrum(dim, ell)?;
    let tol = NUDGE * (2.0 * dim as f64).max(lambda.abs());
    let count = spec.partition_point(|&v| v <= lambda + tol);
    Ok(count as f64 / spec.len() as f64)
}

/// Closed-form IDS of the one-dimensional free Laplacian,
/// `1 - arccos(lambda / 2) / pi` on `[-2, 2]`.
pub fn free_ids_1d(lambda: f64) -> f64 {
    if lambda <= -2.0 {
        0.0
    } else if lambda >= 2.0 {
        1.0
    } else {
        1.0 - (lambda / 2.0).acos() / PI
    }
}

/// Number of grid points used by the convolution path.
pub const CONVOLUTION_POINTS: usize = 1 << 16;

/// Distribution of a sum of `terms` independent arcsine variables on the
/// lattice `k * step`: masses indexed from `k = -offset`.
#[derive(Debug)]
struct LatticeLaw {
    step: f64,
    offset: usize,
    mass: Vec<f64>,
}

fn arcsine_cell_masses(step: f64) -> LatticeLaw {
    // cells [k step - step/2, k step + step/2] meeting [-2, 2]
    let half = (2.0 / step + 0.5).ceil() as usize;
    let mass = (0..=2 * half)
        .map(|i| {
            let x = (i as f64 - half as f64) * step;
            let a = (x - step / 2.0).clamp(-2.0, 2.0);
            let b = (x + step / 2.0).clamp(-2.0, 2.0);
            ((b / 2.0).asin() - (a / 2.0).asin()) / PI
        })
        .collect();
    LatticeLaw {
        step,
        offset: half,
        mass,
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    let n = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fa.resize(n, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fb.resize(n, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inv.process(&mut fa);
    fa.truncate(len);
    fa.iter().map(|c| c.re / n as f64).collect()
}

type LawCache = RwLock<HashMap<(usize, usize), Arc<LatticeLaw>>>;

fn law_cache() -> &'static LawCache {
    static CACHE: OnceLock<LawCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Law of `terms` arcsine variables discretized with the grid for
/// dimension `dim` using `points` nodes on `[-2d-1, 2d+1]`.
fn partial_sum_law(dim: usize, terms: usize, points: usize) -> Arc<LatticeLaw> {
    if let Some(law) = law_cache().read().expect("cache lock").get(&(dim, points)) {
        return Arc::clone(law);
    }
    let step = (4.0 * dim as f64 + 2.0) / points as f64;
    let law = if terms == 0 {
        LatticeLaw {
            step,
            offset: 0,
            mass: vec![1.0],
        }
    } else {
        let one = arcsine_cell_masses(step);
        let mut acc = one.mass.clone();
        let mut offset = one.offset;
        for _ in 1..terms {
            acc = convolve(&acc, &one.mass);
            offset += one.offset;
        }
        LatticeLaw { step, offset, mass: acc }
    };
    let law = Arc::new(law);
    law_cache()
        .write()
        .expect("cache lock")
        .entry((dim, points))
        .or_insert_with(|| Arc::clone(&law));
    law
}

fn free_ids_with_points(dim: usize, lambda: f64, points: usize) -> f64 {
    let band = 2.0 * dim as f64;
    if lambda <= -band {
        return 0.0;
    }
    if lambda >= band {
        return 1.0;
    }
    // N_d(lambda) = E[ F_1(lambda - S_{d-1}) ] with the exact one-dimensional F_1
    let law = partial_sum_law(dim, dim - 1, points);
    let v: f64 = law
        .mass
        .iter()
        .enumerate()
        .filter(|(_, &m)| m != 0.0)
        .map(|(i, &m)| m * free_ids_1d(lambda - (i as f64 - law.offset as f64) * law.step))
        .sum();
    v.clamp(0.0, 1.0)
}

/// Infinite-volume IDS of the free Laplacian on `Z^d`: the distribution
/// function at `lambda` of `2 cos(theta_1) + .. + 2 cos(theta_d)`.
///
/// The law of the first `d - 1` terms is built on a uniform grid of
/// [`CONVOLUTION_POINTS`] nodes spanning `[-2d-1, 2d+1]`, with each cell's
/// arcsine mass integrated in closed form and the terms combined by FFT
/// convolution; the last term enters through the exact one-dimensional
/// distribution function.
pub fn free_ids_infinite(dim: usize, lambda: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::param("d", "dimension must be at least 1"));
    }
    Ok(free_ids_with_points(dim, lambda, CONVOLUTION_POINTS))
}

/// Tabulated infinite-volume free IDS.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeIdsTable {
    pub dim: usize,
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest change against the same computation on a grid half as fine.
    pub error_estimate: f64,
}

impl FreeIdsTable {
    pub fn to_curve(&self) -> SpectralCurve {
        let mut c = SpectralCurve::exact(CurveKind::FreeIds, self.energies.clone(), self.values.clone());
        c.metadata.insert("d".into(), self.dim.to_string());
        c.metadata.insert("error_estimate".into(), fmt17(self.error_estimate));
        c
    }
}

pub fn free_ids_table(dim: usize, energies: &[f64]) -> Result<FreeIdsTable> {
    if dim == 0 {
        return Err(Error::param("d", "dimension must be at least 1"));
    }
    check_ascending(energies)?;
    let values: Vec<f64> = energies.iter().map(|&e| free_ids_with_points(dim, e, CONVOLUTION_POINTS)).collect();
    let error_estimate = energies
        .iter()
        .zip(&values)
        .map(|(&e, &v)| (free_ids_with_points(dim, e, CONVOLUTION_POINTS / 2) - v).abs())
        .fold(0.0, f64::max);
    Ok(FreeIdsTable {
        dim,
        energies: energies.to_vec(),
        values,
        error_estimate,
    })
}
