//! Lower and upper bounds on the density of states.
//!
//! The lower bound `n(E) >= C_delta` is assembled from free-Laplacian data
//! only: for each covering center `E_j` a cell side `ell_j` is searched such
//! that the finite-volume difference `K_ell` beats the boundary-defect
//! penalty `D / ell`, and the center contributes
//! `(delta rho_min)^(ell^d) K(E_j) / (2 delta)`. Everything is kept in
//! natural-log space since the linear value underflows for any realistic
//! `ell`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{free_ids_finite, free_ids_infinite, SpectralCurve};
use crate::runner::parallel_map;

pub const TOOL_NAME: &str = "wegnerlab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest number of cell sites the default search will consider.
pub const DEFAULT_CELL_SITES: usize = 4096;

fn check_delta(w_minus: f64, w_plus: f64, delta: f64) -> Result<()> {
    if !(w_minus.is_finite() && w_plus.is_finite() && w_minus < w_plus) {
        return Err(Error::param("density", "need finite W_minus < W_plus"));
    }
    if !(delta > 0.0 && delta < (w_plus - w_minus) / 4.0) {
        return Err(Error::param(
            "delta",
            format!("need 0 < delta < (W_plus - W_minus)/4 = {}", (w_plus - w_minus) / 4.0),
        ));
    }
    Ok(())
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::param("d", "dimension must be at least 1"));
    }
    Ok(())
}

/// `K_ell(E1, E2) = N0_ell(E1 - W- - delta) - N0_ell(E2 - W+ + delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KRecord {
    pub e1: f64,
    pub e2: f64,
    pub delta: f64,
    pub ell: usize,
    pub value: f64,
}

pub fn k_ell(dim: usize, ell: usize, e1: f64, e2: f64, w_minus: f64, w_plus: f64, delta: f64) -> Result<KRecord> {
    check_dim(dim)?;
    check_delta(w_minus, w_plus, delta)?;
    let value = free_ids_finite(dim, ell, e1 - w_minus - delta)? - free_ids_finite(dim, ell, e2 - w_plus + delta)?;
    Ok(KRecord {
        e1,
        e2,
        delta,
        ell,
        value,
    })
}

/// `K(E0) = N0(E0 - W- - 2 delta) - N0(E0 - W+ + 2 delta)` in infinite volume.
pub fn k_limit(dim: usize, e0: f64, w_minus: f64, w_plus: f64, delta: f64) -> Result<f64> {
    check_dim(dim)?;
    check_delta(w_minus, w_plus, delta)?;
    Ok(free_ids_infinite(dim, e0 - w_minus - 2.0 * delta)? - free_ids_infinite(dim, e0 - w_plus + 2.0 * delta)?)
}

/// Outcome of the cell-side search at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EllSearch {
    pub ell: usize,
    pub k_ell: f64,
    pub k_limit: f64,
    /// `(ell, K_ell - D/ell)` for every side tried.
    pub trajectory: Vec<(usize, f64)>,
}

/// Default `ell_max`: the largest side whose cell has at most
/// [`DEFAULT_CELL_SITES`] sites.
pub fn default_ell_max(dim: usize) -> usize {
    let mut ell = 1usize;
    while (ell + 1).checked_pow(dim as u32).is_some_and(|s| s <= DEFAULT_CELL_SITES) {
        ell += 1;
    }
    ell
}

pub fn default_d_rank(dim: usize) -> f64 {
    4.0 * dim as f64
}

/// Smallest `ell <= ell_max` with `K_ell(E0 - delta, E0 + delta) - D/ell >= K(E0)/2`.
pub fn find_ell(
    dim: usize,
    e0: f64,
    w_minus: f64,
    w_plus: f64,
    delta: f64,
    d_rank: f64,
    ell_max: usize,
) -> Result<EllSearch> {
    if !(d_rank >= 0.0 && d_rank.is_finite()) {
        return Err(Error::param("D_rank", "must be finite and nonnegative"));
    }
    let k = k_limit(dim, e0, w_minus, w_plus, delta)?;
    if !(k > 0.0) {
        return Err(Error::OutsideWindow { energy: e0, k });
    }
    let mut trajectory = Vec::new();
    for ell in 1..=ell_max {
        let kl = k_ell(dim, ell, e0 - delta, e0 + delta, w_minus, w_plus, delta)?.value;
        let margin = kl - d_rank / ell as f64;
        trajectory.push((ell, margin));
        if margin >= k / 2.0 {
            return Ok(EllSearch {
                ell,
                k_ell: kl,
                k_limit: k,
                trajectory,
            });
        }
    }
    Err(Error::SearchExhausted {
        energy: e0,
        ell_max,
        trajectory,
    })
}

/// Inputs of a lower-bound certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateInput {
    pub dim: usize,
    pub w_minus: f64,
    pub w_plus: f64,
    pub rho_min: f64,
    pub delta: f64,
    pub d_rank: f64,
    pub ell_max: usize,
    /// Distance by which the first and last centers are moved inside the
    /// window where `K` is positive.
    pub edge_margin: f64,
}

impl CertificateInput {
    /// Defaults: `D_rank = 4d`, `ell_max` from [`default_ell_max`] and an
    /// edge margin of `delta / 10`.
    pub fn new(dim: usize, w_minus: f64, w_plus: f64, rho_min: f64, delta: f64) -> Self {
        CertificateInput {
            dim,
            w_minus,
            w_plus,
            rho_min,
            delta,
            d_rank: default_d_rank(dim),
            ell_max: default_ell_max(dim),
            edge_margin: delta / 10.0,
        }
    }

    fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        check_delta(self.w_minus, self.w_plus, self.delta)?;
        if !(self.rho_min > 0.0 && self.rho_min.is_finite()) {
            return Err(Error::param("rho_min", "must be positive and finite"));
        }
        if self.ell_max == 0 {
            return Err(Error::param("ell_max", "must be at least 1"));
        }
        if !(self.edge_margin > 0.0 && self.edge_margin < self.delta) {
            return Err(Error::param("edge_margin", "need 0 < edge_margin < delta"));
        }
        if !(self.d_rank >= 0.0 && self.d_rank.is_finite()) {
            return Err(Error::param("D_rank", "must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Covering centers, spaced `2 delta` apart from the lower end of the
    /// window, the last one clamped to the upper end.
    pub fn centers(&self) -> Vec<f64> {
        let band = 2.0 * self.dim as f64;
        let first = -band + self.w_minus + 2.0 * self.delta + self.edge_margin;
        let last = band + self.w_plus - 2.0 * self.delta - self.edge_margin;
        let step = 2.0 * self.delta;
        let mut centers: Vec<f64> = (0..)
            .map(|j| first + step * j as f64)
            .take_while(|&e| e < last)
            .collect();
        centers.push(last);
        centers
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterRecord {
    pub index: usize,
    pub energy: f64,
    pub k_limit: f64,
    pub ell: usize,
    pub k_ell: f64,
    /// `ell^d`.
    pub alpha: u64,
    /// `alpha ln(delta rho_min) - ln(2 delta) + ln K(E_j)`.
    pub log_contribution: f64,
}

/// Re-checkable record of the lower bound `n(E) >= C_delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WegnerCertificate {
    pub tool: String,
    pub version: String,
    pub input: CertificateInput,
    /// The closed window `[-2d + W- + delta, 2d + W+ - delta]` named by the bound.
    pub target_window: [f64; 2],
    /// The window actually covered by `[E_j - delta, E_j + delta]`.
    pub covered_window: [f64; 2],
    pub note: String,
    pub centers: Vec<CenterRecord>,
    pub log_c_delta: f64,
    pub log10_c_delta: f64,
    pub c_delta: String,
    pub argmin: usize,
}

/// `10^log10` as `m.mmmmmme[-]x` without ever leaving log space.
pub fn decimal_exponent_string(log10: f64) -> String {
    if !log10.is_finite() {
        return format!("{log10}");
    }
    let mut exponent = log10.floor();
    let mut mantissa = 10f64.powf(log10 - exponent);
    if mantissa >= 9.9999995 {
        mantissa = 1.0;
        exponent += 1.0;
    }
    format!("{mantissa:.6}e{exponent:.0}")
}

fn center_record(input: &CertificateInput, index: usize, energy: f64) -> Result<CenterRecord> {
    let search = find_ell(
        input.dim,
        energy,
        input.w_minus,
        input.w_plus,
        input.delta,
        input.d_rank,
        input.ell_max,
    )?;
    let alpha = (search.ell as u64)
        .checked_pow(input.dim as u32)
        .ok_or_else(|| Error::param("ell", "ell^d overflows"))?;
    let log_base = (input.delta * input.rho_min).ln();
    let log_contribution = alpha as f64 * log_base - (2.0 * input.delta).ln() + search.k_limit.ln();
    if !log_contribution.is_finite() {
        return Err(Error::param(
            "log C_delta",
            format!("contribution {log_contribution} is not finite"),
        ));
    }
    Ok(CenterRecord {
        index,
        energy,
        k_limit: search.k_limit,
        ell: search.ell,
        k_ell: search.k_ell,
        alpha,
        log_contribution,
    })
}

/// Builds the certificate, searching the centers on up to `workers` threads.
pub fn lower_bound_constant(input: &CertificateInput, workers: usize) -> Result<WegnerCertificate> {
    input.validate()?;
    let centers = input.centers();
    let records = parallel_map(centers.len(), workers, |j| {
        center_record(input, j, centers[j]).map_err(|e| Error::Certificate {
            index: j,
            energy: centers[j],
            source: Box::new(e),
        })
    })
    .map_err(|e| match e {
        // unwrap the worker envelope so the failing center stays visible
        Error::Worker { index, reason } => Error::Certificate {
            index,
            energy: centers[index],
            source: Box::new(Error::param("center", reason)),
        },
        other => other,
    })?;
    let (argmin, min) = records
        .iter()
        .map(|r| r.log_contribution)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    let band = 2.0 * input.dim as f64;
    let log10 = min / std::f64::consts::LN_10;
    Ok(WegnerCertificate {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        input: input.clone(),
        target_window: [-band + input.w_minus + input.delta, band + input.w_plus - input.delta],
        covered_window: [
            -band + input.w_minus + input.delta + input.edge_margin,
            band + input.w_plus - input.delta - input.edge_margin,
        ],
        note: format!(
            "K vanishes at centers -2d+W_minus+2delta and 2d+W_plus-2delta, so the outermost centers \
             sit edge_margin = {} inside them; the covered window falls short of the target window \
             by that margin at each end",
            input.edge_margin
        ),
        centers: records,
        log_c_delta: min,
        log10_c_delta: log10,
        c_delta: decimal_exponent_string(log10),
        argmin,
    })
}

impl WegnerCertificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Recomputes the certificate from its recorded inputs and reports
    /// whether every field is reproduced exactly.
    pub fn recheck(&self) -> Result<bool> {
        let again = lower_bound_constant(&self.input, 1)?;
        Ok(again.to_json()? == self.to_json()? && again == *self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinCheck {
    pub energy: f64,
    pub value: f64,
    pub stderr: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Per-bin comparison of a DOS curve against `rho_max + 3 stderr`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBoundReport {
    pub rho_max: Option<f64>,
    /// Set when the check could not be run.
    pub notice: Option<String>,
    pub bins: Vec<BinCheck>,
    pub passed: bool,
    pub max_ratio: f64,
    pub failures: Vec<usize>,
}

pub fn upper_bound_check(dos: &SpectralCurve, rho_max: Option<f64>) -> UpperBoundReport {
    let Some(rho) = rho_max.filter(|r| r.is_finite() && *r > 0.0) else {
        return UpperBoundReport {
            rho_max,
            notice: Some("rho_max is unbounded; upper-bound check skipped".into()),
            bins: Vec::new(),
            passed: false,
            max_ratio: f64::NAN,
            failures: Vec::new(),
        };
    };
    let bins: Vec<BinCheck> = (0..dos.len())
        .map(|k| {
            let threshold = rho + 3.0 * dos.stderr[k];
            BinCheck {
                energy: dos.energies[k],
                value: dos.values[k],
                stderr: dos.stderr[k],
                threshold,
                passed: dos.values[k] <= threshold,
            }
        })
        .collect();
    let failures: Vec<usize> = bins.iter().enumerate().filter(|(_, b)| !b.passed).map(|(i, _)| i).collect();
    let max_ratio = dos.values.iter().map(|v| v / rho).fold(0.0, f64::max);
    UpperBoundReport {
        rho_max,
        notice: None,
        passed: failures.is_empty(),
        bins,
        max_ratio,
        failures,
    }
}

/// Lower-bound consistency on a window: every statistically resolved bin
/// (stderr < value) must be positive and at least `C_delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub window: [f64; 2],
    pub log_c_delta: f64,
    pub resolved_bins: usize,
    pub unresolved_bins: usize,
    pub positive: bool,
    pub above_c_delta: bool,
    pub failures: Vec<f64>,
}

pub fn lower_bound_check(dos: &SpectralCurve, window: [f64; 2], log_c_delta: f64) -> LowerBoundReport {
    let (mut resolved, mut unresolved) = (0, 0);
    let (mut positive, mut above) = (true, true);
    let mut failures = Vec::new();
    for k in 0..dos.len() {
        let e = dos.energies[k];
        if e < window[0] || e > window[1] {
            continue;
        }
        let (v, s) = (dos.values[k], dos.stderr[k]);
        if !(s < v) {
            unresolved += 1;
            continue;
        }
        resolved += 1;
        let pos = v > 0.0;
        let ab = log_c_delta.is_finite() && v.ln() >= log_c_delta;
        positive &= pos;
        above &= ab;
        if !(pos && ab) {
            failures.push(e);
        }
    }
    LowerBoundReport {
        window,
        log_c_delta,
        resolved_bins: resolved,
        unresolved_bins: unresolved,
        positive,
        above_c_delta: above,
        failures,
    }
}
