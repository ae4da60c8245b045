//! Eigenvalue counting by Sylvester's law of inertia.
//!
//! The number of eigenvalues of `A` below `E` equals the number of negative
//! pivots of any symmetric `L D L^T` factorization of `A - E I`. Three
//! factorizations are used depending on structure:
//!
//! * tridiagonal: the Sturm recurrence, `O(n)`;
//! * dense: Bunch-Kaufman with 1x1 / 2x2 symmetric pivoting, `O(n^3)`;
//! * banded bond-list: band `L D L^T` without pivoting, `O(n b^2)`.
//!
//! A zero pivot means `E` is (numerically) an eigenvalue. The count is then
//! redone at `E + 1e-12 * scale`, which counts that eigenvalue, matching the
//! closed-interval convention `#{k : lambda_k <= E}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::SymmetricOperator;

/// Relative size of the nudge applied when `E` hits an eigenvalue.
pub const NUDGE: f64 = 1e-12;

const MAX_NUDGES: u32 = 16;

/// Result of an inertia count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenCount {
    /// Number of eigenvalues `<= energy`.
    pub count: usize,
    pub energy: f64,
    /// Energy at which the factorization finally succeeded, if it differs
    /// from `energy`.
    pub nudged_to: Option<f64>,
}

#[derive(Debug)]
struct ZeroPivot;

enum Kernel {
    Tridiagonal(Vec<f64>, Vec<f64>),
    Dense(Vec<f64>),
    Banded { diag: Vec<f64>, upper: Vec<(usize, usize, f64)>, bandwidth: usize },
}

/// Counts eigenvalues `<= energy` at many energies, preparing the
/// factorization kernel once.
pub struct InertiaCounter {
    n: usize,
    scale: f64,
    kernel: Kernel,
}

impl InertiaCounter {
    pub fn new(a: &SymmetricOperator) -> Self {
        let n = a.dim();
        let scale = a.max_abs_entry().max(1.0);
        let kernel = if let Some((d, e)) = a.as_tridiagonal() {
            Kernel::Tridiagonal(d, e)
        } else if a.is_dense() {
            Kernel::Dense(a.to_dense().expect("dense storage"))
        } else {
            Kernel::Banded {
                diag: a.diag(),
                upper: a.upper_entries(),
                bandwidth: a.bandwidth(),
            }
        };
        InertiaCounter { n, scale, kernel }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn count(&self, energy: f64) -> Result<EigenCount> {
        if !energy.is_finite() {
            return Err(Error::param("E", "energy must be finite"));
        }
        let step = NUDGE * self.scale.max(energy.abs());
        let mut shift = energy;
        for attempt in 0..=MAX_NUDGES {
            let outcome = match &self.kernel {
                Kernel::Tridiagonal(d, e) => sturm_count(d, e, shift),
                Kernel::Dense(a) => bunch_kaufman_count(self.n, a, shift),
                Kernel::Banded { diag, upper, bandwidth } => banded_count(diag, upper, *bandwidth, shift),
            };
            match outcome {
                Ok(count) => {
                    return Ok(EigenCount {
                        count,
                        energy,
                        nudged_to: (attempt > 0).then_some(shift),
                    })
                }
                Err(ZeroPivot) => shift += step * f64::from(1u32 << attempt.min(20)),
            }
        }
        Err(Error::param(
            "E",
            format!("factorization of A - E I kept hitting zero pivots near E = {energy}"),
        ))
    }
}

/// Number of eigenvalues of `a` that are `<= energy`, with nudge metadata.
pub fn count_below(a: &SymmetricOperator, energy: f64) -> Result<EigenCount> {
    InertiaCounter::new(a).count(energy)
}

fn sturm_count(d: &[f64], e: &[f64], shift: f64) -> std::result::Result<usize, ZeroPivot> {
    let mut negatives = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let coupling = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - shift - coupling;
        if q == 0.0 {
            return Err(ZeroPivot);
        }
        if q < 0.0 {
            negatives += 1;
        }
    }
    Ok(negatives)
}

/// Inertia of a 2x2 symmetric pivot block `[[a, b], [b, c]]`.
fn block_negatives(a: f64, b: f64, c: f64) -> std::result::Result<usize, ZeroPivot> {
    let det = a * c - b * b;
    if det == 0.0 {
        Err(ZeroPivot)
    } else if det < 0.0 {
        Ok(1)
    } else if a + c < 0.0 {
        Ok(2)
    } else {
        Ok(0)
    }
}

fn bunch_kaufman_count(n: usize, a: &[f64], shift: f64) -> std::result::Result<usize, ZeroPivot> {
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut m = a.to_vec();
    for i in 0..n {
        m[i * n + i] -= shift;
    }
    let at = |m: &Vec<f64>, i: usize, j: usize| m[i * n + j];

    let swap = |m: &mut Vec<f64>, p: usize, q: usize| {
        if p == q {
            return;
        }
        for j in 0..n {
            m.swap(p * n + j, q * n + j);
        }
        for i in 0..n {
            m.swap(i * n + p, i * n + q);
        }
    };

    let mut negatives = 0;
    let mut k = 0;
    while k < n {
        let absakk = at(&m, k, k).abs();
        let (imax, colmax) = (k + 1..n)
            .map(|i| (i, at(&m, i, k).abs()))
            .fold((k, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });

        if absakk.max(colmax) == 0.0 {
            return Err(ZeroPivot);
        }

        let two_by_two = if absakk >= alpha * colmax {
            false
        } else {
            let rowmax = (k..n)
                .filter(|&j| j != imax)
                .map(|j| at(&m, imax, j).abs())
                .fold(0.0, f64::max);
            if absakk * rowmax >= alpha * colmax * colmax {
                false
            } else if at(&m, imax, imax).abs() >= alpha * rowmax {
                swap(&mut m, k, imax);
                false
            } else {
                swap(&mut m, k + 1, imax);
                true
            }
        };

        if !two_by_two {
            let p = at(&m, k, k);
            if p == 0.0 {
                return Err(ZeroPivot);
            }
            if p < 0.0 {
                negatives += 1;
            }
            for i in k + 1..n {
                let li = at(&m, i, k) / p;
                if li == 0.0 {
                    continue;
                }
                for j in k + 1..=i {
                    let v = at(&m, i, j) - li * at(&m, j, k);
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            k += 1;
        } else {
            let (a11, a21, a22) = (at(&m, k, k), at(&m, k + 1, k), at(&m, k + 1, k + 1));
            negatives += block_negatives(a11, a21, a22)?;
            let det = a11 * a22 - a21 * a21;
            for i in k + 2..n {
                let (ci, di) = (at(&m, i, k), at(&m, i, k + 1));
                // row i of [c d] * inv(block)
                let wi1 = (ci * a22 - di * a21) / det;
                let wi2 = (di * a11 - ci * a21) / det;
                for j in k + 2..=i {
                    let v = at(&m, i, j) - wi1 * at(&m, j, k) - wi2 * at(&m, j, k + 1);
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            k += 2;
        }
    }
    Ok(negatives)
}

fn banded_count(
    diag: &[f64],
    upper: &[(usize, usize, f64)],
    bandwidth: usize,
    shift: f64,
) -> std::result::Result<usize, ZeroPivot> {
    let n = diag.len();
    let w = bandwidth + 1;
    // band[i * w + t] holds A[i][i - t]
    let mut band = vec![0.0; n * w];
    for i in 0..n {
        band[i * w] = diag[i] - shift;
    }
    for &(i, j, v) in upper {
        band[j * w + (j - i)] = v;
    }
    let mut negatives = 0;
    for k in 0..n {
        let p = band[k * w];
        if p == 0.0 {
            return Err(ZeroPivot);
        }
        if p < 0.0 {
            negatives += 1;
        }
        let last = (k + bandwidth).min(n - 1);
        for i in k + 1..=last {
            let aik = band[i * w + (i - k)];
            if aik == 0.0 {
                continue;
            }
            let li = aik / p;
            for j in k + 1..=i {
                let ajk = band[j * w + (j - k)];
                band[i * w + (i - j)] -= li * ajk;
            }
        }
    }
    Ok(negatives)
}
