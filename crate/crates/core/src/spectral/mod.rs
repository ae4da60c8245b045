//! Numerical engines: full symmetric eigenvalue computation, inertia
//! counting and switch-function traces.

mod inertia;
mod switch;
mod tridiag;

pub use inertia::{count_below, EigenCount, InertiaCounter, NUDGE};
pub use switch::{monotonicity_probe, switch_trace, switch_trace_of, SwitchFunction};
pub use tridiag::{householder_tridiagonalize, tridiagonal_eigenvalues, MAX_SWEEPS};

use crate::error::{Error, Result};
use crate::operator::{SymmetricOperator, DENSE_LIMIT};

/// Sorted eigenvalues together with cheap a-posteriori consistency metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    values: Vec<f64>,
    trace_residual: f64,
    frobenius_residual: f64,
}

impl EigenSpectrum {
    /// Ascending eigenvalues.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `|sum lambda_k - tr A|`.
    pub fn trace_residual(&self) -> f64 {
        self.trace_residual
    }

    /// `|sqrt(sum lambda_k^2) - ||A||_F|`.
    pub fn frobenius_residual(&self) -> f64 {
        self.frobenius_residual
    }

    /// Number of eigenvalues `<= energy`.
    pub fn count_le(&self, energy: f64) -> usize {
        self.values.partition_point(|&v| v <= energy)
    }
}

/// All eigenvalues of `a`. Tridiagonal operators go straight to the QL
/// iteration; everything else is first reduced by Householder reflections,
/// which requires `n <= DENSE_LIMIT`.
pub fn full_spectrum(a: &SymmetricOperator) -> Result<EigenSpectrum> {
    let n = a.dim();
    let values = if let Some((d, e)) = a.as_tridiagonal() {
        tridiagonal_eigenvalues(d, &e)?
    } else {
        if n > DENSE_LIMIT {
            return Err(Error::Resource(format!(
                "full spectrum of a non-tridiagonal {n}x{n} operator exceeds the dense limit of {DENSE_LIMIT}"
            )));
        }
        let mut dense = a.to_dense()?;
        let (d, e) = householder_tridiagonalize(n, &mut dense);
        tridiagonal_eigenvalues(d, &e)?
    };
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    Ok(EigenSpectrum {
        trace_residual: (sum - a.trace()).abs(),
        frobenius_residual: (sum_sq.sqrt() - a.frobenius_sq().sqrt()).abs(),
        values,
    })
}
