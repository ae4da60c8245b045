//! Smoothed eigenvalue counting with a `C^1` switch function.

use crate::error::{Error, Result};
use crate::operator::SymmetricOperator;
use crate::spectral::{full_spectrum, EigenSpectrum};

/// Monotone `C^1` ramp from 0 (for `t <= 0`) to 1 (for `t >= width`): the
/// cubic smoothstep `3s^2 - 2s^3`, `s = t / width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchFunction {
    width: f64,
}

impl SwitchFunction {
    pub fn new(width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::param("epsilon", "switch width must be positive and finite"));
        }
        Ok(SwitchFunction { width })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= self.width {
            1.0
        } else {
            let s = t / self.width;
            s * s * (3.0 - 2.0 * s)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.width {
            0.0
        } else {
            let s = t / self.width;
            6.0 * s * (1.0 - s) / self.width
        }
    }
}

/// `sum_k f(lambda - lambda_k)` over a precomputed spectrum.
pub fn switch_trace_of(spectrum: &EigenSpectrum, lambda: f64, f: &SwitchFunction) -> f64 {
    spectrum.values().iter().map(|&ev| f.eval(lambda - ev)).sum()
}

/// `F(lambda) = tr f(lambda - A)`.
pub fn switch_trace(a: &SymmetricOperator, lambda: f64, f: &SwitchFunction) -> Result<f64> {
    Ok(switch_trace_of(&full_spectrum(a)?, lambda, f))
}

/// `F(lambda)` before and after adding `h` to the diagonal entry at `site`.
pub fn monotonicity_probe(
    a: &SymmetricOperator,
    site: usize,
    h: f64,
    lambda: f64,
    f: &SwitchFunction,
) -> Result<(f64, f64)> {
    if !(h >= 0.0) {
        return Err(Error::param("h", "increment must be nonnegative"));
    }
    if site >= a.dim() {
        return Err(Error::Shape {
            expected: a.dim(),
            got: site + 1,
        });
    }
    let before = switch_trace(a, lambda, f)?;
    let after = switch_trace(&a.add_to_site(site, h), lambda, f)?;
    Ok((before, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_cube;
    use crate::operator::build_dirichlet_laplacian;

    #[test]
    fn plateaus_and_shape() {
        let f = SwitchFunction::new(0.5).unwrap();
        assert_eq!(f.eval(-1.0), 0.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(3.0), 1.0);
        assert_eq!(f.eval(0.25), 0.5);
        assert!(SwitchFunction::new(0.0).is_err());
    }

    #[test]
    fn derivative_checks() {
        let f = SwitchFunction::new(0.3).unwrap();
        let n = 10_000;
        let (lo, hi) = (-0.5, 0.8);
        let dx = (hi - lo) / n as f64;
        for k in 0..n {
            let x = lo + k as f64 * dx;
            let fd = (f.eval(x + dx) - f.eval(x)) / dx;
            assert!(fd >= -1e-10);
            if x + dx <= 0.0 || x >= 0.3 {
                assert_eq!(fd, 0.0);
            }
        }
        // C^1 at the knots: one-sided difference quotients vanish
        for knot in [0.0, 0.3] {
            for hstep in [1e-4, 1e-6] {
                let right = (f.eval(knot + hstep) - f.eval(knot)) / hstep;
                let left = (f.eval(knot) - f.eval(knot - hstep)) / hstep;
                assert!(right.abs() < 10.0 * hstep / 0.09 + 1e-9);
                assert!(left.abs() < 10.0 * hstep / 0.09 + 1e-9);
            }
        }
    }

    #[test]
    fn trace_examples() {
        let l2 = build_dirichlet_laplacian(&build_cube(1, 2).unwrap());
        let f = SwitchFunction::new(0.5).unwrap();
        assert_eq!(switch_trace(&l2, -0.1, &f).unwrap(), 0.0);
        assert_eq!(switch_trace(&l2, 2.5, &f).unwrap(), 2.0);
        assert!((switch_trace(&l2, 1.0, &f).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn probe_examples() {
        let f = SwitchFunction::new(0.4).unwrap();
        let l = build_dirichlet_laplacian(&build_cube(1, 3).unwrap());
        let (b, a) = monotonicity_probe(&l, 1, 0.0, 0.7, &f).unwrap();
        assert_eq!(a, b);

        let single = SymmetricOperator::diagonal(vec![0.0]);
        let (b, a) = monotonicity_probe(&single, 0, 0.4, 0.2, &f).unwrap();
        assert!(a < b);
        assert!(monotonicity_probe(&single, 0, -1.0, 0.2, &f).is_err());
    }
}
