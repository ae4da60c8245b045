//! Python bindings: densities, operators, counting, IDS/DOS, certificates
//! and level spacings.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wegnerlab::disorder::{self, SingleSiteDensity};
use wegnerlab::geometry::{build_cube, partition_cube};
use wegnerlab::ids::{self, CurveKind, IdsRun, SpectralCurve};
use wegnerlab::levels::{self, SpacingRun};
use wegnerlab::operator::{self, SymmetricOperator};
use wegnerlab::spectral;
use wegnerlab::wegner::{self, CertificateInput};
use wegnerlab::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Parameter { .. } | Error::Config { .. } | Error::Shape { .. } | Error::InvalidPartition { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Single-site law of the random potential.
#[pyclass(name = "Density", frozen)]
pub struct Density {
    inner: SingleSiteDensity,
}

#[pymethods]
impl Density {
    #[staticmethod]
    pub fn uniform(w_minus: f64, w_plus: f64) -> PyResult<Self> {
        Ok(Density {
            inner: SingleSiteDensity::uniform(w_minus, w_plus).map_err(to_py)?,
        })
    }

    #[staticmethod]
    pub fn piecewise_constant(edges: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        Ok(Density {
            inner: SingleSiteDensity::piecewise_constant(edges, values).map_err(to_py)?,
        })
    }

    #[staticmethod]
    pub fn truncated_custom(table: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Density {
            inner: SingleSiteDensity::truncated_custom(&table).map_err(to_py)?,
        })
    }

    #[staticmethod]
    pub fn point_mass(value: f64) -> Self {
        Density {
            inner: SingleSiteDensity::point_mass(value),
        }
    }

    #[getter]
    pub fn w_minus(&self) -> f64 {
        self.inner.w_minus()
    }

    #[getter]
    pub fn w_plus(&self) -> f64 {
        self.inner.w_plus()
    }

    #[getter]
    pub fn rho_min(&self) -> f64 {
        self.inner.rho_min()
    }

    #[getter]
    pub fn rho_max(&self) -> Option<f64> {
        self.inner.rho_max()
    }

    pub fn density(&self, w: f64) -> f64 {
        self.inner.density(w)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.inner.quantile(u)
    }

    /// Potential values of realization `realization` on the cube of side `side`.
    pub fn sample(&self, dim: usize, side: usize, seed: u64, realization: u64) -> PyResult<Vec<f64>> {
        let g = build_cube(dim, side).map_err(to_py)?;
        Ok(disorder::sample_field(&self.inner, &g, seed, realization).values().to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "Density({:?}, W=[{}, {}])",
            self.inner.kind(),
            self.inner.w_minus(),
            self.inner.w_plus()
        )
    }
}

fn dense_operator(matrix: &[Vec<f64>]) -> PyResult<SymmetricOperator> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
    for i in 0..n {
        for j in 0..i {
            if flat[i * n + j] != flat[j * n + i] {
                return Err(PyValueError::new_err("matrix must be symmetric"));
            }
        }
    }
    SymmetricOperator::from_dense_lower(n, &flat).map_err(to_py)
}

/// Number of eigenvalues `<= energy` of a symmetric matrix.
#[pyfunction]
pub fn count_below(matrix: Vec<Vec<f64>>, energy: f64) -> PyResult<usize> {
    Ok(spectral::count_below(&dense_operator(&matrix)?, energy).map_err(to_py)?.count)
}

/// Ascending eigenvalues of a symmetric matrix.
#[pyfunction]
pub fn eigenvalues(matrix: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(spectral::full_spectrum(&dense_operator(&matrix)?).map_err(to_py)?.into_values())
}

/// Spectrum of the Dirichlet Laplacian on the cube of side `side`.
#[pyfunction]
pub fn laplacian_spectrum(dim: usize, side: usize) -> PyResult<Vec<f64>> {
    let g = build_cube(dim, side).map_err(to_py)?;
    Ok(spectral::full_spectrum(&operator::build_dirichlet_laplacian(&g))
        .map_err(to_py)?
        .into_values())
}

/// Spectrum of one Anderson realization.
#[pyfunction]
pub fn anderson_spectrum(dim: usize, side: usize, density: &Density, seed: u64, realization: u64) -> PyResult<Vec<f64>> {
    let g = build_cube(dim, side).map_err(to_py)?;
    let field = disorder::sample_field(&density.inner, &g, seed, realization);
    let h = operator::build_anderson(&g, &field).map_err(to_py)?;
    Ok(spectral::full_spectrum(&h).map_err(to_py)?.into_values())
}

/// Rank of the decoupling defect of the free Laplacian for cells of side `ell`.
#[pyfunction]
pub fn decoupling_defect_rank(dim: usize, side: usize, ell: usize) -> PyResult<usize> {
    let g = build_cube(dim, side).map_err(to_py)?;
    let p = partition_cube(&g, ell).map_err(to_py)?;
    Ok(operator::decoupling_defect(&g, &p, None).map_err(to_py)?.1)
}

#[pyfunction]
pub fn free_ids_finite(dim: usize, ell: usize, lam: f64) -> PyResult<f64> {
    ids::free_ids_finite(dim, ell, lam).map_err(to_py)
}

#[pyfunction]
pub fn free_ids_infinite(dim: usize, lam: f64) -> PyResult<f64> {
    ids::free_ids_infinite(dim, lam).map_err(to_py)
}

/// Disorder-averaged IDS: `(values, stderr)` on `energies`.
#[pyfunction]
#[pyo3(signature = (dim, side, density, energies, realizations, seed, workers = 1))]
#[allow(clippy::too_many_arguments)]
pub fn empirical_ids(
    py: Python<'_>,
    dim: usize,
    side: usize,
    density: &Density,
    energies: Vec<f64>,
    realizations: usize,
    seed: u64,
    workers: usize,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let run = IdsRun {
        dim,
        side,
        density: &density.inner,
        energies: &energies,
        realizations,
        seed,
        workers,
    };
    let curve = py.detach(|| ids::empirical_ids(&run)).map_err(to_py)?;
    Ok((curve.values, curve.stderr))
}

/// Centered-difference DOS of an IDS curve: `(energies, values, stderr)`.
#[pyfunction]
pub fn empirical_dos(
    energies: Vec<f64>,
    values: Vec<f64>,
    stderr: Vec<f64>,
    h: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if values.len() != energies.len() || stderr.len() != energies.len() {
        return Err(PyValueError::new_err("energies, values and stderr must have equal length"));
    }
    let mut curve = SpectralCurve::exact(CurveKind::Ids, energies, values);
    curve.stderr = stderr;
    let dos = ids::empirical_dos(&curve, h).map_err(to_py)?;
    Ok((dos.energies, dos.values, dos.stderr))
}

#[pyfunction]
pub fn k_ell(dim: usize, ell: usize, e1: f64, e2: f64, w_minus: f64, w_plus: f64, delta: f64) -> PyResult<f64> {
    Ok(wegner::k_ell(dim, ell, e1, e2, w_minus, w_plus, delta).map_err(to_py)?.value)
}

#[pyfunction]
pub fn k_limit(dim: usize, e0: f64, w_minus: f64, w_plus: f64, delta: f64) -> PyResult<f64> {
    wegner::k_limit(dim, e0, w_minus, w_plus, delta).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (dim, e0, w_minus, w_plus, delta, d_rank = None, ell_max = None))]
pub fn find_ell(
    dim: usize,
    e0: f64,
    w_minus: f64,
    w_plus: f64,
    delta: f64,
    d_rank: Option<f64>,
    ell_max: Option<usize>,
) -> PyResult<usize> {
    let d_rank = d_rank.unwrap_or(wegner::default_d_rank(dim));
    let ell_max = ell_max.unwrap_or(wegner::default_ell_max(dim));
    Ok(wegner::find_ell(dim, e0, w_minus, w_plus, delta, d_rank, ell_max)
        .map_err(to_py)?
        .ell)
}

/// Lower-bound certificate as a JSON document.
#[pyfunction]
#[pyo3(signature = (dim, w_minus, w_plus, rho_min, delta, d_rank = None, ell_max = None, workers = 1))]
#[allow(clippy::too_many_arguments)]
pub fn lower_bound_certificate(
    py: Python<'_>,
    dim: usize,
    w_minus: f64,
    w_plus: f64,
    rho_min: f64,
    delta: f64,
    d_rank: Option<f64>,
    ell_max: Option<usize>,
    workers: usize,
) -> PyResult<String> {
    let mut input = CertificateInput::new(dim, w_minus, w_plus, rho_min, delta);
    if let Some(d) = d_rank {
        input.d_rank = d;
    }
    if let Some(m) = ell_max {
        input.ell_max = m;
    }
    let cert = py
        .detach(|| wegner::lower_bound_constant(&input, workers))
        .map_err(to_py)?;
    cert.to_json().map_err(to_py)
}

/// Recomputes a certificate from its JSON and reports bit-exact agreement.
#[pyfunction]
pub fn recheck_certificate(json: &str) -> PyResult<bool> {
    wegner::WegnerCertificate::from_json(json)
        .and_then(|c| c.recheck())
        .map_err(to_py)
}

/// Rescaled positions per realization, intensity and KS distance.
#[pyfunction]
#[pyo3(signature = (dim, side, density, energy, window, realizations, seed, workers = 1))]
#[allow(clippy::too_many_arguments)]
pub fn spacing_statistics(
    py: Python<'_>,
    dim: usize,
    side: usize,
    density: &Density,
    energy: f64,
    window: f64,
    realizations: usize,
    seed: u64,
    workers: usize,
) -> PyResult<(Vec<Vec<f64>>, f64, Option<f64>)> {
    let run = SpacingRun {
        dim,
        side,
        density: &density.inner,
        energy,
        window,
        realizations,
        seed,
        workers,
    };
    let sample = py.detach(|| levels::collect_spacings(&run)).map_err(to_py)?;
    let intensity = levels::intensity_estimate(&sample);
    let report = levels::poisson_test(&sample, intensity, levels::DEFAULT_KS_THRESHOLD);
    Ok((sample.positions, intensity, report.ks_distance))
}

#[pymodule]
#[pyo3(name = "wegnerlab")]
pub fn wegnerlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", wegner::TOOL_VERSION)?;
    m.add_class::<Density>()?;
    m.add_function(wrap_pyfunction!(count_below, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(anderson_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(decoupling_defect_rank, m)?)?;
    m.add_function(wrap_pyfunction!(free_ids_finite, m)?)?;
    m.add_function(wrap_pyfunction!(free_ids_infinite, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_ids, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_dos, m)?)?;
    m.add_function(wrap_pyfunction!(k_ell, m)?)?;
    m.add_function(wrap_pyfunction!(k_limit, m)?)?;
    m.add_function(wrap_pyfunction!(find_ell, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(recheck_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(spacing_statistics, m)?)?;
    Ok(())
}
