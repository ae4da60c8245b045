//! Quick property suites behind the `verify` experiment.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::disorder::{sample_field, site_uniform, SingleSiteDensity};
use crate::error::Result;
use crate::geometry::{build_cube, partition_cube};
use crate::ids::{free_ids_1d, free_ids_infinite};
use crate::levels::ks_exponential;
use crate::operator::{
    build_anderson, build_decoupled, decoupling_defect, rank_bound_per_cell, single_cell_defect,
    SymmetricOperator,
};
use crate::runner::parallel_map;
use crate::spectral::{count_below, full_spectrum, monotonicity_probe, SwitchFunction};
use crate::wegner::{lower_bound_constant, CertificateInput};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> SymmetricOperator {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            a[i * n + j] = 2.0 * unit(rng) - 1.0;
        }
    }
    SymmetricOperator::from_dense_lower(n, &a).expect("square input")
}

fn geometry() -> Result<(bool, String)> {
    let mut ok = true;
    for d in 1..=3 {
        for side in 1..=5 {
            let g = build_cube(d, side)?;
            for x in 0..g.len() {
                ok &= g.neighbors(x).iter().all(|&y| g.neighbors(y).contains(&x));
            }
            ok &= g.bond_count() == d * side.pow(d as u32 - 1) * (side - 1);
        }
    }
    Ok((ok, "neighbor symmetry and bond counts for d <= 3, L <= 5".into()))
}

fn sampler() -> Result<(bool, String)> {
    let density = SingleSiteDensity::uniform(-0.5, 2.0)?;
    let g = build_cube(2, 20)?;
    let field = sample_field(&density, &g, 5, 2);
    let inside = field.values().iter().all(|&w| (-0.5..=2.0).contains(&w));
    let addressable = (0..g.len())
        .step_by(37)
        .all(|s| density.quantile(site_uniform(5, 2, s)) == field.values()[s]);
    Ok((inside && addressable, "support containment and per-site addressability".into()))
}

fn decoupling(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let density = SingleSiteDensity::uniform(0.0, 1.0)?;
    let g = build_cube(2, 4)?;
    let p = partition_cube(&g, 2)?;
    let mut worst = f64::INFINITY;
    let mut ranks_ok = true;
    for r in 0..5 {
        let field = sample_field(&density, &g, rng.next_u64(), r);
        let (defect, rank) = decoupling_defect(&g, &p, Some(&field))?;
        worst = worst.min(full_spectrum(&defect)?.values()[0]);
        ranks_ok &= rank == 7;
        let full = full_spectrum(&build_anderson(&g, &field)?)?;
        let dec = full_spectrum(&build_decoupled(&g, &p, Some(&field))?)?;
        ranks_ok &= full.values().iter().zip(dec.values()).all(|(a, b)| *a <= b + 1e-10);
    }
    for ell in 1..=3 {
        let cell = build_cube(2, 3 * ell)?;
        let cp = partition_cube(&cell, ell)?;
        let (_, rank) = single_cell_defect(&cell, &cp.cells()[4], None)?;
        ranks_ok &= rank <= rank_bound_per_cell(2, ell);
    }
    Ok((
        worst >= -1e-10 && ranks_ok,
        format!("smallest defect eigenvalue {worst:.3e}; eigenvalue interlacing and rank bounds"),
    ))
}

fn inertia(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut mismatches = 0;
    for _ in 0..20 {
        let n = 1 + (rng.next_u64() % 40) as usize;
        let a = random_symmetric(rng, n);
        let spec = full_spectrum(&a)?;
        for _ in 0..10 {
            let e = 6.0 * unit(rng) - 3.0;
            if count_below(&a, e)?.count != spec.count_le(e) {
                mismatches += 1;
            }
        }
    }
    Ok((mismatches == 0, format!("{mismatches} mismatches over 200 counts")))
}

fn free_ids() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let lambda = -2.0 + 4.0 * (k as f64 + 0.5) / 100.0;
        worst = worst.max((free_ids_infinite(1, lambda)? - free_ids_1d(lambda)).abs());
    }
    let half = (free_ids_infinite(2, 0.0)? - 0.5).abs();
    Ok((
        worst <= 1e-6 && half <= 1e-6,
        format!("d=1 convolution vs closed form {worst:.2e}; |N(0) - 1/2| = {half:.2e} in d=2"),
    ))
}

fn switch(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let f = SwitchFunction::new(0.2)?;
    let mut ok = true;
    for _ in 0..10 {
        let n = 2 + (rng.next_u64() % 10) as usize;
        let a = random_symmetric(rng, n);
        let site = (rng.next_u64() % n as u64) as usize;
        let (before, after) = monotonicity_probe(&a, site, unit(rng), 4.0 * unit(rng) - 2.0, &f)?;
        ok &= after <= before + 1e-10;
    }
    Ok((ok, "switch trace is nonincreasing under diagonal increments".into()))
}

fn certificate() -> Result<(bool, String)> {
    let input = CertificateInput::new(1, 0.0, 1.0, 1.0, 0.1);
    let cert = lower_bound_constant(&input, 2)?;
    let ok = cert.log_c_delta.is_finite() && cert.centers.iter().all(|c| c.k_limit > 0.0) && cert.recheck()?;
    Ok((ok, format!("C_delta = {} and bit-exact recheck", cert.c_delta)))
}

fn determinism(workers: usize) -> Result<(bool, String)> {
    let work = |i: usize| -> Result<f64> { Ok(site_uniform(3, i as u64, i).sqrt()) };
    let a = parallel_map(64, 1, work)?;
    let b = parallel_map(64, workers.max(2), work)?;
    Ok((
        a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()),
        "ordered reduction is independent of the worker count".into(),
    ))
}

fn poisson(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let xs: Vec<f64> = (0..5000).map(|_| -(1.0 - unit(rng)).ln()).collect();
    let d = ks_exponential(&xs, 1.0);
    Ok((d < 0.03, format!("KS distance {d:.4} on 5000 exponential draws")))
}

/// Runs every suite; failures inside a suite are reported, not propagated.
pub fn run_suites(workers: usize) -> Vec<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut results = Vec::new();
    let mut record = |name: &str, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        results.push(SuiteResult {
            name: name.to_string(),
            passed,
            detail,
        });
    };
    record("lattice-geometry", geometry());
    record("disorder-sampler", sampler());
    record("operator-builder", decoupling(&mut rng));
    record("spectral-kernels/inertia", inertia(&mut rng));
    record("spectral-kernels/switch", switch(&mut rng));
    record("ids-dos-estimators/free-ids", free_ids());
    record("wegner-certificates", certificate());
    record("level-statistics", poisson(&mut rng));
    record("experiment-runner/determinism", determinism(workers));
    results
}
