//! Experiment orchestration: config in, data files plus a manifest out.

pub mod config;
pub mod parallel;
pub mod verify;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{Experiment, RunConfig};
pub use parallel::{default_workers, parallel_map, WORKERS_ENV};

use crate::error::{Error, Result};
use crate::ids::{empirical_dos, empirical_ids, energy_grid, free_ids_finite, free_ids_table, CurveKind, IdsRun, SpectralCurve};
use crate::levels::{collect_spacings, intensity_estimate, intensity_stderr, poisson_test, PoissonReport, SpacingRun};
use crate::wegner::{lower_bound_check, lower_bound_constant, upper_bound_check, CertificateInput, TOOL_NAME, TOOL_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Io { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config_sha256: String,
    /// Digest over the names and digests of every data file.
    pub data_sha256: String,
    pub started: String,
    pub finished: String,
    pub wall_clock_seconds: f64,
    pub workers: usize,
    pub files: Vec<FileRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub files: Vec<PathBuf>,
    /// A scientific check failed (only `verify` turns this into a nonzero exit).
    pub check_failed: bool,
    pub summary: String,
}

impl RunOutcome {
    pub fn exit_code(&self, experiment: Experiment) -> i32 {
        if self.check_failed && experiment == Experiment::Verify {
            EXIT_CHECK
        } else {
            EXIT_OK
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Emitter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }
}

#[derive(Serialize)]
struct SpacingReport<'a> {
    energy: f64,
    volume: usize,
    window: f64,
    realizations: usize,
    positions: usize,
    pooling: &'static str,
    intensity: f64,
    intensity_stderr: f64,
    dos_at_energy: f64,
    dos_stderr: f64,
    dos_bin_width: f64,
    /// `|intensity - dos| <= 3 sqrt(se_intensity^2 + se_dos^2)`.
    intensity_matches_dos: bool,
    poisson: &'a PoissonReport,
}

fn ids_curve(cfg: &RunConfig, workers: usize, energies: &[f64]) -> Result<SpectralCurve> {
    let mut curve = empirical_ids(&IdsRun {
        dim: cfg.dim,
        side: cfg.side,
        density: &cfg.density,
        energies,
        realizations: cfg.realizations,
        seed: cfg.seed,
        workers,
    })?;
    if let Some(ell) = cfg.ell {
        curve.metadata.insert("ell".into(), ell.to_string());
    }
    Ok(curve)
}

/// `(N(E + h/2) - N(E - h/2)) / h` from a two-point curve, with the
/// standard error of the per-realization quotients.
fn dos_at(ids: &SpectralCurve, h: f64) -> (f64, f64) {
    let q: Vec<f64> = match &ids.samples {
        Some(s) => s.iter().map(|r| (r[1] - r[0]) / h).collect(),
        None => vec![(ids.values[1] - ids.values[0]) / h],
    };
    let n = q.len() as f64;
    let mean = q.iter().sum::<f64>() / n;
    if q.len() < 2 {
        return (mean, 0.0);
    }
    let var = q.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn certificate_input(cfg: &RunConfig) -> Option<CertificateInput> {
    let delta = cfg.algorithm.delta?;
    let d = &cfg.density;
    let mut input = CertificateInput::new(cfg.dim, d.w_minus(), d.w_plus(), d.rho_min(), delta);
    input.d_rank = cfg.algorithm.d_rank;
    input.ell_max = cfg.algorithm.ell_max;
    if let Some(m) = cfg.algorithm.edge_margin {
        input.edge_margin = m;
    }
    Some(input)
}

fn execute(cfg: &RunConfig, workers: usize, out: &mut Emitter) -> Result<(bool, String)> {
    let grid = || energy_grid(cfg.grid.min, cfg.grid.max, cfg.grid.step);
    match cfg.experiment {
        Experiment::Ids => {
            let curve = ids_curve(cfg, workers, &grid()?)?;
            out.text("ids.csv", &curve.to_csv())?;
            Ok((false, format!("ids: {} energies, R = {}", curve.len(), cfg.realizations)))
        }
        Experiment::Dos => {
            let ids = ids_curve(cfg, workers, &grid()?)?;
            let dos = empirical_dos(&ids, cfg.algorithm.h)?;
            out.text("ids.csv", &ids.to_csv())?;
            out.text("dos.csv", &dos.to_csv())?;
            let upper = upper_bound_check(&dos, cfg.density.rho_max());
            out.json("upper_bound.json", &upper)?;
            let mut failed = upper.notice.is_none() && !upper.passed;
            let mut summary = format!("dos: {} bins, upper bound passed = {}", dos.len(), upper.passed);
            if let Some(input) = certificate_input(cfg).filter(|_| cfg.density.rho_min() > 0.0) {
                let cert = lower_bound_constant(&input, workers)?;
                let window = [
                    -2.0 * cfg.dim as f64 + input.w_minus + 2.0 * input.delta,
                    2.0 * cfg.dim as f64 + input.w_plus - 2.0 * input.delta,
                ];
                let lower = lower_bound_check(&dos, window, cert.log_c_delta);
                out.text("certificate.json", &(cert.to_json()? + "\n"))?;
                out.json("lower_bound.json", &lower)?;
                failed |= !(lower.positive && lower.above_c_delta);
                summary.push_str(&format!(", lower bound positive = {}", lower.positive));
            }
            Ok((failed, summary))
        }
        Experiment::FreeIds => {
            let energies = grid()?;
            let table = free_ids_table(cfg.dim, &energies)?;
            out.text("free_ids.csv", &table.to_curve().to_csv())?;
            if let Some(ell) = cfg.ell {
                let values = energies
                    .iter()
                    .map(|&e| free_ids_finite(cfg.dim, ell, e))
                    .collect::<Result<Vec<_>>>()?;
                let mut finite = SpectralCurve::exact(CurveKind::FreeIds, energies.clone(), values);
                finite.metadata.insert("d".into(), cfg.dim.to_string());
                finite.metadata.insert("ell".into(), ell.to_string());
                out.text("free_ids_finite.csv", &finite.to_csv())?;
            }
            Ok((false, format!("free-ids: error estimate {:.3e}", table.error_estimate)))
        }
        Experiment::BoundCert => {
            let input = certificate_input(cfg).ok_or_else(|| Error::config("algorithm.delta", "missing"))?;
            let cert = lower_bound_constant(&input, workers)?;
            out.text("certificate.json", &(cert.to_json()? + "\n"))?;
            Ok((false, format!("bound-cert: C_delta = {} over {} centers", cert.c_delta, cert.centers.len())))
        }
        Experiment::Spacing => {
            let energy = cfg.reference_energy();
            let sample = collect_spacings(&SpacingRun {
                dim: cfg.dim,
                side: cfg.side,
                density: &cfg.density,
                energy,
                window: cfg.algorithm.window,
                realizations: cfg.realizations,
                seed: cfg.seed,
                workers,
            })?;
            let intensity = intensity_estimate(&sample);
            let report = poisson_test(&sample, intensity, cfg.algorithm.ks_threshold);
            let h = cfg.algorithm.h;
            let ids = ids_curve(cfg, workers, &[energy - h / 2.0, energy + h / 2.0])?;
            let (dos_value, dos_se) = dos_at(&ids, h);
            let se = (intensity_stderr(&sample).powi(2) + dos_se.powi(2)).sqrt();
            let matches = (intensity - dos_value).abs() <= 3.0 * se;
            out.text("spacings.csv", &sample.to_csv())?;
            out.json(
                "poisson_report.json",
                &SpacingReport {
                    energy,
                    volume: sample.volume,
                    window: sample.window,
                    realizations: sample.realizations(),
                    positions: sample.position_count(),
                    pooling: "per-realization spacings, pooled before the KS test",
                    intensity,
                    intensity_stderr: intensity_stderr(&sample),
                    dos_at_energy: dos_value,
                    dos_stderr: dos_se,
                    dos_bin_width: h,
                    intensity_matches_dos: matches,
                    poisson: &report,
                },
            )?;
            Ok((
                !(report.passed && matches),
                format!(
                    "spacing: {} spacings, KS = {:?}, intensity {intensity:.4} vs dos {dos_value:.4}",
                    report.spacing_count, report.ks_distance
                ),
            ))
        }
        Experiment::Verify => {
            let suites = verify::run_suites(workers);
            let failed = suites.iter().filter(|s| !s.passed).count();
            out.json("verify_report.json", &suites)?;
            Ok((failed > 0, format!("verify: {} suites, {failed} failed", suites.len())))
        }
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Digests every file in `dir` except the manifest itself.
fn file_records(dir: &Path) -> Result<Vec<FileRecord>> {
    let mut records = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == MANIFEST_FILE || !path.is_file() {
            continue;
        }
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        records.push(FileRecord {
            name,
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    records.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(records)
}

/// Runs the configured experiment into `out_dir` and writes the manifest.
pub fn run(cfg: &RunConfig, config_bytes: &[u8], out_dir: &Path, workers: usize) -> Result<RunOutcome> {
    if workers == 0 {
        return Err(Error::config("--workers", "worker budget must be at least 1"));
    }
    let started = timestamp();
    let clock = Instant::now();
    let mut out = Emitter::new(out_dir)?;
    let (check_failed, summary) = execute(cfg, workers, &mut out)?;
    let files = file_records(out_dir)?;
    let mut data = Sha256::new();
    for f in &files {
        data.update(f.name.as_bytes());
        data.update([0]);
        data.update(f.sha256.as_bytes());
        data.update([b'\n']);
    }
    let manifest = RunManifest {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        experiment: cfg.experiment.name().to_string(),
        config_sha256: sha256_hex(config_bytes),
        data_sha256: hex::encode(data.finalize()),
        started,
        finished: timestamp(),
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        workers,
        files,
    };
    out.json(MANIFEST_FILE, &manifest)?;
    Ok(RunOutcome {
        manifest,
        files: out.written,
        check_failed,
        summary,
    })
}

/// Loads `config_path` (or defaults when absent) and runs it.
pub fn run_path(
    command: Experiment,
    config_path: Option<&Path>,
    out_override: Option<&Path>,
    workers: usize,
) -> Result<RunOutcome> {
    let (cfg, bytes) = match config_path {
        Some(p) => RunConfig::from_path(p, Some(command))?,
        None if command == Experiment::Verify => (RunConfig::from_json_str("{}", Some(command))?, b"{}".to_vec()),
        None => return Err(Error::config("--config", "a config file is required for this experiment")),
    };
    let dir = out_override.map_or_else(|| cfg.output_dir.clone(), Path::to_path_buf);
    run(&cfg, &bytes, &dir, workers)
}
