//! Run configuration: one JSON document per experiment, validated up front
//! with the offending key path reported on failure.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::disorder::SingleSiteDensity;
use crate::error::{Error, Result};
use crate::geometry::DEFAULT_MAX_SITES;
use crate::levels::{DEFAULT_KS_THRESHOLD, DEFAULT_WINDOW};
use crate::wegner::{default_d_rank, default_ell_max};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Ids,
    Dos,
    FreeIds,
    BoundCert,
    Spacing,
    Verify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Ids => "ids",
            Experiment::Dos => "dos",
            Experiment::FreeIds => "free-ids",
            Experiment::BoundCert => "bound-cert",
            Experiment::Spacing => "spacing",
            Experiment::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ids" => Experiment::Ids,
            "dos" => Experiment::Dos,
            "free-ids" => Experiment::FreeIds,
            "bound-cert" => Experiment::BoundCert,
            "spacing" => Experiment::Spacing,
            "verify" => Experiment::Verify,
            _ => return None,
        })
    }
}

/// Density block as written in the config, kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityConfig {
    pub kind: String,
    pub w_minus: f64,
    pub w_plus: f64,
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    /// `"rho_max": "unbounded"` given explicitly.
    pub rho_max_unbounded: bool,
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
    pub table: Vec<(f64, f64)>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Algorithm {
    pub h: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub d_rank: f64,
    pub ell_max: usize,
    pub edge_margin: Option<f64>,
    pub window: f64,
    pub energy: Option<f64>,
    pub ks_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub side: usize,
    pub ell: Option<usize>,
    pub density_config: DensityConfig,
    pub density: SingleSiteDensity,
    pub grid: Grid,
    pub realizations: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub output_dir: PathBuf,
}

struct Block<'a> {
    path: String,
    map: Option<&'a Map<String, Value>>,
}

impl<'a> Block<'a> {
    fn root(v: &'a Value) -> Result<Self> {
        match v {
            Value::Object(m) => Ok(Block {
                path: String::new(),
                map: Some(m),
            }),
            _ => Err(Error::config("<root>", "config must be a JSON object")),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        if let Some(m) = self.map {
            if let Some(bad) = m.keys().find(|k| !keys.contains(&k.as_str())) {
                return Err(Error::config(&self.key(bad), "unknown key"));
            }
        }
        Ok(())
    }

    fn get(&self, k: &str) -> Option<&'a Value> {
        self.map.and_then(|m| m.get(k)).filter(|v| !v.is_null())
    }

    fn block(&self, k: &str) -> Result<Block<'a>> {
        match self.get(k) {
            None => Ok(Block {
                path: self.key(k),
                map: None,
            }),
            Some(Value::Object(m)) => Ok(Block {
                path: self.key(k),
                map: Some(m),
            }),
            Some(_) => Err(Error::config(&self.key(k), "expected an object")),
        }
    }

    fn f64(&self, k: &str) -> Result<Option<f64>> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| Error::config(&self.key(k), "expected a finite number")),
        }
    }

    fn u64(&self, k: &str) -> Result<Option<u64>> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| Error::config(&self.key(k), "expected a nonnegative integer")),
        }
    }

    fn usize(&self, k: &str) -> Result<Option<usize>> {
        self.u64(k)?
            .map(|v| usize::try_from(v).map_err(|_| Error::config(&self.key(k), "too large")))
            .transpose()
    }

    fn str(&self, k: &str) -> Result<Option<&'a str>> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(Some)
                .ok_or_else(|| Error::config(&self.key(k), "expected a string")),
        }
    }

    fn f64_list(&self, k: &str) -> Result<Vec<f64>> {
        match self.get(k) {
            None => Ok(Vec::new()),
            Some(Value::Array(a)) => a
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.as_f64()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::config(&format!("{}[{i}]", self.key(k)), "expected a finite number"))
                })
                .collect(),
            Some(_) => Err(Error::config(&self.key(k), "expected an array of numbers")),
        }
    }
}

fn require<T>(v: Option<T>, key: &str, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(key, format!("missing {what}")))
}

fn parse_density(b: &Block<'_>, experiment: Experiment) -> Result<(DensityConfig, SingleSiteDensity)> {
    b.allow(&["kind", "W_minus", "W_plus", "rho_min", "rho_max", "edges", "values", "table", "value"])?;
    let kind = b.str("kind")?.unwrap_or("uniform").to_string();
    let table_key = b.key("table");
    let table: Vec<(f64, f64)> = match b.get("table") {
        None => Vec::new(),
        Some(Value::Array(rows)) => rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let pair = row.as_array().filter(|r| r.len() == 2);
                let nums = pair.and_then(|r| Some((r[0].as_f64()?, r[1].as_f64()?)));
                nums.ok_or_else(|| Error::config(&format!("{table_key}[{i}]"), "expected a [w, rho] pair"))
            })
            .collect::<Result<_>>()?,
        Some(_) => return Err(Error::config(&table_key, "expected an array of [w, rho] pairs")),
    };
    let unbounded = b.get("rho_max").and_then(Value::as_str) == Some("unbounded");
    let mut cfg = DensityConfig {
        kind: kind.clone(),
        w_minus: b.f64("W_minus")?.unwrap_or(0.0),
        w_plus: b.f64("W_plus")?.unwrap_or(1.0),
        rho_min: b.f64("rho_min")?,
        rho_max: if unbounded { None } else { b.f64("rho_max")? },
        rho_max_unbounded: unbounded,
        edges: b.f64_list("edges")?,
        values: b.f64_list("values")?,
        table,
        value: b.f64("value")?,
    };
    let wrap = |key: &str| {
        let key = b.key(key);
        move |e: Error| Error::config(&key, e.to_string())
    };
    let mut density = match kind.as_str() {
        "uniform" => SingleSiteDensity::uniform(cfg.w_minus, cfg.w_plus).map_err(wrap("W_plus"))?,
        "piecewise-constant" => {
            let d = SingleSiteDensity::piecewise_constant(cfg.edges.clone(), cfg.values.clone())
                .map_err(wrap("values"))?;
            (cfg.w_minus, cfg.w_plus) = (d.w_minus(), d.w_plus());
            d
        }
        "truncated-custom" => {
            let d = SingleSiteDensity::truncated_custom(&cfg.table).map_err(wrap("table"))?;
            (cfg.w_minus, cfg.w_plus) = (d.w_minus(), d.w_plus());
            d
        }
        "point-mass" => {
            let c = require(cfg.value, &b.key("value"), "point-mass value")?;
            (cfg.w_minus, cfg.w_plus) = (c, c);
            SingleSiteDensity::point_mass(c)
        }
        other => {
            return Err(Error::config(
                &b.key("kind"),
                format!("unknown density kind `{other}` (uniform, piecewise-constant, truncated-custom, point-mass)"),
            ))
        }
    };
    if cfg.rho_min.is_some() || cfg.rho_max.is_some() || unbounded {
        let rho_min = cfg.rho_min.unwrap_or(density.rho_min());
        let rho_max = if unbounded || cfg.rho_max.is_some() { cfg.rho_max } else { density.rho_max() };
        density = density.with_declared_bounds(rho_min, rho_max).map_err(wrap("rho_min"))?;
    }
    if experiment == Experiment::BoundCert && !(density.rho_min() > 0.0) {
        return Err(Error::config(&b.key("rho_min"), "lower bound needs rho_min > 0"));
    }
    Ok((cfg, density))
}

impl RunConfig {
    /// Parses and validates a config. `command` is the experiment selected on
    /// the command line; a config's own `experiment` key must agree with it.
    pub fn from_json_str(text: &str, command: Option<Experiment>) -> Result<Self> {
        let root: Value = serde_json::from_str(text).map_err(|e| Error::config("<root>", e.to_string()))?;
        let top = Block::root(&root)?;
        top.allow(&["experiment", "model", "density", "grid", "mc", "algorithm", "output"])?;

        let declared = top
            .str("experiment")?
            .map(|s| Experiment::parse(s).ok_or_else(|| Error::config("experiment", format!("unknown experiment `{s}`"))))
            .transpose()?;
        let experiment = match (declared, command) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::config(
                    "experiment",
                    format!("config declares `{}` but `{}` was requested", a.name(), b.name()),
                ))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::config("experiment", "missing experiment kind")),
        };

        let model = top.block("model")?;
        model.allow(&["d", "L", "ell"])?;
        let dim = model.usize("d")?.unwrap_or(1);
        if !(1..=3).contains(&dim) {
            return Err(Error::config("model.d", "dimension must be 1, 2 or 3"));
        }
        let side = model.usize("L")?.unwrap_or(64);
        if side == 0 {
            return Err(Error::config("model.L", "side must be at least 1"));
        }
        if side.checked_pow(dim as u32).is_none_or(|n| n > DEFAULT_MAX_SITES) {
            return Err(Error::config("model.L", format!("L^d exceeds {DEFAULT_MAX_SITES} sites")));
        }
        if dim > 1 && side.pow(dim as u32) > crate::operator::DENSE_LIMIT && experiment == Experiment::Spacing {
            return Err(Error::config(
                "model.L",
                "spacing runs need a full spectrum: L^d must be at most 4096 unless d = 1",
            ));
        }
        let ell = model.usize("ell")?;
        if ell == Some(0) {
            return Err(Error::config("model.ell", "cell side must be at least 1"));
        }

        let (density_config, density) = parse_density(&top.block("density")?, experiment)?;

        let band = 2.0 * dim as f64;
        let grid_b = top.block("grid")?;
        grid_b.allow(&["min", "max", "step"])?;
        let (lo_default, hi_default) = if experiment == Experiment::FreeIds {
            (-band, band)
        } else {
            (-band + density.w_minus() - 0.1, band + density.w_plus() + 0.1)
        };
        let grid = Grid {
            min: grid_b.f64("min")?.unwrap_or(lo_default),
            max: grid_b.f64("max")?.unwrap_or(hi_default),
            step: grid_b.f64("step")?.unwrap_or(0.01),
        };
        if !(grid.step > 0.0) {
            return Err(Error::config("grid.step", "must be positive"));
        }
        if !(grid.max >= grid.min) {
            return Err(Error::config("grid.max", "must be at least grid.min"));
        }
        if (grid.max - grid.min) / grid.step > 1e7 {
            return Err(Error::config("grid.step", "grid has more than 10^7 points"));
        }

        let mc = top.block("mc")?;
        mc.allow(&["R", "seed"])?;
        let realizations = mc.usize("R")?.unwrap_or(50);
        if realizations == 0 {
            return Err(Error::config("mc.R", "need at least one realization"));
        }
        let seed = mc.u64("seed")?.unwrap_or(0);

        let alg = top.block("algorithm")?;
        alg.allow(&["h", "epsilon", "delta", "D_rank", "ell_max", "edge_margin", "X", "E", "ks_threshold"])?;
        let algorithm = Algorithm {
            h: alg.f64("h")?.unwrap_or(0.05),
            epsilon: alg.f64("epsilon")?.unwrap_or(0.1),
            delta: alg.f64("delta")?,
            d_rank: alg.f64("D_rank")?.unwrap_or(default_d_rank(dim)),
            ell_max: alg.usize("ell_max")?.unwrap_or(default_ell_max(dim)),
            edge_margin: alg.f64("edge_margin")?,
            window: alg.f64("X")?.unwrap_or(DEFAULT_WINDOW),
            energy: alg.f64("E")?,
            ks_threshold: alg.f64("ks_threshold")?.unwrap_or(DEFAULT_KS_THRESHOLD),
        };
        if experiment == Experiment::Dos && !(algorithm.h >= 2.0 * grid.step * (1.0 - 1e-9)) {
            return Err(Error::config("algorithm.h", "bin width must be at least twice grid.step"));
        }
        if !(algorithm.epsilon > 0.0) {
            return Err(Error::config("algorithm.epsilon", "must be positive"));
        }
        if !(algorithm.d_rank >= 0.0) {
            return Err(Error::config("algorithm.D_rank", "must be nonnegative"));
        }
        if algorithm.ell_max == 0 {
            return Err(Error::config("algorithm.ell_max", "must be at least 1"));
        }
        if !(algorithm.window > 0.0) {
            return Err(Error::config("algorithm.X", "window must be positive"));
        }
        if !(algorithm.ks_threshold > 0.0 && algorithm.ks_threshold <= 1.0) {
            return Err(Error::config("algorithm.ks_threshold", "must lie in (0, 1]"));
        }
        if experiment == Experiment::BoundCert {
            let width = density.w_plus() - density.w_minus();
            let delta = require(algorithm.delta, "algorithm.delta", "delta for the lower bound")?;
            if !(delta > 0.0 && delta < width / 4.0) {
                return Err(Error::config(
                    "algorithm.delta",
                    format!("need 0 < delta < (W_plus - W_minus)/4 = {}", width / 4.0),
                ));
            }
            if let Some(m) = algorithm.edge_margin {
                if !(m > 0.0 && m < delta) {
                    return Err(Error::config("algorithm.edge_margin", "need 0 < edge_margin < delta"));
                }
            }
        }

        let out = top.block("output")?;
        out.allow(&["dir"])?;
        let output_dir = PathBuf::from(out.str("dir")?.unwrap_or("out"));

        Ok(RunConfig {
            experiment,
            dim,
            side,
            ell,
            density_config,
            density,
            grid,
            realizations,
            seed,
            algorithm,
            output_dir,
        })
    }

    pub fn from_path(path: &Path, command: Option<Experiment>) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::config("<root>", "config is not UTF-8"))?;
        Ok((Self::from_json_str(text, command)?, bytes))
    }

    /// Reference energy for spacing runs: the given one or the middle of the
    /// deterministic spectrum.
    pub fn reference_energy(&self) -> f64 {
        self.algorithm
            .energy
            .unwrap_or((self.density.w_minus() + self.density.w_plus()) / 2.0)
    }
}
