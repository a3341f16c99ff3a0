//! TOML experiment configuration.
//!
//! ```toml
//! datasets = ["data/abalone9-18.dat", "crossplane:pos=75,neg=75,noise=0,seed=42"]
//! models = ["lstsvm", "elstsvm", "relstsvm", "if_relstsvm", "f_relstsvm"]
//! kernel = "both"          # linear | gaussian | both
//! folds = 5
//! seed = 0
//! output_dir = "results"
//! protocol = "cv"          # cv | holdout
//! train_fraction = 0.6     # holdout only
//! min_max_scale = false
//! dump_memberships = false
//!
//! [grids]                  # each list optional
//! sigma = [0.5, 1.0]
//! c = [0.01, 1.0, 100.0]
//! c_reg = [0.01, 1.0]
//! e1 = [0.8]
//! e2 = [0.8]
//!
//! [ifma]
//! delta = 1e-4
//! gamma = 0.5              # omitted: median pairwise distance
//!
//! [pfma]
//! delta = 1e-4
//! normalization = "global" # global | per_class
//! plane_norm = "euclidean" # euclidean | rkhs
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use twinsvm_core::dataset::CrossplaneConfig;
use twinsvm_core::evaluation::Grids;
use twinsvm_core::membership::{Normalization, PlaneNorm};
use twinsvm_core::{IfmaParams, KernelFamily, ModelKind, PfmaParams};

use crate::error::{read_file, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    File(PathBuf),
    Crossplane(CrossplaneConfig),
}

impl DatasetSource {
    /// `crossplane:pos=N,neg=N,noise=x,seed=s[,x_min=a,x_max=b]` or a path.
    pub fn parse(s: &str, base: &Path) -> Result<DatasetSource> {
        let Some(args) = s.strip_prefix("crossplane:") else {
            let p = Path::new(s);
            return Ok(DatasetSource::File(if p.is_absolute() { p.to_path_buf() } else { base.join(p) }));
        };
        let mut cfg = CrossplaneConfig::new(0, 0, 0.0, 0);
        let bad = |msg: String| Error::Config(format!("{s:?}: {msg}"));
        for kv in args.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {kv:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let int = || v.parse::<u64>().map_err(|_| bad(format!("{k} must be an integer")));
            let real = || v.parse::<f64>().map_err(|_| bad(format!("{k} must be a number")));
            match k {
                "pos" => cfg.n_pos = int()? as usize,
                "neg" => cfg.n_neg = int()? as usize,
                "seed" => cfg.seed = int()?,
                "noise" => cfg.noise = real()?,
                "x_min" => cfg.x_min = real()?,
                "x_max" => cfg.x_max = real()?,
                _ => return Err(bad(format!("unknown key {k:?}"))),
            }
        }
        if cfg.n_pos == 0 || cfg.n_neg == 0 {
            return Err(bad("pos and neg must be at least 1".into()));
        }
        Ok(DatasetSource::Crossplane(cfg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// Report the mean validation AUC of the tuning folds.
    Cv,
    /// Tune by cross-validation on a stratified training share, report the
    /// AUC on the rest.
    Holdout { train_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    pub models: Vec<ModelKind>,
    pub kernels: Vec<KernelFamily>,
    pub grids: Grids,
    pub folds: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub protocol: Protocol,
    pub min_max_scale: bool,
    pub dump_memberships: bool,
    pub ifma: IfmaParams,
    pub pfma: PfmaParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    datasets: Vec<String>,
    models: Option<Vec<String>>,
    kernel: Option<String>,
    folds: Option<usize>,
    seed: Option<u64>,
    output_dir: Option<String>,
    protocol: Option<String>,
    train_fraction: Option<f64>,
    min_max_scale: Option<bool>,
    dump_memberships: Option<bool>,
    #[serde(default)]
    grids: RawGrids,
    #[serde(default)]
    ifma: RawIfma,
    #[serde(default)]
    pfma: RawPfma,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrids {
    sigma: Option<Vec<f64>>,
    c: Option<Vec<f64>>,
    c_reg: Option<Vec<f64>>,
    e1: Option<Vec<f64>>,
    e2: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIfma {
    delta: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPfma {
    delta: Option<f64>,
    normalization: Option<String>,
    plane_norm: Option<String>,
}

fn positive_list(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("grid {name} is empty")));
    }
    if let Some(x) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::Config(format!("grid {name} has non-positive value {x}")));
    }
    Ok(())
}

pub fn parse_kernels(s: &str) -> Result<Vec<KernelFamily>> {
    match s {
        "linear" => Ok(vec![KernelFamily::Linear]),
        "gaussian" => Ok(vec![KernelFamily::Gaussian]),
        "both" => Ok(vec![KernelFamily::Linear, KernelFamily::Gaussian]),
        _ => Err(Error::Config(format!("kernel must be linear, gaussian or both, got {s:?}"))),
    }
}

pub fn parse_model(s: &str) -> Result<ModelKind> {
    ModelKind::parse(s).ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<ExperimentConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if raw.datasets.is_empty() {
            return Err(Error::Config("at least one dataset is required".into()));
        }
        let datasets = raw
            .datasets
            .iter()
            .map(|s| DatasetSource::parse(s, base))
            .collect::<Result<Vec<_>>>()?;
        let models = match raw.models {
            Some(m) if m.is_empty() => return Err(Error::Config("at least one model is required".into())),
            Some(m) => m.iter().map(|s| parse_model(s)).collect::<Result<Vec<_>>>()?,
            None => ModelKind::ALL.to_vec(),
        };
        let kernels = parse_kernels(raw.kernel.as_deref().unwrap_or("both"))?;
        let folds = raw.folds.unwrap_or(5);
        if folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        let d = Grids::default();
        let grids = Grids {
            sigma: raw.grids.sigma.unwrap_or(d.sigma),
            c: raw.grids.c.unwrap_or(d.c),
            c_reg: raw.grids.c_reg.unwrap_or(d.c_reg),
            e1: raw.grids.e1.unwrap_or(d.e1),
            e2: raw.grids.e2.unwrap_or(d.e2),
        };
        for (name, g) in [
            ("sigma", &grids.sigma),
            ("c", &grids.c),
            ("c_reg", &grids.c_reg),
            ("e1", &grids.e1),
            ("e2", &grids.e2),
        ] {
            positive_list(name, g)?;
        }
        let protocol = match raw.protocol.as_deref().unwrap_or("cv") {
            "cv" => Protocol::Cv,
            "holdout" => {
                let f = raw.train_fraction.unwrap_or(0.6);
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::Config(format!("train_fraction must lie in (0, 1), got {f}")));
                }
                Protocol::Holdout { train_fraction: f }
            }
            p => return Err(Error::Config(format!("protocol must be cv or holdout, got {p:?}"))),
        };
        let ifma_default = IfmaParams::default();
        let ifma = IfmaParams {
            delta: raw.ifma.delta.unwrap_or(ifma_default.delta),
            gamma: raw.ifma.gamma,
        };
        let pfma_default = PfmaParams::default();
        let pfma = PfmaParams {
            delta: raw.pfma.delta.unwrap_or(pfma_default.delta),
            normalization: match raw.pfma.normalization.as_deref() {
                None | Some("global") => Normalization::Global,
                Some("per_class") => Normalization::PerClass,
                Some(s) => return Err(Error::Config(format!("unknown pfma normalization {s:?}"))),
            },
            plane_norm: match raw.pfma.plane_norm.as_deref() {
                None | Some("euclidean") => PlaneNorm::Euclidean,
                Some("rkhs") => PlaneNorm::Rkhs,
                Some(s) => return Err(Error::Config(format!("unknown pfma plane_norm {s:?}"))),
            },
        };
        let output_dir = PathBuf::from(raw.output_dir.unwrap_or_else(|| "results".into()));
        Ok(ExperimentConfig {
            datasets,
            models,
            kernels,
            grids,
            folds,
            seed: raw.seed.unwrap_or(0),
            output_dir: if output_dir.is_absolute() { output_dir } else { base.join(output_dir) },
            protocol,
            min_max_scale: raw.min_max_scale.unwrap_or(false),
            dump_memberships: raw.dump_memberships.unwrap_or(false),
            ifma,
            pfma,
        })
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&read_file(path)?, base)
    }
}
