//! Where a sweep's data comes from.
//!
//! `--dataset` accepts a dataset name (resolved through a manifest or a data
//! directory) or a synthetic spec:
//!
//! - `synthetic:n=2000;nt=1000;d=20;density=0.3;flip=0.05;seed=1`, a sparse
//!   binary logistic dataset with a planted separator;
//! - `quadratic:diag=1,2;sigma=0.1`, a noisy diagonal quadratic, used only by
//!   the theory checks.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{known_metadata, validate_metadata, Dataset, Label, Manifest, SparseExample};
use crate::problem::QuadraticProblem;
use crate::rng::{keyed, Purpose};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticLogistic {
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    /// Probability that a feature is present in an example.
    pub density: f64,
    /// Probability that a label is flipped.
    pub flip: f64,
    pub seed: u64,
}

impl Default for SyntheticLogistic {
    fn default() -> Self {
        Self {
            n_train: 2000,
            n_test: 1000,
            dim: 20,
            density: 0.3,
            flip: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticQuadratic {
    pub diag: Vec<f64>,
    pub sigma: f64,
}

impl Default for SyntheticQuadratic {
    fn default() -> Self {
        Self {
            diag: vec![1.0, 2.0],
            sigma: 0.1,
        }
    }
}

impl SyntheticQuadratic {
    pub fn problem(&self) -> Result<QuadraticProblem, HarnessError> {
        Ok(QuadraticProblem::new(self.diag.clone(), None)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Named(String),
    Synthetic(SyntheticLogistic),
    Quadratic(SyntheticQuadratic),
}

fn params(body: &str) -> Result<Vec<(&str, &str)>, HarnessError> {
    body.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| HarnessError::Spec(format!("expected key=value, got {kv:?}")))
        })
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, HarnessError> {
    v.parse()
        .map_err(|_| HarnessError::Spec(format!("bad value {v:?} for {key}")))
}

impl DataSource {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        let s = s.trim();
        if let Some(body) = s
            .strip_prefix("synthetic:")
            .or((s == "synthetic").then_some(""))
        {
            let mut cfg = SyntheticLogistic::default();
            for (k, v) in params(body)? {
                match k {
                    "n" => cfg.n_train = num(k, v)?,
                    "nt" => cfg.n_test = num(k, v)?,
                    "d" => cfg.dim = num(k, v)?,
                    "density" => cfg.density = num(k, v)?,
                    "flip" => cfg.flip = num(k, v)?,
                    "seed" => cfg.seed = num(k, v)?,
                    _ => return Err(HarnessError::Spec(format!("unknown synthetic key {k:?}"))),
                }
            }
            if cfg.n_train == 0 || cfg.dim == 0 || !(0.0..=1.0).contains(&cfg.density) {
                return Err(HarnessError::Spec(
                    "synthetic spec needs n, d >= 1 and density in [0, 1]".into(),
                ));
            }
            return Ok(DataSource::Synthetic(cfg));
        }
        if let Some(body) = s
            .strip_prefix("quadratic:")
            .or((s == "quadratic").then_some(""))
        {
            let mut cfg = SyntheticQuadratic::default();
            for (k, v) in params(body)? {
                match k {
                    "diag" => {
                        cfg.diag = v
                            .split(',')
                            .map(|x| num(k, x.trim()))
                            .collect::<Result<_, _>>()?
                    }
                    "sigma" => cfg.sigma = num(k, v)?,
                    _ => return Err(HarnessError::Spec(format!("unknown quadratic key {k:?}"))),
                }
            }
            return Ok(DataSource::Quadratic(cfg));
        }
        if s.is_empty() {
            return Err(HarnessError::Spec("empty dataset name".into()));
        }
        Ok(DataSource::Named(s.to_string()))
    }

    /// Loads a logistic-regression dataset. Named datasets with published
    /// sizes log a warning on mismatch rather than failing.
    pub fn load(
        &self,
        manifest: &Manifest,
        data_dir: Option<&Path>,
    ) -> Result<Dataset, HarnessError> {
        match self {
            DataSource::Named(name) => {
                let ds = manifest.resolve(name, data_dir)?.load(name)?;
                if let Some(expected) = known_metadata(name) {
                    let report = validate_metadata(&ds, expected);
                    if !report.passed() {
                        log::warn!("{report}");
                    }
                }
                Ok(ds)
            }
            DataSource::Synthetic(cfg) => Ok(synthetic_logistic(cfg)?),
            DataSource::Quadratic(_) => Err(HarnessError::Spec(
                "a quadratic spec is only usable with --theory-check".into(),
            )),
        }
    }
}

/// The manifest and data directory to resolve named datasets with.
///
/// The directory is `data_dir`, else `$TRISHBB_DATA_DIR`, else `./data` when
/// it exists. The manifest is `manifest`, else `<dir>/manifest.json` when it
/// exists, else empty.
pub fn locate_data(
    manifest: Option<&Path>,
    data_dir: Option<&Path>,
) -> Result<(Manifest, Option<PathBuf>), HarnessError> {
    let dir = data_dir
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("TRISHBB_DATA_DIR").map(PathBuf::from))
        .or_else(|| Some(PathBuf::from("data")).filter(|p| p.is_dir()));
    let manifest_path = manifest.map(Path::to_path_buf).or_else(|| {
        dir.as_ref()
            .map(|d| d.join("manifest.json"))
            .filter(|p| p.is_file())
    });
    let manifest = match manifest_path {
        Some(p) => Manifest::load(&p)?,
        None => Manifest::default(),
    };
    Ok((manifest, dir))
}

/// Sparse examples with value-1 features at rate `density`, labelled by the
/// sign of a planted Gaussian separator (score 0 labels +1), with labels
/// flipped at rate `flip`.
pub fn synthetic_logistic(cfg: &SyntheticLogistic) -> Result<Dataset, crate::data::DataError> {
    let mut rng = keyed(cfg.seed, Purpose::Synthetic, 0);
    let w: Vec<f64> = (0..cfg.dim).map(|_| rng.sample(StandardNormal)).collect();
    let bias: f64 = -0.5 * cfg.density * w.iter().sum::<f64>();
    let draw = |count: usize, stream: u64| -> Vec<SparseExample> {
        let mut rng = keyed(cfg.seed, Purpose::Synthetic, stream);
        (0..count)
            .map(|_| {
                let features: Vec<(u32, f64)> = (0..cfg.dim as u32)
                    .filter(|_| rng.random::<f64>() < cfg.density)
                    .map(|j| (j, 1.0))
                    .collect();
                let score: f64 = bias
                    + features
                        .iter()
                        .map(|&(j, v)| w[j as usize] * v)
                        .sum::<f64>();
                let mut positive = score >= 0.0;
                if rng.random::<f64>() < cfg.flip {
                    positive = !positive;
                }
                let label = if positive {
                    Label::Positive
                } else {
                    Label::Negative
                };
                SparseExample::new(label, features)
            })
            .collect()
    };
    let train = draw(cfg.n_train, 1);
    let test = draw(cfg.n_test, 2);
    let name = format!("synthetic-n{}-d{}-s{}", cfg.n_train, cfg.dim, cfg.seed);
    Dataset::new(name, train, test, Some(cfg.dim))
}
