//! Experiment harness: grids, G estimation, seeded sweeps, aggregation and
//! CSV/JSON output.

mod aggregate;
mod emit;
mod gnorm;
mod source;
mod sweep;

use std::path::PathBuf;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataError;
use crate::optimizer::{OptimError, TripletConfig, Variant};
use crate::problem::ProblemError;
use crate::theory::TheoryError;

pub use aggregate::{
    accuracy_ratio, aggregate, AggregateRecord, AlphaSummary, EpochAggregate, Stat, VariantSummary,
};
pub use emit::{format_sig, write_csv, write_json, write_pretty, CSV_COLUMNS};
pub use gnorm::estimate_g;
pub use source::{
    locate_data, synthetic_logistic, DataSource, SyntheticLogistic, SyntheticQuadratic,
};
pub use sweep::{run_sweep, EpochMetrics, RunRecord, SweepOptions};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("gradient-norm estimation diverged at iteration {0}")]
    Divergence(u64),
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Config { path: PathBuf, message: String },
}

/// How the cycle length `m` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MPolicy {
    Fixed(usize),
    /// `N_b = ⌊N / batch_size⌋`.
    BatchesPerEpoch,
}

impl MPolicy {
    pub fn resolve(self, n: usize, batch_size: usize) -> usize {
        match self {
            MPolicy::Fixed(m) => m.max(1),
            MPolicy::BatchesPerEpoch => (n / batch_size.max(1)).max(1),
        }
    }
}

/// SGD-BB baseline settings; the moving-average cycle follows
/// [`ExperimentSpec::m_averaged`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdBbSettings {
    pub mu0: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl Default for SgdBbSettings {
    fn default() -> Self {
        Self {
            mu0: 1e-2,
            mu_min: 1e-5,
            mu_max: 1e-1,
        }
    }
}

/// Everything needed to run one sweep. Missing JSON fields take the
/// reference-protocol defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    /// Dataset name, or a synthetic spec understood by [`DataSource::parse`].
    pub dataset: String,
    pub variants: Vec<Variant>,
    pub alphas: Vec<f64>,
    /// γ₁ values as multiples of `1/G`.
    pub gamma1_multiples: Vec<f64>,
    /// γ₂ values as multiples of `1/G`.
    pub gamma2_multiples: Vec<f64>,
    /// Number of seeds, derived from `master_seed`.
    pub seeds: usize,
    pub master_seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub mu0: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Cycle length of V1.
    pub m_v1: MPolicy,
    /// Cycle length of V2, V3 and SGD-BB.
    pub m_averaged: MPolicy,
    pub eta: f64,
    pub fifo_capacity: usize,
    pub sgdbb: SgdBbSettings,
    /// Learning rate of the G-estimation pass.
    pub g_lr: f64,
    /// Seed reserved for G estimation.
    pub g_seed: u64,
    /// Skip estimation and use this G.
    pub g_override: Option<f64>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let (alphas, gamma1_multiples, gamma2_multiples) = binary_grid();
        Self {
            dataset: "a1a".into(),
            variants: vec![Variant::Trish, Variant::V1, Variant::V2, Variant::V3],
            alphas,
            gamma1_multiples,
            gamma2_multiples,
            seeds: 10,
            master_seed: 2024,
            epochs: 5,
            batch_size: 64,
            mu0: 1.0,
            mu_min: 1e-5,
            mu_max: 1e5,
            m_v1: MPolicy::Fixed(20),
            m_averaged: MPolicy::BatchesPerEpoch,
            eta: 0.9,
            fifo_capacity: 100,
            sgdbb: SgdBbSettings::default(),
            g_lr: 0.1,
            g_seed: 0x6e6f_726d,
            g_override: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Spec(m.into()));
        if self.variants.is_empty() {
            return bad("variant list is empty");
        }
        let needs_grid = self.variants.iter().any(|&v| v != Variant::SgdBb);
        if needs_grid
            && (self.alphas.is_empty()
                || self.gamma1_multiples.is_empty()
                || self.gamma2_multiples.is_empty())
        {
            return bad("grid lists must be nonempty");
        }
        if self.seeds == 0 {
            return bad("need at least one seed");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1");
        }
        if !(self.g_lr > 0.0) {
            return bad("G-estimation learning rate must be positive");
        }
        Ok(())
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64)
            .map(|i| crate::rng::derived_seed(self.master_seed, i))
            .collect()
    }
}

/// `α ∈ {10⁻¹, 10^{-1/2}, 1, 10^{1/2}, 10}`, `γ₁G ∈ {4, 8, 16, 32}`,
/// `γ₂G ∈ {1/2, 1, 2}`.
pub fn binary_grid() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        vec![0.1, 10f64.powf(-0.5), 1.0, 10f64.powf(0.5), 10.0],
        vec![4.0, 8.0, 16.0, 32.0],
        vec![0.5, 1.0, 2.0],
    )
}

/// `α ∈ {10⁻³, 10⁻², 10⁻¹, 1}`, `γ₁G ∈ {4, 8, 16}`, `γ₂G ∈ {1/8, 1/4, 1/2}`.
pub fn multiclass_grid() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        vec![1e-3, 1e-2, 1e-1, 1.0],
        vec![4.0, 8.0, 16.0],
        vec![0.125, 0.25, 0.5],
    )
}

/// One `(α, γ₁, γ₂)` triplet with its 1-based grid position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// `Ex{I}{J}{K}`.
    pub id: String,
    pub ijk: (usize, usize, usize),
    pub alpha: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

pub fn ex_id(i: usize, j: usize, k: usize) -> String {
    format!("Ex{i}{j}{k}")
}

/// Cartesian product of the experiment's lists with `γ = multiple / G`.
/// Triplets with `γ₂ > γ₁` are dropped with a warning.
pub fn expand_grid(spec: &ExperimentSpec, g: f64) -> Result<Vec<GridPoint>, HarnessError> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(HarnessError::Spec(format!("G must be positive, got {g}")));
    }
    let mut out = Vec::new();
    for (i, &alpha) in spec.alphas.iter().enumerate() {
        for (j, &m1) in spec.gamma1_multiples.iter().enumerate() {
            for (k, &m2) in spec.gamma2_multiples.iter().enumerate() {
                let (gamma1, gamma2) = (m1 / g, m2 / g);
                let id = ex_id(i + 1, j + 1, k + 1);
                if gamma2 > gamma1 {
                    warn!("dropping {id}: gamma2 = {gamma2} exceeds gamma1 = {gamma1}");
                    continue;
                }
                out.push(GridPoint {
                    id,
                    ijk: (i + 1, j + 1, k + 1),
                    alpha,
                    gamma1,
                    gamma2,
                });
            }
        }
    }
    Ok(out)
}

/// Optimizer configuration for `variant` at a grid point on a dataset with
/// `n` training examples.
pub fn variant_config(
    spec: &ExperimentSpec,
    variant: Variant,
    point: &GridPoint,
    n: usize,
) -> TripletConfig {
    let batch_size = spec.batch_size.min(n);
    let base = TripletConfig {
        alpha: point.alpha,
        gamma1: point.gamma1,
        gamma2: point.gamma2,
        mu_min: spec.mu_min,
        mu_max: spec.mu_max,
        mu0: spec.mu0,
        cycle: spec.m_averaged.resolve(n, batch_size),
        eta: spec.eta,
        fifo_capacity: spec.fifo_capacity,
        batch_size,
    };
    match variant {
        Variant::V1 => TripletConfig {
            cycle: spec.m_v1.resolve(n, batch_size),
            ..base
        },
        Variant::SgdBb => TripletConfig {
            mu0: spec.sgdbb.mu0,
            mu_min: spec.sgdbb.mu_min,
            mu_max: spec.sgdbb.mu_max,
            ..base
        },
        _ => base,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn grids_have_expected_sizes() {
        let spec = ExperimentSpec::default();
        let grid = expand_grid(&spec, 0.3477).unwrap();
        assert_eq!(grid.len(), 60);
        let (a, g1, g2) = multiclass_grid();
        let multi = ExperimentSpec {
            alphas: a,
            gamma1_multiples: g1,
            gamma2_multiples: g2,
            ..ExperimentSpec::default()
        };
        assert_eq!(expand_grid(&multi, 1.0).unwrap().len(), 36);
    }

    #[test]
    fn ex511_is_largest_alpha_smallest_gammas() {
        let g = 0.3477;
        let grid = expand_grid(&ExperimentSpec::default(), g).unwrap();
        let p = grid.iter().find(|p| p.id == "Ex511").unwrap();
        assert_eq!(p.alpha, 10.0);
        assert_eq!(p.gamma1, 4.0 / g);
        assert_eq!(p.gamma2, 0.5 / g);
    }

    #[test]
    fn grid_ids_are_a_bijection() {
        let grid = expand_grid(&ExperimentSpec::default(), 1.0).unwrap();
        let ids: HashSet<_> = grid.iter().map(|p| p.id.clone()).collect();
        assert_eq!(ids.len(), grid.len());
        for i in 1..=5 {
            for j in 1..=4 {
                for k in 1..=3 {
                    assert!(ids.contains(&ex_id(i, j, k)));
                }
            }
        }
    }

    #[test]
    fn single_element_lists() {
        let spec = ExperimentSpec {
            alphas: vec![1.0],
            gamma1_multiples: vec![2.0],
            gamma2_multiples: vec![1.0],
            ..Default::default()
        };
        let grid = expand_grid(&spec, 2.0).unwrap();
        assert_eq!(grid.len(), 1);
        assert_eq!(grid[0].id, "Ex111");
    }

    #[test]
    fn inverted_gammas_are_dropped() {
        let spec = ExperimentSpec {
            alphas: vec![1.0],
            gamma1_multiples: vec![1.0],
            gamma2_multiples: vec![0.5, 2.0],
            ..Default::default()
        };
        let grid = expand_grid(&spec, 1.0).unwrap();
        assert_eq!(
            grid.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(),
            vec!["Ex111"]
        );
    }

    #[test]
    fn m_policy_matches_reference_values() {
        let p = MPolicy::BatchesPerEpoch;
        assert_eq!(p.resolve(1605, 64), 25);
        assert_eq!(p.resolve(2477, 64), 38);
        assert_eq!(p.resolve(10000, 64), 156);
        assert_eq!(MPolicy::Fixed(20).resolve(1605, 64), 20);
    }

    #[test]
    fn variant_configs() {
        let spec = ExperimentSpec::default();
        let grid = expand_grid(&spec, 0.5).unwrap();
        let v1 = variant_config(&spec, Variant::V1, &grid[0], 1605);
        let v2 = variant_config(&spec, Variant::V2, &grid[0], 1605);
        let sgd = variant_config(&spec, Variant::SgdBb, &grid[0], 1605);
        assert_eq!((v1.cycle, v2.cycle, sgd.cycle), (20, 25, 25));
        assert_eq!((sgd.mu0, sgd.mu_max), (1e-2, 1e-1));
        assert!(v2.validate().is_ok() && sgd.validate().is_ok());
    }

    #[test]
    fn seed_lists_are_prefix_stable() {
        let ten = ExperimentSpec {
            seeds: 10,
            ..Default::default()
        }
        .seed_list();
        let fifty = ExperimentSpec {
            seeds: 50,
            ..Default::default()
        }
        .seed_list();
        assert_eq!(&fifty[..10], &ten[..]);
    }

    #[test]
    fn spec_json_defaults() {
        let spec: ExperimentSpec =
            serde_json::from_str(r#"{"dataset": "w1a", "seeds": 3}"#).unwrap();
        assert_eq!(spec.dataset, "w1a");
        assert_eq!(spec.seeds, 3);
        assert_eq!(spec.alphas.len(), 5);
        assert!(spec.validate().is_ok());
        let bad = ExperimentSpec { epochs: 0, ..spec };
        assert!(bad.validate().is_err());
    }
}
