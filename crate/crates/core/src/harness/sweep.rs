use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::optimizer::{run, RunFailure, RunOptions, Variant};
use crate::problem::{accuracy, mean_loss, LogisticRegression};

use super::{expand_grid, variant_config, ExperimentSpec, GridPoint, HarnessError};

/// Metrics at the end of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    /// In `[0, 1]`.
    pub test_accuracy: f64,
}

/// One `(configuration, seed)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// `ExIJK`, or `sgdbb` for the baseline, which ignores the grid.
    pub run_id: String,
    pub dataset: String,
    pub variant: Variant,
    pub alpha: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub seed: u64,
    /// One entry per completed epoch.
    pub epochs: Vec<EpochMetrics>,
    /// Fraction of iterations taking `p = −μ_k g_k`.
    pub bb_fraction: f64,
    pub iterations: u64,
    pub gradient_evaluations: u64,
    /// `μ_min ≤ γ₂α`.
    pub assumption4: bool,
    pub wall_time_s: Option<f64>,
    pub failure: Option<RunFailure>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn max_accuracy(&self) -> Option<f64> {
        self.epochs
            .iter()
            .map(|e| e.test_accuracy)
            .filter(|a| a.is_finite())
            .reduce(f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    /// Measure wall time per run. Off keeps output byte-identical across
    /// repeated runs.
    pub wall_time: bool,
}

/// The baseline's pseudo grid point. Its (α, γ₁, γ₂) only satisfy validation.
fn sgdbb_point() -> GridPoint {
    GridPoint {
        id: "sgdbb".into(),
        ijk: (0, 0, 0),
        alpha: 1.0,
        gamma1: 1.0,
        gamma2: 1.0,
    }
}

/// Runs every (variant, grid point, seed) in parallel. Individual run
/// failures become failed records. Output order is variant, then grid point,
/// then seed.
pub fn run_sweep(
    spec: &ExperimentSpec,
    ds: &Dataset,
    g: f64,
    opts: SweepOptions,
) -> Result<Vec<RunRecord>, HarnessError> {
    spec.validate()?;
    let grid = expand_grid(spec, g)?;
    let seeds = spec.seed_list();
    let mut jobs = Vec::new();
    for &variant in &spec.variants {
        let points = if variant == Variant::SgdBb {
            vec![sgdbb_point()]
        } else {
            grid.clone()
        };
        for point in points {
            for &seed in &seeds {
                jobs.push((variant, point.clone(), seed));
            }
        }
    }
    let problem = LogisticRegression::new(&ds.train, ds.dim)?;
    Ok(jobs
        .into_par_iter()
        .map(|(variant, point, seed)| run_one(spec, ds, &problem, variant, &point, seed, opts))
        .collect())
}

fn run_one(
    spec: &ExperimentSpec,
    ds: &Dataset,
    problem: &LogisticRegression<'_>,
    variant: Variant,
    point: &GridPoint,
    seed: u64,
    opts: SweepOptions,
) -> RunRecord {
    let cfg = variant_config(spec, variant, point, ds.train.len());
    let grid_coords = variant != Variant::SgdBb;
    let mut record = RunRecord {
        run_id: point.id.clone(),
        dataset: ds.name.clone(),
        variant,
        alpha: grid_coords.then_some(point.alpha),
        gamma1: grid_coords.then_some(point.gamma1),
        gamma2: grid_coords.then_some(point.gamma2),
        seed,
        epochs: Vec::new(),
        bb_fraction: 0.0,
        iterations: 0,
        gradient_evaluations: 0,
        assumption4: cfg.assumption4_holds(),
        wall_time_s: None,
        failure: None,
    };
    let start = Instant::now();
    match run(
        problem,
        variant,
        &cfg,
        &RunOptions::epochs(spec.epochs, seed),
    ) {
        Ok(out) => {
            record.epochs = out
                .snapshots
                .iter()
                .map(|s| EpochMetrics {
                    epoch: s.epoch,
                    train_loss: mean_loss(&s.x, &ds.train),
                    test_loss: mean_loss(&s.x, &ds.test),
                    test_accuracy: accuracy(&s.x, &ds.test),
                })
                .collect();
            record.bb_fraction = out.bb_fraction();
            record.iterations = out.iterations;
            record.gradient_evaluations = out.gradient_evaluations;
            record.failure = out.failure;
        }
        Err(e) => {
            record.failure = Some(RunFailure {
                k: 0,
                reason: e.to_string(),
            });
        }
    }
    if opts.wall_time {
        record.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{synthetic_logistic, SyntheticLogistic};

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            dataset: "synthetic".into(),
            variants: vec![Variant::Trish, Variant::V2],
            alphas: vec![1.0],
            gamma1_multiples: vec![4.0, 8.0],
            gamma2_multiples: vec![1.0],
            seeds: 3,
            epochs: 2,
            batch_size: 16,
            ..Default::default()
        }
    }

    #[test]
    fn record_counts_and_snapshots() {
        let ds = synthetic_logistic(&SyntheticLogistic {
            n_train: 200,
            n_test: 50,
            dim: 6,
            ..Default::default()
        })
        .unwrap();
        let records = run_sweep(&small_spec(), &ds, 0.5, SweepOptions::default()).unwrap();
        // 2 variants × 2 configs × 3 seeds
        assert_eq!(records.len(), 12);
        for r in &records {
            assert!(r.succeeded(), "{:?}", r.failure);
            assert_eq!(r.epochs.len(), 2);
            assert!(r
                .epochs
                .iter()
                .all(|e| (0.0..=1.0).contains(&e.test_accuracy)));
            assert!((0.0..=1.0).contains(&r.bb_fraction));
            assert!(r.wall_time_s.is_none());
            if r.variant == Variant::Trish {
                assert_eq!(r.bb_fraction, 0.0);
            }
        }
    }

    #[test]
    fn sgdbb_runs_once_per_seed() {
        let ds = synthetic_logistic(&SyntheticLogistic {
            n_train: 100,
            n_test: 20,
            dim: 4,
            ..Default::default()
        })
        .unwrap();
        let spec = ExperimentSpec {
            variants: vec![Variant::SgdBb],
            ..small_spec()
        };
        let records = run_sweep(&spec, &ds, 0.5, SweepOptions { wall_time: true }).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records
            .iter()
            .all(|r| r.run_id == "sgdbb" && r.alpha.is_none()));
        assert!(records.iter().all(|r| r.wall_time_s.is_some()));
    }
}
