use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::optimizer::Variant;

use super::RunRecord;

/// Mean, sample standard deviation and range of a metric over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Stat {
    /// Values are summed in sorted order so the result does not depend on
    /// the order of the contributors.
    fn of(mut values: Vec<f64>) -> Option<Stat> {
        values.retain(|v| !v.is_nan());
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = (values.iter().sum::<f64>() / n).clamp(values[0], values[values.len() - 1]);
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat {
            mean,
            std,
            min: values[0],
            max: values[values.len() - 1],
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochAggregate {
    pub epoch: usize,
    pub train_loss: Stat,
    pub test_loss: Stat,
    pub test_accuracy: Stat,
}

/// Seed statistics of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub dataset: String,
    pub variant: Variant,
    pub run_id: String,
    pub alpha: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub runs: usize,
    pub failed_runs: usize,
    pub epochs: Vec<EpochAggregate>,
    pub bb_fraction: Stat,
    /// Largest per-epoch mean test accuracy.
    pub best_mean_accuracy: Option<f64>,
}

impl AggregateRecord {
    pub fn final_epoch(&self) -> Option<&EpochAggregate> {
        self.epochs.last()
    }
}

/// Best configuration over (γ₁, γ₂) at one α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: Option<f64>,
    pub best_accuracy: f64,
    pub best_run_id: String,
    /// Unconstrained-step fraction averaged over every run at this α.
    pub mean_bb_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub dataset: String,
    pub variant: Variant,
    /// Ascending in α.
    pub alphas: Vec<AlphaSummary>,
    /// `min/max` over α of the best accuracies.
    pub accuracy_ratio: Option<f64>,
}

impl VariantSummary {
    pub fn at_alpha(&self, alpha: f64) -> Option<&AlphaSummary> {
        self.alphas.iter().find(|a| {
            a.alpha
                .is_some_and(|x| (x - alpha).abs() <= 1e-12 * alpha.abs())
        })
    }
}

type Key = (String, Variant, String);

/// Per-configuration statistics and per-(dataset, variant) α summaries,
/// both in a canonical order independent of the input order.
pub fn aggregate(records: &[RunRecord]) -> (Vec<AggregateRecord>, Vec<VariantSummary>) {
    let mut groups: BTreeMap<Key, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.dataset.clone(), r.variant, r.run_id.clone()))
            .or_default()
            .push(r);
    }
    let mut aggs = Vec::new();
    for ((dataset, variant, run_id), group) in groups {
        let first = group[0];
        let max_epoch = group
            .iter()
            .flat_map(|r| r.epochs.iter().map(|e| e.epoch))
            .max();
        let mut epochs = Vec::new();
        for epoch in 1..=max_epoch.unwrap_or(0) {
            let at: Vec<_> = group
                .iter()
                .filter_map(|r| r.epochs.iter().find(|e| e.epoch == epoch))
                .collect();
            let stat =
                |f: fn(&super::EpochMetrics) -> f64| Stat::of(at.iter().map(|e| f(e)).collect());
            if let (Some(train_loss), Some(test_loss), Some(test_accuracy)) = (
                stat(|e| e.train_loss),
                stat(|e| e.test_loss),
                stat(|e| e.test_accuracy),
            ) {
                epochs.push(EpochAggregate {
                    epoch,
                    train_loss,
                    test_loss,
                    test_accuracy,
                });
            }
        }
        let Some(bb_fraction) = Stat::of(group.iter().map(|r| r.bb_fraction).collect()) else {
            warn!("skipping empty group {dataset}/{variant}/{run_id}");
            continue;
        };
        let best_mean_accuracy = epochs.iter().map(|e| e.test_accuracy.mean).reduce(f64::max);
        aggs.push(AggregateRecord {
            dataset,
            variant,
            run_id,
            alpha: first.alpha,
            gamma1: first.gamma1,
            gamma2: first.gamma2,
            runs: group.len(),
            failed_runs: group.iter().filter(|r| !r.succeeded()).count(),
            epochs,
            bb_fraction,
            best_mean_accuracy,
        });
    }

    let mut by_variant: BTreeMap<(String, Variant), Vec<&AggregateRecord>> = BTreeMap::new();
    for a in &aggs {
        by_variant
            .entry((a.dataset.clone(), a.variant))
            .or_default()
            .push(a);
    }
    let mut summaries = Vec::new();
    for ((dataset, variant), configs) in by_variant {
        let mut alphas: Vec<Option<f64>> = configs.iter().map(|c| c.alpha).collect();
        alphas.sort_by(|a, b| {
            a.unwrap_or(f64::NEG_INFINITY)
                .total_cmp(&b.unwrap_or(f64::NEG_INFINITY))
        });
        alphas.dedup();
        let mut rows = Vec::new();
        for alpha in alphas {
            let at: Vec<&&AggregateRecord> = configs.iter().filter(|c| c.alpha == alpha).collect();
            let best = at
                .iter()
                .filter_map(|c| c.best_mean_accuracy.map(|acc| (acc, c.run_id.as_str())))
                .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(a.1)));
            let Some((best_accuracy, best_run_id)) = best else {
                warn!("no finished epochs for {dataset}/{variant} at alpha {alpha:?}");
                continue;
            };
            let total_runs: usize = at.iter().map(|c| c.bb_fraction.count).sum();
            let weighted: f64 = at
                .iter()
                .map(|c| c.bb_fraction.mean * c.bb_fraction.count as f64)
                .sum();
            rows.push(AlphaSummary {
                alpha,
                best_accuracy,
                best_run_id: best_run_id.to_string(),
                mean_bb_fraction: weighted / total_runs.max(1) as f64,
            });
        }
        let accuracy_ratio = accuracy_ratio(rows.iter().map(|r| r.best_accuracy));
        summaries.push(VariantSummary {
            dataset,
            variant,
            alphas: rows,
            accuracy_ratio,
        });
    }
    (aggs, summaries)
}

/// `min/max` of the given accuracies.
pub fn accuracy_ratio(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    (hi > 0.0 && hi.is_finite()).then(|| lo / hi)
}
