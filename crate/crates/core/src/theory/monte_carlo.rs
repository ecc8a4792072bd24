use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::optimizer::{run_with_observer, Budget, OptimError, RunOptions, TripletConfig, Variant};
use crate::problem::{NoisyGradient, QuadraticProblem, SamplingStrategy};
use crate::rng::derived_seed;
use crate::vector::norm;

use super::{admissible_alpha, constants, limit, AssumptionConstants, Regime, TheoryError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub runs: usize,
    pub iterations: u64,
    /// Relative slack on the limit.
    pub tolerance: f64,
    pub seed: u64,
    pub variant: Variant,
    /// Starting point; `None` uses the all-ones vector.
    pub x0: Option<Vec<f64>>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            runs: 200,
            iterations: 2000,
            tolerance: 0.1,
            seed: 0,
            variant: Variant::V1,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub regime: Regime,
    /// Mean over runs of `f(x_K) − f_*` (PL) or `(1/K) Σ_{k=1}^{K} ‖∇f(x_k)‖²`.
    pub empirical: f64,
    /// Standard error of `empirical`.
    pub std_error: f64,
    pub limit: f64,
    pub tolerance: f64,
    pub runs: usize,
    pub failed_runs: usize,
    pub passed: bool,
}

/// Runs `mc.runs` independent seeded optimizations on the noisy quadratic
/// and compares the run-averaged statistic of `regime` against its limit as
/// the one-sided check `empirical ≤ limit · (1 + tolerance)`.
///
/// A failed (non-finite) run fails the check.
pub fn monte_carlo_check(
    regime: Regime,
    q: &QuadraticProblem,
    sigma: f64,
    cfg: &TripletConfig,
    mc: &MonteCarloConfig,
) -> Result<MonteCarloResult, TheoryError> {
    let a = AssumptionConstants::for_quadratic(q, sigma);
    let adm = admissible_alpha(regime, cfg, &a)?;
    if !adm.passed {
        return Err(TheoryError::NotAdmissible {
            regime,
            reason: adm.reasons.join("; "),
        });
    }
    if mc.runs == 0 || mc.iterations == 0 {
        return Err(TheoryError::Constants(
            "runs and iterations must be positive".into(),
        ));
    }
    let report = constants(cfg, &a)?;
    let lim = limit(regime, cfg, &a, &report)?;
    let x0 = mc.x0.clone().unwrap_or_else(|| vec![1.0; q.diag().len()]);

    let samples: Vec<Option<f64>> = (0..mc.runs as u64)
        .into_par_iter()
        .map(|i| -> Result<Option<f64>, TheoryError> {
            let seed = derived_seed(mc.seed, i);
            let oracle = NoisyGradient::new(q.clone(), sigma, seed).map_err(OptimError::from)?;
            let opts = RunOptions {
                budget: Budget::Iterations(mc.iterations),
                seed,
                sampling: Some(SamplingStrategy::Independent),
                x0: Some(x0.clone()),
            };
            let mut grad_sq = 0.0;
            let out = run_with_observer(&oracle, mc.variant, cfg, &opts, |k, x| {
                if k >= 1 {
                    grad_sq += norm(&q.gradient(x)).powi(2);
                }
            })?;
            if out.failure.is_some() {
                return Ok(None);
            }
            Ok(Some(if regime.is_pl() {
                q.value(&out.x) - a.f_star
            } else {
                grad_sq / mc.iterations as f64
            }))
        })
        .collect::<Result<_, _>>()?;

    let ok: Vec<f64> = samples.iter().flatten().copied().collect();
    let failed_runs = mc.runs - ok.len();
    let n = ok.len().max(1) as f64;
    let mean = ok.iter().sum::<f64>() / n;
    let var = if ok.len() > 1 {
        ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let empirical = if ok.is_empty() { f64::NAN } else { mean };
    Ok(MonteCarloResult {
        regime,
        empirical,
        std_error: (var / n).sqrt(),
        limit: lim,
        tolerance: mc.tolerance,
        runs: mc.runs,
        failed_runs,
        passed: failed_runs == 0 && empirical <= lim * (1.0 + mc.tolerance),
    })
}
