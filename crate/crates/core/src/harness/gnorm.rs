use crate::problem::{BatchSampler, FiniteSumProblem, SamplingStrategy};
use crate::vector::{all_finite, axpy, norm};

use super::HarnessError;

/// Mean stochastic-gradient norm over one epoch of plain SG
/// `x ← x − ℓ g` from `x₀ = 0`, one pass over a shuffled index set.
pub fn estimate_g<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    batch_size: usize,
    lr: f64,
    seed: u64,
) -> Result<f64, HarnessError> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(HarnessError::Spec(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    let n = problem.num_terms();
    let mut sampler =
        BatchSampler::new(SamplingStrategy::ShuffledEpoch, n, batch_size.min(n), seed)?;
    let iters = sampler.blocks_per_epoch() as u64;
    let mut x = vec![0.0; problem.dim()];
    let mut total = 0.0;
    for k in 0..iters {
        let g = problem.grad(&x, &sampler.batch(k))?;
        if !all_finite(&g) {
            return Err(HarnessError::Divergence(k));
        }
        total += norm(&g);
        axpy(-lr, &g, &mut x);
        if !all_finite(&x) {
            return Err(HarnessError::Divergence(k));
        }
    }
    Ok(total / iters as f64)
}
