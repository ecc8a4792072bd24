use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::rng::{keyed, Purpose};

use super::{Batch, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingStrategy {
    /// Each iteration draws `batch_size` distinct indices uniformly, independently
    /// of every other iteration.
    Independent,
    /// The index set is permuted at the start of every epoch and cut into
    /// consecutive disjoint blocks; a short final block is used as-is.
    ShuffledEpoch,
}

/// Deterministic mini-batch source. Batch `k` depends only on
/// `(seed, strategy, k)`, and its handle id is `k`.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    strategy: SamplingStrategy,
    n: usize,
    batch_size: usize,
    seed: u64,
    // (epoch, permutation) for the shuffled strategy
    cached: Option<(u64, Vec<usize>)>,
}

impl BatchSampler {
    pub fn new(
        strategy: SamplingStrategy,
        n: usize,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self, ProblemError> {
        if batch_size == 0 || batch_size > n {
            return Err(ProblemError::BatchSize { batch_size, n });
        }
        Ok(Self {
            strategy,
            n,
            batch_size,
            seed,
            cached: None,
        })
    }

    pub fn strategy(&self) -> SamplingStrategy {
        self.strategy
    }

    /// Batches per epoch under the shuffled strategy.
    pub fn blocks_per_epoch(&self) -> usize {
        self.n.div_ceil(self.batch_size)
    }

    pub fn batch(&mut self, k: u64) -> Batch {
        match self.strategy {
            SamplingStrategy::Independent => {
                if self.batch_size == self.n {
                    return Batch::full(self.n, k);
                }
                let mut rng = keyed(self.seed, Purpose::Batch, k);
                let idx = index::sample(&mut rng, self.n, self.batch_size).into_vec();
                Batch::from_distinct(idx, k)
            }
            SamplingStrategy::ShuffledEpoch => {
                let per_epoch = self.blocks_per_epoch() as u64;
                let epoch = k / per_epoch;
                let block = (k % per_epoch) as usize;
                if self.cached.as_ref().is_none_or(|(e, _)| *e != epoch) {
                    let mut perm: Vec<usize> = (0..self.n).collect();
                    perm.shuffle(&mut keyed(self.seed, Purpose::Shuffle, epoch));
                    self.cached = Some((epoch, perm));
                }
                let perm = &self.cached.as_ref().expect("just filled").1;
                let start = block * self.batch_size;
                let end = (start + self.batch_size).min(self.n);
                Batch::from_distinct(perm[start..end].to_vec(), k)
            }
        }
    }
}
