//! Finite-sum objectives `f(x) = (1/N) Σ f_i(x)` with mini-batch oracles.
//!
//! Batch losses and gradients are means over the batch, never sums.

mod logistic;
mod noisy;
mod quadratic;
mod sampling;

use thiserror::Error;

pub use logistic::{accuracy, mean_loss, stable_log1pexp, stable_sigmoid, LogisticRegression};
pub use noisy::NoisyGradient;
pub use quadratic::QuadraticProblem;
pub use sampling::{BatchSampler, SamplingStrategy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("duplicate index {0} in batch")]
    DuplicateIndex(usize),
    #[error("index {index} out of range for {n} terms")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("batch size {batch_size} must be in [1, {n}]")]
    BatchSize { batch_size: usize, n: usize },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

/// A mini-batch handle: distinct term indices plus the identifier of the draw
/// that produced them.
///
/// Evaluating an oracle twice with the same handle evaluates the same sampled
/// function: the same terms, and for noisy oracles the same noise realisation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    indices: Vec<usize>,
    id: u64,
}

impl Batch {
    pub fn new(indices: Vec<usize>, id: u64) -> Result<Self, ProblemError> {
        if indices.is_empty() {
            return Err(ProblemError::EmptyBatch);
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(ProblemError::DuplicateIndex(w[0]));
        }
        Ok(Self { indices, id })
    }

    /// Indices already known to be distinct and nonempty.
    pub(crate) fn from_distinct(indices: Vec<usize>, id: u64) -> Self {
        debug_assert!(!indices.is_empty());
        Self { indices, id }
    }

    /// All `n` terms.
    pub fn full(n: usize, id: u64) -> Self {
        Self::from_distinct((0..n).collect(), id)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub(crate) fn check(&self, n: usize) -> Result<(), ProblemError> {
        if self.indices.is_empty() {
            return Err(ProblemError::EmptyBatch);
        }
        match self.indices.iter().find(|&&i| i >= n) {
            Some(&index) => Err(ProblemError::IndexOutOfRange { index, n }),
            None => Ok(()),
        }
    }
}

pub trait FiniteSumProblem: Sync {
    /// Parameter dimension.
    fn dim(&self) -> usize;

    /// Number of terms `N`.
    fn num_terms(&self) -> usize;

    fn loss(&self, x: &[f64], batch: &Batch) -> Result<f64, ProblemError>;

    fn grad(&self, x: &[f64], batch: &Batch) -> Result<Vec<f64>, ProblemError>;

    fn full_loss(&self, x: &[f64]) -> Result<f64, ProblemError> {
        self.loss(x, &Batch::full(self.num_terms(), u64::MAX))
    }

    fn full_grad(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.grad(x, &Batch::full(self.num_terms(), u64::MAX))
    }
}

impl<P: FiniteSumProblem + ?Sized> FiniteSumProblem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_terms(&self) -> usize {
        (**self).num_terms()
    }
    fn loss(&self, x: &[f64], batch: &Batch) -> Result<f64, ProblemError> {
        (**self).loss(x, batch)
    }
    fn grad(&self, x: &[f64], batch: &Batch) -> Result<Vec<f64>, ProblemError> {
        (**self).grad(x, batch)
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<(), ProblemError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(ProblemError::DimensionMismatch {
            expected,
            got: x.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_validation() {
        assert_eq!(Batch::new(vec![], 0), Err(ProblemError::EmptyBatch));
        assert_eq!(
            Batch::new(vec![1, 3, 1], 0),
            Err(ProblemError::DuplicateIndex(1))
        );
        let b = Batch::new(vec![2, 0], 5).unwrap();
        assert_eq!(b.indices(), &[2, 0]);
        assert_eq!(b.id(), 5);
        assert!(matches!(
            b.check(2),
            Err(ProblemError::IndexOutOfRange { index: 2, n: 2 })
        ));
        assert!(b.check(3).is_ok());
    }
}
