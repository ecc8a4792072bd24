use rand_distr::{Distribution, Normal};

use crate::rng::{keyed, Purpose};

use super::{Batch, FiniteSumProblem, ProblemError};

/// Adds independent `N(0, σ²)` noise to every gradient coordinate of a base
/// problem. The noise for a batch handle is keyed by `(seed, batch id)`, so
/// re-evaluating with the same handle reuses the same realisation.
///
/// The estimator is unbiased with `E‖g − ∇f‖² = nσ²`.
#[derive(Debug, Clone)]
pub struct NoisyGradient<P> {
    base: P,
    sigma: f64,
    seed: u64,
}

impl<P: FiniteSumProblem> NoisyGradient<P> {
    pub fn new(base: P, sigma: f64, seed: u64) -> Result<Self, ProblemError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(ProblemError::Invalid(format!(
                "noise level must be >= 0, got {sigma}"
            )));
        }
        Ok(Self { base, sigma, seed })
    }

    pub fn base(&self) -> &P {
        &self.base
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `M_g = nσ²`
    pub fn variance_bound(&self) -> f64 {
        self.base.dim() as f64 * self.sigma * self.sigma
    }
}

impl<P: FiniteSumProblem> FiniteSumProblem for NoisyGradient<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn num_terms(&self) -> usize {
        self.base.num_terms()
    }

    fn loss(&self, x: &[f64], batch: &Batch) -> Result<f64, ProblemError> {
        self.base.loss(x, batch)
    }

    fn grad(&self, x: &[f64], batch: &Batch) -> Result<Vec<f64>, ProblemError> {
        let mut g = self.base.grad(x, batch)?;
        if self.sigma > 0.0 {
            let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
            let mut rng = keyed(self.seed, Purpose::Noise, batch.id());
            for gi in g.iter_mut() {
                *gi += normal.sample(&mut rng);
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::QuadraticProblem;
    use crate::vector::{norm, sub};

    #[test]
    fn same_handle_same_noise() {
        let q = QuadraticProblem::new(vec![1.0, 2.0], None).unwrap();
        let noisy = NoisyGradient::new(q, 0.3, 11).unwrap();
        let b0 = Batch::full(1, 0);
        let b1 = Batch::full(1, 1);
        let x = [1.0, 1.0];
        assert_eq!(noisy.grad(&x, &b0).unwrap(), noisy.grad(&x, &b0).unwrap());
        assert_ne!(noisy.grad(&x, &b0).unwrap(), noisy.grad(&x, &b1).unwrap());
        // with common noise, gradient differences are exact
        let y = sub(
            &noisy.grad(&[2.0, 0.0], &b0).unwrap(),
            &noisy.grad(&x, &b0).unwrap(),
        );
        assert!((y[0] - 1.0).abs() < 1e-12 && (y[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn moments_match_variance_bound() {
        let n = 2;
        let sigma = 0.1;
        let q = QuadraticProblem::new(vec![1.0, 2.0], None).unwrap();
        let noisy = NoisyGradient::new(q.clone(), sigma, 5).unwrap();
        assert!((noisy.variance_bound() - 0.02).abs() < 1e-15);
        let x = [0.3, -0.7];
        let truth = q.gradient(&x);
        let draws = 100_000u64;
        let mut mean = vec![0.0; n];
        let mut sq = 0.0;
        for id in 0..draws {
            let e = sub(&noisy.grad(&x, &Batch::full(1, id)).unwrap(), &truth);
            for (m, v) in mean.iter_mut().zip(&e) {
                *m += v / draws as f64;
            }
            sq += norm(&e).powi(2) / draws as f64;
        }
        let bound = 3.0 * sigma * (n as f64 / draws as f64).sqrt();
        assert!(norm(&mean) <= bound, "mean noise {} > {bound}", norm(&mean));
        let rel = (sq - noisy.variance_bound()).abs() / noisy.variance_bound();
        assert!(rel < 0.05, "second moment off by {rel}");
    }

    #[test]
    fn rejects_negative_sigma() {
        let q = QuadraticProblem::new(vec![1.0], None).unwrap();
        assert!(NoisyGradient::new(q, -1.0, 0).is_err());
    }
}
