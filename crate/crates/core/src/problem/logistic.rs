use crate::data::SparseExample;

use super::{check_dim, Batch, FiniteSumProblem, ProblemError};

/// Beyond this magnitude `log(1+e^z)` is evaluated through its asymptotic
/// branches; double precision has long saturated by then.
const SATURATION: f64 = 35.0;

/// `log(1 + e^z)` without overflow.
pub fn stable_log1pexp(z: f64) -> f64 {
    if z > SATURATION {
        z + (-z).exp()
    } else if z < -SATURATION {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-t})` without overflow.
pub fn stable_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Logistic regression `f_i(x) = log(1 + exp(-b_i xᵀa_i))` over one split.
#[derive(Debug, Clone, Copy)]
pub struct LogisticRegression<'a> {
    examples: &'a [SparseExample],
    dim: usize,
}

impl<'a> LogisticRegression<'a> {
    pub fn new(examples: &'a [SparseExample], dim: usize) -> Result<Self, ProblemError> {
        if examples.is_empty() {
            return Err(ProblemError::Invalid("no examples".into()));
        }
        if let Some(ex) = examples.iter().find(|e| e.required_dim() > dim) {
            return Err(ProblemError::DimensionMismatch {
                expected: dim,
                got: ex.required_dim(),
            });
        }
        Ok(Self { examples, dim })
    }

    pub fn examples(&self) -> &'a [SparseExample] {
        self.examples
    }
}

impl FiniteSumProblem for LogisticRegression<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_terms(&self) -> usize {
        self.examples.len()
    }

    fn loss(&self, x: &[f64], batch: &Batch) -> Result<f64, ProblemError> {
        check_dim(self.dim, x)?;
        batch.check(self.examples.len())?;
        let total: f64 = batch
            .indices()
            .iter()
            .map(|&i| {
                let ex = &self.examples[i];
                stable_log1pexp(-ex.label.sign() * ex.dot(x))
            })
            .sum();
        Ok(total / batch.len() as f64)
    }

    fn grad(&self, x: &[f64], batch: &Batch) -> Result<Vec<f64>, ProblemError> {
        check_dim(self.dim, x)?;
        batch.check(self.examples.len())?;
        let mut g = vec![0.0; self.dim];
        let inv = 1.0 / batch.len() as f64;
        for &i in batch.indices() {
            let ex = &self.examples[i];
            let b = ex.label.sign();
            // d/dz log(1+e^{-bz}) = -b σ(-bz)
            let coef = -b * stable_sigmoid(-b * ex.dot(x)) * inv;
            for &(j, v) in &ex.features {
                g[j as usize] += coef * v;
            }
        }
        Ok(g)
    }
}

/// Mean logistic loss of `x` over a whole split.
pub fn mean_loss(x: &[f64], split: &[SparseExample]) -> f64 {
    if split.is_empty() {
        return f64::NAN;
    }
    split
        .iter()
        .map(|ex| stable_log1pexp(-ex.label.sign() * ex.dot(x)))
        .sum::<f64>()
        / split.len() as f64
}

/// Fraction of `split` whose label matches `sign(xᵀa)`; a score of exactly 0
/// predicts `+1`.
pub fn accuracy(x: &[f64], split: &[SparseExample]) -> f64 {
    if split.is_empty() {
        return f64::NAN;
    }
    let correct = split
        .iter()
        .filter(|ex| {
            let predicted = if ex.dot(x) >= 0.0 { 1.0 } else { -1.0 };
            predicted == ex.label.sign()
        })
        .count();
    correct as f64 / split.len() as f64
}
