use super::{check_dim, Batch, FiniteSumProblem, ProblemError};

/// `f(x) = ½ xᵀ diag(λ) x − bᵀx` with every `λ_i > 0`.
///
/// Viewed as a finite sum with a single term, so every batch is the full
/// objective. The assumption constants are exact: the gradient Lipschitz
/// constant is `max λ`, the PL constant is `min λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    diag: Vec<f64>,
    linear: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(diag: Vec<f64>, linear: Option<Vec<f64>>) -> Result<Self, ProblemError> {
        if diag.is_empty() {
            return Err(ProblemError::Invalid("empty diagonal".into()));
        }
        if let Some(&bad) = diag.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(ProblemError::Invalid(format!(
                "diagonal entries must be positive and finite, got {bad}"
            )));
        }
        let linear = linear.unwrap_or_else(|| vec![0.0; diag.len()]);
        check_dim(diag.len(), &linear)?;
        Ok(Self { diag, linear })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn lambda_min(&self) -> f64 {
        self.diag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn lambda_max(&self) -> f64 {
        self.diag.iter().copied().fold(0.0, f64::max)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.diag)
            .zip(&self.linear)
            .map(|((xi, a), b)| 0.5 * a * xi * xi - b * xi)
            .sum()
    }

    /// `Ax − b`
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.diag)
            .zip(&self.linear)
            .map(|((xi, a), b)| a * xi - b)
            .collect()
    }

    pub fn minimizer(&self) -> Vec<f64> {
        self.linear
            .iter()
            .zip(&self.diag)
            .map(|(b, a)| b / a)
            .collect()
    }

    /// `f_* = −½ Σ b_i² / λ_i`
    pub fn min_value(&self) -> f64 {
        -0.5 * self
            .linear
            .iter()
            .zip(&self.diag)
            .map(|(b, a)| b * b / a)
            .sum::<f64>()
    }
}

impl FiniteSumProblem for QuadraticProblem {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn num_terms(&self) -> usize {
        1
    }

    fn loss(&self, x: &[f64], batch: &Batch) -> Result<f64, ProblemError> {
        check_dim(self.diag.len(), x)?;
        batch.check(1)?;
        Ok(self.value(x))
    }

    fn grad(&self, x: &[f64], batch: &Batch) -> Result<Vec<f64>, ProblemError> {
        check_dim(self.diag.len(), x)?;
        batch.check(1)?;
        Ok(self.gradient(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_examples() {
        let q = QuadraticProblem::new(vec![1.0, 10.0], None).unwrap();
        assert_eq!(q.gradient(&[1.0, 1.0]), vec![1.0, 10.0]);
        assert_eq!(q.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        let id = QuadraticProblem::new(vec![1.0; 3], None).unwrap();
        assert_eq!(id.gradient(&[0.5, -2.0, 3.0]), vec![0.5, -2.0, 3.0]);
    }

    #[test]
    fn linear_term_and_minimum() {
        let q = QuadraticProblem::new(vec![2.0, 4.0], Some(vec![2.0, -4.0])).unwrap();
        let xs = q.minimizer();
        assert_eq!(xs, vec![1.0, -1.0]);
        assert_eq!(q.gradient(&xs), vec![0.0, 0.0]);
        assert_eq!(q.value(&xs), q.min_value());
        assert_eq!(q.min_value(), -3.0);
        assert_eq!((q.lambda_min(), q.lambda_max()), (2.0, 4.0));
    }

    #[test]
    fn rejects_non_positive_diagonal() {
        assert!(QuadraticProblem::new(vec![1.0, 0.0], None).is_err());
        assert!(QuadraticProblem::new(vec![], None).is_err());
        assert!(QuadraticProblem::new(vec![1.0], Some(vec![1.0, 2.0])).is_err());
    }
}
