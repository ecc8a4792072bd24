use serde::{Deserialize, Serialize};

use crate::problem::{BatchSampler, FiniteSumProblem, SamplingStrategy};
use crate::vector::{all_finite, norm};

use super::bb::{CyclicBb, FisherBb, MovingAverageBb};
use super::step::{tr_step, trish_step, StepCase, StepKind};
use super::{OptimError, TripletConfig, Variant};

/// Stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    /// Stop once the cumulative count of single-gradient evaluations reaches
    /// `epochs · N`.
    Epochs(usize),
    /// Stop after exactly this many iterations.
    Iterations(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub budget: Budget,
    pub seed: u64,
    /// `None` selects [`Variant::default_sampling`].
    pub sampling: Option<SamplingStrategy>,
    /// `None` starts from the zero vector.
    pub x0: Option<Vec<f64>>,
}

impl RunOptions {
    pub fn epochs(epochs: usize, seed: u64) -> Self {
        Self {
            budget: Budget::Epochs(epochs),
            seed,
            sampling: None,
            x0: None,
        }
    }

    pub fn iterations(iterations: u64, seed: u64) -> Self {
        Self {
            budget: Budget::Iterations(iterations),
            seed,
            sampling: None,
            x0: None,
        }
    }
}

/// Scalars recorded for one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub k: u64,
    pub g_norm: f64,
    /// `+∞` for TRish (`H_k = 0`).
    pub mu: f64,
    /// `None` for SGD-BB, which has no trust region.
    pub case: Option<StepCase>,
    pub kind: StepKind,
    /// `+∞` for SGD-BB.
    pub radius: f64,
}

/// Iterate at the first iteration whose cumulative gradient count reaches
/// `epoch · N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub epoch: usize,
    pub k: u64,
    pub gradient_evaluations: u64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub k: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub x: Vec<f64>,
    pub log: Vec<IterationLog>,
    pub snapshots: Vec<Snapshot>,
    pub gradient_evaluations: u64,
    pub iterations: u64,
    /// Whether `μ_min ≤ γ₂α` held for the configuration.
    pub assumption4: bool,
    pub failure: Option<RunFailure>,
}

impl RunOutput {
    /// Fraction of iterations that took the unconstrained step `−μ_k g_k`.
    pub fn bb_fraction(&self) -> f64 {
        if self.log.is_empty() {
            return 0.0;
        }
        let n = self
            .log
            .iter()
            .filter(|l| l.kind == StepKind::Unconstrained)
            .count();
        n as f64 / self.log.len() as f64
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

enum Updater {
    None,
    V1(CyclicBb),
    V2(MovingAverageBb),
    V3(FisherBb),
}

pub fn run<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    variant: Variant,
    cfg: &TripletConfig,
    opts: &RunOptions,
) -> Result<RunOutput, OptimError> {
    run_with_observer(problem, variant, cfg, opts, |_, _| {})
}

/// Runs the optimizer, calling `observer(k, x_k)` before each iteration and
/// once more with the final iterate.
///
/// Non-finite gradients or iterates stop the run and are reported in
/// [`RunOutput::failure`]; only invalid configurations and oracle errors are
/// returned as `Err`.
pub fn run_with_observer<P, F>(
    problem: &P,
    variant: Variant,
    cfg: &TripletConfig,
    opts: &RunOptions,
    mut observer: F,
) -> Result<RunOutput, OptimError>
where
    P: FiniteSumProblem + ?Sized,
    F: FnMut(u64, &[f64]),
{
    cfg.validate()?;
    let n_terms = problem.num_terms();
    let dim = problem.dim();
    let mut x = match &opts.x0 {
        Some(x0) if x0.len() != dim => {
            return Err(OptimError::Config(format!(
                "x0 has length {}, problem dimension is {dim}",
                x0.len()
            )))
        }
        Some(x0) => x0.clone(),
        None => vec![0.0; dim],
    };
    if let Budget::Epochs(0) = opts.budget {
        return Err(OptimError::Config("epoch budget must be >= 1".into()));
    }
    let strategy = opts.sampling.unwrap_or_else(|| variant.default_sampling());
    let batch_size = cfg.batch_size.min(n_terms);
    let mut sampler = BatchSampler::new(strategy, n_terms, batch_size, opts.seed)?;

    let mut updater = match variant {
        Variant::Trish => Updater::None,
        Variant::V1 => Updater::V1(CyclicBb::new(cfg.cycle, cfg.mu_min, cfg.mu_max)),
        Variant::V2 | Variant::SgdBb => Updater::V2(MovingAverageBb::new(
            &x, cfg.mu0, cfg.cycle, cfg.eta, cfg.mu_min, cfg.mu_max,
        )),
        Variant::V3 => Updater::V3(FisherBb::new(
            dim,
            cfg.mu0,
            cfg.cycle,
            cfg.fifo_capacity,
            cfg.eta,
            cfg.mu_min,
            cfg.mu_max,
        )),
    };

    let epoch_evals = n_terms as u64;
    let (target_evals, max_iters) = match opts.budget {
        Budget::Epochs(e) => (e as u64 * epoch_evals, u64::MAX),
        Budget::Iterations(k) => (u64::MAX, k),
    };
    let max_snapshots = match opts.budget {
        Budget::Epochs(e) => e,
        Budget::Iterations(_) => usize::MAX,
    };

    let mut mu = cfg.mu0;
    let mut evals = 0u64;
    let mut k = 0u64;
    let mut log = Vec::new();
    let mut snapshots = Vec::new();
    let mut failure = None;

    while evals < target_evals && k < max_iters {
        observer(k, &x);
        let batch = sampler.batch(k);
        let g = problem.grad(&x, &batch)?;
        evals += batch.len() as u64;
        if !all_finite(&g) {
            failure = Some(RunFailure {
                k,
                reason: "non-finite stochastic gradient".into(),
            });
            break;
        }

        let (step, entry) = match variant {
            Variant::Trish => {
                let out = trish_step(&g, cfg);
                let entry = IterationLog {
                    k,
                    g_norm: norm(&g),
                    mu: f64::INFINITY,
                    case: Some(out.case),
                    kind: out.kind,
                    radius: out.radius,
                };
                (out.step, entry)
            }
            Variant::SgdBb => {
                let step: Vec<f64> = g.iter().map(|v| -mu * v).collect();
                let entry = IterationLog {
                    k,
                    g_norm: norm(&g),
                    mu,
                    case: None,
                    kind: StepKind::Unconstrained,
                    radius: f64::INFINITY,
                };
                (step, entry)
            }
            _ => {
                let out = tr_step(&g, mu, cfg)?;
                let entry = IterationLog {
                    k,
                    g_norm: norm(&g),
                    mu,
                    case: Some(out.case),
                    kind: out.kind,
                    radius: out.radius,
                };
                (out.step, entry)
            }
        };
        log.push(entry);

        let x_next: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        if !all_finite(&x_next) {
            failure = Some(RunFailure {
                k,
                reason: "non-finite iterate".into(),
            });
            break;
        }

        mu = match &mut updater {
            Updater::None => mu,
            Updater::V1(v1) => {
                let up = v1.update(k, mu, &step, &g, || Ok(problem.grad(&x_next, &batch)?))?;
                if up.evaluated {
                    evals += batch.len() as u64;
                }
                up.mu
            }
            Updater::V2(v2) => v2.update(k, mu, &x_next, &g).0,
            Updater::V3(v3) => v3.update(k, mu, &x, &g).0,
        };
        if mu.is_nan() {
            failure = Some(RunFailure {
                k,
                reason: "steplength became NaN".into(),
            });
            x = x_next;
            k += 1;
            break;
        }

        x = x_next;
        k += 1;
        while snapshots.len() < max_snapshots && evals >= (snapshots.len() as u64 + 1) * epoch_evals
        {
            snapshots.push(Snapshot {
                epoch: snapshots.len() + 1,
                k,
                gradient_evaluations: evals,
                x: x.clone(),
            });
        }
    }
    if failure.is_none() {
        observer(k, &x);
    }

    Ok(RunOutput {
        x,
        log,
        snapshots,
        gradient_evaluations: evals,
        iterations: k,
        assumption4: cfg.assumption4_holds(),
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::bb_raw;
    use crate::problem::{NoisyGradient, QuadraticProblem};

    fn quad_cfg() -> TripletConfig {
        TripletConfig {
            alpha: 1.0,
            gamma1: 10.0,
            gamma2: 0.01,
            cycle: 3,
            batch_size: 1,
            ..Default::default()
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let q = QuadraticProblem::new(vec![1.0, 3.0], Some(vec![1.0, -1.0])).unwrap();
        let noisy = NoisyGradient::new(q, 0.2, 4).unwrap();
        for v in Variant::ALL {
            let opts = RunOptions::iterations(200, 17);
            let a = run(&noisy, v, &quad_cfg(), &opts).unwrap();
            let b = run(&noisy, v, &quad_cfg(), &opts).unwrap();
            assert_eq!(a.log, b.log, "{v}");
            assert_eq!(a.x, b.x, "{v}");
        }
    }

    #[test]
    fn trish_is_always_constrained() {
        let q = QuadraticProblem::new(vec![1.0, 3.0], Some(vec![1.0, -1.0])).unwrap();
        let noisy = NoisyGradient::new(q, 0.2, 4).unwrap();
        let out = run(
            &noisy,
            Variant::Trish,
            &quad_cfg(),
            &RunOptions::iterations(100, 1),
        )
        .unwrap();
        assert!(out.log.iter().all(|l| l.kind == StepKind::Constrained));
        assert_eq!(out.bb_fraction(), 0.0);
    }

    #[test]
    fn noise_free_unconstrained_descent() {
        let q = QuadraticProblem::new(vec![0.5, 2.0, 4.0], Some(vec![1.0, 1.0, 1.0])).unwrap();
        let cfg = TripletConfig {
            alpha: 100.0,
            gamma1: 100.0,
            gamma2: 1e-3,
            mu0: 0.2,
            mu_max: 0.25,
            cycle: 1,
            batch_size: 1,
            ..Default::default()
        };
        let mut values = Vec::new();
        let out = run_with_observer(
            &q,
            Variant::V1,
            &cfg,
            &RunOptions::iterations(50, 0),
            |_, x| values.push(q.value(x)),
        )
        .unwrap();
        assert!(out.log.iter().all(|l| l.kind == StepKind::Unconstrained));
        for w in values.windows(2) {
            assert!(w[1] < w[0], "{} !< {}", w[1], w[0]);
        }
    }

    #[test]
    fn v1_raw_values_respect_spectrum() {
        let q = QuadraticProblem::new(vec![1.0, 10.0], None).unwrap();
        let cfg = TripletConfig {
            cycle: 1,
            batch_size: 1,
            ..quad_cfg()
        };
        let out = run(
            &q,
            Variant::V1,
            &cfg,
            &RunOptions {
                x0: Some(vec![3.0, -2.0]),
                ..RunOptions::iterations(30, 0)
            },
        )
        .unwrap();
        for l in out.log.iter().skip(1) {
            if l.mu < cfg.mu_max {
                assert!((0.1 - 1e-12..=1.0 + 1e-12).contains(&l.mu), "{}", l.mu);
            }
        }
        assert!(bb_raw(&[1.0, 1.0], &[1.0, 10.0]).is_some());
    }

    #[test]
    fn epoch_budget_and_snapshots() {
        let q = QuadraticProblem::new(vec![1.0, 2.0], None).unwrap();
        let cfg = quad_cfg();
        for v in Variant::ALL {
            let out = run(&q, v, &cfg, &RunOptions::epochs(5, 3)).unwrap();
            assert_eq!(out.snapshots.len(), 5, "{v}");
            assert!(out.gradient_evaluations >= 5);
            let expected_iters = if v == Variant::V1 { 4 } else { 5 };
            // with N = 1, b = 1 and m = 3, v1 spends extra evaluations at k = 0, 3
            assert_eq!(out.iterations, expected_iters, "{v}");
        }
    }

    #[test]
    fn non_finite_iterate_is_recorded() {
        let q = QuadraticProblem::new(vec![1.0], None).unwrap();
        let cfg = TripletConfig {
            mu0: 1e300,
            mu_max: f64::INFINITY,
            ..quad_cfg()
        };
        let out = run(
            &q,
            Variant::SgdBb,
            &cfg,
            &RunOptions {
                x0: Some(vec![1e10]),
                ..RunOptions::iterations(10, 0)
            },
        )
        .unwrap();
        assert!(out.failure.is_some());
    }

    #[test]
    fn mu_stays_clamped() {
        let q = QuadraticProblem::new(vec![1.0, 50.0], Some(vec![2.0, 0.0])).unwrap();
        let noisy = NoisyGradient::new(q, 1.0, 8).unwrap();
        let cfg = TripletConfig {
            mu_min: 1e-2,
            mu_max: 2.0,
            mu0: 1.0,
            cycle: 2,
            ..quad_cfg()
        };
        for v in [Variant::V1, Variant::V2, Variant::V3, Variant::SgdBb] {
            let out = run(&noisy, v, &cfg, &RunOptions::iterations(300, 5)).unwrap();
            for l in out.log.iter().skip(1) {
                assert!(l.mu >= cfg.mu_min && l.mu <= cfg.mu_max, "{v}: {}", l.mu);
            }
        }
    }
}
