//! TRishBB: a stochastic trust-region-ish iteration whose quadratic model uses
//! `H_k = μ_k⁻¹ I` with Barzilai–Borwein steplengths `μ_k`.
//!
//! Every step is along `−g_k`. The trust radius is a piecewise-linear function
//! of `‖g_k‖` (see [`tr_radius`]); the step is the unconstrained minimiser
//! `−μ_k g_k` when it fits strictly inside the radius and the boundary Cauchy
//! point otherwise. No objective values are evaluated.
//!
//! Variants differ only in how `μ_{k+1}` is formed:
//!
//! | variant | steplength update |
//! |---------|-------------------|
//! | [`Variant::Trish`] | none, `H_k = 0` (first-order TRish) |
//! | [`Variant::V1`] | BB pair from the last step, same batch at both points, every `m` iterations from `k = 0` |
//! | [`Variant::V2`] | moving-average gradients over cycles of `m` iterations, η-smoothed |
//! | [`Variant::V3`] | averaged iterates and an accumulated Fisher matrix over a FIFO of gradients |
//! | [`Variant::SgdBb`] | plain SGD step `−μ_k g_k` with the V2 update |

mod bb;
mod run;
mod step;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{ProblemError, SamplingStrategy};

pub use bb::{bb_raw, clamp_mu, CyclicBb, FisherBb, MovingAverageBb, V1Update};
pub use run::{
    run, run_with_observer, Budget, IterationLog, RunFailure, RunOptions, RunOutput, Snapshot,
};
pub use step::{tr_radius, tr_step, trish_step, StepCase, StepKind, StepOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Trish,
    V1,
    V2,
    V3,
    SgdBb,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Trish,
        Variant::V1,
        Variant::V2,
        Variant::V3,
        Variant::SgdBb,
    ];

    /// Mini-batch selection used in the reference experiments: independent
    /// draws (unbiased gradients) for TRish, V1 and V3; per-epoch shuffling
    /// (biased gradients) for V2 and SGD-BB.
    pub fn default_sampling(self) -> SamplingStrategy {
        match self {
            Variant::Trish | Variant::V1 | Variant::V3 => SamplingStrategy::Independent,
            Variant::V2 | Variant::SgdBb => SamplingStrategy::ShuffledEpoch,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Trish => "trish",
            Variant::V1 => "v1",
            Variant::V2 => "v2",
            Variant::V3 => "v3",
            Variant::SgdBb => "sgdbb",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trish" => Ok(Variant::Trish),
            "v1" | "trishbb_v1" => Ok(Variant::V1),
            "v2" | "trishbb_v2" => Ok(Variant::V2),
            "v3" | "trishbb_v3" => Ok(Variant::V3),
            "sgdbb" | "sgd-bb" => Ok(Variant::SgdBb),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

/// Hyper-parameters of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletConfig {
    pub alpha: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub mu_min: f64,
    /// May be `+∞` to disable the upper clamp.
    pub mu_max: f64,
    pub mu0: f64,
    /// Cycle length `m` of the steplength updates.
    pub cycle: usize,
    /// Smoothing weight η of V2/V3/SGD-BB.
    pub eta: f64,
    /// FIFO capacity `m_F` of V3.
    pub fifo_capacity: usize,
    pub batch_size: usize,
}

impl Default for TripletConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma1: 1.0,
            gamma2: 1.0,
            mu_min: 1e-5,
            mu_max: 1e5,
            mu0: 1.0,
            cycle: 20,
            eta: 0.9,
            fifo_capacity: 100,
            batch_size: 64,
        }
    }
}

impl TripletConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        let err = |m: String| Err(OptimError::Config(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return err(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.gamma2 > 0.0 && self.gamma2 <= self.gamma1 && self.gamma1.is_finite()) {
            return err(format!(
                "need 0 < gamma2 <= gamma1 < inf, got gamma1={} gamma2={}",
                self.gamma1, self.gamma2
            ));
        }
        if !(self.mu_min > 0.0 && self.mu_min < self.mu_max) {
            return err(format!(
                "need 0 < mu_min < mu_max, got mu_min={} mu_max={}",
                self.mu_min, self.mu_max
            ));
        }
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return err(format!("mu0 must be positive, got {}", self.mu0));
        }
        if self.cycle == 0 {
            return err("cycle length m must be >= 1".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return err(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if self.fifo_capacity == 0 {
            return err("fifo capacity must be >= 1".into());
        }
        if self.batch_size == 0 {
            return err("batch size must be >= 1".into());
        }
        Ok(())
    }

    /// `μ_min ≤ γ₂ α`, required by the biased-gradient analysis.
    pub fn assumption4_holds(&self) -> bool {
        self.mu_min <= self.gamma2 * self.alpha
    }
}
