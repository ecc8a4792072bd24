use serde::{Deserialize, Serialize};

use crate::vector::{all_finite, norm};

use super::{OptimError, TripletConfig};

/// Which interval `‖g‖` falls in: `[0, 1/γ₁)`, `[1/γ₁, 1/γ₂]` or `(1/γ₂, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepCase {
    One,
    Two,
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepKind {
    /// `p = −μg`, strictly inside the trust region.
    Unconstrained,
    /// `p = −(Δ/‖g‖)g`, on the boundary.
    Constrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub step: Vec<f64>,
    pub case: StepCase,
    pub kind: StepKind,
    pub radius: f64,
}

/// Trust radius and case for a gradient norm.
pub fn tr_radius(g_norm: f64, cfg: &TripletConfig) -> (f64, StepCase) {
    if g_norm < 1.0 / cfg.gamma1 {
        (cfg.alpha * cfg.gamma1 * g_norm, StepCase::One)
    } else if g_norm <= 1.0 / cfg.gamma2 {
        (cfg.alpha, StepCase::Two)
    } else {
        (cfg.alpha * cfg.gamma2 * g_norm, StepCase::Three)
    }
}

/// Boundary step `−(Δ/‖g‖)g`, written per case so that the case-1 and case-3
/// scalings are exact multiples of `g`.
fn boundary_step(g: &[f64], g_norm: f64, case: StepCase, cfg: &TripletConfig) -> Vec<f64> {
    let factor = match case {
        StepCase::One => cfg.alpha * cfg.gamma1,
        StepCase::Two => cfg.alpha / g_norm,
        StepCase::Three => cfg.alpha * cfg.gamma2,
    };
    g.iter().map(|v| -factor * v).collect()
}

/// Solution of `min gᵀp + ‖p‖²/(2μ)` subject to `‖p‖ ≤ Δ(‖g‖)`.
pub fn tr_step(g: &[f64], mu: f64, cfg: &TripletConfig) -> Result<StepOutcome, OptimError> {
    if !all_finite(g) {
        return Err(OptimError::NonFiniteGradient);
    }
    let g_norm = norm(g);
    let (radius, case) = tr_radius(g_norm, cfg);
    if g_norm == 0.0 {
        return Ok(StepOutcome {
            step: vec![0.0; g.len()],
            case,
            kind: StepKind::Constrained,
            radius,
        });
    }
    // Ties μ‖g‖ = Δ go to the boundary; both formulas agree there.
    if mu * g_norm < radius {
        Ok(StepOutcome {
            step: g.iter().map(|v| -mu * v).collect(),
            case,
            kind: StepKind::Unconstrained,
            radius,
        })
    } else {
        Ok(StepOutcome {
            step: boundary_step(g, g_norm, case, cfg),
            case,
            kind: StepKind::Constrained,
            radius,
        })
    }
}

/// First-order TRish step (`H_k = 0`): always the boundary step.
pub fn trish_step(g: &[f64], cfg: &TripletConfig) -> StepOutcome {
    let g_norm = norm(g);
    let (radius, case) = tr_radius(g_norm, cfg);
    let step = if g_norm == 0.0 {
        vec![0.0; g.len()]
    } else {
        boundary_step(g, g_norm, case, cfg)
    };
    StepOutcome {
        step,
        case,
        kind: StepKind::Constrained,
        radius,
    }
}
