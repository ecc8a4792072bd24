//! Convergence constants, admissibility conditions and asymptotic limits for
//! TRishBB, plus Monte-Carlo checks of those limits on noisy quadratics.

mod monte_carlo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimizer::{OptimError, TripletConfig};
use crate::problem::QuadraticProblem;

pub use monte_carlo::{monte_carlo_check, MonteCarloConfig, MonteCarloResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("mu_min <= gamma2 * alpha violated: mu_min = {mu_min}, gamma2 * alpha = {bound}")]
    Assumption4 { mu_min: f64, bound: f64 },
    #[error("theta1 = {0} is not positive; the biased-gradient limit is undefined")]
    ThetaNonPositive(f64),
    #[error("configuration is not admissible for {regime}: {reason}")]
    NotAdmissible { regime: Regime, reason: String },
    #[error("invalid assumption constants: {0}")]
    Constants(String),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    BiasedPl,
    BiasedNonconvex,
    UnbiasedPl,
    UnbiasedNonconvex,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::BiasedPl,
        Regime::BiasedNonconvex,
        Regime::UnbiasedPl,
        Regime::UnbiasedNonconvex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::BiasedPl => "biased-pl",
            Regime::BiasedNonconvex => "biased-nonconvex",
            Regime::UnbiasedPl => "unbiased-pl",
            Regime::UnbiasedNonconvex => "unbiased-nonconvex",
        }
    }

    pub fn is_pl(self) -> bool {
        matches!(self, Regime::BiasedPl | Regime::UnbiasedPl)
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown regime {s:?}"))
    }
}

/// Problem and oracle constants the bounds depend on.
///
/// `l` is the smoothness constant, `c` the PL constant, `(omega, m1, m2)` the
/// biased-gradient constants in
/// `∇fᵀE[g] ≥ ω‖∇f‖²`, `E‖g‖² ≤ M₁ + M₂‖∇f‖²`, and `m_g` the variance bound
/// of an unbiased oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConstants {
    pub l: f64,
    pub c: f64,
    pub omega: f64,
    pub m1: f64,
    pub m2: f64,
    pub m_g: f64,
    pub f_star: f64,
}

impl AssumptionConstants {
    /// An unbiased oracle with variance bound `m_g` satisfies the biased
    /// assumption with `ω = 1`, `M₁ = M_g`, `M₂ = 1`.
    pub fn unbiased(l: f64, c: f64, m_g: f64, f_star: f64) -> Self {
        Self {
            l,
            c,
            omega: 1.0,
            m1: m_g,
            m2: 1.0,
            m_g,
            f_star,
        }
    }

    /// Exact constants for a diagonal quadratic with per-coordinate noise `σ`.
    pub fn for_quadratic(q: &QuadraticProblem, sigma: f64) -> Self {
        let m_g = q.diag().len() as f64 * sigma * sigma;
        Self::unbiased(q.lambda_max(), q.lambda_min(), m_g, q.min_value())
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(finite_pos(self.l) && finite_pos(self.c) && finite_pos(self.omega)) {
            return Err(TheoryError::Constants(
                "L, c and omega must be positive".into(),
            ));
        }
        if !(finite_nonneg(self.m1) && finite_nonneg(self.m2) && finite_nonneg(self.m_g)) {
            return Err(TheoryError::Constants(
                "M1, M2 and M_g must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Derived constants for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub h1: f64,
    pub h2: f64,
    pub rho: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    /// `γ₁/γ₂ < ρh₂/(h₂ − ω/2)`, vacuously true when `h₂ ≤ ω/2`.
    pub gamma_ratio_ok: bool,
    /// `μ_min ≤ γ₂α ≤ γ₁α`, so that `θ₂ ≥ 0`.
    pub mu_chain_ok: bool,
}

pub fn theta3(cfg: &TripletConfig) -> f64 {
    cfg.gamma1 * cfg.gamma1 / cfg.gamma2 - cfg.gamma2 / 16.0
}

pub fn constants(cfg: &TripletConfig, a: &AssumptionConstants) -> Result<BoundReport, TheoryError> {
    a.validate()?;
    if !cfg.assumption4_holds() {
        return Err(TheoryError::Assumption4 {
            mu_min: cfg.mu_min,
            bound: cfg.gamma2 * cfg.alpha,
        });
    }
    let (alpha, g1, g2) = (cfg.alpha, cfg.gamma1, cfg.gamma2);
    let h1 = 0.5 * a.m1.sqrt();
    let h2 = h1 + a.m2.sqrt();
    let rho = cfg.mu_min / (alpha * g2);
    let theta1 = 0.5 * a.omega * g1 - h2 * (g1 - rho * g2);
    let theta2 = h1 * (g1 * alpha - cfg.mu_min) + 0.5 * g1 * g1 * a.l * a.m1 * alpha * alpha;
    let excess = h2 - 0.5 * a.omega;
    let gamma_ratio_ok = excess <= 0.0 || g1 / g2 < rho * h2 / excess;
    Ok(BoundReport {
        h1,
        h2,
        rho,
        theta1,
        theta2,
        theta3: theta3(cfg),
        gamma_ratio_ok,
        mu_chain_ok: cfg.mu_min <= g2 * alpha && g2 * alpha <= g1 * alpha,
    })
}

/// Step-size conditions of one regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub regime: Regime,
    /// Upper bound on α.
    pub alpha_max: f64,
    /// Whether the bound on α is strict.
    pub alpha_strict: bool,
    /// Lower bound on `μ_min`, unbiased regimes only.
    pub mu_min_lower: Option<f64>,
    pub passed: bool,
    /// Failed conditions, empty when `passed`.
    pub reasons: Vec<String>,
}

pub fn admissible_alpha(
    regime: Regime,
    cfg: &TripletConfig,
    a: &AssumptionConstants,
) -> Result<Admissibility, TheoryError> {
    let report = constants(cfg, a)?;
    let alpha = cfg.alpha;
    let mut reasons = Vec::new();
    if !(alpha > 0.0) {
        reasons.push(format!("alpha = {alpha} is not positive"));
    }
    let (alpha_max, alpha_strict, mu_min_lower) = match regime {
        Regime::BiasedPl | Regime::BiasedNonconvex => {
            if !report.gamma_ratio_ok {
                reasons.push("gamma1/gamma2 ratio condition fails".into());
            }
            if report.theta1 <= 0.0 {
                reasons.push(format!("theta1 = {} is not positive", report.theta1));
            }
            let mut bound = a.omega / (cfg.gamma1 * a.l * a.m2);
            if regime == Regime::BiasedPl && report.theta1 > 0.0 {
                bound = bound.min(1.0 / (2.0 * a.c * report.theta1));
            }
            (bound, false, None)
        }
        Regime::UnbiasedPl | Regime::UnbiasedNonconvex => {
            let mut bound = cfg.gamma2 / (8.0 * cfg.gamma1 * cfg.gamma1 * a.l);
            let mut strict = false;
            if regime == Regime::UnbiasedPl {
                // PL also needs α < 8/(γ₂c); both bounds are strict
                bound = bound.min(8.0 / (cfg.gamma2 * a.c));
                strict = true;
            }
            (bound, strict, Some(0.8 * cfg.gamma1 * alpha))
        }
    };
    let alpha_ok = if alpha_strict {
        alpha < alpha_max
    } else {
        alpha <= alpha_max
    };
    if !alpha_ok {
        reasons.push(format!(
            "alpha = {alpha} exceeds {}{alpha_max}",
            if alpha_strict { "(strict) " } else { "" }
        ));
    }
    if let Some(lower) = mu_min_lower {
        if cfg.mu_min < lower {
            reasons.push(format!(
                "mu_min = {} is below 4 gamma1 alpha / 5 = {lower}",
                cfg.mu_min
            ));
        }
    }
    Ok(Admissibility {
        regime,
        alpha_max,
        alpha_strict,
        mu_min_lower,
        passed: reasons.is_empty(),
        reasons,
    })
}

/// Asymptotic constant of the regime: an optimality-gap limit for
/// the PL regimes and an averaged squared-gradient limit otherwise.
pub fn limit(
    regime: Regime,
    cfg: &TripletConfig,
    a: &AssumptionConstants,
    report: &BoundReport,
) -> Result<f64, TheoryError> {
    match regime {
        Regime::BiasedPl | Regime::BiasedNonconvex => {
            if report.theta1 <= 0.0 {
                return Err(TheoryError::ThetaNonPositive(report.theta1));
            }
            let denom = cfg.alpha * report.theta1;
            Ok(if regime == Regime::BiasedPl {
                report.theta2 / (2.0 * a.c * denom)
            } else {
                report.theta2 / denom
            })
        }
        Regime::UnbiasedPl => Ok(8.0 * report.theta3 * a.m_g / (cfg.gamma2 * a.c)),
        Regime::UnbiasedNonconvex => {
            let r = cfg.gamma1 / cfg.gamma2;
            Ok((16.0 * r * r - 1.0) * a.m_g)
        }
    }
}

/// An admissible configuration for `regime` with `γ₁ = γ₂ = 1`: α at 90% of
/// its bound and `μ_min` inside the admissible window.
pub fn reference_config(regime: Regime, a: &AssumptionConstants) -> TripletConfig {
    let base = TripletConfig {
        gamma1: 1.0,
        gamma2: 1.0,
        batch_size: 1,
        cycle: 5,
        ..Default::default()
    };
    match regime {
        Regime::UnbiasedPl | Regime::UnbiasedNonconvex => {
            let mut bound = 1.0 / (8.0 * a.l);
            if regime == Regime::UnbiasedPl {
                bound = bound.min(8.0 / a.c);
            }
            let alpha = 0.9 * bound;
            TripletConfig {
                alpha,
                mu_min: 0.9 * alpha,
                ..base
            }
        }
        Regime::BiasedPl | Regime::BiasedNonconvex => {
            // ρ = 1 makes θ₁ = ω/2
            let mut bound = a.omega / (a.l * a.m2.max(f64::MIN_POSITIVE));
            if regime == Regime::BiasedPl {
                bound = bound.min(1.0 / (a.c * a.omega));
            }
            let alpha = 0.9 * bound;
            TripletConfig {
                alpha,
                mu_min: alpha,
                ..base
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(alpha: f64, gamma1: f64, gamma2: f64, mu_min: f64) -> TripletConfig {
        TripletConfig {
            alpha,
            gamma1,
            gamma2,
            mu_min,
            ..Default::default()
        }
    }

    fn consts(omega: f64, m1: f64, m2: f64) -> AssumptionConstants {
        AssumptionConstants {
            l: 1.0,
            c: 1.0,
            omega,
            m1,
            m2,
            m_g: m1,
            f_star: 0.0,
        }
    }

    #[test]
    fn h_constants() {
        let r = constants(&cfg(1.0, 1.0, 1.0, 0.5), &consts(1.0, 4.0, 9.0)).unwrap();
        assert_eq!(r.h1, 1.0);
        assert_eq!(r.h2, 4.0);
        assert_eq!(r.rho, 0.5);
    }

    #[test]
    fn theta1_when_gammas_equal_and_rho_one() {
        for m2 in [0.0, 1.0, 25.0] {
            let r = constants(&cfg(0.5, 3.0, 3.0, 1.5), &consts(1.0, 2.0, m2)).unwrap();
            assert_relative_eq!(r.rho, 1.0);
            assert_relative_eq!(r.theta1, 1.5, max_relative = 1e-15);
        }
    }

    #[test]
    fn theta3_equal_gammas() {
        let c = cfg(1.0, 2.0, 2.0, 1e-5);
        assert_relative_eq!(theta3(&c), 15.0 / 16.0 * 2.0);
    }

    #[test]
    fn assumption4_violation_is_an_error() {
        let err = constants(&cfg(0.1, 1.0, 1.0, 0.2), &consts(1.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, TheoryError::Assumption4 { .. }));
        assert!(err.to_string().contains("mu_min <= gamma2 * alpha"));
    }

    #[test]
    fn unbiased_bounds_substitution() {
        let a = AssumptionConstants::unbiased(1.0, 1.0, 0.0, 0.0);
        let c = cfg(0.125, 1.0, 1.0, 0.1);
        let adm = admissible_alpha(Regime::UnbiasedNonconvex, &c, &a).unwrap();
        assert_eq!(adm.alpha_max, 0.125);
        assert_relative_eq!(adm.mu_min_lower.unwrap(), 0.1);
        assert!(adm.passed, "{:?}", adm.reasons);
        let c = cfg(0.125, 1.0, 1.0, 0.09);
        assert!(
            !admissible_alpha(Regime::UnbiasedNonconvex, &c, &a)
                .unwrap()
                .passed
        );
    }

    #[test]
    fn biased_nonconvex_bound_substitution() {
        let a = consts(1.0, 0.0, 1.0);
        let c = cfg(1.0, 1.0, 1.0, 1.0);
        let adm = admissible_alpha(Regime::BiasedNonconvex, &c, &a).unwrap();
        assert_eq!(adm.alpha_max, 1.0);
        assert!(adm.passed, "{:?}", adm.reasons);
    }

    #[test]
    fn zero_alpha_is_not_admissible() {
        let a = AssumptionConstants::unbiased(1.0, 1.0, 0.0, 0.0);
        let c = TripletConfig {
            alpha: 0.0,
            gamma1: 1.0,
            gamma2: 1.0,
            mu_min: 0.0,
            ..Default::default()
        };
        let adm = admissible_alpha(Regime::UnbiasedNonconvex, &c, &a).unwrap();
        assert!(!adm.passed);
    }

    #[test]
    fn limits_by_substitution() {
        let a = AssumptionConstants::unbiased(1.0, 1.0, 0.3, 0.0);
        let c = cfg(0.1, 2.0, 2.0, 0.2);
        let r = constants(&c, &a).unwrap();
        assert_relative_eq!(
            limit(Regime::UnbiasedNonconvex, &c, &a, &r).unwrap(),
            15.0 * 0.3,
            max_relative = 1e-15
        );

        let a0 = AssumptionConstants::unbiased(1.0, 1.0, 0.0, 0.0);
        let c1 = cfg(0.1, 1.0, 1.0, 0.1);
        let r = constants(&c1, &a0).unwrap();
        assert_eq!(limit(Regime::UnbiasedPl, &c1, &a0, &r).unwrap(), 0.0);
        // M₁ = 0 and μ_min = γ₁α: both θ₂ terms vanish
        let r = constants(&c1, &a0).unwrap();
        assert_eq!(r.theta2, 0.0);
        assert_eq!(limit(Regime::BiasedPl, &c1, &a0, &r).unwrap(), 0.0);
    }

    #[test]
    fn biased_limit_needs_positive_theta1() {
        // ω small and h₂ large with ρ small drive θ₁ negative
        let a = consts(0.01, 4.0, 4.0);
        let c = cfg(1.0, 4.0, 1.0, 0.01);
        let r = constants(&c, &a).unwrap();
        assert!(r.theta1 < 0.0);
        assert!(!r.gamma_ratio_ok);
        assert!(matches!(
            limit(Regime::BiasedPl, &c, &a, &r),
            Err(TheoryError::ThetaNonPositive(_))
        ));
    }

    #[test]
    fn noise_scaling_is_quadratic() {
        let q = QuadraticProblem::new(vec![1.0, 2.0], None).unwrap();
        let c = cfg(0.05, 1.0, 1.0, 0.05);
        let a1 = AssumptionConstants::for_quadratic(&q, 0.1);
        let a2 = AssumptionConstants::for_quadratic(&q, 0.2);
        assert_relative_eq!(a1.m_g, 0.02, max_relative = 1e-15);
        assert_relative_eq!(a2.m_g, 4.0 * a1.m_g, max_relative = 1e-15);
        let l1 = limit(
            Regime::UnbiasedNonconvex,
            &c,
            &a1,
            &constants(&c, &a1).unwrap(),
        )
        .unwrap();
        let l2 = limit(
            Regime::UnbiasedNonconvex,
            &c,
            &a2,
            &constants(&c, &a2).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(l2, 4.0 * l1, max_relative = 1e-14);
    }

    fn grid() -> impl Iterator<Item = (TripletConfig, AssumptionConstants)> {
        let alphas = [0.01, 0.1, 1.0, 3.0];
        let g1s = [0.5, 1.0, 2.0, 8.0];
        let ratios = [1.0, 0.75, 0.5, 0.1];
        let rhos = [0.05, 0.3, 0.7, 1.0];
        let omegas = [0.1, 0.5, 1.0, 2.0];
        let ms = [0.0, 0.04, 0.25, 1.0, 4.0];
        let mut out = Vec::new();
        for &alpha in &alphas {
            for &g1 in &g1s {
                for &r in &ratios {
                    for &rho in &rhos {
                        for &omega in &omegas {
                            for &m1 in &ms {
                                for &m2 in &ms {
                                    let g2 = g1 * r;
                                    let c = cfg(alpha, g1, g2, rho * alpha * g2);
                                    out.push((c, consts(omega, m1, m2)));
                                }
                            }
                        }
                    }
                }
            }
        }
        out.into_iter()
    }

    #[test]
    fn theta1_positive_when_h2_small() {
        let mut checked = 0;
        for (c, a) in grid() {
            let r = constants(&c, &a).unwrap();
            if r.h2 <= 0.5 * a.omega {
                assert!(r.theta1 > 0.0, "{c:?} {a:?} {r:?}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn theta1_positive_under_ratio_condition() {
        let mut checked = 0;
        for (c, a) in grid() {
            let r = constants(&c, &a).unwrap();
            if r.h2 > 0.5 * a.omega && r.gamma_ratio_ok {
                assert!(r.theta1 > 0.0, "{c:?} {a:?} {r:?}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn limits_nonincreasing_in_mu_min() {
        for (c, a) in grid() {
            let hi = TripletConfig {
                mu_min: c.mu_min * 0.999,
                ..c.clone()
            };
            let (r0, r1) = (constants(&hi, &a).unwrap(), constants(&c, &a).unwrap());
            assert!(r1.theta2 <= r0.theta2 + 1e-15 * r0.theta2.abs());
            for regime in Regime::ALL {
                let l0 = limit(regime, &hi, &a, &r0);
                let l1 = limit(regime, &c, &a, &r1);
                if let (Ok(l0), Ok(l1)) = (l0, l1) {
                    assert!(l1 <= l0 * (1.0 + 1e-12) + 1e-300, "{regime}: {l1} > {l0}");
                }
            }
        }
    }

    #[test]
    fn unbiased_nonconvex_limit_sign() {
        for (c, a) in grid() {
            let r = constants(&c, &a).unwrap();
            let l = limit(Regime::UnbiasedNonconvex, &c, &a, &r).unwrap();
            assert!(l >= 0.0);
        }
        // the sign flips once γ₁ < γ₂/4
        let c = TripletConfig {
            gamma1: 0.2,
            gamma2: 1.0,
            mu_min: 1e-6,
            ..Default::default()
        };
        assert!(c.gamma1 < c.gamma2 / 4.0);
        let a = AssumptionConstants::unbiased(1.0, 1.0, 1.0, 0.0);
        let r = BoundReport {
            theta3: theta3(&c),
            ..constants(&TripletConfig::default(), &a).unwrap()
        };
        assert!(limit(Regime::UnbiasedNonconvex, &c, &a, &r).unwrap() < 0.0);
    }

    #[test]
    fn reference_configs_are_admissible() {
        let q = QuadraticProblem::new(vec![1.0, 2.0], None).unwrap();
        for sigma in [0.0, 0.1, 1.0] {
            let a = AssumptionConstants::for_quadratic(&q, sigma);
            for regime in Regime::ALL {
                let c = reference_config(regime, &a);
                let adm = admissible_alpha(regime, &c, &a).unwrap();
                assert!(adm.passed, "{regime} sigma={sigma}: {:?}", adm.reasons);
            }
        }
    }

    #[test]
    fn regime_names_round_trip() {
        for r in Regime::ALL {
            assert_eq!(r.name().parse::<Regime>().unwrap(), r);
        }
    }
}
