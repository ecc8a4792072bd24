//! Barzilai–Borwein steplength updaters.

use std::collections::VecDeque;

use crate::vector::{axpy, dot, scale, sub};

use super::OptimError;

/// `sᵀs / sᵀy`, or `None` when `s = 0`, `sᵀy = 0` or the ratio overflows.
pub fn bb_raw(s: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(s.len(), y.len());
    let ss = dot(s, s);
    let sy = dot(s, y);
    if ss == 0.0 || sy == 0.0 {
        return None;
    }
    let r = ss / sy;
    r.is_finite().then_some(r)
}

/// `max{μ_min, min{|raw|, μ_max}}`. An undefined ratio is the `sᵀy → 0`
/// limit `|raw| → ∞`, hence `μ_max`.
pub fn clamp_mu(raw: Option<f64>, mu_min: f64, mu_max: f64) -> f64 {
    match raw {
        Some(r) => r.abs().min(mu_max).max(mu_min),
        None => mu_max,
    }
}

/// `(1/m)|sᵀs/sᵀy|`, with the degenerate pair mapped to `μ_max`.
fn scaled_ratio(s: &[f64], sy: f64, cycle: usize, mu_max: f64) -> f64 {
    let ss = dot(s, s);
    if ss == 0.0 || sy == 0.0 {
        return mu_max;
    }
    let r = (ss / sy).abs() / cycle as f64;
    if r.is_finite() {
        r
    } else {
        mu_max
    }
}

/// Result of a V1 update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V1Update {
    pub mu: f64,
    /// Ratio before clamping, when an update fired and was defined.
    pub raw: Option<f64>,
    /// Whether the gradient at `x_{k+1}` was evaluated.
    pub evaluated: bool,
}

/// V1: every `m` iterations starting at `k = 0`, the pair
/// `s = p_k`, `y = ∇f_{N_k}(x_{k+1}) − g_k` on the same batch.
#[derive(Debug, Clone)]
pub struct CyclicBb {
    cycle: usize,
    mu_min: f64,
    mu_max: f64,
}

impl CyclicBb {
    pub fn new(cycle: usize, mu_min: f64, mu_max: f64) -> Self {
        Self {
            cycle: cycle.max(1),
            mu_min,
            mu_max,
        }
    }

    pub fn fires(&self, k: u64) -> bool {
        k.is_multiple_of(self.cycle as u64)
    }

    /// `grad_at_next` is called only when the update fires and must evaluate the
    /// same batch as `g_k`.
    pub fn update<F>(
        &mut self,
        k: u64,
        mu_k: f64,
        step: &[f64],
        g_k: &[f64],
        grad_at_next: F,
    ) -> Result<V1Update, OptimError>
    where
        F: FnOnce() -> Result<Vec<f64>, OptimError>,
    {
        if !self.fires(k) {
            return Ok(V1Update {
                mu: mu_k,
                raw: None,
                evaluated: false,
            });
        }
        let g_next = grad_at_next()?;
        let y = sub(&g_next, g_k);
        let raw = bb_raw(step, &y);
        Ok(V1Update {
            mu: clamp_mu(raw, self.mu_min, self.mu_max),
            raw,
            evaluated: true,
        })
    }
}

/// V2 (and SGD-BB): moving-average gradient `ḡ ← βḡ + (1−β)g_k` with
/// `β = (m−1)/m`; every `m` iterations (never at `k = 0`) the pair
/// `s = x_{k+1} − x̄_old`, `y = ḡ − ḡ_old` gives `μ̂ = (1/m)|sᵀs/sᵀy|`, which
/// is η-smoothed into `μ̄` and clamped.
///
/// A cycle cut short by the end of the run is discarded.
#[derive(Debug, Clone)]
pub struct MovingAverageBb {
    cycle: usize,
    beta: f64,
    eta: f64,
    mu_min: f64,
    mu_max: f64,
    g_bar: Vec<f64>,
    g_bar_old: Vec<f64>,
    x_bar_old: Vec<f64>,
    mu_bar: f64,
}

impl MovingAverageBb {
    pub fn new(x0: &[f64], mu0: f64, cycle: usize, eta: f64, mu_min: f64, mu_max: f64) -> Self {
        let cycle = cycle.max(1);
        Self {
            cycle,
            beta: (cycle - 1) as f64 / cycle as f64,
            eta,
            mu_min,
            mu_max,
            g_bar: vec![0.0; x0.len()],
            g_bar_old: vec![0.0; x0.len()],
            x_bar_old: x0.to_vec(),
            mu_bar: mu0,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn g_bar(&self) -> &[f64] {
        &self.g_bar
    }

    pub fn mu_bar(&self) -> f64 {
        self.mu_bar
    }

    /// Steps the accumulator and returns `(μ_{k+1}, μ̂_k if an update fired)`.
    pub fn update(&mut self, k: u64, mu_k: f64, x_next: &[f64], g_k: &[f64]) -> (f64, Option<f64>) {
        scale(self.beta, &mut self.g_bar);
        axpy(1.0 - self.beta, g_k, &mut self.g_bar);
        if k == 0 || !k.is_multiple_of(self.cycle as u64) {
            return (mu_k, None);
        }
        let s = sub(x_next, &self.x_bar_old);
        let y = sub(&self.g_bar, &self.g_bar_old);
        let mu_hat = scaled_ratio(&s, dot(&s, &y), self.cycle, self.mu_max);
        self.mu_bar = self.eta * self.mu_bar + (1.0 - self.eta) * mu_hat;
        let mu = self.mu_bar.min(self.mu_max).max(self.mu_min);
        self.x_bar_old.copy_from_slice(x_next);
        std::mem::swap(&mut self.g_bar_old, &mut self.g_bar);
        self.g_bar.iter_mut().for_each(|v| *v = 0.0);
        (mu, Some(mu_hat))
    }
}

/// V3: averaged iterates and an accumulated Fisher curvature vector.
///
/// Each iteration adds `x_k` to `x_avg` and pushes `g_k` into a FIFO of at
/// most `m_F` columns `F`. Every `m` iterations `x̄ = x_avg/m` (and
/// `x_avg ← 0`); from the second such iteration on, `s = x̄ − x̄_old`,
/// `y = (1/|F|) F(Fᵀs)` and μ is updated exactly as in V2. `x̄_old` starts
/// at zero.
#[derive(Debug, Clone)]
pub struct FisherBb {
    cycle: usize,
    capacity: usize,
    eta: f64,
    mu_min: f64,
    mu_max: f64,
    fifo: VecDeque<Vec<f64>>,
    x_avg: Vec<f64>,
    x_bar_old: Vec<f64>,
    mu_bar: f64,
}

impl FisherBb {
    pub fn new(
        dim: usize,
        mu0: f64,
        cycle: usize,
        capacity: usize,
        eta: f64,
        mu_min: f64,
        mu_max: f64,
    ) -> Self {
        Self {
            cycle: cycle.max(1),
            capacity: capacity.max(1),
            eta,
            mu_min,
            mu_max,
            fifo: VecDeque::with_capacity(capacity.max(1)),
            x_avg: vec![0.0; dim],
            x_bar_old: vec![0.0; dim],
            mu_bar: mu0,
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.fifo.iter().map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fifo.is_empty()
    }

    pub fn push_gradient(&mut self, g: &[f64]) {
        if self.fifo.len() == self.capacity {
            let mut recycled = self.fifo.pop_front().expect("full fifo");
            recycled.copy_from_slice(g);
            self.fifo.push_back(recycled);
        } else {
            self.fifo.push_back(g.to_vec());
        }
    }

    /// `y = (1/|F|) Σ_c c (cᵀs)`; returns `(y, sᵀy)`.
    pub fn curvature(&self, s: &[f64]) -> (Vec<f64>, f64) {
        let mut y = vec![0.0; s.len()];
        if self.fifo.is_empty() {
            return (y, 0.0);
        }
        for c in &self.fifo {
            axpy(dot(c, s), c, &mut y);
        }
        scale(1.0 / self.fifo.len() as f64, &mut y);
        let sy = dot(s, &y);
        (y, sy)
    }

    /// Steps the accumulators with `(x_k, g_k)` and returns
    /// `(μ_{k+1}, μ̂_k if an update fired)`.
    pub fn update(&mut self, k: u64, mu_k: f64, x_k: &[f64], g_k: &[f64]) -> (f64, Option<f64>) {
        axpy(1.0, x_k, &mut self.x_avg);
        self.push_gradient(g_k);
        if !k.is_multiple_of(self.cycle as u64) {
            return (mu_k, None);
        }
        let mut x_bar = std::mem::replace(&mut self.x_avg, vec![0.0; x_k.len()]);
        scale(1.0 / self.cycle as f64, &mut x_bar);
        let mut result = (mu_k, None);
        if k > 0 {
            let s = sub(&x_bar, &self.x_bar_old);
            let (_, sy) = self.curvature(&s);
            let mu_hat = scaled_ratio(&s, sy, self.cycle, self.mu_max);
            self.mu_bar = self.eta * self.mu_bar + (1.0 - self.eta) * mu_hat;
            result = (self.mu_bar.min(self.mu_max).max(self.mu_min), Some(mu_hat));
        }
        self.x_bar_old = x_bar;
        result
    }
}
