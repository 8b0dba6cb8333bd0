//! Log-sum-exp penalized objective over the constraint image.
//!
//! The relaxations only constrain `diag(X)` and the entries `X_ij` on the
//! edge set, so both the linear cost and the penalty depend on `X` solely
//! through the constraint image `v = B(X)`. The objective is treated as a
//! function of `v`; its gradient lifts back to a sparse symmetric matrix
//! supported on the diagonal and the edges.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cost::CostOperator;
use crate::error::{Error, Result};
use crate::linalg::SymmetricOperator;

/// `B(X)`: the diagonal of `X` and its entries on the tracked edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintImage {
    pub diag: Vec<f64>,
    pub edges: Vec<f64>,
}

impl ConstraintImage {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            edges: vec![0.0; m],
        }
    }

    /// `B(I)`.
    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            diag: vec![1.0; n],
            edges: vec![0.0; m],
        }
    }

    /// `B(α·h hᵀ)`.
    pub fn rank_one(h: &[f64], alpha: f64, pairs: &[(usize, usize)]) -> Self {
        Self {
            diag: h.iter().map(|x| alpha * x * x).collect(),
            edges: pairs.iter().map(|&(i, j)| alpha * h[i] * h[j]).collect(),
        }
    }

    pub fn from_dense(x: &DMatrix<f64>, pairs: &[(usize, usize)]) -> Self {
        Self {
            diag: (0..x.nrows()).map(|i| x[(i, i)]).collect(),
            edges: pairs.iter().map(|&(i, j)| x[(i, j)]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn words(&self) -> usize {
        self.diag.len() + self.edges.len()
    }

    /// `self ← (1−γ)·self + γ·q`
    pub fn blend(&mut self, q: &ConstraintImage, gamma: f64) {
        for (a, b) in self.diag.iter_mut().zip(&q.diag) {
            *a = (1.0 - gamma) * *a + gamma * b;
        }
        for (a, b) in self.edges.iter_mut().zip(&q.edges) {
            *a = (1.0 - gamma) * *a + gamma * b;
        }
    }

    pub fn max_abs_diff(&self, other: &ConstraintImage) -> f64 {
        self.diag
            .iter()
            .zip(&other.diag)
            .chain(self.edges.iter().zip(&other.edges))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max{‖diag − 1‖_∞, max(0, max_e violation_e)}`.
    pub fn infeasibility(&self, cfg: &PenaltyConfig) -> f64 {
        let (u, w) = residuals(self, cfg);
        let du = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let dw = w.iter().fold(0.0f64, |a, &x| a.max(x));
        du.max(dw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProblemKind {
    MaxKCut { k: usize },
    MaxAgree,
}

impl ProblemKind {
    /// Lower bound imposed on tracked edge entries.
    pub fn edge_lower_bound(&self) -> f64 {
        match *self {
            ProblemKind::MaxKCut { k } => -1.0 / (k as f64 - 1.0),
            ProblemKind::MaxAgree => 0.0,
        }
    }
}

/// Parameters of the penalized problem
/// `max ⟨C, X⟩ − β·φ_M(residuals)` over `{X ⪰ 0, Tr X ≤ α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub kind: ProblemKind,
    pub beta: f64,
    /// Sharpness `M` of the log-sum-exp.
    pub sharpness: f64,
    /// Trace bound `α`; always `n`.
    pub alpha: f64,
    pub eps: f64,
    /// LMO accuracy parameter `η ∈ (0, 1)`.
    pub eta: f64,
    /// `Tr(C)` for Max-k-Cut, `Δ` for Max-Agree. Optimality and the stopping
    /// gap are measured in units of `eps * gap_scale`.
    pub gap_scale: f64,
    pub n: usize,
    pub num_edges: usize,
}

pub const DEFAULT_ETA: f64 = 0.5;

impl PenaltyConfig {
    /// `β = 6 Tr(C)`, `M = 6 log(2n + |E|)/ε`.
    pub fn max_k_cut(cost: &CostOperator, k: usize, eps: f64, eta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidConfig(format!(
                "k must be at least 2, got {k}"
            )));
        }
        Self::validate(eps, eta)?;
        let (n, m) = (cost.n(), cost.num_pairs());
        let trace = cost.trace();
        Ok(Self {
            kind: ProblemKind::MaxKCut { k },
            beta: 6.0 * trace,
            sharpness: 6.0 * log_count(n, m) / eps,
            alpha: n as f64,
            eps,
            eta,
            gap_scale: trace,
            n,
            num_edges: m,
        })
    }

    /// `β = 4Δ`, `M = 4 log(2n + |E|)/ε`.
    pub fn max_agree(cost: &CostOperator, delta: f64, eps: f64, eta: f64) -> Result<Self> {
        Self::validate(eps, eta)?;
        let (n, m) = (cost.n(), cost.num_pairs());
        Ok(Self {
            kind: ProblemKind::MaxAgree,
            beta: 4.0 * delta,
            sharpness: 4.0 * log_count(n, m) / eps,
            alpha: n as f64,
            eps,
            eta,
            gap_scale: delta,
            n,
            num_edges: m,
        })
    }

    fn validate(eps: f64, eta: f64) -> Result<()> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eps must lie in (0, 1), got {eps}"
            )));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must lie in (0, 1), got {eta}"
            )));
        }
        Ok(())
    }

    /// Target for the surrogate gap: `ε · gap_scale`.
    pub fn gap_tolerance(&self) -> f64 {
        self.eps * self.gap_scale
    }

    /// Curvature bound `C_g^u = β M n²`.
    pub fn curvature_bound(&self) -> f64 {
        self.beta * self.sharpness * (self.n as f64).powi(2)
    }

    /// Iteration cap `⌈2 C_g^u (1+η) / (ε · gap_scale)⌉ − 2` from the
    /// Frank–Wolfe rate `2 C_g^u (1+η)/(t+2)`.
    pub fn iteration_bound(&self) -> f64 {
        if self.gap_scale <= 0.0 {
            return 0.0;
        }
        (2.0 * self.curvature_bound() * (1.0 + self.eta) / self.gap_tolerance()).ceil() - 2.0
    }

    /// Closed-form outer iteration count `c·log(2n+|E|)·n²/ε²` with
    /// `c = 144` (Max-k-Cut) or `c = 64` (Max-Agree). Coincides with
    /// [`iteration_bound`](Self::iteration_bound) at `η = 1`.
    pub fn closed_form_iteration_bound(&self) -> f64 {
        let c = match self.kind {
            ProblemKind::MaxKCut { .. } => 144.0,
            ProblemKind::MaxAgree => 64.0,
        };
        c * log_count(self.n, self.num_edges) * (self.n as f64).powi(2) / (self.eps * self.eps)
    }

    /// LMO failure probability `ε / T(n, ε)`, capped at 1/2.
    pub fn default_failure_prob(&self) -> f64 {
        (self.eps / self.closed_form_iteration_bound()).min(0.5)
    }

    /// `‖∇g‖ ≤ gap_scale + β √(2|E| + n)`.
    pub fn gradient_norm_bound(&self) -> f64 {
        self.gap_scale + self.beta * ((2 * self.num_edges + self.n) as f64).sqrt()
    }

    /// Upper bound `N^u` on Lanczos iterations over the whole run.
    pub fn lanczos_iteration_bound(&self, fail_prob: f64) -> f64 {
        let n = self.n.max(1) as f64;
        let log_term = (n / (fail_prob * fail_prob)).ln();
        if self.gap_scale <= 0.0 {
            return f64::INFINITY;
        }
        let inv_rho = self.alpha * self.gradient_norm_bound() * (1.0 + self.eta)
            / (4.0 * self.eta * self.gap_tolerance());
        0.5 + inv_rho.sqrt() * log_term
    }

    /// Lanczos accuracy `ρ` for an LMO error budget `δ`, from
    /// `δ = α (ρ/8) ‖∇g‖`, clamped to `(0, 1]`.
    pub fn lanczos_rho(&self, delta: f64) -> f64 {
        let denom = self.alpha * self.gradient_norm_bound();
        if denom <= 0.0 {
            return 1.0;
        }
        (8.0 * delta / denom).clamp(f64::MIN_POSITIVE, 1.0)
    }
}

fn log_count(n: usize, m: usize) -> f64 {
    ((2 * n + m) as f64).ln()
}

fn check_inputs(u: &[f64], v: &[f64], m: f64) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "sharpness must be positive, got {m}"
        )));
    }
    if u.is_empty() && v.is_empty() {
        return Err(Error::InvalidConfig(
            "penalty over an empty residual".into(),
        ));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("penalty residuals"));
    }
    Ok(())
}

/// Shift so that the largest exponent is zero.
fn max_exponent(u: &[f64], v: &[f64], m: f64) -> f64 {
    let a = u
        .iter()
        .fold(f64::NEG_INFINITY, |acc, &x| acc.max((m * x).abs()));
    v.iter().fold(a, |acc, &x| acc.max(m * x))
}

/// `φ_M(u, v) = (1/M)·log(Σ e^{M uᵢ} + Σ e^{−M uᵢ} + Σ e^{M vⱼ})`.
pub fn phi(u: &[f64], v: &[f64], m: f64) -> Result<f64> {
    check_inputs(u, v, m)?;
    let a = max_exponent(u, v, m);
    let mut z = 0.0;
    for &x in u {
        z += (m * x - a).exp() + (-m * x - a).exp();
    }
    for &x in v {
        z += (m * x - a).exp();
    }
    Ok((a + z.ln()) / m)
}

/// Gradient of [`phi`]: softmax weights, `∂uᵢ = (e^{Muᵢ} − e^{−Muᵢ})/Z` and
/// `∂vⱼ = e^{Mvⱼ}/Z`.
pub fn phi_gradient(u: &[f64], v: &[f64], m: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_inputs(u, v, m)?;
    let a = max_exponent(u, v, m);
    let mut du: Vec<f64> = Vec::with_capacity(u.len());
    let mut z = 0.0;
    for &x in u {
        let p = (m * x - a).exp();
        let q = (-m * x - a).exp();
        z += p + q;
        du.push(p - q);
    }
    let mut dv: Vec<f64> = Vec::with_capacity(v.len());
    for &x in v {
        let p = (m * x - a).exp();
        z += p;
        dv.push(p);
    }
    for g in du.iter_mut().chain(dv.iter_mut()) {
        *g /= z;
    }
    Ok((du, dv))
}

/// `(diag − 1, b − edges)` with `b = −1/(k−1)` or `0`.
pub fn residuals(v: &ConstraintImage, cfg: &PenaltyConfig) -> (Vec<f64>, Vec<f64>) {
    let b = cfg.kind.edge_lower_bound();
    let u = v.diag.iter().map(|d| d - 1.0).collect();
    let w = v.edges.iter().map(|x| b - x).collect();
    (u, w)
}

fn check_dims(v: &ConstraintImage, cfg: &PenaltyConfig, cost: &CostOperator) -> Result<()> {
    if v.n() != cfg.n || cost.n() != cfg.n {
        return Err(Error::Dimension {
            expected: cfg.n,
            actual: if v.n() != cfg.n { v.n() } else { cost.n() },
        });
    }
    if v.num_edges() != cfg.num_edges || cost.num_pairs() != cfg.num_edges {
        return Err(Error::Dimension {
            expected: cfg.num_edges,
            actual: if v.num_edges() != cfg.num_edges {
                v.num_edges()
            } else {
                cost.num_pairs()
            },
        });
    }
    Ok(())
}

/// `⟨C, X⟩ = Σ Cᵢᵢ Xᵢᵢ + 2 Σ_e c_e X_e`, a function of `B(X)` alone.
pub fn linear_value(v: &ConstraintImage, cost: &CostOperator) -> f64 {
    let d: f64 = cost
        .diagonal()
        .iter()
        .zip(&v.diag)
        .map(|(c, x)| c * x)
        .sum();
    let e: f64 = cost.coeffs().iter().zip(&v.edges).map(|(c, x)| c * x).sum();
    d + 2.0 * e
}

/// `⟨C, X⟩ − β φ_M(residuals(v))`.
pub fn objective_value(
    v: &ConstraintImage,
    cfg: &PenaltyConfig,
    cost: &CostOperator,
) -> Result<f64> {
    check_dims(v, cfg, cost)?;
    let (u, w) = residuals(v, cfg);
    let pen = if cfg.beta == 0.0 {
        0.0
    } else {
        phi(&u, &w, cfg.sharpness)?
    };
    Ok(linear_value(v, cost) - cfg.beta * pen)
}

/// `∇g = C − β·B*(∇φ)` as a sparse symmetric operator.
///
/// With `⟨A_e, X⟩ = X_ij` for `A_e = (eᵢeⱼᵀ + eⱼeᵢᵀ)/2`, the matrix has
/// diagonal `Cᵢᵢ − penalty_diagᵢ` and off-diagonal entry
/// `c_e − penalty_edges_e / 2` at both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone)]
pub struct GradientOperator<'a> {
    cost: &'a CostOperator,
    /// `β ∂uᵢ`
    pub penalty_diag: Vec<f64>,
    /// `−β ∂v_e`
    pub penalty_edges: Vec<f64>,
}

pub fn gradient_operator<'a>(
    v: &ConstraintImage,
    cfg: &PenaltyConfig,
    cost: &'a CostOperator,
) -> Result<GradientOperator<'a>> {
    check_dims(v, cfg, cost)?;
    if cfg.beta == 0.0 {
        return Ok(GradientOperator {
            cost,
            penalty_diag: vec![0.0; cfg.n],
            penalty_edges: vec![0.0; cfg.num_edges],
        });
    }
    let (u, w) = residuals(v, cfg);
    let (du, dw) = phi_gradient(&u, &w, cfg.sharpness)?;
    Ok(GradientOperator {
        cost,
        penalty_diag: du.into_iter().map(|g| cfg.beta * g).collect(),
        penalty_edges: dw.into_iter().map(|g| -cfg.beta * g).collect(),
    })
}

impl GradientOperator<'_> {
    pub fn cost(&self) -> &CostOperator {
        self.cost
    }

    /// `⟨∇g, D⟩` for a matrix `D` given through its constraint image. Only
    /// valid because `∇g` is supported on the diagonal and the edges.
    pub fn pair_with(&self, d: &ConstraintImage) -> f64 {
        let diag: f64 = self
            .cost
            .diagonal()
            .iter()
            .zip(&self.penalty_diag)
            .zip(&d.diag)
            .map(|((c, p), x)| (c - p) * x)
            .sum();
        let off: f64 = self
            .cost
            .coeffs()
            .iter()
            .zip(&self.penalty_edges)
            .zip(&d.edges)
            .map(|((c, p), x)| (2.0 * c - p) * x)
            .sum();
        diag + off
    }

    pub fn words(&self) -> usize {
        self.penalty_diag.len() + self.penalty_edges.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut g = self.cost.to_dense();
        for (i, p) in self.penalty_diag.iter().enumerate() {
            g[(i, i)] -= p;
        }
        for (&(i, j), p) in self.cost.pairs().iter().zip(&self.penalty_edges) {
            g[(i, j)] -= 0.5 * p;
            g[(j, i)] -= 0.5 * p;
        }
        g
    }
}

impl SymmetricOperator for GradientOperator<'_> {
    fn dim(&self) -> usize {
        self.cost.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.cost.apply(x, y);
        for ((yi, xi), p) in y.iter_mut().zip(x).zip(&self.penalty_diag) {
            *yi -= p * xi;
        }
        for (&(i, j), p) in self.cost.pairs().iter().zip(&self.penalty_edges) {
            let h = 0.5 * p;
            y[i] -= h * x[j];
            y[j] -= h * x[i];
        }
    }
}
