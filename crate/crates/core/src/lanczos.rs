//! Matrix-free Lanczos for the largest eigenpair of a symmetric operator.
//!
//! Runs from a random unit start with full reorthogonalization against the
//! stored Krylov basis. From a random start, `⌈½ + log(n/p²)/√ρ⌉` steps give
//! a unit `h` with `hᵀAh ≥ λ_max − (ρ/8)‖A‖` with probability at least
//! `1 − 2p`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, scale, SymmetricOperator};
use crate::rng::fill_normal;

#[derive(Debug, Clone)]
pub struct EigenEstimate {
    /// Rayleigh quotient `hᵀAh` of the returned vector.
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// True when the Krylov space became invariant before the step budget.
    pub breakdown: bool,
    /// Peak words held by the iteration (basis, tridiagonal, scratch).
    pub working_words: usize,
}

/// `⌈½ + log(n/p²)/√ρ⌉`, at least 1.
pub fn required_iterations(n: usize, rho: f64, fail_prob: f64) -> usize {
    let log_term = (n.max(1) as f64 / (fail_prob * fail_prob)).ln().max(0.0);
    let q = 0.5 + log_term / rho.sqrt();
    if q.is_finite() {
        (q.ceil() as usize).max(1)
    } else {
        usize::MAX
    }
}

/// Largest eigenpair estimate of `op`.
///
/// `max_steps` caps the Krylov dimension (and so the basis memory) below the
/// accuracy-driven count; the count is also never more than `n`.
pub fn lanczos_max_eigvec<Op, R>(
    op: &Op,
    rho: f64,
    fail_prob: f64,
    max_steps: Option<usize>,
    rng: &mut R,
) -> Result<EigenEstimate>
where
    Op: SymmetricOperator + ?Sized,
    R: Rng + ?Sized,
{
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "lanczos accuracy must lie in (0, 1], got {rho}"
        )));
    }
    if !(fail_prob > 0.0 && fail_prob <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "lanczos failure probability must lie in (0, 1/2], got {fail_prob}"
        )));
    }
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidConfig("empty operator".into()));
    }
    let steps = required_iterations(n, rho, fail_prob)
        .min(n)
        .min(max_steps.unwrap_or(usize::MAX))
        .max(1);

    let mut basis = vec![0.0; steps * n];
    let mut w = vec![0.0; n];
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);

    {
        let v0 = &mut basis[..n];
        fill_normal(rng, v0);
        let nv = norm(v0);
        scale(1.0 / nv, v0);
    }

    let mut scale_est = 0.0f64;
    let mut breakdown = false;
    let mut m = 0;
    for j in 0..steps {
        m = j + 1;
        let (done, rest) = basis.split_at_mut((j + 1) * n);
        let vj = &done[j * n..];
        op.apply(vj, &mut w);
        let a = dot(vj, &w);
        axpy(-a, vj, &mut w);
        if j > 0 {
            axpy(-betas[j - 1], &done[(j - 1) * n..j * n], &mut w);
        }
        // second Gram–Schmidt pass only when the first lost too much mass
        let mut b = norm(&w);
        for _ in 0..2 {
            let before = b;
            for l in 0..=j {
                let vl = &done[l * n..(l + 1) * n];
                let c = dot(vl, &w);
                axpy(-c, vl, &mut w);
            }
            b = norm(&w);
            if b > 0.7 * before {
                break;
            }
        }
        alphas.push(a);
        scale_est = scale_est.max(a.abs()).max(b);
        if j + 1 == steps {
            break;
        }
        if b <= 1e-12 * scale_est || scale_est == 0.0 {
            breakdown = true;
            break;
        }
        betas.push(b);
        let next = &mut rest[..n];
        for (x, y) in next.iter_mut().zip(&w) {
            *x = y / b;
        }
    }

    let (_, s) = tridiagonal_top_eigenpair(&alphas[..m], &betas[..m - 1]);

    let mut h = vec![0.0; n];
    for l in 0..m {
        axpy(s[l], &basis[l * n..(l + 1) * n], &mut h);
    }
    let nh = norm(&h);
    scale(1.0 / nh, &mut h);
    op.apply(&h, &mut w);
    let value = dot(&h, &w);

    Ok(EigenEstimate {
        value,
        vector: h,
        iterations: m,
        breakdown,
        working_words: (steps + 2) * n + m * m + 2 * m,
    })
}

/// Number of eigenvalues of the tridiagonal `(a, b)` strictly below `x`.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..a.len() {
        let off = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] };
        d = a[i] - x - if i == 0 { 0.0 } else { off / d };
        if d == 0.0 {
            d = -f64::EPSILON * (x.abs() + 1.0);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solve `(T − σI) x = r` for tridiagonal `T` by Gaussian elimination with
/// partial pivoting; `x` overwrites `r`.
fn shifted_tridiagonal_solve(a: &[f64], b: &[f64], sigma: f64, r: &mut [f64]) {
    let m = a.len();
    let tiny = f64::MIN_POSITIVE.sqrt();
    // row i of U holds (u0, u1, u2) at columns i, i+1, i+2
    let mut u = vec![[0.0f64; 3]; m];
    let mut cur = [a[0] - sigma, b.first().copied().unwrap_or(0.0), 0.0];
    for i in 0..m {
        if i + 1 == m {
            u[i] = cur;
            break;
        }
        let next = [b[i], a[i + 1] - sigma, b.get(i + 1).copied().unwrap_or(0.0)];
        if cur[0].abs() >= next[0].abs() {
            let piv = if cur[0] == 0.0 { tiny } else { cur[0] };
            let f = next[0] / piv;
            u[i] = [piv, cur[1], cur[2]];
            r[i + 1] -= f * r[i];
            cur = [next[1] - f * cur[1], next[2] - f * cur[2], 0.0];
        } else {
            let f = cur[0] / next[0];
            u[i] = next;
            r.swap(i, i + 1);
            r[i + 1] -= f * r[i];
            cur = [cur[1] - f * next[1], cur[2] - f * next[2], 0.0];
        }
    }
    for i in (0..m).rev() {
        let mut x = r[i];
        if i + 1 < m {
            x -= u[i][1] * r[i + 1];
        }
        if i + 2 < m {
            x -= u[i][2] * r[i + 2];
        }
        let d = if u[i][0] == 0.0 { tiny } else { u[i][0] };
        r[i] = x / d;
    }
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal `a`
/// and off-diagonal `b`, by Sturm bisection, and its unit eigenvector by
/// inverse iteration.
pub(crate) fn tridiagonal_top_eigenpair(a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let m = a.len();
    if m == 1 {
        return (a[0], vec![1.0]);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < m { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    let mag = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while hi - lo > 2.0 * f64::EPSILON * mag {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, b, mid) == m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);

    let sigma = lambda + 4.0 * f64::EPSILON * mag;
    let mut x = vec![1.0 / (m as f64).sqrt(); m];
    for _ in 0..3 {
        shifted_tridiagonal_solve(a, b, sigma, &mut x);
        let nx = norm(&x);
        if !(nx.is_finite() && nx > 0.0) {
            x = vec![1.0 / (m as f64).sqrt(); m];
            break;
        }
        scale(1.0 / nx, &mut x);
    }
    (lambda, x)
}
