//! Frank–Wolfe with Gaussian sampling.
//!
//! The matrix iterate `X_t` is never formed. The solver keeps `k` samples
//! `z ~ N(0, X_t)` together with the constraint image `v_t = B(X_t)`, and
//! applies the rank-one step `X ← (1−γ)X + γα hhᵀ` to both: each sample gets
//! `z ← √(1−γ) z + √(γα) ζ h` with its own scalar `ζ ~ N(0, 1)`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{build_cost_maxagree, build_cost_maxkcut, CostOperator};
use crate::error::{Error, Result};
use crate::graph::{SignedGraph, WeightedGraph};
use crate::lanczos::lanczos_max_eigvec;
use crate::linalg::{scale, SymmetricOperator};
use crate::memory::MemoryMeter;
use crate::penalty::{gradient_operator, objective_value, ConstraintImage, PenaltyConfig};
use crate::rng::{fill_normal, normal, seeded, SolverRng};

/// `k` vectors in `Rⁿ`, stored sample-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            data: vec![0.0; n * k],
        }
    }

    /// `k` i.i.d. draws from `N(0, I)`.
    pub fn standard<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Self {
        let mut s = Self::zeros(n, k);
        fill_normal(rng, &mut s.data);
        s
    }

    pub fn from_samples(samples: Vec<Vec<f64>>) -> Result<Self> {
        let k = samples.len();
        let n = samples.first().map_or(0, Vec::len);
        if samples.iter().any(|s| s.len() != n) {
            return Err(Error::InvalidConfig("samples must share one length".into()));
        }
        Ok(Self {
            n,
            k,
            data: samples.into_iter().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n.max(1)).take(self.k)
    }

    /// Samples `start..start + len` as their own set.
    pub fn group(&self, start: usize, len: usize) -> SampleSet {
        SampleSet {
            n: self.n,
            k: len,
            data: self.data[start * self.n..(start + len) * self.n].to_vec(),
        }
    }

    pub fn words(&self) -> usize {
        self.data.len()
    }

    /// `(1/k) Σ z zᵀ`. Verification only.
    pub fn empirical_covariance(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.n, self.n);
        for z in self.iter() {
            for i in 0..self.n {
                for j in 0..self.n {
                    c[(i, j)] += z[i] * z[j];
                }
            }
        }
        c / self.k as f64
    }
}

/// Output of the linear maximization oracle over `{X ⪰ 0, Tr X ≤ α}`.
#[derive(Debug, Clone)]
pub struct LmoResult {
    /// Unit vector, or all zeros on the negative branch.
    pub h: Vec<f64>,
    pub lambda: f64,
    /// `B(α hhᵀ)`, or zero.
    pub q: ConstraintImage,
    pub lanczos_iters: usize,
    pub working_words: usize,
}

impl LmoResult {
    pub fn is_zero(&self) -> bool {
        self.lambda < 0.0
    }
}

/// Approximate `argmax_{d ∈ S} ⟨d, J⟩` for `S = {X ⪰ 0, Tr X ≤ α}`.
///
/// The additive budget `delta` is met by running Lanczos at accuracy
/// `ρ = 8δ/(α·norm_bound)`, where `norm_bound ≥ ‖J‖`. A negative top
/// eigenvalue means the zero matrix is the maximizer.
#[allow(clippy::too_many_arguments)]
pub fn lmo<Op, R>(
    op: &Op,
    pairs: &[(usize, usize)],
    delta: f64,
    norm_bound: f64,
    fail_prob: f64,
    alpha: f64,
    max_steps: Option<usize>,
    rng: &mut R,
) -> Result<LmoResult>
where
    Op: SymmetricOperator + ?Sized,
    R: Rng + ?Sized,
{
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "LMO budget must be positive, got {delta}"
        )));
    }
    let denom = alpha * norm_bound;
    let rho = if denom > 0.0 {
        (8.0 * delta / denom).clamp(f64::MIN_POSITIVE, 1.0)
    } else {
        1.0
    };
    lmo_with_rho(op, pairs, rho, fail_prob, alpha, max_steps, rng)
}

fn lmo_with_rho<Op, R>(
    op: &Op,
    pairs: &[(usize, usize)],
    rho: f64,
    fail_prob: f64,
    alpha: f64,
    max_steps: Option<usize>,
    rng: &mut R,
) -> Result<LmoResult>
where
    Op: SymmetricOperator + ?Sized,
    R: Rng + ?Sized,
{
    let est = lanczos_max_eigvec(op, rho, fail_prob, max_steps, rng)?;
    let n = op.dim();
    let words = est.working_words;
    if est.value >= 0.0 {
        let q = ConstraintImage::rank_one(&est.vector, alpha, pairs);
        Ok(LmoResult {
            h: est.vector,
            lambda: est.value,
            q,
            lanczos_iters: est.iterations,
            working_words: words,
        })
    } else {
        Ok(LmoResult {
            h: vec![0.0; n],
            lambda: est.value,
            q: ConstraintImage::zeros(n, pairs.len()),
            lanczos_iters: est.iterations,
            working_words: words,
        })
    }
}

/// One Frank–Wolfe step on samples and image. `h = None` (or the zero
/// vector) contributes shrinkage only.
pub fn update_variable<R: Rng + ?Sized>(
    z: &mut SampleSet,
    v: &mut ConstraintImage,
    h: Option<&[f64]>,
    q: &ConstraintImage,
    gamma: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidConfig(format!(
            "step size must lie in [0, 1], got {gamma}"
        )));
    }
    let keep = (1.0 - gamma).sqrt();
    let push = (gamma * alpha).sqrt();
    let h = h.filter(|h| h.iter().any(|&x| x != 0.0));
    for i in 0..z.len() {
        let zi = z.sample_mut(i);
        match h {
            Some(h) => {
                let zeta = normal(rng);
                for (x, hj) in zi.iter_mut().zip(h) {
                    *x = keep * *x + push * zeta * hj;
                }
            }
            None => scale(keep, zi),
        }
    }
    v.blend(q, gamma);
    Ok(())
}

/// Cost operator plus penalty parameters.
#[derive(Debug, Clone)]
pub struct Problem {
    pub cost: CostOperator,
    pub config: PenaltyConfig,
}

impl Problem {
    pub fn max_k_cut(g: &WeightedGraph, k: usize, eps: f64, eta: f64) -> Result<Self> {
        let cost = build_cost_maxkcut(g, k)?;
        let config = PenaltyConfig::max_k_cut(&cost, k, eps, eta)?;
        Ok(Self { cost, config })
    }

    pub fn max_agree(sg: &SignedGraph, eps: f64, eta: f64) -> Result<Self> {
        let (cost, delta) = build_cost_maxagree(sg)?;
        let config = PenaltyConfig::max_agree(&cost, delta, eps, eta)?;
        Ok(Self { cost, config })
    }

    pub fn n(&self) -> usize {
        self.cost.n()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Number of sample vectors carried through the iterations.
    pub samples: usize,
    /// Maximum number of Frank–Wolfe updates.
    pub max_iters: usize,
    /// LMO failure probability; defaults to `ε / T(n, ε)`.
    pub fail_prob: Option<f64>,
    /// Cap on the Lanczos Krylov dimension.
    pub max_lanczos_steps: usize,
    /// Maintain the dense iterate alongside the samples (verification only).
    pub shadow: bool,
    /// Record the objective every this many iterations.
    pub trace_stride: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            samples: 2,
            max_iters: 100_000,
            fail_prob: None,
            max_lanczos_steps: 64,
            shadow: false,
            trace_stride: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub converged: bool,
    pub final_gap: f64,
    pub gap_tolerance: f64,
    pub objective: f64,
    pub infeasibility: f64,
    pub objective_trace: Vec<(usize, f64)>,
    pub lanczos_iters: usize,
    pub peak_words: usize,
    pub seed: u64,
    /// Largest `‖v_t − B(X_t)‖_∞` seen in shadow mode.
    pub shadow_max_deviation: Option<f64>,
}

/// What an observer sees at the top of every iteration, after the LMO and
/// before the update.
pub struct IterationRecord<'a> {
    pub t: usize,
    pub gamma: f64,
    pub gap: f64,
    pub objective: f64,
    pub lmo: &'a LmoResult,
    pub image: &'a ConstraintImage,
    pub shadow: Option<&'a DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub samples: SampleSet,
    pub image: ConstraintImage,
    pub stats: SolverStats,
    /// The dense iterate, in shadow mode.
    pub shadow: Option<DMatrix<f64>>,
    /// Random stream as of the top of the final iteration.
    pub rng: SolverRng,
}

impl SolverOutput {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            t: self.stats.iterations,
            v: self.image.clone(),
            z: self.samples.clone(),
            rng_state: self.rng.clone(),
        }
    }
}

/// Resumable solver state, serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: usize,
    pub v: ConstraintImage,
    pub z: SampleSet,
    pub rng_state: SolverRng,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Run Frank–Wolfe from `X₀ = I` until the surrogate gap
/// `⟨q_t − v_t, ∇g(v_t)⟩` drops to `ε·gap_scale` or `max_iters` updates.
pub fn fw_gaussian(problem: &Problem, opts: &SolverOptions) -> Result<SolverOutput> {
    fw_gaussian_observed(problem, opts, |_| {})
}

pub fn fw_gaussian_observed<F>(
    problem: &Problem,
    opts: &SolverOptions,
    observer: F,
) -> Result<SolverOutput>
where
    F: FnMut(&IterationRecord<'_>),
{
    let n = problem.n();
    let m = problem.cost.num_pairs();
    let mut rng = seeded(opts.seed);
    let z = SampleSet::standard(n, opts.samples, &mut rng);
    let start = Checkpoint {
        t: 0,
        v: ConstraintImage::identity(n, m),
        z,
        rng_state: rng,
    };
    run(problem, opts, start, true, observer)
}

/// Continue a run from a checkpoint. Shadow mode is unavailable because the
/// dense iterate is not part of the checkpoint.
pub fn fw_gaussian_resume(
    problem: &Problem,
    opts: &SolverOptions,
    from: Checkpoint,
) -> Result<SolverOutput> {
    if opts.shadow {
        return Err(Error::InvalidConfig(
            "shadow mode cannot resume from a checkpoint".into(),
        ));
    }
    if from.v.n() != problem.n() || from.z.n() != problem.n() {
        return Err(Error::Dimension {
            expected: problem.n(),
            actual: from.v.n(),
        });
    }
    run(problem, opts, from, false, |_| {})
}

fn run<F>(
    problem: &Problem,
    opts: &SolverOptions,
    start: Checkpoint,
    fresh: bool,
    mut observer: F,
) -> Result<SolverOutput>
where
    F: FnMut(&IterationRecord<'_>),
{
    let cfg = &problem.config;
    let cost = &problem.cost;
    let n = problem.n();
    if opts.samples == 0 {
        return Err(Error::InvalidConfig(
            "at least one sample is required".into(),
        ));
    }
    if start.z.len() != opts.samples {
        return Err(Error::Dimension {
            expected: opts.samples,
            actual: start.z.len(),
        });
    }
    let fail_prob = opts.fail_prob.unwrap_or_else(|| cfg.default_failure_prob());
    let curvature = cfg.curvature_bound();
    let norm_bound = cfg.gradient_norm_bound();
    let tol = cfg.gap_tolerance();
    let pairs = cost.pairs();

    let Checkpoint {
        mut t,
        v: mut image,
        z: mut samples,
        rng_state: mut rng,
    } = start;

    let mut meter = MemoryMeter::new();
    meter.charge(cost.words() + image.words() + samples.words());

    let mut shadow = if opts.shadow && fresh {
        meter.charge(n * n);
        Some(DMatrix::<f64>::identity(n, n))
    } else {
        None
    };
    let mut shadow_dev: Option<f64> = shadow
        .as_ref()
        .map(|x| ConstraintImage::from_dense(x, pairs).max_abs_diff(&image));

    let mut trace = Vec::new();
    let mut lanczos_total = 0;
    let stride = opts.trace_stride.max(1);
    let mut resume_rng = rng.clone();
    let (converged, gap, objective) = loop {
        // state at the top of iteration t, so a checkpoint replays its LMO
        resume_rng.clone_from(&rng);
        let gamma = 2.0 / (t as f64 + 2.0);
        let grad = gradient_operator(&image, cfg, cost)?;
        // residuals and softmax weights are transient alongside the operator
        meter.touch(grad.words() + 2 * image.words());
        meter.charge(grad.words());

        let delta = 0.5 * cfg.eta * gamma * curvature;
        let rho = if delta > 0.0 && cfg.alpha * norm_bound > 0.0 {
            (8.0 * delta / (cfg.alpha * norm_bound)).clamp(f64::MIN_POSITIVE, 1.0)
        } else {
            1.0
        };
        let step = lmo_with_rho(
            &grad,
            pairs,
            rho,
            fail_prob,
            cfg.alpha,
            Some(opts.max_lanczos_steps),
            &mut rng,
        )?;
        meter.touch(step.working_words + step.q.words());
        lanczos_total += step.lanczos_iters;

        let gap = grad.pair_with(&step.q) - grad.pair_with(&image);
        meter.release(grad.words());
        drop(grad);
        let objective = objective_value(&image, cfg, cost)?;
        if t % stride == 0 {
            trace.push((t, objective));
        }
        observer(&IterationRecord {
            t,
            gamma,
            gap,
            objective,
            lmo: &step,
            image: &image,
            shadow: shadow.as_ref(),
        });

        if gap <= tol {
            break (true, gap, objective);
        }
        if t >= opts.max_iters {
            break (false, gap, objective);
        }

        let h = (!step.is_zero()).then_some(step.h.as_slice());
        update_variable(
            &mut samples,
            &mut image,
            h,
            &step.q,
            gamma,
            cfg.alpha,
            &mut rng,
        )?;
        if let Some(x) = shadow.as_mut() {
            *x *= 1.0 - gamma;
            if let Some(h) = h {
                let hv = nalgebra::DVector::from_column_slice(h);
                *x += (gamma * cfg.alpha) * &hv * hv.transpose();
            }
            let dev = ConstraintImage::from_dense(x, pairs).max_abs_diff(&image);
            shadow_dev = Some(shadow_dev.unwrap_or(0.0).max(dev));
        }
        t += 1;
    };
    if trace.last().map(|&(s, _)| s) != Some(t) {
        trace.push((t, objective));
    }

    let infeasibility = image.infeasibility(cfg);
    Ok(SolverOutput {
        stats: SolverStats {
            iterations: t,
            converged,
            final_gap: gap,
            gap_tolerance: tol,
            objective,
            infeasibility,
            objective_trace: trace,
            lanczos_iters: lanczos_total,
            peak_words: meter.peak(),
            seed: opts.seed,
            shadow_max_deviation: shadow_dev,
        },
        samples,
        image,
        shadow,
        rng: resume_rng,
    })
}
