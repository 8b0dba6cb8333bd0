//! Feasibility repair of the solver samples and randomized rounding.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SignedGraph, WeightedGraph};
use crate::penalty::{ConstraintImage, PenaltyConfig};
use crate::rng::normal;
use crate::sampler::SampleSet;

/// Part label per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition(pub Vec<usize>);

/// Cluster label per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Clustering(pub Vec<usize>);

impl Partition {
    pub fn labels(&self) -> &[usize] {
        &self.0
    }
}

impl Clustering {
    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn num_clusters(&self) -> usize {
        let mut l = self.0.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    }
}

/// The affine map taking `N(0, X̂)` samples to `N(0, X^f)` with `X^f`
/// feasible:
///
/// `X^f = (X̂ + err·11ᵀ)/s + I − diag((diag(X̂) + err)/s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairPlan {
    /// Largest lower-bound violation on the tracked edges.
    pub err: f64,
    /// `s = max(1, max(diag(X̂)) + err)`.
    pub scale: f64,
    /// Per-vertex variance of the independent correction term.
    pub residual_var: Vec<f64>,
}

impl RepairPlan {
    pub fn new(v: &ConstraintImage, cfg: &PenaltyConfig) -> Result<Self> {
        if v.diag.iter().chain(&v.edges).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("constraint image"));
        }
        if v.diag.is_empty() {
            return Err(Error::InvalidConfig("empty constraint image".into()));
        }
        let b = cfg.kind.edge_lower_bound();
        let err = v.edges.iter().fold(0.0f64, |a, x| a.max(b - x));
        let top = v.diag.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x));
        let scale = (top + err).max(1.0);
        let residual_var = v
            .diag
            .iter()
            .map(|d| {
                let r = 1.0 - (d + err) / scale;
                debug_assert!(r >= -1e-12);
                r.max(0.0)
            })
            .collect();
        Ok(Self {
            err,
            scale,
            residual_var,
        })
    }

    /// Dense `X^f` for a given `X̂`. Verification only.
    pub fn dense_covariance(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let mut f = x.map(|e| (e + self.err) / self.scale);
        for i in 0..n {
            f[(i, i)] += self.residual_var[i];
        }
        f
    }
}

/// Map samples of `N(0, X̂)` to samples of the repaired law `N(0, X^f)`.
///
/// Each sample gets its own shift `y ~ N(0, 1)` along the ones vector and its
/// own correction `ζ`, so the outputs stay i.i.d.
pub fn repair_samples<R: Rng + ?Sized>(
    z: &SampleSet,
    v: &ConstraintImage,
    cfg: &PenaltyConfig,
    rng: &mut R,
) -> Result<SampleSet> {
    if z.n() != v.n() {
        return Err(Error::Dimension {
            expected: v.n(),
            actual: z.n(),
        });
    }
    let plan = RepairPlan::new(v, cfg)?;
    Ok(apply_repair(z, &plan, rng))
}

pub fn apply_repair<R: Rng + ?Sized>(z: &SampleSet, plan: &RepairPlan, rng: &mut R) -> SampleSet {
    let mut out = z.clone();
    let shift_sd = plan.err.sqrt();
    let inv = 1.0 / plan.scale.sqrt();
    let sds: Vec<f64> = plan.residual_var.iter().map(|r| r.sqrt()).collect();
    for s in 0..out.len() {
        let y = normal(rng);
        let zs = out.sample_mut(s);
        for (x, sd) in zs.iter_mut().zip(&sds) {
            let zeta = if *sd > 0.0 { sd * normal(rng) } else { 0.0 };
            *x = (*x + shift_sd * y) * inv + zeta;
        }
    }
    out
}

/// Frieze–Jerrum: vertex `i` goes to the sample with the largest `i`-th
/// coordinate, lowest index on ties.
pub fn fj_round(zf: &SampleSet) -> Partition {
    let n = zf.n();
    let mut assign = vec![0; n];
    for (i, a) in assign.iter_mut().enumerate() {
        let mut best = f64::NEG_INFINITY;
        for p in 0..zf.len() {
            let x = zf.sample(p)[i];
            if x > best {
                best = x;
                *a = p;
            }
        }
    }
    Partition(assign)
}

/// Cluster by sign pattern: `label_i = Σ_j 2^j·[z_j(i) ≥ 0]`.
pub fn sign_pattern_round(zf: &SampleSet) -> Clustering {
    let n = zf.n();
    let mut assign = vec![0usize; n];
    for j in 0..zf.len() {
        for (a, x) in assign.iter_mut().zip(zf.sample(j)) {
            if *x >= 0.0 {
                *a |= 1 << j;
            }
        }
    }
    Clustering(assign)
}

/// Weight of edges whose endpoints carry different labels.
pub fn cut_value(g: &WeightedGraph, part: &Partition) -> f64 {
    g.edges()
        .iter()
        .filter(|e| part.0[e.i] != part.0[e.j])
        .map(|e| e.w)
        .sum()
}

/// Plus weight inside clusters plus minus weight across clusters.
pub fn agree_value(sg: &SignedGraph, c: &Clustering) -> f64 {
    let same = |e: &crate::graph::Edge| c.0[e.i] == c.0[e.j];
    let plus: f64 = sg
        .plus_edges()
        .iter()
        .filter(|e| same(e))
        .map(|e| e.w)
        .sum();
    let minus: f64 = sg
        .minus_edges()
        .iter()
        .filter(|e| !same(e))
        .map(|e| e.w)
        .sum();
    plus + minus
}

/// Plus weight across clusters plus minus weight inside clusters.
pub fn disagree_value(sg: &SignedGraph, c: &Clustering) -> f64 {
    let same = |e: &crate::graph::Edge| c.0[e.i] == c.0[e.j];
    let plus: f64 = sg
        .plus_edges()
        .iter()
        .filter(|e| !same(e))
        .map(|e| e.w)
        .sum();
    let minus: f64 = sg
        .minus_edges()
        .iter()
        .filter(|e| same(e))
        .map(|e| e.w)
        .sum();
    plus + minus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestOf<L> {
    pub best_value: f64,
    pub best: L,
    /// Value of every replication, in order.
    pub values: Vec<f64>,
}

fn best_of<L>(rounds: impl Iterator<Item = (f64, L)>) -> Option<BestOf<L>> {
    let mut values = Vec::new();
    let mut best: Option<(f64, L)> = None;
    for (val, l) in rounds {
        values.push(val);
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, l));
        }
    }
    best.map(|(best_value, best)| BestOf {
        best_value,
        best,
        values,
    })
}

/// Split `zf` into consecutive groups of `k` samples and FJ-round each.
pub fn round_maxkcut(g: &WeightedGraph, zf: &SampleSet, k: usize) -> Result<BestOf<Partition>> {
    if k < 2 || zf.is_empty() || !zf.len().is_multiple_of(k) {
        return Err(Error::InvalidConfig(format!(
            "{} samples cannot be split into groups of k = {k}",
            zf.len()
        )));
    }
    let reps = zf.len() / k;
    let rounds = (0..reps).map(|r| {
        let p = fj_round(&zf.group(r * k, k));
        (cut_value(g, &p), p)
    });
    Ok(best_of(rounds).expect("at least one replication"))
}

/// Split `zf` into consecutive groups of `s` samples and sign-pattern round
/// each.
pub fn round_maxagree(sg: &SignedGraph, zf: &SampleSet, s: usize) -> Result<BestOf<Clustering>> {
    if !(1..=3).contains(&s) || zf.is_empty() || !zf.len().is_multiple_of(s) {
        return Err(Error::InvalidConfig(format!(
            "{} samples cannot be split into groups of s = {s}",
            zf.len()
        )));
    }
    let reps = zf.len() / s;
    let rounds = (0..reps).map(|r| {
        let c = sign_pattern_round(&zf.group(r * s, s));
        (agree_value(sg, &c), c)
    });
    Ok(best_of(rounds).expect("at least one replication"))
}
