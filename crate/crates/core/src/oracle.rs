//! Exhaustive optima for small instances and the Frieze–Jerrum constant.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SignedGraph, WeightedGraph};
use crate::rng::{fill_normal, seeded};
use crate::rounding::{agree_value, cut_value, Clustering, Partition};

const MAX_ASSIGNMENTS: f64 = 1e7;

/// Optimal k-cut by enumeration, vertex 0 pinned to part 0.
pub fn brute_force_maxkcut(g: &WeightedGraph, k: usize) -> Result<(f64, Partition)> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let n = g.n();
    if (k as f64).powi(n as i32) > MAX_ASSIGNMENTS {
        return Err(Error::TooLarge(format!("{k}^{n} assignments")));
    }
    let mut labels = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, Partition(labels.clone()));
    loop {
        let p = Partition(labels.clone());
        let val = cut_value(g, &p);
        if val > best.0 {
            best = (val, p);
        }
        // odometer over vertices 1..n
        let mut i = 1;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i >= n {
            break;
        }
    }
    Ok(best)
}

/// Optimal Max-Agree clustering over all set partitions (`n ≤ 10`).
pub fn brute_force_maxagree(sg: &SignedGraph) -> Result<(f64, Clustering)> {
    let n = sg.n();
    if n > 10 {
        return Err(Error::TooLarge(format!("{n} vertices (limit 10)")));
    }
    // restricted growth strings enumerate each set partition once
    let mut a = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, Clustering(a.clone()));
    loop {
        let c = Clustering(a.clone());
        let val = agree_value(sg, &c);
        if val > best.0 {
            best = (val, c);
        }
        let mut i = n;
        loop {
            if i <= 1 {
                return Ok(best);
            }
            i -= 1;
            let cap = a[..i].iter().copied().max().unwrap_or(0) + 1;
            if a[i] < cap {
                a[i] += 1;
                for x in &mut a[i + 1..] {
                    *x = 0;
                }
                break;
            }
        }
    }
}

/// Monte Carlo estimate of `α_k = min_ρ k·p(ρ) / ((k−1)(1−ρ))`, where
/// `p(ρ)` is the probability that FJ rounding separates two vertices whose
/// Gram entry is `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaOracle {
    pub k: usize,
    pub rhos: Vec<f64>,
    pub probs: Vec<f64>,
    pub alpha: f64,
    pub argmin_rho: f64,
}

/// Largest grid point. The ratio increases near `ρ = 1` (it diverges like
/// `1/√(1−ρ)`), so the neighbourhood above this is excluded.
pub const RHO_MAX: f64 = 0.99;

/// Grid of `points ≥ 2` values over `[−1/(k−1), RHO_MAX]`, endpoints included.
/// All grid points share the same Gaussian draws.
pub fn alpha_k_oracle<R: Rng + ?Sized>(
    k: usize,
    points: usize,
    samples: usize,
    rng: &mut R,
) -> Result<AlphaOracle> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if points < 2 || samples == 0 {
        return Err(Error::InvalidConfig(
            "alpha oracle needs >= 2 grid points and >= 1 sample".into(),
        ));
    }
    let lo = -1.0 / (k as f64 - 1.0);
    let rhos: Vec<f64> = (0..points)
        .map(|i| lo + (RHO_MAX - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let coef: Vec<(f64, f64)> = rhos
        .iter()
        .map(|&r| (r, (1.0 - r * r).max(0.0).sqrt()))
        .collect();

    let mut split = vec![0u64; points];
    const CHUNK: usize = 4096;
    let mut a = vec![0.0; CHUNK * k];
    let mut c = vec![0.0; CHUNK * k];
    let mut done = 0;
    while done < samples {
        let m = CHUNK.min(samples - done);
        fill_normal(rng, &mut a[..m * k]);
        fill_normal(rng, &mut c[..m * k]);
        for s in 0..m {
            let ai = &a[s * k..(s + 1) * k];
            let ci = &c[s * k..(s + 1) * k];
            let pa = argmax(ai);
            for (cnt, &(r, q)) in split.iter_mut().zip(&coef) {
                let mut best = f64::NEG_INFINITY;
                let mut pb = 0;
                for l in 0..k {
                    let b = r * ai[l] + q * ci[l];
                    if b > best {
                        best = b;
                        pb = l;
                    }
                }
                if pb != pa {
                    *cnt += 1;
                }
            }
        }
        done += m;
    }
    let probs: Vec<f64> = split.iter().map(|&s| s as f64 / samples as f64).collect();
    let kf = k as f64;
    let (alpha, argmin_rho) = rhos
        .iter()
        .zip(&probs)
        .map(|(&r, &p)| (kf * p / ((kf - 1.0) * (1.0 - r)), r))
        .fold((f64::INFINITY, 0.0), |best, cur| {
            if cur.0 < best.0 {
                cur
            } else {
                best
            }
        });
    Ok(AlphaOracle {
        k,
        rhos,
        probs,
        alpha,
        argmin_rho,
    })
}

fn argmax(x: &[f64]) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > best {
            best = v;
            idx = i;
        }
    }
    idx
}

pub const ALPHA_SEED: u64 = 0x5eed_a1fa;
pub const ALPHA_GRID: usize = 301;
pub const ALPHA_SAMPLES: usize = 400_000;

/// `α_k` from a fixed-seed oracle run, computed once per `k` per process.
pub fn alpha_k(k: usize) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&a) = cache.lock().expect("alpha cache poisoned").get(&k) {
        return Ok(a);
    }
    let a = alpha_k_oracle(
        k,
        ALPHA_GRID,
        ALPHA_SAMPLES,
        &mut seeded(ALPHA_SEED ^ k as u64),
    )?
    .alpha;
    cache.lock().expect("alpha cache poisoned").insert(k, a);
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_optima() {
        let g = WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(brute_force_maxkcut(&g, 2).unwrap().0, 2.0);
        assert_eq!(brute_force_maxkcut(&g, 3).unwrap().0, 3.0);
        let e = WeightedGraph::new(2, [(0, 1, 5.0)]).unwrap();
        assert_eq!(brute_force_maxkcut(&e, 2).unwrap().0, 5.0);
        let big = WeightedGraph::empty(30);
        assert!(matches!(
            brute_force_maxkcut(&big, 2),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn single_edge_agreement() {
        let plus = SignedGraph::new(2, [(0, 1, 1.0)], []).unwrap();
        assert_eq!(brute_force_maxagree(&plus).unwrap().0, 1.0);
        let minus = SignedGraph::new(2, [], [(0, 1, 1.0)]).unwrap();
        let (v, c) = brute_force_maxagree(&minus).unwrap();
        assert_eq!(v, 1.0);
        assert_ne!(c.0[0], c.0[1]);
        assert!(brute_force_maxagree(&SignedGraph::new(11, [], []).unwrap()).is_err());
    }

    #[test]
    fn grid_includes_lower_endpoint() {
        let o = alpha_k_oracle(3, 11, 1000, &mut seeded(0)).unwrap();
        assert_eq!(o.rhos[0], -0.5);
        assert_eq!(*o.rhos.last().unwrap(), RHO_MAX);
    }
}
