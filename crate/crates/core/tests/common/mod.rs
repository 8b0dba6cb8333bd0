//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solver's own penalty, cost or eigen code; the
//! helpers rebuild each quantity from the graph with plain dense algebra.

#![allow(dead_code)]

use fwcut::rng::seeded;
use fwcut::{SignedGraph, WeightedGraph};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> WeightedGraph {
    let mut rng = seeded(seed);
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                e.push((i, j, 1.0));
            }
        }
    }
    WeightedGraph::new(n, e).unwrap()
}

/// ER graph with weights uniform in `[lo, hi)`, at least one edge.
pub fn weighted_er(n: usize, p: f64, lo: f64, hi: f64, seed: u64) -> WeightedGraph {
    let mut rng = seeded(seed);
    loop {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    e.push((i, j, rng.random_range(lo..hi)));
                }
            }
        }
        if !e.is_empty() {
            return WeightedGraph::new(n, e).unwrap();
        }
    }
}

/// Each pair is `+` with probability `p_plus`, `−` with `p_minus`, weights in
/// `[0.1, 1.1)`.
pub fn random_signed(n: usize, p_plus: f64, p_minus: f64, seed: u64) -> SignedGraph {
    let mut rng = seeded(seed);
    loop {
        let (mut plus, mut minus) = (Vec::new(), Vec::new());
        for i in 0..n {
            for j in i + 1..n {
                let x: f64 = rng.random();
                if x < p_plus {
                    plus.push((i, j, 0.1 + rng.random::<f64>()));
                } else if x < p_plus + p_minus {
                    minus.push((i, j, 0.1 + rng.random::<f64>()));
                }
            }
        }
        if !plus.is_empty() || !minus.is_empty() {
            return SignedGraph::new(n, plus, minus).unwrap();
        }
    }
}

pub fn dense_laplacian(
    n: usize,
    edges: impl IntoIterator<Item = (usize, usize, f64)>,
) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for (i, j, w) in edges {
        l[(i, i)] += w;
        l[(j, j)] += w;
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    }
    l
}

/// `((k−1)/2k) L_G`.
pub fn dense_kcut_cost(g: &WeightedGraph, k: usize) -> DMatrix<f64> {
    let s = (k as f64 - 1.0) / (2.0 * k as f64);
    dense_laplacian(g.n(), g.edges().iter().map(|e| (e.i, e.j, e.w))) * s
}

/// `L⁻ + W⁺` with `W⁺` the plus adjacency matrix.
pub fn dense_agree_cost(sg: &SignedGraph) -> DMatrix<f64> {
    let mut c = dense_laplacian(sg.n(), sg.minus_edges().iter().map(|e| (e.i, e.j, e.w)));
    for e in sg.plus_edges() {
        c[(e.i, e.j)] += e.w;
        c[(e.j, e.i)] += e.w;
    }
    c
}

/// `(1/M) log Σ exp(·)` summed in sorted order with a compensated sum.
pub fn phi_reference(u: &[f64], v: &[f64], m: f64) -> f64 {
    let mut terms: Vec<f64> = u
        .iter()
        .flat_map(|&x| [m * x, -m * x])
        .chain(v.iter().map(|&x| m * x))
        .collect();
    terms.sort_by(|a, b| a.total_cmp(b));
    let top = *terms.last().unwrap();
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in &terms {
        let y = (t - top).exp() - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    (top + sum.ln()) / m
}

/// Penalized objective of a dense `X` over the pairs `(i, j)` with edge
/// lower bound `b`.
pub fn dense_objective(
    c: &DMatrix<f64>,
    x: &DMatrix<f64>,
    pairs: &[(usize, usize)],
    b: f64,
    beta: f64,
    m: f64,
) -> f64 {
    let n = x.nrows();
    let lin = c.component_mul(x).sum();
    let u: Vec<f64> = (0..n).map(|i| x[(i, i)] - 1.0).collect();
    let w: Vec<f64> = pairs.iter().map(|&(i, j)| b - x[(i, j)]).collect();
    lin - beta * phi_reference(&u, &w, m)
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Max-Cut SDP value `max ⟨L/4, X⟩` over `diag X = 1, X ⪰ 0` by the
/// row-by-row mixing method on unit vectors of dimension `n`. Returns a
/// lower bound that is tight to `~tol` at convergence.
pub fn maxcut_sdp(g: &WeightedGraph, seed: u64, tol: f64) -> f64 {
    let n = g.n();
    let mut rng = seeded(seed);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in g.edges() {
        adj[e.i].push((e.j, e.w));
        adj[e.j].push((e.i, e.w));
    }
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let s = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            x.into_iter().map(|a| a / s).collect()
        })
        .collect();
    let value = |v: &Vec<Vec<f64>>| -> f64 {
        g.edges()
            .iter()
            .map(|e| {
                let d: f64 = v[e.i].iter().zip(&v[e.j]).map(|(a, b)| a * b).sum();
                e.w * (1.0 - d) / 2.0
            })
            .sum()
    };
    let mut last = value(&v);
    for _ in 0..100_000 {
        for i in 0..n {
            let mut s = vec![0.0; n];
            for &(j, w) in &adj[i] {
                for (a, b) in s.iter_mut().zip(&v[j]) {
                    *a -= w * b;
                }
            }
            let norm = s.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                v[i] = s.into_iter().map(|a| a / norm).collect();
            }
        }
        let cur = value(&v);
        if (cur - last).abs() <= tol {
            return cur;
        }
        last = cur;
    }
    last
}
