//! One-pass edge-stream sparsification with a bounded edge budget.
//!
//! Edges are kept by priority sampling: edge `e` draws `u_e ~ U(0, 1]` and
//! gets priority `w_e / u_e`; the `budget` highest priorities survive. With
//! `τ*` the largest priority ever evicted, a kept edge is reweighted to
//! `max(w_e, τ*)`, which makes every edge weight, and so every Laplacian
//! quadratic form, unbiased. While the stream fits in the budget nothing is
//! evicted and the output equals the input.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use ordered_float::OrderedFloat;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::{derive, fill_normal, SolverRng};

pub const DEFAULT_BUDGET_CONSTANT: f64 = 4.0;

/// Stream id of the sampling draws, distinct from the solver stream of the
/// same seed.
pub const SPARSIFY_STREAM: u64 = 0x5a;

/// `⌈c·n·ln(n)/τ²⌉`, at least 1.
pub fn edge_budget(n: usize, tau: f64, c: f64) -> usize {
    let n = n as f64;
    let b = (c * n * n.max(1.0).ln() / (tau * tau)).ceil();
    if b.is_finite() {
        (b as usize).max(1)
    } else {
        usize::MAX
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    w: f64,
    u: f64,
    /// Arrival index, so output keeps stream order.
    seq: usize,
}

#[derive(Debug, Clone)]
pub struct SparsifierState {
    n: usize,
    tau: f64,
    budget: usize,
    slots: HashMap<(usize, usize), Slot>,
    order: BTreeSet<(OrderedFloat<f64>, (usize, usize))>,
    threshold: f64,
    edges_seen: usize,
    mass_seen: f64,
    rng: SolverRng,
}

impl SparsifierState {
    pub fn new(n: usize, tau: f64, seed: u64) -> Result<Self> {
        Self::with_constant(n, tau, DEFAULT_BUDGET_CONSTANT, seed)
    }

    pub fn with_constant(n: usize, tau: f64, c: f64, seed: u64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tau must lie in (0, 1), got {tau}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "budget constant must be positive, got {c}"
            )));
        }
        Ok(Self::with_budget(n, tau, edge_budget(n, tau, c), seed))
    }

    /// Explicit budget, bypassing the `n log n / τ²` rule.
    pub fn with_budget(n: usize, tau: f64, budget: usize, seed: u64) -> Self {
        Self {
            n,
            tau,
            budget: budget.max(1),
            slots: HashMap::new(),
            order: BTreeSet::new(),
            threshold: 0.0,
            edges_seen: 0,
            mass_seen: 0.0,
            rng: derive(seed, SPARSIFY_STREAM),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn edges_seen(&self) -> usize {
        self.edges_seen
    }

    pub fn mass_seen(&self) -> f64 {
        self.mass_seen
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Largest evicted priority so far; zero while nothing was evicted.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Reservoir footprint in words: pair, weight, draw and arrival per slot,
    /// plus the priority index.
    pub fn words(&self) -> usize {
        8 * self.slots.len()
    }

    pub fn ingest(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if i == j {
            return Err(Error::InvalidGraph(format!("self loop at vertex {i}")));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidGraph(format!(
                "edge ({i}, {j}) out of range for n = {}",
                self.n
            )));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidGraph(format!(
                "edge ({i}, {j}) has weight {w}"
            )));
        }
        self.edges_seen += 1;
        self.mass_seen += w;
        let key = (i.min(j), i.max(j));
        let slot = match self.slots.get(&key) {
            Some(&s) => {
                self.order.remove(&(OrderedFloat(s.w / s.u), key));
                Slot { w: s.w + w, ..s }
            }
            None => {
                // (0, 1]: never divide by zero
                let u = 1.0 - self.rng.random::<f64>();
                Slot {
                    w,
                    u,
                    seq: self.edges_seen,
                }
            }
        };
        self.slots.insert(key, slot);
        self.order.insert((OrderedFloat(slot.w / slot.u), key));
        if self.slots.len() > self.budget {
            let (p, k) = self.order.pop_first().expect("reservoir is non-empty");
            self.slots.remove(&k);
            self.threshold = self.threshold.max(p.0);
        }
        Ok(())
    }

    /// The reweighted reservoir as a graph.
    pub fn finalize(&self) -> WeightedGraph {
        let mut edges: Vec<_> = self
            .slots
            .iter()
            .map(|(&(i, j), s)| {
                let w = if s.w > 0.0 {
                    s.w.max(self.threshold)
                } else {
                    0.0
                };
                (s.seq, i, j, w)
            })
            .collect();
        edges.sort_by_key(|e| e.0);
        WeightedGraph::new(self.n, edges.into_iter().map(|(_, i, j, w)| (i, j, w)))
            .expect("reservoir holds canonical edges")
    }
}

/// Sparsify a whole stream of `(i, j, w)` records.
pub fn sparsify_stream(
    n: usize,
    tau: f64,
    seed: u64,
    edges: impl IntoIterator<Item = (usize, usize, f64)>,
) -> Result<WeightedGraph> {
    let mut s = SparsifierState::new(n, tau, seed)?;
    for (i, j, w) in edges {
        s.ingest(i, j, w)?;
    }
    Ok(s.finalize())
}

/// Read whitespace-separated `i j w` lines with 1-based indices. Blank lines
/// and lines starting with `#` are skipped.
pub fn read_edge_stream<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, usize, f64)>> {
    reader.lines().enumerate().filter_map(|(idx, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            return None;
        }
        Some(parse_edge_line(t, idx + 1))
    })
}

fn parse_edge_line(t: &str, line: usize) -> Result<(usize, usize, f64)> {
    let f: Vec<&str> = t.split_whitespace().collect();
    if f.len() != 3 {
        return Err(Error::Parse {
            line,
            msg: format!("expected `i j w`, got {} fields", f.len()),
        });
    }
    let idx = |s: &str| -> Result<usize> {
        let v: usize = s.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad vertex index `{s}`"),
        })?;
        v.checked_sub(1).ok_or_else(|| Error::Parse {
            line,
            msg: "vertex indices are 1-based".into(),
        })
    };
    let w: f64 = f[2].parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad weight `{}`", f[2]),
    })?;
    Ok((idx(f[0])?, idx(f[1])?, w))
}

/// Largest `|xᵀL_H x / xᵀL_G x − 1|` over `trials` Gaussian directions and
/// the standard basis. Directions in the common null space are skipped; a
/// direction that is null for `G` only gives an infinite deviation.
pub fn audit_closeness<R: Rng + ?Sized>(
    g: &WeightedGraph,
    h: &WeightedGraph,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if g.n() != h.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            actual: h.n(),
        });
    }
    let n = g.n();
    let scale = g
        .total_weight()
        .max(h.total_weight())
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    let mut check = |x: &[f64]| {
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        let tol = 1e-12 * scale * norm2;
        let qg = g.laplacian_quadratic(x);
        let qh = h.laplacian_quadratic(x);
        if qg <= tol {
            if qh > tol {
                worst = f64::INFINITY;
            }
            return;
        }
        worst = worst.max((qh / qg - 1.0).abs());
    };
    let mut x = vec![0.0; n];
    for _ in 0..trials {
        fill_normal(rng, &mut x);
        check(&x);
    }
    for i in 0..n {
        x.fill(0.0);
        x[i] = 1.0;
        check(&x);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn short_stream_is_exact() {
        let edges = [(0, 1, 1.0), (1, 2, 2.5), (0, 3, 0.0)];
        let out = sparsify_stream(4, 0.3, 1, edges).unwrap();
        assert_eq!(out, WeightedGraph::new(4, edges).unwrap());
        assert_eq!(sparsify_stream(5, 0.3, 1, []).unwrap().num_edges(), 0);
    }

    #[test]
    fn duplicates_accumulate() {
        let out = sparsify_stream(3, 0.3, 1, [(0, 1, 1.0), (2, 1, 1.0), (1, 0, 0.5)]).unwrap();
        assert_eq!(
            out,
            WeightedGraph::new(3, [(0, 1, 1.5), (1, 2, 1.0)]).unwrap()
        );
    }

    #[test]
    fn reservoir_never_exceeds_budget() {
        let mut s = SparsifierState::with_budget(50, 0.3, 20, 3);
        for i in 0..50 {
            for j in i + 1..50 {
                s.ingest(i, j, 1.0 + (i * j % 7) as f64).unwrap();
                assert!(s.len() <= 20);
            }
        }
        assert_eq!(s.finalize().num_edges(), 20);
        assert!(s.threshold() > 0.0);
    }

    #[test]
    fn rejects_bad_edges() {
        let mut s = SparsifierState::new(3, 0.5, 0).unwrap();
        assert!(s.ingest(1, 1, 1.0).is_err());
        assert!(s.ingest(0, 3, 1.0).is_err());
        assert!(s.ingest(0, 1, f64::NAN).is_err());
        assert!(SparsifierState::new(3, 1.5, 0).is_err());
    }

    #[test]
    fn audit_examples() {
        let g =
            WeightedGraph::new(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (0, 3, 1.0)]).unwrap();
        let mut rng = seeded(0);
        assert_eq!(audit_closeness(&g, &g, 20, &mut rng).unwrap(), 0.0);
        let g2 = WeightedGraph::new(4, g.edges().iter().map(|e| (e.i, e.j, 2.0 * e.w))).unwrap();
        assert_eq!(audit_closeness(&g, &g2, 20, &mut rng).unwrap(), 1.0);
    }

    #[test]
    fn edge_stream_format() {
        let text = "# comment\n1 2 1.5\n\n3 1 2\n";
        let e: Vec<_> = read_edge_stream(text.as_bytes())
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(e, vec![(0, 1, 1.5), (2, 0, 2.0)]);
        let bad: Result<Vec<_>> = read_edge_stream("1 2\n".as_bytes()).collect();
        assert!(matches!(bad, Err(Error::Parse { line: 1, .. })));
        let zero: Result<Vec<_>> = read_edge_stream("0 2 1\n".as_bytes()).collect();
        assert!(zero.is_err());
    }

    #[test]
    fn budget_formula() {
        assert_eq!(
            edge_budget(10, 0.2, 4.0),
            (4.0 * 10.0 * 10f64.ln() / 0.04).ceil() as usize
        );
    }
}
