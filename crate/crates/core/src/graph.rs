//! Graph inputs: weighted graphs, signed graphs, GSet text I/O and the
//! Jaccard-based conversion from an unlabeled graph to a signed one.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

impl Edge {
    pub fn pair(&self) -> (usize, usize) {
        (self.i, self.j)
    }
}

fn canonical(n: usize, i: usize, j: usize, w: f64) -> std::result::Result<Edge, String> {
    if i >= n || j >= n {
        return Err(format!("vertex index out of range ({i}, {j}) for n = {n}"));
    }
    if i == j {
        return Err(format!("self loop at vertex {i}"));
    }
    if !w.is_finite() {
        return Err(format!("non-finite weight on edge ({i}, {j})"));
    }
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    Ok(Edge { i, j, w })
}

/// Vertex count plus a canonical undirected edge list.
///
/// Every edge satisfies `i < j < n`, no unordered pair appears twice and all
/// weights are finite. Zero-weight edges are kept: they still contribute a
/// constraint to the relaxations built on top of the edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (i, j, w) in edges {
            let e = canonical(n, i, j, w).map_err(Error::InvalidGraph)?;
            if !seen.insert(e.pair()) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.i, e.j
                )));
            }
            out.push(e);
        }
        Ok(Self { n, edges: out })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn weighted_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for e in &self.edges {
            deg[e.i] += e.w;
            deg[e.j] += e.w;
        }
        deg
    }

    /// Adjacency sets, ignoring weights.
    pub fn neighborhoods(&self) -> Vec<HashSet<usize>> {
        let mut nb = vec![HashSet::new(); self.n];
        for e in &self.edges {
            nb[e.i].insert(e.j);
            nb[e.j].insert(e.i);
        }
        nb
    }

    /// `xᵀ L x = Σ w_ij (x_i − x_j)²`.
    pub fn laplacian_quadratic(&self, x: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|e| {
                let d = x[e.i] - x[e.j];
                e.w * d * d
            })
            .sum()
    }

    /// Dense Laplacian. Only for verification on small instances.
    pub fn dense_laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.i, e.i)] += e.w;
            l[(e.j, e.j)] += e.w;
            l[(e.i, e.j)] -= e.w;
            l[(e.j, e.i)] -= e.w;
        }
        l
    }

    /// GSet text: `n m` header followed by 1-indexed `i j w` lines.
    pub fn to_gset(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.edges.len());
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", e.i + 1, e.j + 1, e.w);
        }
        s
    }
}

/// Parse GSet text from a string.
pub fn parse_gset(text: &str) -> Result<WeightedGraph> {
    read_gset(text.as_bytes())
}

/// Parse GSet text from any buffered reader.
pub fn read_gset<R: BufRead>(reader: R) -> Result<WeightedGraph> {
    let mut lines = reader.lines().enumerate();
    let (n, m) = loop {
        let Some((idx, line)) = lines.next() else {
            return Err(Error::parse(1, "missing header"));
        };
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut it = t.split_whitespace();
        let n = parse_field::<usize>(it.next(), idx + 1, "vertex count")?;
        let m = parse_field::<usize>(it.next(), idx + 1, "edge count")?;
        if it.next().is_some() {
            return Err(Error::parse(
                idx + 1,
                "header must hold exactly two integers",
            ));
        }
        if n == 0 {
            return Err(Error::parse(idx + 1, "vertex count must be positive"));
        }
        break (n, m);
    };

    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if edges.len() == m {
            return Err(Error::parse(lineno, format!("more than {m} edge lines")));
        }
        let mut it = t.split_whitespace();
        let i = parse_field::<usize>(it.next(), lineno, "source vertex")?;
        let j = parse_field::<usize>(it.next(), lineno, "target vertex")?;
        let w = parse_field::<f64>(it.next(), lineno, "weight")?;
        if it.next().is_some() {
            return Err(Error::parse(lineno, "trailing fields"));
        }
        if i == 0 || j == 0 {
            return Err(Error::parse(lineno, "vertex indices are 1-based"));
        }
        let e = canonical(n, i - 1, j - 1, w).map_err(|msg| Error::parse(lineno, msg))?;
        if !seen.insert(e.pair()) {
            return Err(Error::parse(lineno, format!("duplicate edge ({i}, {j})")));
        }
        edges.push(e);
    }
    if edges.len() != m {
        return Err(Error::parse(
            0,
            format!("header declares {m} edges but {} were found", edges.len()),
        ));
    }
    Ok(WeightedGraph { n, edges })
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("malformed {what} '{tok}'")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// One line of the signed-graph JSON-lines interchange format.
/// Indices are 0-based; `sign` is `1` for similar and `-1` for dissimilar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedEdgeRecord {
    pub i: usize,
    pub j: usize,
    pub sign: i8,
    pub w: f64,
}

/// Similar (`plus`) and dissimilar (`minus`) edges over a shared vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGraph {
    n: usize,
    plus: Vec<Edge>,
    minus: Vec<Edge>,
}

impl SignedGraph {
    /// Weights must be finite and nonnegative, and the two edge sets must be
    /// disjoint as unordered pairs.
    pub fn new(
        n: usize,
        plus: impl IntoIterator<Item = (usize, usize, f64)>,
        minus: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut build =
            |edges: &mut dyn Iterator<Item = (usize, usize, f64)>| -> Result<Vec<Edge>> {
                let mut out = Vec::new();
                for (i, j, w) in edges {
                    let e = canonical(n, i, j, w).map_err(Error::InvalidGraph)?;
                    if e.w < 0.0 {
                        return Err(Error::InvalidGraph(format!(
                            "negative signed-edge weight on ({}, {})",
                            e.i, e.j
                        )));
                    }
                    if !seen.insert(e.pair()) {
                        return Err(Error::InvalidGraph(format!(
                            "pair ({}, {}) appears more than once",
                            e.i, e.j
                        )));
                    }
                    out.push(e);
                }
                Ok(out)
            };
        let plus = build(&mut plus.into_iter())?;
        let minus = build(&mut minus.into_iter())?;
        Ok(Self { n, plus, minus })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn plus_edges(&self) -> &[Edge] {
        &self.plus
    }

    pub fn minus_edges(&self) -> &[Edge] {
        &self.minus
    }

    pub fn num_edges(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    /// All edges, plus edges first. This is the constraint order used by
    /// the Max-Agree cost operator.
    pub fn edges(&self) -> impl Iterator<Item = (Sign, &Edge)> {
        self.plus
            .iter()
            .map(|e| (Sign::Plus, e))
            .chain(self.minus.iter().map(|e| (Sign::Minus, e)))
    }

    pub fn total_weight(&self) -> f64 {
        self.plus.iter().chain(&self.minus).map(|e| e.w).sum()
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for (sign, e) in self.edges() {
            let rec = SignedEdgeRecord {
                i: e.i,
                j: e.j,
                sign: if sign == Sign::Plus { 1 } else { -1 },
                w: e.w,
            };
            s.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            s.push('\n');
        }
        s
    }

    /// Parse JSON lines. The vertex count is `n` if given, otherwise one
    /// more than the largest index seen.
    pub fn from_jsonl(text: &str, n: Option<usize>) -> Result<Self> {
        let mut recs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let rec: SignedEdgeRecord =
                serde_json::from_str(t).map_err(|e| Error::parse(idx + 1, e.to_string()))?;
            if rec.sign != 1 && rec.sign != -1 {
                return Err(Error::parse(idx + 1, "sign must be 1 or -1"));
            }
            recs.push(rec);
        }
        let n = n.unwrap_or_else(|| recs.iter().map(|r| r.i.max(r.j) + 1).max().unwrap_or(0));
        let plus = recs.iter().filter(|r| r.sign == 1).map(|r| (r.i, r.j, r.w));
        let minus = recs
            .iter()
            .filter(|r| r.sign == -1)
            .map(|r| (r.i, r.j, r.w));
        Self::new(n, plus.collect::<Vec<_>>(), minus.collect::<Vec<_>>())
    }
}

/// `log((1 − J + δ) / (1 + J − δ))` for a Jaccard coefficient `J`.
pub fn jaccard_similarity_score(jaccard: f64, delta: f64) -> f64 {
    ((1.0 - jaccard + delta) / (1.0 + jaccard - delta)).ln()
}

/// Label every edge of `g` from the Jaccard coefficient of its endpoint
/// neighborhoods (weights ignored). A negative score makes the edge
/// dissimilar with weight `−S`; otherwise it is similar with weight `S`.
///
/// High overlap yields a negative score, so strongly overlapping endpoints
/// end up dissimilar. This is the rule as used for the GSet experiments and
/// is kept verbatim.
pub fn jaccard_signed_graph(g: &WeightedGraph, delta: f64) -> Result<SignedGraph> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "jaccard offset must lie in (0, 1), got {delta}"
        )));
    }
    let nb = g.neighborhoods();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for e in g.edges() {
        let (a, b) = (&nb[e.i], &nb[e.j]);
        let inter = a.intersection(b).count();
        let union = a.len() + b.len() - inter;
        let jac = if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        };
        let s = jaccard_similarity_score(jac, delta);
        if s < 0.0 {
            minus.push((e.i, e.j, -s));
        } else {
            plus.push((e.i, e.j, s));
        }
    }
    SignedGraph::new(g.n(), plus, minus)
}
