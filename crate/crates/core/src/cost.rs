//! Sparse symmetric cost matrices supported on the diagonal and the edge set.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{Sign, SignedGraph, WeightedGraph};
use crate::linalg::SymmetricOperator;

/// A symmetric matrix with nonzeros only on the diagonal and on a fixed list
/// of off-diagonal pairs. Each pair `(i, j)` is stored once with coefficient
/// `c_ij` and contributes to both `(i, j)` and `(j, i)`.
///
/// The pair list doubles as the constraint edge set of the relaxation: the
/// constraint image and the gradient operator are indexed the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct CostOperator {
    n: usize,
    diagonal: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    coeffs: Vec<f64>,
    trace: f64,
}

impl CostOperator {
    pub fn new(diagonal: Vec<f64>, pairs: Vec<(usize, usize)>, coeffs: Vec<f64>) -> Result<Self> {
        let n = diagonal.len();
        if pairs.len() != coeffs.len() {
            return Err(Error::Dimension {
                expected: pairs.len(),
                actual: coeffs.len(),
            });
        }
        for &(i, j) in &pairs {
            if i >= j || j >= n {
                return Err(Error::InvalidGraph(format!("bad support pair ({i}, {j})")));
            }
        }
        if diagonal.iter().chain(&coeffs).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("cost coefficients"));
        }
        let trace = diagonal.iter().sum();
        Ok(Self {
            n,
            diagonal,
            pairs,
            coeffs,
            trace,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Storage in 8-byte words (indices counted as one word each).
    pub fn words(&self) -> usize {
        self.n + 3 * self.pairs.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut c = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&self.diagonal));
        for (&(i, j), &cij) in self.pairs.iter().zip(&self.coeffs) {
            c[(i, j)] += cij;
            c[(j, i)] += cij;
        }
        c
    }
}

impl SymmetricOperator for CostOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.diagonal) {
            *yi = di * xi;
        }
        for (&(i, j), &c) in self.pairs.iter().zip(&self.coeffs) {
            y[i] += c * x[j];
            y[j] += c * x[i];
        }
    }
}

/// `C = ((k−1)/2k)·L_G`, supported on the edges of `g`.
pub fn build_cost_maxkcut(g: &WeightedGraph, k: usize) -> Result<CostOperator> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let s = (k as f64 - 1.0) / (2.0 * k as f64);
    let diagonal = g.weighted_degrees().into_iter().map(|d| s * d).collect();
    let pairs = g.edges().iter().map(|e| e.pair()).collect();
    let coeffs = g.edges().iter().map(|e| -s * e.w).collect();
    CostOperator::new(diagonal, pairs, coeffs)
}

/// `C = L_{G⁻} + W⁺` together with `Δ = Tr(L_{G⁻}) + Σ w⁺`.
///
/// Pairs are ordered plus edges first, then minus edges.
pub fn build_cost_maxagree(sg: &SignedGraph) -> Result<(CostOperator, f64)> {
    let mut diagonal = vec![0.0; sg.n()];
    let mut pairs = Vec::with_capacity(sg.num_edges());
    let mut coeffs = Vec::with_capacity(sg.num_edges());
    let mut plus_mass = 0.0;
    for (sign, e) in sg.edges() {
        pairs.push(e.pair());
        match sign {
            Sign::Plus => {
                coeffs.push(e.w);
                plus_mass += e.w;
            }
            Sign::Minus => {
                coeffs.push(-e.w);
                diagonal[e.i] += e.w;
                diagonal[e.j] += e.w;
            }
        }
    }
    let cost = CostOperator::new(diagonal, pairs, coeffs)?;
    let delta = cost.trace() + plus_mass;
    Ok((cost, delta))
}
