//! Small dense-vector helpers and the matrix-free operator trait.

use nalgebra::DMatrix;

/// A symmetric linear map `Rⁿ → Rⁿ` accessed only through products.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// `y ← A x`. `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        dot(x, &y)
    }
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (r, yr) in y.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for (c, xc) in x.iter().enumerate() {
                acc += self[(r, c)] * xc;
            }
            *yr = acc;
        }
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

/// Inner product with eight fixed accumulators; the summation order depends
/// only on the length, so results are reproducible.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y ← y + s·x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn scale(s: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= s;
    }
}
