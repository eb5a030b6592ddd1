//! Multi-output least squares with intercept.
//!
//! Every output column is an independent ordinary-least-squares fit; they
//! share one factorization of the centered normal equations. When the
//! normal matrix is singular or numerically close to it (duplicated or
//! constant features, fewer samples than features) the solver falls back
//! to a ridge of `1e-8 · trace(G) / k` and removes the ridge bias with a
//! few rounds of iterated refinement, which converges to the minimum-norm
//! least-squares solution.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

const RIDGE_SCALE: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-12;
const REFINE_STEPS: usize = 6;

/// Coefficients of `q` linear models sharing `k` input features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Row-major `k × q`.
    weights: Vec<f64>,
    intercepts: Vec<f64>,
    n_features: usize,
    /// Whether the ridge fallback was used.
    regularized: bool,
}

impl LinearFit {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_outputs(&self) -> usize {
        self.intercepts.len()
    }

    pub fn regularized(&self) -> bool {
        self.regularized
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn weight(&self, feature: usize, output: usize) -> f64 {
        self.weights[feature * self.intercepts.len() + output]
    }

    /// Predicts all outputs for one feature row.
    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_features);
        let q = self.intercepts.len();
        let mut out = self.intercepts.clone();
        for (j, xv) in x.iter().enumerate() {
            let row = &self.weights[j * q..(j + 1) * q];
            out.iter_mut().zip(row).for_each(|(o, w)| *o += xv * w);
        }
        out
    }
}

/// Fits `y[:, j] ≈ x · w_j + b_j` for every output column `j`.
///
/// `x` is `n × k` and `y` is `n × q`, both given as rows. Requires `n ≥ 1`.
pub fn least_squares<X: AsRef<[f64]>, Y: AsRef<[f64]>>(x: &[X], y: &[Y]) -> LinearFit {
    let n = x.len();
    assert!(n > 0 && n == y.len(), "least_squares needs matching non-empty rows");
    let k = x[0].as_ref().len();
    let q = y[0].as_ref().len();

    let x_mean = column_means(x, k);
    let y_mean = column_means(y, q);

    if k == 0 {
        return LinearFit {
            weights: Vec::new(),
            intercepts: y_mean,
            n_features: 0,
            regularized: false,
        };
    }

    let xc = DMatrix::from_fn(n, k, |i, j| x[i].as_ref()[j] - x_mean[j]);
    let yc = DMatrix::from_fn(n, q, |i, j| y[i].as_ref()[j] - y_mean[j]);
    let gram = xc.tr_mul(&xc);
    let rhs = xc.tr_mul(&yc);

    let (w, regularized) = match well_conditioned_cholesky(&gram) {
        Some(chol) => (chol.solve(&rhs), false),
        None => (refined_ridge(&gram, &rhs), true),
    };

    let mut intercepts = y_mean;
    for (o, b) in intercepts.iter_mut().enumerate() {
        *b -= (0..k).map(|j| w[(j, o)] * x_mean[j]).sum::<f64>();
    }
    let mut weights = vec![0.0; k * q];
    for j in 0..k {
        for o in 0..q {
            weights[j * q + o] = w[(j, o)];
        }
    }
    LinearFit {
        weights,
        intercepts,
        n_features: k,
        regularized,
    }
}

fn column_means<R: AsRef<[f64]>>(rows: &[R], width: usize) -> Vec<f64> {
    let mut m = vec![0.0; width];
    for r in rows {
        m.iter_mut().zip(r.as_ref()).for_each(|(a, v)| *a += v);
    }
    let n = rows.len() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

fn well_conditioned_cholesky(gram: &DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let max_diag = gram.diagonal().iter().cloned().fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return None;
    }
    let chol = Cholesky::new(gram.clone())?;
    let l = chol.l_dirty();
    let min_pivot = (0..gram.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if min_pivot / max_diag < PIVOT_TOL {
        return None;
    }
    Some(chol)
}

fn refined_ridge(gram: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let k = gram.nrows();
    let trace = gram.trace();
    if trace <= 0.0 {
        return DMatrix::zeros(k, rhs.ncols());
    }
    let lambda = RIDGE_SCALE * trace / k as f64;
    let shifted = gram + DMatrix::<f64>::identity(k, k) * lambda;
    let chol = Cholesky::new(shifted).expect("ridge-shifted Gram matrix is positive definite");
    let mut w = DMatrix::zeros(k, rhs.ncols());
    for _ in 0..REFINE_STEPS {
        let resid = rhs - gram * &w;
        w += chol.solve(&resid);
    }
    w
}
