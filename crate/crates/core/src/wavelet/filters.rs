//! Daubechies filter banks.
//!
//! Filters are not read from a table. They come from the spectral
//! factorization of the Daubechies polynomial
//! `P(y) = sum_{k<M} C(M-1+k, k) y^k` with `y = sin^2(w/2)`: every root of
//! `P` maps to a reciprocal pair of roots in `z`, the one inside the unit
//! circle is kept (minimum phase), and the result is multiplied by the
//! `(1+z)^M` factor that carries the vanishing moments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_ORDER: usize = 1;
pub const MAX_ORDER: usize = 7;

/// Analysis and synthesis filters of one Daubechies wavelet `dbM`.
///
/// `lp` is ordered so that `db2` reads `[(1+√3), (3+√3), (3-√3), (1-√3)] / 4√2`.
/// The high-pass filter follows the quadrature-mirror relation
/// `hp[k] = (-1)^k lp[F-1-k]`, and the reconstruction filters are the exact
/// time reversals of the decomposition filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPair {
    order: usize,
    lp: Vec<f64>,
    hp: Vec<f64>,
    lp_r: Vec<f64>,
    hp_r: Vec<f64>,
}

impl FilterPair {
    /// Number of vanishing moments `M`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Filter length `F = 2M`.
    pub fn len(&self) -> usize {
        self.lp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lp.is_empty()
    }

    pub fn lp(&self) -> &[f64] {
        &self.lp
    }

    pub fn hp(&self) -> &[f64] {
        &self.hp
    }

    pub fn lp_r(&self) -> &[f64] {
        &self.lp_r
    }

    pub fn hp_r(&self) -> &[f64] {
        &self.hp_r
    }

    /// Name in the usual `dbM` spelling.
    pub fn name(&self) -> String {
        format!("db{}", self.order)
    }
}

/// Builds the `dbM` filter bank for `order` in `1..=7`.
pub fn daubechies_filters(order: usize) -> Result<FilterPair> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let lp = scaling_filter(order);
    let f = lp.len();
    let hp: Vec<f64> = (0..f)
        .map(|k| if k % 2 == 0 { lp[f - 1 - k] } else { -lp[f - 1 - k] })
        .collect();
    let lp_r: Vec<f64> = lp.iter().rev().copied().collect();
    let hp_r: Vec<f64> = hp.iter().rev().copied().collect();
    Ok(FilterPair {
        order,
        lp,
        hp,
        lp_r,
        hp_r,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn scaling_filter(order: usize) -> Vec<f64> {
    // Ascending coefficients of P(y).
    let p: Vec<f64> = (0..order).map(|k| binomial(order - 1 + k, k)).collect();
    let y_roots = polynomial_roots(&p);

    // y = (2 - z - 1/z) / 4  <=>  z^2 - (2 - 4y) z + 1 = 0
    let mut z_roots = Vec::with_capacity(y_roots.len() + order);
    for y in y_roots {
        let b = Complex64::new(2.0, 0.0) - 4.0 * y;
        let disc = (b * b - 4.0).sqrt();
        let z1 = (b + disc) / 2.0;
        let z2 = (b - disc) / 2.0;
        z_roots.push(if z1.norm() < z2.norm() { z1 } else { z2 });
    }
    z_roots.extend(std::iter::repeat(Complex64::new(-1.0, 0.0)).take(order));

    // Expand prod (z - r) in ascending powers.
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for r in &z_roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        poly = next;
    }

    let mut h: Vec<f64> = poly.iter().rev().map(|c| c.re).collect();
    let sum: f64 = h.iter().sum();
    let scale = std::f64::consts::SQRT_2 / sum;
    h.iter_mut().for_each(|v| *v *= scale);
    h
}

/// Roots of the polynomial with ascending real coefficients `coeffs`
/// (Durand–Kerner iteration followed by Newton polishing).
fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    let monic: Vec<Complex64> = coeffs
        .iter()
        .map(|c| Complex64::new(c / lead, 0.0))
        .collect();
    let eval = |x: Complex64| monic.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c);
    let eval_deriv = |x: Complex64| {
        monic
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (i, c)| acc * x + c * i as f64)
    };

    let radius = 1.0 + monic[..degree].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| seed.powu(k as u32) * radius.min(10.0))
        .collect();

    for _ in 0..2000 {
        let mut delta = 0.0_f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }

    for r in roots.iter_mut() {
        for _ in 0..5 {
            let d = eval_deriv(*r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= eval(*r) / d;
        }
    }
    roots
}
