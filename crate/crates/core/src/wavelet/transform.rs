//! Single-level DWT and the multi-level stationary (undecimated) transform.
//!
//! Alignment convention, shared by every routine here: output coefficient
//! `n` is the correlation of the filter with the signal window that starts
//! at input index `n` (index `2n` for the decimated transform), with
//! circular wrap-around. At level `l` of the stationary transform the
//! filter taps are spaced `2^(l-1)` samples apart.

use serde::{Deserialize, Serialize};

use super::filters::FilterPair;
use crate::error::{shape_err, Error, Result};

pub const MAX_LEVEL: usize = 4;

/// Boundary treatment of the single-level DWT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extension {
    /// Circular wrap-around. The only mode; signal extension is done
    /// explicitly by [`crate::padding`] before a transform.
    #[default]
    Periodic,
}

/// Coefficients of a stationary wavelet transform at level `DL`.
///
/// Holds `cA_DL` and `cD_1..cD_DL`, each as long as the analyzed signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwtCoefficients {
    approx: Vec<f64>,
    details: Vec<Vec<f64>>,
}

impl SwtCoefficients {
    /// Assembles coefficients, checking that all bands share one length.
    pub fn new(approx: Vec<f64>, details: Vec<Vec<f64>>) -> Result<Self> {
        if details.is_empty() {
            return Err(shape_err("at least one detail band is required"));
        }
        let n = approx.len();
        if let Some((l, d)) = details.iter().enumerate().find(|(_, d)| d.len() != n) {
            return Err(shape_err(format!(
                "detail band {} has length {}, approximation has {}",
                l + 1,
                d.len(),
                n
            )));
        }
        Ok(Self { approx, details })
    }

    pub fn level(&self) -> usize {
        self.details.len()
    }

    pub fn signal_len(&self) -> usize {
        self.approx.len()
    }

    /// `DL + 1`.
    pub fn n_coeff(&self) -> usize {
        self.details.len() + 1
    }

    /// `cA_DL`.
    pub fn approx(&self) -> &[f64] {
        &self.approx
    }

    /// `cD_l` for `l` in `1..=DL`.
    pub fn detail(&self, l: usize) -> &[f64] {
        &self.details[l - 1]
    }

    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    /// Bands in feature order: `cA_DL, cD_DL, ..., cD_1`.
    pub fn bands(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.approx.as_slice()).chain(self.details.iter().rev().map(|d| d.as_slice()))
    }
}

/// Time-domain components `A_DL` and `D_1..D_DL`; they sum to the signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSet {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
}

impl ComponentSet {
    pub fn level(&self) -> usize {
        self.details.len()
    }

    /// Components in the same order as [`SwtCoefficients::bands`].
    pub fn components(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.approx.as_slice()).chain(self.details.iter().rev().map(|d| d.as_slice()))
    }

    /// Pointwise sum of all components.
    pub fn sum(&self) -> Vec<f64> {
        let mut out = self.approx.clone();
        for d in &self.details {
            out.iter_mut().zip(d).for_each(|(o, v)| *o += v);
        }
        out
    }
}

/// One analysis stage: decimated correlation with `lp` and `hp`.
pub fn dwt_single_level(signal: &[f64], f: &FilterPair, _boundary: Extension) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = signal.len();
    if n % 2 != 0 {
        return Err(shape_err(format!("DWT needs an even-length signal, got {n}")));
    }
    if n < f.len() {
        return Err(shape_err(format!(
            "signal of length {n} is shorter than the {}-tap filter",
            f.len()
        )));
    }
    let half = n / 2;
    let mut ca = vec![0.0; half];
    let mut cd = vec![0.0; half];
    for i in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (k, (l, h)) in f.lp().iter().zip(f.hp()).enumerate() {
            let x = signal[(2 * i + k) % n];
            a += l * x;
            d += h * x;
        }
        ca[i] = a;
        cd[i] = d;
    }
    Ok((ca, cd))
}

/// Inverse of [`dwt_single_level`]: zero-insertion upsampling followed by
/// correlation with the time-reversed filters `lp_r`, `hp_r`.
pub fn idwt_single_level(ca: &[f64], cd: &[f64], f: &FilterPair) -> Result<Vec<f64>> {
    if ca.len() != cd.len() {
        return Err(shape_err(format!(
            "approximation has {} coefficients, detail has {}",
            ca.len(),
            cd.len()
        )));
    }
    let n = 2 * ca.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut ua = vec![0.0; n];
    let mut ud = vec![0.0; n];
    for i in 0..ca.len() {
        ua[2 * i] = ca[i];
        ud[2 * i] = cd[i];
    }
    let taps = f.len();
    let mut out = vec![0.0; n];
    for (m, o) in out.iter_mut().enumerate() {
        // window starts at m - (F - 1)
        let start = (m + n * taps - (taps - 1)) % n;
        let mut acc = 0.0;
        for (j, (lr, hr)) in f.lp_r().iter().zip(f.hp_r()).enumerate() {
            let idx = (start + j) % n;
            acc += lr * ua[idx] + hr * ud[idx];
        }
        *o = acc;
    }
    Ok(out)
}

fn check_level(level: usize) -> Result<()> {
    if !(1..=MAX_LEVEL).contains(&level) {
        return Err(Error::UnsupportedLevel(level));
    }
    Ok(())
}

/// Stationary wavelet transform to `level` with circular convolution.
///
/// The signal length must be a multiple of `2^level`.
pub fn swt(signal: &[f64], f: &FilterPair, level: usize) -> Result<SwtCoefficients> {
    check_level(level)?;
    let n = signal.len();
    let required = 1usize << level;
    if n == 0 || n % required != 0 {
        return Err(Error::Divisibility { len: n, required });
    }
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(level);
    for l in 1..=level {
        let step = 1usize << (l - 1);
        let (a, d) = analysis_stage(&approx, f, step);
        approx = a;
        details.push(d);
    }
    Ok(SwtCoefficients { approx, details })
}

fn analysis_stage(x: &[f64], f: &FilterPair, step: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut a = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let (mut sa, mut sd) = (0.0, 0.0);
        for (k, (l, h)) in f.lp().iter().zip(f.hp()).enumerate() {
            let v = x[(i + k * step) % n];
            sa += l * v;
            sd += h * v;
        }
        a[i] = sa;
        d[i] = sd;
    }
    (a, d)
}

/// Undoes one undecimated stage: the average of the inverses of the even
/// and odd decimations, which for periodic orthonormal filters is
/// `(Lᵀa + Hᵀd) / 2`.
fn synthesis_stage(a: &[f64], d: Option<&[f64]>, f: &FilterPair, step: usize) -> Vec<f64> {
    let n = a.len();
    let taps = f.len();
    let mut out = vec![0.0; n];
    for (m, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..taps {
            // lp_r[j] == lp[taps - 1 - j]
            let back = (taps - 1 - j) * step % n;
            let idx = (m + n - back) % n;
            acc += f.lp_r()[j] * a[idx];
            if let Some(d) = d {
                acc += f.hp_r()[j] * d[idx];
            }
        }
        *o = 0.5 * acc;
    }
    out
}

fn validate(coeffs: &SwtCoefficients) -> Result<()> {
    check_level(coeffs.level())?;
    let n = coeffs.signal_len();
    let required = 1usize << coeffs.level();
    if n == 0 || n % required != 0 {
        return Err(Error::Divisibility { len: n, required });
    }
    if coeffs.details.iter().any(|d| d.len() != n) {
        return Err(shape_err("coefficient bands differ in length"));
    }
    Ok(())
}

/// Inverse stationary wavelet transform.
pub fn iswt(coeffs: &SwtCoefficients, f: &FilterPair) -> Result<Vec<f64>> {
    validate(coeffs)?;
    let mut approx = coeffs.approx.clone();
    for l in (1..=coeffs.level()).rev() {
        let step = 1usize << (l - 1);
        approx = synthesis_stage(&approx, Some(&coeffs.details[l - 1]), f, step);
    }
    Ok(approx)
}

/// Reconstructs `A_DL` and every `D_l` by inverting one band with all
/// others zeroed.
pub fn reconstruct_components(coeffs: &SwtCoefficients, f: &FilterPair) -> Result<ComponentSet> {
    validate(coeffs)?;
    let level = coeffs.level();
    let n = coeffs.signal_len();
    let zeros = vec![0.0; n];

    let mut approx = coeffs.approx.clone();
    for l in (1..=level).rev() {
        approx = synthesis_stage(&approx, None, f, 1 << (l - 1));
    }

    let mut details = Vec::with_capacity(level);
    for band in 1..=level {
        let mut x = synthesis_stage(&zeros, Some(&coeffs.details[band - 1]), f, 1 << (band - 1));
        for l in (1..band).rev() {
            x = synthesis_stage(&x, None, f, 1 << (l - 1));
        }
        details.push(x);
    }
    Ok(ComponentSet { approx, details })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::daubechies_filters;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn haar_constant_kills_detail() {
        let haar = daubechies_filters(1).unwrap();
        let (ca, cd) = dwt_single_level(&[3.0; 4], &haar, Extension::Periodic).unwrap();
        let want = 3.0 * std::f64::consts::SQRT_2;
        assert!(ca.iter().all(|v| (v - want).abs() < 1e-14));
        assert!(cd.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn haar_ramp_by_hand() {
        // cA[n] = (x[2n] + x[2n+1]) / √2, cD[n] = (x[2n] - x[2n+1]) / √2
        let haar = daubechies_filters(1).unwrap();
        let (ca, cd) = dwt_single_level(&[1.0, 2.0, 3.0, 4.0], &haar, Extension::Periodic).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((ca[0] - 3.0 * s).abs() < 1e-14);
        assert!((ca[1] - 7.0 * s).abs() < 1e-14);
        assert!((cd[0] + s).abs() < 1e-14);
        assert!((cd[1] + s).abs() < 1e-14);
    }

    #[test]
    fn dwt_rejects_odd_and_short() {
        let db2 = daubechies_filters(2).unwrap();
        assert!(matches!(
            dwt_single_level(&[1.0; 5], &db2, Extension::Periodic),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            dwt_single_level(&[1.0; 2], &db2, Extension::Periodic),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn idwt_inverts_dwt() {
        for m in 1..=7 {
            let f = daubechies_filters(m).unwrap();
            let x = random(16, m as u64);
            let (ca, cd) = dwt_single_level(&x, &f, Extension::Periodic).unwrap();
            let y = idwt_single_level(&ca, &cd, &f).unwrap();
            assert!(max_abs_diff(&x, &y) < 1e-12, "db{m}");
        }
    }

    #[test]
    fn dwt_inverts_idwt_db3() {
        let f = daubechies_filters(3).unwrap();
        let ca = random(8, 11);
        let cd = random(8, 12);
        let x = idwt_single_level(&ca, &cd, &f).unwrap();
        let (ca2, cd2) = dwt_single_level(&x, &f, Extension::Periodic).unwrap();
        assert!(max_abs_diff(&ca, &ca2) < 1e-12);
        assert!(max_abs_diff(&cd, &cd2) < 1e-12);
    }

    #[test]
    fn idwt_haar_constant_and_zero() {
        let haar = daubechies_filters(1).unwrap();
        let r2 = std::f64::consts::SQRT_2;
        let x = idwt_single_level(&[r2, r2], &[0.0, 0.0], &haar).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let z = idwt_single_level(&[0.0; 4], &[0.0; 4], &haar).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        assert!(idwt_single_level(&[0.0; 3], &[0.0; 4], &haar).is_err());
    }

    #[test]
    fn swt_constant_haar() {
        let haar = daubechies_filters(1).unwrap();
        let c = swt(&[2.5; 8], &haar, 1).unwrap();
        assert_eq!(c.n_coeff(), 2);
        assert!(c.approx().iter().all(|v| (v - 2.5 * std::f64::consts::SQRT_2).abs() < 1e-14));
        assert!(c.detail(1).iter().all(|v| v.abs() < 1e-14));
        let back = iswt(&c, &haar).unwrap();
        assert!(back.iter().all(|v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn swt_divisibility_error_names_multiple() {
        let f = daubechies_filters(2).unwrap();
        match swt(&[0.0; 12], &f, 3) {
            Err(Error::Divisibility { len: 12, required: 8 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(swt(&[0.0; 16], &f, 5), Err(Error::UnsupportedLevel(5))));
    }

    #[test]
    fn iswt_of_zero_is_zero() {
        let f = daubechies_filters(4).unwrap();
        let c = SwtCoefficients::new(vec![0.0; 16], vec![vec![0.0; 16]; 2]).unwrap();
        assert!(iswt(&c, &f).unwrap().iter().all(|v| *v == 0.0));
        let comps = reconstruct_components(&c, &f).unwrap();
        assert!(comps.sum().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn malformed_coefficients_rejected() {
        assert!(SwtCoefficients::new(vec![0.0; 16], vec![vec![0.0; 15]]).is_err());
        let f = daubechies_filters(1).unwrap();
        let c = SwtCoefficients::new(vec![0.0; 6], vec![vec![0.0; 6]; 2]).unwrap();
        assert!(iswt(&c, &f).is_err());
    }

    #[test]
    fn components_of_constant_signal() {
        let f = daubechies_filters(3).unwrap();
        let x = vec![4.0; 16];
        let comps = reconstruct_components(&swt(&x, &f, 1).unwrap(), &f).unwrap();
        assert!(max_abs_diff(&comps.approx, &x) < 1e-12);
        assert!(comps.details[0].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn components_add_up_db2_level2() {
        let f = daubechies_filters(2).unwrap();
        let x = random(32, 5);
        let comps = reconstruct_components(&swt(&x, &f, 2).unwrap(), &f).unwrap();
        assert!(max_abs_diff(&comps.sum(), &x) < 1e-9);
    }
}
