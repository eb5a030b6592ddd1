//! Two-sample Wilcoxon rank-sum (Mann–Whitney) test.
//!
//! Ties receive midranks. When `n + m <= EXACT_LIMIT` the two-sided p-value
//! is exact: the null distribution of the rank sum is counted over all
//! `C(n+m, n)` assignments of the pooled midranks, by dynamic programming
//! on doubled ranks (which are always integers). Larger samples use the
//! normal approximation with tie and continuity corrections.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const EXACT_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// Rank sum of the first sample.
    pub statistic: f64,
    /// Mann–Whitney `U` of the first sample.
    pub u: f64,
    pub p_two_sided: f64,
    pub method: PValueMethod,
}

/// Midranks of the pooled sample, in input order.
pub fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Data("rank-sum test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Data("rank-sum test samples contain NaN".into()));
    }
    Ok(())
}

/// Exact for small samples, normal approximation otherwise.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    if a.len() + b.len() <= EXACT_LIMIT {
        rank_sum_exact(a, b)
    } else {
        rank_sum_normal(a, b)
    }
}

pub fn rank_sum_exact(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    check(a, b)?;
    let n = a.len();
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let big_n = pooled.len();
    let doubled: Vec<usize> = midranks(&pooled).iter().map(|r| (2.0 * r).round() as usize).collect();
    let observed: usize = doubled[..n].iter().sum();
    let centre = n * (big_n + 1);
    let obs_dev = observed.abs_diff(centre);

    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0u64; max_sum + 1]; n + 1];
    ways[0][0] = 1;
    for &r in &doubled {
        for k in (1..=n).rev() {
            for s in (r..=max_sum).rev() {
                ways[k][s] += ways[k - 1][s - r];
            }
        }
    }
    let total: u64 = ways[n].iter().sum();
    let extreme: u64 = ways[n]
        .iter()
        .enumerate()
        .filter(|(s, _)| s.abs_diff(centre) >= obs_dev)
        .map(|(_, w)| *w)
        .sum();

    let statistic = observed as f64 / 2.0;
    Ok(RankSumTest {
        statistic,
        u: statistic - (n * (n + 1)) as f64 / 2.0,
        p_two_sided: extreme as f64 / total as f64,
        method: PValueMethod::Exact,
    })
}

pub fn rank_sum_normal(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    check(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let statistic: f64 = ranks[..a.len()].iter().sum();
    let u = statistic - n * (n + 1.0) / 2.0;

    let big_n = n + m;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * m / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - n * m / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(RankSumTest {
        statistic,
        u,
        p_two_sided: p,
        method: PValueMethod::Normal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn identical_samples_give_p_one() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.method, PValueMethod::Exact);
        assert!((r.p_two_sided - 1.0).abs() < 1e-15);
        let z = rank_sum_normal(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((z.p_two_sided - 1.0).abs() < 1e-15);
    }

    #[test]
    fn separated_samples_exact_p() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap();
        assert_eq!(r.statistic, 6.0);
        assert_eq!(r.u, 0.0);
        assert!((r.p_two_sided - 0.1).abs() < 1e-15);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(wilcoxon_rank_sum(&[], &[1.0]).is_err());
    }

    #[test]
    fn large_samples_use_normal() {
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let b: Vec<f64> = (5..15).map(f64::from).collect();
        assert_eq!(wilcoxon_rank_sum(&a, &b).unwrap().method, PValueMethod::Normal);
    }
}
