//! Random-forest regression: CART trees on bootstrap resamples.
//!
//! Each tree is grown to purity (or until fewer than `min_samples_split`
//! samples remain) by choosing, at every node, the feature and midpoint
//! threshold with the largest reduction in squared error. All features are
//! considered at every split. Forest output is the mean of tree outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub bootstrap: bool,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 50,
            bootstrap: true,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

/// Mean that returns the common value exactly when all inputs are equal.
fn stable_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut it = values.peekable();
    let first = *it.peek().expect("mean of an empty set");
    let (mut n, mut acc) = (0usize, 0.0);
    for v in it {
        acc += v - first;
        n += 1;
    }
    first + acc / n as f64
}

struct Grower<'a> {
    x: &'a [&'a [f64]],
    y: &'a [f64],
    cfg: &'a ForestConfig,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    /// `sorted[f]` lists the node's sample instances ordered by feature `f`.
    fn grow(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let id = self.nodes.len();
        let members = &sorted[0];
        let first = self.y[members[0]];
        let pure = members.iter().all(|&i| self.y[i] == first);
        let depth_capped = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || members.len() < self.cfg.min_samples_split.max(2) || depth_capped {
            self.nodes.push(Node::Leaf(stable_mean(members.iter().map(|&i| self.y[i]))));
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&sorted) else {
            self.nodes.push(Node::Leaf(stable_mean(members.iter().map(|&i| self.y[i]))));
            return id;
        };
        self.nodes.push(Node::Leaf(0.0));
        let goes_left = |i: usize| self.x[i][feature] <= threshold;
        let (mut ls, mut rs) = (Vec::with_capacity(sorted.len()), Vec::with_capacity(sorted.len()));
        for list in &sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = list.iter().partition(|&&i| goes_left(i));
            ls.push(l);
            rs.push(r);
        }
        drop(sorted);
        let left = self.grow(ls, depth + 1);
        let right = self.grow(rs, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&self, sorted: &[Vec<usize>]) -> Option<(usize, f64)> {
        let n = sorted[0].len();
        let total: f64 = sorted[0].iter().map(|&i| self.y[i]).sum();
        // maximizing S_l²/n_l + S_r²/n_r minimizes the children's squared error
        let parent = total * total / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for (f, list) in sorted.iter().enumerate() {
            let mut left_sum = 0.0;
            for pos in 0..n - 1 {
                left_sum += self.y[list[pos]];
                let (a, b) = (self.x[list[pos]][f], self.x[list[pos + 1]][f]);
                if a == b {
                    continue;
                }
                let nl = (pos + 1) as f64;
                let nr = (n - pos - 1) as f64;
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / nl + right_sum * right_sum / nr;
                if score > parent + 1e-12 * parent.abs() && best.is_none_or(|(s, _, _)| score > s) {
                    let mut thr = a + (b - a) / 2.0;
                    if thr >= b {
                        thr = a;
                    }
                    best = Some((score, f, thr));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn grow_tree(x: &[&[f64]], y: &[f64], instances: Vec<usize>, cfg: &ForestConfig) -> RegressionTree {
    let k = x[0].len();
    let sorted: Vec<Vec<usize>> = (0..k)
        .map(|f| {
            let mut v = instances.clone();
            v.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
            v
        })
        .collect();
    let mut g = Grower {
        x,
        y,
        cfg,
        nodes: Vec::new(),
    };
    if k == 0 {
        g.nodes.push(Node::Leaf(stable_mean(instances.iter().map(|&i| y[i]))));
    } else {
        g.grow(sorted, 0);
    }
    RegressionTree { nodes: g.nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
    n_features: usize,
}

impl RandomForest {
    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean of tree outputs, summed in sorted order so the result does not
    /// depend on tree order.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut outs: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        outs.sort_by(f64::total_cmp);
        stable_mean(outs.into_iter())
    }

    /// Same forest with trees in the given order.
    pub fn reordered(&self, order: &[usize]) -> RandomForest {
        RandomForest {
            trees: order.iter().map(|&i| self.trees[i].clone()).collect(),
            n_features: self.n_features,
        }
    }
}

/// Fits one forest for a single output. Deterministic given `seed`.
pub fn fit_random_forest_step<X: AsRef<[f64]>>(
    x: &[X],
    y: &[f64],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<RandomForest> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(shape_err(format!(
            "random forest needs at least 2 samples with matching targets, got {} rows and {} targets",
            x.len(),
            y.len()
        )));
    }
    if cfg.n_estimators == 0 {
        return Err(Error::Config("n_estimators must be positive".into()));
    }
    let rows: Vec<&[f64]> = x.iter().map(AsRef::as_ref).collect();
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(shape_err("ragged forest input rows"));
    }
    let n = rows.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = (0..cfg.n_estimators)
        .map(|_| {
            let instances: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(&rows, y, instances, cfg)
        })
        .collect();
    Ok(RandomForest { trees, n_features: k })
}

/// One forest per output column, fitted in parallel with seeds derived
/// from `seed` and the output index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestMimo {
    forests: Vec<RandomForest>,
}

impl ForestMimo {
    pub fn forests(&self) -> &[RandomForest] {
        &self.forests
    }

    pub fn n_features(&self) -> usize {
        self.forests.first().map_or(0, RandomForest::n_features)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(shape_err(format!(
                "{} features for a forest trained on {}",
                x.len(),
                self.n_features()
            )));
        }
        Ok(self.forests.iter().map(|f| f.predict(x)).collect())
    }
}

pub fn fit_forest_mimo<X, Y>(x: &[X], y: &[Y], cfg: &ForestConfig, seed: u64) -> Result<ForestMimo>
where
    X: AsRef<[f64]> + Sync,
    Y: AsRef<[f64]>,
{
    let q = y.first().map_or(0, |r| r.as_ref().len());
    if y.iter().any(|r| r.as_ref().len() != q) {
        return Err(shape_err("ragged forest target rows"));
    }
    let columns: Vec<Vec<f64>> = (0..q).map(|o| y.iter().map(|r| r.as_ref()[o]).collect()).collect();
    let forests = columns
        .par_iter()
        .enumerate()
        .map(|(o, col)| fit_random_forest_step(x, col, cfg, derive_seed(seed, "forest", o as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestMimo { forests })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![(i as f64 * 0.71).sin(), (i as f64 * 0.23).cos(), i as f64])
            .collect();
        let y = x.iter().map(|r| r[0] * 3.0 + r[1].powi(2)).collect();
        (x, y)
    }

    #[test]
    fn constant_targets_predict_constant() {
        let (x, _) = xy(40);
        let y = vec![0.1; 40];
        let f = fit_random_forest_step(&x, &y, &ForestConfig::default(), 3).unwrap();
        for r in &x {
            assert_eq!(f.predict(r), 0.1);
        }
        assert_eq!(f.predict(&[100.0, -5.0, 1e6]), 0.1);
    }

    #[test]
    fn single_unbootstrapped_tree_memorizes() {
        let (x, y) = xy(60);
        let cfg = ForestConfig {
            n_estimators: 1,
            bootstrap: false,
            ..Default::default()
        };
        let f = fit_random_forest_step(&x, &y, &cfg, 0).unwrap();
        for (r, t) in x.iter().zip(&y) {
            assert_eq!(f.predict(r), *t);
        }
        assert_eq!(f.trees()[0].n_leaves(), 60);
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = xy(50);
        let cfg = ForestConfig {
            n_estimators: 8,
            ..Default::default()
        };
        let a = fit_random_forest_step(&x, &y, &cfg, 42).unwrap();
        let b = fit_random_forest_step(&x, &y, &cfg, 42).unwrap();
        assert_eq!(a, b);
        let c = fit_random_forest_step(&x, &y, &cfg, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tree_order_does_not_matter() {
        let (x, y) = xy(50);
        let cfg = ForestConfig {
            n_estimators: 7,
            ..Default::default()
        };
        let f = fit_random_forest_step(&x, &y, &cfg, 9).unwrap();
        let g = f.reordered(&[6, 2, 0, 5, 1, 3, 4]);
        for r in &x {
            assert_eq!(f.predict(r).to_bits(), g.predict(r).to_bits());
        }
    }

    #[test]
    fn max_depth_is_respected() {
        let (x, y) = xy(50);
        let cfg = ForestConfig {
            n_estimators: 1,
            bootstrap: false,
            max_depth: Some(2),
            ..Default::default()
        };
        let f = fit_random_forest_step(&x, &y, &cfg, 0).unwrap();
        assert!(f.trees()[0].depth() <= 2);
    }

    #[test]
    fn needs_two_samples() {
        assert!(fit_random_forest_step(&[vec![1.0]], &[1.0], &ForestConfig::default(), 0).is_err());
    }
}
