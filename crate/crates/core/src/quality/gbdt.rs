//! Gradient-boosted regression trees for binary classification.
//!
//! Logistic loss. Each round fits a shallow least-squares tree to the
//! residuals `y - p` and replaces every leaf value with the Newton step
//! `sum(y - p) / sum(p (1 - p))` over the leaf's rows. The step is scaled by
//! the learning rate and halved while it would raise the loss on that leaf,
//! so the training loss never increases from one round to the next.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, XorShift64Star};

pub const N_FEATURES: usize = 6;

const MAX_HALVINGS: usize = 40;
const MIN_HESSIAN: f64 = 1e-12;
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub tree_count: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of rows drawn (without replacement) for each tree.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            tree_count: 200,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegSplit {
    pub feature: usize,
    pub threshold: f64,
    /// Child encoding as in the random forest: `k >= 0` is a node,
    /// `k < 0` is `leaves[-k - 1]`.
    pub left: i32,
    pub right: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegSplit>,
    pub leaves: Vec<f64>,
}

impl RegTree {
    fn leaf_index(&self, x: &[f64; N_FEATURES]) -> usize {
        if self.nodes.is_empty() {
            return 0;
        }
        let mut k = 0i32;
        loop {
            let s = &self.nodes[k as usize];
            k = if x[s.feature] <= s.threshold { s.left } else { s.right };
            if k < 0 {
                return (-k - 1) as usize;
            }
        }
    }

    pub fn predict(&self, x: &[f64; N_FEATURES]) -> f64 {
        self.leaves[self.leaf_index(x)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub config: GbdtConfig,
    /// Log-odds of the positive rate in the training data.
    pub init: f64,
    pub trees: Vec<RegTree>,
    /// Per-feature share of the total split gain, in percent.
    pub importances: [f64; N_FEATURES],
    /// Mean training log-loss after 0, 1, ..., tree_count rounds.
    pub train_loss: Vec<f64>,
}

/// Node still to grow: its rows, depth, and the parent child slot to patch.
type Pending = (Vec<usize>, usize, Option<(usize, bool)>);

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Log-loss of label `y` at raw score `f`, stable for large `|f|`.
fn log_loss(y: bool, f: f64) -> f64 {
    // -log(sigmoid(f)) = softplus(-f)
    let softplus = |z: f64| {
        if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        }
    };
    if y {
        softplus(-f)
    } else {
        softplus(f)
    }
}

impl GbdtModel {
    pub fn raw_score(&self, x: &[f64; N_FEATURES]) -> f64 {
        self.init + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &[f64; N_FEATURES]) -> f64 {
        sigmoid(self.raw_score(x))
    }

    /// A model that always returns probability `sigmoid(init)`.
    pub fn constant(init: f64) -> GbdtModel {
        GbdtModel {
            config: GbdtConfig {
                tree_count: 0,
                ..GbdtConfig::default()
            },
            init,
            trees: Vec::new(),
            importances: [0.0; N_FEATURES],
            train_loss: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.trees {
            if t.leaves.is_empty() {
                return Err(Error::Format("boosted tree without leaves".into()));
            }
            let (n, l) = (t.nodes.len() as i32, t.leaves.len() as i32);
            for (k, s) in t.nodes.iter().enumerate() {
                if s.feature >= N_FEATURES {
                    return Err(Error::Format(format!("feature index {} out of range", s.feature)));
                }
                for c in [s.left, s.right] {
                    let ok = if c > 0 {
                        c > k as i32 && c < n
                    } else {
                        c < 0 && -c - 1 < l
                    };
                    if !ok {
                        return Err(Error::Format(format!("child index {c} out of range")));
                    }
                }
            }
        }
        Ok(())
    }
}

struct Fitted {
    tree: RegTree,
    /// Leaf of every row in the fitting sample.
    gains: [f64; N_FEATURES],
}

/// Least-squares regression tree on `target` over rows `rows`.
fn fit_tree(
    x: &[[f64; N_FEATURES]],
    target: &[f64],
    rows: Vec<usize>,
    sorted: &[Vec<usize>; N_FEATURES],
    config: &GbdtConfig,
) -> Fitted {
    let mut tree = RegTree {
        nodes: Vec::new(),
        leaves: Vec::new(),
    };
    let mut gains = [0.0; N_FEATURES];
    let mut member = vec![u32::MAX; x.len()];
    let mut stack: Vec<Pending> = vec![(rows, 0, None)];
    let mut node_id = 0u32;
    while let Some((rows, depth, slot)) = stack.pop() {
        let split = if depth < config.max_depth && rows.len() >= 2 * config.min_samples_leaf {
            node_id += 1;
            for &r in &rows {
                member[r] = node_id;
            }
            best_split(x, target, &rows, sorted, &member, node_id, config.min_samples_leaf)
        } else {
            None
        };
        let reference = match split {
            Some((gain, feature, threshold)) => {
                gains[feature] += gain;
                let k = tree.nodes.len();
                tree.nodes.push(RegSplit {
                    feature,
                    threshold,
                    left: 0,
                    right: 0,
                });
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][feature] <= threshold);
                stack.push((r, depth + 1, Some((k, false))));
                stack.push((l, depth + 1, Some((k, true))));
                k as i32
            }
            None => {
                // placeholder; Newton values are filled in by the caller
                tree.leaves.push(0.0);
                -(tree.leaves.len() as i32)
            }
        };
        if let Some((parent, left)) = slot {
            if left {
                tree.nodes[parent].left = reference;
            } else {
                tree.nodes[parent].right = reference;
            }
        }
    }
    Fitted { tree, gains }
}

/// Best `(gain, feature, threshold)` by squared-error reduction; thresholds
/// are midpoints between consecutive distinct values.
fn best_split(
    x: &[[f64; N_FEATURES]],
    target: &[f64],
    rows: &[usize],
    sorted: &[Vec<usize>; N_FEATURES],
    member: &[u32],
    node: u32,
    min_leaf: usize,
) -> Option<(f64, usize, f64)> {
    let n = rows.len();
    let total: f64 = rows.iter().map(|&r| target[r]).sum();
    let parent = total * total / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut ordered = Vec::with_capacity(n);
    for f in 0..N_FEATURES {
        ordered.clear();
        ordered.extend(sorted[f].iter().copied().filter(|&r| member[r] == node));
        let mut left = 0.0;
        for k in 0..n - 1 {
            left += target[ordered[k]];
            let (a, b) = (x[ordered[k]][f], x[ordered[k + 1]][f]);
            if a == b || k + 1 < min_leaf || n - k - 1 < min_leaf {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = (n - k - 1) as f64;
            let right = total - left;
            let gain = left * left / nl + right * right / nr - parent;
            if gain > MIN_GAIN && best.is_none_or(|(g, _, _)| gain > g) {
                let mut t = a + (b - a) / 2.0;
                if !(t >= a && t < b) {
                    t = a;
                }
                best = Some((gain, f, t));
            }
        }
    }
    best
}

/// Boosts `config.tree_count` rounds on rows `x` with labels `y`.
pub fn train_gbdt(x: &[[f64; N_FEATURES]], y: &[bool], config: &GbdtConfig) -> Result<GbdtModel> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::arg("feature and label counts differ"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::arg("features must be finite"));
    }
    if !(config.learning_rate >= 0.0) || config.max_depth == 0 || config.min_samples_leaf == 0 {
        return Err(Error::arg("invalid boosting configuration"));
    }
    if !(config.subsample > 0.0 && config.subsample <= 1.0) {
        return Err(Error::arg("subsample must lie in (0, 1]"));
    }
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == n {
        return Err(Error::Training("boosting needs both classes".into()));
    }
    let rate = pos as f64 / n as f64;
    let init = (rate / (1.0 - rate)).ln();
    let sorted: [Vec<usize>; N_FEATURES] = std::array::from_fn(|f| {
        let mut v: Vec<usize> = (0..n).collect();
        v.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        v
    });
    let mut score = vec![init; n];
    let mean_loss = |score: &[f64]| score.iter().zip(y).map(|(&f, &t)| log_loss(t, f)).sum::<f64>() / n as f64;
    let mut train_loss = vec![mean_loss(&score)];
    let mut trees = Vec::with_capacity(config.tree_count);
    let mut gains = [0.0; N_FEATURES];
    let mut rng = XorShift64Star::new(derive_seed(config.seed, 0));
    for _ in 0..config.tree_count {
        let residual: Vec<f64> = score
            .iter()
            .zip(y)
            .map(|(&f, &t)| f64::from(u8::from(t)) - sigmoid(f))
            .collect();
        let rows: Vec<usize> = if config.subsample < 1.0 {
            let mut all: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut all);
            let take = ((n as f64 * config.subsample).round() as usize).max(1);
            let mut r = all[..take].to_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let Fitted { mut tree, gains: g } = fit_tree(x, &residual, rows, &sorted, config);
        // Newton step per leaf over all rows reaching it, then backtrack
        let leaf_of: Vec<usize> = x.iter().map(|r| tree.leaf_index(r)).collect();
        let m = tree.leaves.len();
        let (mut num, mut den) = (vec![0.0; m], vec![0.0; m]);
        for i in 0..n {
            let p = sigmoid(score[i]);
            num[leaf_of[i]] += residual[i];
            den[leaf_of[i]] += p * (1.0 - p);
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (i, &l) in leaf_of.iter().enumerate() {
            members[l].push(i);
        }
        for l in 0..m {
            let mut step = config.learning_rate * num[l] / den[l].max(MIN_HESSIAN);
            let before: f64 = members[l].iter().map(|&i| log_loss(y[i], score[i])).sum();
            let mut accepted = 0.0;
            for _ in 0..MAX_HALVINGS {
                if step == 0.0 || !step.is_finite() {
                    break;
                }
                let after: f64 = members[l].iter().map(|&i| log_loss(y[i], score[i] + step)).sum();
                if after <= before {
                    accepted = step;
                    break;
                }
                step /= 2.0;
            }
            tree.leaves[l] = accepted;
        }
        for i in 0..n {
            score[i] += tree.leaves[leaf_of[i]];
        }
        for f in 0..N_FEATURES {
            gains[f] += g[f];
        }
        train_loss.push(mean_loss(&score));
        trees.push(tree);
    }
    let total: f64 = gains.iter().sum();
    let importances = if total > 0.0 {
        let mut imp = gains.map(|g| 100.0 * g / total);
        // absorb rounding so the shares add up to 100
        let drift = 100.0 - imp.iter().sum::<f64>();
        let k = (0..N_FEATURES)
            .max_by(|&a, &b| imp[a].total_cmp(&imp[b]))
            .expect("non-empty");
        imp[k] += drift;
        imp
    } else {
        [0.0; N_FEATURES]
    };
    Ok(GbdtModel {
        config: *config,
        init,
        trees,
        importances,
        train_loss,
    })
}
