//! Per-pixel random forest on raw RGB values.
//!
//! Road and background labels are merged into one negative class, so every
//! tree is a binary classifier whose leaves hold the building fraction of
//! the training samples that reached them.
//!
//! Model JSON:
//!
//! ```json
//! {"config":{"tree_count":50,"max_depth":12,"min_leaf_size":4,"seed":7,"bootstrap":true},
//!  "trees":[{"nodes":[{"feature":0,"threshold":127,"left":-1,"right":-2}],
//!            "leaves":[0.0,1.0]}]}
//! ```
//!
//! `feature` is 0/1/2 for R/G/B and samples with `value <= threshold` go
//! left. A child index `k >= 0` names `nodes[k]`; `k < 0` names
//! `leaves[-k - 1]`. The root is `nodes[0]`, or `leaves[0]` for a tree
//! without splits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoRaster, GridWriter, RasterHeader, RasterSource, SampleType, Window};
use crate::labels::{SparseLabelMask, BUILDING, UNKNOWN};
use crate::par;
use crate::rng::{derive_seed, XorShift64Star};

const FEATURES: usize = 3;
const FEATURES_PER_SPLIT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub tree_count: usize,
    pub max_depth: usize,
    pub min_leaf_size: usize,
    pub seed: u64,
    /// Train each tree on a bootstrap resample (otherwise on all samples).
    #[serde(default = "default_true")]
    pub bootstrap: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            tree_count: 50,
            max_depth: 12,
            min_leaf_size: 4,
            seed: 0,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub feature: u8,
    pub threshold: u8,
    pub left: i32,
    pub right: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Split>,
    pub leaves: Vec<f64>,
}

impl Tree {
    /// A tree that always predicts `p`.
    pub fn constant(p: f64) -> Tree {
        Tree {
            nodes: Vec::new(),
            leaves: vec![p],
        }
    }

    #[inline]
    pub fn predict(&self, rgb: [u8; 3]) -> f64 {
        if self.nodes.is_empty() {
            return self.leaves[0];
        }
        let mut k = 0i32;
        loop {
            let s = &self.nodes[k as usize];
            k = if rgb[s.feature as usize] <= s.threshold {
                s.left
            } else {
                s.right
            };
            if k < 0 {
                return self.leaves[(-k - 1) as usize];
            }
        }
    }

    /// Longest root-to-leaf path in edges.
    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, k: i32) -> usize {
            if k < 0 {
                return 0;
            }
            let s = &t.nodes[k as usize];
            1 + walk(t, s.left).max(walk(t, s.right))
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(self, 0)
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len() as i32;
        let l = self.leaves.len() as i32;
        if l == 0 {
            return Err(Error::Format("tree without leaves".into()));
        }
        for (k, s) in self.nodes.iter().enumerate() {
            if s.feature as usize >= FEATURES {
                return Err(Error::Format(format!("feature index {} out of range", s.feature)));
            }
            for c in [s.left, s.right] {
                // children come after their parent, which rules out cycles
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
        if let Some(p) = self.leaves.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Format(format!("leaf probability {p} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub config: ForestConfig,
    pub trees: Vec<Tree>,
}

/// Labeled training pixels: RGB plus 1 for building, 0 otherwise.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub features: Vec<[u8; 3]>,
    pub labels: Vec<u8>,
}

impl TrainingSet {
    /// Every labeled pixel of `mask` over `imagery`; road and background
    /// both become 0.
    pub fn from_mask(imagery: &GeoRaster, mask: &SparseLabelMask) -> Result<TrainingSet> {
        check_rgb(imagery)?;
        if imagery.width() != mask.width || imagery.height() != mask.height {
            return Err(Error::arg("imagery and label mask differ in size"));
        }
        let rgb = imagery.as_u8().expect("checked");
        let plane = mask.width * mask.height;
        let mut set = TrainingSet::default();
        for (i, &l) in mask.labels.iter().enumerate() {
            if l == UNKNOWN {
                continue;
            }
            set.features.push([rgb[i], rgb[plane + i], rgb[2 * plane + i]]);
            set.labels.push(u8::from(l == BUILDING));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn check_rgb(imagery: &GeoRaster) -> Result<()> {
    if imagery.bands() != 3 || imagery.as_u8().is_none() {
        return Err(Error::arg(format!(
            "imagery must be 3-band u8, got {} band(s) of {:?}",
            imagery.bands(),
            imagery.header().sample_type
        )));
    }
    Ok(())
}

/// Trains on the labeled pixels of `mask`.
pub fn train_random_forest(
    imagery: &GeoRaster,
    mask: &SparseLabelMask,
    config: &ForestConfig,
) -> Result<RandomForestModel> {
    train_on_samples(&TrainingSet::from_mask(imagery, mask)?, config)
}

pub fn train_on_samples(data: &TrainingSet, config: &ForestConfig) -> Result<RandomForestModel> {
    if config.tree_count == 0 || config.min_leaf_size == 0 {
        return Err(Error::arg("tree_count and min_leaf_size must be positive"));
    }
    let pos = data.labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == data.len() {
        return Err(Error::Training(
            "training data needs both building and non-building pixels".into(),
        ));
    }
    let trees = par::map_range(config.tree_count, |k| {
        let mut rng = XorShift64Star::new(derive_seed(config.seed, k as u64));
        let n = data.len();
        let idx: Vec<u32> = if config.bootstrap {
            (0..n).map(|_| rng.below(n as u64) as u32).collect()
        } else {
            (0..n as u32).collect()
        };
        grow_tree(data, idx, config, &mut rng)
    });
    Ok(RandomForestModel { config: *config, trees })
}

struct Pending {
    idx: Vec<u32>,
    depth: usize,
    /// Where to store the child reference once known: (parent, is_left).
    slot: Option<(usize, bool)>,
}

fn grow_tree(data: &TrainingSet, idx: Vec<u32>, config: &ForestConfig, rng: &mut XorShift64Star) -> Tree {
    let mut tree = Tree {
        nodes: Vec::new(),
        leaves: Vec::new(),
    };
    // depth-first, left child first, so numbering is deterministic
    let mut stack = vec![Pending {
        idx,
        depth: 0,
        slot: None,
    }];
    while let Some(p) = stack.pop() {
        let pos = p.idx.iter().filter(|&&i| data.labels[i as usize] == 1).count();
        let n = p.idx.len();
        let split = if pos == 0 || pos == n || p.depth >= config.max_depth || n < 2 * config.min_leaf_size {
            None
        } else {
            best_split(data, &p.idx, config.min_leaf_size, rng)
        };
        let reference = match split {
            None => {
                tree.leaves.push(pos as f64 / n as f64);
                -(tree.leaves.len() as i32)
            }
            Some((feature, threshold)) => {
                let k = tree.nodes.len();
                tree.nodes.push(Split {
                    feature,
                    threshold,
                    left: 0,
                    right: 0,
                });
                let (l, r): (Vec<u32>, Vec<u32>) = p
                    .idx
                    .iter()
                    .partition(|&&i| data.features[i as usize][feature as usize] <= threshold);
                stack.push(Pending {
                    idx: r,
                    depth: p.depth + 1,
                    slot: Some((k, false)),
                });
                stack.push(Pending {
                    idx: l,
                    depth: p.depth + 1,
                    slot: Some((k, true)),
                });
                k as i32
            }
        };
        if let Some((parent, left)) = p.slot {
            if left {
                tree.nodes[parent].left = reference;
            } else {
                tree.nodes[parent].right = reference;
            }
        }
    }
    tree
}

/// Gini-optimal split over a random 2-of-3 feature subset; if none of those
/// features admits a valid split the remaining one is tried.
fn best_split(data: &TrainingSet, idx: &[u32], min_leaf: usize, rng: &mut XorShift64Star) -> Option<(u8, u8)> {
    let mut order = [0u8, 1, 2];
    rng.shuffle(&mut order);
    let (chosen, rest) = order.split_at(FEATURES_PER_SPLIT);
    let mut best: Option<(f64, u8, u8)> = None;
    for &f in chosen {
        consider(data, idx, f, min_leaf, &mut best);
    }
    if best.is_none() {
        for &f in rest {
            consider(data, idx, f, min_leaf, &mut best);
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn consider(data: &TrainingSet, idx: &[u32], feature: u8, min_leaf: usize, best: &mut Option<(f64, u8, u8)>) {
    let mut hist = [[0u32; 2]; 256];
    for &i in idx {
        let i = i as usize;
        hist[data.features[i][feature as usize] as usize][data.labels[i] as usize] += 1;
    }
    let n = idx.len() as f64;
    let total_pos: u32 = hist.iter().map(|h| h[1]).sum();
    let (mut ln, mut lp) = (0u32, 0u32);
    for (t, h) in hist.iter().enumerate().take(255) {
        ln += h[0] + h[1];
        lp += h[1];
        if h[0] + h[1] == 0 {
            continue;
        }
        let rn = idx.len() as u32 - ln;
        if (ln as usize) < min_leaf || (rn as usize) < min_leaf {
            continue;
        }
        let rp = total_pos - lp;
        // weighted Gini: sum over sides of n_side * 2 p (1 - p)
        let side = |cnt: u32, pos: u32| {
            let c = cnt as f64;
            let p = pos as f64 / c;
            c * 2.0 * p * (1.0 - p)
        };
        let score = (side(ln, lp) + side(rn, rp)) / n;
        if best.is_none_or(|(b, _, _)| score < b) {
            *best = Some((score, feature, t as u8));
        }
    }
}

impl RandomForestModel {
    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::Format("forest has no trees".into()));
        }
        self.trees.iter().try_for_each(Tree::validate)
    }

    /// Mean leaf probability over all trees.
    #[inline]
    pub fn predict_pixel(&self, rgb: [u8; 3]) -> f32 {
        let s: f64 = self.trees.iter().map(|t| t.predict(rgb)).sum();
        (s / self.trees.len() as f64) as f32
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<RandomForestModel> {
        let m: RandomForestModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RandomForestModel> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Building probability for every pixel of 3-band u8 `imagery`.
pub fn predict_proba(model: &RandomForestModel, imagery: &GeoRaster) -> Result<GeoRaster> {
    check_rgb(imagery)?;
    let (w, h) = (imagery.width(), imagery.height());
    let rgb = imagery.as_u8().expect("checked");
    let plane = w * h;
    let mut out = vec![0f32; plane];
    par::for_each_chunk_mut(&mut out, w.max(1), |r, row| {
        for (c, v) in row.iter_mut().enumerate() {
            let i = r * w + c;
            *v = model.predict_pixel([rgb[i], rgb[plane + i], rgb[2 * plane + i]]);
        }
    });
    let hd = imagery.header();
    GeoRaster::from_f32(w, h, out, hd.transform, &hd.crs_tag)
}

/// Streams `source` through the model in row strips and writes an f32
/// probability `.grid` to `path`.
pub fn predict_to_grid(
    model: &RandomForestModel,
    source: &dyn RasterSource,
    path: impl AsRef<Path>,
    strip_rows: usize,
) -> Result<RasterHeader> {
    let hd = source.header().clone();
    if hd.bands != 3 || hd.sample_type != SampleType::U8 {
        return Err(Error::arg("imagery must be 3-band u8"));
    }
    let out_header = RasterHeader {
        bands: 1,
        sample_type: SampleType::F32,
        nodata: None,
        ..hd.clone()
    };
    let mut writer = GridWriter::create(path, out_header.clone())?;
    for r0 in (0..hd.height).step_by(strip_rows.max(1)) {
        let rows = strip_rows.max(1).min(hd.height - r0);
        let block = source.read_window(Window::new(r0 as i64, 0, rows, hd.width))?;
        writer.write_window(r0, 0, &predict_proba(model, &block)?)?;
    }
    writer.finish()?;
    Ok(out_header)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[([u8; 3], u8)]) -> TrainingSet {
        TrainingSet {
            features: points.iter().map(|p| p.0).collect(),
            labels: points.iter().map(|p| p.1).collect(),
        }
    }

    fn accuracy(m: &RandomForestModel, d: &TrainingSet) -> f64 {
        let ok = d
            .features
            .iter()
            .zip(&d.labels)
            .filter(|(f, &l)| u8::from(m.predict_pixel(**f) >= 0.5) == l)
            .count();
        ok as f64 / d.len() as f64
    }

    #[test]
    fn two_pixels_one_split() {
        let d = set(&[([255, 0, 0], 1), ([0, 0, 255], 0)]);
        let cfg = ForestConfig {
            tree_count: 1,
            max_depth: 1,
            min_leaf_size: 1,
            bootstrap: false,
            ..Default::default()
        };
        let m = train_on_samples(&d, &cfg).unwrap();
        assert_eq!(accuracy(&m, &d), 1.0);
        assert_eq!(m.trees[0].depth(), 1);
    }

    #[test]
    fn deterministic() {
        let mut rng = XorShift64Star::new(1);
        let pts: Vec<([u8; 3], u8)> = (0..300)
            .map(|_| {
                let f = [rng.below(256) as u8, rng.below(256) as u8, rng.below(256) as u8];
                (f, u8::from(f[0] > f[2]))
            })
            .collect();
        let cfg = ForestConfig {
            tree_count: 5,
            seed: 9,
            ..Default::default()
        };
        let a = train_on_samples(&set(&pts), &cfg).unwrap();
        let b = train_on_samples(&set(&pts), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.trees.iter().all(|t| t.depth() <= cfg.max_depth));
    }

    #[test]
    fn single_class_rejected() {
        let d = set(&[([1, 2, 3], 1), ([4, 5, 6], 1)]);
        assert!(matches!(
            train_on_samples(&d, &ForestConfig::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn averaging_two_trees() {
        let m = RandomForestModel {
            config: ForestConfig::default(),
            trees: vec![Tree::constant(0.0), Tree::constant(1.0)],
        };
        let img = GeoRaster::new(
            RasterHeader {
                width: 2,
                height: 2,
                bands: 3,
                sample_type: SampleType::U8,
                nodata: None,
                transform: crate::geo::GeoTransform::new(0.0, 0.0, 0.5).unwrap(),
                crs_tag: String::new(),
            },
            crate::geo::Samples::U8(vec![7; 12]),
        )
        .unwrap();
        let p = predict_proba(&m, &img).unwrap();
        assert_eq!(p.as_f32().unwrap(), &[0.5; 4]);
        let one = GeoRaster::from_u8(2, 2, vec![0; 4], *img.transform(), None, "").unwrap();
        assert!(predict_proba(&m, &one).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = set(&[
            ([200, 10, 10], 1),
            ([10, 10, 200], 0),
            ([190, 20, 0], 1),
            ([0, 30, 180], 0),
        ]);
        let m = train_on_samples(
            &d,
            &ForestConfig {
                tree_count: 3,
                min_leaf_size: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(RandomForestModel::from_json(&m.to_json().unwrap()).unwrap(), m);
        assert!(RandomForestModel::from_json(r#"{"config":{"tree_count":1,"max_depth":1,"min_leaf_size":1,"seed":0},"trees":[{"nodes":[{"feature":5,"threshold":1,"left":-1,"right":-2}],"leaves":[0,1]}]}"#).is_err());
    }
}
