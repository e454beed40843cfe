//! Low-quality building classification from footprint morphology.

pub mod features;
pub mod gbdt;
pub mod mbr;

pub use features::{
    extract_all, extract_features, max_slope_deg, BuildingFeatureVector, FEATURE_NAMES, ISOLATED_DISTANCE_M,
    NEIGHBOR_RADIUS_M,
};
pub use gbdt::{train_gbdt, GbdtConfig, GbdtModel, N_FEATURES};
pub use mbr::{min_area_rect, min_area_rect_points, MinAreaRect};

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{FootprintSet, GeoRaster, Quality};
use crate::par;
use crate::rng::{derive_seed, XorShift64Star};

/// Probability at or above which a building is called low quality.
pub const LOW_QUALITY_THRESHOLD: f64 = 0.5;

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub id: String,
    #[serde(flatten)]
    pub features: BuildingFeatureVector,
    /// Empty in the CSV when unlabeled.
    pub label: Option<Quality>,
}

/// Columns: `id,area_m2,mbr_ratio,neighbors_200m,nearest_dist_m,
/// max_slope_deg,corner_count,dem_missing,label`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualityDataset {
    pub rows: Vec<QualityRow>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    id: String,
    area_m2: f64,
    mbr_ratio: f64,
    neighbors_200m: usize,
    nearest_dist_m: f64,
    max_slope_deg: f64,
    corner_count: usize,
    dem_missing: bool,
    label: String,
}

impl QualityDataset {
    /// Features of every footprint; labels come from their `quality`.
    pub fn from_footprints(set: &FootprintSet, dem: Option<&GeoRaster>) -> QualityDataset {
        let feats = extract_all(set, dem);
        QualityDataset {
            rows: set
                .footprints
                .iter()
                .zip(feats)
                .map(|(f, features)| QualityRow {
                    id: f.id.clone(),
                    features,
                    label: f.quality,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Feature matrix and labels of the labeled rows.
    pub fn labeled(&self) -> (Vec<[f64; N_FEATURES]>, Vec<bool>) {
        self.rows
            .iter()
            .filter_map(|r| r.label.map(|l| (r.features.as_array(), l == Quality::LowQuality)))
            .unzip()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            let f = &r.features;
            w.serialize(CsvRow {
                id: r.id.clone(),
                area_m2: f.area_m2,
                mbr_ratio: f.mbr_ratio,
                neighbors_200m: f.neighbors_200m,
                nearest_dist_m: f.nearest_dist_m,
                max_slope_deg: f.max_slope_deg,
                corner_count: f.corner_count,
                dem_missing: f.dem_missing,
                label: r.label.map(|q| q.as_str().to_string()).unwrap_or_default(),
            })
            .map_err(csv_error)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "id",
                "area_m2",
                "mbr_ratio",
                "neighbors_200m",
                "nearest_dist_m",
                "max_slope_deg",
                "corner_count",
                "dem_missing",
                "label",
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<QualityDataset> {
        let mut rows = Vec::new();
        for (k, rec) in csv::Reader::from_reader(input).deserialize::<CsvRow>().enumerate() {
            let r = rec.map_err(|e| Error::parse(Some(k), e.to_string()))?;
            let label = match r.label.trim() {
                "" => None,
                s => Some(s.parse::<Quality>().map_err(|e| Error::parse(Some(k), e.to_string()))?),
            };
            rows.push(QualityRow {
                id: r.id,
                features: BuildingFeatureVector {
                    area_m2: r.area_m2,
                    mbr_ratio: r.mbr_ratio,
                    neighbors_200m: r.neighbors_200m,
                    nearest_dist_m: r.nearest_dist_m,
                    max_slope_deg: r.max_slope_deg,
                    corner_count: r.corner_count,
                    dem_missing: r.dem_missing,
                },
                label,
            });
        }
        Ok(QualityDataset { rows })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<QualityDataset> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Trains on the labeled rows; needs both labels and at least 10 rows.
pub fn train_quality_model(dataset: &QualityDataset, config: &GbdtConfig) -> Result<GbdtModel> {
    let (x, y) = dataset.labeled();
    if x.len() < 10 {
        return Err(Error::Training(format!(
            "need at least 10 labeled rows, got {}",
            x.len()
        )));
    }
    train_gbdt(&x, &y, config)
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(v: &[f64]) -> MeanStd {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub repeats: usize,
    pub test_fraction: f64,
    pub f1_regular: MeanStd,
    pub f1_low_quality: MeanStd,
    /// Splits drawn again because a class was missing; stratification
    /// makes this zero whenever the dataset passes validation.
    pub resampled: usize,
    pub per_repeat: Vec<(f64, f64)>,
}

fn f1(pred: &[bool], truth: &[bool], positive: bool) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0u32, 0u32, 0u32);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == positive, t == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Stratified random train/test splits, per-class F1 on each test split.
pub fn evaluate_repeated_splits(
    dataset: &QualityDataset,
    repeats: usize,
    test_fraction: f64,
    seed: u64,
    config: &GbdtConfig,
) -> Result<SplitReport> {
    if repeats == 0 || !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::arg("need repeats > 0 and 0 < test_fraction < 1"));
    }
    let (x, y) = dataset.labeled();
    let classes: [Vec<usize>; 2] = [
        (0..y.len()).filter(|&i| !y[i]).collect(),
        (0..y.len()).filter(|&i| y[i]).collect(),
    ];
    let take: Vec<usize> = classes
        .iter()
        .map(|c| ((c.len() as f64 * test_fraction).round() as usize).clamp(1, c.len().saturating_sub(1)))
        .collect();
    if classes.iter().any(|c| c.len() < 2) || x.len() < 10 {
        return Err(Error::arg(
            "dataset too small for stratified splits: each class needs at least 2 rows",
        ));
    }
    let runs: Vec<Result<(f64, f64)>> = par::map_range(repeats, |rep| {
        let mut rng = XorShift64Star::new(derive_seed(seed, rep as u64));
        let mut test = Vec::new();
        let mut train = Vec::new();
        for (c, &t) in classes.iter().zip(&take) {
            let mut idx = c.clone();
            rng.shuffle(&mut idx);
            test.extend_from_slice(&idx[..t]);
            train.extend_from_slice(&idx[t..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        let tx: Vec<_> = train.iter().map(|&i| x[i]).collect();
        let ty: Vec<_> = train.iter().map(|&i| y[i]).collect();
        let model = train_gbdt(&tx, &ty, config)?;
        let pred: Vec<bool> = test
            .iter()
            .map(|&i| model.predict_proba(&x[i]) >= LOW_QUALITY_THRESHOLD)
            .collect();
        let truth: Vec<bool> = test.iter().map(|&i| y[i]).collect();
        Ok((f1(&pred, &truth, false), f1(&pred, &truth, true)))
    });
    let per_repeat = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let reg: Vec<f64> = per_repeat.iter().map(|r| r.0).collect();
    let low: Vec<f64> = per_repeat.iter().map(|r| r.1).collect();
    Ok(SplitReport {
        repeats,
        test_fraction,
        f1_regular: MeanStd::of(&reg),
        f1_low_quality: MeanStd::of(&low),
        resampled: 0,
        per_repeat,
    })
}

/// Copies `footprints`, setting each `quality` from the model.
pub fn classify_footprints(model: &GbdtModel, footprints: &FootprintSet, dem: Option<&GeoRaster>) -> FootprintSet {
    let feats = extract_all(footprints, dem);
    let mut out = footprints.clone();
    for (f, v) in out.footprints.iter_mut().zip(feats) {
        f.quality = Some(if model.predict_proba(&v.as_array()) >= LOW_QUALITY_THRESHOLD {
            Quality::LowQuality
        } else {
            Quality::Regular
        });
    }
    out
}

impl GbdtModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GbdtModel> {
        let m: GbdtModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Footprint, Polygon};

    fn row(id: &str, area: f64, label: Option<Quality>) -> QualityRow {
        QualityRow {
            id: id.into(),
            features: BuildingFeatureVector {
                area_m2: area,
                mbr_ratio: 1.25,
                neighbors_200m: 3,
                nearest_dist_m: 4.5,
                max_slope_deg: 0.0,
                corner_count: 6,
                dem_missing: true,
            },
            label,
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = QualityDataset {
            rows: vec![
                row("a", 100.5, Some(Quality::Regular)),
                row("b", 31.0, None),
                row("c", 40.0, Some(Quality::LowQuality)),
            ],
        };
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "id,area_m2,mbr_ratio,neighbors_200m,nearest_dist_m,max_slope_deg,corner_count,dem_missing,label\n"
        ));
        assert_eq!(QualityDataset::read_csv(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn separable_splits_score_one() {
        let rows = (0..40)
            .map(|i| {
                let low = i % 4 == 0;
                row(
                    &format!("r{i}"),
                    if low { 35.0 + i as f64 } else { 200.0 + i as f64 },
                    Some(if low { Quality::LowQuality } else { Quality::Regular }),
                )
            })
            .collect();
        let d = QualityDataset { rows };
        let cfg = GbdtConfig {
            tree_count: 20,
            ..Default::default()
        };
        let r = evaluate_repeated_splits(&d, 10, 0.25, 3, &cfg).unwrap();
        assert_eq!((r.f1_regular.mean, r.f1_regular.std), (1.0, 0.0));
        assert_eq!((r.f1_low_quality.mean, r.f1_low_quality.std), (1.0, 0.0));
        assert_eq!(evaluate_repeated_splits(&d, 10, 0.25, 3, &cfg).unwrap(), r);
    }

    #[test]
    fn constant_model_calls_everything_regular() {
        let set = FootprintSet {
            crs_tag: String::new(),
            footprints: vec![Footprint::new("a", Polygon::rect(0.0, 0.0, 10.0, 10.0))],
        };
        let out = classify_footprints(&GbdtModel::constant(-50.0), &set, None);
        assert_eq!(out.footprints[0].quality, Some(Quality::Regular));
        assert_eq!(out.footprints[0].polygon, set.footprints[0].polygon);
    }
}
