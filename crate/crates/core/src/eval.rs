//! Evaluation: pixel precision/recall inside a densely labeled region,
//! building-level Recall@k, window counts with R², and the linear count
//! adjustment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::footprints::BinaryMask;
use crate::geo::polygon::polygons_intersect;
use crate::geo::rasterize::{burn, for_each_covered_pixel};
use crate::geo::{FootprintSet, Polygon};
use crate::par;

/// Pixel confusion counts and the scores derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub true_negatives: u64,
    /// Set when a denominator was zero; the affected score is reported as 0.
    pub degenerate: bool,
}

impl PixelScores {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> PixelScores {
        let mut degenerate = false;
        let mut ratio = |num: u64, den: u64| {
            if den == 0 {
                degenerate = true;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PixelScores {
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
            degenerate,
        }
    }
}

/// Pixel P/R/F1 over the pixels whose centers fall in `val_region`. Inside
/// the region every pixel not covered by a validation building counts as a
/// negative.
pub fn pixel_prf(prediction: &BinaryMask, val_buildings: &[Polygon], val_region: &Polygon) -> Result<PixelScores> {
    let (w, h, t) = (prediction.width, prediction.height, prediction.transform);
    let mut truth = vec![0u8; w * h];
    for b in val_buildings {
        burn(b, &t, w, h, &mut truth, 1);
    }
    let (mut tp, mut fp, mut fn_, mut tn, mut n) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for_each_covered_pixel(val_region, &t, w, h, |r, c| {
        n += 1;
        let i = r * w + c;
        match (prediction.data[i] == 1, truth[i] == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    });
    if n == 0 {
        return Err(Error::arg("validation region covers no pixels"));
    }
    Ok(PixelScores::from_counts(tp, fp, fn_, tn))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallAtK {
    pub k: f64,
    pub recall: f64,
    /// Buildings that met the threshold.
    pub hits: usize,
    /// Buildings evaluated.
    pub evaluated: usize,
    /// Indices of buildings that cover no pixel center and were skipped.
    pub excluded: Vec<usize>,
}

/// Per-building `(predicted pixels, total pixels)` under pixel-center
/// rasterization.
pub fn building_coverage(prediction: &BinaryMask, buildings: &[Polygon]) -> Vec<(u64, u64)> {
    let (w, h, t) = (prediction.width, prediction.height, prediction.transform);
    par::map(buildings, |b| {
        let (mut hit, mut total) = (0u64, 0u64);
        for_each_covered_pixel(b, &t, w, h, |r, c| {
            total += 1;
            hit += u64::from(prediction.data[r * w + c] == 1);
        });
        (hit, total)
    })
}

/// Fraction of buildings with at least a fraction `k` of their pixels
/// predicted as building.
pub fn recall_at_k(prediction: &BinaryMask, test_buildings: &[Polygon], k: f64) -> Result<RecallAtK> {
    recall_from_coverage(&building_coverage(prediction, test_buildings), k)
}

/// [`recall_at_k`] on precomputed coverage, for evaluating many `k`.
pub fn recall_from_coverage(coverage: &[(u64, u64)], k: f64) -> Result<RecallAtK> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::arg(format!("k must lie in (0, 1], got {k}")));
    }
    let mut hits = 0;
    let mut excluded = Vec::new();
    for (i, &(hit, total)) in coverage.iter().enumerate() {
        if total == 0 {
            excluded.push(i);
        } else if hit as f64 >= k * total as f64 {
            hits += 1;
        }
    }
    let evaluated = coverage.len() - excluded.len();
    if evaluated == 0 {
        return Err(Error::arg("no test building covers a pixel"));
    }
    Ok(RecallAtK {
        k,
        recall: hits as f64 / evaluated as f64,
        hits,
        evaluated,
        excluded,
    })
}

/// Square counting window with its true building count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountWindow {
    pub geometry: Polygon,
    pub actual_count: usize,
}

impl CountWindow {
    /// Axis-aligned `size x size` window with lower-left corner `(x, y)`.
    pub fn square(x: f64, y: f64, size: f64, actual_count: usize) -> CountWindow {
        CountWindow {
            geometry: Polygon::rect(x, y, x + size, y + size),
            actual_count,
        }
    }
}

/// Number of polygons intersecting each window; touching counts.
pub fn count_intersecting(polygons: &[&Polygon], windows: &[Polygon]) -> Vec<usize> {
    let boxes: Vec<_> = polygons.iter().map(|p| p.bbox()).collect();
    par::map(windows, |w| {
        let wb = w.bbox();
        polygons
            .iter()
            .zip(&boxes)
            .filter(|(p, b)| b.intersects(&wb) && polygons_intersect(p, w))
            .count()
    })
}

/// Predicted count per window: footprints whose geometry intersects it.
pub fn count_in_windows(footprints: &FootprintSet, windows: &[CountWindow]) -> Vec<usize> {
    let polys: Vec<&Polygon> = footprints.polygons().collect();
    let geoms: Vec<Polygon> = windows.iter().map(|w| w.geometry.clone()).collect();
    count_intersecting(&polys, &geoms)
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2_score(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::arg("actual and predicted differ in length"));
    }
    if actual.len() < 2 {
        return Err(Error::arg("R² needs at least two observations"));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::arg("R² is undefined for constant actual values"));
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Linear correction `actual ≈ slope * predicted + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountAdjustment {
    pub slope: f64,
    pub intercept: f64,
    pub rmse: f64,
}

impl CountAdjustment {
    pub const IDENTITY: CountAdjustment = CountAdjustment {
        slope: 1.0,
        intercept: 0.0,
        rmse: 0.0,
    };

    pub fn apply(&self, predicted: f64) -> f64 {
        self.slope * predicted + self.intercept
    }
}

/// Ordinary least squares of `actual` on `predicted`.
pub fn fit_count_adjustment(predicted: &[f64], actual: &[f64]) -> Result<CountAdjustment> {
    if actual.len() != predicted.len() {
        return Err(Error::arg("actual and predicted differ in length"));
    }
    let n = predicted.len();
    if n < 2 {
        return Err(Error::arg("count adjustment needs at least two windows"));
    }
    let mx = predicted.iter().sum::<f64>() / n as f64;
    let my = actual.iter().sum::<f64>() / n as f64;
    let sxx: f64 = predicted.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Training("predicted counts are constant".into()));
    }
    let sxy: f64 = predicted.iter().zip(actual).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    Ok(CountAdjustment {
        slope,
        intercept,
        rmse: (sse / n as f64).sqrt(),
    })
}

/// Everything the `eval` stage reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
    /// Keyed by `k` formatted with two decimals.
    pub recall_at_k: BTreeMap<String, f64>,
    pub r2: Option<f64>,
    pub adjustment: Option<CountAdjustment>,
    pub window_actual: Vec<usize>,
    pub window_predicted: Vec<usize>,
}

impl EvalReport {
    /// Fixed-layout text table.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
        let _ = writeln!(s, "{:<22}{:>10}", "metric", "value");
        let _ = writeln!(s, "{:<22}{:>10.4}", "precision", self.precision);
        let _ = writeln!(s, "{:<22}{:>10.4}", "recall", self.recall);
        let _ = writeln!(s, "{:<22}{:>10.4}", "f1", self.f1);
        for (k, v) in &self.recall_at_k {
            let _ = writeln!(s, "{:<22}{:>10.4}", format!("recall@{k}"), v);
        }
        let _ = writeln!(s, "{:<22}{:>10}", "r2", opt(self.r2));
        if let Some(a) = self.adjustment {
            let _ = writeln!(s, "{:<22}{:>10.4}", "adjust_slope", a.slope);
            let _ = writeln!(s, "{:<22}{:>10.4}", "adjust_intercept", a.intercept);
            let _ = writeln!(s, "{:<22}{:>10.4}", "adjust_rmse", a.rmse);
        }
        if self.degenerate {
            let _ = writeln!(s, "note: a zero denominator was reported as 0");
        }
        s
    }
}
