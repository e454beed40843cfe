//! Pipeline configuration and the multi-stage drivers shared by the command
//! line tool and the tests: label preparation, train/predict/polygonize,
//! evaluation against held-out data, and the label-count sweep.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::eval::{
    building_coverage, count_in_windows, fit_count_adjustment, pixel_prf, r2_score, recall_from_coverage, CountWindow,
    EvalReport,
};
use crate::footprints::{polygonize_raster, BinaryMask, PolygonizeConfig, DEFAULT_TOLERANCE_M, MEDIAN_KERNEL};
use crate::forest::{predict_proba, train_random_forest, ForestConfig, RandomForestModel};
use crate::geo::geojson::{read_polygon_layer, write_annotations, write_footprints, write_polygon_layer};
use crate::geo::projection::{parse_tm_tag, polygon_to_tm};
use crate::geo::raster::write_grid;
use crate::geo::rasterize::burn;
use crate::geo::{Annotation, Category, FootprintSet, GeoRaster, GeoTransform, Polygon};
use crate::labels::{buffer_buildings, merge_roads, rasterize_annotations, subsample_annotations, SparseLabelMask};
use crate::quality::GbdtConfig;
use crate::rng::derive_seed;
use crate::synth::SyntheticScene;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub imagery: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub dem: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub label_counts: Vec<usize>,
    pub repeats: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            label_counts: vec![50, 100, 200, 400],
            repeats: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityEvalConfig {
    pub repeats: usize,
    pub test_fraction: f64,
}

impl Default for QualityEvalConfig {
    fn default() -> Self {
        QualityEvalConfig {
            repeats: 50,
            test_fraction: 0.25,
        }
    }
}

/// Every tunable of the pipeline, stored as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub buffer_buildings: bool,
    pub buffer_radius_m: f64,
    pub merge_roads: bool,
    /// Fixed at 7; present so configurations spell it out.
    pub median_kernel: usize,
    pub dp_tolerance_m: f64,
    pub min_area_m2: f64,
    pub threshold: f64,
    pub tile_size: usize,
    pub seed: u64,
    /// 0 uses every available core.
    pub workers: usize,
    pub recall_k: Vec<f64>,
    pub window_size_m: f64,
    pub cell_size_m: f64,
    pub forest: ForestConfig,
    pub gbdt: GbdtConfig,
    pub sweep: SweepConfig,
    pub quality_eval: QualityEvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths::default(),
            buffer_buildings: true,
            buffer_radius_m: 2.0,
            merge_roads: true,
            median_kernel: MEDIAN_KERNEL,
            dp_tolerance_m: DEFAULT_TOLERANCE_M,
            min_area_m2: 30.0,
            threshold: 0.5,
            tile_size: 1024,
            seed: 0,
            workers: 0,
            recall_k: vec![0.5, 0.7, 0.9],
            window_size_m: 200.0,
            cell_size_m: 500.0,
            forest: ForestConfig::default(),
            gbdt: GbdtConfig::default(),
            sweep: SweepConfig::default(),
            quality_eval: QualityEvalConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("buffer_radius_m", self.buffer_radius_m),
            ("dp_tolerance_m", self.dp_tolerance_m),
            ("min_area_m2", self.min_area_m2),
            ("threshold", self.threshold),
            ("window_size_m", self.window_size_m),
            ("cell_size_m", self.cell_size_m),
            ("gbdt.learning_rate", self.gbdt.learning_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        if self.median_kernel != MEDIAN_KERNEL {
            return Err(Error::arg(format!("median_kernel is fixed at {MEDIAN_KERNEL}")));
        }
        if self.threshold > 1.0 {
            return Err(Error::arg("threshold must not exceed 1"));
        }
        if self.tile_size == 0 || self.forest.tree_count == 0 || self.forest.max_depth == 0 {
            return Err(Error::arg(
                "tile_size, forest.tree_count and forest.max_depth must be positive",
            ));
        }
        if self.forest.min_leaf_size == 0 || self.gbdt.tree_count == 0 || self.gbdt.max_depth == 0 {
            return Err(Error::arg(
                "forest.min_leaf_size, gbdt.tree_count and gbdt.max_depth must be positive",
            ));
        }
        if self.recall_k.iter().any(|k| !(*k > 0.0 && *k <= 1.0)) {
            return Err(Error::arg("recall_k values must lie in (0, 1]"));
        }
        if self.sweep.repeats == 0 || self.sweep.label_counts.is_empty() {
            return Err(Error::arg("sweep needs label counts and at least one repeat"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let c: PipelineConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PipelineConfig> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn polygonize_config(&self) -> PolygonizeConfig {
        PolygonizeConfig {
            threshold: self.threshold,
            tolerance_m: self.dp_tolerance_m,
            min_area_m2: self.min_area_m2,
            tile_size: self.tile_size,
        }
    }
}

/// Projects WGS84 `(lon, lat)` annotations into the raster's TM CRS.
pub fn project_annotations(annotations: &[Annotation], crs_tag: &str) -> Result<Vec<Annotation>> {
    let cm = parse_tm_tag(crs_tag)
        .ok_or_else(|| Error::arg(format!("raster CRS {crs_tag:?} is not a TM:<meridian> tag")))?;
    annotations
        .iter()
        .map(|a| {
            Ok(Annotation {
                geometry: polygon_to_tm(&a.geometry, cm)?,
                ..a.clone()
            })
        })
        .collect()
}

/// Rasterized, optionally buffered and road-merged training labels.
pub fn prepare_labels(
    annotations: &[Annotation],
    crs_tag: &str,
    transform: &GeoTransform,
    width: usize,
    height: usize,
    config: &PipelineConfig,
) -> Result<(SparseLabelMask, Vec<usize>)> {
    let projected = project_annotations(annotations, crs_tag)?;
    let r = rasterize_annotations(&projected, transform, width, height);
    let mut mask = r.mask;
    if config.buffer_buildings {
        mask = buffer_buildings(&mask, config.buffer_radius_m)?;
    }
    if config.merge_roads {
        mask = merge_roads(&mask);
    }
    Ok((mask, r.skipped))
}

/// Pixel mask of `footprints` on the given grid.
pub fn footprint_mask(footprints: &FootprintSet, transform: &GeoTransform, width: usize, height: usize) -> BinaryMask {
    let mut m = BinaryMask::zeros(width, height, *transform);
    for p in footprints.polygons() {
        burn(p, transform, width, height, &mut m.data, 1);
    }
    m
}

/// Held-out data for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalInputs {
    pub val_region: Polygon,
    pub val_buildings: Vec<Polygon>,
    pub test_buildings: Vec<Polygon>,
    pub windows: Vec<CountWindow>,
}

impl EvalInputs {
    pub fn from_scene(scene: &SyntheticScene) -> EvalInputs {
        EvalInputs {
            val_region: scene.val_region.clone(),
            val_buildings: scene.val_buildings.clone(),
            test_buildings: scene.test_buildings.clone(),
            windows: scene.windows.clone(),
        }
    }
}

pub fn write_polygons(polys: &[Polygon], crs_tag: &str) -> String {
    let items: Vec<(Polygon, Map<String, Value>)> = polys.iter().map(|p| (p.clone(), Map::new())).collect();
    write_polygon_layer(&items, Some(crs_tag))
}

pub fn read_polygons(document: &str) -> Result<Vec<Polygon>> {
    Ok(read_polygon_layer(document)?.into_iter().map(|(p, _)| p).collect())
}

/// Windows as a polygon layer with an `actual_count` property.
pub fn write_windows(windows: &[CountWindow], crs_tag: &str) -> String {
    let items: Vec<(Polygon, Map<String, Value>)> = windows
        .iter()
        .map(|w| {
            let Value::Object(m) = json!({ "actual_count": w.actual_count }) else {
                unreachable!()
            };
            (w.geometry.clone(), m)
        })
        .collect();
    write_polygon_layer(&items, Some(crs_tag))
}

pub fn read_windows(document: &str) -> Result<Vec<CountWindow>> {
    read_polygon_layer(document)?
        .into_iter()
        .enumerate()
        .map(|(k, (geometry, props))| {
            let actual_count = props
                .get("actual_count")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::parse(Some(k), "window without a non-negative integer actual_count"))?
                as usize;
            Ok(CountWindow { geometry, actual_count })
        })
        .collect()
}

/// File names used for a scene directory.
pub mod scene_files {
    pub const IMAGERY: &str = "imagery.grid";
    pub const TRUTH: &str = "truth.geojson";
    pub const LABELS: &str = "labels.geojson";
    pub const VAL_REGION: &str = "val_region.geojson";
    pub const VAL_BUILDINGS: &str = "val_buildings.geojson";
    pub const TEST_BUILDINGS: &str = "test_buildings.geojson";
    pub const WINDOWS: &str = "windows.geojson";
}

/// Writes imagery, truth, training annotations and evaluation inputs into `dir`.
pub fn write_scene(dir: impl AsRef<Path>, scene: &SyntheticScene) -> Result<()> {
    use scene_files::*;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let crs = scene.crs_tag();
    write_grid(dir.join(IMAGERY), &scene.imagery)?;
    std::fs::write(dir.join(TRUTH), write_footprints(&scene.truth))?;
    std::fs::write(dir.join(LABELS), write_annotations(&scene.train_annotations))?;
    std::fs::write(
        dir.join(VAL_REGION),
        write_polygons(std::slice::from_ref(&scene.val_region), crs),
    )?;
    std::fs::write(dir.join(VAL_BUILDINGS), write_polygons(&scene.val_buildings, crs))?;
    std::fs::write(dir.join(TEST_BUILDINGS), write_polygons(&scene.test_buildings, crs))?;
    std::fs::write(dir.join(WINDOWS), write_windows(&scene.windows, crs))?;
    Ok(())
}

impl EvalInputs {
    /// Reads the evaluation files. A missing test-building file means no
    /// Recall@k; the other three are required.
    pub fn load(
        val_region: &Path,
        val_buildings: &Path,
        test_buildings: Option<&Path>,
        windows: &Path,
    ) -> Result<EvalInputs> {
        let mut region = read_polygons(&std::fs::read_to_string(val_region)?)?;
        if region.len() != 1 {
            return Err(Error::arg(format!(
                "validation region must hold exactly one polygon, found {}",
                region.len()
            )));
        }
        let test_buildings = match test_buildings {
            Some(p) => read_polygons(&std::fs::read_to_string(p)?)?,
            None => Vec::new(),
        };
        Ok(EvalInputs {
            val_region: region.pop().unwrap(),
            val_buildings: read_polygons(&std::fs::read_to_string(val_buildings)?)?,
            test_buildings,
            windows: read_windows(&std::fs::read_to_string(windows)?)?,
        })
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<EvalInputs> {
        use scene_files::*;
        let d = dir.as_ref();
        let test = d.join(TEST_BUILDINGS);
        Self::load(
            &d.join(VAL_REGION),
            &d.join(VAL_BUILDINGS),
            test.exists().then_some(test.as_path()),
            &d.join(WINDOWS),
        )
    }
}

/// Full report for `footprints` on a `width x height` grid.
pub fn evaluate_footprints(
    footprints: &FootprintSet,
    transform: &GeoTransform,
    width: usize,
    height: usize,
    inputs: &EvalInputs,
    recall_k: &[f64],
) -> Result<EvalReport> {
    let mask = footprint_mask(footprints, transform, width, height);
    let prf = pixel_prf(&mask, &inputs.val_buildings, &inputs.val_region)?;
    let mut recall_at_k = BTreeMap::new();
    if !inputs.test_buildings.is_empty() {
        let coverage = building_coverage(&mask, &inputs.test_buildings);
        for &k in recall_k {
            recall_at_k.insert(format!("{k:.2}"), recall_from_coverage(&coverage, k)?.recall);
        }
    }
    let predicted: Vec<usize> = count_in_windows(footprints, &inputs.windows);
    let actual: Vec<usize> = inputs.windows.iter().map(|w| w.actual_count).collect();
    let (pf, af): (Vec<f64>, Vec<f64>) = predicted
        .iter()
        .zip(&actual)
        .map(|(&p, &a)| (p as f64, a as f64))
        .unzip();
    Ok(EvalReport {
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        degenerate: prf.degenerate,
        recall_at_k,
        r2: r2_score(&af, &pf).ok(),
        adjustment: fit_count_adjustment(&pf, &af).ok(),
        window_actual: actual,
        window_predicted: predicted,
    })
}

/// Output of one train -> predict -> polygonize -> evaluate run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: RandomForestModel,
    pub footprints: FootprintSet,
    pub report: EvalReport,
}

/// Trains on `annotations` and evaluates on `inputs`, all in memory.
pub fn run_in_memory(
    imagery: &GeoRaster,
    annotations: &[Annotation],
    inputs: &EvalInputs,
    config: &PipelineConfig,
) -> Result<RunOutcome> {
    let hd = imagery.header();
    let (mask, _) = prepare_labels(annotations, &hd.crs_tag, &hd.transform, hd.width, hd.height, config)?;
    let model = train_random_forest(imagery, &mask, &config.forest)?;
    let prediction = predict_proba(&model, imagery)?;
    let footprints = polygonize_raster(&prediction, &config.polygonize_config())?;
    let report = evaluate_footprints(
        &footprints,
        &hd.transform,
        hd.width,
        hd.height,
        inputs,
        &config.recall_k,
    )?;
    Ok(RunOutcome {
        model,
        footprints,
        report,
    })
}

/// One row of the label sweep CSV (`n,repeat,precision,recall,f1,r2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub repeat: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub r2: Option<f64>,
}

/// Retrains on `n` randomly drawn building annotations (all road and
/// background annotations kept) for every configured `n` and repeat.
pub fn sweep_labels(
    imagery: &GeoRaster,
    annotations: &[Annotation],
    inputs: &EvalInputs,
    config: &PipelineConfig,
) -> Result<Vec<SweepRow>> {
    let (buildings, others): (Vec<Annotation>, Vec<Annotation>) = annotations
        .iter()
        .cloned()
        .partition(|a| a.category == Category::Building);
    let mut rows = Vec::new();
    for &n in &config.sweep.label_counts {
        for repeat in 0..config.sweep.repeats {
            let seed = derive_seed(derive_seed(config.seed, n as u64), repeat as u64);
            let mut subset = subsample_annotations(&buildings, n, seed)?;
            subset.extend(others.iter().cloned());
            let mut cfg = config.clone();
            cfg.forest.seed = seed;
            let out = run_in_memory(imagery, &subset, inputs, &cfg)?;
            rows.push(SweepRow {
                n,
                repeat,
                precision: out.report.precision,
                recall: out.report.recall,
                f1: out.report.f1,
                r2: out.report.r2,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "repeat", "precision", "recall", "f1", "r2"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.repeat.to_string(),
            format!("{:.6}", r.precision),
            format!("{:.6}", r.recall),
            format!("{:.6}", r.f1),
            r.r2.map(|v| format!("{v:.6}")).unwrap_or_default(),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Mean F1 per label count, in configuration order.
pub fn mean_f1_by_n(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|e| e.0 == r.n) {
            Some(e) => {
                e.1 += r.f1;
                e.2 += 1;
            }
            None => out.push((r.n, r.f1, 1)),
        }
    }
    out.into_iter().map(|(n, s, c)| (n, s / c as f64)).collect()
}
