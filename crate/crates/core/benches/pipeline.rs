//! Sequential vs parallel timings of the heavy stages. With the `parallel`
//! feature off both variants run the same sequential code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use footprint_core::footprints::{median_filter, polygonize_raster, BinaryMask, PolygonizeConfig};
use footprint_core::forest::{predict_proba, train_random_forest, ForestConfig};
use footprint_core::par;
use footprint_core::pipeline::{prepare_labels, PipelineConfig};
use footprint_core::quality::features::extract_all;
use footprint_core::synth::{generate_synthetic_scene, SynthSpec};

const MODES: [(&str, usize); 2] = [("sequential", 1), ("parallel", 0)];

fn bench(c: &mut Criterion) {
    let spec = SynthSpec {
        width: 1024,
        height: 1024,
        building_count: 120,
        train_buildings: 60,
        ..SynthSpec::default()
    };
    let scene = generate_synthetic_scene(&spec).unwrap();
    let t = *scene.transform();
    let cfg = PipelineConfig::default();
    let (labels, _) = prepare_labels(&scene.train_annotations, scene.crs_tag(), &t, 1024, 1024, &cfg).unwrap();
    let forest_cfg = ForestConfig {
        tree_count: 10,
        ..ForestConfig::default()
    };
    let model = train_random_forest(&scene.imagery, &labels, &forest_cfg).unwrap();
    let prob = predict_proba(&model, &scene.imagery).unwrap();
    let mask = BinaryMask::new(
        1024,
        1024,
        t,
        prob.as_f32().unwrap().iter().map(|&p| u8::from(p >= 0.5)).collect(),
    )
    .unwrap();
    let poly_cfg = PolygonizeConfig {
        tile_size: 256,
        ..cfg.polygonize_config()
    };

    let mut g = c.benchmark_group("stages");
    g.sample_size(10);
    for (name, workers) in MODES {
        g.bench_with_input(BenchmarkId::new("median_1024", name), &workers, |b, &w| {
            b.iter(|| par::with_workers(w, || median_filter(&mask)))
        });
        g.bench_with_input(BenchmarkId::new("polygonize_1024", name), &workers, |b, &w| {
            b.iter(|| par::with_workers(w, || polygonize_raster(&prob, &poly_cfg).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("predict_1024_10_trees", name), &workers, |b, &w| {
            b.iter(|| par::with_workers(w, || predict_proba(&model, &scene.imagery).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("quality_features", name), &workers, |b, &w| {
            b.iter(|| par::with_workers(w, || extract_all(&scene.truth, None)))
        });
        g.bench_with_input(BenchmarkId::new("train_rf_10_trees", name), &workers, |b, &w| {
            b.iter(|| par::with_workers(w, || train_random_forest(&scene.imagery, &labels, &forest_cfg).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
