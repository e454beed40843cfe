use footprint_core::pipeline::{run_in_memory, EvalInputs, PipelineConfig};
use footprint_core::synth::{generate_synthetic_scene, SynthSpec};

#[test]
fn easy_scene_is_recovered() {
    let spec = SynthSpec {
        width: 1024,
        height: 1024,
        building_count: 90,
        train_buildings: 45,
        window_count: 8,
        val_region_m: 200.0,
        ..SynthSpec::default()
    };
    let scene = generate_synthetic_scene(&spec).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.forest.tree_count = 20;
    let t = std::time::Instant::now();
    let out = run_in_memory(
        &scene.imagery,
        &scene.train_annotations,
        &EvalInputs::from_scene(&scene),
        &cfg,
    )
    .unwrap();
    eprintln!(
        "{:?} {}\n{}",
        t.elapsed(),
        out.footprints.footprints.len(),
        out.report.table()
    );
    assert!(out.report.f1 > 0.8, "f1 {}", out.report.f1);
}
