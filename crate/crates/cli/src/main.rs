use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use footprint_core::change::{adjusted_totals, build_change_grid};
use footprint_core::eval::{CountAdjustment, EvalReport};
use footprint_core::footprints::polygonize;
use footprint_core::forest::{predict_to_grid, train_random_forest, RandomForestModel};
use footprint_core::geo::raster::{read_header, write_grid};
use footprint_core::geo::{parse_annotations, read_footprints, write_footprints, GridFile};
use footprint_core::labels::SparseLabelMask;
use footprint_core::par;
use footprint_core::pipeline::{
    evaluate_footprints, mean_f1_by_n, prepare_labels, scene_files, sweep_labels, write_scene, write_sweep_csv,
    EvalInputs, PipelineConfig,
};
use footprint_core::quality::{
    classify_footprints, evaluate_repeated_splits, train_quality_model, GbdtModel, QualityDataset, FEATURE_NAMES,
};
use footprint_core::synth::{generate_synthetic_scene, SynthSpec};

mod log;

use log::Stage;

#[derive(Parser, Debug)]
#[command(
    name = "footprint",
    version,
    about = "Building footprint extraction from RGB imagery"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the configuration file.
#[derive(Args, Debug, Default)]
#[command(next_help_heading = "Pipeline options")]
struct GlobalOpts {
    /// Pipeline configuration (JSON). Defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    tile_size: Option<usize>,
    #[arg(long, global = true)]
    dp_tolerance: Option<f64>,
    #[arg(long, global = true)]
    min_area: Option<f64>,
    #[arg(long, global = true)]
    buffer_radius: Option<f64>,
    /// Do not convert unknown pixels near buildings to background.
    #[arg(long, global = true)]
    no_buffer: bool,
    /// Keep roads as unknown instead of folding them into background.
    #[arg(long, global = true)]
    no_merge_roads: bool,
    /// Random forest tree count.
    #[arg(long, global = true)]
    trees: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rasterize GeoJSON annotations onto an imagery grid.
    RasterizeLabels {
        #[arg(long)]
        imagery: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the per-pixel random forest.
    TrainRf {
        #[arg(long)]
        imagery: PathBuf,
        /// Label grid from rasterize-labels, or a GeoJSON annotation file.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a building probability grid.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        imagery: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        strip_rows: usize,
    },
    /// Turn a prediction grid into footprint polygons.
    Polygonize {
        #[arg(long)]
        prediction: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score footprints against held-out buildings and count windows.
    Eval {
        #[arg(long)]
        footprints: PathBuf,
        /// Any grid on the target pixel lattice (imagery or prediction).
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        inputs: EvalPaths,
        /// Report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrain on subsets of the building labels and record the metrics.
    SweepLabels {
        #[arg(long)]
        imagery: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        inputs: EvalPaths,
        /// Comma separated label counts.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-cell footprint counts at two dates.
    Change {
        #[arg(long)]
        t0: PathBuf,
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cell_size: Option<f64>,
        /// Eval report whose count adjustment is applied to the totals.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compute per-building quality features as CSV.
    QualityExtract {
        #[arg(long)]
        footprints: PathBuf,
        #[arg(long)]
        dem: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the quality classifier on labeled feature rows.
    QualityTrain {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also run repeated train/test splits and write them here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Label footprints as regular or low quality.
    QualityClassify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        footprints: PathBuf,
        #[arg(long)]
        dem: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic scene directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Scene specification (JSON); fields left out keep their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        buildings: Option<usize>,
        #[arg(long)]
        train_buildings: Option<usize>,
        #[arg(long)]
        difficulty: Option<f64>,
    },
    /// Print the effective configuration as JSON.
    Config,
}

#[derive(Args, Debug)]
struct EvalPaths {
    /// Directory holding the files written by `synth`.
    #[arg(long)]
    inputs: Option<PathBuf>,
    #[arg(long)]
    val_region: Option<PathBuf>,
    #[arg(long)]
    val_buildings: Option<PathBuf>,
    #[arg(long)]
    test_buildings: Option<PathBuf>,
    #[arg(long)]
    windows: Option<PathBuf>,
}

impl EvalPaths {
    fn load(&self) -> anyhow::Result<EvalInputs> {
        let pick = |explicit: &Option<PathBuf>, name: &str| -> Option<PathBuf> {
            explicit.clone().or_else(|| self.inputs.as_ref().map(|d| d.join(name)))
        };
        let need = |p: Option<PathBuf>, flag: &str| p.with_context(|| format!("--{flag} or --inputs is required"));
        let region = need(pick(&self.val_region, scene_files::VAL_REGION), "val-region")?;
        let buildings = need(pick(&self.val_buildings, scene_files::VAL_BUILDINGS), "val-buildings")?;
        let windows = need(pick(&self.windows, scene_files::WINDOWS), "windows")?;
        let test = pick(&self.test_buildings, scene_files::TEST_BUILDINGS).filter(|p| p.exists());
        Ok(EvalInputs::load(&region, &buildings, test.as_deref(), &windows)?)
    }
}

fn config(g: &GlobalOpts) -> anyhow::Result<PipelineConfig> {
    let mut c = match &g.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(v) = g.workers {
        c.workers = v;
    }
    if let Some(v) = g.seed {
        c.seed = v;
        c.forest.seed = v;
        c.gbdt.seed = v;
    }
    if let Some(v) = g.threshold {
        c.threshold = v;
    }
    if let Some(v) = g.tile_size {
        c.tile_size = v;
    }
    if let Some(v) = g.dp_tolerance {
        c.dp_tolerance_m = v;
    }
    if let Some(v) = g.min_area {
        c.min_area_m2 = v;
    }
    if let Some(v) = g.buffer_radius {
        c.buffer_radius_m = v;
    }
    if let Some(v) = g.trees {
        c.forest.tree_count = v;
    }
    c.buffer_buildings &= !g.no_buffer;
    c.merge_roads &= !g.no_merge_roads;
    c.validate()?;
    Ok(c)
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_dem(path: &Option<PathBuf>) -> anyhow::Result<Option<footprint_core::geo::GeoRaster>> {
    path.as_ref()
        .map(|p| GridFile::open(p).and_then(|g| g.read_all()))
        .transpose()
        .map_err(Into::into)
}

fn load_annotations(path: &Path) -> anyhow::Result<Vec<footprint_core::geo::Annotation>> {
    let set = parse_annotations(&read_text(path)?)?;
    for issue in &set.issues {
        eprintln!("warning: feature {} skipped: {}", issue.index, issue.message);
    }
    Ok(set.annotations)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = config(&cli.global)?;
    let seed = cli.global.seed;
    par::with_workers(cfg.workers, || dispatch(cli.command, &cfg, seed))
}

/// `seed` is the raw `--seed` flag, which also reseeds `synth`.
fn dispatch(command: Command, cfg: &PipelineConfig, seed: Option<u64>) -> anyhow::Result<()> {
    match command {
        Command::RasterizeLabels { imagery, labels, out } => {
            let _s = Stage::new("rasterize-labels");
            let hd = read_header(&imagery)?;
            let anns = load_annotations(&labels)?;
            let (mask, skipped) = prepare_labels(&anns, &hd.crs_tag, &hd.transform, hd.width, hd.height, cfg)?;
            if !skipped.is_empty() {
                eprintln!("warning: {} annotations fall outside the grid", skipped.len());
            }
            write_grid(&out, &mask.to_raster(&hd.crs_tag)?)?;
            println!(
                "building={} background={} road={}",
                mask.count(1),
                mask.count(0),
                mask.count(2)
            );
        }
        Command::TrainRf { imagery, labels, out } => {
            let _s = Stage::new("train-rf");
            let img = GridFile::open(&imagery)?.read_all()?;
            let mask = if labels.extension().is_some_and(|e| e == "grid") {
                SparseLabelMask::from_raster(&GridFile::open(&labels)?.read_all()?)?
            } else {
                let hd = img.header();
                prepare_labels(
                    &load_annotations(&labels)?,
                    &hd.crs_tag,
                    &hd.transform,
                    hd.width,
                    hd.height,
                    cfg,
                )?
                .0
            };
            let model = train_random_forest(&img, &mask, &cfg.forest)?;
            model.save(&out)?;
            println!("trees={}", model.trees.len());
        }
        Command::Predict {
            model,
            imagery,
            out,
            strip_rows,
        } => {
            let _s = Stage::new("predict");
            let m = RandomForestModel::load(&model)?;
            let src = GridFile::open(&imagery)?;
            predict_to_grid(&m, &src, &out, strip_rows)?;
        }
        Command::Polygonize { prediction, out } => {
            let _s = Stage::new("polygonize");
            let src = GridFile::open(&prediction)?;
            let (set, stats) = polygonize(&src, &cfg.polygonize_config())?;
            write_text(&out, &write_footprints(&set))?;
            println!(
                "footprints={} components={} removed_small={} strips={} peak_open_components={}",
                set.len(),
                stats.components,
                stats.removed_small,
                stats.strips,
                stats.peak_open_components
            );
        }
        Command::Eval {
            footprints,
            grid,
            inputs,
            out,
        } => {
            let _s = Stage::new("eval");
            let hd = read_header(&grid)?;
            let set = read_footprints(&read_text(&footprints)?)?;
            let report = evaluate_footprints(&set, &hd.transform, hd.width, hd.height, &inputs.load()?, &cfg.recall_k)?;
            if let Some(p) = out {
                write_text(&p, &serde_json::to_string_pretty(&report)?)?;
            }
            print!("{}", report.table());
        }
        Command::SweepLabels {
            imagery,
            labels,
            inputs,
            counts,
            repeats,
            out,
        } => {
            let _s = Stage::new("sweep-labels");
            let mut c = cfg.clone();
            if let Some(v) = counts {
                c.sweep.label_counts = v;
            }
            if let Some(v) = repeats {
                c.sweep.repeats = v;
            }
            c.validate()?;
            let img = GridFile::open(&imagery)?.read_all()?;
            let rows = sweep_labels(&img, &load_annotations(&labels)?, &inputs.load()?, &c)?;
            let file = fs::File::create(&out).with_context(|| format!("writing {}", out.display()))?;
            write_sweep_csv(&rows, std::io::BufWriter::new(file))?;
            for (n, f1) in mean_f1_by_n(&rows) {
                println!("n={n} mean_f1={f1:.4}");
            }
        }
        Command::Change {
            t0,
            t1,
            out,
            cell_size,
            report,
        } => {
            let _s = Stage::new("change");
            let a = read_footprints(&read_text(&t0)?)?;
            let b = read_footprints(&read_text(&t1)?)?;
            let grid = build_change_grid(&a, &b, cell_size.unwrap_or(cfg.cell_size_m))?;
            write_text(&out, &grid.to_geojson(Some(&a.crs_tag)))?;
            let adj = match report {
                Some(p) => {
                    let r: EvalReport = serde_json::from_str(&read_text(&p)?)?;
                    r.adjustment.context("report has no count adjustment")?
                }
                None => CountAdjustment::IDENTITY,
            };
            println!(
                "t0={} t1={} adjusted_t0={:.1} adjusted_t1={:.1}",
                a.len(),
                b.len(),
                adjusted_totals(&a, &adj, cfg.window_size_m)?,
                adjusted_totals(&b, &adj, cfg.window_size_m)?
            );
        }
        Command::QualityExtract { footprints, dem, out } => {
            let _s = Stage::new("quality-extract");
            let set = read_footprints(&read_text(&footprints)?)?;
            let ds = QualityDataset::from_footprints(&set, load_dem(&dem)?.as_ref());
            ds.save(&out)?;
            println!("rows={}", ds.len());
        }
        Command::QualityTrain { features, out, report } => {
            let _s = Stage::new("quality-train");
            let ds = QualityDataset::load(&features)?;
            let model = train_quality_model(&ds, &cfg.gbdt)?;
            model.save(&out)?;
            for (name, imp) in FEATURE_NAMES.iter().zip(model.importances) {
                println!("{name:<16}{imp:>8.2}");
            }
            if let Some(p) = report {
                let q = &cfg.quality_eval;
                let r = evaluate_repeated_splits(&ds, q.repeats, q.test_fraction, cfg.seed, &cfg.gbdt)?;
                write_text(&p, &serde_json::to_string_pretty(&r)?)?;
                println!(
                    "f1_regular={:.4}±{:.4} f1_low_quality={:.4}±{:.4}",
                    r.f1_regular.mean, r.f1_regular.std, r.f1_low_quality.mean, r.f1_low_quality.std
                );
            }
        }
        Command::QualityClassify {
            model,
            footprints,
            dem,
            out,
        } => {
            let _s = Stage::new("quality-classify");
            let m = GbdtModel::load(&model)?;
            let set = read_footprints(&read_text(&footprints)?)?;
            let classified = classify_footprints(&m, &set, load_dem(&dem)?.as_ref());
            write_text(&out, &write_footprints(&classified))?;
            let low = classified
                .footprints
                .iter()
                .filter(|f| f.quality == Some(footprint_core::geo::Quality::LowQuality))
                .count();
            println!("footprints={} low_quality={low}", classified.len());
        }
        Command::Synth {
            out,
            spec,
            width,
            height,
            buildings,
            train_buildings,
            difficulty,
        } => {
            let _s = Stage::new("synth");
            let mut s: SynthSpec = match spec {
                Some(p) => serde_json::from_str(&read_text(&p)?)?,
                None => SynthSpec::default(),
            };
            if let Some(v) = width {
                s.width = v;
            }
            if let Some(v) = height {
                s.height = v;
            }
            if let Some(v) = buildings {
                s.building_count = v;
            }
            if let Some(v) = train_buildings {
                s.train_buildings = v;
            }
            if let Some(v) = difficulty {
                s.difficulty = v;
            }
            if let Some(v) = seed {
                s.seed = v;
            }
            let scene = generate_synthetic_scene(&s)?;
            write_scene(&out, &scene)?;
            println!("buildings={} windows={}", scene.truth.len(), scene.windows.len());
        }
        Command::Config => {
            println!("{}", cfg.to_json()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    std::panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(_) => ExitCode::from(2),
    }
}
