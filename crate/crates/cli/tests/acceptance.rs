//! Acceptance suite. Every test writes one `A<n> PASS|FAIL ...` line to
//! stderr (uncaptured) and then asserts.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use footprint_core::eval::{fit_count_adjustment, r2_score, recall_at_k, EvalReport};
use footprint_core::footprints::{
    connected_components, median_filter, polygonize_raster, simplify_ring, trace_boundaries, BinaryMask,
    PolygonizeConfig,
};
use footprint_core::geo::projection::{forward, inverse};
use footprint_core::geo::Quality;
use footprint_core::geo::{GeoRaster, GeoTransform, GridWriter, Point, Polygon, RasterHeader, Ring, SampleType};
use footprint_core::labels::{buffer_buildings, SparseLabelMask};
use footprint_core::pipeline::{mean_f1_by_n, sweep_labels, EvalInputs, PipelineConfig};
use footprint_core::quality::{
    evaluate_repeated_splits, min_area_rect, train_quality_model, BuildingFeatureVector, GbdtConfig, QualityDataset,
    QualityRow,
};
use footprint_core::rng::XorShift64Star;
use footprint_core::synth::{generate_synthetic_scene, SynthSpec};

const BIN: &str = env!("CARGO_BIN_EXE_footprint");

fn verdict(id: &str, ok: bool, detail: &str) {
    let line = format!("{id} {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "{id} failed: {detail}");
}

fn footprint(args: &[&str]) -> (String, String) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(out.status.success(), "footprint {args:?} failed\n{stderr}");
    (stdout, stderr)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn random_mask(rng: &mut XorShift64Star, w: usize, h: usize, density: f64, t: GeoTransform) -> BinaryMask {
    let data = (0..w * h).map(|_| u8::from(rng.next_f64() < density)).collect();
    BinaryMask::new(w, h, t, data).unwrap()
}

/// Rectangles on an empty mask, so components have real shapes.
fn blob_mask(rng: &mut XorShift64Star, w: usize, h: usize, n: usize, t: GeoTransform) -> BinaryMask {
    let mut m = BinaryMask::zeros(w, h, t);
    for _ in 0..n {
        let (rh, rw) = (4 + rng.below(40) as usize, 4 + rng.below(40) as usize);
        let (r0, c0) = (rng.below(h as u64) as usize, rng.below(w as u64) as usize);
        for r in r0..(r0 + rh).min(h) {
            for c in c0..(c0 + rw).min(w) {
                m.data[r * w + c] = 1;
            }
        }
    }
    // speckle so the median has work to do
    for _ in 0..w * h / 50 {
        let k = rng.below((w * h) as u64) as usize;
        m.data[k] ^= 1;
    }
    m
}

#[test]
fn a1_end_to_end_synthetic_scene() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = d.join("scene");
    let t0 = Instant::now();
    footprint(&["synth", "--out", p(&s)]);
    footprint(&[
        "rasterize-labels",
        "--imagery",
        p(&s.join("imagery.grid")),
        "--labels",
        p(&s.join("labels.geojson")),
        "--out",
        p(&d.join("labels.grid")),
    ]);
    footprint(&[
        "train-rf",
        "--imagery",
        p(&s.join("imagery.grid")),
        "--labels",
        p(&d.join("labels.grid")),
        "--out",
        p(&d.join("rf.json")),
    ]);
    footprint(&[
        "predict",
        "--model",
        p(&d.join("rf.json")),
        "--imagery",
        p(&s.join("imagery.grid")),
        "--out",
        p(&d.join("prob.grid")),
    ]);
    footprint(&[
        "polygonize",
        "--prediction",
        p(&d.join("prob.grid")),
        "--out",
        p(&d.join("fp.geojson")),
    ]);
    footprint(&[
        "eval",
        "--footprints",
        p(&d.join("fp.geojson")),
        "--grid",
        p(&s.join("imagery.grid")),
        "--inputs",
        p(&s),
        "--out",
        p(&d.join("report.json")),
    ]);
    let wall = t0.elapsed().as_secs_f64();
    let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    let r07 = report.recall_at_k["0.70"];
    let r2 = report.r2.unwrap_or(f64::NAN);
    verdict(
        "A1",
        r07 >= 0.95 && r2 >= 0.95 && wall < 120.0,
        &format!(
            "recall@0.7={r07:.4} (>=0.95) r2={r2:.4} (>=0.95) wall={wall:.1}s (<120s) f1={:.4}",
            report.f1
        ),
    );
}

fn flood_fill(m: &BinaryMask) -> Vec<u32> {
    let (w, h) = (m.width, m.height);
    let mut lab = vec![0u32; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if m.data[start] == 0 || lab[start] != 0 {
            continue;
        }
        next += 1;
        lab[start] = next;
        let mut q = VecDeque::from([start]);
        while let Some(k) = q.pop_front() {
            let (r, c) = (k / w, k % w);
            let mut nb = Vec::with_capacity(4);
            if r > 0 {
                nb.push(k - w);
            }
            if r + 1 < h {
                nb.push(k + w);
            }
            if c > 0 {
                nb.push(k - 1);
            }
            if c + 1 < w {
                nb.push(k + 1);
            }
            for n in nb {
                if m.data[n] == 1 && lab[n] == 0 {
                    lab[n] = next;
                    q.push_back(n);
                }
            }
        }
    }
    lab
}

#[test]
fn a2_polygonization_oracle() {
    let mut rng = XorShift64Star::new(2);
    let ps = 0.5;
    let t = GeoTransform::new(500_000.0, 3_500_000.0, ps).unwrap();
    let mut bad = Vec::new();
    let mut components = 0;
    for case in 0..100 {
        let (w, h) = (1 + rng.below(64) as usize, 1 + rng.below(64) as usize);
        let density = rng.uniform(0.2, 0.8);
        let m = random_mask(&mut rng, w, h, density, t);
        let tile = 1 + rng.below(20) as usize;
        let labels = connected_components(&m, tile);
        let oracle = flood_fill(&m);
        if labels.labels != oracle {
            bad.push(format!("case {case}: partition differs"));
            continue;
        }
        for id in 1..=labels.count {
            components += 1;
            let poly = trace_boundaries(&labels, id).unwrap();
            let want = labels.pixel_count(id) as f64 * ps * ps;
            if poly.area() != want {
                bad.push(format!("case {case} id {id}: area {} != {want}", poly.area()));
            }
        }
    }
    verdict(
        "A2",
        bad.is_empty(),
        &format!("100 masks, {components} components, mismatches={bad:?}"),
    );
}

fn brute_median(m: &BinaryMask) -> Vec<u8> {
    let (w, h) = (m.width as isize, m.height as isize);
    let mut out = vec![0u8; m.data.len()];
    for r in 0..h {
        for c in 0..w {
            let mut ones = 0;
            for dr in -3..=3 {
                for dc in -3..=3 {
                    let rr = (r + dr).clamp(0, h - 1);
                    let cc = (c + dc).clamp(0, w - 1);
                    ones += m.data[(rr * w + cc) as usize] as u32;
                }
            }
            out[(r * w + c) as usize] = u8::from(ones * 2 > 49);
        }
    }
    out
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p.x - a.x - t * dx).powi(2) + (p.y - a.y - t * dy).powi(2)).sqrt()
}

fn dp_recursive(pts: &[Point], tol: f64, out: &mut Vec<Point>) {
    // pushes pts[0] and every kept interior point, not the last one
    out.push(pts[0]);
    if pts.len() < 3 {
        return;
    }
    let last = pts.len() - 1;
    let (mut best, mut best_d) = (0, -1.0);
    for (k, &q) in pts.iter().enumerate().take(last).skip(1) {
        let d = seg_dist(q, pts[0], pts[last]);
        if d > best_d {
            best = k;
            best_d = d;
        }
    }
    if best_d > tol {
        out.pop();
        dp_recursive(&pts[..=best], tol, out);
        dp_recursive(&pts[best..], tol, out);
    }
}

/// Cut at the farthest pair (first pair on ties), simplify both halves.
fn dp_ring_reference(ring: &[Point], tol: f64) -> Vec<Point> {
    let open = &ring[..ring.len() - 1];
    let n = open.len();
    let (mut i, mut j, mut best) = (0, 0, -1.0);
    for a in 0..n {
        for b in a + 1..n {
            let d = (open[a].x - open[b].x).powi(2) + (open[a].y - open[b].y).powi(2);
            if d > best {
                (i, j, best) = (a, b, d);
            }
        }
    }
    let first: Vec<Point> = open[i..=j].to_vec();
    let second: Vec<Point> = open[j..].iter().chain(&open[..=i]).copied().collect();
    let mut kept = Vec::new();
    dp_recursive(&first, tol, &mut kept);
    dp_recursive(&second, tol, &mut kept);
    // rotate so the lowest input index comes first
    let index_of = |q: &Point| open.iter().position(|o| o == q).unwrap();
    let start = kept.iter().enumerate().min_by_key(|(_, q)| index_of(q)).unwrap().0;
    let mut out: Vec<Point> = kept[start..].iter().chain(&kept[..start]).copied().collect();
    out.push(out[0]);
    out
}

fn random_star_ring(rng: &mut XorShift64Star) -> Vec<Point> {
    let n = 5 + rng.below(60) as usize;
    // one angle per sector keeps the ring simple
    let sector = std::f64::consts::TAU / n as f64;
    let angles: Vec<f64> = (0..n).map(|k| (k as f64 + rng.next_f64()) * sector).collect();
    let (cx, cy) = (rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3));
    let mut pts: Vec<Point> = angles
        .iter()
        .map(|a| {
            let r = rng.uniform(5.0, 20.0);
            Point::new(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    pts.push(pts[0]);
    pts
}

fn brute_buffer(m: &SparseLabelMask, radius: f64) -> Vec<u8> {
    let (w, h) = (m.width as isize, m.height as isize);
    let ps = m.transform.pixel_size;
    let reach = (radius / ps).ceil() as isize;
    let mut out = m.labels.clone();
    for r in 0..h {
        for c in 0..w {
            let k = (r * w + c) as usize;
            if m.labels[k] != 255 {
                continue;
            }
            let mut near = false;
            for rr in (r - reach).max(0)..=(r + reach).min(h - 1) {
                for cc in (c - reach).max(0)..=(c + reach).min(w - 1) {
                    let d = (((rr - r).pow(2) + (cc - c).pow(2)) as f64).sqrt() * ps;
                    near |= m.labels[(rr * w + cc) as usize] == 1 && d <= radius;
                }
            }
            if near {
                out[k] = 0;
            }
        }
    }
    out
}

#[test]
fn a3_stage_oracles() {
    let mut rng = XorShift64Star::new(3);
    let t = GeoTransform::new(0.0, 100.0, 0.5).unwrap();

    let mut median_bad = 0;
    for _ in 0..200 {
        let (w, h) = (1 + rng.below(64) as usize, 1 + rng.below(64) as usize);
        let density = rng.uniform(0.1, 0.9);
        let m = random_mask(&mut rng, w, h, density, t);
        median_bad += usize::from(median_filter(&m).data != brute_median(&m));
    }

    let mut dp_bad = 0;
    for _ in 0..1000 {
        let ring = random_star_ring(&mut rng);
        let tol = rng.uniform(0.1, 4.0);
        let got = simplify_ring(&ring, tol).unwrap();
        dp_bad += usize::from(got.points() != dp_ring_reference(&ring, tol).as_slice());
    }

    let mut buffer_bad = 0;
    let codes = [0u8, 1, 2, 255, 255, 255, 255];
    for _ in 0..100 {
        let (w, h) = (1 + rng.below(48) as usize, 1 + rng.below(48) as usize);
        let labels: Vec<u8> = (0..w * h)
            .map(|_| codes[rng.below(codes.len() as u64) as usize])
            .collect();
        let labels: Vec<u8> = labels
            .into_iter()
            .map(|l| if l == 1 && rng.next_f64() < 0.9 { 255 } else { l })
            .collect();
        let m = SparseLabelMask::from_labels(w, h, t, labels).unwrap();
        buffer_bad += usize::from(buffer_buildings(&m, 2.0).unwrap().labels != brute_buffer(&m, 2.0));
    }
    verdict(
        "A3",
        median_bad == 0 && dp_bad == 0 && buffer_bad == 0,
        &format!("median 0/200 expected, got {median_bad}; dp 0/1000 expected, got {dp_bad}; buffer 0/100 expected, got {buffer_bad}"),
    );
}

fn peak_kb(stderr: &str) -> u64 {
    stderr
        .lines()
        .filter_map(|l| l.split("peak_rss_kb=").nth(1))
        .filter_map(|v| v.trim().parse().ok())
        .max()
        .unwrap_or(u64::MAX)
}

#[test]
fn a4_tiling_invariance_and_memory() {
    let mut rng = XorShift64Star::new(4);
    let t = GeoTransform::new(200_000.0, 3_000_000.0, 0.5).unwrap();
    let mut differing = 0;
    let mut total = 0;
    for _ in 0..20 {
        let (w, h) = (900 + rng.below(400) as usize, 900 + rng.below(400) as usize);
        let m = blob_mask(&mut rng, w, h, 150, t);
        let raster = m.to_raster("TM:36").unwrap();
        let run = |tile| {
            let cfg = PolygonizeConfig {
                tile_size: tile,
                ..PolygonizeConfig::default()
            };
            polygonize_raster(&raster, &cfg).unwrap()
        };
        let full = run(w.max(h));
        total += full.len();
        differing += usize::from(run(256) != full || run(1024) != full);
    }

    // 16384 x 16384 u8 prediction written in strips, polygonized by the binary
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("big.grid");
    let n = 16_384usize;
    let header = RasterHeader {
        width: n,
        height: n,
        bands: 1,
        sample_type: SampleType::U8,
        nodata: None,
        transform: t,
        crs_tag: "TM:36".into(),
    };
    let mut writer = GridWriter::create(&grid, header).unwrap();
    let strip = 512;
    for r0 in (0..n).step_by(strip) {
        // a 24x24 building in most 64x64 cells, size varying with the cell
        let mut data = vec![0u8; strip * n];
        for r in 0..strip {
            let (gr, cr) = ((r0 + r) / 64, (r0 + r) % 64);
            for c in 0..n {
                let (gc, cc) = (c / 64, c % 64);
                let side = 16 + (gr * 7 + gc * 13) % 24;
                if (gr + gc) % 5 != 0 && cr >= 8 && cr < 8 + side && cc >= 8 && cc < 8 + side {
                    data[r * n + c] = 1;
                }
            }
        }
        let block = GeoRaster::from_u8(n, strip, data, t, None, "TM:36").unwrap();
        writer.write_window(r0, 0, &block).unwrap();
    }
    writer.finish().unwrap();
    let out = dir.path().join("big.geojson");
    let (stdout, stderr) = footprint(&["polygonize", "--prediction", p(&grid), "--out", p(&out)]);
    let peak = peak_kb(&stderr);
    verdict(
        "A4",
        differing == 0 && peak < 1024 * 1024,
        &format!(
            "20 scenes ({total} footprints), tile-dependent results={differing}; 16384^2 peak_rss={} MB (<1024) [{}]",
            peak / 1024,
            stdout.trim()
        ),
    );
}

#[test]
fn a5_metrics() {
    let mut rng = XorShift64Star::new(5);
    let t = GeoTransform::new(0.0, 200.0, 0.5).unwrap();
    let mut monotone = true;
    for _ in 0..30 {
        let density = rng.uniform(0.2, 0.8);
        let m = random_mask(&mut rng, 200, 200, density, t);
        let buildings: Vec<Polygon> = (0..40)
            .map(|_| {
                let (x, y) = (rng.uniform(0.0, 90.0), rng.uniform(100.0, 190.0));
                Polygon::rect(x, y, x + rng.uniform(2.0, 10.0), y + rng.uniform(2.0, 10.0))
            })
            .collect();
        let mut ks: Vec<f64> = (0..25).map(|_| rng.uniform(1e-6, 1.0)).collect();
        ks.push(1.0);
        ks.sort_by(f64::total_cmp);
        let r: Vec<f64> = ks
            .iter()
            .map(|&k| recall_at_k(&m, &buildings, k).unwrap().recall)
            .collect();
        monotone &= r.windows(2).all(|w| w[1] <= w[0]);
    }
    let perfect = r2_score(&[1.0, 2.0, 3.0, 7.0], &[1.0, 2.0, 3.0, 7.0]).unwrap();
    let mean = r2_score(&[1.0, 2.0, 3.0, 6.0], &[3.0; 4]).unwrap();
    let hand = r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 6.0]).unwrap();
    let pred: Vec<f64> = (0..29).map(|k| (k * 7 % 23) as f64).collect();
    let actual: Vec<f64> = pred.iter().map(|x| 2.0 * x + 3.0).collect();
    let adj = fit_count_adjustment(&pred, &actual).unwrap();
    let adj_ok = (adj.slope - 2.0).abs() < 1e-9 && (adj.intercept - 3.0).abs() < 1e-9 && adj.rmse < 1e-9;
    verdict(
        "A5",
        monotone && perfect == 1.0 && mean == 0.0 && (hand + 3.5).abs() < 1e-12 && adj_ok,
        &format!(
            "recall@k monotone={monotone} r2(perfect)={perfect} r2(mean)={mean} r2(hand)={hand} adjustment=({:.12}, {:.12}, {:.1e})",
            adj.slope, adj.intercept, adj.rmse
        ),
    );
}

fn sweep_area(points: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for step in 0..9000 {
        let a = (step as f64 * 0.01).to_radians();
        let (s, c) = a.sin_cos();
        let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for q in points {
            let (u, v) = (q.x * c + q.y * s, -q.x * s + q.y * c);
            u0 = u0.min(u);
            u1 = u1.max(u);
            v0 = v0.min(v);
            v1 = v1.max(v);
        }
        best = best.min((u1 - u0) * (v1 - v0));
    }
    best
}

#[test]
fn a6_min_area_rect() {
    let mut rng = XorShift64Star::new(6);
    let mut worst_oracle = 0.0f64;
    let mut worst_motion = 0.0f64;
    let mut above_sweep = 0;
    for _ in 0..500 {
        let ring = random_star_ring(&mut rng);
        let poly = Polygon::new(Ring::new(ring.clone()).unwrap(), Vec::new());
        let got = min_area_rect(&poly).unwrap().area;
        let oracle = sweep_area(&ring);
        // the sweep samples angles, so it can only overestimate
        worst_oracle = worst_oracle.max((oracle - got) / oracle);
        above_sweep += usize::from(got > oracle * (1.0 + 1e-12));
        let theta = rng.uniform(0.0, std::f64::consts::TAU);
        let (s, c) = theta.sin_cos();
        let (dx, dy) = (rng.uniform(-5e3, 5e3), rng.uniform(-5e3, 5e3));
        let moved = poly.map_points(|q| Point::new(q.x * c - q.y * s + dx, q.x * s + q.y * c + dy));
        let a2 = min_area_rect(&moved).unwrap().area;
        worst_motion = worst_motion.max((a2 - got).abs() / got);
    }
    verdict(
        "A6",
        worst_oracle <= 1e-3 && above_sweep == 0 && worst_motion <= 1e-9,
        &format!(
            "500 polygons, worst gap to 0.01 deg sweep={worst_oracle:.2e} (<=1e-3), larger than sweep={above_sweep}, rigid motion={worst_motion:.2e} (<=1e-9)"
        ),
    );
}

fn quality_row(k: usize, rng: &mut XorShift64Star) -> QualityRow {
    let low = k.is_multiple_of(3);
    let features = if low {
        BuildingFeatureVector {
            area_m2: rng.uniform(5.0, 40.0),
            mbr_ratio: rng.uniform(1.6, 3.0),
            neighbors_200m: rng.below(5) as usize,
            nearest_dist_m: rng.uniform(0.0, 2.0),
            max_slope_deg: rng.uniform(20.0, 45.0),
            corner_count: 8 + rng.below(20) as usize,
            dem_missing: false,
        }
    } else {
        BuildingFeatureVector {
            area_m2: rng.uniform(80.0, 600.0),
            mbr_ratio: rng.uniform(1.0, 1.3),
            neighbors_200m: 5 + rng.below(40) as usize,
            nearest_dist_m: rng.uniform(3.0, 30.0),
            max_slope_deg: rng.uniform(0.0, 15.0),
            corner_count: 4 + rng.below(4) as usize,
            dem_missing: false,
        }
    };
    QualityRow {
        id: format!("fp-{}", k + 1),
        features,
        label: Some(if low { Quality::LowQuality } else { Quality::Regular }),
    }
}

#[test]
fn a7_gbdt() {
    let mut rng = XorShift64Star::new(7);
    let ds = QualityDataset {
        rows: (0..240).map(|k| quality_row(k, &mut rng)).collect(),
    };
    let cfg = GbdtConfig::default();
    let report = evaluate_repeated_splits(&ds, 50, 0.25, 7, &cfg).unwrap();
    let model = train_quality_model(&ds, &cfg).unwrap();
    let imp_sum: f64 = model.importances.iter().sum();
    let loss_ok = model.train_loss.windows(2).all(|w| w[1] <= w[0]);
    let (fr, fl) = (report.f1_regular.mean, report.f1_low_quality.mean);
    verdict(
        "A7",
        fr >= 0.95 && fl >= 0.95 && (imp_sum - 100.0).abs() <= 1e-6 && loss_ok,
        &format!(
            "f1_regular={fr:.4} f1_low_quality={fl:.4} over {} splits; importance sum={imp_sum:.9}; loss non-increasing={loss_ok}",
            report.repeats
        ),
    );
}

#[test]
fn a8_label_sweep() {
    let spec = SynthSpec {
        building_count: 600,
        train_buildings: 420,
        difficulty: 0.6,
        ..SynthSpec::default()
    };
    let scene = generate_synthetic_scene(&spec).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.forest.tree_count = 10;
    cfg.sweep.label_counts = vec![50, 200, 400];
    cfg.sweep.repeats = 5;
    let rows = sweep_labels(
        &scene.imagery,
        &scene.train_annotations,
        &EvalInputs::from_scene(&scene),
        &cfg,
    )
    .unwrap();
    let means = mean_f1_by_n(&rows);
    let f1 = |n| means.iter().find(|m| m.0 == n).unwrap().1;
    let curve: Vec<String> = means.iter().map(|(n, f)| format!("n={n}:{f:.4}")).collect();
    verdict(
        "A8",
        rows.len() == 15 && f1(400) > f1(50),
        &format!("{} runs, mean f1 {}", rows.len(), curve.join(" ")),
    );
}

/// Conformal continuation of the meridian arc evaluated at 40 significant
/// digits: (lat, lon - cm, easting, northing).
const TM_REFERENCE: [(f64, f64, f64, f64); 12] = [
    (0.0, 0.5, 555_638.192_444_179_7, 0.0),
    (0.0, 2.9, 822_836.194_043_743_2, 0.0),
    (15.0, 1.0, 607_512.227_676_308_8, 1_658_568.840_997_084_3),
    (31.95, -0.07, 493_384.539_597_634_2, 3_534_895.730_902_998_7),
    (31.95, 2.5, 736_299.653_858_654_2, 3_537_622.714_227_199),
    (45.0, 1.0, 578_815.302_916_711, 4_983_436.768_349_297),
    (45.0, -2.999, 263_632.789_302_136_63, 4_987_326.584_440_044),
    (60.0, 2.0, 611_544.041_976_835_2, 6_653_097.435_294_964),
    (75.0, 2.9, 583_751.310_468_802_8, 8_325_654.604_651_541),
    (-33.5, 1.7, 657_914.263_781_411_7, -3_708_012.475_183_506),
    (-60.0, -2.2, 377_304.169_985_876_4, -6_653_451.568_622_469),
    (83.0, 2.9, 539_440.898_793_550_9, 9_217_449.938_540_427),
];

#[test]
fn a9_projection() {
    let mut worst_fwd = 0.0f64;
    for (lat, dlon, e, n) in TM_REFERENCE {
        let cm = 36.0;
        let got = forward(lat, cm + dlon, cm).unwrap();
        worst_fwd = worst_fwd.max((got.easting - e).abs()).max((got.northing - n).abs());
    }
    let mut rng = XorShift64Star::new(9);
    let mut worst_rt = 0.0f64;
    for _ in 0..10_000 {
        let cm = rng.uniform(-177.0, 177.0);
        let (lat, lon) = (rng.uniform(-83.9, 83.9), cm + rng.uniform(-5.9, 5.9));
        let en = forward(lat, lon, cm).unwrap();
        let back = inverse(en.easting, en.northing, cm).unwrap();
        worst_rt = worst_rt.max((back.lat - lat).abs()).max((back.lon - lon).abs());
    }
    verdict(
        "A9",
        worst_fwd < 1e-3 && worst_rt < 1e-9,
        &format!(
            "forward worst error={worst_fwd:.2e} m (<1e-3) over {} points, round trip worst={worst_rt:.2e} deg (<1e-9)",
            TM_REFERENCE.len()
        ),
    );
}
