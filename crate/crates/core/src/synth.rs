//! Deterministic synthetic scenes: RGB imagery with rectangular and L-shaped
//! buildings, roads and textured ground, plus the truth footprints, sparse
//! training annotations, a densely labeled validation region, test
//! buildings and counting windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{count_intersecting, CountWindow};
use crate::geo::projection::{forward, polygon_from_tm};
use crate::geo::{
    Annotation, Category, Confidence, Footprint, FootprintSet, GeoRaster, GeoTransform, Point, Polygon, RasterHeader,
    Ring, SampleType, Samples,
};
use crate::rng::{derive_seed, XorShift64Star};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub pixel_size: f64,
    pub building_count: usize,
    pub min_side_m: f64,
    pub max_side_m: f64,
    /// Share of buildings drawn as L shapes.
    pub l_shape_fraction: f64,
    pub min_gap_m: f64,
    pub road_count: usize,
    pub road_width_m: f64,
    /// Buildings exported as training annotations.
    pub train_buildings: usize,
    /// Background patches exported as training annotations.
    pub background_patches: usize,
    /// Side of the densely labeled square validation region, in meters.
    pub val_region_m: f64,
    pub window_count: usize,
    pub window_size_m: f64,
    /// 0 gives well separated colors; 1 adds look-alike roofs and ground,
    /// and more noise.
    pub difficulty: f64,
    pub noise_std: f64,
    /// Geographic anchor of the upper-left corner.
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub central_meridian: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            width: 2048,
            height: 2048,
            pixel_size: 0.5,
            building_count: 300,
            min_side_m: 9.0,
            max_side_m: 24.0,
            l_shape_fraction: 0.3,
            min_gap_m: 2.0,
            road_count: 4,
            road_width_m: 8.0,
            train_buildings: 150,
            background_patches: 40,
            val_region_m: 250.0,
            window_count: 29,
            window_size_m: 200.0,
            difficulty: 0.0,
            noise_std: 6.0,
            origin_lat: 31.95,
            origin_lon: 35.93,
            central_meridian: 36.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub imagery: GeoRaster,
    pub truth: FootprintSet,
    /// Training labels in WGS84 `(lon, lat)`: buildings, roads, background.
    pub train_annotations: Vec<Annotation>,
    /// Every building intersecting it is in `val_buildings`.
    pub val_region: Polygon,
    pub val_buildings: Vec<Polygon>,
    /// Buildings neither trained on nor touching the validation region.
    pub test_buildings: Vec<Polygon>,
    pub windows: Vec<CountWindow>,
}

impl SyntheticScene {
    pub fn transform(&self) -> &GeoTransform {
        self.imagery.transform()
    }

    pub fn crs_tag(&self) -> &str {
        &self.truth.crs_tag
    }
}

type Rgb = [f64; 3];

const GROUND: Rgb = [176.0, 156.0, 118.0];
const ROAD: Rgb = [88.0, 88.0, 94.0];
const EASY_ROOFS: [Rgb; 3] = [[228.0, 228.0, 234.0], [204.0, 78.0, 64.0], [84.0, 146.0, 204.0]];
// sand-colored roofs and bright yards only appear with difficulty > 0
const HARD_ROOFS: [Rgb; 2] = [[198.0, 178.0, 150.0], [150.0, 150.0, 156.0]];
const BRIGHT_YARD: Rgb = [214.0, 206.0, 196.0];

fn check(spec: &SynthSpec) -> Result<()> {
    let positive = [spec.pixel_size, spec.min_side_m, spec.max_side_m, spec.window_size_m];
    if spec.width == 0 || spec.height == 0 || positive.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::arg("scene dimensions, pixel size, sizes must be positive"));
    }
    if spec.min_side_m > spec.max_side_m {
        return Err(Error::arg("min_side_m exceeds max_side_m"));
    }
    if !(0.0..=1.0).contains(&spec.difficulty) || !(0.0..=1.0).contains(&spec.l_shape_fraction) {
        return Err(Error::arg("difficulty and l_shape_fraction must lie in [0, 1]"));
    }
    if spec.train_buildings > spec.building_count {
        return Err(Error::arg("train_buildings exceeds building_count"));
    }
    let (w_m, h_m) = (
        spec.width as f64 * spec.pixel_size,
        spec.height as f64 * spec.pixel_size,
    );
    if spec.window_count > 0 && (spec.window_size_m > w_m || spec.window_size_m > h_m) {
        return Err(Error::arg("counting windows do not fit in the scene"));
    }
    Ok(())
}

/// Pixel-space building outline: `(c0, r0, c1, r1)` rectangle, optionally
/// with the `(notch_w, notch_h)` top-right corner removed.
#[derive(Debug, Clone, Copy)]
struct Shape {
    c0: usize,
    r0: usize,
    c1: usize,
    r1: usize,
    notch: Option<(usize, usize)>,
}

impl Shape {
    fn covers(&self, r: usize, c: usize) -> bool {
        if r < self.r0 || r >= self.r1 || c < self.c0 || c >= self.c1 {
            return false;
        }
        match self.notch {
            Some((nw, nh)) => !(c >= self.c1 - nw && r < self.r0 + nh),
            None => true,
        }
    }

    fn polygon(&self, t: &GeoTransform) -> Polygon {
        let p = |c: usize, r: usize| {
            Point::new(
                t.origin_x + c as f64 * t.pixel_size,
                t.origin_y - r as f64 * t.pixel_size,
            )
        };
        let pts = match self.notch {
            None => vec![
                p(self.c0, self.r1),
                p(self.c1, self.r1),
                p(self.c1, self.r0),
                p(self.c0, self.r0),
            ],
            Some((nw, nh)) => vec![
                p(self.c0, self.r1),
                p(self.c1, self.r1),
                p(self.c1, self.r0 + nh),
                p(self.c1 - nw, self.r0 + nh),
                p(self.c1 - nw, self.r0),
                p(self.c0, self.r0),
            ],
        };
        Polygon::new(Ring::from_open(pts).expect("valid outline"), Vec::new()).normalized()
    }
}

/// Builds the scene described by `spec`. Fails when the buildings cannot
/// be packed after a bounded number of attempts.
pub fn generate_synthetic_scene(spec: &SynthSpec) -> Result<SyntheticScene> {
    check(spec)?;
    let (w, h) = (spec.width, spec.height);
    let ps = spec.pixel_size;
    let anchor = forward(spec.origin_lat, spec.origin_lon, spec.central_meridian)?;
    let t = GeoTransform::new(anchor.easting.round(), anchor.northing.round(), ps)?;
    let crs = format!("TM:{}", spec.central_meridian);
    let mut rng = XorShift64Star::new(derive_seed(spec.seed, 0));

    // occupancy: 1 = building or its gap, 2 = road
    let mut occ = vec![0u8; w * h];
    let road_px = ((spec.road_width_m / ps).round() as usize).max(1);
    let mut roads: Vec<(bool, usize)> = Vec::new();
    for k in 0..spec.road_count {
        let horizontal = k % 2 == 0;
        let span = if horizontal { h } else { w };
        if span <= road_px {
            continue;
        }
        let at = rng.below((span - road_px) as u64) as usize;
        roads.push((horizontal, at));
        for a in at..at + road_px {
            for b in 0..if horizontal { w } else { h } {
                let (r, c) = if horizontal { (a, b) } else { (b, a) };
                occ[r * w + c] = 2;
            }
        }
    }

    let gap = (spec.min_gap_m / ps).ceil() as usize;
    let (smin, smax) = (
        (spec.min_side_m / ps).round() as usize,
        (spec.max_side_m / ps).round() as usize,
    );
    let smin = smin.max(2);
    let mut shapes: Vec<Shape> = Vec::new();
    let mut attempts = 0usize;
    let budget = 400 * spec.building_count.max(1);
    while shapes.len() < spec.building_count {
        attempts += 1;
        if attempts > budget {
            return Err(Error::arg(format!(
                "could only place {} of {} buildings; enlarge the scene or shrink the buildings",
                shapes.len(),
                spec.building_count
            )));
        }
        let bw = smin + rng.below((smax - smin + 1) as u64) as usize;
        let bh = smin + rng.below((smax - smin + 1) as u64) as usize;
        if bw + 2 * gap >= w || bh + 2 * gap >= h {
            continue;
        }
        let c0 = gap + rng.below((w - bw - 2 * gap) as u64) as usize;
        let r0 = gap + rng.below((h - bh - 2 * gap) as u64) as usize;
        let notch = (rng.next_f64() < spec.l_shape_fraction && bw >= 3 * smin / 2 && bh >= 3 * smin / 2).then(|| {
            (
                bw / 3 + rng.below((bw / 3) as u64) as usize,
                bh / 3 + rng.below((bh / 3) as u64) as usize,
            )
        });
        let s = Shape {
            c0,
            r0,
            c1: c0 + bw,
            r1: r0 + bh,
            notch,
        };
        let free = (r0 - gap..s.r1 + gap).all(|r| (c0 - gap..s.c1 + gap).all(|c| occ[r * w + c] == 0));
        if !free {
            continue;
        }
        for r in r0 - gap..s.r1 + gap {
            for c in c0 - gap..s.c1 + gap {
                occ[r * w + c] = 1;
            }
        }
        shapes.push(s);
    }

    // colors
    let d = spec.difficulty;
    let noise = spec.noise_std * (1.0 + 2.0 * d);
    let roof_of: Vec<Rgb> = shapes
        .iter()
        .map(|_| {
            let base = if rng.next_f64() < 0.3 * d {
                HARD_ROOFS[rng.below(HARD_ROOFS.len() as u64) as usize]
            } else {
                EASY_ROOFS[rng.below(EASY_ROOFS.len() as u64) as usize]
            };
            let j = 8.0;
            [
                base[0] + rng.uniform(-j, j),
                base[1] + rng.uniform(-j, j),
                base[2] + rng.uniform(-j, j),
            ]
        })
        .collect();
    // ground texture: one offset per 32-pixel block, bright yards with difficulty
    let block = 32;
    let (bw, bh) = (w.div_ceil(block), h.div_ceil(block));
    let ground: Vec<Rgb> = (0..bw * bh)
        .map(|_| {
            if rng.next_f64() < 0.15 * d {
                BRIGHT_YARD
            } else {
                let o = rng.uniform(-14.0, 14.0);
                [GROUND[0] + o, GROUND[1] + o, GROUND[2] + o * 0.8]
            }
        })
        .collect();
    let mut owner = vec![u32::MAX; w * h];
    for (k, s) in shapes.iter().enumerate() {
        for r in s.r0..s.r1 {
            for c in s.c0..s.c1 {
                if s.covers(r, c) {
                    owner[r * w + c] = k as u32;
                }
            }
        }
    }
    let plane = w * h;
    let mut px = vec![0u8; 3 * plane];
    let mut noise_rng = XorShift64Star::new(derive_seed(spec.seed, 1));
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let base = if owner[i] != u32::MAX {
                roof_of[owner[i] as usize]
            } else if occ[i] == 2 {
                ROAD
            } else {
                ground[(r / block) * bw + c / block]
            };
            for (b, v) in base.iter().enumerate() {
                px[b * plane + i] = (v + noise * noise_rng.normal()).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    let imagery = GeoRaster::new(
        RasterHeader {
            width: w,
            height: h,
            bands: 3,
            sample_type: SampleType::U8,
            nodata: None,
            transform: t,
            crs_tag: crs.clone(),
        },
        Samples::U8(px),
    )?;

    let polys: Vec<Polygon> = shapes.iter().map(|s| s.polygon(&t)).collect();
    let truth = FootprintSet::new(
        crs.clone(),
        polys
            .iter()
            .enumerate()
            .map(|(k, p)| Footprint::new(format!("b{}", k + 1), p.clone()))
            .collect(),
    )?;

    // validation region in the south-west corner
    let (w_m, h_m) = (w as f64 * ps, h as f64 * ps);
    let side = spec.val_region_m.min(w_m).min(h_m);
    let (sx, sy) = (t.origin_x, t.origin_y - h_m);
    let val_region = Polygon::rect(sx, sy, sx + side, sy + side);
    let in_val: Vec<bool> = polys
        .iter()
        .map(|p| crate::geo::polygon::polygons_intersect(p, &val_region))
        .collect();
    let val_buildings: Vec<Polygon> = polys
        .iter()
        .zip(&in_val)
        .filter(|(_, &v)| v)
        .map(|(p, _)| p.clone())
        .collect();
    let mut pool: Vec<usize> = (0..polys.len()).filter(|&k| !in_val[k]).collect();
    rng.shuffle(&mut pool);
    let n_train = spec.train_buildings.min(pool.len());
    let (train_idx, test_idx) = pool.split_at(n_train);
    let mut test_sorted = test_idx.to_vec();
    test_sorted.sort_unstable();
    let test_buildings = test_sorted.iter().map(|&k| polys[k].clone()).collect();

    let cm = spec.central_meridian;
    let mut train_annotations = Vec::new();
    let mut train_sorted = train_idx.to_vec();
    train_sorted.sort_unstable();
    for &k in &train_sorted {
        train_annotations.push(Annotation {
            id: format!("b{}", k + 1),
            geometry: polygon_from_tm(&polys[k], cm)?,
            category: Category::Building,
            confidence: Confidence::High,
        });
    }
    for (k, &(horizontal, at)) in roads.iter().enumerate() {
        // a labeled stretch of each road, away from the validation region
        let len = (w.min(h) / 4).max(1);
        let start = w.min(h) / 2;
        let (c0, r0, c1, r1) = if horizontal {
            (start, at, (start + len).min(w), at + road_px)
        } else {
            (at, start - len.min(start), at + road_px, start)
        };
        let s = Shape {
            c0,
            r0,
            c1,
            r1,
            notch: None,
        };
        train_annotations.push(Annotation {
            id: format!("road-{}", k + 1),
            geometry: polygon_from_tm(&s.polygon(&t), cm)?,
            category: Category::Road,
            confidence: Confidence::Medium,
        });
    }
    let patch = (10.0 / ps).round() as usize;
    let mut placed = 0;
    let mut tries = 0;
    while placed < spec.background_patches && tries < 200 * spec.background_patches.max(1) && w > patch && h > patch {
        tries += 1;
        let c0 = rng.below((w - patch) as u64) as usize;
        let r0 = rng.below((h - patch) as u64) as usize;
        let s = Shape {
            c0,
            r0,
            c1: c0 + patch,
            r1: r0 + patch,
            notch: None,
        };
        let poly = s.polygon(&t);
        let clear = (r0..s.r1).all(|r| (c0..s.c1).all(|c| occ[r * w + c] == 0));
        if !clear || crate::geo::polygon::polygons_intersect(&poly, &val_region) {
            continue;
        }
        placed += 1;
        train_annotations.push(Annotation {
            id: format!("bg-{placed}"),
            geometry: polygon_from_tm(&poly, cm)?,
            category: Category::Background,
            confidence: Confidence::Low,
        });
    }

    let mut wins = Vec::with_capacity(spec.window_count);
    let ws = spec.window_size_m;
    for _ in 0..spec.window_count {
        let x = sx + rng.uniform(0.0, w_m - ws);
        let y = sy + rng.uniform(0.0, h_m - ws);
        wins.push(Polygon::rect(x, y, x + ws, y + ws));
    }
    let refs: Vec<&Polygon> = polys.iter().collect();
    let counts = count_intersecting(&refs, &wins);
    let windows = wins
        .into_iter()
        .zip(counts)
        .map(|(geometry, actual_count)| CountWindow { geometry, actual_count })
        .collect();

    Ok(SyntheticScene {
        imagery,
        truth,
        train_annotations,
        val_region,
        val_buildings,
        test_buildings,
        windows,
    })
}
