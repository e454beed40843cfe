//! Per-building morphology features.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::footprints::{simplify_ring, DEFAULT_TOLERANCE_M};
use crate::geo::polygon::polygon_distance;
use crate::geo::rasterize::for_each_covered_pixel;
use crate::geo::{BBox, Footprint, FootprintSet, GeoRaster, Point, Polygon};
use crate::par;
use crate::quality::mbr::min_area_rect;

pub const NEIGHBOR_RADIUS_M: f64 = 200.0;
/// Reported as the nearest distance of a building with no other building.
pub const ISOLATED_DISTANCE_M: f64 = 1.0e6;

pub const FEATURE_NAMES: [&str; 6] = [
    "area_m2",
    "mbr_ratio",
    "neighbors_200m",
    "nearest_dist_m",
    "max_slope_deg",
    "corner_count",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildingFeatureVector {
    pub area_m2: f64,
    pub mbr_ratio: f64,
    pub neighbors_200m: usize,
    pub nearest_dist_m: f64,
    pub max_slope_deg: f64,
    pub corner_count: usize,
    /// No elevation was available; `max_slope_deg` is 0.
    pub dem_missing: bool,
}

impl BuildingFeatureVector {
    /// The six model inputs in [`FEATURE_NAMES`] order.
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.area_m2,
            self.mbr_ratio,
            self.neighbors_200m as f64,
            self.nearest_dist_m,
            self.max_slope_deg,
            self.corner_count as f64,
        ]
    }
}

/// Uniform bucket grid over footprint bounding boxes and centroids.
struct SpatialIndex {
    cell: f64,
    boxes: Vec<BBox>,
    centroids: Vec<Point>,
    by_box: HashMap<(i64, i64), Vec<usize>>,
    by_centroid: HashMap<(i64, i64), Vec<usize>>,
    extent: Option<(i64, i64, i64, i64)>,
}

impl SpatialIndex {
    fn new(polys: &[&Polygon], cell: f64) -> SpatialIndex {
        let boxes: Vec<BBox> = polys.iter().map(|p| p.bbox()).collect();
        let centroids: Vec<Point> = polys.iter().map(|p| p.centroid()).collect();
        let key = |x: f64| (x / cell).floor() as i64;
        let mut by_box: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut by_centroid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut extent: Option<(i64, i64, i64, i64)> = None;
        for (k, b) in boxes.iter().enumerate() {
            let (i0, j0, i1, j1) = (key(b.min_x), key(b.min_y), key(b.max_x), key(b.max_y));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    by_box.entry((i, j)).or_default().push(k);
                }
            }
            extent = Some(match extent {
                None => (i0, j0, i1, j1),
                Some((a, b, c, d)) => (a.min(i0), b.min(j0), c.max(i1), d.max(j1)),
            });
            let c = centroids[k];
            by_centroid.entry((key(c.x), key(c.y))).or_default().push(k);
        }
        SpatialIndex {
            cell,
            boxes,
            centroids,
            by_box,
            by_centroid,
            extent,
        }
    }

    fn neighbors_within(&self, k: usize, radius: f64) -> usize {
        let c = self.centroids[k];
        let r2 = radius * radius;
        let reach = (radius / self.cell).ceil() as i64;
        let (ci, cj) = ((c.x / self.cell).floor() as i64, (c.y / self.cell).floor() as i64);
        let mut n = 0;
        for i in ci - reach..=ci + reach {
            for j in cj - reach..=cj + reach {
                if let Some(v) = self.by_centroid.get(&(i, j)) {
                    n += v
                        .iter()
                        .filter(|&&o| o != k && self.centroids[o].dist2(c) <= r2)
                        .count();
                }
            }
        }
        n
    }

    /// Exact minimum exterior distance to any other footprint, searching
    /// outward ring by ring of grid cells until no farther cell can win.
    fn nearest(&self, k: usize, polys: &[&Polygon]) -> f64 {
        let Some((ei0, ej0, ei1, ej1)) = self.extent else {
            return ISOLATED_DISTANCE_M;
        };
        let key = |x: f64| (x / self.cell).floor() as i64;
        let b = self.boxes[k];
        let (i0, j0, i1, j1) = (key(b.min_x), key(b.min_y), key(b.max_x), key(b.max_y));
        let mut best = f64::INFINITY;
        let mut seen = HashSet::from([k]);
        let max_ring = (i0 - ei0).max(j0 - ej0).max(ei1 - i1).max(ej1 - j1).max(0);
        for ring in 0..=max_ring {
            for i in i0 - ring..=i1 + ring {
                for j in j0 - ring..=j1 + ring {
                    let on_ring = ring == 0 || i == i0 - ring || i == i1 + ring || j == j0 - ring || j == j1 + ring;
                    if !on_ring {
                        continue;
                    }
                    let Some(v) = self.by_box.get(&(i, j)) else { continue };
                    for &o in v {
                        if !seen.insert(o) {
                            continue;
                        }
                        if self.boxes[o].distance(&b) < best {
                            best = best.min(polygon_distance(polys[k], polys[o]));
                        }
                    }
                }
            }
            // anything not yet seen is at least `ring` whole cells away
            if best <= ring as f64 * self.cell {
                break;
            }
        }
        if best.is_finite() {
            best
        } else {
            ISOLATED_DISTANCE_M
        }
    }
}

/// Largest Horn slope, in degrees, over the DEM pixels whose centers fall in
/// `polygon`, or at the pixel under its centroid when it covers none.
/// `None` when the footprint lies outside the DEM.
pub fn max_slope_deg(dem: &GeoRaster, polygon: &Polygon) -> Option<f64> {
    let (w, h) = (dem.width(), dem.height());
    let t = *dem.transform();
    let nodata = dem.header().nodata;
    let z = |r: usize, c: usize| -> Option<f64> {
        let v = dem.get_f64(0, r, c);
        (nodata != Some(v) && v.is_finite()).then_some(v)
    };
    let slope_at = |r: usize, c: usize| -> f64 {
        let Some(center) = z(r, c) else { return 0.0 };
        // edge replication and nodata fall back to the center value
        let at = |dr: isize, dc: isize| {
            let rr = (r as isize + dr).clamp(0, h as isize - 1) as usize;
            let cc = (c as isize + dc).clamp(0, w as isize - 1) as usize;
            z(rr, cc).unwrap_or(center)
        };
        let (a, b, cc) = (at(-1, -1), at(-1, 0), at(-1, 1));
        let (d, f) = (at(0, -1), at(0, 1));
        let (g, hh, i) = (at(1, -1), at(1, 0), at(1, 1));
        let ps = t.pixel_size;
        let dzdx = ((cc + 2.0 * f + i) - (a + 2.0 * d + g)) / (8.0 * ps);
        // rows run south, so north-minus-south is top minus bottom
        let dzdy = ((a + 2.0 * b + cc) - (g + 2.0 * hh + i)) / (8.0 * ps);
        dzdx.hypot(dzdy).atan().to_degrees()
    };
    let mut best: Option<f64> = None;
    for_each_covered_pixel(polygon, &t, w, h, |r, c| {
        let s = slope_at(r, c);
        best = Some(best.map_or(s, |b: f64| b.max(s)));
    });
    if best.is_some() {
        return best;
    }
    let c = polygon.centroid();
    let col = ((c.x - t.origin_x) / t.pixel_size).floor();
    let row = ((t.origin_y - c.y) / t.pixel_size).floor();
    if col < 0.0 || row < 0.0 || col >= w as f64 || row >= h as f64 {
        return None;
    }
    Some(slope_at(row as usize, col as usize))
}

fn corner_count(polygon: &Polygon) -> usize {
    simplify_ring(polygon.exterior.points(), DEFAULT_TOLERANCE_M)
        .map(|r| r.distinct_vertex_count())
        .unwrap_or_else(|_| polygon.exterior.distinct_vertex_count())
}

fn features_with(
    k: usize,
    fp: &Footprint,
    polys: &[&Polygon],
    index: &SpatialIndex,
    dem: Option<&GeoRaster>,
) -> BuildingFeatureVector {
    let area = fp.polygon.area();
    let mbr_ratio = match min_area_rect(&fp.polygon) {
        Ok(r) if area > 0.0 => r.area / area,
        _ => 1.0,
    };
    let slope = dem.and_then(|d| max_slope_deg(d, &fp.polygon));
    BuildingFeatureVector {
        area_m2: area,
        mbr_ratio,
        neighbors_200m: index.neighbors_within(k, NEIGHBOR_RADIUS_M),
        nearest_dist_m: index.nearest(k, polys),
        max_slope_deg: slope.unwrap_or(0.0),
        corner_count: corner_count(&fp.polygon),
        dem_missing: slope.is_none(),
    }
}

fn index_for(all: &FootprintSet) -> (Vec<&Polygon>, SpatialIndex) {
    let polys: Vec<&Polygon> = all.polygons().collect();
    let index = SpatialIndex::new(&polys, NEIGHBOR_RADIUS_M / 4.0);
    (polys, index)
}

/// Features of the footprint with `footprint.id` within `all`.
pub fn extract_features(
    footprint: &Footprint,
    all: &FootprintSet,
    dem: Option<&GeoRaster>,
) -> Result<BuildingFeatureVector> {
    let k = all
        .footprints
        .iter()
        .position(|f| f.id == footprint.id)
        .ok_or_else(|| Error::arg(format!("footprint {:?} is not in the set", footprint.id)))?;
    let (polys, index) = index_for(all);
    Ok(features_with(k, &all.footprints[k], &polys, &index, dem))
}

/// Features of every footprint, in set order.
pub fn extract_all(all: &FootprintSet, dem: Option<&GeoRaster>) -> Vec<BuildingFeatureVector> {
    let (polys, index) = index_for(all);
    par::map_range(all.len(), |k| features_with(k, &all.footprints[k], &polys, &index, dem))
}
