//! Multi-epoch comparison: per-cell building counts on a regular grid and
//! adjusted scene totals.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::eval::CountAdjustment;
use crate::geo::geojson::write_polygon_layer;
use crate::geo::polygon::polygons_intersect;
use crate::geo::{BBox, FootprintSet, Polygon};
use crate::par;

pub const DEFAULT_CELL_SIZE_M: f64 = 500.0;
pub const DEFAULT_WINDOW_SIZE_M: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeCell {
    /// Column index, increasing east.
    pub i: usize,
    /// Row index, increasing north.
    pub j: usize,
    pub count_t0: usize,
    pub count_t1: usize,
    pub delta: i64,
}

/// Regular grid anchored at a multiple of `cell_size`; `cells` is row-major
/// starting at the south-west cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeGrid {
    pub cell_size: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    pub cols: usize,
    pub rows: usize,
    pub cells: Vec<ChangeCell>,
    pub audit: ChangeAudit,
}

/// How far the per-cell sums exceed the footprint counts because a
/// footprint crossing cell borders is counted in every cell it touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeAudit {
    pub footprints_t0: usize,
    pub footprints_t1: usize,
    pub cell_sum_t0: usize,
    pub cell_sum_t1: usize,
}

impl ChangeGrid {
    pub fn cell_polygon(&self, i: usize, j: usize) -> Polygon {
        cell_rect(self.origin_x, self.origin_y, self.cell_size, i, j)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&ChangeCell> {
        (i < self.cols && j < self.rows).then(|| &self.cells[j * self.cols + i])
    }

    /// Cells as a GeoJSON layer with `count_t0`, `count_t1` and `delta`.
    pub fn to_geojson(&self, crs_tag: Option<&str>) -> String {
        let items: Vec<(Polygon, Map<String, Value>)> = self
            .cells
            .iter()
            .map(|c| {
                let props = json!({
                    "i": c.i, "j": c.j,
                    "count_t0": c.count_t0, "count_t1": c.count_t1, "delta": c.delta,
                });
                let Value::Object(m) = props else { unreachable!() };
                (self.cell_polygon(c.i, c.j), m)
            })
            .collect();
        write_polygon_layer(&items, crs_tag)
    }
}

fn cell_rect(ox: f64, oy: f64, size: f64, i: usize, j: usize) -> Polygon {
    let x = ox + i as f64 * size;
    let y = oy + j as f64 * size;
    Polygon::rect(x, y, x + size, y + size)
}

fn extent(sets: &[&FootprintSet]) -> Option<BBox> {
    sets.iter()
        .flat_map(|s| s.polygons())
        .map(Polygon::bbox)
        .reduce(|a, b| a.union(&b))
}

/// Snapped grid `(origin_x, origin_y, cols, rows)` covering `bb`.
fn snap(bb: &BBox, size: f64) -> (f64, f64, usize, usize) {
    let ox = (bb.min_x / size).floor() * size;
    let oy = (bb.min_y / size).floor() * size;
    let cols = (((bb.max_x - ox) / size).ceil() as usize).max(1);
    let rows = (((bb.max_y - oy) / size).ceil() as usize).max(1);
    (ox, oy, cols, rows)
}

/// Per-cell counts of every polygon intersecting the cell (touching counts).
fn cell_counts(polys: &[&Polygon], ox: f64, oy: f64, size: f64, cols: usize, rows: usize) -> Vec<usize> {
    let hits: Vec<Vec<usize>> = par::map(polys, |p| {
        let bb = p.bbox();
        let i0 = (((bb.min_x - ox) / size).floor() - 1.0).max(0.0) as usize;
        let j0 = (((bb.min_y - oy) / size).floor() - 1.0).max(0.0) as usize;
        let i1 = ((((bb.max_x - ox) / size).floor() + 1.0).max(0.0) as usize).min(cols - 1);
        let j1 = ((((bb.max_y - oy) / size).floor() + 1.0).max(0.0) as usize).min(rows - 1);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                if polygons_intersect(p, &cell_rect(ox, oy, size, i, j)) {
                    out.push(j * cols + i);
                }
            }
        }
        out
    });
    let mut counts = vec![0usize; cols * rows];
    for k in hits.into_iter().flatten() {
        counts[k] += 1;
    }
    counts
}

/// Counts both epochs on a shared grid and records `t1 - t0` per cell.
pub fn build_change_grid(t0: &FootprintSet, t1: &FootprintSet, cell_size: f64) -> Result<ChangeGrid> {
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(Error::arg("cell size must be positive"));
    }
    if !t0.crs_tag.is_empty() && !t1.crs_tag.is_empty() && t0.crs_tag != t1.crs_tag {
        return Err(Error::arg(format!(
            "footprint sets use different CRS tags: {:?} vs {:?}",
            t0.crs_tag, t1.crs_tag
        )));
    }
    let Some(bb) = extent(&[t0, t1]) else {
        return Ok(ChangeGrid {
            cell_size,
            origin_x: 0.0,
            origin_y: 0.0,
            cols: 0,
            rows: 0,
            cells: Vec::new(),
            audit: ChangeAudit {
                footprints_t0: 0,
                footprints_t1: 0,
                cell_sum_t0: 0,
                cell_sum_t1: 0,
            },
        });
    };
    let (ox, oy, cols, rows) = snap(&bb, cell_size);
    let p0: Vec<&Polygon> = t0.polygons().collect();
    let p1: Vec<&Polygon> = t1.polygons().collect();
    let c0 = cell_counts(&p0, ox, oy, cell_size, cols, rows);
    let c1 = cell_counts(&p1, ox, oy, cell_size, cols, rows);
    let cells = (0..rows * cols)
        .map(|k| ChangeCell {
            i: k % cols,
            j: k / cols,
            count_t0: c0[k],
            count_t1: c1[k],
            delta: c1[k] as i64 - c0[k] as i64,
        })
        .collect();
    Ok(ChangeGrid {
        cell_size,
        origin_x: ox,
        origin_y: oy,
        cols,
        rows,
        cells,
        audit: ChangeAudit {
            footprints_t0: t0.len(),
            footprints_t1: t1.len(),
            cell_sum_t0: c0.iter().sum(),
            cell_sum_t1: c1.iter().sum(),
        },
    })
}

/// Estimated building total: the footprints' extent is tiled into
/// `window_size` cells, each footprint is counted in the cell holding its
/// centroid, and every cell's count is adjusted and clamped at zero.
pub fn adjusted_totals(footprints: &FootprintSet, adjustment: &CountAdjustment, window_size: f64) -> Result<f64> {
    match extent(&[footprints]) {
        Some(bb) => adjusted_totals_over(footprints, adjustment, window_size, &bb),
        None => Ok(0.0),
    }
}

/// [`adjusted_totals`] over an explicit extent, so empty cells of a scene
/// also receive the intercept.
pub fn adjusted_totals_over(
    footprints: &FootprintSet,
    adjustment: &CountAdjustment,
    window_size: f64,
    extent: &BBox,
) -> Result<f64> {
    if !(window_size > 0.0) || !window_size.is_finite() {
        return Err(Error::arg("window size must be positive"));
    }
    let (ox, oy, cols, rows) = snap(extent, window_size);
    let mut counts = vec![0usize; cols * rows];
    for p in footprints.polygons() {
        let c = p.centroid();
        let i = ((c.x - ox) / window_size).floor();
        let j = ((c.y - oy) / window_size).floor();
        if i < 0.0 || j < 0.0 || i >= cols as f64 || j >= rows as f64 {
            continue;
        }
        counts[j as usize * cols + i as usize] += 1;
    }
    Ok(counts.iter().map(|&c| adjustment.apply(c as f64).max(0.0)).sum())
}
