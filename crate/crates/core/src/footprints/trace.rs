//! Pixel-edge boundary tracing.
//!
//! Every foreground pixel contributes the sides it shares with background
//! as directed unit edges, oriented so the pixel lies to the left when the
//! world y axis points up. Chaining the edges yields counter-clockwise
//! exteriors and clockwise holes. Where two pixels of the same component
//! touch only at a corner the chain crosses over to the diagonal pixel, so
//! each hole becomes its own ring.

use crate::error::{Error, Result};
use crate::footprints::ComponentLabels;
use crate::geo::{GeoTransform, Point, Polygon, Ring};

// Edge directions in pixel space (x = col, y = row, y down).
pub(crate) const EAST: u64 = 0;
pub(crate) const NORTH: u64 = 1;
pub(crate) const WEST: u64 = 2;
pub(crate) const SOUTH: u64 = 3;

/// Packs a unit edge starting at vertex `(x, y)`; sorting packed edges
/// orders them by row, then column, then direction.
#[inline]
pub(crate) fn pack(x: u64, y: u64, dir: u64) -> u64 {
    debug_assert!(x < (1 << 30) && y < (1 << 32));
    (y << 32) | (x << 2) | dir
}

#[inline]
fn unpack(e: u64) -> (u64, u64, u64) {
    (((e >> 2) & ((1 << 30) - 1)), e >> 32, e & 3)
}

#[inline]
fn end_of(x: u64, y: u64, dir: u64) -> (u64, u64) {
    match dir {
        EAST => (x + 1, y),
        NORTH => (x, y - 1),
        WEST => (x - 1, y),
        _ => (x, y + 1),
    }
}

/// Appends the boundary edges of pixel `(row, col)`; the flags say which
/// neighbors are outside the component.
#[inline]
pub(crate) fn push_pixel_edges(
    edges: &mut Vec<u64>,
    row: usize,
    col: usize,
    up_out: bool,
    right_out: bool,
    down_out: bool,
    left_out: bool,
) {
    let (x, y) = (col as u64, row as u64);
    if down_out {
        edges.push(pack(x, y + 1, EAST));
    }
    if right_out {
        edges.push(pack(x + 1, y + 1, NORTH));
    }
    if up_out {
        edges.push(pack(x + 1, y, WEST));
    }
    if left_out {
        edges.push(pack(x, y, SOUTH));
    }
}

/// Closed ring of pixel-corner vertices `(x, y)` (open list: the closing
/// vertex is implied), one vertex per direction change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelRing {
    pub vertices: Vec<(u64, u64)>,
}

impl PixelRing {
    /// Twice the signed area with y pointing up (positive = exterior).
    pub fn doubled_area(&self) -> i128 {
        let v = &self.vertices;
        let mut s: i128 = 0;
        for i in 0..v.len() {
            let (x0, y0) = v[i];
            let (x1, y1) = v[(i + 1) % v.len()];
            // negate y to flip to y-up
            s += x0 as i128 * -(y1 as i128) - x1 as i128 * -(y0 as i128);
        }
        s
    }
}

/// Chains unit edges into rings. Deterministic for a given edge set
/// regardless of input order.
pub(crate) fn assemble_rings(edges: &mut [u64]) -> Vec<PixelRing> {
    edges.sort_unstable();
    let n = edges.len();
    let mut used = vec![false; n];
    let mut rings = Vec::new();
    let find_from = |x: u64, y: u64| -> usize {
        let key = pack(x, y, 0);
        edges.partition_point(|&e| e < key)
    };
    for start in 0..n {
        if used[start] {
            continue;
        }
        let mut steps: Vec<(u64, u64, u64)> = Vec::new();
        let mut cur = start;
        loop {
            used[cur] = true;
            let (x, y, d) = unpack(edges[cur]);
            steps.push((x, y, d));
            let (ex, ey) = end_of(x, y, d);
            let i = find_from(ex, ey);
            let mut cands = [usize::MAX; 2];
            let mut k = 0;
            let mut j = i;
            while j < n && (edges[j] >> 2) == (pack(ex, ey, 0) >> 2) {
                if k < 2 {
                    cands[k] = j;
                }
                k += 1;
                j += 1;
            }
            let next = match k {
                0 => break, // open chain: cannot happen for a valid edge set
                1 => cands[0],
                _ => {
                    // corner contact: cross over to the diagonal pixel
                    let want = (d + 3) % 4;
                    if unpack(edges[cands[0]]).2 == want {
                        cands[0]
                    } else {
                        cands[1]
                    }
                }
            };
            if next == start {
                break;
            }
            if used[next] {
                break;
            }
            cur = next;
        }
        let m = steps.len();
        let vertices: Vec<(u64, u64)> = (0..m)
            .filter(|&i| steps[i].2 != steps[(i + m - 1) % m].2)
            .map(|i| (steps[i].0, steps[i].1))
            .collect();
        rings.push(PixelRing { vertices });
    }
    rings
}

pub(crate) fn pixel_to_world(t: &GeoTransform, x: f64, y: f64) -> Point {
    Point::new(t.origin_x + x * t.pixel_size, t.origin_y - y * t.pixel_size)
}

/// Converts traced rings into a world-space polygon: the largest exterior
/// keeps every hole.
pub(crate) fn rings_to_polygon(rings: &[PixelRing], t: &GeoTransform) -> Option<Polygon> {
    let to_ring = |r: &PixelRing| {
        let mut pts: Vec<Point> = r
            .vertices
            .iter()
            .map(|&(x, y)| pixel_to_world(t, x as f64, y as f64))
            .collect();
        pts.push(pts[0]);
        Ring::new(pts).ok()
    };
    let mut exterior: Option<(i128, Ring)> = None;
    let mut holes = Vec::new();
    for r in rings {
        let a = r.doubled_area();
        let Some(ring) = to_ring(r) else { continue };
        if a > 0 {
            if exterior.as_ref().is_none_or(|(best, _)| a > *best) {
                exterior = Some((a, ring));
            }
        } else if a < 0 {
            holes.push(ring);
        }
    }
    exterior.map(|(_, ext)| Polygon::new(ext, holes))
}

/// Traces the rectilinear outline of component `id` in world coordinates.
pub fn trace_boundaries(labels: &ComponentLabels, id: u32) -> Result<Polygon> {
    labels.check_id(id)?;
    let (w, h) = (labels.width, labels.height);
    let mut edges = Vec::new();
    let out = |r: isize, c: isize| -> bool {
        r < 0 || c < 0 || r >= h as isize || c >= w as isize || labels.get(r as usize, c as usize) != id
    };
    for r in 0..h {
        for c in 0..w {
            if labels.get(r, c) != id {
                continue;
            }
            let (ri, ci) = (r as isize, c as isize);
            push_pixel_edges(
                &mut edges,
                r,
                c,
                out(ri - 1, ci),
                out(ri, ci + 1),
                out(ri + 1, ci),
                out(ri, ci - 1),
            );
        }
    }
    if edges.is_empty() {
        return Err(Error::arg(format!("no component with id {id}")));
    }
    let rings = assemble_rings(&mut edges);
    rings_to_polygon(&rings, &labels.transform)
        .ok_or_else(|| Error::arg(format!("component {id} has no exterior ring")))
}
