//! Planar polygon primitives shared by every stage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// Axis-aligned bounding box, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn of_points(points: &[Point]) -> BBox {
        let mut b = BBox {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for p in points {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        b
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_x <= other.max_x && other.min_x <= self.max_x && self.min_y <= other.max_y && other.min_y <= self.max_y
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    /// Lower bound on the distance between any two points of the boxes.
    pub fn distance(&self, other: &BBox) -> f64 {
        let dx = (other.min_x - self.max_x).max(self.min_x - other.max_x).max(0.0);
        let dy = (other.min_y - self.max_y).max(self.min_y - other.max_y).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }
}

/// A closed ring: the first vertex is repeated as the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ring(Vec<Point>);

impl Ring {
    /// Builds a ring from vertices that are already closed.
    pub fn new(points: Vec<Point>) -> Result<Ring> {
        if points.len() < 4 {
            return Err(Error::arg(format!(
                "ring needs at least 4 vertices, got {}",
                points.len()
            )));
        }
        if points[0] != points[points.len() - 1] {
            return Err(Error::arg("ring is not closed"));
        }
        Ok(Ring(points))
    }

    /// Builds a ring from an open vertex list, appending the closing vertex.
    pub fn from_open(mut points: Vec<Point>) -> Result<Ring> {
        if let Some(&first) = points.first() {
            if points.last() != Some(&first) || points.len() == 1 {
                points.push(first);
            }
        }
        Ring::new(points)
    }

    /// Wraps vertices without validation; callers guarantee closure.
    pub(crate) fn from_closed_unchecked(points: Vec<Point>) -> Ring {
        debug_assert!(points.len() >= 2 && points[0] == points[points.len() - 1]);
        Ring(points)
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn into_points(self) -> Vec<Point> {
        self.0
    }

    /// Vertices without the closing duplicate.
    pub fn open_points(&self) -> &[Point] {
        &self.0[..self.0.len() - 1]
    }

    /// Shoelace area, positive for counter-clockwise rings (y up).
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.0)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    pub fn reversed(&self) -> Ring {
        let mut p = self.0.clone();
        p.reverse();
        Ring(p)
    }

    /// Returns the ring with the requested orientation.
    pub fn oriented(self, ccw: bool) -> Ring {
        if self.is_ccw() == ccw || self.signed_area() == 0.0 {
            self
        } else {
            let mut p = self.0;
            p.reverse();
            Ring(p)
        }
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.0)
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    /// Number of distinct vertices.
    pub fn distinct_vertex_count(&self) -> usize {
        let mut pts: Vec<(u64, u64)> = self
            .open_points()
            .iter()
            .map(|p| (p.x.to_bits(), p.y.to_bits()))
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts.len()
    }

    /// True when no two non-adjacent segments touch and adjacent segments
    /// share only their common vertex.
    pub fn is_simple(&self) -> bool {
        let segs: Vec<(Point, Point)> = self.segments().collect();
        let n = segs.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            if segs[i].0 == segs[i].1 {
                return false;
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent segments may only overlap in their shared vertex.
                    let (a, b) = segs[i];
                    let (c, d) = segs[j];
                    if orient(a, b, c) == 0.0 && orient(a, b, d) == 0.0 {
                        let shared = if j == i + 1 { b } else { a };
                        let other_i = if j == i + 1 { a } else { b };
                        let other_j = if j == i + 1 { d } else { c };
                        // collinear: fold-back means overlap
                        let v1 = (other_i.x - shared.x, other_i.y - shared.y);
                        let v2 = (other_j.x - shared.x, other_j.y - shared.y);
                        if v1.0 * v2.0 + v1.1 * v2.1 > 0.0 {
                            return false;
                        }
                    }
                    continue;
                }
                if segments_intersect(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn signed_area(points: &[Point]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    // relative to the first vertex: exact for grid-aligned coordinates
    let o = points[0];
    let mut s = 0.0;
    for w in points.windows(2) {
        let (ax, ay) = (w[0].x - o.x, w[0].y - o.y);
        let (bx, by) = (w[1].x - o.x, w[1].y - o.y);
        s += ax * by - bx * ay;
    }
    0.5 * s
}

/// Polygon with one exterior ring and zero or more holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub exterior: Ring,
    pub interiors: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring, interiors: Vec<Ring>) -> Polygon {
        Polygon { exterior, interiors }
    }

    /// Polygon with exterior counter-clockwise and holes clockwise.
    pub fn normalized(self) -> Polygon {
        Polygon {
            exterior: self.exterior.oriented(true),
            interiors: self.interiors.into_iter().map(|r| r.oriented(false)).collect(),
        }
    }

    /// Axis-aligned rectangle, exterior counter-clockwise.
    pub fn rect(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Polygon {
        let ring = Ring(vec![
            Point::new(min_x, min_y),
            Point::new(max_x, min_y),
            Point::new(max_x, max_y),
            Point::new(min_x, max_y),
            Point::new(min_x, min_y),
        ]);
        Polygon::new(ring, Vec::new())
    }

    /// Net area: exterior minus holes.
    pub fn area(&self) -> f64 {
        self.exterior.area() - self.interiors.iter().map(Ring::area).sum::<f64>()
    }

    pub fn bbox(&self) -> BBox {
        self.exterior.bbox()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.interiors.iter())
    }

    /// Even-odd containment over all rings (crossing-number test).
    pub fn contains_even_odd(&self, p: Point) -> bool {
        let mut inside = false;
        for ring in self.rings() {
            if crossing_parity(ring.points(), p) {
                inside = !inside;
            }
        }
        inside
    }

    /// Closed containment: boundary points count as inside.
    pub fn covers(&self, p: Point) -> bool {
        if self
            .rings()
            .any(|r| r.segments().any(|(a, b)| point_on_segment(p, a, b)))
        {
            return true;
        }
        self.contains_even_odd(p)
    }

    /// Area-weighted centroid of the net polygon.
    pub fn centroid(&self) -> Point {
        let mut a_sum = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (k, ring) in self.rings().enumerate() {
            let pts = ring.points();
            let sa = signed_area(pts);
            // exterior counts positive, holes negative regardless of winding
            let sign = if k == 0 { 1.0 } else { -1.0 };
            let w = sign * sa.abs();
            let (rx, ry) = ring_centroid(pts);
            a_sum += w;
            cx += w * rx;
            cy += w * ry;
        }
        if a_sum.abs() < f64::MIN_POSITIVE {
            let pts = self.exterior.open_points();
            let n = pts.len().max(1) as f64;
            return Point::new(
                pts.iter().map(|p| p.x).sum::<f64>() / n,
                pts.iter().map(|p| p.y).sum::<f64>() / n,
            );
        }
        Point::new(cx / a_sum, cy / a_sum)
    }

    /// Translated copy.
    pub fn translated(&self, dx: f64, dy: f64) -> Polygon {
        self.map_points(|p| Point::new(p.x + dx, p.y + dy))
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Polygon {
        let map_ring = |r: &Ring| Ring(r.points().iter().map(|&p| f(p)).collect());
        Polygon {
            exterior: map_ring(&self.exterior),
            interiors: self.interiors.iter().map(map_ring).collect(),
        }
    }
}

fn ring_centroid(pts: &[Point]) -> (f64, f64) {
    let mut a = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    // shift to the first vertex for numerical stability
    let o = pts[0];
    for w in pts.windows(2) {
        let (p, q) = (
            Point::new(w[0].x - o.x, w[0].y - o.y),
            Point::new(w[1].x - o.x, w[1].y - o.y),
        );
        let cross = p.x * q.y - q.x * p.y;
        a += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    if a == 0.0 {
        return (o.x, o.y);
    }
    (o.x + cx / (3.0 * a), o.y + cy / (3.0 * a))
}

/// Crossing-number parity of a horizontal ray from `p` towards +x.
///
/// This is the single pixel-membership rule used by the rasterizer; the
/// edge is counted when it straddles `p.y` half-open from below.
#[inline]
pub fn crossing_parity(ring: &[Point], p: Point) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) && p.x < crossing_x(a, b, p.y) {
            inside = !inside;
        }
    }
    inside
}

/// x where segment `ab` crosses the horizontal line at `y`.
#[inline]
pub fn crossing_x(a: Point, b: Point, y: f64) -> f64 {
    (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x
}

/// Twice the signed area of triangle `abc`.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

pub fn point_on_segment(p: Point, a: Point, b: Point) -> bool {
    orient(a, b, p) == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection (touching and collinear overlap count).
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && point_on_segment(a, c, d))
        || (d2 == 0.0 && point_on_segment(b, c, d))
        || (d3 == 0.0 && point_on_segment(c, a, b))
        || (d4 == 0.0 && point_on_segment(d, a, b))
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

pub fn segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Closed-set intersection test: shared boundary points count.
pub fn polygons_intersect(p: &Polygon, q: &Polygon) -> bool {
    if !p.bbox().intersects(&q.bbox()) {
        return false;
    }
    for r1 in p.rings() {
        for (a, b) in r1.segments() {
            for r2 in q.rings() {
                for (c, d) in r2.segments() {
                    if segments_intersect(a, b, c, d) {
                        return true;
                    }
                }
            }
        }
    }
    // No boundary contact: either disjoint or one strictly inside the other.
    q.covers(p.exterior.points()[0]) || p.covers(q.exterior.points()[0])
}

/// Minimum exterior-ring distance; zero when the polygons intersect.
pub fn polygon_distance(p: &Polygon, q: &Polygon) -> f64 {
    if polygons_intersect(p, q) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (a, b) in p.exterior.segments() {
        for (c, d) in q.exterior.segments() {
            best = best.min(segment_distance(a, b, c, d));
        }
    }
    best
}
