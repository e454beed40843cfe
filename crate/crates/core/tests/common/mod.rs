#![allow(dead_code)]

use footprint_core::footprints::BinaryMask;
use footprint_core::geo::{GeoTransform, Point, Polygon, Ring};
use footprint_core::rng::XorShift64Star;

pub fn mask(rng: &mut XorShift64Star, w: usize, h: usize, density: f64, t: GeoTransform) -> BinaryMask {
    let data = (0..w * h).map(|_| u8::from(rng.next_f64() < density)).collect();
    BinaryMask::new(w, h, t, data).unwrap()
}

/// Random simple polygon: one vertex per angular sector around a center,
/// so no gap between consecutive angles reaches half a turn.
pub fn star(rng: &mut XorShift64Star, cx: f64, cy: f64, r_min: f64, r_max: f64, n: usize) -> Polygon {
    let sector = std::f64::consts::TAU / n as f64;
    let angles: Vec<f64> = (0..n).map(|k| (k as f64 + rng.next_f64()) * sector).collect();
    let pts: Vec<Point> = angles
        .iter()
        .map(|a| {
            let r = rng.uniform(r_min, r_max);
            Point::new(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    Polygon::new(Ring::from_open(pts).unwrap(), Vec::new())
}

/// Per-pixel even-odd test of the pixel center against every ring.
pub fn center_inside(p: &Polygon, x: f64, y: f64) -> bool {
    let mut inside = false;
    for ring in p.rings() {
        let pts = ring.points();
        for k in 0..pts.len() - 1 {
            let (a, b) = (pts[k], pts[k + 1]);
            if (a.y > y) != (b.y > y) {
                let xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
                if x < xc {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

pub fn brute_raster(p: &Polygon, t: &GeoTransform, w: usize, h: usize) -> Vec<u8> {
    let mut out = vec![0u8; w * h];
    for r in 0..h {
        for c in 0..w {
            let x = t.origin_x + (c as f64 + 0.5) * t.pixel_size;
            let y = t.origin_y - (r as f64 + 0.5) * t.pixel_size;
            out[r * w + c] = u8::from(center_inside(p, x, y));
        }
    }
    out
}

/// 4-connected flood fill numbering components by first pixel.
pub fn flood_fill(data: &[u8], w: usize, h: usize) -> Vec<u32> {
    let mut lab = vec![0u32; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if data[start] == 0 || lab[start] != 0 {
            continue;
        }
        next += 1;
        lab[start] = next;
        let mut stack = vec![start];
        while let Some(k) = stack.pop() {
            let (r, c) = (k / w, k % w);
            let nb = [
                (r > 0).then(|| k - w),
                (r + 1 < h).then(|| k + w),
                (c > 0).then(|| k - 1),
                (c + 1 < w).then(|| k + 1),
            ];
            for n in nb.into_iter().flatten() {
                if data[n] == 1 && lab[n] == 0 {
                    lab[n] = next;
                    stack.push(n);
                }
            }
        }
    }
    lab
}

/// Shoelace area over all rings, holes subtracting by orientation.
pub fn shoelace(p: &Polygon) -> f64 {
    p.rings()
        .map(|r| {
            let pts = r.points();
            let mut s = 0.0;
            for k in 0..pts.len() - 1 {
                s += pts[k].x * pts[k + 1].y - pts[k + 1].x * pts[k].y;
            }
            s / 2.0
        })
        .sum::<f64>()
        .abs()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_seg(p: Point, a: Point, b: Point) -> bool {
    cross(a, b, p) == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn seg_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (cross(c, d, a), cross(c, d, b));
    let (d3, d4) = (cross(a, b, c), cross(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_seg(a, c, d) || on_seg(b, c, d) || on_seg(c, a, b) || on_seg(d, a, b)
}

/// Closed-set intersection of two hole-free polygons: some pair of edges
/// touches, or one contains a vertex of the other.
pub fn touches(p: &Polygon, q: &Polygon) -> bool {
    let (a, b) = (p.exterior.points(), q.exterior.points());
    for e in a.windows(2) {
        for f in b.windows(2) {
            if seg_touch(e[0], e[1], f[0], f[1]) {
                return true;
            }
        }
    }
    center_inside(p, b[0].x, b[0].y) || center_inside(q, a[0].x, a[0].y)
}
