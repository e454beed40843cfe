//! Minimum-area enclosing rectangle by rotating calipers.

use crate::error::{Error, Result};
use crate::footprints::simplify::convex_hull_indices;
use crate::geo::{Point, Polygon};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinAreaRect {
    /// Counter-clockwise corners.
    pub corners: [Point; 4],
    pub area: f64,
    /// Direction of the side collinear with a hull edge, radians.
    pub angle: f64,
}

/// Smallest-area rectangle enclosing the polygon's exterior.
pub fn min_area_rect(polygon: &Polygon) -> Result<MinAreaRect> {
    min_area_rect_points(polygon.exterior.open_points())
}

pub fn min_area_rect_points(points: &[Point]) -> Result<MinAreaRect> {
    let idx = convex_hull_indices(points);
    if idx.len() < 3 {
        return Err(Error::arg(format!(
            "minimum rectangle needs 3 non-collinear vertices, hull has {}",
            idx.len()
        )));
    }
    let hull: Vec<Point> = idx.iter().map(|&k| points[k]).collect();
    let n = hull.len();
    let dot = |p: Point, ux: f64, uy: f64| p.x * ux + p.y * uy;
    let (mut r, mut t, mut l) = (0usize, 0usize, 0usize);
    let mut best: Option<MinAreaRect> = None;
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        let len = a.dist(b);
        let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
        // left normal points into a counter-clockwise hull
        let (vx, vy) = (-uy, ux);
        if i == 0 {
            let arg = |f: &dyn Fn(Point) -> f64| {
                (0..n)
                    .max_by(|&p, &q| f(hull[p]).total_cmp(&f(hull[q])))
                    .expect("non-empty hull")
            };
            r = arg(&|p| dot(p, ux, uy));
            t = arg(&|p| dot(p, vx, vy));
            l = arg(&|p| -dot(p, ux, uy));
        } else {
            // extreme vertices only ever move forward around the hull
            let advance = |k: &mut usize, f: &dyn Fn(Point) -> f64| {
                for _ in 0..n {
                    let next = (*k + 1) % n;
                    if f(hull[next]) >= f(hull[*k]) {
                        *k = next;
                    } else {
                        break;
                    }
                }
            };
            advance(&mut r, &|p| dot(p, ux, uy));
            advance(&mut t, &|p| dot(p, vx, vy));
            advance(&mut l, &|p| -dot(p, ux, uy));
        }
        let u_min = dot(hull[l], ux, uy);
        let u_max = dot(hull[r], ux, uy);
        let v_min = dot(a, vx, vy);
        let v_max = dot(hull[t], vx, vy);
        let area = (u_max - u_min) * (v_max - v_min);
        if best.is_none_or(|b| area < b.area) {
            let corner = |u: f64, v: f64| Point::new(u * ux + v * vx, u * uy + v * vy);
            best = Some(MinAreaRect {
                corners: [
                    corner(u_min, v_min),
                    corner(u_max, v_min),
                    corner(u_max, v_max),
                    corner(u_min, v_max),
                ],
                area,
                angle: uy.atan2(ux),
            });
        }
    }
    Ok(best.expect("hull has edges"))
}
