//! Douglas-Peucker for closed rings.
//!
//! The ring is cut at its two mutually farthest vertices and each half is
//! simplified as an open polyline, so the result does not depend on which
//! vertex the ring happens to start at.

use crate::error::{Error, Result};
use crate::geo::polygon::{orient, point_segment_distance};
use crate::geo::{Point, Ring};

pub const DEFAULT_TOLERANCE_M: f64 = 0.5;

const BRUTE_FORCE_LIMIT: usize = 512;

/// Indices `(i, j)`, `i < j`, of the farthest vertex pair; among equal
/// distances the lexicographically smallest pair wins.
pub fn farthest_pair(points: &[Point]) -> (usize, usize) {
    if points.len() <= BRUTE_FORCE_LIMIT {
        return farthest_pair_brute(points, &(0..points.len()).collect::<Vec<_>>());
    }
    // Only hull vertices can realize the diameter.
    let hull = convex_hull_indices(points);
    let on_hull: std::collections::HashSet<(u64, u64)> = hull
        .iter()
        .map(|&k| (points[k].x.to_bits(), points[k].y.to_bits()))
        .collect();
    let cand: Vec<usize> = (0..points.len())
        .filter(|&k| on_hull.contains(&(points[k].x.to_bits(), points[k].y.to_bits())))
        .collect();
    farthest_pair_brute(points, &cand)
}

fn farthest_pair_brute(points: &[Point], idx: &[usize]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_d = -1.0;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let d = points[i].dist2(points[j]);
            if d > best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    best
}

/// Indices of the strict convex hull (no collinear points), Andrew's chain.
pub(crate) fn convex_hull_indices(points: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .x
            .total_cmp(&points[b].x)
            .then(points[a].y.total_cmp(&points[b].y))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &k in iter {
            while hull.len() >= start + 2
                && orient(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[k]) <= 0.0
            {
                hull.pop();
            }
            hull.push(k);
        }
        hull.pop();
    }
    hull
}

/// Marks the vertices of `chain` (indices into `points`) that survive
/// Douglas-Peucker between the fixed endpoints.
fn simplify_chain(points: &[Point], chain: &[usize], tolerance: f64, keep: &mut [bool]) {
    let mut stack = vec![(0usize, chain.len() - 1)];
    while let Some((a, b)) = stack.pop() {
        if b <= a + 1 {
            continue;
        }
        let (pa, pb) = (points[chain[a]], points[chain[b]]);
        let mut best = a;
        let mut best_d = -1.0;
        for k in a + 1..b {
            let d = point_segment_distance(points[chain[k]], pa, pb);
            if d > best_d {
                best_d = d;
                best = k;
            }
        }
        if best_d > tolerance {
            keep[chain[best]] = true;
            stack.push((a, best));
            stack.push((best, b));
        }
    }
}

/// Douglas-Peucker simplification of a closed ring (first vertex repeated
/// last). Every dropped vertex lies within `tolerance` of the kept outline.
/// The output starts at the lowest surviving input index. When only the two
/// anchor vertices survive the result is the degenerate, zero-area ring
/// `[a, b, a]`.
pub fn simplify_ring(ring: &[Point], tolerance: f64) -> Result<Ring> {
    if ring.len() < 4 {
        return Err(Error::arg(format!(
            "ring needs at least 4 vertices, got {}",
            ring.len()
        )));
    }
    if ring[0] != ring[ring.len() - 1] {
        return Err(Error::arg("ring is not closed"));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::arg("tolerance must be non-negative"));
    }
    let open = &ring[..ring.len() - 1];
    let n = open.len();
    let (i, j) = farthest_pair(open);
    let mut keep = vec![false; n];
    keep[i] = true;
    keep[j] = true;
    let first: Vec<usize> = (i..=j).collect();
    let second: Vec<usize> = (j..n).chain(0..=i).collect();
    simplify_chain(open, &first, tolerance, &mut keep);
    simplify_chain(open, &second, tolerance, &mut keep);
    let mut out: Vec<Point> = (0..n).filter(|&k| keep[k]).map(|k| open[k]).collect();
    out.push(out[0]);
    if out.len() < 4 {
        return Ok(Ring::from_closed_unchecked(out));
    }
    Ring::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed(pts: &[(f64, f64)]) -> Vec<Point> {
        let mut v: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
        v.push(v[0]);
        v
    }

    #[test]
    fn square_unchanged() {
        let sq = closed(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)]);
        let s = simplify_ring(&sq, 0.5).unwrap();
        assert_eq!(s.points(), sq.as_slice());
    }

    #[test]
    fn collinear_points_collapse() {
        let pts = closed(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (2.0, 0.0),
            (3.0, 0.0),
            (3.0, 1.0),
            (3.0, 2.0),
            (0.0, 2.0),
            (0.0, 1.0),
        ]);
        let s = simplify_ring(&pts, 0.5).unwrap();
        assert_eq!(s.distinct_vertex_count(), 4);
        assert_eq!(s.area(), 6.0);
    }

    #[test]
    fn degenerate_input_rejected() {
        let pts = closed(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(simplify_ring(&pts, 0.5).is_err());
        let open: Vec<Point> = closed(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])[..3].to_vec();
        assert!(simplify_ring(&open, 0.5).is_err());
    }

    #[test]
    fn hull_and_brute_force_agree() {
        let mut rng = crate::rng::XorShift64Star::new(8);
        for _ in 0..20 {
            let pts: Vec<Point> = (0..700)
                .map(|_| Point::new(rng.below(40) as f64, rng.below(40) as f64))
                .collect();
            let all: Vec<usize> = (0..pts.len()).collect();
            assert_eq!(farthest_pair(&pts), farthest_pair_brute(&pts, &all));
        }
    }

    #[test]
    fn thin_sliver_collapses() {
        let pts = closed(&[(0.0, 0.0), (10.0, 0.0), (10.0, 0.5), (0.0, 0.5)]);
        let s = simplify_ring(&pts, 0.5).unwrap();
        assert_eq!(s.points().len(), 3);
        assert_eq!(s.area(), 0.0);
    }
}
