//! Two-pass union-find labeling, 4-connectivity, tiled.

use crate::error::{Error, Result};
use crate::footprints::BinaryMask;
use crate::geo::GeoTransform;
use crate::par;

/// Per-pixel component ids: 0 is background, `1..=count` are components
/// numbered in order of their first pixel in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabels {
    pub width: usize,
    pub height: usize,
    pub transform: GeoTransform,
    pub labels: Vec<u32>,
    pub count: u32,
}

impl ComponentLabels {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn pixel_count(&self, id: u32) -> usize {
        self.labels.iter().filter(|&&l| l == id).count()
    }

    pub(crate) fn check_id(&self, id: u32) -> Result<()> {
        if id == 0 || id > self.count {
            return Err(Error::arg(format!("no component with id {id}")));
        }
        Ok(())
    }
}

/// Disjoint sets over `0..n`; the smaller index becomes the root.
#[derive(Debug, Clone, Default)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra < rb {
            self.parent[rb as usize] = ra;
        } else if rb < ra {
            self.parent[ra as usize] = rb;
        }
    }
}

/// Labels one tile. Returns labels `1..=count` (0 = background) numbered by
/// first appearance in raster order within the tile.
pub fn label_tile(data: &[u8], width: usize, height: usize) -> (Vec<u32>, u32) {
    let mut labels = vec![0u32; width * height];
    let mut uf = UnionFind::new(1);
    for r in 0..height {
        for c in 0..width {
            let k = r * width + c;
            if data[k] == 0 {
                continue;
            }
            let up = if r > 0 { labels[k - width] } else { 0 };
            let left = if c > 0 { labels[k - 1] } else { 0 };
            labels[k] = match (up, left) {
                (0, 0) => uf.push(),
                (u, 0) => u,
                (0, l) => l,
                (u, l) => {
                    uf.union(u, l);
                    u.min(l)
                }
            };
        }
    }
    // second pass: resolve roots and compact in first-appearance order
    let mut dense = vec![0u32; uf.len()];
    let mut next = 0u32;
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = uf.find(*l) as usize;
        if dense[root] == 0 {
            next += 1;
            dense[root] = next;
        }
        *l = dense[root];
    }
    (labels, next)
}

struct Tile {
    row0: usize,
    col0: usize,
    height: usize,
    width: usize,
}

/// 4-connected components computed tile by tile and merged across tile
/// seams. The result does not depend on `tile_size`.
pub fn connected_components(mask: &BinaryMask, tile_size: usize) -> ComponentLabels {
    let (w, h) = (mask.width, mask.height);
    let ts = tile_size.max(1);
    let mut tiles = Vec::new();
    for row0 in (0..h).step_by(ts) {
        for col0 in (0..w).step_by(ts) {
            tiles.push(Tile {
                row0,
                col0,
                height: ts.min(h - row0),
                width: ts.min(w - col0),
            });
        }
    }
    let local: Vec<(Vec<u32>, u32)> = par::map(&tiles, |t| {
        let mut buf = Vec::with_capacity(t.width * t.height);
        for r in t.row0..t.row0 + t.height {
            buf.extend_from_slice(&mask.data[r * w + t.col0..r * w + t.col0 + t.width]);
        }
        label_tile(&buf, t.width, t.height)
    });
    // global provisional ids: tile offset + local id
    let mut offsets = Vec::with_capacity(tiles.len());
    let mut total = 0u32;
    for (_, n) in &local {
        offsets.push(total);
        total += n;
    }
    let mut labels = vec![0u32; w * h];
    for ((t, (l, _)), &off) in tiles.iter().zip(&local).zip(&offsets) {
        for r in 0..t.height {
            for c in 0..t.width {
                let v = l[r * t.width + c];
                if v != 0 {
                    labels[(t.row0 + r) * w + t.col0 + c] = v + off;
                }
            }
        }
    }
    let mut uf = UnionFind::new(total as usize + 1);
    for t in &tiles {
        if t.col0 > 0 {
            for r in t.row0..t.row0 + t.height {
                let (a, b) = (labels[r * w + t.col0 - 1], labels[r * w + t.col0]);
                if a != 0 && b != 0 {
                    uf.union(a, b);
                }
            }
        }
        if t.row0 > 0 {
            for c in t.col0..t.col0 + t.width {
                let (a, b) = (labels[(t.row0 - 1) * w + c], labels[t.row0 * w + c]);
                if a != 0 && b != 0 {
                    uf.union(a, b);
                }
            }
        }
    }
    let mut dense = vec![0u32; total as usize + 1];
    let mut count = 0u32;
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = uf.find(*l) as usize;
        if dense[root] == 0 {
            count += 1;
            dense[root] = count;
        }
        *l = dense[root];
    }
    ComponentLabels {
        width: w,
        height: h,
        transform: mask.transform,
        labels,
        count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, data: Vec<u8>) -> BinaryMask {
        BinaryMask::new(w, h, GeoTransform::new(0.0, 0.0, 1.0).unwrap(), data).unwrap()
    }

    #[test]
    fn empty_mask_has_no_components() {
        let c = connected_components(&mask(4, 3, vec![0; 12]), 2);
        assert_eq!(c.count, 0);
    }

    #[test]
    fn diagonal_pixels_are_separate() {
        let c = connected_components(&mask(2, 2, vec![1, 0, 0, 1]), 64);
        assert_eq!(c.count, 2);
        assert_eq!(c.labels, vec![1, 0, 0, 2]);
    }

    #[test]
    fn u_shape_merges_across_tiles() {
        #[rustfmt::skip]
        let d = vec![
            1, 0, 0, 1,
            1, 0, 0, 1,
            1, 1, 1, 1,
        ];
        for ts in 1..5 {
            let c = connected_components(&mask(4, 3, d.clone()), ts);
            assert_eq!(c.count, 1, "tile size {ts}");
        }
    }

    #[test]
    fn tiled_equals_single_pass() {
        let mut rng = crate::rng::XorShift64Star::new(3);
        let d: Vec<u8> = (0..37 * 29).map(|_| u8::from(rng.next_f64() < 0.55)).collect();
        let m = mask(37, 29, d);
        let full = connected_components(&m, 1000);
        for ts in [1, 3, 8, 16] {
            assert_eq!(connected_components(&m, ts), full);
        }
    }
}
