//! Streaming polygonization.
//!
//! The scene is processed in horizontal strips `tile_size` rows tall, each
//! cut into `tile_size`-wide tiles. Per strip: read the rows plus a 3-row
//! halo, threshold and median filter them, label every tile independently,
//! then union labels across tile seams and with the components still open
//! from the strip above. A component that does not reach the strip's last
//! row is complete: its boundary edges are chained into rings, simplified,
//! area-filtered and emitted. Only the open components and one strip of
//! rows are held in memory.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::footprints::components::{label_tile, UnionFind};
use crate::footprints::is_positive;
use crate::footprints::median::median_rows;
use crate::footprints::simplify::simplify_ring;
use crate::footprints::trace::{assemble_rings, pixel_to_world, push_pixel_edges, PixelRing};
use crate::geo::{Footprint, FootprintSet, GeoRaster, GeoTransform, Point, Polygon, RasterSource, Ring, Window};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolygonizeConfig {
    /// Prediction values `>= threshold` are buildings.
    pub threshold: f64,
    /// Douglas-Peucker tolerance in meters.
    pub tolerance_m: f64,
    /// Polygons with smaller net area are dropped.
    pub min_area_m2: f64,
    /// Strip height and tile width in pixels.
    pub tile_size: usize,
}

impl Default for PolygonizeConfig {
    fn default() -> Self {
        PolygonizeConfig {
            threshold: 0.5,
            tolerance_m: 0.5,
            min_area_m2: 30.0,
            tile_size: 1024,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolygonizeStats {
    pub strips: usize,
    pub components: usize,
    pub removed_small: usize,
    /// Largest number of simultaneously open components.
    pub peak_open_components: usize,
    /// Largest number of buffered boundary edges.
    pub peak_open_edges: usize,
}

#[derive(Debug, Default)]
struct Accum {
    edges: Vec<u64>,
    pixels: u64,
    /// Raster-order key of the first pixel, `row << 32 | col`.
    first: u64,
}

impl Accum {
    fn absorb(&mut self, other: Accum) {
        if self.edges.is_empty() && self.pixels == 0 {
            *self = other;
            return;
        }
        self.edges.extend(other.edges);
        self.pixels += other.pixels;
        self.first = self.first.min(other.first);
    }
}

struct TileOut {
    col0: usize,
    width: usize,
    labels: Vec<u32>,
    accums: Vec<Accum>,
}

/// Removes polygons whose net area is below `min_area_m2` and numbers the
/// survivors `fp-1, fp-2, ...` in input order.
pub fn filter_area(polygons: Vec<Polygon>, min_area_m2: f64, crs_tag: &str) -> FootprintSet {
    let footprints = polygons
        .into_iter()
        .map(Polygon::normalized)
        .filter(|p| p.area() >= min_area_m2)
        .enumerate()
        .map(|(k, p)| Footprint::new(format!("fp-{}", k + 1), p))
        .collect();
    FootprintSet {
        crs_tag: crs_tag.to_string(),
        footprints,
    }
}

/// In-memory convenience wrapper around [`polygonize`].
pub fn polygonize_raster(raster: &GeoRaster, config: &PolygonizeConfig) -> Result<FootprintSet> {
    polygonize(raster, config).map(|(set, _)| set)
}

/// Threshold -> median -> components -> trace -> simplify -> area filter,
/// streamed over `source`. The output does not depend on `tile_size`.
pub fn polygonize(source: &dyn RasterSource, config: &PolygonizeConfig) -> Result<(FootprintSet, PolygonizeStats)> {
    let header = source.header().clone();
    if header.bands != 1 {
        return Err(Error::arg("prediction raster must have exactly one band"));
    }
    if !(config.tolerance_m >= 0.0) || !(config.min_area_m2 >= 0.0) || config.tile_size == 0 {
        return Err(Error::arg("invalid polygonize configuration"));
    }
    let (w, h) = (header.width, header.height);
    if w >= (1 << 30) - 1 {
        return Err(Error::arg("raster too wide"));
    }
    let t = header.transform;
    let ts = config.tile_size;
    let mut stats = PolygonizeStats::default();
    let mut finished: Vec<(u64, Polygon)> = Vec::new();
    let mut prev_bin = vec![0u8; w];
    let mut prev_lab = vec![0u32; w];
    let mut open: Vec<Accum> = Vec::new();

    for r0 in (0..h).step_by(ts) {
        stats.strips += 1;
        let r1 = (r0 + ts).min(h);
        let sh = r1 - r0;
        // one look-ahead row decides the bottom edges of the last strip row
        let ext = (r1 + 1).min(h);
        let bin = filtered_rows(source, config.threshold, r0, ext)?;
        let below = |c: usize| -> bool { r1 < h && bin[sh * w + c] == 1 };

        let tiles: Vec<(usize, usize)> = (0..w).step_by(ts).map(|c0| (c0, ts.min(w - c0))).collect();
        let outs: Vec<TileOut> = par::map(&tiles, |&(c0, tw)| {
            let mut buf = Vec::with_capacity(sh * tw);
            for r in 0..sh {
                buf.extend_from_slice(&bin[r * w + c0..r * w + c0 + tw]);
            }
            let (labels, count) = label_tile(&buf, tw, sh);
            let mut accums: Vec<Accum> = (0..count).map(|_| Accum::default()).collect();
            for r in 0..sh {
                for c in 0..tw {
                    let l = labels[r * tw + c];
                    if l == 0 {
                        continue;
                    }
                    let (gr, gc) = (r0 + r, c0 + c);
                    let a = &mut accums[l as usize - 1];
                    if a.pixels == 0 {
                        a.first = ((gr as u64) << 32) | gc as u64;
                    }
                    a.pixels += 1;
                    let up_in = if r > 0 {
                        bin[(r - 1) * w + gc] == 1
                    } else {
                        prev_bin[gc] == 1
                    };
                    let down_in = if r + 1 < sh {
                        bin[(r + 1) * w + gc] == 1
                    } else {
                        below(gc)
                    };
                    let left_in = gc > 0 && bin[r * w + gc - 1] == 1;
                    let right_in = gc + 1 < w && bin[r * w + gc + 1] == 1;
                    push_pixel_edges(&mut a.edges, gr, gc, !up_in, !right_in, !down_in, !left_in);
                }
            }
            TileOut {
                col0: c0,
                width: tw,
                labels,
                accums,
            }
        });

        // union-find nodes: open components first, then every tile's labels
        let n_open = open.len();
        let mut offsets = Vec::with_capacity(outs.len());
        let mut total = n_open;
        for o in &outs {
            offsets.push(total);
            total += o.accums.len();
        }
        let mut uf = UnionFind::new(total);
        let node_at = |ti: usize, r: usize, c: usize| -> Option<u32> {
            let o = &outs[ti];
            let l = o.labels[r * o.width + (c - o.col0)];
            (l != 0).then(|| (offsets[ti] + l as usize - 1) as u32)
        };
        for (ti, o) in outs.iter().enumerate().skip(1) {
            let c = o.col0;
            for r in 0..sh {
                if let (Some(a), Some(b)) = (node_at(ti - 1, r, c - 1), node_at(ti, r, c)) {
                    uf.union(a, b);
                }
            }
        }
        for (c, &pl) in prev_lab.iter().enumerate() {
            if pl == 0 {
                continue;
            }
            if let Some(b) = node_at(c / ts, 0, c) {
                uf.union(pl - 1, b);
            }
        }

        // gather everything under its root
        let mut merged: HashMap<u32, Accum> = HashMap::new();
        for (k, acc) in open.drain(..).enumerate() {
            let root = uf.find(k as u32);
            merged.entry(root).or_default().absorb(acc);
        }
        let mut tile_labels: Vec<Vec<u32>> = Vec::with_capacity(outs.len());
        for (ti, o) in outs.into_iter().enumerate() {
            for (k, acc) in o.accums.into_iter().enumerate() {
                let root = uf.find((offsets[ti] + k) as u32);
                merged.entry(root).or_default().absorb(acc);
            }
            tile_labels.push(o.labels);
        }

        // components touching the last row stay open
        let mut next_lab = vec![0u32; w];
        let mut still_open: HashMap<u32, u32> = HashMap::new();
        if r1 < h {
            for c in 0..w {
                let ti = c / ts;
                let tw = ts.min(w - ti * ts);
                let l = tile_labels[ti][(sh - 1) * tw + (c - ti * ts)];
                if l == 0 {
                    continue;
                }
                let root = uf.find((offsets[ti] + l as usize - 1) as u32);
                let next_id = still_open.len() as u32 + 1;
                let id = *still_open.entry(root).or_insert_with(|| {
                    open.push(Accum::default());
                    next_id
                });
                next_lab[c] = id;
            }
            for (&root, &id) in &still_open {
                open[id as usize - 1] = merged.remove(&root).expect("open root has an accumulator");
            }
        }
        stats.peak_open_components = stats.peak_open_components.max(open.len() + merged.len());
        stats.peak_open_edges = stats
            .peak_open_edges
            .max(open.iter().chain(merged.values()).map(|a| a.edges.len()).sum());

        let done: Vec<Accum> = merged.into_values().collect();
        stats.components += done.len();
        finished.extend(
            par::map(&done, |acc| finish_component(acc, &t, config.tolerance_m))
                .into_iter()
                .flatten(),
        );

        prev_bin.copy_from_slice(&bin[(sh - 1) * w..sh * w]);
        prev_lab = next_lab;
    }

    finished.sort_by_key(|(k, _)| *k);
    let before = finished.len();
    let set = filter_area(
        finished.into_iter().map(|(_, p)| p).collect(),
        config.min_area_m2,
        &header.crs_tag,
    );
    stats.removed_small = stats.components - set.len();
    debug_assert!(before <= stats.components);
    Ok((set, stats))
}

/// Thresholded, median-filtered rows `r0..r1` (full width).
fn filtered_rows(source: &dyn RasterSource, threshold: f64, r0: usize, r1: usize) -> Result<Vec<u8>> {
    let hd = source.header();
    let (w, h) = (hd.width, hd.height);
    let lo = r0.saturating_sub(3);
    let hi = (r1 + 3).min(h);
    let block = source.read_window(Window::new(lo as i64, 0, hi - lo, w))?;
    let nodata = hd.nodata;
    let raw: Vec<u8> = match block.as_f32() {
        Some(v) => v
            .iter()
            .map(|&x| u8::from(is_positive(x as f64, nodata, threshold)))
            .collect(),
        None => (0..block.width() * block.height())
            .map(|i| u8::from(is_positive(block.samples().get_f64(i), nodata, threshold)))
            .collect(),
    };
    let mut rows: Vec<&[u8]> = vec![&[]; h];
    for (k, r) in (lo..hi).enumerate() {
        rows[r] = &raw[k * w..(k + 1) * w];
    }
    let mut out = vec![0u8; (r1 - r0) * w];
    median_rows(&rows, r0, r1 - r0, &mut out);
    Ok(out)
}

fn pixel_ring_points(r: &PixelRing) -> Vec<Point> {
    let mut pts: Vec<Point> = r
        .vertices
        .iter()
        .map(|&(x, y)| Point::new(x as f64, y as f64))
        .collect();
    pts.push(pts[0]);
    pts
}

/// Rings of one complete component -> simplified world polygon.
fn finish_component(acc: &Accum, t: &GeoTransform, tolerance_m: f64) -> Option<(u64, Polygon)> {
    let mut edges = acc.edges.clone();
    let rings = assemble_rings(&mut edges);
    debug_assert_eq!(
        rings.iter().map(PixelRing::doubled_area).sum::<i128>(),
        2 * acc.pixels as i128
    );
    let tol_px = tolerance_m / t.pixel_size;
    let mut exterior: Option<(i128, Ring)> = None;
    let mut holes = Vec::new();
    for r in &rings {
        let a = r.doubled_area();
        if a == 0 {
            continue;
        }
        let simplified = simplify_ring(&pixel_ring_points(r), tol_px).ok()?;
        let world: Vec<Point> = simplified
            .points()
            .iter()
            .map(|p| pixel_to_world(t, p.x, p.y))
            .collect();
        if a > 0 {
            if exterior.as_ref().is_none_or(|(best, _)| a > *best) {
                let ring = if world.len() >= 4 {
                    Ring::new(world).ok()?
                } else {
                    Ring::from_closed_unchecked(world)
                };
                exterior = Some((a, ring));
            }
        } else if world.len() >= 4 {
            let ring = Ring::new(world).ok()?;
            if ring.area() > 0.0 {
                holes.push(ring);
            }
        }
    }
    let (_, ext) = exterior?;
    Some((acc.first, Polygon::new(ext, holes)))
}
