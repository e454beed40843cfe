//! Sparse label masks: rasterized annotations with an explicit "unknown"
//! code, building buffering, road merging and annotation subsampling.

use crate::error::{Error, Result};
use crate::geo::rasterize::for_each_covered_pixel;
use crate::geo::{Annotation, Category, GeoRaster, GeoTransform, Polygon};
use crate::par;
use crate::rng::XorShift64Star;

/// Per-pixel label codes.
pub const BACKGROUND: u8 = 0;
pub const BUILDING: u8 = 1;
pub const ROAD: u8 = 2;
pub const UNKNOWN: u8 = 255;

pub fn code_of(category: Category) -> u8 {
    match category {
        Category::Background => BACKGROUND,
        Category::Building => BUILDING,
        Category::Road => ROAD,
    }
}

/// Per-pixel categories over a geo-referenced grid. Pixels nobody labeled
/// hold [`UNKNOWN`] and are never treated as a class.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLabelMask {
    pub width: usize,
    pub height: usize,
    pub transform: GeoTransform,
    pub labels: Vec<u8>,
}

impl SparseLabelMask {
    pub fn unknown(width: usize, height: usize, transform: GeoTransform) -> Self {
        SparseLabelMask {
            width,
            height,
            transform,
            labels: vec![UNKNOWN; width * height],
        }
    }

    pub fn from_labels(width: usize, height: usize, transform: GeoTransform, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::arg("label count does not match dimensions"));
        }
        if let Some(bad) = labels
            .iter()
            .find(|&&v| !matches!(v, BACKGROUND | BUILDING | ROAD | UNKNOWN))
        {
            return Err(Error::arg(format!("invalid label code {bad}")));
        }
        Ok(SparseLabelMask {
            width,
            height,
            transform,
            labels,
        })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.width + col]
    }

    pub fn count(&self, code: u8) -> usize {
        self.labels.iter().filter(|&&v| v == code).count()
    }

    /// u8 raster with nodata = 255.
    pub fn to_raster(&self, crs_tag: &str) -> Result<GeoRaster> {
        GeoRaster::from_u8(
            self.width,
            self.height,
            self.labels.clone(),
            self.transform,
            Some(UNKNOWN as f64),
            crs_tag,
        )
    }

    pub fn from_raster(raster: &GeoRaster) -> Result<Self> {
        let data = raster
            .as_u8()
            .filter(|_| raster.bands() == 1)
            .ok_or_else(|| Error::arg("label raster must be single-band u8"))?;
        Self::from_labels(raster.width(), raster.height(), *raster.transform(), data.to_vec())
    }
}

/// Rasterization result; `skipped` lists annotations lying wholly outside
/// the grid.
#[derive(Debug, Clone)]
pub struct Rasterized {
    pub mask: SparseLabelMask,
    pub skipped: Vec<usize>,
}

fn priority_rank(c: Category) -> u8 {
    match c {
        Category::Background => 0,
        Category::Road => 1,
        Category::Building => 2,
    }
}

fn grid_polygon(t: &GeoTransform, width: usize, height: usize) -> Polygon {
    Polygon::rect(
        t.origin_x,
        t.origin_y - height as f64 * t.pixel_size,
        t.origin_x + width as f64 * t.pixel_size,
        t.origin_y,
    )
}

/// Labels a pixel with category `c` when its center lies inside a
/// category-`c` annotation; overlaps resolve building > road > background.
pub fn rasterize_annotations(
    annotations: &[Annotation],
    transform: &GeoTransform,
    width: usize,
    height: usize,
) -> Rasterized {
    let mut mask = SparseLabelMask::unknown(width, height, *transform);
    let extent = grid_polygon(transform, width, height).bbox();
    let mut skipped = Vec::new();
    let mut order: Vec<usize> = Vec::with_capacity(annotations.len());
    for (i, a) in annotations.iter().enumerate() {
        if a.geometry.bbox().intersects(&extent) {
            order.push(i);
        } else {
            skipped.push(i);
        }
    }
    // Low priority first so higher categories overwrite.
    order.sort_by_key(|&i| priority_rank(annotations[i].category));
    let mut rank = vec![0u8; width * height];
    for i in order {
        let a = &annotations[i];
        let code = code_of(a.category);
        let r = priority_rank(a.category) + 1;
        for_each_covered_pixel(&a.geometry, transform, width, height, |row, col| {
            let k = row * width + col;
            if r >= rank[k] {
                rank[k] = r;
                mask.labels[k] = code;
            }
        });
    }
    Rasterized { mask, skipped }
}

/// Largest integer squared pixel distance within `radius` meters.
pub fn max_squared_pixel_distance(radius: f64, pixel_size: f64) -> u64 {
    let r = radius / pixel_size;
    (r * r + 1e-9).floor() as u64
}

/// 1-D squared distance transform of `f` (lower envelope of parabolas).
fn edt_1d(f: &[u64], out: &mut [u64], v: &mut [usize], z: &mut [f64]) {
    const INF: u64 = u64::MAX / 4;
    let n = f.len();
    // Only finite samples seed parabolas.
    let mut k: isize = -1;
    for q in 0..n {
        if f[q] >= INF {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let s = ((f[q] as f64 + (q * q) as f64) - (f[p] as f64 + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k as usize] = q;
            z[k as usize] = s;
            z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        out.fill(INF);
        return;
    }
    let mut j = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let d = q.abs_diff(p) as u64;
        *o = d * d + f[p];
    }
}

/// Squared Euclidean distance (in pixels²) from every pixel to the nearest
/// pixel for which `seed` holds; `u64::MAX / 4` when there is none.
pub fn squared_distance_transform(width: usize, height: usize, seed: impl Fn(usize) -> bool) -> Vec<u64> {
    const INF: u64 = u64::MAX / 4;
    // vertical pass: distance to nearest seed in the same column
    let mut g = vec![INF; width * height];
    for r in 0..height {
        for c in 0..width {
            let k = r * width + c;
            g[k] = if seed(k) {
                0
            } else if r > 0 && g[k - width] < INF {
                g[k - width] + 1
            } else {
                INF
            };
        }
    }
    for r in (0..height.saturating_sub(1)).rev() {
        for c in 0..width {
            let k = r * width + c;
            if g[k + width] < INF && g[k + width] + 1 < g[k] {
                g[k] = g[k + width] + 1;
            }
        }
    }
    for v in g.iter_mut() {
        if *v < INF {
            *v *= *v;
        }
    }
    // horizontal pass per row
    let mut out = vec![0u64; width * height];
    par::for_each_chunk_mut(&mut out, width.max(1), |r, row_out| {
        let row = &g[r * width..(r + 1) * width];
        let mut v = vec![0usize; width];
        let mut z = vec![0f64; width + 1];
        edt_1d(row, row_out, &mut v, &mut z);
    });
    out
}

/// Marks unknown pixels within `radius` meters (center to center) of any
/// building pixel as background. Labeled pixels are never overwritten.
pub fn buffer_buildings(mask: &SparseLabelMask, radius: f64) -> Result<SparseLabelMask> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::arg(format!("buffer radius must be positive, got {radius}")));
    }
    let limit = max_squared_pixel_distance(radius, mask.transform.pixel_size);
    let d2 = squared_distance_transform(mask.width, mask.height, |k| mask.labels[k] == BUILDING);
    let mut out = mask.clone();
    for (l, d) in out.labels.iter_mut().zip(d2) {
        if *l == UNKNOWN && d <= limit {
            *l = BACKGROUND;
        }
    }
    Ok(out)
}

/// Relabels road pixels as background.
pub fn merge_roads(mask: &SparseLabelMask) -> SparseLabelMask {
    let mut out = mask.clone();
    for l in out.labels.iter_mut() {
        if *l == ROAD {
            *l = BACKGROUND;
        }
    }
    out
}

/// Uniform `n`-subset without replacement (partial Fisher-Yates on the
/// toolkit PRNG), returned in draw order.
pub fn subsample_annotations<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>> {
    if n > items.len() {
        return Err(Error::arg(format!(
            "cannot draw {n} of {} annotations without replacement",
            items.len()
        )));
    }
    let mut idx: Vec<usize> = (0..items.len()).collect();
    let mut rng = XorShift64Star::new(seed);
    for i in 0..n {
        let j = i + rng.below((items.len() - i) as u64) as usize;
        idx.swap(i, j);
    }
    Ok(idx[..n].iter().map(|&i| items[i].clone()).collect())
}
