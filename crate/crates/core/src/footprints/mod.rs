//! Raster-to-vector building extraction.
//!
//! threshold -> 7x7 median -> 4-connected components -> pixel-edge tracing
//! -> Douglas-Peucker -> minimum-area filter, streamed over strips of tiles.

mod components;
mod median;
mod polygonize;
pub(crate) mod simplify;
mod trace;

pub use components::{connected_components, label_tile, ComponentLabels};
pub use median::{median_filter, MEDIAN_KERNEL, MEDIAN_MAJORITY};
pub use polygonize::{filter_area, polygonize, polygonize_raster, PolygonizeConfig, PolygonizeStats};
pub use simplify::{farthest_pair, simplify_ring, DEFAULT_TOLERANCE_M};
pub use trace::{trace_boundaries, PixelRing};

use crate::error::{Error, Result};
use crate::geo::{GeoRaster, GeoTransform};

/// Single-band 0/1 raster.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub transform: GeoTransform,
    pub data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, transform: GeoTransform, data: Vec<u8>) -> Result<BinaryMask> {
        if data.len() != width * height {
            return Err(Error::arg("mask size does not match dimensions"));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::arg("binary mask values must be 0 or 1"));
        }
        Ok(BinaryMask {
            width,
            height,
            transform,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, transform: GeoTransform) -> BinaryMask {
        BinaryMask {
            width,
            height,
            transform,
            data: vec![0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// Pixels with value `>= threshold` become 1; nodata becomes 0.
    pub fn threshold(raster: &GeoRaster, threshold: f64) -> Result<BinaryMask> {
        if raster.bands() != 1 {
            return Err(Error::arg("prediction raster must have exactly one band"));
        }
        let nodata = raster.header().nodata;
        let n = raster.width() * raster.height();
        let data = (0..n)
            .map(|i| u8::from(is_positive(raster.samples().get_f64(i), nodata, threshold)))
            .collect();
        Ok(BinaryMask {
            width: raster.width(),
            height: raster.height(),
            transform: *raster.transform(),
            data,
        })
    }

    pub fn to_raster(&self, crs_tag: &str) -> Result<GeoRaster> {
        GeoRaster::from_u8(
            self.width,
            self.height,
            self.data.clone(),
            self.transform,
            None,
            crs_tag,
        )
    }
}

#[inline]
pub(crate) fn is_positive(v: f64, nodata: Option<f64>, threshold: f64) -> bool {
    if nodata == Some(v) || v.is_nan() {
        return false;
    }
    v >= threshold
}
