use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::polygon::Point;

/// Real-valued pixel position. `row` grows downwards, `col` to the right;
/// integer values address pixel corners, `+0.5` the pixel center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub row: f64,
    pub col: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// North-up affine transform with square pixels.
///
/// `x = origin_x + col * pixel_size`, `y = origin_y - row * pixel_size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_size: f64,
}

impl GeoTransform {
    pub fn new(origin_x: f64, origin_y: f64, pixel_size: f64) -> Result<Self> {
        let t = GeoTransform {
            origin_x,
            origin_y,
            pixel_size,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pixel_size > 0.0 && self.pixel_size.is_finite()) {
            return Err(Error::arg(format!(
                "pixel_size must be positive, got {}",
                self.pixel_size
            )));
        }
        if !self.origin_x.is_finite() || !self.origin_y.is_finite() {
            return Err(Error::arg("transform origin must be finite"));
        }
        Ok(())
    }

    pub fn pixel_to_world(&self, p: PixelCoord) -> Point {
        Point::new(
            self.origin_x + p.col * self.pixel_size,
            self.origin_y - p.row * self.pixel_size,
        )
    }

    pub fn world_to_pixel(&self, p: Point) -> PixelCoord {
        PixelCoord {
            row: (self.origin_y - p.y) / self.pixel_size,
            col: (p.x - self.origin_x) / self.pixel_size,
        }
    }

    /// World coordinate of the center of pixel `(row, col)`.
    #[inline]
    pub fn pixel_center(&self, row: usize, col: usize) -> Point {
        Point::new(
            self.origin_x + (col as f64 + 0.5) * self.pixel_size,
            self.origin_y - (row as f64 + 0.5) * self.pixel_size,
        )
    }

    /// Transform of the sub-grid whose upper-left pixel is `(row, col)`.
    pub fn shifted(&self, row: i64, col: i64) -> GeoTransform {
        GeoTransform {
            origin_x: self.origin_x + col as f64 * self.pixel_size,
            origin_y: self.origin_y - row as f64 * self.pixel_size,
            pixel_size: self.pixel_size,
        }
    }

    pub fn pixel_area(&self) -> f64 {
        self.pixel_size * self.pixel_size
    }
}

/// Coordinate passed to or returned from [`pixel_world_transform`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinate {
    Pixel(PixelCoord),
    World(Point),
}

/// Forward maps pixel to world, inverse maps world to pixel. A coordinate of
/// the wrong kind for the direction is returned unchanged.
pub fn pixel_world_transform(t: &GeoTransform, c: Coordinate, dir: Direction) -> Coordinate {
    match (dir, c) {
        (Direction::Forward, Coordinate::Pixel(p)) => Coordinate::World(t.pixel_to_world(p)),
        (Direction::Inverse, Coordinate::World(p)) => Coordinate::Pixel(t.world_to_pixel(p)),
        (_, other) => other,
    }
}
