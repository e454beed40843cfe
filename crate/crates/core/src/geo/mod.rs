//! Geo-referenced raster and vector primitives.

pub mod geojson;
pub mod polygon;
pub mod projection;
pub mod raster;
pub mod rasterize;
pub mod transform;
pub mod vector;

pub use geojson::{parse_annotations, read_footprints, write_annotations, write_footprints, AnnotationSet, ParseIssue};
pub use polygon::{BBox, Point, Polygon, Ring};
pub use projection::{project_wgs84_tm, EastingNorthing, LatLon, Projected};
pub use raster::{GeoRaster, GridFile, GridWriter, RasterHeader, RasterSource, SampleType, Samples, Window};
pub use transform::{pixel_world_transform, Coordinate, Direction, GeoTransform, PixelCoord};
pub use vector::{Annotation, Category, Confidence, Footprint, FootprintSet, Quality};
