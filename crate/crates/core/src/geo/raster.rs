//! Geo-referenced rasters and the `.grid` on-disk format.
//!
//! A `.grid` file is a flat little-endian, band-sequential, row-major dump of
//! the samples. Its `.grid.json` sidecar carries the header:
//!
//! ```json
//! {"width":4,"height":2,"bands":1,"sample_type":"u8","nodata":255,
//!  "transform":{"origin_x":0.0,"origin_y":0.0,"pixel_size":0.5},"crs_tag":"TM:36"}
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::transform::GeoTransform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleType {
    U8,
    U16,
    F32,
}

impl SampleType {
    pub fn size(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::U16 => 2,
            SampleType::F32 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterHeader {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub sample_type: SampleType,
    pub nodata: Option<f64>,
    pub transform: GeoTransform,
    pub crs_tag: String,
}

impl RasterHeader {
    pub fn sample_count(&self) -> usize {
        self.width * self.height * self.bands
    }

    pub fn byte_len(&self) -> u64 {
        self.sample_count() as u64 * self.sample_type.size() as u64
    }

    fn validate(&self) -> Result<()> {
        self.transform.validate()?;
        if self.bands == 0 {
            return Err(Error::Format("raster needs at least one band".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::U8(v) => v.len(),
            Samples::U16(v) => v.len(),
            Samples::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_type(&self) -> SampleType {
        match self {
            Samples::U8(_) => SampleType::U8,
            Samples::U16(_) => SampleType::U16,
            Samples::F32(_) => SampleType::F32,
        }
    }

    fn filled(t: SampleType, n: usize, value: f64) -> Samples {
        match t {
            SampleType::U8 => Samples::U8(vec![value as u8; n]),
            SampleType::U16 => Samples::U16(vec![value as u16; n]),
            SampleType::F32 => Samples::F32(vec![value as f32; n]),
        }
    }

    #[inline]
    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            Samples::U8(v) => v[i] as f64,
            Samples::U16(v) => v[i] as f64,
            Samples::F32(v) => v[i] as f64,
        }
    }

    fn copy_range(&mut self, dst: usize, src: &Samples, from: usize, len: usize) {
        match (self, src) {
            (Samples::U8(d), Samples::U8(s)) => d[dst..dst + len].copy_from_slice(&s[from..from + len]),
            (Samples::U16(d), Samples::U16(s)) => d[dst..dst + len].copy_from_slice(&s[from..from + len]),
            (Samples::F32(d), Samples::F32(s)) => d[dst..dst + len].copy_from_slice(&s[from..from + len]),
            _ => unreachable!("sample type mismatch"),
        }
    }

    fn to_le_bytes(&self, from: usize, len: usize) -> Vec<u8> {
        match self {
            Samples::U8(v) => v[from..from + len].to_vec(),
            Samples::U16(v) => v[from..from + len].iter().flat_map(|x| x.to_le_bytes()).collect(),
            Samples::F32(v) => v[from..from + len].iter().flat_map(|x| x.to_le_bytes()).collect(),
        }
    }

    fn decode_into(&mut self, dst: usize, bytes: &[u8]) {
        match self {
            Samples::U8(d) => d[dst..dst + bytes.len()].copy_from_slice(bytes),
            Samples::U16(d) => {
                for (k, c) in bytes.chunks_exact(2).enumerate() {
                    d[dst + k] = u16::from_le_bytes([c[0], c[1]]);
                }
            }
            Samples::F32(d) => {
                for (k, c) in bytes.chunks_exact(4).enumerate() {
                    d[dst + k] = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                }
            }
        }
    }
}

/// Pixel rectangle; may extend past the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub row: i64,
    pub col: i64,
    pub height: usize,
    pub width: usize,
}

impl Window {
    pub fn new(row: i64, col: i64, height: usize, width: usize) -> Window {
        Window {
            row,
            col,
            height,
            width,
        }
    }

    /// Intersection with a `height x width` grid as `(row0, col0, row1, col1)`.
    fn clip(&self, height: usize, width: usize) -> Option<(usize, usize, usize, usize)> {
        let r0 = self.row.max(0);
        let c0 = self.col.max(0);
        let r1 = (self.row + self.height as i64).min(height as i64);
        let c1 = (self.col + self.width as i64).min(width as i64);
        if r0 >= r1 || c0 >= c1 {
            return None;
        }
        Some((r0 as usize, c0 as usize, r1 as usize, c1 as usize))
    }
}

/// In-memory geo-referenced raster, band-sequential row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoRaster {
    header: RasterHeader,
    samples: Samples,
}

impl GeoRaster {
    pub fn new(header: RasterHeader, samples: Samples) -> Result<GeoRaster> {
        header.validate()?;
        if samples.sample_type() != header.sample_type {
            return Err(Error::Format("sample type does not match header".into()));
        }
        if samples.len() != header.sample_count() {
            return Err(Error::Format(format!(
                "expected {} samples ({}x{}x{}), got {}",
                header.sample_count(),
                header.width,
                header.height,
                header.bands,
                samples.len()
            )));
        }
        Ok(GeoRaster { header, samples })
    }

    /// Single-band u8 raster.
    pub fn from_u8(
        width: usize,
        height: usize,
        data: Vec<u8>,
        transform: GeoTransform,
        nodata: Option<f64>,
        crs_tag: &str,
    ) -> Result<GeoRaster> {
        Self::new(
            RasterHeader {
                width,
                height,
                bands: 1,
                sample_type: SampleType::U8,
                nodata,
                transform,
                crs_tag: crs_tag.to_string(),
            },
            Samples::U8(data),
        )
    }

    /// Single-band f32 raster.
    pub fn from_f32(
        width: usize,
        height: usize,
        data: Vec<f32>,
        transform: GeoTransform,
        crs_tag: &str,
    ) -> Result<GeoRaster> {
        Self::new(
            RasterHeader {
                width,
                height,
                bands: 1,
                sample_type: SampleType::F32,
                nodata: None,
                transform,
                crs_tag: crs_tag.to_string(),
            },
            Samples::F32(data),
        )
    }

    pub fn header(&self) -> &RasterHeader {
        &self.header
    }

    pub fn width(&self) -> usize {
        self.header.width
    }

    pub fn height(&self) -> usize {
        self.header.height
    }

    pub fn bands(&self) -> usize {
        self.header.bands
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.header.transform
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn into_samples(self) -> Samples {
        self.samples
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.samples {
            Samples::U8(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.samples {
            Samples::F32(v) => Some(v),
            _ => None,
        }
    }

    #[inline]
    pub fn index(&self, band: usize, row: usize, col: usize) -> usize {
        (band * self.header.height + row) * self.header.width + col
    }

    #[inline]
    pub fn get_f64(&self, band: usize, row: usize, col: usize) -> f64 {
        self.samples.get_f64(self.index(band, row, col))
    }
}

/// Anything that can serve windowed reads. Implementations must allow
/// concurrent reads from several threads.
pub trait RasterSource: Sync {
    fn header(&self) -> &RasterHeader;

    /// Reads `window`; pixels outside the grid are filled with nodata (or 0
    /// when the raster has none). The returned block carries the window's
    /// own transform.
    fn read_window(&self, window: Window) -> Result<GeoRaster>;
}

fn empty_block(h: &RasterHeader, w: Window) -> Result<(RasterHeader, Samples)> {
    if w.height == 0 || w.width == 0 {
        return Err(Error::arg("window has zero size"));
    }
    if w.clip(h.height, h.width).is_none() {
        return Err(Error::arg(format!(
            "window {w:?} does not intersect the {}x{} grid",
            h.height, h.width
        )));
    }
    let header = RasterHeader {
        width: w.width,
        height: w.height,
        bands: h.bands,
        sample_type: h.sample_type,
        nodata: h.nodata,
        transform: h.transform.shifted(w.row, w.col),
        crs_tag: h.crs_tag.clone(),
    };
    let fill = h.nodata.unwrap_or(0.0);
    let samples = Samples::filled(h.sample_type, header.sample_count(), fill);
    Ok((header, samples))
}

impl RasterSource for GeoRaster {
    fn header(&self) -> &RasterHeader {
        &self.header
    }

    fn read_window(&self, w: Window) -> Result<GeoRaster> {
        let (header, mut samples) = empty_block(&self.header, w)?;
        let (r0, c0, r1, c1) = w.clip(self.header.height, self.header.width).expect("checked");
        let len = c1 - c0;
        for band in 0..self.header.bands {
            for r in r0..r1 {
                let dst = (band * w.height + (r as i64 - w.row) as usize) * w.width + (c0 as i64 - w.col) as usize;
                samples.copy_range(dst, &self.samples, self.index(band, r, c0), len);
            }
        }
        GeoRaster::new(header, samples)
    }
}

pub fn sidecar_path(grid: &Path) -> PathBuf {
    let mut s = grid.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn read_header(grid: &Path) -> Result<RasterHeader> {
    let text = fs::read_to_string(sidecar_path(grid))?;
    let header: RasterHeader = serde_json::from_str(&text)?;
    header.validate()?;
    Ok(header)
}

fn write_header(grid: &Path, header: &RasterHeader) -> Result<()> {
    fs::write(sidecar_path(grid), serde_json::to_string_pretty(header)?)?;
    Ok(())
}

/// File-backed `.grid` raster served by positioned reads.
#[derive(Debug)]
pub struct GridFile {
    header: RasterHeader,
    file: File,
}

impl GridFile {
    pub fn open(path: impl AsRef<Path>) -> Result<GridFile> {
        let path = path.as_ref();
        let header = read_header(path)?;
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        if len != header.byte_len() {
            return Err(Error::Format(format!(
                "{} holds {len} bytes but its header describes {}",
                path.display(),
                header.byte_len()
            )));
        }
        Ok(GridFile { header, file })
    }

    /// Reads the whole grid into memory.
    pub fn read_all(&self) -> Result<GeoRaster> {
        self.read_window(Window::new(0, 0, self.header.height, self.header.width))
    }
}

impl RasterSource for GridFile {
    fn header(&self) -> &RasterHeader {
        &self.header
    }

    fn read_window(&self, w: Window) -> Result<GeoRaster> {
        let h = &self.header;
        let (header, mut samples) = empty_block(h, w)?;
        let (r0, c0, r1, c1) = w.clip(h.height, h.width).expect("checked");
        let size = h.sample_type.size();
        let mut buf = vec![0u8; (c1 - c0) * size];
        let full_rows = c0 == 0 && c1 == h.width && w.col == 0 && w.width == h.width;
        for band in 0..h.bands {
            if full_rows {
                // contiguous rows: one read per band
                let mut big = vec![0u8; (r1 - r0) * h.width * size];
                let off = ((band * h.height + r0) * h.width * size) as u64;
                self.file.read_exact_at(&mut big, off)?;
                let dst = (band * w.height + (r0 as i64 - w.row) as usize) * w.width;
                samples.decode_into(dst, &big);
                continue;
            }
            for r in r0..r1 {
                let off = (((band * h.height + r) * h.width + c0) * size) as u64;
                self.file.read_exact_at(&mut buf, off)?;
                let dst = (band * w.height + (r as i64 - w.row) as usize) * w.width + (c0 as i64 - w.col) as usize;
                samples.decode_into(dst, &buf);
            }
        }
        GeoRaster::new(header, samples)
    }
}

/// Writes `raster` as `path` plus sidecar.
pub fn write_grid(path: impl AsRef<Path>, raster: &GeoRaster) -> Result<()> {
    let path = path.as_ref();
    let mut w = GridWriter::create(path, raster.header().clone())?;
    w.write_window(0, 0, raster)?;
    w.finish()
}

/// Random-access writer for a `.grid` file of known size.
pub struct GridWriter {
    header: RasterHeader,
    file: File,
}

impl GridWriter {
    pub fn create(path: impl AsRef<Path>, header: RasterHeader) -> Result<GridWriter> {
        header.validate()?;
        let path = path.as_ref();
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .read(true)
            .open(path)?;
        file.set_len(header.byte_len())?;
        write_header(path, &header)?;
        Ok(GridWriter { header, file })
    }

    pub fn header(&self) -> &RasterHeader {
        &self.header
    }

    /// Writes `block` with its upper-left pixel at `(row, col)`; the block
    /// must fit inside the grid.
    pub fn write_window(&mut self, row: usize, col: usize, block: &GeoRaster) -> Result<()> {
        let h = &self.header;
        let b = block.header();
        if b.bands != h.bands || b.sample_type != h.sample_type {
            return Err(Error::arg("block band layout does not match the grid"));
        }
        if row + b.height > h.height || col + b.width > h.width {
            return Err(Error::arg("block extends past the grid"));
        }
        let size = h.sample_type.size();
        for band in 0..h.bands {
            if col == 0 && b.width == h.width {
                let bytes = block.samples().to_le_bytes(block.index(band, 0, 0), b.width * b.height);
                let off = ((band * h.height + row) * h.width * size) as u64;
                self.file.write_all_at(&bytes, off)?;
                continue;
            }
            for r in 0..b.height {
                let bytes = block.samples().to_le_bytes(block.index(band, r, 0), b.width);
                let off = (((band * h.height + row + r) * h.width + col) * size) as u64;
                self.file.write_all_at(&bytes, off)?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        self.file.sync_data()?;
        Ok(())
    }
}

/// Imports a binary PPM (P6, 3 bands) or PGM (P5, 1 band).
pub fn import_pnm(path: impl AsRef<Path>, transform: GeoTransform, crs_tag: &str) -> Result<GeoRaster> {
    let mut r = BufReader::new(File::open(path)?);
    let mut tokens: Vec<String> = Vec::new();
    while tokens.len() < 4 {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("truncated PNM header".into()));
        }
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(str::to_string));
    }
    let bands = match tokens[0].as_str() {
        "P6" => 3,
        "P5" => 1,
        other => return Err(Error::Format(format!("unsupported PNM magic {other}"))),
    };
    let parse = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Format(format!("bad PNM header field {s:?}")))
    };
    let width = parse(&tokens[1])?;
    let height = parse(&tokens[2])?;
    let maxval = parse(&tokens[3])?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("bad PNM maxval {maxval}")));
    }
    let n = width * height * bands;
    let wide = maxval > 255;
    let mut raw = vec![0u8; if wide { 2 * n } else { n }];
    r.read_exact(&mut raw)?;
    // PNM is pixel-interleaved; the native layout is band-sequential.
    let samples = if wide {
        let mut out = vec![0u16; n];
        for (i, c) in raw.chunks_exact(2).enumerate() {
            let (pix, band) = (i / bands, i % bands);
            out[band * width * height + pix] = u16::from_be_bytes([c[0], c[1]]);
        }
        Samples::U16(out)
    } else {
        let mut out = vec![0u8; n];
        for (i, &v) in raw.iter().enumerate() {
            let (pix, band) = (i / bands, i % bands);
            out[band * width * height + pix] = v;
        }
        Samples::U8(out)
    };
    GeoRaster::new(
        RasterHeader {
            width,
            height,
            bands,
            sample_type: samples.sample_type(),
            nodata: None,
            transform,
            crs_tag: crs_tag.to_string(),
        },
        samples,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_raster(w: usize, h: usize, bands: usize) -> GeoRaster {
        let data: Vec<u16> = (0..w * h * bands).map(|i| (i * 7 % 65521) as u16).collect();
        GeoRaster::new(
            RasterHeader {
                width: w,
                height: h,
                bands,
                sample_type: SampleType::U16,
                nodata: Some(9999.0),
                transform: GeoTransform::new(100.0, 200.0, 0.5).unwrap(),
                crs_tag: "TM:36".into(),
            },
            Samples::U16(data),
        )
        .unwrap()
    }

    #[test]
    fn full_window_is_whole_grid() {
        let r = sample_raster(13, 7, 2);
        let w = r.read_window(Window::new(0, 0, 7, 13)).unwrap();
        assert_eq!(w, r);
    }

    #[test]
    fn single_pixel_window() {
        let r = sample_raster(13, 7, 2);
        let w = r.read_window(Window::new(3, 5, 1, 1)).unwrap();
        assert_eq!(w.get_f64(1, 0, 0), r.get_f64(1, 3, 5));
        assert_eq!(w.transform().origin_x, 102.5);
        assert_eq!(w.transform().origin_y, 198.5);
    }

    #[test]
    fn out_of_grid_filled_with_nodata() {
        let r = sample_raster(4, 4, 1);
        let w = r.read_window(Window::new(-1, -1, 2, 2)).unwrap();
        assert_eq!(w.get_f64(0, 0, 0), 9999.0);
        assert_eq!(w.get_f64(0, 1, 1), r.get_f64(0, 0, 0));
        assert!(r.read_window(Window::new(10, 10, 2, 2)).is_err());
    }

    #[test]
    fn sample_count_checked() {
        let r = sample_raster(4, 4, 1);
        let h = r.header().clone();
        assert!(GeoRaster::new(h, Samples::U16(vec![0; 15])).is_err());
    }

    #[test]
    fn file_round_trip_and_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.grid");
        let r = sample_raster(9, 5, 3);
        write_grid(&path, &r).unwrap();
        let f = GridFile::open(&path).unwrap();
        assert_eq!(f.read_all().unwrap(), r);
        assert_eq!(
            f.read_window(Window::new(1, 2, 3, 4)).unwrap(),
            r.read_window(Window::new(1, 2, 3, 4)).unwrap()
        );
        std::fs::write(&path, [0u8; 10]).unwrap();
        assert!(GridFile::open(&path).is_err());
    }

    #[test]
    fn pnm_import() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ppm");
        let mut bytes = b"P6\n# comment\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        std::fs::write(&path, bytes).unwrap();
        let r = import_pnm(&path, GeoTransform::new(0.0, 0.0, 1.0).unwrap(), "x").unwrap();
        assert_eq!(r.bands(), 3);
        assert_eq!(r.as_u8().unwrap(), &[1, 4, 2, 5, 3, 6]);
    }
}
