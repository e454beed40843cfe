//! WGS84 <-> transverse Mercator using the sixth-order Krüger series.

use crate::error::{Error, Result};
use crate::geo::transform::Direction;

const WGS84_A: f64 = 6_378_137.0;
const WGS84_F: f64 = 1.0 / 298.257_223_563;
pub const SCALE_FACTOR: f64 = 0.9996;
pub const FALSE_EASTING: f64 = 500_000.0;
const MAX_LAT: f64 = 84.0;
const MAX_DLON: f64 = 6.0;

struct Series {
    e: f64,
    e2: f64,
    /// Rectifying radius scaled by the central scale factor.
    k0a: f64,
    alpha: [f64; 6],
    beta: [f64; 6],
}

fn series() -> &'static Series {
    use std::sync::OnceLock;
    static S: OnceLock<Series> = OnceLock::new();
    S.get_or_init(|| {
        let f = WGS84_F;
        let n = f / (2.0 - f);
        let e2 = f * (2.0 - f);
        let (n2, n3) = (n * n, n * n * n);
        let (n4, n5, n6) = (n3 * n, n3 * n2, n3 * n3);
        let a_rect = WGS84_A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
        let alpha = [
            n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0 + 7891.0 * n6 / 37800.0,
            13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0
                - 1_983_433.0 * n6 / 1_935_360.0,
            61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0 + 167_603.0 * n6 / 181_440.0,
            49561.0 * n4 / 161_280.0 - 179.0 * n5 / 168.0 + 6_601_661.0 * n6 / 7_257_600.0,
            34729.0 * n5 / 80640.0 - 3_418_889.0 * n6 / 1_995_840.0,
            212_378_941.0 * n6 / 319_334_400.0,
        ];
        let beta = [
            n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0 - 81.0 * n5 / 512.0 + 96199.0 * n6 / 604_800.0,
            n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0 + 46.0 * n5 / 105.0 - 1_118_711.0 * n6 / 3_870_720.0,
            17.0 * n3 / 480.0 - 37.0 * n4 / 840.0 - 209.0 * n5 / 4480.0 + 5569.0 * n6 / 90720.0,
            4397.0 * n4 / 161_280.0 - 11.0 * n5 / 504.0 - 830_251.0 * n6 / 7_257_600.0,
            4583.0 * n5 / 161_280.0 - 108_847.0 * n6 / 3_991_680.0,
            20_648_693.0 * n6 / 638_668_800.0,
        ];
        Series {
            e: e2.sqrt(),
            e2,
            k0a: SCALE_FACTOR * a_rect,
            alpha,
            beta,
        }
    })
}

/// Projected coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EastingNorthing {
    pub easting: f64,
    pub northing: f64,
}

/// Geographic coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

fn check_domain(lat: f64, lon: f64, central_meridian: f64) -> Result<()> {
    if !lat.is_finite() || lat.abs() >= MAX_LAT {
        return Err(Error::Domain(format!("latitude {lat} outside (-84, 84)")));
    }
    let dlon = lon - central_meridian;
    if !dlon.is_finite() || dlon.abs() >= MAX_DLON {
        return Err(Error::Domain(format!(
            "longitude {lon} is {dlon} degrees from the central meridian (limit 6)"
        )));
    }
    Ok(())
}

/// Conformal-latitude tangent from geodetic tangent.
fn taupf(tau: f64, e: f64) -> f64 {
    let tau1 = tau.hypot(1.0);
    let sig = (e * (e * tau / tau1).atanh()).sinh();
    tau * sig.hypot(1.0) - sig * tau1
}

/// Inverse of [`taupf`] by Newton iteration.
fn tauf(taup: f64, e: f64, e2: f64) -> f64 {
    let e2m = 1.0 - e2;
    let mut tau = taup / e2m;
    for _ in 0..8 {
        let taupa = taupf(tau, e);
        let dtau = (taup - taupa) * (1.0 + e2m * tau * tau) / (e2m * tau.hypot(1.0) * taupa.hypot(1.0));
        tau += dtau;
        if dtau.abs() <= 1e-15 * tau.abs().max(1.0) {
            break;
        }
    }
    tau
}

pub fn forward(lat: f64, lon: f64, central_meridian: f64) -> Result<EastingNorthing> {
    check_domain(lat, lon, central_meridian)?;
    let s = series();
    let phi = lat.to_radians();
    let lam = (lon - central_meridian).to_radians();
    let taup = taupf(phi.tan(), s.e);
    let xip = taup.atan2(lam.cos());
    let etap = (lam.sin() / taup.hypot(lam.cos())).asinh();
    let mut xi = xip;
    let mut eta = etap;
    for (j, a) in s.alpha.iter().enumerate() {
        let k = 2.0 * (j + 1) as f64;
        xi += a * (k * xip).sin() * (k * etap).cosh();
        eta += a * (k * xip).cos() * (k * etap).sinh();
    }
    Ok(EastingNorthing {
        easting: FALSE_EASTING + s.k0a * eta,
        northing: s.k0a * xi,
    })
}

pub fn inverse(easting: f64, northing: f64, central_meridian: f64) -> Result<LatLon> {
    if !easting.is_finite() || !northing.is_finite() {
        return Err(Error::Domain("non-finite projected coordinate".into()));
    }
    let s = series();
    let xi = northing / s.k0a;
    let eta = (easting - FALSE_EASTING) / s.k0a;
    let mut xip = xi;
    let mut etap = eta;
    for (j, b) in s.beta.iter().enumerate() {
        let k = 2.0 * (j + 1) as f64;
        xip -= b * (k * xi).sin() * (k * eta).cosh();
        etap -= b * (k * xi).cos() * (k * eta).sinh();
    }
    let taup = xip.sin() / etap.sinh().hypot(xip.cos());
    let lam = etap.sinh().atan2(xip.cos());
    let tau = tauf(taup, s.e, s.e2);
    let out = LatLon {
        lat: tau.atan().to_degrees(),
        lon: central_meridian + lam.to_degrees(),
    };
    check_domain(out.lat, out.lon, central_meridian)?;
    Ok(out)
}

/// Result of [`project_wgs84_tm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projected {
    Tm(EastingNorthing),
    Geographic(LatLon),
}

/// Forward takes `(a, b) = (lat, lon)`; inverse takes `(a, b) = (easting,
/// northing)`.
pub fn project_wgs84_tm(a: f64, b: f64, central_meridian: f64, dir: Direction) -> Result<Projected> {
    match dir {
        Direction::Forward => forward(a, b, central_meridian).map(Projected::Tm),
        Direction::Inverse => inverse(a, b, central_meridian).map(Projected::Geographic),
    }
}

/// Parses a CRS tag of the form `TM:<central meridian>` (case-insensitive).
pub fn parse_tm_tag(tag: &str) -> Option<f64> {
    let (kind, cm) = tag.split_once(':')?;
    if !kind.eq_ignore_ascii_case("tm") {
        return None;
    }
    cm.trim().parse().ok()
}

/// Projects a polygon given in `(lon, lat)` degrees to TM meters.
pub fn polygon_to_tm(
    polygon: &crate::geo::polygon::Polygon,
    central_meridian: f64,
) -> Result<crate::geo::polygon::Polygon> {
    use crate::geo::polygon::{Point, Polygon, Ring};
    let ring = |r: &Ring| -> Result<Ring> {
        let pts = r
            .points()
            .iter()
            .map(|p| forward(p.y, p.x, central_meridian).map(|e| Point::new(e.easting, e.northing)))
            .collect::<Result<Vec<_>>>()?;
        Ring::new(pts)
    };
    Ok(Polygon::new(
        ring(&polygon.exterior)?,
        polygon.interiors.iter().map(ring).collect::<Result<_>>()?,
    )
    .normalized())
}

/// Inverse of [`polygon_to_tm`]: TM meters to `(lon, lat)` degrees.
pub fn polygon_from_tm(
    polygon: &crate::geo::polygon::Polygon,
    central_meridian: f64,
) -> Result<crate::geo::polygon::Polygon> {
    use crate::geo::polygon::{Point, Polygon, Ring};
    let ring = |r: &Ring| -> Result<Ring> {
        let pts = r
            .points()
            .iter()
            .map(|p| inverse(p.x, p.y, central_meridian).map(|g| Point::new(g.lon, g.lat)))
            .collect::<Result<Vec<_>>>()?;
        Ring::new(pts)
    };
    Ok(Polygon::new(
        ring(&polygon.exterior)?,
        polygon.interiors.iter().map(ring).collect::<Result<_>>()?,
    )
    .normalized())
}

pub const WGS84_TAG: &str = "EPSG:4326";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equator_on_central_meridian() {
        let p = forward(0.0, 33.0, 33.0).unwrap();
        assert_eq!(p.easting, 500_000.0);
        assert_eq!(p.northing, 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(forward(84.0, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(forward(10.0, 6.5, 0.0), Err(Error::Domain(_))));
        assert!(forward(-83.9, -5.9, 0.0).is_ok());
    }

    #[test]
    fn tags() {
        assert_eq!(parse_tm_tag("TM:36"), Some(36.0));
        assert_eq!(parse_tm_tag("tm:-3.5"), Some(-3.5));
        assert_eq!(parse_tm_tag("EPSG:4326"), None);
    }
}
