//! GeoJSON (RFC 7946) exchange for annotations, footprints and generic
//! polygon layers.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::polygon::{Point, Polygon, Ring};
use crate::geo::vector::{Annotation, Category, Confidence, Footprint, FootprintSet, Quality};

/// Feature-level problem that did not abort parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseIssue {
    pub index: usize,
    pub message: String,
}

/// Parsed annotations plus the features that were reported instead of kept.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSet {
    pub annotations: Vec<Annotation>,
    pub issues: Vec<ParseIssue>,
}

fn features(doc: &Value) -> Result<&Vec<Value>> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::parse(None, "document is not a JSON object"))?;
    if obj.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::parse(None, "document is not a FeatureCollection"));
    }
    obj.get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse(None, "FeatureCollection has no features array"))
}

fn parse_position(v: &Value, index: usize) -> Result<Point> {
    let a = v
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| Error::parse(Some(index), "position must be an array of 2+ numbers"))?;
    let x = a[0].as_f64();
    let y = a[1].as_f64();
    match (x, y) {
        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok(Point::new(x, y)),
        _ => Err(Error::parse(Some(index), "position holds non-numeric values")),
    }
}

fn parse_polygon(geometry: &Value, index: usize) -> Result<Polygon> {
    let kind = geometry.get("type").and_then(Value::as_str).unwrap_or("<missing>");
    if kind != "Polygon" {
        return Err(Error::parse(
            Some(index),
            format!("geometry type {kind} is not Polygon"),
        ));
    }
    let rings = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .filter(|r| !r.is_empty())
        .ok_or_else(|| Error::parse(Some(index), "Polygon has no rings"))?;
    let mut parsed = Vec::with_capacity(rings.len());
    for ring in rings {
        let pts = ring
            .as_array()
            .ok_or_else(|| Error::parse(Some(index), "ring is not an array"))?
            .iter()
            .map(|p| parse_position(p, index))
            .collect::<Result<Vec<_>>>()?;
        let ring = Ring::new(pts).map_err(|e| Error::parse(Some(index), e.to_string()))?;
        parsed.push(ring);
    }
    let exterior = parsed.remove(0);
    Ok(Polygon::new(exterior, parsed).normalized())
}

fn feature_id(feature: &Value, props: Option<&Map<String, Value>>, index: usize) -> String {
    let from = |v: &Value| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    };
    feature
        .get("id")
        .and_then(from)
        .or_else(|| props.and_then(|p| p.get("id")).and_then(from))
        .unwrap_or_else(|| format!("feature-{index}"))
}

/// Parses a FeatureCollection of labeled Polygon features.
///
/// Hard errors (malformed JSON, non-polygon geometry, missing `class`,
/// invalid rings) abort with the feature index. A `class` outside the three
/// known categories is reported in [`AnnotationSet::issues`] and the feature
/// is skipped; a missing or unknown `confidence` is reported and defaults to
/// medium.
pub fn parse_annotations(document: &str) -> Result<AnnotationSet> {
    let doc: Value = serde_json::from_str(document).map_err(|e| Error::parse(None, format!("malformed JSON: {e}")))?;
    let mut out = AnnotationSet::default();
    for (index, feature) in features(&doc)?.iter().enumerate() {
        let geometry = feature
            .get("geometry")
            .ok_or_else(|| Error::parse(Some(index), "feature has no geometry"))?;
        let polygon = parse_polygon(geometry, index)?;
        if !polygon.exterior.is_simple() {
            return Err(Error::parse(Some(index), "exterior ring self-intersects"));
        }
        let props = feature.get("properties").and_then(Value::as_object);
        let class = props
            .and_then(|p| p.get("class"))
            .ok_or_else(|| Error::parse(Some(index), "missing `class` property"))?;
        let category = match class.as_str().map(str::parse::<Category>) {
            Some(Ok(c)) => c,
            _ => {
                out.issues.push(ParseIssue {
                    index,
                    message: format!("unknown class {class}; feature skipped"),
                });
                continue;
            }
        };
        let confidence = match props.and_then(|p| p.get("confidence")) {
            Some(v) => match v.as_str().map(str::parse::<Confidence>) {
                Some(Ok(c)) => c,
                _ => {
                    out.issues.push(ParseIssue {
                        index,
                        message: format!("unknown confidence {v}; using medium"),
                    });
                    Confidence::Medium
                }
            },
            None => {
                out.issues.push(ParseIssue {
                    index,
                    message: "missing confidence; using medium".into(),
                });
                Confidence::Medium
            }
        };
        out.annotations.push(Annotation {
            id: feature_id(feature, props, index),
            geometry: polygon,
            category,
            confidence,
        });
    }
    Ok(out)
}

fn ring_json(ring: &Ring) -> Value {
    Value::Array(ring.points().iter().map(|p| json!([p.x, p.y])).collect())
}

/// RFC 7946 geometry: exterior counter-clockwise, holes clockwise.
pub fn polygon_geometry(polygon: &Polygon) -> Value {
    let p = polygon.clone().normalized();
    let mut rings = vec![ring_json(&p.exterior)];
    rings.extend(p.interiors.iter().map(ring_json));
    json!({"type": "Polygon", "coordinates": rings})
}

fn collection(features: Vec<Value>, crs_tag: Option<&str>) -> String {
    let mut obj = Map::new();
    obj.insert("type".into(), "FeatureCollection".into());
    if let Some(tag) = crs_tag {
        obj.insert("crs_tag".into(), tag.into());
    }
    obj.insert("features".into(), Value::Array(features));
    serde_json::to_string(&Value::Object(obj)).expect("serializable")
}

pub fn write_annotations(annotations: &[Annotation]) -> String {
    let features = annotations
        .iter()
        .map(|a| {
            json!({
                "type": "Feature",
                "id": a.id,
                "geometry": polygon_geometry(&a.geometry),
                "properties": {
                    "class": a.category.as_str(),
                    "confidence": a.confidence.as_str(),
                },
            })
        })
        .collect();
    collection(features, None)
}

pub fn write_footprints(set: &FootprintSet) -> String {
    let features = set
        .footprints
        .iter()
        .map(|f| {
            let mut props = Map::new();
            props.insert("id".into(), f.id.clone().into());
            props.insert("area_m2".into(), json!(f.area_m2));
            if let Some(q) = f.quality {
                props.insert("quality".into(), q.as_str().into());
            }
            json!({
                "type": "Feature",
                "id": f.id,
                "geometry": polygon_geometry(&f.polygon),
                "properties": props,
            })
        })
        .collect();
    collection(features, Some(&set.crs_tag))
}

pub fn read_footprints(document: &str) -> Result<FootprintSet> {
    let doc: Value = serde_json::from_str(document).map_err(|e| Error::parse(None, format!("malformed JSON: {e}")))?;
    let crs_tag = doc
        .get("crs_tag")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let mut footprints = Vec::new();
    for (index, feature) in features(&doc)?.iter().enumerate() {
        let geometry = feature
            .get("geometry")
            .ok_or_else(|| Error::parse(Some(index), "feature has no geometry"))?;
        let polygon = parse_polygon(geometry, index)?;
        let props = feature.get("properties").and_then(Value::as_object);
        let area_m2 = props
            .and_then(|p| p.get("area_m2"))
            .and_then(Value::as_f64)
            .unwrap_or_else(|| polygon.area());
        let quality = match props.and_then(|p| p.get("quality")) {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_str()
                    .ok_or_else(|| Error::parse(Some(index), "quality must be a string"))?
                    .parse::<Quality>()
                    .map_err(|e| Error::parse(Some(index), e.to_string()))?,
            ),
        };
        footprints.push(Footprint {
            id: feature_id(feature, props, index),
            polygon,
            area_m2,
            quality,
        });
    }
    FootprintSet::new(crs_tag, footprints).map_err(|e| Error::parse(None, e.to_string()))
}

/// Writes polygons with arbitrary properties.
pub fn write_polygon_layer(items: &[(Polygon, Map<String, Value>)], crs_tag: Option<&str>) -> String {
    let features = items
        .iter()
        .map(|(p, props)| {
            json!({
                "type": "Feature",
                "geometry": polygon_geometry(p),
                "properties": props,
            })
        })
        .collect();
    collection(features, crs_tag)
}

/// Reads polygons with their property maps.
pub fn read_polygon_layer(document: &str) -> Result<Vec<(Polygon, Map<String, Value>)>> {
    let doc: Value = serde_json::from_str(document).map_err(|e| Error::parse(None, format!("malformed JSON: {e}")))?;
    features(&doc)?
        .iter()
        .enumerate()
        .map(|(index, f)| {
            let geometry = f
                .get("geometry")
                .ok_or_else(|| Error::parse(Some(index), "feature has no geometry"))?;
            let props = f
                .get("properties")
                .and_then(Value::as_object)
                .cloned()
                .unwrap_or_default();
            Ok((parse_polygon(geometry, index)?, props))
        })
        .collect()
}
