use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::polygon::Polygon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Building,
    Road,
    Background,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Building => "building",
            Category::Road => "road",
            Category::Background => "background",
        }
    }
}

impl FromStr for Category {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "building" => Ok(Category::Building),
            "road" => Ok(Category::Road),
            "background" => Ok(Category::Background),
            other => Err(Error::arg(format!("unknown class {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Low,
    Medium,
    High,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::Low => "low",
            Confidence::Medium => "medium",
            Confidence::High => "high",
        }
    }
}

impl FromStr for Confidence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Confidence::Low),
            "medium" => Ok(Confidence::Medium),
            "high" => Ok(Confidence::High),
            other => Err(Error::arg(format!("unknown confidence {other:?}"))),
        }
    }
}

/// One human-drawn label polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub id: String,
    pub geometry: Polygon,
    pub category: Category,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Regular,
    LowQuality,
}

impl Quality {
    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Regular => "regular",
            Quality::LowQuality => "low_quality",
        }
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(Quality::Regular),
            "low_quality" => Ok(Quality::LowQuality),
            other => Err(Error::arg(format!("unknown quality {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    pub id: String,
    pub polygon: Polygon,
    pub area_m2: f64,
    pub quality: Option<Quality>,
}

impl Footprint {
    /// Footprint whose area is the polygon's net area.
    pub fn new(id: impl Into<String>, polygon: Polygon) -> Footprint {
        let polygon = polygon.normalized();
        Footprint {
            id: id.into(),
            area_m2: polygon.area(),
            polygon,
            quality: None,
        }
    }
}

/// Building polygons in one CRS.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FootprintSet {
    pub crs_tag: String,
    pub footprints: Vec<Footprint>,
}

impl FootprintSet {
    pub fn new(crs_tag: impl Into<String>, footprints: Vec<Footprint>) -> Result<FootprintSet> {
        let set = FootprintSet {
            crs_tag: crs_tag.into(),
            footprints,
        };
        set.check_ids()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.footprints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.footprints.is_empty()
    }

    pub fn check_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.footprints {
            if !seen.insert(f.id.as_str()) {
                return Err(Error::arg(format!("duplicate footprint id {:?}", f.id)));
            }
        }
        Ok(())
    }

    pub fn polygons(&self) -> impl Iterator<Item = &Polygon> {
        self.footprints.iter().map(|f| &f.polygon)
    }
}
