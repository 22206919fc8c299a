//! POI clusters as a GeoJSON `FeatureCollection` of `Point` features.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Properties attached to every POI feature. Confidences are percentages;
/// `null` means no slot produced a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiProperties {
    /// Owning user, or `*` when stay points were pooled across users.
    pub user_id: String,
    pub cluster_id: u32,
    pub member_count: usize,
    pub first_arrive: i64,
    pub last_depart: i64,
    pub io_label: String,
    pub pp_label: String,
    #[serde(rename = "P1")]
    pub p1: Option<f64>,
    #[serde(rename = "P2")]
    pub p2: Option<f64>,
    #[serde(rename = "P3")]
    pub p3: Option<f64>,
    #[serde(rename = "P4")]
    pub p4: Option<f64>,
    #[serde(rename = "P0")]
    pub p0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    #[serde(rename = "type")]
    pub kind: String,
    /// `[lon, lat]`, GeoJSON axis order.
    pub coordinates: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    #[serde(rename = "type")]
    pub kind: String,
    pub geometry: Geometry,
    pub properties: PoiProperties,
}

impl Feature {
    pub fn point(lat: f64, lon: f64, properties: PoiProperties) -> Self {
        Self {
            kind: "Feature".into(),
            geometry: Geometry {
                kind: "Point".into(),
                coordinates: [lon, lat],
            },
            properties,
        }
    }

    pub fn lat(&self) -> f64 {
        self.geometry.coordinates[1]
    }

    pub fn lon(&self) -> f64 {
        self.geometry.coordinates[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCollection {
    #[serde(rename = "type")]
    pub kind: String,
    pub features: Vec<Feature>,
}

impl FeatureCollection {
    pub fn new(features: Vec<Feature>) -> Self {
        Self {
            kind: "FeatureCollection".into(),
            features,
        }
    }
}

pub fn write(path: &Path, fc: &FeatureCollection) -> Result<()> {
    let json = serde_json::to_string_pretty(fc).map_err(Error::json(path))?;
    std::fs::write(path, json + "\n").map_err(Error::io(path))
}

pub fn read(path: &Path) -> Result<FeatureCollection> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let fc: FeatureCollection = serde_json::from_str(&text).map_err(Error::json(path))?;
    if fc.kind != "FeatureCollection" {
        return Err(Error::Input(format!(
            "{}: not a FeatureCollection",
            path.display()
        )));
    }
    Ok(fc)
}
