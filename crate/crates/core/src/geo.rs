//! Great-circle geometry on a spherical Earth.

use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::model::{check_lat_lon, ModelError};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, ModelError> {
        check_lat_lon(lat, lon)?;
        Ok(Self { lat, lon })
    }
}

/// Haversine function, `sin²(θ/2)`.
#[inline]
pub fn hav(theta: f64) -> f64 {
    let s = libm::sin(theta / 2.0);
    s * s
}

/// Great-circle distance in meters between two points on a sphere of
/// radius `r`.
pub fn haversine_distance(p1: GeoPoint, p2: GeoPoint, r: f64) -> f64 {
    let phi1 = p1.lat.to_radians();
    let phi2 = p2.lat.to_radians();
    let d_phi = phi2 - phi1;
    let d_lambda = (p2.lon - p1.lon).to_radians();
    // Drift can push h a hair outside [0, 1] near antipodes.
    let h = (hav(d_phi) + libm::cos(phi1) * libm::cos(phi2) * hav(d_lambda)).clamp(0.0, 1.0);
    2.0 * r * libm::asin(libm::sqrt(h))
}

/// Distance helper over raw degree pairs, for callers that already hold
/// validated coordinates.
#[inline]
pub(crate) fn distance_deg(lat1: f64, lon1: f64, lat2: f64, lon2: f64, r: f64) -> f64 {
    haversine_distance(
        GeoPoint {
            lat: lat1,
            lon: lon1,
        },
        GeoPoint {
            lat: lat2,
            lon: lon2,
        },
        r,
    )
}

/// Half the circumference of a sphere of radius `r`.
pub fn max_distance(r: f64) -> f64 {
    PI * r
}
