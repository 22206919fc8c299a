//! Point-of-interest extraction for low-rate smartphone location traces.
//!
//! The pipeline runs in this order: [`prep::denoise`] the raw streams,
//! detect validated stay points ([`staypoint::detect_vspd`]), group them into
//! POIs ([`cluster::dbscan_poi`]), label the visit sequence
//! ([`trajectory::build_trajectory`]) and classify each POI's environment from
//! slot-aligned sensor data ([`sfec::classify_poi`]).
//!
//! The crate is `no_std` and needs only `alloc`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cluster;
pub mod geo;
pub mod model;
pub mod prep;
pub mod sfec;
pub mod staypoint;
pub mod trajectory;

pub use geo::{haversine_distance, GeoPoint};
pub use model::{
    Activity, EnvCode, EnvReport, IoLabel, LocationSample, PipelineConfig, PoiCluster, PpLabel,
    SensorSample, StayPoint, Timestamp, Trajectory, Visit,
};
