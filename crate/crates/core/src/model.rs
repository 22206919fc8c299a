//! Shared domain types: samples, stay points, clusters, trajectories,
//! environment reports and the pipeline configuration.
//!
//! Sample and stay-point constructors validate their inputs, and the serde
//! `Deserialize` impls route through the same checks, so an invalid value
//! cannot be built from outside the crate.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

/// Why a record was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    LatitudeOutOfRange(f64),
    LongitudeOutOfRange(f64),
    NonPositiveAccuracy(f64),
    NonFinite(&'static str),
    Negative(&'static str),
    NoiseNormOutOfRange(f64),
    EmptyMembers,
    DepartBeforeArrive,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::LatitudeOutOfRange(v) => write!(f, "latitude out of range: {v}"),
            ModelError::LongitudeOutOfRange(v) => write!(f, "longitude out of range: {v}"),
            ModelError::NonPositiveAccuracy(v) => write!(f, "accuracy must be positive: {v}"),
            ModelError::NonFinite(field) => write!(f, "{field} is not a finite number"),
            ModelError::Negative(field) => write!(f, "{field} must be nonnegative"),
            ModelError::NoiseNormOutOfRange(v) => {
                write!(f, "normalized noise must lie in [0, 10]: {v}")
            }
            ModelError::EmptyMembers => f.write_str("stay point has no member samples"),
            ModelError::DepartBeforeArrive => f.write_str("departure precedes arrival"),
        }
    }
}

impl core::error::Error for ModelError {}

pub(crate) fn check_lat_lon(lat: f64, lon: f64) -> Result<(), ModelError> {
    if !lat.is_finite() {
        return Err(ModelError::NonFinite("latitude"));
    }
    if !lon.is_finite() {
        return Err(ModelError::NonFinite("longitude"));
    }
    if !(-90.0..=90.0).contains(&lat) {
        return Err(ModelError::LatitudeOutOfRange(lat));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(ModelError::LongitudeOutOfRange(lon));
    }
    Ok(())
}

fn check_accuracy(accuracy: f64) -> Result<(), ModelError> {
    if !accuracy.is_finite() {
        return Err(ModelError::NonFinite("accuracy"));
    }
    if accuracy <= 0.0 {
        return Err(ModelError::NonPositiveAccuracy(accuracy));
    }
    Ok(())
}

fn check_nonnegative(field: &'static str, value: Option<f64>) -> Result<(), ModelError> {
    match value {
        Some(v) if !v.is_finite() => Err(ModelError::NonFinite(field)),
        Some(v) if v < 0.0 => Err(ModelError::Negative(field)),
        _ => Ok(()),
    }
}

/// Anything carrying a sample timestamp.
pub trait Timestamped {
    fn timestamp(&self) -> Timestamp;
}

/// Unvalidated location row, as read from an input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawLocation {
    pub user_id: String,
    pub t: Timestamp,
    pub lat: f64,
    pub lon: f64,
    pub accuracy: f64,
}

/// One GPS fix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLocation", into = "RawLocation")]
pub struct LocationSample {
    user_id: String,
    t: Timestamp,
    lat: f64,
    lon: f64,
    accuracy: f64,
}

impl LocationSample {
    pub fn new(
        user_id: impl Into<String>,
        t: Timestamp,
        lat: f64,
        lon: f64,
        accuracy: f64,
    ) -> Result<Self, ModelError> {
        check_lat_lon(lat, lon)?;
        check_accuracy(accuracy)?;
        Ok(Self {
            user_id: user_id.into(),
            t,
            lat,
            lon,
            accuracy,
        })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }
    pub fn t(&self) -> Timestamp {
        self.t
    }
    pub fn lat(&self) -> f64 {
        self.lat
    }
    pub fn lon(&self) -> f64 {
        self.lon
    }
    /// Radius in meters of the 68% confidence circle reported by the device.
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }
}

impl Timestamped for LocationSample {
    fn timestamp(&self) -> Timestamp {
        self.t
    }
}

impl TryFrom<RawLocation> for LocationSample {
    type Error = ModelError;

    fn try_from(raw: RawLocation) -> Result<Self, Self::Error> {
        LocationSample::new(raw.user_id, raw.t, raw.lat, raw.lon, raw.accuracy)
    }
}

impl From<LocationSample> for RawLocation {
    fn from(s: LocationSample) -> Self {
        RawLocation {
            user_id: s.user_id,
            t: s.t,
            lat: s.lat,
            lon: s.lon,
            accuracy: s.accuracy,
        }
    }
}

/// Most frequent activity reported by the platform activity recognizer.
///
/// The declaration order is the tie-break order used when aggregating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Activity {
    Still,
    Walking,
    Other,
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Still, Activity::Walking, Activity::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Still => "still",
            Activity::Walking => "walking",
            Activity::Other => "other",
        }
    }

    /// Case-insensitive parse of `still`, `walking` or `other`.
    pub fn parse(s: &str) -> Option<Activity> {
        Activity::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

/// Unvalidated sensor row.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawSensor {
    pub user_id: String,
    pub t: Timestamp,
    pub velocity: Option<f64>,
    pub accuracy: Option<f64>,
    pub noise_raw: Option<f64>,
    pub noise_norm: Option<f64>,
    pub battery_charging: Option<bool>,
    pub light: Option<f64>,
    pub activity: Option<Activity>,
}

/// One multi-sensor reading. Absent fields are `None`, never a sentinel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSensor", into = "RawSensor")]
pub struct SensorSample {
    raw: RawSensor,
}

impl SensorSample {
    pub fn new(raw: RawSensor) -> Result<Self, ModelError> {
        check_nonnegative("velocity", raw.velocity)?;
        if let Some(a) = raw.accuracy {
            check_accuracy(a)?;
        }
        check_nonnegative("noise_raw", raw.noise_raw)?;
        check_nonnegative("noise_norm", raw.noise_norm)?;
        if let Some(n) = raw.noise_norm {
            if n > 10.0 {
                return Err(ModelError::NoiseNormOutOfRange(n));
            }
        }
        check_nonnegative("light", raw.light)?;
        Ok(Self { raw })
    }

    pub fn user_id(&self) -> &str {
        &self.raw.user_id
    }
    pub fn t(&self) -> Timestamp {
        self.raw.t
    }
    pub fn velocity(&self) -> Option<f64> {
        self.raw.velocity
    }
    pub fn accuracy(&self) -> Option<f64> {
        self.raw.accuracy
    }
    pub fn noise_raw(&self) -> Option<f64> {
        self.raw.noise_raw
    }
    pub fn noise_norm(&self) -> Option<f64> {
        self.raw.noise_norm
    }
    pub fn battery_charging(&self) -> Option<bool> {
        self.raw.battery_charging
    }
    pub fn light(&self) -> Option<f64> {
        self.raw.light
    }
    pub fn activity(&self) -> Option<Activity> {
        self.raw.activity
    }

    pub fn as_raw(&self) -> &RawSensor {
        &self.raw
    }

    /// Copy of this sample with the normalized noise level set.
    pub fn with_noise_norm(&self, noise_norm: f64) -> Result<Self, ModelError> {
        let mut raw = self.raw.clone();
        raw.noise_norm = Some(noise_norm);
        SensorSample::new(raw)
    }
}

impl Timestamped for SensorSample {
    fn timestamp(&self) -> Timestamp {
        self.raw.t
    }
}

impl TryFrom<RawSensor> for SensorSample {
    type Error = ModelError;

    fn try_from(raw: RawSensor) -> Result<Self, Self::Error> {
        SensorSample::new(raw)
    }
}

impl From<SensorSample> for RawSensor {
    fn from(s: SensorSample) -> Self {
        s.raw
    }
}

/// A parsed input row of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum RawRecord {
    Location(RawLocation),
    Sensor(RawSensor),
}

/// A validated sample of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Location(LocationSample),
    Sensor(SensorSample),
}

/// Validates a parsed row into a typed sample.
pub fn validate_sample(record: RawRecord) -> Result<Sample, ModelError> {
    match record {
        RawRecord::Location(r) => LocationSample::try_from(r).map(Sample::Location),
        RawRecord::Sensor(r) => SensorSample::try_from(r).map(Sample::Sensor),
    }
}

/// Inclusive index range `[first, last]` into a location series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberRange {
    pub first: usize,
    pub last: usize,
}

impl MemberRange {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &MemberRange) -> bool {
        self.first <= other.last && other.first <= self.last
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawStayPoint {
    centroid_lat: f64,
    centroid_lon: f64,
    t_arrive: Timestamp,
    t_depart: Timestamp,
    mean_accuracy: f64,
    member_range: MemberRange,
}

/// A dwell: a run of consecutive samples that stayed within a small area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStayPoint", into = "RawStayPoint")]
pub struct StayPoint {
    centroid_lat: f64,
    centroid_lon: f64,
    t_arrive: Timestamp,
    t_depart: Timestamp,
    mean_accuracy: f64,
    member_range: MemberRange,
}

impl StayPoint {
    pub fn new(
        centroid_lat: f64,
        centroid_lon: f64,
        t_arrive: Timestamp,
        t_depart: Timestamp,
        mean_accuracy: f64,
        member_range: MemberRange,
    ) -> Result<Self, ModelError> {
        check_lat_lon(centroid_lat, centroid_lon)?;
        check_accuracy(mean_accuracy)?;
        if t_depart < t_arrive {
            return Err(ModelError::DepartBeforeArrive);
        }
        if member_range.last < member_range.first {
            return Err(ModelError::EmptyMembers);
        }
        Ok(Self {
            centroid_lat,
            centroid_lon,
            t_arrive,
            t_depart,
            mean_accuracy,
            member_range,
        })
    }

    /// Aggregates `samples[first..=last]`: componentwise mean position, mean
    /// accuracy, first and last timestamps.
    pub fn from_members(
        samples: &[LocationSample],
        first: usize,
        last: usize,
    ) -> Result<Self, ModelError> {
        if first > last || last >= samples.len() {
            return Err(ModelError::EmptyMembers);
        }
        let members = &samples[first..=last];
        let n = members.len() as f64;
        let (mut lat, mut lon, mut acc) = (0.0, 0.0, 0.0);
        for s in members {
            lat += s.lat;
            lon += s.lon;
            acc += s.accuracy;
        }
        StayPoint::new(
            lat / n,
            lon / n,
            members[0].t,
            members[members.len() - 1].t,
            acc / n,
            MemberRange { first, last },
        )
    }

    pub fn centroid_lat(&self) -> f64 {
        self.centroid_lat
    }
    pub fn centroid_lon(&self) -> f64 {
        self.centroid_lon
    }
    pub fn t_arrive(&self) -> Timestamp {
        self.t_arrive
    }
    pub fn t_depart(&self) -> Timestamp {
        self.t_depart
    }
    pub fn duration(&self) -> i64 {
        self.t_depart - self.t_arrive
    }
    pub fn mean_accuracy(&self) -> f64 {
        self.mean_accuracy
    }
    pub fn member_range(&self) -> MemberRange {
        self.member_range
    }
}

impl TryFrom<RawStayPoint> for StayPoint {
    type Error = ModelError;

    fn try_from(r: RawStayPoint) -> Result<Self, Self::Error> {
        StayPoint::new(
            r.centroid_lat,
            r.centroid_lon,
            r.t_arrive,
            r.t_depart,
            r.mean_accuracy,
            r.member_range,
        )
    }
}

impl From<StayPoint> for RawStayPoint {
    fn from(s: StayPoint) -> Self {
        RawStayPoint {
            centroid_lat: s.centroid_lat,
            centroid_lon: s.centroid_lon,
            t_arrive: s.t_arrive,
            t_depart: s.t_depart,
            mean_accuracy: s.mean_accuracy,
            member_range: s.member_range,
        }
    }
}

/// A group of stay points judged to be the same place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiCluster {
    /// 1-based, assigned in order of earliest member arrival.
    pub cluster_id: u32,
    /// Indices into the stay-point list the cluster was built from, ascending.
    pub members: Vec<usize>,
    pub centroid_lat: f64,
    pub centroid_lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub cluster_id: u32,
    pub t_arrive: Timestamp,
    pub t_depart: Timestamp,
}

/// A user's time-ordered POI visits.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub visits: Vec<Visit>,
}

/// Environment categories, coded 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EnvCode {
    Indoor = 1,
    Outdoor = 2,
    Private = 3,
    Public = 4,
}

impl EnvCode {
    pub const ALL: [EnvCode; 4] = [
        EnvCode::Indoor,
        EnvCode::Outdoor,
        EnvCode::Private,
        EnvCode::Public,
    ];

    pub fn index(self) -> usize {
        self as usize - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IoLabel {
    Indoor,
    Outdoor,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PpLabel {
    Private,
    Public,
    Unknown,
}

impl IoLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            IoLabel::Indoor => "indoor",
            IoLabel::Outdoor => "outdoor",
            IoLabel::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [IoLabel::Indoor, IoLabel::Outdoor, IoLabel::Unknown]
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

impl PpLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PpLabel::Private => "private",
            PpLabel::Public => "public",
            PpLabel::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [PpLabel::Private, PpLabel::Public, PpLabel::Unknown]
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

/// Confidence percentages for one POI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvReport {
    pub poi_cluster_id: u32,
    pub n_slots: usize,
    /// `p[c.index()]` is the confidence for `c` in percent, `None` when no
    /// slot produced a value for that code.
    pub p: [Option<f64>; 4],
    /// Percent of slots with no usable data on either axis.
    pub p0: f64,
    /// Percent of slots with no GPS accuracy (indoor/outdoor axis).
    pub p0_io: f64,
    /// Percent of slots with no normalized noise (private/public axis).
    pub p0_pp: f64,
    pub io_label: IoLabel,
    pub pp_label: PpLabel,
    /// Both indoor and outdoor present but closer than the warning margin.
    pub io_low_confidence: bool,
    pub pp_low_confidence: bool,
}

impl EnvReport {
    pub fn confidence(&self, code: EnvCode) -> Option<f64> {
        self.p[code.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    NonPositive(&'static str),
    MinPtsZero,
    WindowNotSlotMultiple,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::NonPositive(k) => write!(f, "{k} must be strictly positive"),
            ConfigError::MinPtsZero => f.write_str("min_pts must be at least 1"),
            ConfigError::WindowNotSlotMultiple => {
                f.write_str("noise_window must be a multiple of slot_len")
            }
        }
    }
}

impl core::error::Error for ConfigError {}

/// Every threshold used by the pipeline. Distances in meters, durations in
/// seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Minimum stay duration; a stay must last strictly longer.
    pub theta_t_min_stay: i64,
    /// Largest tolerated gap between consecutive samples inside a stay.
    pub theta_t_gap: i64,
    /// Largest tolerated jump between consecutive samples inside a stay.
    pub theta_d_valid: f64,
    /// Cap on the accuracy-derived reachability radius.
    pub theta_l_eps_cap: f64,
    /// GPS accuracy threshold separating indoor from outdoor.
    pub th_g: f64,
    /// Normalized noise threshold separating private from public.
    pub th_n: f64,
    /// Light level above which a slot counts as bright.
    pub th_l: f64,
    pub slot_len: i64,
    pub earth_radius: f64,
    /// Percentage-point margin under which a label is flagged low confidence.
    pub label_margin_warn: f64,
    /// DBSCAN neighborhood size. 1 treats every stay point as a core point.
    pub min_pts: usize,
    /// Length of the history used to fit the noise normalizer.
    pub noise_window: i64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            theta_t_min_stay: 1800,
            theta_t_gap: 1200,
            theta_d_valid: 200.0,
            theta_l_eps_cap: 200.0,
            th_g: 30.0,
            th_n: 5.0,
            th_l: 1000.0,
            slot_len: 300,
            earth_radius: 6_371_000.0,
            label_margin_warn: 10.0,
            min_pts: 1,
            noise_window: 30 * 24 * 3600,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ints = [
            ("theta_t_min_stay", self.theta_t_min_stay),
            ("theta_t_gap", self.theta_t_gap),
            ("slot_len", self.slot_len),
            ("noise_window", self.noise_window),
        ];
        for (k, v) in ints {
            if v <= 0 {
                return Err(ConfigError::NonPositive(k));
            }
        }
        let floats = [
            ("theta_d_valid", self.theta_d_valid),
            ("theta_l_eps_cap", self.theta_l_eps_cap),
            ("th_g", self.th_g),
            ("th_n", self.th_n),
            ("th_l", self.th_l),
            ("earth_radius", self.earth_radius),
            ("label_margin_warn", self.label_margin_warn),
        ];
        for (k, v) in floats {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::NonPositive(k));
            }
        }
        if self.min_pts == 0 {
            return Err(ConfigError::MinPtsZero);
        }
        if self.noise_window % self.slot_len != 0 {
            return Err(ConfigError::WindowNotSlotMultiple);
        }
        Ok(())
    }
}
