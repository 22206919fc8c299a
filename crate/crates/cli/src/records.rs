//! Delimited text formats for samples, stay points, trajectories and
//! environment reports.
//!
//! Input files carry a header row. Location files need `user_id, t, lat,
//! lon, accuracy`; sensor files need `user_id, t` and may carry any of
//! `velocity, accuracy, noise_raw, noise_norm, battery_charging, light,
//! activity`. Empty fields are missing values.

use std::collections::HashMap;
use std::path::Path;

use poi_core::model::{ModelError, RawLocation, RawRecord, RawSensor, Sample};
use poi_core::{Activity, EnvReport, LocationSample, SensorSample, StayPoint, Visit};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A row that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    pub file: String,
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Loaded<T> {
    /// Data rows seen, accepted or not.
    pub rows: usize,
    pub samples: Vec<T>,
    pub rejects: Vec<Reject>,
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

struct Columns(HashMap<String, usize>);

impl Columns {
    fn get<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.0
            .get(name)
            .and_then(|&i| rec.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }
}

fn parse_f64(field: &str, v: Option<&str>) -> Result<Option<f64>, String> {
    v.map(|s| {
        s.parse::<f64>()
            .map_err(|_| format!("{field}: not a number: {s:?}"))
    })
    .transpose()
}

fn parse_time(v: Option<&str>) -> Result<i64, String> {
    let s = v.ok_or("t: missing")?;
    if let Ok(t) = s.parse::<i64>() {
        return Ok(t);
    }
    // Sub-second precision is dropped.
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() => Ok(t.floor() as i64),
        _ => Err(format!("t: not a timestamp: {s:?}")),
    }
}

fn parse_flag(v: Option<&str>) -> Result<Option<bool>, String> {
    match v.map(str::to_ascii_lowercase).as_deref() {
        None => Ok(None),
        Some("1" | "true") => Ok(Some(true)),
        Some("0" | "false") => Ok(Some(false)),
        Some(other) => Err(format!("battery_charging: expected 0/1, got {other:?}")),
    }
}

fn required<'r>(cols: &Columns, rec: &'r csv::StringRecord, name: &str) -> Result<&'r str, String> {
    cols.get(rec, name)
        .ok_or_else(|| format!("{name}: missing"))
}

fn parse_location_row(cols: &Columns, rec: &csv::StringRecord) -> Result<RawRecord, String> {
    let num = |name: &str| -> Result<f64, String> {
        parse_f64(name, Some(required(cols, rec, name)?)).map(|v| v.unwrap_or(f64::NAN))
    };
    Ok(RawRecord::Location(RawLocation {
        user_id: required(cols, rec, "user_id")?.to_string(),
        t: parse_time(cols.get(rec, "t"))?,
        lat: num("lat")?,
        lon: num("lon")?,
        accuracy: num("accuracy")?,
    }))
}

fn parse_sensor_row(cols: &Columns, rec: &csv::StringRecord) -> Result<RawRecord, String> {
    let opt = |name: &str| parse_f64(name, cols.get(rec, name));
    let activity = match cols.get(rec, "activity") {
        None => None,
        Some(s) => Some(Activity::parse(s).ok_or_else(|| format!("activity: unknown {s:?}"))?),
    };
    Ok(RawRecord::Sensor(RawSensor {
        user_id: required(cols, rec, "user_id")?.to_string(),
        t: parse_time(cols.get(rec, "t"))?,
        velocity: opt("velocity")?,
        accuracy: opt("accuracy")?,
        noise_raw: opt("noise_raw")?,
        noise_norm: opt("noise_norm")?,
        battery_charging: parse_flag(cols.get(rec, "battery_charging"))?,
        light: opt("light")?,
        activity,
    }))
}

fn read_rows<T>(
    path: &Path,
    required_cols: &[&str],
    parse: impl Fn(&Columns, &csv::StringRecord) -> Result<RawRecord, String>,
    pick: impl Fn(Sample) -> Option<T>,
) -> Result<Loaded<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(Error::csv(path))?;
    let headers = rdr.headers().map_err(Error::csv(path))?.clone();
    let cols = Columns(
        headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_ascii_lowercase(), i))
            .collect(),
    );
    for c in required_cols {
        if !cols.0.contains_key(*c) {
            return Err(Error::Input(format!(
                "{}: missing column {c:?}",
                path.display()
            )));
        }
    }
    let file = file_label(path);
    let mut out = Loaded {
        rows: 0,
        samples: Vec::new(),
        rejects: Vec::new(),
    };
    for rec in rdr.records() {
        out.rows += 1;
        let (line, outcome) = match rec {
            Err(e) => (e.position().map_or(0, |p| p.line()), Err(e.to_string())),
            Ok(rec) => (
                rec.position().map_or(0, |p| p.line()),
                parse(&cols, &rec).and_then(|raw| {
                    poi_core::model::validate_sample(raw).map_err(|e: ModelError| e.to_string())
                }),
            ),
        };
        match outcome {
            Ok(sample) => out.samples.extend(pick(sample)),
            Err(reason) => out.rejects.push(Reject {
                file: file.clone(),
                line,
                reason,
            }),
        }
    }
    Ok(out)
}

pub fn read_locations(path: &Path) -> Result<Loaded<LocationSample>> {
    read_rows(
        path,
        &["user_id", "t", "lat", "lon", "accuracy"],
        parse_location_row,
        |s| match s {
            Sample::Location(l) => Some(l),
            Sample::Sensor(_) => None,
        },
    )
}

pub fn read_sensors(path: &Path) -> Result<Loaded<SensorSample>> {
    read_rows(path, &["user_id", "t"], parse_sensor_row, |s| match s {
        Sample::Sensor(s) => Some(s),
        Sample::Location(_) => None,
    })
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(Error::csv(path))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_locations(path: &Path, samples: &[LocationSample]) -> Result<()> {
    let mut w = writer(path)?;
    let e = |r: csv::Result<()>| r.map_err(Error::csv(path));
    e(w.write_record(["user_id", "t", "lat", "lon", "accuracy"]))?;
    for s in samples {
        e(w.write_record([
            s.user_id().to_string(),
            s.t().to_string(),
            s.lat().to_string(),
            s.lon().to_string(),
            s.accuracy().to_string(),
        ]))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn write_sensors(path: &Path, samples: &[SensorSample]) -> Result<()> {
    let mut w = writer(path)?;
    let e = |r: csv::Result<()>| r.map_err(Error::csv(path));
    e(w.write_record([
        "user_id",
        "t",
        "velocity",
        "accuracy",
        "noise_raw",
        "noise_norm",
        "battery_charging",
        "light",
        "activity",
    ]))?;
    for s in samples {
        e(w.write_record([
            s.user_id().to_string(),
            s.t().to_string(),
            fmt_opt(s.velocity()),
            fmt_opt(s.accuracy()),
            fmt_opt(s.noise_raw()),
            fmt_opt(s.noise_norm()),
            s.battery_charging()
                .map(|b| if b { "1" } else { "0" }.to_string())
                .unwrap_or_default(),
            fmt_opt(s.light()),
            s.activity()
                .map(|a| a.as_str().to_string())
                .unwrap_or_default(),
        ]))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn write_rejects(path: &Path, rejects: &[Reject]) -> Result<()> {
    write_serde(path, rejects)
}

fn write_serde<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r).map_err(Error::csv(path))?;
    }
    w.flush().map_err(Error::io(path))
}

fn read_serde<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(Error::csv(path))?;
    rdr.deserialize()
        .collect::<csv::Result<Vec<T>>>()
        .map_err(Error::csv(path))
}

/// One stay point, optionally labeled with its cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayPointRow {
    pub user_id: String,
    pub stay_index: usize,
    pub cluster_id: Option<u32>,
    pub centroid_lat: f64,
    pub centroid_lon: f64,
    pub t_arrive: i64,
    pub t_depart: i64,
    pub mean_accuracy: f64,
    pub first_member: usize,
    pub last_member: usize,
}

impl StayPointRow {
    pub fn new(user_id: &str, stay_index: usize, sp: &StayPoint, cluster_id: Option<u32>) -> Self {
        Self {
            user_id: user_id.to_string(),
            stay_index,
            cluster_id,
            centroid_lat: sp.centroid_lat(),
            centroid_lon: sp.centroid_lon(),
            t_arrive: sp.t_arrive(),
            t_depart: sp.t_depart(),
            mean_accuracy: sp.mean_accuracy(),
            first_member: sp.member_range().first,
            last_member: sp.member_range().last,
        }
    }

    pub fn to_stay_point(&self) -> Result<StayPoint> {
        StayPoint::new(
            self.centroid_lat,
            self.centroid_lon,
            self.t_arrive,
            self.t_depart,
            self.mean_accuracy,
            poi_core::model::MemberRange {
                first: self.first_member,
                last: self.last_member,
            },
        )
        .map_err(|e| {
            Error::Input(format!(
                "stay point {} of {}: {e}",
                self.stay_index, self.user_id
            ))
        })
    }
}

pub fn write_stay_points(path: &Path, rows: &[StayPointRow]) -> Result<()> {
    write_serde(path, rows)
}

pub fn read_stay_points(path: &Path) -> Result<Vec<StayPointRow>> {
    read_serde(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitRow {
    pub user_id: String,
    pub cluster_id: u32,
    pub t_arrive: i64,
    pub t_depart: i64,
}

impl VisitRow {
    pub fn new(user_id: &str, v: &Visit) -> Self {
        Self {
            user_id: user_id.to_string(),
            cluster_id: v.cluster_id,
            t_arrive: v.t_arrive,
            t_depart: v.t_depart,
        }
    }

    pub fn visit(&self) -> Visit {
        Visit {
            cluster_id: self.cluster_id,
            t_arrive: self.t_arrive,
            t_depart: self.t_depart,
        }
    }
}

pub fn write_trajectory(path: &Path, rows: &[VisitRow]) -> Result<()> {
    write_serde(path, rows)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<VisitRow>> {
    read_serde(path)
}

/// Renders a confidence percentage, `-` when absent.
pub fn fmt_percent(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.2}"),
        None => "-".to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvReportRow {
    pub user_id: String,
    pub cluster_id: u32,
    pub n_slots: usize,
    pub p1: String,
    pub p2: String,
    pub p3: String,
    pub p4: String,
    pub p0: String,
    pub p0_io: String,
    pub p0_pp: String,
    pub io_label: String,
    pub pp_label: String,
    pub io_low_confidence: bool,
    pub pp_low_confidence: bool,
}

impl EnvReportRow {
    pub fn new(user_id: &str, r: &EnvReport) -> Self {
        Self {
            user_id: user_id.to_string(),
            cluster_id: r.poi_cluster_id,
            n_slots: r.n_slots,
            p1: fmt_percent(r.p[0]),
            p2: fmt_percent(r.p[1]),
            p3: fmt_percent(r.p[2]),
            p4: fmt_percent(r.p[3]),
            p0: fmt_percent(Some(r.p0)),
            p0_io: fmt_percent(Some(r.p0_io)),
            p0_pp: fmt_percent(Some(r.p0_pp)),
            io_label: r.io_label.as_str().to_string(),
            pp_label: r.pp_label.as_str().to_string(),
            io_low_confidence: r.io_low_confidence,
            pp_low_confidence: r.pp_low_confidence,
        }
    }
}

pub fn write_env_reports(path: &Path, rows: &[EnvReportRow]) -> Result<()> {
    write_serde(path, rows)
}

pub fn read_env_reports(path: &Path) -> Result<Vec<EnvReportRow>> {
    read_serde(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn location_rows_and_rejects() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "loc.csv",
            "user_id,t,lat,lon,accuracy\n\
             u1,1000,1.3521,103.8198,10\n\
             u1,1300.9,1.3521,103.8198,12\n\
             u1,1600,95.0,103.8,10\n\
             u1,1900,1.35,103.8,0\n\
             u1,2200,abc,103.8,5\n\
             u1,,1.35,103.8,5\n",
        );
        let l = read_locations(&p).unwrap();
        assert_eq!(l.rows, 6);
        assert_eq!(l.samples.len(), 2);
        assert_eq!(l.samples[1].t(), 1300);
        let reasons: Vec<_> = l
            .rejects
            .iter()
            .map(|r| (r.line, r.reason.as_str()))
            .collect();
        assert_eq!(reasons[0].0, 4);
        assert!(reasons[0].1.starts_with("latitude out of range"));
        assert!(reasons[1].1.starts_with("accuracy must be positive"));
        assert!(reasons[2].1.starts_with("lat: not a number"));
        assert_eq!(reasons[3], (7, "t: missing"));
        assert_eq!(l.rejects[0].file, "loc.csv");
    }

    #[test]
    fn missing_column_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "loc.csv", "user_id,t,lat,lon\nu,1,1,1\n");
        assert!(matches!(read_locations(&p), Err(Error::Input(_))));
        assert!(read_locations(&dir.path().join("nope.csv")).is_err());
    }

    #[test]
    fn sensor_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "sen.csv",
            "user_id,t,velocity,accuracy,noise_raw,battery_charging,light,activity\n\
             u1,0,0,12,40.5,1,300,Still\n\
             u1,300,,,,,,\n\
             u1,600,1,5,30,maybe,,\n\
             u1,900,1,5,30,0,,running\n",
        );
        let s = read_sensors(&p).unwrap();
        assert_eq!(s.samples.len(), 2);
        assert_eq!(s.rejects.len(), 2);
        assert_eq!(s.samples[0].battery_charging(), Some(true));
        assert_eq!(s.samples[0].activity(), Some(Activity::Still));
        assert_eq!(s.samples[1].light(), None);

        let out = dir.path().join("out.csv");
        write_sensors(&out, &s.samples).unwrap();
        let back = read_sensors(&out).unwrap();
        assert_eq!(back.samples, s.samples);
    }

    #[test]
    fn percent_rendering() {
        assert_eq!(fmt_percent(Some(73.123)), "73.12");
        assert_eq!(fmt_percent(None), "-");
    }
}
