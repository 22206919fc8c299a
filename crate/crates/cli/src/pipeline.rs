//! Stage functions shared by the subcommands, and the end-to-end run.
//!
//! Users are processed independently in sorted order. With `pool_users`
//! the stay points of all users are clustered together and cluster ids are
//! global; reports then aggregate slots across users under the scope `*`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use poi_core::cluster::{dbscan_poi, hierarchical_poi, kmeans_poi};
use poi_core::prep::{apply_noise_normalizer, denoise, fit_noise_normalizer, TimeWindow};
use poi_core::sfec::{
    estimate_labels, poi_confidence, poi_slots, slot_confidences, SlotConfidence,
};
use poi_core::staypoint::{detect_baseline, detect_vspd};
use poi_core::trajectory::build_trajectory;
use poi_core::{
    EnvReport, LocationSample, PipelineConfig, PoiCluster, SensorSample, StayPoint, Trajectory,
    Visit,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geojson::{self, Feature, FeatureCollection, PoiProperties};
use crate::records::{self, EnvReportRow, Reject, StayPointRow, VisitRow};

/// Scope name used for pooled clusters.
pub const POOLED: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dbscan,
    Kmeans,
    Hierarchical,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dbscan => "dbscan",
            Method::Kmeans => "kmeans",
            Method::Hierarchical => "hierarchical",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Method::Dbscan, Method::Kmeans, Method::Hierarchical]
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown clustering method {s:?} (dbscan, kmeans, hierarchical)")
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub method: Method,
    /// Apply the dropout validity check when detecting stay points.
    pub validate: bool,
    pub pool_users: bool,
    pub k_max: usize,
    /// Single-linkage cut in meters; defaults to the reachability cap.
    pub cut_distance: Option<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            method: Method::Dbscan,
            validate: true,
            pool_users: false,
            k_max: 10,
            cut_distance: None,
        }
    }
}

impl PipelineOptions {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 2 {
            return Err(Error::Config("k_max must be at least 2".into()));
        }
        if let Some(c) = self.cut_distance {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::Config(
                    "cut distance must be a non-negative number".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Deduplicated, time-ordered streams per user. Sensor noise is normalized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Prepared {
    pub locations: BTreeMap<String, Vec<LocationSample>>,
    pub sensors: BTreeMap<String, Vec<SensorSample>>,
}

impl Prepared {
    pub fn location_count(&self) -> usize {
        self.locations.values().map(Vec::len).sum()
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.values().map(Vec::len).sum()
    }

    pub fn sensors_of(&self, user: &str) -> &[SensorSample] {
        self.sensors.get(user).map_or(&[], Vec::as_slice)
    }

    pub fn locations_of(&self, user: &str) -> &[LocationSample] {
        self.locations.get(user).map_or(&[], Vec::as_slice)
    }
}

fn by_user<T, F: Fn(&T) -> &str>(rows: Vec<T>, user: F) -> BTreeMap<String, Vec<T>> {
    let mut out: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for r in rows {
        out.entry(user(&r).to_string()).or_default().push(r);
    }
    out
}

/// Fits the noise range over the first `noise_window` seconds of the
/// user's sensor stream. Streams without raw noise pass through unchanged.
pub fn normalize_user(sensors: &[SensorSample], cfg: &PipelineConfig) -> Vec<SensorSample> {
    let Some(start) = sensors.iter().map(SensorSample::t).min() else {
        return Vec::new();
    };
    let window = TimeWindow::new(start, start.saturating_add(cfg.noise_window));
    match fit_noise_normalizer(sensors, window) {
        Ok(norm) => apply_noise_normalizer(sensors, &norm),
        Err(_) => sensors.to_vec(),
    }
}

/// Splits by user, removes duplicate timestamps and normalizes noise.
pub fn preprocess(
    loc: Vec<LocationSample>,
    sen: Vec<SensorSample>,
    cfg: &PipelineConfig,
) -> Prepared {
    let locations = by_user(loc, |s| s.user_id())
        .into_iter()
        .map(|(u, v)| (u, denoise(v)))
        .collect();
    let sensors = by_user(sen, |s| s.user_id())
        .into_iter()
        .map(|(u, v)| {
            let v = denoise(v);
            let v = normalize_user(&v, cfg);
            (u, v)
        })
        .collect();
    Prepared { locations, sensors }
}

pub type UserStays = BTreeMap<String, Vec<StayPoint>>;

/// Cluster id of every stay point, per user; `None` when unclustered.
pub type UserLabels = BTreeMap<String, Vec<Option<u32>>>;

pub fn detect_stay_points(prepared: &Prepared, cfg: &PipelineConfig, validate: bool) -> UserStays {
    prepared
        .locations
        .iter()
        .map(|(u, s)| {
            let sps = if validate {
                detect_vspd(s, cfg)
            } else {
                detect_baseline(s, cfg)
            };
            (u.clone(), sps)
        })
        .collect()
}

/// Dispatches to the chosen method. k-means needs at least three stay
/// points to compare two or more clusters; smaller inputs fall back to
/// merging only coincident points.
pub fn cluster_points(
    sps: &[StayPoint],
    cfg: &PipelineConfig,
    opts: &PipelineOptions,
) -> Result<Vec<PoiCluster>> {
    Ok(match opts.method {
        Method::Dbscan => dbscan_poi(sps, cfg),
        Method::Hierarchical => {
            let cut = opts.cut_distance.unwrap_or(cfg.theta_l_eps_cap);
            hierarchical_poi(sps, cut, cfg.earth_radius)
        }
        Method::Kmeans if sps.len() < 3 => hierarchical_poi(sps, 0.0, cfg.earth_radius),
        Method::Kmeans => kmeans_poi(sps, opts.k_max.min(sps.len() - 1))
            .map_err(|e| Error::Input(format!("k-means: {e}")))?,
    })
}

/// Clusters of one scope. `members[i]` names the user and per-user stay
/// index behind scope-local index `i`, which cluster member lists refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeClusters {
    pub scope: String,
    pub members: Vec<(String, usize)>,
    pub clusters: Vec<PoiCluster>,
}

pub fn cluster_users(
    stays: &UserStays,
    cfg: &PipelineConfig,
    opts: &PipelineOptions,
) -> Result<Vec<ScopeClusters>> {
    let scope_of = |user: &str| {
        if opts.pool_users {
            POOLED.to_string()
        } else {
            user.to_string()
        }
    };
    type Pool = (Vec<(String, usize)>, Vec<StayPoint>);
    let mut scopes: BTreeMap<String, Pool> = BTreeMap::new();
    for (user, sps) in stays {
        let entry = scopes.entry(scope_of(user)).or_default();
        for (i, sp) in sps.iter().enumerate() {
            entry.0.push((user.clone(), i));
            entry.1.push(sp.clone());
        }
    }
    scopes
        .into_iter()
        .map(|(scope, (members, sps))| {
            let clusters = cluster_points(&sps, cfg, opts)?;
            Ok(ScopeClusters {
                scope,
                members,
                clusters,
            })
        })
        .collect()
}

/// Per-user cluster id for every stay point.
pub fn labels(stays: &UserStays, scopes: &[ScopeClusters]) -> UserLabels {
    let mut out: UserLabels = stays
        .iter()
        .map(|(u, s)| (u.clone(), vec![None; s.len()]))
        .collect();
    for sc in scopes {
        for c in &sc.clusters {
            for &m in &c.members {
                let (user, i) = &sc.members[m];
                out.get_mut(user).expect("member of a known user")[*i] = Some(c.cluster_id);
            }
        }
    }
    out
}

/// Builds each user's visit sequence from cluster labels.
pub fn trajectories(
    stays: &UserStays,
    labels: &UserLabels,
    cfg: &PipelineConfig,
) -> BTreeMap<String, Trajectory> {
    stays
        .iter()
        .map(|(user, sps)| {
            let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for (i, id) in labels.get(user).into_iter().flatten().enumerate() {
                if let Some(id) = id {
                    groups.entry(*id).or_default().push(i);
                }
            }
            // Only ids and members matter for the visit sequence.
            let clusters: Vec<PoiCluster> = groups
                .into_iter()
                .map(|(cluster_id, members)| PoiCluster {
                    cluster_id,
                    members,
                    centroid_lat: 0.0,
                    centroid_lon: 0.0,
                })
                .collect();
            (user.clone(), build_trajectory(sps, &clusters, cfg.slot_len))
        })
        .collect()
}

/// Environment reports keyed by scope. Pooled reports combine the slots
/// of every user that visited the cluster.
pub fn classify(
    trajectories: &BTreeMap<String, Trajectory>,
    prepared: &Prepared,
    cfg: &PipelineConfig,
    pool_users: bool,
) -> Vec<(String, EnvReport)> {
    let mut slots: BTreeMap<(String, u32), Vec<SlotConfidence>> = BTreeMap::new();
    for (user, traj) in trajectories {
        let ids: BTreeSet<u32> = traj.visits.iter().map(|v| v.cluster_id).collect();
        for id in ids {
            let visits: Vec<Visit> = traj
                .visits
                .iter()
                .copied()
                .filter(|v| v.cluster_id == id)
                .collect();
            let scope = if pool_users {
                POOLED.to_string()
            } else {
                user.clone()
            };
            let s = poi_slots(
                &visits,
                prepared.locations_of(user),
                prepared.sensors_of(user),
                cfg,
            );
            slots
                .entry((scope, id))
                .or_default()
                .extend(s.iter().map(|s| slot_confidences(s, cfg)));
        }
    }
    slots
        .into_iter()
        .filter_map(|((scope, id), s)| {
            let conf = poi_confidence(&s).ok()?;
            let labels = estimate_labels(&conf.p, cfg.label_margin_warn);
            Some((
                scope,
                EnvReport {
                    poi_cluster_id: id,
                    n_slots: conf.n_slots,
                    p: conf.p,
                    p0: conf.p0,
                    p0_io: conf.p0_io,
                    p0_pp: conf.p0_pp,
                    io_label: labels.io,
                    pp_label: labels.pp,
                    io_low_confidence: labels.io_low_confidence,
                    pp_low_confidence: labels.pp_low_confidence,
                },
            ))
        })
        .collect()
}

/// One GeoJSON point per cluster, labeled from its report when present.
pub fn features(
    stays: &UserStays,
    scopes: &[ScopeClusters],
    reports: &[(String, EnvReport)],
) -> FeatureCollection {
    let report: BTreeMap<(&str, u32), &EnvReport> = reports
        .iter()
        .map(|(s, r)| ((s.as_str(), r.poi_cluster_id), r))
        .collect();
    let mut out = Vec::new();
    for sc in scopes {
        for c in &sc.clusters {
            let sps: Vec<&StayPoint> = c
                .members
                .iter()
                .map(|&m| {
                    let (user, i) = &sc.members[m];
                    &stays[user][*i]
                })
                .collect();
            let r = report.get(&(sc.scope.as_str(), c.cluster_id));
            let props = PoiProperties {
                user_id: sc.scope.clone(),
                cluster_id: c.cluster_id,
                member_count: c.members.len(),
                first_arrive: sps.iter().map(|s| s.t_arrive()).min().unwrap_or_default(),
                last_depart: sps.iter().map(|s| s.t_depart()).max().unwrap_or_default(),
                io_label: r.map_or("unknown", |r| r.io_label.as_str()).into(),
                pp_label: r.map_or("unknown", |r| r.pp_label.as_str()).into(),
                p1: r.and_then(|r| r.p[0]),
                p2: r.and_then(|r| r.p[1]),
                p3: r.and_then(|r| r.p[2]),
                p4: r.and_then(|r| r.p[3]),
                p0: r.map(|r| r.p0),
            };
            out.push(Feature::point(c.centroid_lat, c.centroid_lon, props));
        }
    }
    FeatureCollection::new(out)
}

pub fn stay_point_rows(stays: &UserStays, labels: Option<&UserLabels>) -> Vec<StayPointRow> {
    let mut rows = Vec::new();
    for (user, sps) in stays {
        for (i, sp) in sps.iter().enumerate() {
            let id = labels.and_then(|l| l.get(user)).and_then(|l| l[i]);
            rows.push(StayPointRow::new(user, i, sp, id));
        }
    }
    rows
}

/// Groups stay-point rows back into per-user lists with their labels.
pub fn stays_from_rows(rows: &[StayPointRow]) -> Result<(UserStays, UserLabels)> {
    let mut ordered: BTreeMap<String, BTreeMap<usize, &StayPointRow>> = BTreeMap::new();
    for r in rows {
        if ordered
            .entry(r.user_id.clone())
            .or_default()
            .insert(r.stay_index, r)
            .is_some()
        {
            return Err(Error::Input(format!(
                "duplicate stay index {} for user {}",
                r.stay_index, r.user_id
            )));
        }
    }
    let mut stays = UserStays::new();
    let mut labels = BTreeMap::new();
    for (user, rows) in ordered {
        let sps = rows
            .values()
            .map(|r| r.to_stay_point())
            .collect::<Result<Vec<_>>>()?;
        labels.insert(user.clone(), rows.values().map(|r| r.cluster_id).collect());
        stays.insert(user, sps);
    }
    Ok((stays, labels))
}

pub fn visit_rows(trajectories: &BTreeMap<String, Trajectory>) -> Vec<VisitRow> {
    trajectories
        .iter()
        .flat_map(|(u, t)| t.visits.iter().map(move |v| VisitRow::new(u, v)))
        .collect()
}

pub fn trajectories_from_rows(rows: &[VisitRow]) -> BTreeMap<String, Trajectory> {
    let mut out: BTreeMap<String, Trajectory> = BTreeMap::new();
    for r in rows {
        out.entry(r.user_id.clone())
            .or_default()
            .visits
            .push(r.visit());
    }
    for t in out.values_mut() {
        t.visits
            .sort_by_key(|v| (v.t_arrive, v.t_depart, v.cluster_id));
    }
    out
}

/// Raw rows after validation, with their rejects.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub location_rows: usize,
    pub sensor_rows: usize,
    pub locations: Vec<LocationSample>,
    pub sensors: Vec<SensorSample>,
    pub rejects: Vec<Reject>,
}

/// Reads both input files. Fails when no location row survives
/// validation, or when a non-empty sensor file has no valid row.
pub fn load_inputs(location: &Path, sensors: Option<&Path>) -> Result<Inputs> {
    let loc = records::read_locations(location)?;
    let mut inputs = Inputs {
        location_rows: loc.rows,
        locations: loc.samples,
        rejects: loc.rejects,
        ..Inputs::default()
    };
    if inputs.locations.is_empty() {
        return Err(Error::Input(format!(
            "no usable location data in {}",
            location.display()
        )));
    }
    if let Some(path) = sensors {
        let sen = records::read_sensors(path)?;
        if sen.rows > 0 && sen.samples.is_empty() {
            return Err(Error::Input(format!(
                "no usable sensor data in {}",
                path.display()
            )));
        }
        inputs.sensor_rows = sen.rows;
        inputs.sensors = sen.samples;
        inputs.rejects.extend(sen.rejects);
    }
    Ok(inputs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

pub fn digest(path: &Path) -> Result<InputDigest> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    Ok(InputDigest {
        name: path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        ),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub location_rows: usize,
    pub raw_locations: usize,
    pub dedup_locations: usize,
    pub sensor_rows: usize,
    pub raw_sensors: usize,
    pub dedup_sensors: usize,
    pub rejected_rows: usize,
    pub users: usize,
    pub stay_points: usize,
    pub clusters: usize,
    pub pois_classified: usize,
}

impl Counts {
    /// Checks the ordering relations every run must satisfy.
    pub fn check(&self) -> std::result::Result<(), String> {
        let rel = [
            (
                "raw_locations <= location_rows",
                self.raw_locations <= self.location_rows,
            ),
            (
                "dedup_locations <= raw_locations",
                self.dedup_locations <= self.raw_locations,
            ),
            (
                "raw_sensors <= sensor_rows",
                self.raw_sensors <= self.sensor_rows,
            ),
            (
                "dedup_sensors <= raw_sensors",
                self.dedup_sensors <= self.raw_sensors,
            ),
            (
                "stay_points <= dedup_locations",
                self.stay_points <= self.dedup_locations,
            ),
            ("clusters <= stay_points", self.clusters <= self.stay_points),
            (
                "pois_classified <= clusters",
                self.pois_classified <= self.clusters,
            ),
        ];
        match rel.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(format!("manifest counts violate {name}")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub options: PipelineOptions,
    pub inputs: Vec<InputDigest>,
    pub counts: Counts,
}

/// Everything a run produces, before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub stay_points: Vec<StayPointRow>,
    pub clusters: FeatureCollection,
    pub visits: Vec<VisitRow>,
    pub reports: Vec<EnvReportRow>,
    pub counts: Counts,
}

/// All stages in order on already-loaded samples.
pub fn execute(
    locations: Vec<LocationSample>,
    sensors: Vec<SensorSample>,
    cfg: &PipelineConfig,
    opts: &PipelineOptions,
) -> Result<RunOutput> {
    let raw_locations = locations.len();
    let raw_sensors = sensors.len();
    let prepared = preprocess(locations, sensors, cfg);
    let stays = detect_stay_points(&prepared, cfg, opts.validate);
    let scopes = cluster_users(&stays, cfg, opts)?;
    let labels = labels(&stays, &scopes);
    let trajs = trajectories(&stays, &labels, cfg);
    let reports = classify(&trajs, &prepared, cfg, opts.pool_users);
    let clusters = features(&stays, &scopes, &reports);
    let counts = Counts {
        location_rows: raw_locations,
        raw_locations,
        dedup_locations: prepared.location_count(),
        sensor_rows: raw_sensors,
        raw_sensors,
        dedup_sensors: prepared.sensor_count(),
        rejected_rows: 0,
        users: prepared.locations.len(),
        stay_points: stays.values().map(Vec::len).sum(),
        clusters: clusters.features.len(),
        pois_classified: reports.len(),
    };
    Ok(RunOutput {
        stay_points: stay_point_rows(&stays, Some(&labels)),
        visits: visit_rows(&trajs),
        reports: reports
            .iter()
            .map(|(s, r)| EnvReportRow::new(s, r))
            .collect(),
        clusters,
        counts,
    })
}

pub const STAY_POINTS_FILE: &str = "stay_points.csv";
pub const CLUSTERS_FILE: &str = "poi_clusters.geojson";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORTS_FILE: &str = "env_reports.csv";
pub const REJECTS_FILE: &str = "rejects.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Reads the inputs, runs every stage and writes all artifacts to `out_dir`.
pub fn run_pipeline(
    location: &Path,
    sensors: &Path,
    cfg: &PipelineConfig,
    opts: &PipelineOptions,
    out_dir: &Path,
) -> Result<RunManifest> {
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    opts.validate()?;
    let inputs = load_inputs(location, Some(sensors))?;
    let digests = vec![digest(location)?, digest(sensors)?];
    let mut out = execute(inputs.locations, inputs.sensors, cfg, opts)?;
    out.counts.location_rows = inputs.location_rows;
    out.counts.sensor_rows = inputs.sensor_rows;
    out.counts.rejected_rows = inputs.rejects.len();
    out.counts.check().map_err(Error::Input)?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        options: opts.clone(),
        inputs: digests,
        counts: out.counts,
    };
    std::fs::create_dir_all(out_dir).map_err(Error::io(out_dir))?;
    records::write_stay_points(&out_dir.join(STAY_POINTS_FILE), &out.stay_points)?;
    geojson::write(&out_dir.join(CLUSTERS_FILE), &out.clusters)?;
    records::write_trajectory(&out_dir.join(TRAJECTORY_FILE), &out.visits)?;
    records::write_env_reports(&out_dir.join(REPORTS_FILE), &out.reports)?;
    records::write_rejects(&out_dir.join(REJECTS_FILE), &inputs.rejects)?;
    write_manifest(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(path: &Path, m: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(m).map_err(Error::json(path))?;
    std::fs::write(path, json + "\n").map_err(Error::io(path))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(Error::json(path))
}

/// Paths of the artifacts inside a run directory.
pub fn artifact_paths(dir: &Path) -> [PathBuf; 6] {
    [
        STAY_POINTS_FILE,
        CLUSTERS_FILE,
        TRAJECTORY_FILE,
        REPORTS_FILE,
        REJECTS_FILE,
        MANIFEST_FILE,
    ]
    .map(|f| dir.join(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{self, presets};

    fn run(sc: &synth::SynthScenario, opts: &PipelineOptions) -> RunOutput {
        let out = synth::generate(sc).unwrap();
        execute(out.location, out.sensors, &PipelineConfig::default(), opts).unwrap()
    }

    #[test]
    fn two_poi_scenario() {
        let out = run(&presets::two_poi(1), &PipelineOptions::default());
        assert_eq!(out.clusters.features.len(), 2);
        assert_eq!(out.visits.len(), 2);
        let p: Vec<_> = out
            .clusters
            .features
            .iter()
            .map(|f| (&f.properties.io_label, &f.properties.pp_label))
            .collect();
        assert_eq!(p[0], (&"indoor".to_string(), &"private".to_string()));
        assert_eq!(p[1], (&"outdoor".to_string(), &"public".to_string()));
        out.counts.check().unwrap();
    }

    #[test]
    fn duplicates_reduce_counts() {
        let out = run(&presets::tunnel(2), &PipelineOptions::default());
        assert!(out.counts.dedup_locations < out.counts.raw_locations);
        assert!(out.counts.dedup_sensors < out.counts.raw_sensors);
    }

    #[test]
    fn every_method_finds_the_places() {
        for method in [Method::Dbscan, Method::Hierarchical] {
            let opts = PipelineOptions {
                method,
                ..PipelineOptions::default()
            };
            let out = run(&presets::daily_routine(4, 10.0), &opts);
            assert_eq!(out.clusters.features.len(), 3, "{method}");
        }
    }

    #[test]
    fn kmeans_refines_the_places() {
        // Davies-Bouldin rewards splitting two near-identical stays into
        // zero-spread singletons, so k-means may over-split tiny inputs. Each
        // cluster must still sit on one true place.
        let sc = presets::daily_routine(4, 10.0);
        let opts = PipelineOptions {
            method: Method::Kmeans,
            ..PipelineOptions::default()
        };
        let out = run(&sc, &opts);
        assert!(out.clusters.features.len() >= 3);
        for f in &out.clusters.features {
            let near = sc.pois.iter().any(|p| {
                let d = poi_core::haversine_distance(
                    poi_core::GeoPoint {
                        lat: p.lat,
                        lon: p.lon,
                    },
                    poi_core::GeoPoint {
                        lat: f.lat(),
                        lon: f.lon(),
                    },
                    poi_core::geo::EARTH_RADIUS_M,
                );
                d < 50.0
            });
            assert!(
                near,
                "cluster {} is off every place",
                f.properties.cluster_id
            );
        }
    }

    #[test]
    fn pooling_merges_users() {
        let mut a = synth::generate(&presets::two_poi(1)).unwrap();
        let mut sc = presets::two_poi(2);
        sc.user_id = "other".into();
        let b = synth::generate(&sc).unwrap();
        a.location.extend(b.location);
        a.sensors.extend(b.sensors);
        let cfg = PipelineConfig::default();
        let split = execute(
            a.location.clone(),
            a.sensors.clone(),
            &cfg,
            &PipelineOptions::default(),
        )
        .unwrap();
        assert_eq!(split.clusters.features.len(), 4);
        let opts = PipelineOptions {
            pool_users: true,
            ..PipelineOptions::default()
        };
        let pooled = execute(a.location, a.sensors, &cfg, &opts).unwrap();
        assert_eq!(pooled.clusters.features.len(), 2);
        assert!(pooled
            .clusters
            .features
            .iter()
            .all(|f| f.properties.user_id == POOLED));
        assert_eq!(pooled.visits.len(), 4);
        assert_eq!(pooled.reports.len(), 2);
    }

    #[test]
    fn rows_round_trip_to_stays() {
        let out = run(
            &presets::daily_routine(5, 10.0),
            &PipelineOptions::default(),
        );
        let (stays, labels) = stays_from_rows(&out.stay_points).unwrap();
        assert_eq!(stay_point_rows(&stays, Some(&labels)), out.stay_points);
        let trajs = trajectories(&stays, &labels, &PipelineConfig::default());
        assert_eq!(visit_rows(&trajs), out.visits);
    }

    #[test]
    fn method_names() {
        assert_eq!("KMeans".parse::<Method>().unwrap(), Method::Kmeans);
        assert!("optics".parse::<Method>().is_err());
    }

    #[test]
    fn count_checks() {
        let c = Counts {
            raw_locations: 3,
            dedup_locations: 4,
            location_rows: 4,
            ..Counts::default()
        };
        assert!(c.check().unwrap_err().contains("dedup_locations"));
    }
}
