//! Comparing detected POIs against synthetic ground truth.

use std::path::Path;

use poi_core::geo::{haversine_distance, GeoPoint};
use poi_core::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geojson::{self, FeatureCollection};
use crate::pipeline::{CLUSTERS_FILE, POOLED, TRAJECTORY_FILE};
use crate::records::{self, VisitRow};
use crate::synth::GroundTruth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub match_radius: f64,
    pub detected: usize,
    pub truth: usize,
    pub matched: usize,
    /// Matched over detected; 1 when nothing was detected.
    pub precision: f64,
    /// Matched over ground truth; 1 when there is no ground truth.
    pub recall: f64,
    /// Share of matched POIs whose label agrees; absent without matches.
    pub io_accuracy: Option<f64>,
    pub pp_accuracy: Option<f64>,
    /// Seconds of true dwell covered by the matched detection's visits,
    /// over all true dwell seconds.
    pub visit_overlap: Option<f64>,
    /// `(detected cluster id, truth POI index, meters)` per match.
    pub matches: Vec<(u32, usize, f64)>,
}

/// A detection counts when its centroid lies within this many meters.
pub fn match_radius(cfg: &PipelineConfig) -> f64 {
    (2.0 * cfg.theta_l_eps_cap).max(400.0)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

fn overlap(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0)
}

/// Greedy one-to-one matching, closest pairs first.
pub fn score(
    fc: &FeatureCollection,
    visits: &[VisitRow],
    truth: &GroundTruth,
    cfg: &PipelineConfig,
) -> Metrics {
    let radius = match_radius(cfg);
    let detected: Vec<_> = fc
        .features
        .iter()
        .filter(|f| f.properties.user_id == truth.user_id || f.properties.user_id == POOLED)
        .collect();

    let mut pairs = Vec::new();
    for (i, f) in detected.iter().enumerate() {
        for (j, t) in truth.pois.iter().enumerate() {
            let d = haversine_distance(
                GeoPoint {
                    lat: f.lat(),
                    lon: f.lon(),
                },
                GeoPoint {
                    lat: t.lat,
                    lon: t.lon,
                },
                cfg.earth_radius,
            );
            if d <= radius {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_d = vec![false; detected.len()];
    let mut used_t = vec![false; truth.pois.len()];
    let mut matches = Vec::new();
    for (d, i, j) in pairs {
        if !used_d[i] && !used_t[j] {
            used_d[i] = true;
            used_t[j] = true;
            matches.push((i, j, d));
        }
    }
    matches.sort_by_key(|m| m.1);

    let n = matches.len();
    let agree = |f: &dyn Fn(usize, usize) -> bool| {
        (n > 0).then(|| matches.iter().filter(|m| f(m.0, m.1)).count() as f64 / n as f64)
    };
    let io_accuracy = agree(&|i, j| detected[i].properties.io_label == truth.pois[j].io.as_str());
    let pp_accuracy = agree(&|i, j| detected[i].properties.pp_label == truth.pois[j].pp.as_str());

    let total: i64 = truth
        .pois
        .iter()
        .flat_map(|p| &p.visits)
        .map(|v| v.t_depart - v.t_arrive)
        .sum();
    let covered: i64 = matches
        .iter()
        .map(|&(i, j, _)| {
            let id = detected[i].properties.cluster_id;
            visits
                .iter()
                .filter(|v| v.user_id == truth.user_id && v.cluster_id == id)
                .flat_map(|v| {
                    truth.pois[j]
                        .visits
                        .iter()
                        .map(move |t| overlap((v.t_arrive, v.t_depart), (t.t_arrive, t.t_depart)))
                })
                .sum::<i64>()
        })
        .sum();

    Metrics {
        match_radius: radius,
        detected: detected.len(),
        truth: truth.pois.len(),
        matched: n,
        precision: ratio(n, detected.len()),
        recall: ratio(n, truth.pois.len()),
        io_accuracy,
        pp_accuracy,
        visit_overlap: (total > 0).then(|| covered as f64 / total as f64),
        matches: matches
            .iter()
            .map(|&(i, j, d)| (detected[i].properties.cluster_id, truth.pois[j].poi, d))
            .collect(),
    }
}

/// Scores the artifacts of a run directory.
pub fn score_run(run_dir: &Path, truth: &GroundTruth, cfg: &PipelineConfig) -> Result<Metrics> {
    let fc = geojson::read(&run_dir.join(CLUSTERS_FILE))?;
    let visits = records::read_trajectory(&run_dir.join(TRAJECTORY_FILE))?;
    Ok(score(&fc, &visits, truth, cfg))
}
