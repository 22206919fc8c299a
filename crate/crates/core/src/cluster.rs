//! Grouping stay points into POIs.
//!
//! [`dbscan_poi`] is the production path. Two stay points are neighbors when
//! their centroids are within the sum of their mean accuracies, capped at
//! `theta_l_eps_cap`. [`kmeans_poi`] and [`hierarchical_poi`] exist for
//! comparison runs.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::geo::{distance_deg, EARTH_RADIUS_M};
use crate::model::{PipelineConfig, PoiCluster, StayPoint};
use crate::staypoint::pair_eps;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClusterError {
    TooFewPoints(usize),
    InvalidK { k_max: usize, count: usize },
}

impl fmt::Display for ClusterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterError::TooFewPoints(n) => {
                write!(f, "k-means needs at least 2 stay points, got {n}")
            }
            ClusterError::InvalidK { k_max, count } => {
                write!(f, "k_max must be in 2..{count}, got {k_max}")
            }
        }
    }
}

impl core::error::Error for ClusterError {}

fn sp_distance(a: &StayPoint, b: &StayPoint, r: f64) -> f64 {
    distance_deg(
        a.centroid_lat(),
        a.centroid_lon(),
        b.centroid_lat(),
        b.centroid_lon(),
        r,
    )
}

/// Undirected neighbor graph over stay points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityGraph {
    pub node_count: usize,
    /// `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl ReachabilityGraph {
    pub fn build(stay_points: &[StayPoint], cfg: &PipelineConfig) -> Self {
        let mut edges = Vec::new();
        for i in 0..stay_points.len() {
            for j in i + 1..stay_points.len() {
                if reachable(&stay_points[i], &stay_points[j], cfg) {
                    edges.push((i, j));
                }
            }
        }
        Self {
            node_count: stay_points.len(),
            edges,
        }
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }
}

/// Centroid distance within the capped accuracy sum.
pub fn reachable(a: &StayPoint, b: &StayPoint, cfg: &PipelineConfig) -> bool {
    let eps = pair_eps(a.mean_accuracy(), b.mean_accuracy(), cfg.theta_l_eps_cap);
    sp_distance(a, b, cfg.earth_radius) <= eps
}

/// Turns index groups into clusters numbered 1..=K by earliest arrival.
fn label_groups(stay_points: &[StayPoint], mut groups: Vec<Vec<usize>>) -> Vec<PoiCluster> {
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.retain(|g| !g.is_empty());
    groups.sort_by_key(|g| {
        let first = g
            .iter()
            .map(|&i| (stay_points[i].t_arrive(), i))
            .min()
            .expect("nonempty group");
        first
    });
    groups
        .into_iter()
        .enumerate()
        .map(|(k, members)| {
            let n = members.len() as f64;
            let lat = members
                .iter()
                .map(|&i| stay_points[i].centroid_lat())
                .sum::<f64>()
                / n;
            let lon = members
                .iter()
                .map(|&i| stay_points[i].centroid_lon())
                .sum::<f64>()
                / n;
            PoiCluster {
                cluster_id: k as u32 + 1,
                members,
                centroid_lat: lat,
                centroid_lon: lon,
            }
        })
        .collect()
}

/// DBSCAN over the reachability graph.
///
/// With the default `min_pts = 1` every stay point is a core point and the
/// clusters are exactly the connected components of the graph. With larger
/// `min_pts`, points that end up as noise each form their own cluster so
/// that no stay point is dropped.
pub fn dbscan_poi(stay_points: &[StayPoint], cfg: &PipelineConfig) -> Vec<PoiCluster> {
    let n = stay_points.len();
    let adj = ReachabilityGraph::build(stay_points, cfg).adjacency();
    // Neighborhood includes the point itself.
    let is_core = |i: usize| adj[i].len() + 1 >= cfg.min_pts;

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if label[seed].is_some() || !is_core(seed) {
            continue;
        }
        let id = groups.len();
        let mut members = vec![seed];
        label[seed] = Some(id);
        let mut queue = VecDeque::from([seed]);
        while let Some(p) = queue.pop_front() {
            if !is_core(p) {
                continue;
            }
            for &q in &adj[p] {
                if label[q].is_none() {
                    label[q] = Some(id);
                    members.push(q);
                    queue.push_back(q);
                }
            }
        }
        groups.push(members);
    }
    for (i, l) in label.iter().enumerate() {
        if l.is_none() {
            groups.push(vec![i]);
        }
    }
    label_groups(stay_points, groups)
}

/// Lloyd's algorithm on `(lat, lon)` with farthest-point seeding from the
/// first point. Returns one cluster index per point.
pub fn kmeans(points: &[(f64, f64)], k: usize) -> Vec<usize> {
    let d2 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1);
    let mut centers = vec![points[0]];
    while centers.len() < k {
        let mut best = (0, -1.0);
        for (i, &p) in points.iter().enumerate() {
            let m = centers
                .iter()
                .map(|&c| d2(p, c))
                .fold(f64::INFINITY, f64::min);
            if m > best.1 {
                best = (i, m);
            }
        }
        centers.push(points[best.0]);
    }

    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (i, &p) in points.iter().enumerate() {
            let mut best = (0, f64::INFINITY);
            for (c, &center) in centers.iter().enumerate() {
                let d = d2(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            if assign[i] != best.0 {
                assign[i] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (i, &p) in points.iter().enumerate() {
            let s = &mut sums[assign[i]];
            s.0 += p.0;
            s.1 += p.1;
            s.2 += 1;
        }
        for (c, s) in sums.iter().enumerate() {
            // An emptied cluster keeps its previous center.
            if s.2 > 0 {
                centers[c] = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
        }
    }
    assign
}

/// Davies-Bouldin index of a partition, with scatter and separation measured
/// as great-circle distances. Lower is better; coincident centroids give
/// infinity.
pub fn davies_bouldin(points: &[(f64, f64)], groups: &[Vec<usize>]) -> f64 {
    let r = EARTH_RADIUS_M;
    let centroids: Vec<(f64, f64)> = groups
        .iter()
        .map(|g| {
            let n = g.len() as f64;
            (
                g.iter().map(|&i| points[i].0).sum::<f64>() / n,
                g.iter().map(|&i| points[i].1).sum::<f64>() / n,
            )
        })
        .collect();
    let scatter: Vec<f64> = groups
        .iter()
        .zip(&centroids)
        .map(|(g, c)| {
            g.iter()
                .map(|&i| distance_deg(points[i].0, points[i].1, c.0, c.1, r))
                .sum::<f64>()
                / g.len() as f64
        })
        .collect();
    let k = groups.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = distance_deg(
                centroids[i].0,
                centroids[i].1,
                centroids[j].0,
                centroids[j].1,
                r,
            );
            let ratio = if sep > 0.0 {
                (scatter[i] + scatter[j]) / sep
            } else {
                f64::INFINITY
            };
            worst = worst.max(ratio);
        }
        total += worst;
    }
    total / k as f64
}

fn groups_from_assignment(assign: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); k];
    for (i, &c) in assign.iter().enumerate() {
        groups[c].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// k-means for every k in `2..=k_max`, keeping the partition with the lowest
/// Davies-Bouldin index (smallest k on ties).
pub fn kmeans_poi(
    stay_points: &[StayPoint],
    k_max: usize,
) -> Result<Vec<PoiCluster>, ClusterError> {
    let n = stay_points.len();
    if n < 2 {
        return Err(ClusterError::TooFewPoints(n));
    }
    if k_max < 2 || k_max >= n {
        return Err(ClusterError::InvalidK { k_max, count: n });
    }
    let points: Vec<(f64, f64)> = stay_points
        .iter()
        .map(|s| (s.centroid_lat(), s.centroid_lon()))
        .collect();
    let mut distinct = points.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    distinct.dedup();

    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    for k in 2..=k_max.min(distinct.len()) {
        let groups = groups_from_assignment(&kmeans(&points, k), k);
        if groups.len() < 2 {
            continue;
        }
        let db = davies_bouldin(&points, &groups);
        if best.as_ref().is_none_or(|(b, _)| db < *b) {
            best = Some((db, groups));
        }
    }
    let groups = match best {
        Some((_, g)) => g,
        None => vec![(0..n).collect()],
    };
    Ok(label_groups(stay_points, groups))
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // Lower root wins so merges are order-stable.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Single-linkage agglomerative clustering, cutting the dendrogram at
/// `cut_distance` meters: clusters merge while their closest members are at
/// most `cut_distance` apart. Merges run in ascending distance, ties by
/// lowest index pair.
pub fn hierarchical_poi(
    stay_points: &[StayPoint],
    cut_distance: f64,
    earth_radius: f64,
) -> Vec<PoiCluster> {
    let n = stay_points.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((
                sp_distance(&stay_points[i], &stay_points[j], earth_radius),
                i,
                j,
            ));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite distances")
            .then((a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut dsu = DisjointSet::new(n);
    for (d, i, j) in pairs {
        if d > cut_distance {
            break;
        }
        dsu.union(i, j);
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = dsu.find(i);
        groups[root].push(i);
    }
    label_groups(stay_points, groups)
}
