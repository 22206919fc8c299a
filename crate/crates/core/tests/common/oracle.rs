//! Slow reference implementations used to cross-check the library.
//!
//! Shared with the acceptance suite of the companion crate via `#[path]`.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use poi_core::geo::{haversine_distance, GeoPoint};
use poi_core::{LocationSample, PipelineConfig, StayPoint};
use rand::Rng;

/// Spherical law of cosines; ill-conditioned below about a kilometer.
pub fn cosine_law_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64, r: f64) -> f64 {
    let (a, b) = (lat1.to_radians(), lat2.to_radians());
    let dl = (lon2 - lon1).to_radians();
    let c = (a.sin() * b.sin() + a.cos() * b.cos() * dl.cos()).clamp(-1.0, 1.0);
    r * c.acos()
}

fn dist(a: &LocationSample, b: &LocationSample, r: f64) -> f64 {
    haversine_distance(
        GeoPoint {
            lat: a.lat(),
            lon: a.lon(),
        },
        GeoPoint {
            lat: b.lat(),
            lon: b.lon(),
        },
        r,
    )
}

/// Window enumeration: collects every `(i, j)` whose members all sit within
/// the capped accuracy sum of `P_i`, then walks a cursor taking the
/// leftmost-maximal window at each position. Returns `(first, last)` index
/// pairs of accepted stays.
pub fn vspd_oracle(
    s: &[LocationSample],
    cfg: &PipelineConfig,
    validate: bool,
) -> Vec<(usize, usize)> {
    let n = s.len();
    let reach = |i: usize, m: usize| {
        let eps = (s[i].accuracy() + s[m].accuracy()).min(cfg.theta_l_eps_cap);
        dist(&s[i], &s[m], cfg.earth_radius) <= eps
    };
    let mut windows = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if (i + 1..=j).all(|m| reach(i, m)) {
                windows.insert((i, j));
            }
        }
    }
    let gap_ok = |m: usize| {
        (s[m + 1].t() - s[m].t()) < cfg.theta_t_gap
            && dist(&s[m], &s[m + 1], cfg.earth_radius) < cfg.theta_d_valid
    };
    let mut out = Vec::new();
    let mut p = 0;
    while p < n {
        let end = windows
            .iter()
            .filter(|(i, _)| *i == p)
            .map(|&(_, j)| j)
            .max()
            .unwrap_or(p);
        let long_enough = s[end].t() - s[p].t() > cfg.theta_t_min_stay;
        let valid = !validate || (p..end).all(gap_ok);
        if end > p && long_enough && valid {
            out.push((p, end));
        }
        p = end + 1;
    }
    out
}

pub fn ranges(sps: &[StayPoint]) -> Vec<(usize, usize)> {
    sps.iter()
        .map(|s| (s.member_range().first, s.member_range().last))
        .collect()
}

/// Plain union-find with path halving.
pub struct UnionFind(Vec<usize>);

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..n {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        canonical(by_root.into_values().collect())
    }
}

/// Sorted members, sorted groups.
pub fn canonical(mut groups: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort();
    groups
}

/// Connected components of the capped-accuracy reachability graph.
pub fn reachability_components(sps: &[StayPoint], cfg: &PipelineConfig) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(sps.len());
    for i in 0..sps.len() {
        for j in i + 1..sps.len() {
            let d = haversine_distance(
                GeoPoint {
                    lat: sps[i].centroid_lat(),
                    lon: sps[i].centroid_lon(),
                },
                GeoPoint {
                    lat: sps[j].centroid_lat(),
                    lon: sps[j].centroid_lon(),
                },
                cfg.earth_radius,
            );
            let eps = (sps[i].mean_accuracy() + sps[j].mean_accuracy()).min(cfg.theta_l_eps_cap);
            if d <= eps {
                uf.union(i, j);
            }
        }
    }
    uf.groups()
}

/// Components of the graph joining stay points at most `cut` meters apart,
/// found by breadth-first search.
pub fn threshold_components(sps: &[StayPoint], cut: f64, r: f64) -> Vec<Vec<usize>> {
    let n = sps.len();
    let mut seen = vec![false; n];
    let mut groups = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut group = vec![s];
        let mut k = 0;
        while k < group.len() {
            let a = group[k];
            for b in 0..n {
                if !seen[b] {
                    let d = haversine_distance(
                        GeoPoint {
                            lat: sps[a].centroid_lat(),
                            lon: sps[a].centroid_lon(),
                        },
                        GeoPoint {
                            lat: sps[b].centroid_lat(),
                            lon: sps[b].centroid_lon(),
                        },
                        r,
                    );
                    if d <= cut {
                        seen[b] = true;
                        group.push(b);
                    }
                }
            }
            k += 1;
        }
        groups.push(group);
    }
    canonical(groups)
}

/// Every partition of `0..n` into exactly `k` nonempty blocks.
pub fn partitions(n: usize, k: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(
        i: usize,
        n: usize,
        k: usize,
        blocks: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if n - i < k - blocks.len() {
            return;
        }
        if i == n {
            if blocks.len() == k {
                out.push(blocks.clone());
            }
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(i);
            rec(i + 1, n, k, blocks, out);
            blocks[b].pop();
        }
        if blocks.len() < k {
            blocks.push(vec![i]);
            rec(i + 1, n, k, blocks, out);
            blocks.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn mean(points: &[(f64, f64)], g: &[usize]) -> (f64, f64) {
    let n = g.len() as f64;
    (
        g.iter().map(|&i| points[i].0).sum::<f64>() / n,
        g.iter().map(|&i| points[i].1).sum::<f64>() / n,
    )
}

pub fn sse(points: &[(f64, f64)], groups: &[Vec<usize>]) -> f64 {
    groups
        .iter()
        .map(|g| {
            let c = mean(points, g);
            g.iter()
                .map(|&i| (points[i].0 - c.0).powi(2) + (points[i].1 - c.1).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Davies-Bouldin index written out from its definition.
pub fn db_index(points: &[(f64, f64)], groups: &[Vec<usize>], r: f64) -> f64 {
    let c: Vec<_> = groups.iter().map(|g| mean(points, g)).collect();
    let sigma: Vec<f64> = groups
        .iter()
        .zip(&c)
        .map(|(g, ci)| {
            g.iter()
                .map(|&i| cosine_or_hav(points[i], *ci, r))
                .sum::<f64>()
                / g.len() as f64
        })
        .collect();
    let k = groups.len();
    (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| (sigma[i] + sigma[j]) / cosine_or_hav(c[i], c[j], r))
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / k as f64
}

fn cosine_or_hav(a: (f64, f64), b: (f64, f64), r: f64) -> f64 {
    haversine_distance(
        GeoPoint { lat: a.0, lon: a.1 },
        GeoPoint { lat: b.0, lon: b.1 },
        r,
    )
}

/// Brute-force k selection: for each k, the SSE-optimal partition by
/// enumeration, scored by Davies-Bouldin. Returns `(k, partition)` at the
/// minimum.
pub fn best_db_partition(points: &[(f64, f64)], k_max: usize, r: f64) -> (usize, Vec<Vec<usize>>) {
    let mut best: Option<(f64, usize, Vec<Vec<usize>>)> = None;
    for k in 2..=k_max {
        let opt = partitions(points.len(), k)
            .into_iter()
            .min_by(|a, b| sse(points, a).partial_cmp(&sse(points, b)).unwrap())
            .unwrap();
        let db = db_index(points, &opt, r);
        if best.as_ref().is_none_or(|(b, _, _)| db < *b) {
            best = Some((db, k, opt));
        }
    }
    let (_, k, p) = best.unwrap();
    (k, canonical(p))
}

/// Meters to degrees of latitude.
pub const DEG_PER_M: f64 = 1.0 / 111_194.93;

/// Random series mixing dwells, moves, dropout gaps and frozen fixes, built
/// to hit every branch of the scan.
pub fn random_series<R: Rng>(rng: &mut R, max_len: usize) -> Vec<LocationSample> {
    let n = rng.gen_range(0..=max_len);
    let (mut lat, mut lon) = (
        1.3 + rng.gen_range(-0.05..0.05),
        103.8 + rng.gen_range(-0.05..0.05),
    );
    let mut t = rng.gen_range(0..100_000i64);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let acc = match rng.gen_range(0..10) {
            0 => rng.gen_range(100.0..400.0),
            _ => rng.gen_range(5.0..60.0),
        };
        match rng.gen_range(0..10) {
            0..=5 => {
                lat += rng.gen_range(-30.0..30.0) * DEG_PER_M;
                lon += rng.gen_range(-30.0..30.0) * DEG_PER_M;
            }
            6 | 7 => {
                lat += rng.gen_range(-800.0..800.0) * DEG_PER_M;
                lon += rng.gen_range(-800.0..800.0) * DEG_PER_M;
            }
            _ => {}
        }
        t += match rng.gen_range(0..12) {
            0 => rng.gen_range(1200..4000),
            _ => 300 + rng.gen_range(-20..20),
        };
        out.push(LocationSample::new("u", t, lat, lon, acc).unwrap());
    }
    out
}

/// Random stay points in clumps around a few centers.
pub fn random_stay_points<R: Rng>(rng: &mut R, max_len: usize) -> Vec<StayPoint> {
    use poi_core::model::MemberRange;
    let n = rng.gen_range(0..=max_len);
    let centers: Vec<(f64, f64)> = (0..rng.gen_range(1..8))
        .map(|_| {
            (
                rng.gen_range(-2000.0..2000.0),
                rng.gen_range(-2000.0..2000.0),
            )
        })
        .collect();
    (0..n)
        .map(|i| {
            let c = centers[rng.gen_range(0..centers.len())];
            let north = c.0 + rng.gen_range(-250.0..250.0);
            let east = c.1 + rng.gen_range(-250.0..250.0);
            let t = rng.gen_range(0..1_000_000i64);
            StayPoint::new(
                1.3 + north * DEG_PER_M,
                103.8 + east * DEG_PER_M,
                t,
                t + rng.gen_range(1801..10_000),
                rng.gen_range(5.0..150.0),
                MemberRange { first: i, last: i },
            )
            .unwrap()
        })
        .collect()
}
