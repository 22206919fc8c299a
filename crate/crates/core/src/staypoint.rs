//! Stay-point detection with validation of inter-sample gaps.
//!
//! The scan anchors at sample `k` and extends while each later sample stays
//! within the accuracy-adaptive radius of the anchor. The resulting maximal
//! segment becomes a stay point when it lasts strictly longer than the
//! minimum stay and, for the validated variant, every consecutive pair in it
//! is closer than `theta_d_valid` in space and `theta_t_gap` in time. A
//! frozen fix replayed across a long dropout (a tunnel, an underground
//! station) produces one long gap and is rejected. The scan then resumes at
//! the first sample outside the segment.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geo::distance_deg;
use crate::model::{LocationSample, PipelineConfig, StayPoint};

/// A maximal run `[anchor, extent]` whose members all lie within reach of
/// the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateSegment {
    pub anchor: usize,
    pub extent: usize,
    /// Distance from the anchor to the last member, meters.
    pub span_distance: f64,
    /// Time from the anchor to the last member, seconds.
    pub span_time: i64,
}

/// Reachability radius for two samples: the sum of their accuracies, capped
/// at `theta_l`.
#[inline]
pub fn pair_eps(a_i: f64, a_prev: f64, theta_l: f64) -> f64 {
    let sum = a_i + a_prev;
    if sum < theta_l {
        sum
    } else {
        theta_l
    }
}

/// Whether one consecutive-sample step is plausible for a dwell.
#[inline]
pub fn validity(d: f64, dt: i64, cfg: &PipelineConfig) -> bool {
    dt < cfg.theta_t_gap && d < cfg.theta_d_valid
}

fn dist(a: &LocationSample, b: &LocationSample, cfg: &PipelineConfig) -> f64 {
    distance_deg(a.lat(), a.lon(), b.lat(), b.lon(), cfg.earth_radius)
}

/// Every consecutive pair in `samples[first..=last]` passes [`validity`].
pub fn segment_is_valid(
    samples: &[LocationSample],
    first: usize,
    last: usize,
    cfg: &PipelineConfig,
) -> bool {
    samples[first..=last]
        .windows(2)
        .all(|w| validity(dist(&w[0], &w[1], cfg), w[1].t() - w[0].t(), cfg))
}

/// Maximal anchored segments of two or more samples, in scan order.
pub fn candidate_segments(
    samples: &[LocationSample],
    cfg: &PipelineConfig,
) -> Vec<CandidateSegment> {
    let n = samples.len();
    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        let anchor = &samples[k];
        let mut j = k + 1;
        while j < n {
            let eps = pair_eps(
                samples[j].accuracy(),
                anchor.accuracy(),
                cfg.theta_l_eps_cap,
            );
            if dist(anchor, &samples[j], cfg) > eps {
                break;
            }
            j += 1;
        }
        let last = j - 1;
        if last > k {
            out.push(CandidateSegment {
                anchor: k,
                extent: last,
                span_distance: dist(anchor, &samples[last], cfg),
                span_time: samples[last].t() - anchor.t(),
            });
        }
        k = j;
    }
    out
}

fn detect(samples: &[LocationSample], cfg: &PipelineConfig, validate: bool) -> Vec<StayPoint> {
    if samples.len() < 2 {
        return Vec::new();
    }
    candidate_segments(samples, cfg)
        .into_iter()
        .filter(|c| c.span_time > cfg.theta_t_min_stay)
        .filter(|c| !validate || segment_is_valid(samples, c.anchor, c.extent, cfg))
        .map(|c| {
            StayPoint::from_members(samples, c.anchor, c.extent)
                .expect("segment indices come from the series")
        })
        .collect()
}

/// Validated stay-point detection.
///
/// `samples` must be one user's denoised, time-sorted series.
pub fn detect_vspd(samples: &[LocationSample], cfg: &PipelineConfig) -> Vec<StayPoint> {
    detect(samples, cfg, true)
}

/// The same scan without gap validation; kept for comparison runs.
pub fn detect_baseline(samples: &[LocationSample], cfg: &PipelineConfig) -> Vec<StayPoint> {
    detect(samples, cfg, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    // ~1.11 m per 1e-5 degree of latitude.
    const M: f64 = 1.0 / 111_194.93;

    fn at(t: i64, north_m: f64, acc: f64) -> LocationSample {
        LocationSample::new("u", t, 1.3 + north_m * M, 103.8, acc).unwrap()
    }

    #[test]
    fn pair_eps_examples() {
        assert_eq!(pair_eps(50.0, 60.0, 200.0), 110.0);
        assert_eq!(pair_eps(150.0, 120.0, 200.0), 200.0);
        assert_eq!(pair_eps(100.0, 100.0, 200.0), 200.0);
    }

    #[test]
    fn validity_examples() {
        let cfg = PipelineConfig::default();
        assert!(validity(20.0, 300, &cfg));
        assert!(!validity(0.0, 3600, &cfg));
        assert!(!validity(500.0, 300, &cfg));
        assert!(!validity(0.0, 1200, &cfg), "strict time bound");
        assert!(!validity(200.0, 0, &cfg), "strict distance bound");
    }

    #[test]
    fn single_dwell() {
        let cfg = PipelineConfig::default();
        let offs = [0.0, 10.0, -5.0, 20.0, 15.0, -10.0, 5.0, 25.0];
        let s: Vec<_> = offs
            .iter()
            .enumerate()
            .map(|(i, &o)| at(i as i64 * 300, o, 20.0))
            .collect();
        let sp = detect_vspd(&s, &cfg);
        assert_eq!(sp.len(), 1);
        assert_eq!(sp[0].member_range().first, 0);
        assert_eq!(sp[0].member_range().last, 7);
        assert_eq!(sp[0].duration(), 2100);
        let mean_lat = s.iter().map(|x| x.lat()).sum::<f64>() / 8.0;
        assert!((sp[0].centroid_lat() - mean_lat).abs() < 1e-9);
        assert_eq!(detect_baseline(&s, &cfg), sp);
    }

    #[test]
    fn frozen_fix_across_dropout() {
        let cfg = PipelineConfig::default();
        // Travel in, three replays of one frozen fix spanning an hour with a
        // 55 minute hole, travel out.
        let s = vec![
            at(0, -3000.0, 10.0),
            at(300, 0.0, 10.0),
            at(600, 0.0, 10.0),
            at(3900, 0.0, 10.0),
            at(4200, 3000.0, 10.0),
        ];
        assert!(detect_vspd(&s, &cfg).is_empty());
        let base = detect_baseline(&s, &cfg);
        assert_eq!(base.len(), 1);
        assert_eq!(base[0].duration(), 3600);
    }

    #[test]
    fn moving_user_has_no_stays() {
        let cfg = PipelineConfig::default();
        let s: Vec<_> = (0..12)
            .map(|i| at(i * 300, i as f64 * 500.0, 15.0))
            .collect();
        assert!(detect_vspd(&s, &cfg).is_empty());
        assert!(candidate_segments(&s, &cfg).is_empty());
    }

    #[test]
    fn short_inputs() {
        let cfg = PipelineConfig::default();
        assert!(detect_vspd(&[], &cfg).is_empty());
        assert!(detect_baseline(&[at(0, 0.0, 5.0)], &cfg).is_empty());
    }

    #[test]
    fn duration_must_exceed_threshold() {
        let cfg = PipelineConfig::default();
        let exact: Vec<_> = (0..7).map(|i| at(i * 300, 0.0, 10.0)).collect();
        assert!(
            detect_vspd(&exact, &cfg).is_empty(),
            "1800 s is not > 1800 s"
        );
        let longer: Vec<_> = (0..8).map(|i| at(i * 300, 0.0, 10.0)).collect();
        assert_eq!(detect_vspd(&longer, &cfg).len(), 1);
    }

    #[test]
    fn final_dwell_is_kept() {
        let cfg = PipelineConfig::default();
        let mut s = vec![at(0, -2000.0, 10.0)];
        s.extend((1..10).map(|i| at(i * 300, 0.0, 10.0)));
        let sp = detect_vspd(&s, &cfg);
        assert_eq!(sp.len(), 1);
        assert_eq!(sp[0].member_range().last, 9);
    }

    #[test]
    fn accuracy_widens_reach_up_to_cap() {
        let cfg = PipelineConfig::default();
        // 150 m apart: reachable with 80 m accuracies, not with 50 m.
        let wide: Vec<_> = (0..8)
            .map(|i| at(i * 300, if i % 2 == 0 { 0.0 } else { 150.0 }, 80.0))
            .collect();
        assert_eq!(detect_baseline(&wide, &cfg).len(), 1);
        let tight: Vec<_> = (0..8)
            .map(|i| at(i * 300, if i % 2 == 0 { 0.0 } else { 150.0 }, 50.0))
            .collect();
        assert!(detect_baseline(&tight, &cfg).is_empty());
        // 250 m apart exceeds the 200 m cap however poor the accuracy.
        let capped: Vec<_> = (0..8)
            .map(|i| at(i * 300, if i % 2 == 0 { 0.0 } else { 250.0 }, 500.0))
            .collect();
        assert!(detect_baseline(&capped, &cfg).is_empty());
    }
}
