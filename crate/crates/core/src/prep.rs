//! Preprocessing: duplicate removal, per-user noise normalization and
//! alignment of the location and sensor streams onto a common slot grid.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    Activity, LocationSample, PipelineConfig, SensorSample, Timestamp, Timestamped,
};

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn len(&self) -> i64 {
        (self.end - self.start).max(0)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrepError {
    NoNoiseData,
}

impl fmt::Display for PrepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrepError::NoNoiseData => f.write_str("no noise data in normalization window"),
        }
    }
}

impl core::error::Error for PrepError {}

/// Sorts by timestamp and keeps the first sample (in input order) of every
/// timestamp. Rows duplicated by failed upload acknowledgements collapse to
/// one.
pub fn denoise<T: Timestamped>(mut samples: Vec<T>) -> Vec<T> {
    // Stable sort keeps input order among equal timestamps.
    samples.sort_by_key(|s| s.timestamp());
    samples.dedup_by_key(|s| s.timestamp());
    samples
}

/// Per-user noise range used to map raw amplitudes onto `[0, 10]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseNormalizer {
    pub s_min: f64,
    pub s_max: f64,
    pub window: TimeWindow,
}

pub fn fit_noise_normalizer(
    samples: &[SensorSample],
    window: TimeWindow,
) -> Result<NoiseNormalizer, PrepError> {
    let mut range: Option<(f64, f64)> = None;
    for s in samples.iter().filter(|s| window.contains(s.t())) {
        if let Some(v) = s.noise_raw() {
            range = Some(match range {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
    }
    let (s_min, s_max) = range.ok_or(PrepError::NoNoiseData)?;
    Ok(NoiseNormalizer {
        s_min,
        s_max,
        window,
    })
}

/// `10 (s - s_min) / (s_max - s_min)`, clamped to `[0, 10]`. A constant noise
/// floor maps to 0.
pub fn normalize_noise(s: f64, norm: &NoiseNormalizer) -> f64 {
    let span = norm.s_max - norm.s_min;
    if span <= 0.0 {
        return 0.0;
    }
    (10.0 * ((s - norm.s_min) / span)).clamp(0.0, 10.0)
}

/// Fills `noise_norm` on every sample that carries a raw amplitude.
pub fn apply_noise_normalizer(
    samples: &[SensorSample],
    norm: &NoiseNormalizer,
) -> Vec<SensorSample> {
    samples
        .iter()
        .map(|s| match s.noise_raw() {
            Some(raw) => s
                .with_noise_norm(normalize_noise(raw, norm))
                .expect("normalized noise is always within [0, 10]"),
            None => s.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationAggregate {
    pub count: usize,
    /// Mean GPS accuracy in meters.
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorAggregate {
    pub count: usize,
    pub mean_noise_norm: Option<f64>,
    /// True if any sample in the slot reported charging.
    pub charging: bool,
    pub mean_light: Option<f64>,
    /// Mean light strictly above the light threshold.
    pub bright: Option<bool>,
    /// Most frequent activity, ties resolved by [`Activity`] order.
    pub activity: Option<Activity>,
}

/// Location and sensor data that fall inside one slot of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedSlot {
    pub slot_start: Timestamp,
    pub location: Option<LocationAggregate>,
    pub sensors: Option<SensorAggregate>,
}

#[derive(Default, Clone, Copy)]
struct SensorAcc {
    count: usize,
    noise_sum: f64,
    noise_n: usize,
    charging: bool,
    light_sum: f64,
    light_n: usize,
    activity: [usize; 3],
}

/// Start of the grid cell holding `t`.
pub fn align_to_grid(t: Timestamp, slot_len: i64) -> Timestamp {
    t.div_euclid(slot_len) * slot_len
}

/// Buckets both streams onto a `cfg.slot_len` grid covering `range`.
///
/// The first slot starts at `range.start` rounded down to the grid; one slot
/// is produced for every grid cell that intersects `range`. Samples outside
/// `range` are ignored. Aggregates a slot has no data for are `None`.
pub fn time_sync(
    loc: &[LocationSample],
    sen: &[SensorSample],
    range: TimeWindow,
    cfg: &PipelineConfig,
) -> Vec<AlignedSlot> {
    let slot_len = cfg.slot_len;
    if range.is_empty() {
        return Vec::new();
    }
    let first = align_to_grid(range.start, slot_len);
    let n = (range.end - first + slot_len - 1) / slot_len;
    let n = n as usize;
    let idx = |t: Timestamp| ((t - first) / slot_len) as usize;

    let mut acc_sum = alloc::vec![0.0f64; n];
    let mut acc_n = alloc::vec![0usize; n];
    for s in loc.iter().filter(|s| range.contains(s.t())) {
        let k = idx(s.t());
        acc_sum[k] += s.accuracy();
        acc_n[k] += 1;
    }

    let mut sens = alloc::vec![SensorAcc::default(); n];
    for s in sen.iter().filter(|s| range.contains(s.t())) {
        let a = &mut sens[idx(s.t())];
        a.count += 1;
        if let Some(v) = s.noise_norm() {
            a.noise_sum += v;
            a.noise_n += 1;
        }
        a.charging |= s.battery_charging() == Some(true);
        if let Some(v) = s.light() {
            a.light_sum += v;
            a.light_n += 1;
        }
        if let Some(act) = s.activity() {
            a.activity[act as usize] += 1;
        }
    }

    (0..n)
        .map(|k| {
            let location = (acc_n[k] > 0).then(|| LocationAggregate {
                count: acc_n[k],
                mean_accuracy: acc_sum[k] / acc_n[k] as f64,
            });
            let a = &sens[k];
            let sensors = (a.count > 0).then(|| {
                let mean_light = (a.light_n > 0).then(|| a.light_sum / a.light_n as f64);
                SensorAggregate {
                    count: a.count,
                    mean_noise_norm: (a.noise_n > 0).then(|| a.noise_sum / a.noise_n as f64),
                    charging: a.charging,
                    mean_light,
                    bright: mean_light.map(|l| l > cfg.th_l),
                    activity: dominant_activity(&a.activity),
                }
            });
            AlignedSlot {
                slot_start: first + k as i64 * slot_len,
                location,
                sensors,
            }
        })
        .collect()
}

fn dominant_activity(counts: &[usize; 3]) -> Option<Activity> {
    let mut best: Option<(Activity, usize)> = None;
    for act in Activity::ALL {
        let c = counts[act as usize];
        // Strict > keeps the earliest activity on ties.
        if c > 0 && best.is_none_or(|(_, b)| c > b) {
            best = Some((act, c));
        }
    }
    best.map(|(a, _)| a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawSensor;

    fn loc(t: i64, acc: f64) -> LocationSample {
        LocationSample::new("u", t, 1.0, 103.0, acc).unwrap()
    }

    fn sen(t: i64, f: impl FnOnce(&mut RawSensor)) -> SensorSample {
        let mut raw = RawSensor {
            user_id: "u".into(),
            t,
            ..Default::default()
        };
        f(&mut raw);
        SensorSample::new(raw).unwrap()
    }

    #[test]
    fn denoise_examples() {
        let out = denoise(vec![loc(100, 1.0), loc(100, 2.0), loc(200, 3.0)]);
        assert_eq!(out.iter().map(|s| s.t()).collect::<Vec<_>>(), [100, 200]);
        assert_eq!(out[0].accuracy(), 1.0, "first occurrence wins");
        assert!(denoise(Vec::<LocationSample>::new()).is_empty());
        let out = denoise(vec![loc(300, 1.0), loc(100, 1.0), loc(200, 1.0)]);
        assert_eq!(
            out.iter().map(|s| s.t()).collect::<Vec<_>>(),
            [100, 200, 300]
        );
    }

    #[test]
    fn fit_normalizer() {
        let w = TimeWindow::new(0, 10_000);
        let s: Vec<_> = [3.0, 7.0, 5.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| sen(i as i64, |r| r.noise_raw = Some(v)))
            .collect();
        let n = fit_noise_normalizer(&s, w).unwrap();
        assert_eq!((n.s_min, n.s_max), (3.0, 7.0));

        let n = fit_noise_normalizer(&s[..1], w).unwrap();
        assert_eq!((n.s_min, n.s_max), (3.0, 3.0));

        let quiet = vec![sen(0, |_| {}), sen(1, |_| {})];
        assert_eq!(fit_noise_normalizer(&quiet, w), Err(PrepError::NoNoiseData));
        // Samples outside the window are not considered.
        assert_eq!(
            fit_noise_normalizer(&s, TimeWindow::new(100, 200)),
            Err(PrepError::NoNoiseData)
        );
    }

    #[test]
    fn normalize_examples() {
        let n = NoiseNormalizer {
            s_min: 20.0,
            s_max: 80.0,
            window: TimeWindow::new(0, 1),
        };
        assert_eq!(normalize_noise(20.0, &n), 0.0);
        assert_eq!(normalize_noise(80.0, &n), 10.0);
        assert!((normalize_noise(50.0, &n) - 5.0).abs() < 1e-12);
        assert_eq!(normalize_noise(5.0, &n), 0.0);
        assert_eq!(normalize_noise(500.0, &n), 10.0);
        let flat = NoiseNormalizer { s_max: 20.0, ..n };
        assert_eq!(normalize_noise(50.0, &flat), 0.0);
    }

    #[test]
    fn time_sync_mean_accuracy() {
        let cfg = PipelineConfig::default();
        let slots = time_sync(
            &[loc(10, 20.0), loc(150, 40.0)],
            &[],
            TimeWindow::new(0, 600),
            &cfg,
        );
        assert_eq!(slots.len(), 2);
        assert_eq!(slots[0].location.unwrap().mean_accuracy, 30.0);
        assert!(slots[0].sensors.is_none());
        assert!(slots[1].location.is_none());
    }

    #[test]
    fn time_sync_sensor_indicators() {
        let cfg = PipelineConfig::default();
        let sensors = vec![
            sen(0, |r| {
                r.light = Some(1000.0);
                r.activity = Some(Activity::Walking);
                r.noise_norm = Some(4.0);
            }),
            sen(100, |r| {
                r.light = Some(2000.0);
                r.battery_charging = Some(true);
                r.activity = Some(Activity::Still);
                r.noise_norm = Some(6.0);
            }),
            sen(200, |r| r.battery_charging = Some(false)),
            sen(300, |r| r.light = Some(1000.0)),
        ];
        let slots = time_sync(&[], &sensors, TimeWindow::new(0, 600), &cfg);
        let s0 = slots[0].sensors.unwrap();
        assert_eq!(s0.count, 3);
        assert_eq!(s0.mean_light, Some(1500.0));
        assert_eq!(s0.bright, Some(true));
        assert!(s0.charging);
        assert_eq!(s0.mean_noise_norm, Some(5.0));
        // One Walking, one Still: tie goes to Still.
        assert_eq!(s0.activity, Some(Activity::Still));
        let s1 = slots[1].sensors.unwrap();
        assert_eq!(s1.bright, Some(false), "equal to threshold is not above it");
        assert!(!s1.charging);
        assert_eq!(s1.activity, None);
        assert_eq!(s1.mean_noise_norm, None);
    }

    #[test]
    fn time_sync_unaligned_range() {
        let cfg = PipelineConfig::default();
        let slots = time_sync(&[loc(450, 5.0)], &[], TimeWindow::new(420, 901), &cfg);
        let starts: Vec<_> = slots.iter().map(|s| s.slot_start).collect();
        assert_eq!(starts, [300, 600, 900]);
        assert!(slots[1].location.is_none(), "450 is in the first slot");
        assert_eq!(slots[0].location.unwrap().count, 1);
        assert!(time_sync(&[], &[], TimeWindow::new(5, 5), &cfg).is_empty());
    }
}
