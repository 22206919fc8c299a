//! Sensor-fusion environment classification.
//!
//! Each POI visit is cut into fixed slots. Every slot gets a confidence in
//! `[0, 1]` for indoor/outdoor from the mean GPS accuracy `x`, and for
//! private/public from the mean normalized noise `y`:
//!
//! | code | guard        | main term (90%)          | side terms                    |
//! |------|--------------|--------------------------|-------------------------------|
//! | 1    | `x > Th_G`   | `(x - Th_G) / Th_G`      | 5% charging, 5% still         |
//! | 2    | `x < Th_G`   | `(Th_G - x) / Th_G`      | 10% bright                    |
//! | 3    | `y < Th_N`   | `(Th_N - y) / Th_N`      | 10% still                     |
//! | 4    | `y > Th_N`   | `(y - Th_N) / Th_N`      | 10% walking                   |
//!
//! Slot values are clamped to `[0, 1]` and averaged over all `n` slots of
//! the POI, with slots lacking a value counting as zero.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    Activity, EnvCode, EnvReport, IoLabel, LocationSample, PipelineConfig, PpLabel, SensorSample,
    Trajectory, Visit,
};
use crate::prep::{time_sync, AlignedSlot, TimeWindow};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SfecError {
    NoSlots,
}

impl fmt::Display for SfecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SfecError::NoSlots => f.write_str("POI has no slots to classify"),
        }
    }
}

impl core::error::Error for SfecError {}

/// Per-slot confidences, indexed by [`EnvCode::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotConfidence {
    pub slot_start: i64,
    pub s: [Option<f64>; 4],
    /// No GPS accuracy in the slot.
    pub io_unclassified: bool,
    /// No normalized noise in the slot.
    pub pp_unclassified: bool,
    /// Neither axis has data.
    pub unclassified: bool,
}

impl SlotConfidence {
    pub fn get(&self, code: EnvCode) -> Option<f64> {
        self.s[code.index()]
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn slot_confidences(slot: &AlignedSlot, cfg: &PipelineConfig) -> SlotConfidence {
    let x = slot.location.map(|l| l.mean_accuracy);
    let sensors = slot.sensors;
    let y = sensors.and_then(|s| s.mean_noise_norm);
    let beta = indicator(sensors.is_some_and(|s| s.charging));
    let still = indicator(sensors.is_some_and(|s| s.activity == Some(Activity::Still)));
    let walking = indicator(sensors.is_some_and(|s| s.activity == Some(Activity::Walking)));
    let bright = indicator(sensors.is_some_and(|s| s.bright == Some(true)));
    let (th_g, th_n) = (cfg.th_g, cfg.th_n);
    let unit = |v: f64| v.clamp(0.0, 1.0);

    let mut s = [None; 4];
    if let Some(x) = x {
        if x > th_g {
            s[0] = Some(unit((x - th_g) / th_g * 0.9 + (beta + still) * 0.05));
        } else if x < th_g {
            s[1] = Some(unit((th_g - x) / th_g * 0.9 + bright * 0.1));
        }
    }
    if let Some(y) = y {
        if y < th_n {
            s[2] = Some(unit((th_n - y) / th_n * 0.9 + still * 0.1));
        } else if y > th_n {
            s[3] = Some(unit((y - th_n) / th_n * 0.9 + walking * 0.1));
        }
    }
    SlotConfidence {
        slot_start: slot.slot_start,
        s,
        io_unclassified: x.is_none(),
        pp_unclassified: y.is_none(),
        unclassified: x.is_none() && y.is_none(),
    }
}

/// Slot averages for one POI, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoiConfidence {
    pub n_slots: usize,
    pub p: [Option<f64>; 4],
    pub p0: f64,
    pub p0_io: f64,
    pub p0_pp: f64,
}

pub fn poi_confidence(slots: &[SlotConfidence]) -> Result<PoiConfidence, SfecError> {
    let n = slots.len();
    if n == 0 {
        return Err(SfecError::NoSlots);
    }
    let nf = n as f64;
    let mut p = [None; 4];
    for (c, out) in p.iter_mut().enumerate() {
        let present: Vec<f64> = slots.iter().filter_map(|s| s.s[c]).collect();
        if !present.is_empty() {
            *out = Some(100.0 * present.iter().sum::<f64>() / nf);
        }
    }
    let pct =
        |f: fn(&SlotConfidence) -> bool| 100.0 * slots.iter().filter(|s| f(s)).count() as f64 / nf;
    Ok(PoiConfidence {
        n_slots: n,
        p,
        p0: pct(|s| s.unclassified),
        p0_io: pct(|s| s.io_unclassified),
        p0_pp: pct(|s| s.pp_unclassified),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEstimate {
    pub io: IoLabel,
    pub pp: PpLabel,
    pub io_low_confidence: bool,
    pub pp_low_confidence: bool,
}

/// Picks the larger of each pair; a missing value loses to a present one,
/// and ties or two missing values give `Unknown`.
fn pick(a: Option<f64>, b: Option<f64>, margin: f64) -> (Option<bool>, bool) {
    match (a, b) {
        (Some(a), Some(b)) => {
            let low = (a - b).abs() < margin;
            if a > b {
                (Some(true), low)
            } else if b > a {
                (Some(false), low)
            } else {
                (None, low)
            }
        }
        (Some(_), None) => (Some(true), false),
        (None, Some(_)) => (Some(false), false),
        (None, None) => (None, false),
    }
}

/// Categorical labels from the four confidence percentages.
pub fn estimate_labels(p: &[Option<f64>; 4], margin_warn: f64) -> LabelEstimate {
    let (io, io_low) = pick(p[0], p[1], margin_warn);
    let (pp, pp_low) = pick(p[2], p[3], margin_warn);
    LabelEstimate {
        io: match io {
            Some(true) => IoLabel::Indoor,
            Some(false) => IoLabel::Outdoor,
            None => IoLabel::Unknown,
        },
        pp: match pp {
            Some(true) => PpLabel::Private,
            Some(false) => PpLabel::Public,
            None => PpLabel::Unknown,
        },
        io_low_confidence: io_low,
        pp_low_confidence: pp_low,
    }
}

/// Slot grid over all of a POI's visits. Visit ends are inclusive, so the
/// departure sample lands in the final slot; slots shared by two visits are
/// counted once.
pub fn poi_slots(
    visits: &[Visit],
    loc: &[LocationSample],
    sen: &[SensorSample],
    cfg: &PipelineConfig,
) -> Vec<AlignedSlot> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in visits {
        let window = TimeWindow::new(v.t_arrive, v.t_depart + 1);
        for slot in time_sync(loc, sen, window, cfg) {
            if seen.insert(slot.slot_start) {
                out.push(slot);
            }
        }
    }
    out.sort_by_key(|s| s.slot_start);
    out
}

/// Full classification of one POI from its visits and the user's
/// (noise-normalized) streams.
pub fn classify_poi(
    cluster_id: u32,
    visits: &[Visit],
    loc: &[LocationSample],
    sen: &[SensorSample],
    cfg: &PipelineConfig,
) -> Result<EnvReport, SfecError> {
    let slots: Vec<SlotConfidence> = poi_slots(visits, loc, sen, cfg)
        .iter()
        .map(|s| slot_confidences(s, cfg))
        .collect();
    let conf = poi_confidence(&slots)?;
    let labels = estimate_labels(&conf.p, cfg.label_margin_warn);
    Ok(EnvReport {
        poi_cluster_id: cluster_id,
        n_slots: conf.n_slots,
        p: conf.p,
        p0: conf.p0,
        p0_io: conf.p0_io,
        p0_pp: conf.p0_pp,
        io_label: labels.io,
        pp_label: labels.pp,
        io_low_confidence: labels.io_low_confidence,
        pp_low_confidence: labels.pp_low_confidence,
    })
}

/// One report per cluster id in the trajectory, ascending.
pub fn classify_trajectory(
    trajectory: &Trajectory,
    loc: &[LocationSample],
    sen: &[SensorSample],
    cfg: &PipelineConfig,
) -> Vec<EnvReport> {
    let ids: BTreeSet<u32> = trajectory.visits.iter().map(|v| v.cluster_id).collect();
    ids.into_iter()
        .filter_map(|id| {
            let visits: Vec<Visit> = trajectory
                .visits
                .iter()
                .copied()
                .filter(|v| v.cluster_id == id)
                .collect();
            classify_poi(id, &visits, loc, sen, cfg).ok()
        })
        .collect()
}
