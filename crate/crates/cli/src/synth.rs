//! Seeded synthetic traces with known ground truth.
//!
//! A scenario is a list of POIs and an itinerary of dwells, travel legs and
//! GPS freezes. The generator samples the resulting timeline at a fixed
//! interval, adds Gaussian position noise scaled by the reported accuracy,
//! and emits location rows, sensor rows and a ground-truth file. Travel and
//! freeze durations are rounded up to whole sampling intervals, so every leg
//! boundary is a sample time and a dwell of `d` seconds yields samples
//! spanning exactly `d` seconds.

use std::path::Path;

use poi_core::model::RawSensor;
use poi_core::{Activity, IoLabel, LocationSample, PpLabel, SensorSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records;

const M_PER_DEG: f64 = 111_194.93;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPoi {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub io: IoLabel,
    pub pp: PpLabel,
    /// Reported GPS accuracy while dwelling here; defaults to the floor.
    #[serde(default)]
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Poi(usize),
    Point { lat: f64, lon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// Stay at a POI for `duration` seconds. The user must already be there.
    Dwell {
        poi: usize,
        duration: i64,
    },
    Travel {
        to: Target,
        speed_mps: f64,
    },
    /// The fix freezes at the current position: two samples, then nothing
    /// until the freeze ends, then one more sample at the same coordinate.
    GpsFreeze {
        duration: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracySpike {
    /// Index of the emitted location sample (before duplication).
    pub sample: usize,
    pub accuracy: f64,
}

fn default_interval() -> i64 {
    300
}
fn default_floor() -> f64 {
    10.0
}
fn default_jitter() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthScenario {
    pub user_id: String,
    pub start_time: i64,
    #[serde(default = "default_interval")]
    pub interval: i64,
    pub seed: u64,
    /// Lowest accuracy any fix reports, meters.
    #[serde(default = "default_floor")]
    pub accuracy_floor: f64,
    /// Per-axis position noise as a fraction of the reported accuracy.
    #[serde(default = "default_jitter")]
    pub jitter_fraction: f64,
    pub start: Target,
    pub pois: Vec<SynthPoi>,
    pub itinerary: Vec<Step>,
    #[serde(default)]
    pub accuracy_spikes: Vec<AccuracySpike>,
    /// Number of location (and matching sensor) rows emitted twice.
    #[serde(default)]
    pub duplicate_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthVisit {
    pub t_arrive: i64,
    pub t_depart: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthPoi {
    pub poi: usize,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub io: IoLabel,
    pub pp: PpLabel,
    pub visits: Vec<TruthVisit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub user_id: String,
    pub pois: Vec<TruthPoi>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub location: Vec<LocationSample>,
    pub sensors: Vec<SensorSample>,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Dwell(usize),
    Travel(f64),
    Freeze,
}

#[derive(Debug, Clone, Copy)]
struct Leg {
    t0: i64,
    t1: i64,
    from: (f64, f64),
    to: (f64, f64),
    kind: Kind,
}

impl Leg {
    fn position(&self, t: i64) -> (f64, f64) {
        if self.t1 == self.t0 {
            return self.to;
        }
        let f = (t - self.t0) as f64 / (self.t1 - self.t0) as f64;
        (
            self.from.0 + (self.to.0 - self.from.0) * f,
            self.from.1 + (self.to.1 - self.from.1) * f,
        )
    }
}

fn flat_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let north = (b.0 - a.0) * M_PER_DEG;
    let east = (b.1 - a.1) * M_PER_DEG * a.0.to_radians().cos();
    north.hypot(east)
}

impl SynthScenario {
    fn target(&self, t: Target) -> Result<(f64, f64)> {
        match t {
            Target::Poi(i) => self
                .pois
                .get(i)
                .map(|p| (p.lat, p.lon))
                .ok_or_else(|| Error::Input(format!("scenario references unknown POI {i}"))),
            Target::Point { lat, lon } => Ok((lat, lon)),
        }
    }

    fn round_up(&self, secs: i64) -> i64 {
        let n = (secs + self.interval - 1) / self.interval;
        n.max(1) * self.interval
    }

    fn legs(&self) -> Result<Vec<Leg>> {
        if self.interval <= 0 {
            return Err(Error::Input("scenario interval must be positive".into()));
        }
        let mut pos = self.target(self.start)?;
        let mut t = self.start_time;
        let mut legs = Vec::new();
        for step in &self.itinerary {
            let leg = match *step {
                Step::Dwell { poi, duration } => {
                    let at = self.target(Target::Poi(poi))?;
                    if flat_distance(pos, at) > 1.0 {
                        return Err(Error::Input(format!(
                            "dwell at POI {poi} but the user is elsewhere; add a travel step"
                        )));
                    }
                    if duration <= 0 {
                        return Err(Error::Input("dwell duration must be positive".into()));
                    }
                    Leg {
                        t0: t,
                        t1: t + duration,
                        from: at,
                        to: at,
                        kind: Kind::Dwell(poi),
                    }
                }
                Step::Travel { to, speed_mps } => {
                    if speed_mps.is_nan() || speed_mps <= 0.0 {
                        return Err(Error::Input("travel speed must be positive".into()));
                    }
                    let dest = self.target(to)?;
                    let secs = (flat_distance(pos, dest) / speed_mps).ceil() as i64;
                    Leg {
                        t0: t,
                        t1: t + self.round_up(secs),
                        from: pos,
                        to: dest,
                        kind: Kind::Travel(speed_mps),
                    }
                }
                Step::GpsFreeze { duration } => Leg {
                    t0: t,
                    t1: t + self.round_up(duration),
                    from: pos,
                    to: pos,
                    kind: Kind::Freeze,
                },
            };
            pos = leg.to;
            t = leg.t1;
            legs.push(leg);
        }
        Ok(legs)
    }
}

/// The leg a sample time belongs to. Dwells claim both endpoints so the
/// arrival and departure fixes carry dwell sensor readings.
fn leg_at(legs: &[Leg], t: i64) -> Option<&Leg> {
    legs.iter()
        .find(|l| matches!(l.kind, Kind::Dwell(_)) && l.t0 <= t && t <= l.t1)
        .or_else(|| legs.iter().find(|l| l.t0 <= t && t < l.t1))
        .or_else(|| legs.last().filter(|l| l.t1 == t))
}

/// Builds location rows, sensor rows and ground truth from a scenario.
pub fn generate(sc: &SynthScenario) -> Result<SynthOutput> {
    let legs = sc.legs()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let end = legs.last().map_or(sc.start_time, |l| l.t1);

    let mut location = Vec::new();
    let mut sensors = Vec::new();
    let mut t = sc.start_time;
    while t <= end {
        let Some(leg) = leg_at(&legs, t) else { break };
        if let Kind::Freeze = leg.kind {
            let replay = t == leg.t0 || t == leg.t0 + sc.interval;
            if !replay {
                t += sc.interval;
                continue;
            }
        }
        let idx = location.len();
        let base_acc = match leg.kind {
            Kind::Dwell(p) => sc.pois[p].accuracy.unwrap_or(sc.accuracy_floor),
            _ => sc.accuracy_floor,
        };
        let acc = sc
            .accuracy_spikes
            .iter()
            .find(|s| s.sample == idx)
            .map_or(base_acc, |s| s.accuracy)
            .max(sc.accuracy_floor);
        let (mut lat, mut lon) = leg.position(t);
        // A frozen fix replays the exact same coordinate.
        let frozen = matches!(leg.kind, Kind::Freeze);
        if !frozen {
            let sigma = acc * sc.jitter_fraction;
            let north: f64 = unit.sample(&mut rng) * sigma;
            let east: f64 = unit.sample(&mut rng) * sigma;
            lat += north / M_PER_DEG;
            lon += east / (M_PER_DEG * lat.to_radians().cos());
        }
        location.push(
            LocationSample::new(sc.user_id.clone(), t, lat, lon, acc)
                .map_err(|e| Error::Input(format!("synthetic fix at t={t}: {e}")))?,
        );
        sensors.push(sensor_reading(sc, leg.kind, t, acc, &mut rng, &unit)?);
        t += sc.interval;
    }

    if sc.duplicate_rows > 0 && !location.is_empty() {
        let mut picks: Vec<usize> = rand::seq::index::sample(
            &mut rng,
            location.len(),
            sc.duplicate_rows.min(location.len()),
        )
        .into_vec();
        picks.sort_unstable();
        for &i in picks.iter().rev() {
            location.insert(i + 1, location[i].clone());
            sensors.insert(i + 1, sensors[i].clone());
        }
    }

    let mut pois: Vec<TruthPoi> = Vec::new();
    for leg in &legs {
        if let Kind::Dwell(p) = leg.kind {
            let visit = TruthVisit {
                t_arrive: leg.t0,
                t_depart: leg.t1,
            };
            match pois.iter_mut().find(|tp| tp.poi == p) {
                Some(tp) => tp.visits.push(visit),
                None => {
                    let poi = &sc.pois[p];
                    pois.push(TruthPoi {
                        poi: p,
                        name: poi.name.clone(),
                        lat: poi.lat,
                        lon: poi.lon,
                        io: poi.io,
                        pp: poi.pp,
                        visits: vec![visit],
                    });
                }
            }
        }
    }
    Ok(SynthOutput {
        location,
        sensors,
        truth: GroundTruth {
            user_id: sc.user_id.clone(),
            pois,
        },
    })
}

fn sensor_reading(
    sc: &SynthScenario,
    kind: Kind,
    t: i64,
    acc: f64,
    rng: &mut ChaCha8Rng,
    unit: &Normal<f64>,
) -> Result<SensorSample> {
    let mut noise = |mean: f64| (mean + 4.0 * unit.sample(rng)).max(0.0);
    let raw = match kind {
        Kind::Dwell(p) => {
            let poi = &sc.pois[p];
            let private = poi.pp == PpLabel::Private;
            let outdoor = poi.io == IoLabel::Outdoor;
            RawSensor {
                user_id: sc.user_id.clone(),
                t,
                velocity: Some(0.0),
                accuracy: Some(acc),
                noise_raw: Some(noise(if private { 30.0 } else { 65.0 })),
                noise_norm: None,
                battery_charging: Some(private && !outdoor),
                light: Some(if outdoor { 5000.0 } else { 300.0 }),
                activity: Some(if outdoor && !private {
                    Activity::Walking
                } else {
                    Activity::Still
                }),
            }
        }
        Kind::Travel(speed) => RawSensor {
            user_id: sc.user_id.clone(),
            t,
            velocity: Some(speed),
            accuracy: Some(acc),
            noise_raw: Some(noise(75.0)),
            noise_norm: None,
            battery_charging: Some(false),
            light: Some(2000.0),
            activity: Some(Activity::Other),
        },
        Kind::Freeze => RawSensor {
            user_id: sc.user_id.clone(),
            t,
            velocity: None,
            accuracy: Some(acc),
            noise_raw: Some(noise(75.0)),
            noise_norm: None,
            battery_charging: Some(false),
            light: Some(0.0),
            activity: Some(Activity::Other),
        },
    };
    SensorSample::new(raw).map_err(|e| Error::Input(format!("synthetic sensor row at t={t}: {e}")))
}

pub const LOCATION_FILE: &str = "location.csv";
pub const SENSOR_FILE: &str = "sensors.csv";
pub const TRUTH_FILE: &str = "ground_truth.json";

/// Writes `location.csv`, `sensors.csv` and `ground_truth.json` into `dir`.
pub fn write(out: &SynthOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    records::write_locations(&dir.join(LOCATION_FILE), &out.location)?;
    records::write_sensors(&dir.join(SENSOR_FILE), &out.sensors)?;
    let truth = dir.join(TRUTH_FILE);
    let json = serde_json::to_string_pretty(&out.truth).map_err(Error::json(&truth))?;
    std::fs::write(&truth, json + "\n").map_err(Error::io(&truth))
}

pub fn load_scenario(path: &Path) -> Result<SynthScenario> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(Error::json(path))
}

pub fn load_truth(path: &Path) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(Error::json(path))
}

/// Ready-made scenarios around one city block grid near (1.30, 103.80).
pub mod presets {
    use super::*;

    const BASE: (f64, f64) = (1.30, 103.80);

    /// A point `north`/`east` meters from the grid origin.
    pub fn offset(north: f64, east: f64) -> (f64, f64) {
        (
            BASE.0 + north / M_PER_DEG,
            BASE.1 + east / (M_PER_DEG * BASE.0.to_radians().cos()),
        )
    }

    fn poi(
        name: &str,
        at: (f64, f64),
        io: IoLabel,
        pp: PpLabel,
        accuracy: Option<f64>,
    ) -> SynthPoi {
        SynthPoi {
            name: name.into(),
            lat: at.0,
            lon: at.1,
            io,
            pp,
            accuracy,
        }
    }

    fn base(user: &str, seed: u64, pois: Vec<SynthPoi>, itinerary: Vec<Step>) -> SynthScenario {
        SynthScenario {
            user_id: user.into(),
            start_time: 1_700_000_100,
            interval: 300,
            seed,
            accuracy_floor: 10.0,
            jitter_fraction: 0.25,
            start: Target::Poi(0),
            pois,
            itinerary,
            accuracy_spikes: Vec::new(),
            duplicate_rows: 0,
        }
    }

    fn go(poi: usize) -> Step {
        Step::Travel {
            to: Target::Poi(poi),
            speed_mps: 10.0,
        }
    }

    fn dwell(poi: usize, minutes: i64) -> Step {
        Step::Dwell {
            poi,
            duration: minutes * 60,
        }
    }

    /// Home (indoor, private) and an outdoor public park.
    pub fn two_poi(seed: u64) -> SynthScenario {
        base(
            "synth",
            seed,
            vec![
                poi(
                    "home",
                    offset(0.0, 0.0),
                    IoLabel::Indoor,
                    PpLabel::Private,
                    Some(45.0),
                ),
                poi(
                    "park",
                    offset(4000.0, 3000.0),
                    IoLabel::Outdoor,
                    PpLabel::Public,
                    None,
                ),
            ],
            vec![dwell(0, 60), go(1), dwell(1, 60)],
        )
    }

    /// Two genuine dwells with an hour-long GPS freeze on the way between
    /// them, far from either POI.
    pub fn tunnel(seed: u64) -> SynthScenario {
        let tunnel = offset(6000.0, 0.0);
        let mut sc = base(
            "synth",
            seed,
            vec![
                poi(
                    "home",
                    offset(0.0, 0.0),
                    IoLabel::Indoor,
                    PpLabel::Private,
                    Some(45.0),
                ),
                poi(
                    "office",
                    offset(12_000.0, 0.0),
                    IoLabel::Indoor,
                    PpLabel::Public,
                    Some(40.0),
                ),
            ],
            vec![
                dwell(0, 60),
                Step::Travel {
                    to: Target::Point {
                        lat: tunnel.0,
                        lon: tunnel.1,
                    },
                    speed_mps: 10.0,
                },
                Step::GpsFreeze { duration: 3600 },
                go(1),
                dwell(1, 60),
            ],
        );
        sc.duplicate_rows = 3;
        sc
    }

    /// Dwells of 15 and 45 minutes separated by fast travel.
    pub fn threshold_sweep(seed: u64) -> SynthScenario {
        base(
            "synth",
            seed,
            vec![
                poi(
                    "kiosk",
                    offset(0.0, 0.0),
                    IoLabel::Outdoor,
                    PpLabel::Public,
                    None,
                ),
                poi(
                    "cafe",
                    offset(0.0, 6000.0),
                    IoLabel::Indoor,
                    PpLabel::Public,
                    Some(40.0),
                ),
                poi(
                    "depot",
                    offset(6000.0, 6000.0),
                    IoLabel::Outdoor,
                    PpLabel::Public,
                    None,
                ),
            ],
            vec![
                Step::Travel {
                    to: Target::Point {
                        lat: offset(-3000.0, 0.0).0,
                        lon: offset(-3000.0, 0.0).1,
                    },
                    speed_mps: 10.0,
                },
                go(0),
                dwell(0, 15),
                go(1),
                dwell(1, 45),
                go(2),
            ],
        )
        .with_start(Target::Point {
            lat: offset(-6000.0, 0.0).0,
            lon: offset(-6000.0, 0.0).1,
        })
    }

    /// A day with repeated visits to three places, for device comparisons.
    pub fn daily_routine(seed: u64, accuracy_floor: f64) -> SynthScenario {
        let mut sc = base(
            "synth",
            seed,
            vec![
                poi(
                    "home",
                    offset(0.0, 0.0),
                    IoLabel::Indoor,
                    PpLabel::Private,
                    Some(45.0),
                ),
                poi(
                    "office",
                    offset(5000.0, 4000.0),
                    IoLabel::Indoor,
                    PpLabel::Public,
                    Some(40.0),
                ),
                poi(
                    "park",
                    offset(-3000.0, 5000.0),
                    IoLabel::Outdoor,
                    PpLabel::Public,
                    None,
                ),
            ],
            vec![
                dwell(0, 90),
                go(1),
                dwell(1, 180),
                go(2),
                dwell(2, 45),
                go(1),
                dwell(1, 120),
                go(0),
                dwell(0, 90),
            ],
        );
        sc.accuracy_floor = accuracy_floor;
        sc
    }

    impl SynthScenario {
        pub fn with_start(mut self, start: Target) -> Self {
            self.start = start;
            self
        }
    }

    pub fn by_name(name: &str, seed: u64) -> Option<SynthScenario> {
        Some(match name {
            "two-poi" => two_poi(seed),
            "tunnel" => tunnel(seed),
            "threshold-sweep" => threshold_sweep(seed),
            "daily" => daily_routine(seed, 10.0),
            _ => return None,
        })
    }

    pub const NAMES: [&str; 4] = ["two-poi", "tunnel", "threshold-sweep", "daily"];
}
