//! Turning labeled stay points into a visit sequence.

use alloc::vec::Vec;

use crate::model::{PoiCluster, StayPoint, Trajectory, Visit};

/// Labels each stay point with its cluster and orders the visits by arrival.
///
/// Consecutive visits to the same cluster separated by less than `slot_len`
/// seconds are merged. Stay points not referenced by any cluster are
/// skipped.
pub fn build_trajectory(
    stay_points: &[StayPoint],
    clusters: &[PoiCluster],
    slot_len: i64,
) -> Trajectory {
    let mut label = alloc::vec![None; stay_points.len()];
    for c in clusters {
        for &m in &c.members {
            if let Some(slot) = label.get_mut(m) {
                *slot = Some(c.cluster_id);
            }
        }
    }
    let mut visits: Vec<Visit> = stay_points
        .iter()
        .zip(&label)
        .filter_map(|(sp, id)| {
            id.map(|cluster_id| Visit {
                cluster_id,
                t_arrive: sp.t_arrive(),
                t_depart: sp.t_depart(),
            })
        })
        .collect();
    visits.sort_by_key(|v| (v.t_arrive, v.t_depart, v.cluster_id));

    let mut merged: Vec<Visit> = Vec::with_capacity(visits.len());
    for v in visits {
        match merged.last_mut() {
            Some(prev)
                if prev.cluster_id == v.cluster_id && v.t_arrive - prev.t_depart < slot_len =>
            {
                prev.t_depart = prev.t_depart.max(v.t_depart);
            }
            _ => merged.push(v),
        }
    }
    Trajectory { visits: merged }
}
