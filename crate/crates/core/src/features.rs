//! Per-phase feature extraction: 16 lane counts in a fixed order.
//!
//! For a phase with incoming lanes `l1, l2` and downstream lanes `m1..m6`,
//! `x[0..8]` are the waiting counts of `[l1, l2, m1, .., m6]` and `x[8..16]`
//! the total counts of the same lanes in the same order, so `x[i]` and
//! `x[i + 8]` always come from one lane.

use alloc::vec::Vec;

use thiserror::Error;

use crate::network::{IntersectionId, LaneId, PhaseDef, RoadNetwork};

pub const NUM_FEATURES: usize = 16;

/// Read access to per-lane vehicle counts.
pub trait LaneCounts {
    /// Vehicles queued at the stop line.
    fn waiting(&self, lane: LaneId) -> u32;
    /// Vehicles on the lane, moving or queued.
    fn total(&self, lane: LaneId) -> u32;
}

/// Plain per-lane `(waiting, total)` table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaneSnapshot {
    pub counts: Vec<(u32, u32)>,
}

impl LaneSnapshot {
    pub fn empty(network: &RoadNetwork) -> Self {
        LaneSnapshot {
            counts: alloc::vec![(0, 0); network.lanes().len()],
        }
    }

    pub fn capture(network: &RoadNetwork, state: &dyn LaneCounts) -> Self {
        let counts = network
            .lanes()
            .iter()
            .map(|l| (state.waiting(l.id), state.total(l.id)))
            .collect();
        LaneSnapshot { counts }
    }
}

impl LaneCounts for LaneSnapshot {
    fn waiting(&self, lane: LaneId) -> u32 {
        self.counts[lane.index()].0
    }

    fn total(&self, lane: LaneId) -> u32 {
        self.counts[lane.index()].1
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("intersection {0:?} is not signalized")]
    NotSignalized(IntersectionId),
    #[error("phase {phase} is not one of intersection {intersection:?}'s phases")]
    PhaseMismatch { intersection: IntersectionId, phase: u8 },
}

/// Features of `phase` without checking that it belongs to any intersection.
pub fn phase_features(state: &dyn LaneCounts, phase: &PhaseDef) -> FeatureVector {
    let mut x = [0.0; NUM_FEATURES];
    for (k, lane) in phase.lanes().into_iter().enumerate() {
        x[k] = f64::from(state.waiting(lane));
        x[k + 8] = f64::from(state.total(lane));
    }
    FeatureVector(x)
}

/// Features of `phase` at `intersection`.
pub fn extract_features(
    network: &RoadNetwork,
    state: &dyn LaneCounts,
    intersection: IntersectionId,
    phase: &PhaseDef,
) -> Result<FeatureVector, FeatureError> {
    let junction = network
        .junction(intersection)
        .ok_or(FeatureError::NotSignalized(intersection))?;
    if junction.phase(phase.id) != phase {
        return Err(FeatureError::PhaseMismatch {
            intersection,
            phase: phase.id.get(),
        });
    }
    Ok(phase_features(state, phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate_grid;

    #[test]
    fn empty_state_is_all_zero() {
        let net = generate_grid(2, 2, 300.0, 10.0);
        let snap = LaneSnapshot::empty(&net);
        for j in net.junctions() {
            for p in &j.phases {
                let x = extract_features(&net, &snap, j.intersection, p).unwrap();
                assert_eq!(x, FeatureVector::default());
            }
        }
    }

    #[test]
    fn single_loaded_lane() {
        let net = generate_grid(1, 1, 300.0, 10.0);
        let j = &net.junctions()[0];
        let s1 = &j.phases[0];
        let mut snap = LaneSnapshot::empty(&net);
        snap.counts[s1.incoming.0.index()] = (3, 5);
        let x = extract_features(&net, &snap, j.intersection, s1).unwrap();
        let mut expected = [0.0; 16];
        expected[0] = 3.0;
        expected[8] = 5.0;
        assert_eq!(x.0, expected);
    }

    #[test]
    fn index_rebinds_across_phases() {
        // load the through lane downstream of s1's l2 (south approach through -> north exit);
        // in s1 it is m5, i.e. x6 / x14
        let net = generate_grid(1, 1, 300.0, 10.0);
        let j = &net.junctions()[0];
        let target = j.phases[0].movements[4].to_lane;
        let mut snap = LaneSnapshot::empty(&net);
        snap.counts[target.index()] = (2, 4);
        let x1 = extract_features(&net, &snap, j.intersection, &j.phases[0]).unwrap();
        assert_eq!((x1.get(6), x1.get(14)), (2.0, 4.0));
        // s6 = south through (l1) + south left (l2): the same lane is m2 -> x3 / x11
        let x6 = extract_features(&net, &snap, j.intersection, &j.phases[5]).unwrap();
        assert_eq!((x6.get(3), x6.get(11)), (2.0, 4.0));
        assert_eq!(x6.0.iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn phase_of_other_intersection_is_rejected() {
        let net = generate_grid(1, 2, 300.0, 10.0);
        let (a, b) = (&net.junctions()[0], &net.junctions()[1]);
        let snap = LaneSnapshot::empty(&net);
        let err = extract_features(&net, &snap, a.intersection, &b.phases[0]).unwrap_err();
        assert_eq!(
            err,
            FeatureError::PhaseMismatch {
                intersection: a.intersection,
                phase: 1
            }
        );
    }
}
