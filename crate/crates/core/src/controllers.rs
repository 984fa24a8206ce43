//! Phase selection policies. All ties go to the lowest phase id.

use alloc::vec::Vec;

use thiserror::Error;

use crate::features::{phase_features, LaneCounts};
use crate::gp::{ExprTree, Gene, Op};
use crate::network::{Junction, PhaseId, RoadNetwork, NUM_PHASES};

/// Chooses the phase a junction shows for the next decision interval.
pub trait Controller {
    fn select(&self, network: &RoadNetwork, state: &dyn LaneCounts, junction: &Junction, clock: u32) -> PhaseId;
}

impl<C: Controller + ?Sized> Controller for &C {
    fn select(&self, network: &RoadNetwork, state: &dyn LaneCounts, junction: &Junction, clock: u32) -> PhaseId {
        (**self).select(network, state, junction, clock)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControllerError {
    #[error("fixed-time schedule is empty")]
    EmptySchedule,
    #[error("fixed-time duration {duration} s of phase {phase} is not a positive multiple of the {interval} s decision interval")]
    Duration { phase: u8, duration: u32, interval: u32 },
}

fn first_argmax(scores: [f64; NUM_PHASES]) -> PhaseId {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    PhaseId::ALL[best]
}

/// Phase with the highest urgency `tree(features(phase))`.
pub fn urgency_select(tree: &ExprTree, state: &dyn LaneCounts, junction: &Junction) -> PhaseId {
    let scores = core::array::from_fn(|p| tree.eval(&phase_features(state, &junction.phases[p])));
    first_argmax(scores)
}

/// Sum over a phase's six movements of upstream minus downstream lane totals.
pub fn pressure(state: &dyn LaneCounts, junction: &Junction, phase: PhaseId) -> i64 {
    junction
        .phase(phase)
        .movements
        .iter()
        .map(|m| i64::from(state.total(m.from_lane)) - i64::from(state.total(m.to_lane)))
        .sum()
}

pub fn max_pressure_select(state: &dyn LaneCounts, junction: &Junction) -> PhaseId {
    first_argmax(PhaseId::ALL.map(|p| pressure(state, junction, p) as f64))
}

/// Max-Pressure written as an urgency function:
/// `(x8 + x8 + x8) + (x9 + x9 + x9) - (x10 + x11 + x12 + x13 + x14 + x15)`.
pub fn mp_as_tree() -> ExprTree {
    use Gene::{Feature as X, Func as F};
    let genes = [
        F(Op::Sub),
        F(Op::Add),
        F(Op::Add),
        F(Op::Add),
        X(8),
        X(8),
        X(8),
        F(Op::Add),
        F(Op::Add),
        X(9),
        X(9),
        X(9),
        F(Op::Add),
        F(Op::Add),
        F(Op::Add),
        X(10),
        X(11),
        F(Op::Add),
        X(12),
        X(13),
        F(Op::Add),
        X(14),
        X(15),
    ];
    ExprTree::from_prefix(genes.to_vec()).expect("well-formed")
}

/// Evolved (or hand-written) urgency function.
#[derive(Clone, Debug, PartialEq)]
pub struct Urgency(pub ExprTree);

impl Controller for Urgency {
    fn select(&self, _: &RoadNetwork, state: &dyn LaneCounts, junction: &Junction, _: u32) -> PhaseId {
        urgency_select(&self.0, state, junction)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MaxPressure;

impl Controller for MaxPressure {
    fn select(&self, _: &RoadNetwork, state: &dyn LaneCounts, junction: &Junction, _: u32) -> PhaseId {
        max_pressure_select(state, junction)
    }
}

/// Cyclic plan of `(phase, seconds)` entries, identical at every junction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedTime {
    schedule: Vec<(PhaseId, u32)>,
    cycle: u32,
}

impl FixedTime {
    pub fn new(schedule: Vec<(PhaseId, u32)>, decision_interval: u32) -> Result<Self, ControllerError> {
        if schedule.is_empty() {
            return Err(ControllerError::EmptySchedule);
        }
        for &(phase, duration) in &schedule {
            if duration == 0 || decision_interval == 0 || duration % decision_interval != 0 {
                return Err(ControllerError::Duration {
                    phase: phase.get(),
                    duration,
                    interval: decision_interval,
                });
            }
        }
        let cycle = schedule.iter().map(|(_, d)| d).sum();
        Ok(FixedTime { schedule, cycle })
    }

    /// Phases 1-4, 30 s each.
    pub fn default_plan(decision_interval: u32) -> Result<Self, ControllerError> {
        Self::new(PhaseId::ALL[..4].iter().map(|&p| (p, 30)).collect(), decision_interval)
    }

    pub fn schedule(&self) -> &[(PhaseId, u32)] {
        &self.schedule
    }

    pub fn cycle_length(&self) -> u32 {
        self.cycle
    }
}

/// Phase active at `clock` under `plan`.
pub fn fixed_time_select(plan: &FixedTime, clock: u32) -> PhaseId {
    let mut offset = clock % plan.cycle;
    for &(phase, duration) in &plan.schedule {
        if offset < duration {
            return phase;
        }
        offset -= duration;
    }
    unreachable!("offset is below the cycle length")
}

impl Controller for FixedTime {
    fn select(&self, _: &RoadNetwork, _: &dyn LaneCounts, _: &Junction, clock: u32) -> PhaseId {
        fixed_time_select(self, clock)
    }
}
