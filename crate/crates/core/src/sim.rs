//! Deterministic point-queue simulator.
//!
//! Each lane holds a FIFO of vehicles travelling at free-flow speed towards the
//! stop line and a FIFO queue of vehicles waiting there. The clock advances in
//! one-second ticks; every tick runs, in order:
//!
//! 1. spawning from the flow rules (into a per-rule backlog when the entry lane is full),
//! 2. arrivals: running vehicles whose stop-line time has passed join the queue,
//! 3. discharge: each lane releases at most its queue head, if its movement is
//!    permitted, the saturation headway has elapsed since the lane's previous
//!    release and the destination lane has room.
//!
//! Controllers are queried once per decision interval. A phase change blanks all
//! signal-controlled movements of that intersection for `yellow + all_red`
//! seconds at the start of the interval. Right turns and lanes ending at a
//! boundary node are never signal-controlled.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use thiserror::Error;

use crate::controllers::Controller;
use crate::features::LaneCounts;
use crate::network::{FlowSpec, IntersectionId, LaneId, PhaseId, RoadNetwork, Turn};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Seconds between controller decisions.
    pub decision_interval: u32,
    pub yellow: u32,
    pub all_red: u32,
    /// Tick length in seconds. Only 1 is supported.
    pub tick: u32,
    /// Episode length in seconds, a multiple of `decision_interval`.
    pub duration: u32,
    /// Minimum seconds between two releases from the same lane.
    pub saturation_headway: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            decision_interval: 10,
            yellow: 3,
            all_red: 2,
            tick: 1,
            duration: 3600,
            saturation_headway: 2.0,
        }
    }
}

impl SimConfig {
    pub fn with_duration(duration: u32) -> Self {
        SimConfig {
            duration,
            ..Self::default()
        }
    }

    pub fn transition(&self) -> u32 {
        self.yellow + self.all_red
    }

    pub fn decisions(&self) -> u32 {
        self.duration / self.decision_interval
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.tick != 1 {
            return Err(SimError::Config("tick must be 1 second"));
        }
        if self.decision_interval == 0 {
            return Err(SimError::Config("decision interval must be positive"));
        }
        if self.transition() >= self.decision_interval {
            return Err(SimError::Config(
                "yellow + all-red must be shorter than the decision interval",
            ));
        }
        if !self.duration.is_multiple_of(self.decision_interval) {
            return Err(SimError::Config("duration must be a multiple of the decision interval"));
        }
        if !(self.saturation_headway.is_finite() && self.saturation_headway > 0.0) {
            return Err(SimError::Config("saturation headway must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(&'static str),
    #[error("no phase chosen for intersection {0:?}")]
    MissingChoice(IntersectionId),
    #[error("step called at t={0}, which is not a decision epoch")]
    Misaligned(u32),
    #[error("episode already finished")]
    Finished,
}

pub type VehicleId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Vehicle {
    rule: u32,
    /// Index of the current road within the route.
    cursor: u32,
    entry_time: u32,
    exit_time: Option<u32>,
}

#[derive(Clone, Debug, Default)]
struct LaneState {
    running: VecDeque<(VehicleId, f64)>,
    queued: VecDeque<VehicleId>,
    last_release: Option<u32>,
}

impl LaneState {
    fn occupancy(&self) -> usize {
        self.running.len() + self.queued.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Gate {
    Free,
    Signal(u32),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Signal {
    active: Option<PhaseId>,
    blank_for: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VehicleTrip {
    pub entry_time: u32,
    pub exit_time: Option<u32>,
}

impl VehicleTrip {
    /// Travel time, counting unfinished trips up to `duration`.
    pub fn travel_time(&self, duration: u32) -> u32 {
        self.exit_time.unwrap_or(duration).saturating_sub(self.entry_time)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseRecord {
    pub t: u32,
    pub intersection: IntersectionId,
    pub phase: PhaseId,
    pub transitioned: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub duration: u32,
    pub trips: Vec<VehicleTrip>,
    pub spawned: usize,
    pub exited: usize,
    pub average_travel_time: f64,
    pub phase_log: Vec<PhaseRecord>,
}

/// Mean travel time over all spawned vehicles, unfinished ones clamped to the
/// end of the episode. Zero when nothing was spawned.
pub fn average_travel_time(result: &EpisodeResult) -> f64 {
    mean_travel_time(&result.trips, result.duration)
}

fn mean_travel_time(trips: &[VehicleTrip], duration: u32) -> f64 {
    if trips.is_empty() {
        log::warn!("episode spawned no vehicles; average travel time reported as 0");
        return 0.0;
    }
    let total: u64 = trips.iter().map(|t| u64::from(t.travel_time(duration))).sum();
    total as f64 / trips.len() as f64
}

/// One episode in progress.
pub struct Simulation<'a> {
    network: &'a RoadNetwork,
    flow: &'a FlowSpec,
    config: SimConfig,
    clock: u32,
    lanes: Vec<LaneState>,
    gates: Vec<Gate>,
    signals: Vec<Signal>,
    /// Lane used on each road of each rule's route.
    route_lanes: Vec<Vec<LaneId>>,
    vehicles: Vec<Vehicle>,
    backlog: Vec<VecDeque<VehicleId>>,
    next_departure: Vec<u64>,
    exited: usize,
    phase_log: Vec<PhaseRecord>,
}

impl<'a> Simulation<'a> {
    pub fn new(network: &'a RoadNetwork, flow: &'a FlowSpec, config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let gates = network
            .lanes()
            .iter()
            .map(|lane| {
                let end = network.road(lane.road).end;
                match network.junction_index(end) {
                    Some(j) if lane.turn != Turn::Right => Gate::Signal(j as u32),
                    _ => Gate::Free,
                }
            })
            .collect();
        let route_lanes = flow
            .rules()
            .iter()
            .map(|rule| {
                rule.route
                    .iter()
                    .enumerate()
                    .map(|(k, &road)| {
                        let turn = match rule.route.get(k + 1) {
                            Some(&next) => network.turn_between(road, next).expect("validated route"),
                            None => Turn::Through,
                        };
                        network.road(road).lanes[turn.index()]
                    })
                    .collect()
            })
            .collect();
        Ok(Simulation {
            network,
            flow,
            config,
            clock: 0,
            lanes: alloc::vec![LaneState::default(); network.lanes().len()],
            gates,
            signals: alloc::vec![Signal::default(); network.junctions().len()],
            route_lanes,
            vehicles: Vec::new(),
            backlog: alloc::vec![VecDeque::new(); flow.rules().len()],
            next_departure: alloc::vec![0; flow.rules().len()],
            exited: 0,
            phase_log: Vec::new(),
        })
    }

    pub fn network(&self) -> &'a RoadNetwork {
        self.network
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn clock(&self) -> u32 {
        self.clock
    }

    pub fn is_finished(&self) -> bool {
        self.clock >= self.config.duration
    }

    pub fn spawned(&self) -> usize {
        self.vehicles.len()
    }

    pub fn exited(&self) -> usize {
        self.exited
    }

    pub fn in_backlog(&self) -> usize {
        self.backlog.iter().map(VecDeque::len).sum()
    }

    pub fn on_network(&self) -> usize {
        self.lanes.iter().map(LaneState::occupancy).sum()
    }

    pub fn occupancy(&self, lane: LaneId) -> usize {
        self.lanes[lane.index()].occupancy()
    }

    /// Vehicles on a lane from the stop line backwards: the queue, then the
    /// running vehicles in arrival order.
    pub fn lane_order(&self, lane: LaneId) -> impl Iterator<Item = VehicleId> + '_ {
        let state = &self.lanes[lane.index()];
        state
            .queued
            .iter()
            .copied()
            .chain(state.running.iter().map(|(v, _)| *v))
    }

    /// Phase currently shown at the `j`-th junction.
    pub fn active_phase(&self, junction: usize) -> Option<PhaseId> {
        self.signals[junction].active
    }

    /// Seconds of yellow/all-red left at the `j`-th junction.
    pub fn transition_remaining(&self, junction: usize) -> u32 {
        self.signals[junction].blank_for
    }

    /// Queries `controller` for every junction at the current clock.
    pub fn decide(&self, controller: &dyn Controller) -> Vec<PhaseId> {
        self.network
            .junctions()
            .iter()
            .map(|j| controller.select(self.network, self, j, self.clock))
            .collect()
    }

    /// Applies one phase choice per junction and advances one decision interval.
    pub fn step(&mut self, choices: &[PhaseId]) -> Result<(), SimError> {
        self.step_with(choices, |_| {})
    }

    /// [`Simulation::step`], calling `on_tick` after every tick.
    pub fn step_with(&mut self, choices: &[PhaseId], mut on_tick: impl FnMut(&Self)) -> Result<(), SimError> {
        if self.is_finished() {
            return Err(SimError::Finished);
        }
        if !self.clock.is_multiple_of(self.config.decision_interval) {
            return Err(SimError::Misaligned(self.clock));
        }
        if let Some(missing) = self.network.junctions().get(choices.len()) {
            return Err(SimError::MissingChoice(missing.intersection));
        }
        for (j, (signal, &phase)) in self.signals.iter_mut().zip(choices).enumerate() {
            let transitioned = signal.active != Some(phase);
            if transitioned {
                signal.active = Some(phase);
                signal.blank_for = self.config.transition();
            }
            self.phase_log.push(PhaseRecord {
                t: self.clock,
                intersection: self.network.junctions()[j].intersection,
                phase,
                transitioned,
            });
        }
        for _ in 0..self.config.decision_interval {
            self.tick();
            on_tick(self);
        }
        Ok(())
    }

    fn tick(&mut self) {
        let now = self.clock;
        self.spawn_vehicles();
        let t = f64::from(now);
        for lane in &mut self.lanes {
            while let Some(&(v, eta)) = lane.running.front() {
                if eta > t {
                    break;
                }
                lane.running.pop_front();
                lane.queued.push_back(v);
            }
        }
        for l in 0..self.lanes.len() {
            self.try_release(l);
        }
        for signal in &mut self.signals {
            signal.blank_for = signal.blank_for.saturating_sub(1);
        }
        self.clock += 1;
    }

    /// Creates the vehicles due at the current tick and moves backlogged
    /// vehicles onto their entry lane while it has room.
    pub fn spawn_vehicles(&mut self) {
        let now = f64::from(self.clock);
        for (r, rule) in self.flow.rules().iter().enumerate() {
            while let Some(t) = rule.departure(self.next_departure[r]) {
                if t > now {
                    break;
                }
                self.next_departure[r] += 1;
                let id = self.vehicles.len() as VehicleId;
                self.vehicles.push(Vehicle {
                    rule: r as u32,
                    cursor: 0,
                    entry_time: self.clock,
                    exit_time: None,
                });
                self.backlog[r].push_back(id);
            }
            let entry = self.route_lanes[r][0];
            while let Some(&v) = self.backlog[r].front() {
                if !self.has_room(entry) {
                    break;
                }
                self.backlog[r].pop_front();
                self.enter_lane(v, entry);
            }
        }
    }

    fn has_room(&self, lane: LaneId) -> bool {
        self.lanes[lane.index()].occupancy() < self.network.lane(lane).capacity as usize
    }

    fn enter_lane(&mut self, v: VehicleId, lane: LaneId) {
        let eta = f64::from(self.clock) + self.network.lane(lane).travel_time();
        self.lanes[lane.index()].running.push_back((v, eta));
    }

    fn permitted(&self, lane: usize) -> bool {
        match self.gates[lane] {
            Gate::Free => true,
            Gate::Signal(j) => {
                let signal = &self.signals[j as usize];
                signal.blank_for == 0
                    && signal.active.is_some_and(|p| {
                        self.network.junctions()[j as usize]
                            .phase(p)
                            .releases(LaneId(lane as u32))
                    })
            }
        }
    }

    fn try_release(&mut self, lane: usize) {
        let Some(&v) = self.lanes[lane].queued.front() else {
            return;
        };
        if let Some(last) = self.lanes[lane].last_release {
            if f64::from(self.clock - last) < self.config.saturation_headway {
                return;
            }
        }
        if !self.permitted(lane) {
            return;
        }
        let vehicle = self.vehicles[v as usize];
        let route = &self.route_lanes[vehicle.rule as usize];
        let next = vehicle.cursor as usize + 1;
        match route.get(next).copied() {
            None => {
                self.lanes[lane].queued.pop_front();
                self.vehicles[v as usize].exit_time = Some(self.clock);
                self.exited += 1;
            }
            Some(dest) => {
                if !self.has_room(dest) {
                    return;
                }
                self.lanes[lane].queued.pop_front();
                self.vehicles[v as usize].cursor += 1;
                self.enter_lane(v, dest);
            }
        }
        self.lanes[lane].last_release = Some(self.clock);
    }

    pub fn finish(self) -> EpisodeResult {
        let duration = self.clock;
        let trips: Vec<VehicleTrip> = self
            .vehicles
            .iter()
            .map(|v| VehicleTrip {
                entry_time: v.entry_time,
                exit_time: v.exit_time,
            })
            .collect();
        EpisodeResult {
            duration,
            average_travel_time: mean_travel_time(&trips, duration),
            spawned: trips.len(),
            exited: self.exited,
            trips,
            phase_log: self.phase_log,
        }
    }
}

impl LaneCounts for Simulation<'_> {
    fn waiting(&self, lane: LaneId) -> u32 {
        self.lanes[lane.index()].queued.len() as u32
    }

    fn total(&self, lane: LaneId) -> u32 {
        self.lanes[lane.index()].occupancy() as u32
    }
}

/// Runs a full episode: at every decision epoch each junction asks
/// `controller` for a phase, then the simulation advances one interval.
pub fn run_episode(
    network: &RoadNetwork,
    flow: &FlowSpec,
    controller: &dyn Controller,
    config: SimConfig,
) -> Result<EpisodeResult, SimError> {
    let mut sim = Simulation::new(network, flow, config)?;
    while !sim.is_finished() {
        let choices = sim.decide(controller);
        sim.step(&choices)?;
    }
    Ok(sim.finish())
}
