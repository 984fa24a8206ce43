//! Traffic signal control with evolved urgency functions.
//!
//! Every signalized intersection picks, once per decision interval, the phase
//! whose urgency is highest. Urgency is an expression tree over 16 per-phase lane
//! counts, evolved by genetic programming against a deterministic point-queue
//! simulator. Fixed-Time and Max-Pressure controllers are provided as baselines.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! experiment orchestration live in the `tsc-lab` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod controllers;
pub mod features;
pub mod gp;
pub mod network;
pub mod sim;

pub use controllers::{
    fixed_time_select, max_pressure_select, mp_as_tree, urgency_select, Controller, ControllerError, FixedTime,
    MaxPressure, Urgency,
};
pub use features::{extract_features, FeatureError, FeatureVector, LaneCounts, LaneSnapshot, NUM_FEATURES};
pub use gp::{
    evolve, evolve_with, ramped_half_and_half, simplify, subtree_crossover, subtree_mutation, terminal_frequencies,
    tournament_select, EvolutionConfig, EvolutionTrace, ExprTree, Op,
};
pub use network::{
    generate_grid, Compass, FlowRule, FlowSpec, IntersectionId, Junction, LaneId, Movement, NetworkError, PhaseDef,
    PhaseId, RoadId, RoadNetwork, Turn,
};
pub use sim::{average_travel_time, run_episode, EpisodeResult, SimConfig, SimError, Simulation};
