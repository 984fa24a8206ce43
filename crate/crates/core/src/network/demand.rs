use alloc::vec::Vec;

use super::{Compass, FlowError, FlowRule, FlowSpec, RoadId, RoadNetwork, Turn};

/// Synthetic boundary-to-boundary demand, keyed by the side of the first
/// signalized intersection a vehicle enters from. `None` disables a stream.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandSpec {
    /// Seconds between vehicles driving straight across the network.
    pub through_interval: [Option<f64>; 4],
    /// Seconds between turning vehicles per entry road. Each turning stream is
    /// split evenly over the left and right turns at every intersection along
    /// the straight path.
    pub turn_interval: [Option<f64>; 4],
    pub start: f64,
    pub end: f64,
}

impl DemandSpec {
    pub fn uniform(through: f64, turn: f64, end: f64) -> Self {
        DemandSpec {
            through_interval: [Some(through); 4],
            turn_interval: [Some(turn); 4],
            start: 0.0,
            end,
        }
    }
}

/// Follows `first` straight through the network, optionally turning at the
/// `turn_at`-th signalized intersection, until it reaches a boundary node.
fn straight_route(network: &RoadNetwork, first: RoadId, turn_at: Option<(usize, Turn)>) -> Vec<RoadId> {
    let mut route = alloc::vec![first];
    let mut crossed = 0;
    while route.len() <= network.roads().len() {
        let current = *route.last().unwrap();
        let Some(junction) = network.junction(network.road(current).end) else {
            break;
        };
        let side = network
            .approach_side(junction, current)
            .expect("road ends at this junction");
        let turn = match turn_at {
            Some((k, t)) if k == crossed => t,
            _ => Turn::Through,
        };
        route.push(junction.exit_road(side, turn));
        crossed += 1;
    }
    route
}

/// Demand entering on every road that leads from a boundary node into a
/// signalized intersection. Works on any network produced by
/// [`generate_grid`](super::generate_grid) or loaded from file.
pub fn boundary_demand(network: &RoadNetwork, spec: &DemandSpec) -> Result<FlowSpec, FlowError> {
    let mut rules = Vec::new();
    for (r, road) in network.roads().iter().enumerate() {
        let entry = RoadId(r as u32);
        if !network.intersection(road.start).is_virtual {
            continue;
        }
        let Some(junction) = network.junction(road.end) else {
            continue;
        };
        let side: Compass = network
            .approach_side(junction, entry)
            .expect("entry road arrives at junction");
        let rule = |route, interval| FlowRule {
            route,
            start: spec.start,
            end: spec.end,
            interval,
        };
        if let Some(interval) = spec.through_interval[side.index()] {
            rules.push(rule(straight_route(network, entry, None), interval));
        }
        if let Some(interval) = spec.turn_interval[side.index()] {
            let crossings = straight_route(network, entry, None).len() - 1;
            let per_stream = interval * (2 * crossings) as f64;
            for k in 0..crossings {
                for turn in [Turn::Left, Turn::Right] {
                    rules.push(rule(straight_route(network, entry, Some((k, turn))), per_stream));
                }
            }
        }
    }
    FlowSpec::new(network, rules)
}
