use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::{RoadId, RoadNetwork};

/// Periodic vehicle source: one vehicle at every `start + k * interval <= end`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowRule {
    pub route: Vec<RoadId>,
    pub start: f64,
    pub end: f64,
    pub interval: f64,
}

impl FlowRule {
    /// Scheduled departure of the `k`-th vehicle, if it is within the rule's window.
    pub fn departure(&self, k: u64) -> Option<f64> {
        let t = self.start + k as f64 * self.interval;
        (t <= self.end).then_some(t)
    }

    pub fn departures(&self) -> impl Iterator<Item = f64> + '_ {
        (0u64..).map_while(|k| self.departure(k))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("flow rule {rule}: unknown road `{road}`")]
    UnknownRoad { rule: usize, road: String },
    #[error("flow rule {rule}: empty route")]
    EmptyRoute { rule: usize },
    #[error("flow rule {rule}: road {position} of the route does not continue from the previous one")]
    NonContiguous { rule: usize, position: usize },
    #[error("flow rule {rule}: U-turn at route position {position}")]
    UTurn { rule: usize, position: usize },
    #[error("flow rule {rule}: interval must be positive and start <= end")]
    Timing { rule: usize },
}

/// Validated demand: every route is a contiguous road sequence without U-turns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowSpec {
    rules: Vec<FlowRule>,
}

impl FlowSpec {
    pub fn new(network: &RoadNetwork, rules: Vec<FlowRule>) -> Result<Self, FlowError> {
        for (i, rule) in rules.iter().enumerate() {
            validate_rule(network, i, rule)?;
        }
        Ok(FlowSpec { rules })
    }

    /// Resolves road names and validates. `rules` holds `(route, start, end, interval)`.
    pub fn from_named<S: AsRef<str>>(
        network: &RoadNetwork,
        rules: impl IntoIterator<Item = (Vec<S>, f64, f64, f64)>,
    ) -> Result<Self, FlowError> {
        let mut resolved = Vec::new();
        for (rule, (names, start, end, interval)) in rules.into_iter().enumerate() {
            let route = names
                .iter()
                .map(|n| {
                    network.road_by_name(n.as_ref()).ok_or_else(|| FlowError::UnknownRoad {
                        rule,
                        road: n.as_ref().into(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            resolved.push(FlowRule {
                route,
                start,
                end,
                interval,
            });
        }
        Self::new(network, resolved)
    }

    pub fn rules(&self) -> &[FlowRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

fn validate_rule(network: &RoadNetwork, rule: usize, r: &FlowRule) -> Result<(), FlowError> {
    let timing_ok =
        r.interval.is_finite() && r.interval > 0.0 && r.start.is_finite() && r.end.is_finite() && r.start <= r.end;
    if !timing_ok {
        return Err(FlowError::Timing { rule });
    }
    if r.route.is_empty() {
        return Err(FlowError::EmptyRoute { rule });
    }
    if let Some(&bad) = r.route.iter().find(|id| id.index() >= network.roads().len()) {
        return Err(FlowError::UnknownRoad {
            rule,
            road: alloc::format!("#{}", bad.0),
        });
    }
    for (position, pair) in r.route.windows(2).enumerate() {
        let (a, b) = (network.road(pair[0]), network.road(pair[1]));
        if a.end != b.start {
            return Err(FlowError::NonContiguous {
                rule,
                position: position + 1,
            });
        }
        if network.turn_between(pair[0], pair[1]).is_none() {
            return Err(FlowError::UTurn {
                rule,
                position: position + 1,
            });
        }
    }
    Ok(())
}
