//! JSON road network / flow files and episode log writers.
//!
//! The road network and flow schemas are a subset of the public CityFlow
//! conventions. Unknown fields are ignored, so CityFlow files work once every
//! road carries a `length` and exactly three lanes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tsc_core::network::{FlowError, IntersectionSpec, NetworkError, RoadSpec};
use tsc_core::sim::EpisodeResult;
use tsc_core::{FlowSpec, RoadNetwork};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: invalid road network")]
    Validation {
        path: PathBuf,
        #[source]
        source: NetworkError,
    },
    #[error("{path}: invalid route")]
    Route {
        path: PathBuf,
        #[source]
        source: FlowError,
    },
    #[error("CSV error on {path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl FormatError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionJson {
    pub id: String,
    pub point: Point,
    #[serde(default)]
    pub roads: Vec<String>,
    #[serde(rename = "virtual", default)]
    pub is_virtual: bool,
}

/// `lanes` is a count here; CityFlow files list one object per lane instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LaneField {
    Count(usize),
    List(Vec<serde_json::Value>),
}

impl LaneField {
    fn count(&self) -> usize {
        match self {
            LaneField::Count(n) => *n,
            LaneField::List(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoadJson {
    pub id: String,
    pub start_intersection: String,
    pub end_intersection: String,
    pub length: f64,
    pub max_speed: f64,
    pub lanes: LaneField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadnetJson {
    pub intersections: Vec<IntersectionJson>,
    pub roads: Vec<RoadJson>,
}

impl RoadnetJson {
    pub fn from_network(net: &RoadNetwork) -> Self {
        let intersections = net
            .intersections()
            .iter()
            .map(|n| IntersectionJson {
                id: n.name.clone(),
                point: Point { x: n.x, y: n.y },
                roads: n.roads.iter().map(|r| net.road(*r).name.clone()).collect(),
                is_virtual: n.is_virtual,
            })
            .collect();
        let roads = net
            .roads()
            .iter()
            .map(|r| RoadJson {
                id: r.name.clone(),
                start_intersection: net.intersection(r.start).name.clone(),
                end_intersection: net.intersection(r.end).name.clone(),
                length: r.length,
                max_speed: r.max_speed,
                lanes: LaneField::Count(r.lanes.len()),
            })
            .collect();
        RoadnetJson { intersections, roads }
    }

    pub fn into_network(self) -> Result<RoadNetwork, NetworkError> {
        let nodes = self
            .intersections
            .into_iter()
            .map(|n| IntersectionSpec {
                id: n.id,
                x: n.point.x,
                y: n.point.y,
                roads: n.roads,
                is_virtual: n.is_virtual,
            })
            .collect();
        let roads = self
            .roads
            .into_iter()
            .map(|r| RoadSpec {
                lanes: r.lanes.count(),
                id: r.id,
                start: r.start_intersection,
                end: r.end_intersection,
                length: r.length,
                max_speed: r.max_speed,
            })
            .collect();
        RoadNetwork::from_specs(nodes, roads)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowRuleJson {
    pub route: Vec<String>,
    pub start_time: f64,
    pub end_time: f64,
    pub interval: f64,
}

pub fn flow_to_json(net: &RoadNetwork, flow: &FlowSpec) -> Vec<FlowRuleJson> {
    flow.rules()
        .iter()
        .map(|r| FlowRuleJson {
            route: r.route.iter().map(|id| net.road(*id).name.clone()).collect(),
            start_time: r.start,
            end_time: r.end,
            interval: r.interval,
        })
        .collect()
}

pub fn flow_from_json(net: &RoadNetwork, rules: Vec<FlowRuleJson>) -> Result<FlowSpec, FlowError> {
    FlowSpec::from_named(
        net,
        rules
            .into_iter()
            .map(|r| (r.route, r.start_time, r.end_time, r.interval)),
    )
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| FormatError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_roadnet(path: impl AsRef<Path>) -> Result<RoadNetwork, FormatError> {
    let path = path.as_ref();
    let json: RoadnetJson = read_json(path)?;
    json.into_network().map_err(|source| FormatError::Validation {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_flow(path: impl AsRef<Path>, net: &RoadNetwork) -> Result<FlowSpec, FormatError> {
    let path = path.as_ref();
    let rules: Vec<FlowRuleJson> = read_json(path)?;
    flow_from_json(net, rules).map_err(|source| FormatError::Route {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), FormatError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| FormatError::io(path, e))
}

pub fn write_roadnet(path: impl AsRef<Path>, net: &RoadNetwork) -> Result<(), FormatError> {
    write_json(path, &RoadnetJson::from_network(net))
}

pub fn write_flow(path: impl AsRef<Path>, net: &RoadNetwork, flow: &FlowSpec) -> Result<(), FormatError> {
    write_json(path, &flow_to_json(net, flow))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub id: usize,
    pub entry_time: u32,
    pub exit_time: Option<u32>,
    pub travel_time: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub duration: u32,
    pub spawned: usize,
    pub exited: usize,
    pub average_travel_time: f64,
    pub vehicles: Vec<VehicleRecord>,
}

impl EpisodeLog {
    pub fn new(result: &EpisodeResult) -> Self {
        EpisodeLog {
            duration: result.duration,
            spawned: result.spawned,
            exited: result.exited,
            average_travel_time: result.average_travel_time,
            vehicles: result
                .trips
                .iter()
                .enumerate()
                .map(|(id, t)| VehicleRecord {
                    id,
                    entry_time: t.entry_time,
                    exit_time: t.exit_time,
                    travel_time: t.travel_time(result.duration),
                })
                .collect(),
        }
    }
}

/// Per-step phase log: `t,intersection,phase,transitioned`.
pub fn write_phase_log(path: impl AsRef<Path>, net: &RoadNetwork, result: &EpisodeResult) -> Result<(), FormatError> {
    let path = path.as_ref();
    let csv_err = |source| FormatError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "intersection", "phase", "transitioned"])
        .map_err(csv_err)?;
    for rec in &result.phase_log {
        w.write_record([
            rec.t.to_string(),
            net.intersection(rec.intersection).name.clone(),
            rec.phase.to_string(),
            rec.transitioned.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

/// Writes `text` followed by a newline.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<(), FormatError> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    writeln!(f, "{text}").map_err(|e| FormatError::io(path, e))
}
