//! JSON experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tsc_core::network::DemandSpec;
use tsc_core::{
    Controller, ControllerError, EvolutionConfig, ExprTree, FixedTime, MaxPressure, PhaseId, SimConfig, Urgency,
};

use crate::formats::FormatError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("bad urgency tree {text:?}")]
    Tree {
        text: String,
        #[source]
        source: tsc_core::gp::TreeError,
    },
}

/// Seconds between vehicles per entry side (N, E, S, W); `null` disables a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSettings {
    pub through_interval: [Option<f64>; 4],
    pub turn_interval: [Option<f64>; 4],
    #[serde(default)]
    pub start: f64,
    #[serde(default = "default_end")]
    pub end: f64,
}

fn default_end() -> f64 {
    3600.0
}

impl Default for DemandSettings {
    /// North-south heavier than east-west, about 1 in 4 vehicles turning.
    fn default() -> Self {
        DemandSettings {
            through_interval: [Some(6.0), Some(12.0), Some(6.0), Some(12.0)],
            turn_interval: [Some(20.0), Some(40.0), Some(20.0), Some(40.0)],
            start: 0.0,
            end: default_end(),
        }
    }
}

impl DemandSettings {
    pub fn to_spec(&self) -> DemandSpec {
        DemandSpec {
            through_interval: self.through_interval,
            turn_interval: self.turn_interval,
            start: self.start,
            end: self.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_road_length")]
    pub road_length: f64,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default)]
    pub demand: DemandSettings,
    #[serde(default)]
    pub heldout_demand: Option<DemandSettings>,
}

fn default_road_length() -> f64 {
    300.0
}

fn default_speed() -> f64 {
    10.0
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        GridSpec {
            rows,
            cols,
            road_length: default_road_length(),
            speed: default_speed(),
            demand: DemandSettings::default(),
            heldout_demand: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum InstanceSpec {
    Files {
        roadnet: PathBuf,
        flow: PathBuf,
        #[serde(default)]
        heldout_flow: Option<PathBuf>,
    },
    Grid(GridSpec),
}

impl InstanceSpec {
    pub fn name(&self) -> String {
        match self {
            // parent directory plus file stem, e.g. `ny/flow`
            InstanceSpec::Files { flow, .. } => {
                let stem = flow.file_stem().map_or_else(|| "flow".into(), |s| s.to_string_lossy());
                match flow.parent().and_then(Path::file_name) {
                    Some(dir) => format!("{}/{stem}", dir.to_string_lossy()),
                    None => stem.into_owned(),
                }
            }
            InstanceSpec::Grid(g) => format!("grid_{}x{}", g.rows, g.cols),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let InstanceSpec::Files {
            roadnet,
            flow,
            heldout_flow,
        } = self
        {
            for p in [Some(roadnet), Some(flow), heldout_flow.as_mut()].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub decision_interval: u32,
    pub yellow: u32,
    pub all_red: u32,
    pub duration: u32,
    pub saturation_headway: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        let c = SimConfig::default();
        SimSettings {
            decision_interval: c.decision_interval,
            yellow: c.yellow,
            all_red: c.all_red,
            duration: c.duration,
            saturation_headway: c.saturation_headway,
        }
    }
}

impl SimSettings {
    pub fn to_config(&self) -> SimConfig {
        SimConfig {
            decision_interval: self.decision_interval,
            yellow: self.yellow,
            all_red: self.all_red,
            tick: 1,
            duration: self.duration,
            saturation_headway: self.saturation_headway,
        }
    }
}

/// Evolution parameters; the seed comes from the campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSettings {
    pub population_size: usize,
    pub generations: usize,
    pub init_min_depth: usize,
    pub max_depth: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        let c = EvolutionConfig::default();
        EvolutionSettings {
            population_size: c.population_size,
            generations: c.generations,
            init_min_depth: c.init_min_depth,
            max_depth: c.max_depth,
            tournament_size: c.tournament_size,
            crossover_rate: c.crossover_rate,
            mutation_rate: c.mutation_rate,
        }
    }
}

impl EvolutionSettings {
    pub fn to_config(&self, seed: u64) -> EvolutionConfig {
        EvolutionConfig {
            population_size: self.population_size,
            generations: self.generations,
            init_min_depth: self.init_min_depth,
            max_depth: self.max_depth,
            tournament_size: self.tournament_size,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSpec {
    /// `(phase, seconds)` pairs cycled at every junction.
    Fixed {
        #[serde(default = "default_schedule")]
        schedule: Vec<(u8, u32)>,
    },
    MaxPressure,
    Urgency {
        tree: String,
        #[serde(default)]
        name: Option<String>,
    },
}

fn default_schedule() -> Vec<(u8, u32)> {
    (1..=4).map(|p| (p, 30)).collect()
}

pub type BoxedController = Box<dyn Controller + Send + Sync>;

impl ControllerSpec {
    pub fn label(&self) -> String {
        match self {
            ControllerSpec::Fixed { .. } => "Fixed-Time".into(),
            ControllerSpec::MaxPressure => "MP".into(),
            ControllerSpec::Urgency { name: Some(n), .. } => n.clone(),
            ControllerSpec::Urgency { tree, .. } => format!("urgency {tree}"),
        }
    }

    pub fn build(&self, sim: &SimConfig) -> Result<BoxedController, ConfigError> {
        Ok(match self {
            ControllerSpec::Fixed { schedule } => {
                let plan = schedule
                    .iter()
                    .map(|&(p, d)| {
                        PhaseId::new(p)
                            .map(|p| (p, d))
                            .ok_or_else(|| ConfigError::Invalid(format!("phase {p} is outside 1..=8")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Box::new(FixedTime::new(plan, sim.decision_interval)?)
            }
            ControllerSpec::MaxPressure => Box::new(MaxPressure),
            ControllerSpec::Urgency { tree, .. } => Box::new(Urgency(parse_tree(tree)?)),
        })
    }

    /// `fixed`, `mp` / `max_pressure`, an S-expression, or a path to a file holding one.
    pub fn from_cli(arg: &str) -> Result<Self, ConfigError> {
        match arg {
            "fixed" | "fixed_time" => {
                return Ok(ControllerSpec::Fixed {
                    schedule: default_schedule(),
                })
            }
            "mp" | "max_pressure" => return Ok(ControllerSpec::MaxPressure),
            _ => {}
        }
        let path = Path::new(arg);
        let (tree, name) = if path.is_file() {
            let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
            (
                text.trim().to_string(),
                path.file_stem().map(|s| s.to_string_lossy().into_owned()),
            )
        } else {
            (arg.trim().to_string(), None)
        };
        parse_tree(&tree)?;
        Ok(ControllerSpec::Urgency { tree, name })
    }
}

pub fn parse_tree(text: &str) -> Result<ExprTree, ConfigError> {
    text.trim().parse().map_err(|source| ConfigError::Tree {
        text: text.to_string(),
        source,
    })
}

fn default_runs() -> usize {
    10
}

fn default_controllers() -> Vec<ControllerSpec> {
    vec![
        ControllerSpec::Fixed {
            schedule: default_schedule(),
        },
        ControllerSpec::MaxPressure,
    ]
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub sim: SimSettings,
    #[serde(default)]
    pub evolution: EvolutionSettings,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Run `r` evolves with seed `base_seed + r`.
    #[serde(default)]
    pub base_seed: u64,
    /// Baselines and stored trees benchmarked next to the evolved rules.
    #[serde(default = "default_controllers")]
    pub controllers: Vec<ControllerSpec>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads for fitness evaluation; `None` uses every core.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSpec) -> Self {
        ExperimentConfig {
            instance,
            sim: SimSettings::default(),
            evolution: EvolutionSettings::default(),
            runs: default_runs(),
            base_seed: 0,
            controllers: default_controllers(),
            out: default_out(),
            threads: None,
        }
    }

    /// Reads a config file. Relative instance paths are taken relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(|source| FormatError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        config.instance.resolve(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|r| self.base_seed + r).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError::Invalid("runs must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::Invalid("threads must be positive".into()));
        }
        self.sim
            .to_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.evolution
            .to_config(0)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.into()))?;
        let sim = self.sim.to_config();
        for c in &self.controllers {
            c.build(&sim)?;
        }
        Ok(())
    }
}
