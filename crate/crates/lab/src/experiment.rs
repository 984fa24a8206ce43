//! Multi-run evolution campaigns and baseline benchmarking.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;
use tsc_core::gp::{evolve_with, EvolveError};
use tsc_core::network::boundary_demand;
use tsc_core::{
    generate_grid, run_episode, simplify, Controller, EvolutionConfig, EvolutionTrace, ExprTree, FlowSpec, RoadNetwork,
    SimConfig, SimError, Urgency,
};

use crate::config::{ConfigError, ExperimentConfig, InstanceSpec};
use crate::formats::{self, FormatError};

/// Label of the evolved method in reports.
pub const GP_METHOD: &str = "GPLight";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("simulation failed")]
    Sim(#[from] SimError),
    #[error("evolution run {run} failed")]
    Evolve {
        run: usize,
        #[source]
        source: EvolveError<SimError>,
    },
    #[error("invalid demand")]
    Demand(#[from] tsc_core::network::FlowError),
    #[error("thread pool")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Error, PartialEq)]
#[error("gap reference must be positive, got {0}")]
pub struct DomainError(pub f64);

/// Percentage by which `f_other` exceeds `f_reference`, rounded to 2 decimals.
pub fn compute_gap(f_other: f64, f_reference: f64) -> Result<f64, DomainError> {
    if f_reference.is_nan() || f_reference <= 0.0 || !f_other.is_finite() {
        return Err(DomainError(f_reference));
    }
    Ok(round2(100.0 * (f_other - f_reference) / f_reference))
}

pub fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    // avoid printing -0.0
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub struct Instance {
    pub name: String,
    pub network: RoadNetwork,
    pub flow: FlowSpec,
    pub heldout: Option<FlowSpec>,
}

impl Instance {
    pub fn load(spec: &InstanceSpec) -> Result<Self, ExperimentError> {
        let name = spec.name();
        Ok(match spec {
            InstanceSpec::Files {
                roadnet,
                flow,
                heldout_flow,
            } => {
                let network = formats::load_roadnet(roadnet)?;
                let flow = formats::load_flow(flow, &network)?;
                let heldout = heldout_flow
                    .as_ref()
                    .map(|p| formats::load_flow(p, &network))
                    .transpose()?;
                Instance {
                    name,
                    network,
                    flow,
                    heldout,
                }
            }
            InstanceSpec::Grid(g) => {
                let network = generate_grid(g.rows, g.cols, g.road_length, g.speed);
                let flow = boundary_demand(&network, &g.demand.to_spec())?;
                let heldout = g
                    .heldout_demand
                    .as_ref()
                    .map(|d| boundary_demand(&network, &d.to_spec()))
                    .transpose()?;
                Instance {
                    name,
                    network,
                    flow,
                    heldout,
                }
            }
        })
    }
}

/// Average travel time of one deterministic episode per tree, computed in
/// parallel on the current rayon pool and returned in input order.
pub fn evaluate_batch(
    network: &RoadNetwork,
    flow: &FlowSpec,
    sim: SimConfig,
    trees: &[ExprTree],
) -> Vec<Result<f64, SimError>> {
    trees
        .par_iter()
        .map(|t| run_episode(network, flow, &Urgency(t.clone()), sim).map(|r| r.average_travel_time))
        .collect()
}

/// One evolution run on `instance`, logging per-generation progress.
pub fn evolve_on(
    instance: &Instance,
    sim: SimConfig,
    config: &EvolutionConfig,
) -> Result<EvolutionTrace, EvolveError<SimError>> {
    evolve_with(
        config,
        |pop| evaluate_batch(&instance.network, &instance.flow, sim, pop),
        |g, _, fitness| {
            let best = fitness.iter().copied().fold(f64::INFINITY, f64::min);
            log::debug!("seed {} generation {g}: best {best:.3}", config.seed);
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub min: f64,
    pub mean: f64,
    /// Population standard deviation over runs.
    pub std: f64,
    pub values: Vec<f64>,
}

impl MethodSummary {
    pub fn from_values(method: impl Into<String>, values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MethodSummary {
            method: method.into(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            mean,
            std: var.sqrt(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEntry {
    pub method: String,
    pub reference: String,
    /// Percent by which `method`'s mean exceeds `reference`'s.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpRun {
    pub run: usize,
    pub seed: u64,
    pub best_tree: String,
    pub simplified_tree: String,
    pub best_generation: usize,
    pub best_fitness: f64,
    /// Travel time of the best tree replayed on the training flow.
    pub travel_time: f64,
    pub heldout_travel_time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub instance: String,
    /// `complete`, or the reason the campaign stopped early.
    pub status: String,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSummary>,
    pub gaps: Vec<GapEntry>,
    pub gp_runs: Vec<GpRun>,
    #[serde(skip)]
    pub traces: Vec<EvolutionTrace>,
}

impl RunReport {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == name)
    }

    pub fn is_complete(&self) -> bool {
        self.status == "complete"
    }

    fn fill_gaps(&mut self) {
        self.gaps.clear();
        for a in &self.methods {
            for b in &self.methods {
                if let Ok(gap) = compute_gap(a.mean, b.mean) {
                    self.gaps.push(GapEntry {
                        method: a.method.clone(),
                        reference: b.method.clone(),
                        gap,
                    });
                }
            }
        }
    }

    pub fn gap(&self, method: &str, reference: &str) -> Option<f64> {
        self.gaps
            .iter()
            .find(|g| g.method == method && g.reference == reference)
            .map(|g| g.gap)
    }
}

/// One episode per controller; all are deterministic so each yields std 0.
pub fn run_benchmark(
    instance: &Instance,
    sim: SimConfig,
    controllers: &[(String, &(dyn Controller + Sync))],
) -> Result<Vec<MethodSummary>, SimError> {
    controllers
        .par_iter()
        .map(|(name, c)| {
            let r = run_episode(&instance.network, &instance.flow, *c, sim)?;
            Ok(MethodSummary::from_values(name.clone(), vec![r.average_travel_time]))
        })
        .collect()
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, rayon::ThreadPoolBuildError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build()
}

/// Error of a campaign, with the report of the runs finished before it.
pub type CampaignFailure = (Option<Box<RunReport>>, ExperimentError);

/// Runs the campaign without touching the filesystem. Stops at the first
/// failed run and returns the partial report alongside the error.
pub fn run_campaign(config: &ExperimentConfig) -> Result<RunReport, CampaignFailure> {
    config.validate().map_err(|e| (None, e.into()))?;
    let instance = Instance::load(&config.instance).map_err(|e| (None, e))?;
    let sim = config.sim.to_config();
    let pool = pool(config.threads).map_err(|e| (None, e.into()))?;
    pool.install(|| campaign(config, &instance, sim))
}

fn campaign(config: &ExperimentConfig, instance: &Instance, sim: SimConfig) -> Result<RunReport, CampaignFailure> {
    let mut report = RunReport {
        instance: instance.name.clone(),
        status: "complete".into(),
        base_seed: config.base_seed,
        seeds: config.seeds(),
        methods: Vec::new(),
        gaps: Vec::new(),
        gp_runs: Vec::new(),
        traces: Vec::new(),
    };

    let built = config
        .controllers
        .iter()
        .map(|c| c.build(&sim).map(|b| (c.label(), b)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| (None, e.into()))?;
    let refs: Vec<(String, &(dyn Controller + Sync))> = built
        .iter()
        .map(|(n, c)| (n.clone(), &**c as &(dyn Controller + Sync)))
        .collect();
    let baselines = run_benchmark(instance, sim, &refs).map_err(|e| (None, e.into()))?;

    for (run, seed) in config.seeds().into_iter().enumerate() {
        log::info!("{}: run {run} (seed {seed})", instance.name);
        let evo = config.evolution.to_config(seed);
        let outcome = evolve_on(instance, sim, &evo)
            .map_err(|source| ExperimentError::Evolve { run, source })
            .and_then(|trace| {
                let replay = |flow| run_episode(&instance.network, flow, &Urgency(trace.best.clone()), sim);
                let travel_time = replay(&instance.flow)?.average_travel_time;
                let heldout_travel_time = instance
                    .heldout
                    .as_ref()
                    .map(replay)
                    .transpose()?
                    .map(|r| r.average_travel_time);
                Ok((trace, travel_time, heldout_travel_time))
            });
        let (trace, travel_time, heldout_travel_time) = match outcome {
            Ok(v) => v,
            Err(e) => {
                report.status = format!("failed at run {run}: {e}");
                report.methods = summarize(&report, baselines);
                report.fill_gaps();
                return Err((Some(Box::new(report)), e));
            }
        };
        log::info!(
            "{}: run {run} best {:.3} at generation {}",
            instance.name,
            trace.best_fitness,
            trace.best_generation
        );
        report.gp_runs.push(GpRun {
            run,
            seed,
            best_tree: trace.best.to_string(),
            simplified_tree: simplify(&trace.best).to_string(),
            best_generation: trace.best_generation,
            best_fitness: trace.best_fitness,
            travel_time,
            heldout_travel_time,
        });
        report.traces.push(trace);
    }
    report.methods = summarize(&report, baselines);
    report.fill_gaps();
    Ok(report)
}

fn summarize(report: &RunReport, baselines: Vec<MethodSummary>) -> Vec<MethodSummary> {
    let mut methods = Vec::new();
    if !report.gp_runs.is_empty() {
        methods.push(MethodSummary::from_values(
            GP_METHOD,
            report.gp_runs.iter().map(|r| r.travel_time).collect(),
        ));
    }
    methods.extend(baselines);
    methods
}

/// Runs the campaign and writes every output file under `config.out`. A
/// failed campaign still writes its partial report, with the failure in
/// `status`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    match run_campaign(config) {
        Ok(report) => {
            emit_plot_data(&config.out, &report)?;
            Ok(report)
        }
        Err((Some(partial), e)) => {
            emit_plot_data(&config.out, &partial)?;
            Err(e)
        }
        Err((None, e)) => Err(e),
    }
}

pub fn write_convergence_csv(path: &Path, trace: &EvolutionTrace) -> Result<(), FormatError> {
    let csv_err = |source| FormatError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["generation", "best", "mean", "std"]).map_err(csv_err)?;
    for g in &trace.generations {
        w.write_record([
            g.generation.to_string(),
            g.best.to_string(),
            g.mean.to_string(),
            g.std.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

/// `method,min,mean,std,gap_vs_gplight`; the gap is blank without a GP row.
pub fn write_comparison_csv(path: &Path, report: &RunReport) -> Result<(), FormatError> {
    let csv_err = |source| FormatError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["method", "min", "mean", "std", "gap_vs_gplight"])
        .map_err(csv_err)?;
    for m in &report.methods {
        let gap = report
            .gap(&m.method, GP_METHOD)
            .map(|g| format!("{g:.2}"))
            .unwrap_or_default();
        w.write_record([
            m.method.clone(),
            m.min.to_string(),
            m.mean.to_string(),
            m.std.to_string(),
            gap,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

pub fn convergence_path(out: &Path, run: usize) -> PathBuf {
    out.join(format!("convergence_run{run}.csv"))
}

pub fn best_tree_path(out: &Path, run: usize) -> PathBuf {
    out.join(format!("best_tree_run{run}.sexp"))
}

/// Writes report.json, comparison.csv and per-run convergence and best-tree files.
pub fn emit_plot_data(out: &Path, report: &RunReport) -> Result<(), FormatError> {
    fs::create_dir_all(out).map_err(|e| FormatError::io(out, e))?;
    formats::write_json(out.join("report.json"), report)?;
    write_comparison_csv(&out.join("comparison.csv"), report)?;
    for (run, trace) in report.gp_runs.iter().zip(&report.traces) {
        write_convergence_csv(&convergence_path(out, run.run), trace)?;
        formats::write_text(best_tree_path(out, run.run), &trace.best.to_string())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_examples() {
        assert_eq!(compute_gap(1277.48, 1227.3804), Ok(4.08));
        assert_eq!(compute_gap(1582.103, 1227.3804), Ok(28.9));
        assert_eq!(compute_gap(1335.7877, 1227.3804), Ok(8.83));
        assert_eq!(compute_gap(812.5, 812.5), Ok(0.0));
        assert_eq!(compute_gap(10.0, 0.0), Err(DomainError(0.0)));
        assert!(compute_gap(10.0, -1.0).is_err());
    }

    #[test]
    fn summary_statistics() {
        let s = MethodSummary::from_values("a", vec![2.0, 4.0]);
        assert_eq!((s.min, s.mean, s.std), (2.0, 3.0, 1.0));
        let one = MethodSummary::from_values("b", vec![7.5]);
        assert_eq!((one.min, one.mean, one.std), (7.5, 7.5, 0.0));
    }
}
