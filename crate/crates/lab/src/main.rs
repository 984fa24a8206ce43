use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tsc_core::network::boundary_demand;
use tsc_core::{generate_grid, run_episode, simplify, ExprTree};
use tsc_lab::config::{parse_tree, DemandSettings};
use tsc_lab::experiment::{run_benchmark, write_comparison_csv, Instance, RunReport};
use tsc_lab::formats::{self, EpisodeLog};
use tsc_lab::{analyze_terminals, run_experiment, ControllerSpec, ExperimentConfig, InstanceSpec};

#[derive(Parser)]
#[command(
    name = "tsclab",
    version,
    about = "Evolve and benchmark urgency-function traffic signal controllers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode with one controller.
    Simulate {
        #[command(flatten)]
        instance: InstanceArgs,
        /// `fixed`, `mp`, an S-expression, or a .sexp file.
        #[arg(long, default_value = "mp")]
        controller: String,
        /// Writes episode.json and phase_log.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a GP campaign described by a config file.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark baselines and stored trees, one episode each.
    Bench {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Repeatable; defaults to `fixed` and `mp`.
        #[arg(long)]
        controller: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Terminal frequencies and simplified forms of stored trees.
    Analyze {
        /// .sexp files, or directories searched for best_tree_run*.sexp.
        #[arg(required = true)]
        trees: Vec<PathBuf>,
        /// Writes terminals.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic grid instance (roadnet.json, flow.json).
    GenGrid {
        #[arg(long, default_value_t = 1)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        cols: usize,
        #[arg(long, default_value_t = 300.0)]
        road_length: f64,
        #[arg(long, default_value_t = 10.0)]
        speed: f64,
        /// Straight-through headways for N,E,S,W entries (seconds, 0 disables).
        #[arg(long, value_delimiter = ',', num_args = 4)]
        through: Option<Vec<f64>>,
        /// Turning headways for N,E,S,W entries (seconds, 0 disables).
        #[arg(long, value_delimiter = ',', num_args = 4)]
        turn: Option<Vec<f64>>,
        #[arg(long, default_value_t = 3600.0)]
        demand_end: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Either a config file or an explicit roadnet/flow pair.
#[derive(Args)]
struct InstanceArgs {
    #[arg(long, conflicts_with_all = ["roadnet", "flow"])]
    config: Option<PathBuf>,
    #[arg(long, requires = "flow")]
    roadnet: Option<PathBuf>,
    #[arg(long, requires = "roadnet")]
    flow: Option<PathBuf>,
}

impl InstanceArgs {
    fn resolve(&self) -> Result<(ExperimentConfig, Instance)> {
        let config = match (&self.config, &self.roadnet, &self.flow) {
            (Some(c), ..) => ExperimentConfig::load(c)?,
            (None, Some(roadnet), Some(flow)) => ExperimentConfig::new(InstanceSpec::Files {
                roadnet: roadnet.clone(),
                flow: flow.clone(),
                heldout_flow: None,
            }),
            _ => bail!("give --config or both --roadnet and --flow"),
        };
        let instance = Instance::load(&config.instance)?;
        Ok((config, instance))
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Simulate {
            instance,
            controller,
            out,
        } => simulate(&instance, &controller, out.as_deref()),
        Command::Evolve {
            config,
            seed,
            runs,
            out,
        } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                config.base_seed = s;
            }
            if let Some(r) = runs {
                config.runs = r;
            }
            if let Some(o) = out {
                config.out = o;
            }
            let report = run_experiment(&config)?;
            print_report(&report);
            println!("outputs in {}", config.out.display());
            Ok(())
        }
        Command::Bench {
            instance,
            controller,
            out,
        } => bench(&instance, &controller, out.as_deref()),
        Command::Analyze { trees, out } => analyze(&trees, out.as_deref()),
        Command::GenGrid {
            rows,
            cols,
            road_length,
            speed,
            through,
            turn,
            demand_end,
            out,
        } => {
            let defaults = DemandSettings::default();
            let headways = |v: Option<Vec<f64>>, d: [Option<f64>; 4]| {
                v.map_or(d, |v| std::array::from_fn(|i| (v[i] > 0.0).then_some(v[i])))
            };
            let demand = DemandSettings {
                through_interval: headways(through, defaults.through_interval),
                turn_interval: headways(turn, defaults.turn_interval),
                start: 0.0,
                end: demand_end,
            };
            let net = generate_grid(rows, cols, road_length, speed);
            let flow = boundary_demand(&net, &demand.to_spec())?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            formats::write_roadnet(out.join("roadnet.json"), &net)?;
            formats::write_flow(out.join("flow.json"), &net, &flow)?;
            println!(
                "{} intersections, {} roads, {} flow rules",
                net.junctions().len(),
                net.roads().len(),
                flow.rules().len()
            );
            Ok(())
        }
    }
}

fn simulate(args: &InstanceArgs, controller: &str, out: Option<&Path>) -> Result<()> {
    let (config, instance) = args.resolve()?;
    let sim = config.sim.to_config();
    let spec = ControllerSpec::from_cli(controller)?;
    let c = spec.build(&sim)?;
    let result = run_episode(&instance.network, &instance.flow, &*c, sim)?;
    println!(
        "{}: {} vehicles, {} exited, average travel time {:.3} s",
        spec.label(),
        result.spawned,
        result.exited,
        result.average_travel_time
    );
    if let Some(out) = out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        formats::write_json(out.join("episode.json"), &EpisodeLog::new(&result))?;
        formats::write_phase_log(out.join("phase_log.csv"), &instance.network, &result)?;
    }
    Ok(())
}

fn bench(args: &InstanceArgs, controllers: &[String], out: Option<&Path>) -> Result<()> {
    let (config, instance) = args.resolve()?;
    let sim = config.sim.to_config();
    let specs = if controllers.is_empty() {
        config.controllers.clone()
    } else {
        controllers
            .iter()
            .map(|c| ControllerSpec::from_cli(c))
            .collect::<Result<_, _>>()?
    };
    let built = specs
        .iter()
        .map(|s| Ok((s.label(), s.build(&sim)?)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<_> = built
        .iter()
        .map(|(n, c)| (n.clone(), &**c as &(dyn tsc_core::Controller + Sync)))
        .collect();
    let methods = run_benchmark(&instance, sim, &refs)?;
    let report = RunReport {
        instance: instance.name.clone(),
        status: "complete".into(),
        base_seed: config.base_seed,
        seeds: Vec::new(),
        methods,
        gaps: Vec::new(),
        gp_runs: Vec::new(),
        traces: Vec::new(),
    };
    print_report(&report);
    if let Some(out) = out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        formats::write_json(out.join("bench.json"), &report)?;
        write_comparison_csv(&out.join("comparison.csv"), &report)?;
    }
    Ok(())
}

fn collect_trees(paths: &[PathBuf]) -> Result<Vec<(PathBuf, ExprTree)>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("best_tree_run") && n.ends_with(".sexp"))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    files
        .into_iter()
        .map(|f| {
            let text = fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?;
            let tree = parse_tree(&text).with_context(|| format!("parsing {}", f.display()))?;
            Ok((f, tree))
        })
        .collect()
}

fn analyze(paths: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let trees = collect_trees(paths)?;
    for (path, tree) in &trees {
        let s = simplify(tree);
        println!(
            "{}: {} nodes, depth {} -> {} nodes: {s}",
            path.display(),
            tree.len(),
            tree.depth(),
            s.len()
        );
    }
    let only: Vec<ExprTree> = trees.into_iter().map(|(_, t)| t).collect();
    let report = analyze_terminals(&only)?;
    print!("{}", report.to_csv());
    println!("top terminals: x{} x{}", report.top2[0], report.top2[1]);
    if let Some(out) = out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        fs::write(out.join("terminals.csv"), report.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn print_report(report: &RunReport) {
    println!("{}", report.instance);
    println!("{:<28} {:>12} {:>12} {:>10}", "method", "min", "mean", "std");
    for m in &report.methods {
        println!("{:<28} {:>12.3} {:>12.3} {:>10.3}", m.method, m.min, m.mean, m.std);
    }
}
