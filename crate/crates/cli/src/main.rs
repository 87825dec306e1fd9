//! `mtlight` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use mtlight::harness::export::{export_run, load_records, summarize};
use mtlight::harness::stats::phase_distribution;
use mtlight::harness::{
    ablation_suite, evaluate_controller, format_table, run_seed, ControllerKind, ExperimentConfig, FlowKind, Learner,
    Scenario, ScenarioConfig,
};
use mtlight::scenario::{save_flow, save_roadnet};

/// Environment variable naming the default output root.
const OUT_ENV: &str = "MTLIGHT_OUT";
const ROADNET_FILE: &str = "roadnet.json";
const FLOW_FILE: &str = "flow.json";

#[derive(Parser)]
#[command(name = "mtlight", version, about = "Traffic-signal control laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowArg {
    SyntheticPeak,
    Constant,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario directory (roadnet.json + flow.json), scenario config JSON
    /// file, or a grid size such as 4x4.
    #[arg(long, default_value = "4x4")]
    scenario: String,
    /// Flow program for grid scenarios.
    #[arg(long, value_enum, default_value = "synthetic-peak")]
    flow: FlowArg,
    /// Vehicles per second for the constant flow.
    #[arg(long, default_value_t = 0.5)]
    rate: f64,
    /// Episode length in seconds for grid scenarios.
    #[arg(long, default_value_t = 3600)]
    horizon: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Write a grid road network and its flow program.
    GenScenario {
        /// Grid size, e.g. 4x4.
        #[arg(long, default_value = "4x4")]
        grid: String,
        #[arg(long, value_enum, default_value = "synthetic-peak")]
        flow: FlowArg,
        #[arg(long, default_value_t = 0.5)]
        rate: f64,
        #[arg(long, default_value_t = 3600)]
        horizon: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one deterministic episode and print its average travel time.
    Simulate {
        #[arg(long)]
        controller: String,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory with trained policy checkpoints (learned controllers).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train (or run) the controller of an experiment config over its seeds.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the five ablation variants on shared seeds.
    Ablate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
        /// Comma-separated seeds.
        #[arg(long, default_value = "0,1,2", value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize an exported run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("grid size '{s}' must look like 4x4"))?;
    Ok((r.trim().parse().context("grid rows")?, c.trim().parse().context("grid columns")?))
}

fn flow_kind(flow: FlowArg, rate: f64) -> FlowKind {
    match flow {
        FlowArg::SyntheticPeak => FlowKind::SyntheticPeak,
        FlowArg::Constant => FlowKind::Constant { rate },
    }
}

fn grid_config(rows: usize, cols: usize, flow: FlowKind, horizon: u64) -> ScenarioConfig {
    match ScenarioConfig::grid(rows, cols, flow) {
        ScenarioConfig::Grid {
            rows,
            cols,
            flow,
            weighting,
            lane_length,
            lane_capacity,
            ..
        } => ScenarioConfig::Grid {
            rows,
            cols,
            flow,
            weighting,
            lane_length,
            lane_capacity,
            horizon,
        },
        other => other,
    }
}

fn scenario_config(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let path = Path::new(&args.scenario);
    if path.is_dir() {
        return Ok(ScenarioConfig::Files {
            roadnet: path.join(ROADNET_FILE),
            flow: path.join(FLOW_FILE),
        });
    }
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    let (rows, cols) = parse_grid(&args.scenario)?;
    Ok(grid_config(rows, cols, flow_kind(args.flow, args.rate), args.horizon))
}

fn short_hash(config: &ExperimentConfig) -> String {
    config.config_hash()[..12].to_string()
}

fn gen_scenario(grid: &str, flow: FlowArg, rate: f64, horizon: u64, out: Option<PathBuf>) -> Result<serde_json::Value> {
    let (rows, cols) = parse_grid(grid)?;
    let out = out.unwrap_or_else(|| output_root().join(format!("scenario_{rows}x{cols}")));
    let scn = Scenario::build(&grid_config(rows, cols, flow_kind(flow, rate), horizon))?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    save_roadnet(&scn.spec, out.join(ROADNET_FILE))?;
    save_flow(&scn.flow, out.join(FLOW_FILE))?;
    Ok(json!({
        "dir": out,
        "intersections": scn.num_intersections(),
        "routes": scn.routes.len(),
        "horizon": scn.horizon(),
    }))
}

fn simulate(controller: &str, args: &ScenarioArgs, seed: u64, checkpoint: Option<PathBuf>) -> Result<serde_json::Value> {
    let kind = ControllerKind::parse(controller)?;
    let config = ExperimentConfig::new(scenario_config(args)?, kind);
    config.validate()?;
    let scn = Scenario::build(&config.scenario)?;
    let att = match checkpoint.filter(|_| kind.is_learned()) {
        Some(dir) => {
            let mut learner = Learner::new(kind, &config.train, &scn, seed)?;
            learner.load(&dir)?;
            evaluate_controller(&config, &scn, seed, Some(&mut learner))?
        }
        None => evaluate_controller(&config, &scn, seed, None)?,
    };
    Ok(json!({ "controller": kind, "seed": seed, "average_travel_time": att }))
}

fn train(config_path: &Path, out: Option<PathBuf>) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", config_path.display()))?;
    config.validate()?;
    let out = out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| output_root().join(format!("{}_{}", config.controller, short_hash(&config))));
    let scn = Scenario::build(&config.scenario)?;
    let mut records = Vec::new();
    for &seed in &config.seeds {
        let (record, learner) = run_seed(&config, &scn, seed)?;
        if let Some(l) = learner {
            l.save(&out.join("checkpoints").join(format!("seed_{seed}")))?;
        }
        records.push(record);
    }
    let manifest = export_run(&out, std::slice::from_ref(&config), &records)?;
    Ok(json!({
        "dir": out,
        "config_hash": manifest.config_hashes[0],
        "summary": summarize(&records),
    }))
}

fn ablate(args: &ScenarioArgs, episodes: usize, seeds: Vec<u64>, out: Option<PathBuf>) -> Result<serde_json::Value> {
    let mut config = ExperimentConfig::new(scenario_config(args)?, ControllerKind::Base);
    config.episodes = episodes;
    config.seeds = seeds;
    let out = out.unwrap_or_else(|| output_root().join(format!("ablation_{}", short_hash(&config))));
    let result = ablation_suite(&config, &ControllerKind::ABLATION)?;
    export_run(&out, &result.configs, &result.records)?;
    let table = format_table(&result.rows);
    std::fs::write(out.join("ablation.md"), &table).with_context(|| format!("writing into {}", out.display()))?;
    eprint!("{table}");
    Ok(json!({ "dir": out, "rows": result.rows }))
}

fn report(run_dir: &Path) -> Result<serde_json::Value> {
    let records = load_records(run_dir)?;
    if records.is_empty() {
        bail!("{} holds no records", run_dir.display());
    }
    let runs: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            json!({
                "controller": r.controller,
                "seed": r.seed,
                "final_att": r.final_att(),
                "best_att": r.best_att(),
                "phase_percent": phase_distribution(&r.phase_counts),
                "left_straight_percent": r.turning.left_straight_pct(),
            })
        })
        .collect();
    Ok(json!({ "summary": summarize(&records), "runs": runs }))
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::GenScenario {
            grid,
            flow,
            rate,
            horizon,
            out,
        } => gen_scenario(&grid, flow, rate, horizon, out),
        Command::Simulate {
            controller,
            scenario,
            seed,
            checkpoint,
        } => simulate(&controller, &scenario, seed, checkpoint),
        Command::Train { config, out } => train(&config, out),
        Command::Ablate {
            scenario,
            episodes,
            seeds,
            out,
        } => ablate(&scenario, episodes, seeds, out),
        Command::Report { run_dir } => report(&run_dir),
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| c.downcast_ref::<mtlight::Error>())
        .map_or("cli", mtlight::Error::kind)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json value"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::debug!("{e:?}");
            let msg = format!("{e:#}");
            eprintln!("{}", json!({ "error": msg, "kind": error_kind(&e) }));
            ExitCode::FAILURE
        }
    }
}
