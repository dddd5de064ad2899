use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mpa_core::automaton::{
    build_universal_automaton, configure_subgraph, default_connectivity, load_automaton,
    load_connectivity_file, load_trim_file, save_automaton, validate_automaton, BuildOptions,
    MotionPrimitiveAutomaton, Preset,
};
use mpa_core::harness::{
    audit_separation, compute_metrics, export_report, load_scenario, plan_svg, report_from_dir,
    report_table, save_scenario, RunConfig, Scenario, Simulation, VehicleMetrics,
};
use mpa_core::maneuver::{sweep_pareto, uniform_weights, write_pareto, ManeuverProblem};
use mpa_core::objective::parse_objectives;
use mpa_core::planner::{PlanStep, PlannerConfig, SearchStats};
use mpa_core::trims::{standard_trim_table, Trim, TrimId};
use mpa_core::vehicle::VehicleParams;
use mpa_core::Error;

/// Pareto-optimal motion primitives, automata and multi-vehicle planning.
#[derive(Parser)]
#[command(name = "mpa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep scalarization weights between two trims and write the front.
    Pareto(ParetoArgs),
    /// Optimize every connected trim pair and save the universal automaton.
    BuildAutomaton(BuildArgs),
    /// Restrict an automaton to one of the A-D presets.
    Subgraph(SubgraphArgs),
    /// Plan one vehicle of a scenario and print the plan.
    Plan(PlanArgs),
    /// Run a scenario closed-loop and write logs, plots and the report.
    Simulate(SimulateArgs),
    /// Recompute the metrics of a simulate output directory.
    Report(ReportArgs),
    /// Write the built-in three-vehicle scenario.
    Scenario(ScenarioArgs),
}

#[derive(Args)]
struct ParetoArgs {
    /// Trim table (JSON); the standard table when omitted.
    #[arg(long)]
    trims: Option<PathBuf>,
    /// Start trim id.
    #[arg(long, default_value_t = 1)]
    from: u32,
    /// Target trim id.
    #[arg(long, default_value_t = 7)]
    to: u32,
    /// Target given as `v,delta` instead of an id.
    #[arg(long, conflicts_with = "to", value_name = "V,DELTA")]
    to_state: Option<String>,
    /// Number of evenly spaced weights on [0, 1].
    #[arg(long, default_value_t = 11)]
    weights: usize,
    /// Lift the speed and steering bounds so illustration targets beyond
    /// the trim table are reachable.
    #[arg(long)]
    relaxed: bool,
    #[arg(long, default_value = "pareto")]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Trim table (JSON); the standard table when omitted.
    #[arg(long)]
    trims: Option<PathBuf>,
    #[arg(long, default_value = "J1,J2,J3")]
    objectives: String,
    /// Directed trim pairs (JSON); neighbour connectivity when omitted.
    #[arg(long)]
    connectivity: Option<PathBuf>,
    #[arg(long, default_value = "automaton.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SubgraphArgs {
    /// Source automaton; the standard universal automaton is built when omitted.
    #[arg(long)]
    automaton: Option<PathBuf>,
    #[arg(long)]
    preset: Preset,
    /// Output file; `subgraph_<preset>.json` when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlannerArgs {
    /// Planning horizon in steps.
    #[arg(long, default_value_t = 8)]
    horizon: usize,
    /// A* inflation; 0 is uniform-cost search.
    #[arg(long, default_value_t = 0.0)]
    heuristic_weight: f64,
    #[arg(long, default_value_t = 0.02)]
    safety_margin: f64,
    #[arg(long, default_value_t = 2_000_000)]
    expansion_cap: usize,
}

impl PlannerArgs {
    fn config(&self) -> PlannerConfig {
        PlannerConfig {
            horizon: self.horizon,
            heuristic_weight: self.heuristic_weight,
            safety_margin: self.safety_margin,
            expansion_cap: self.expansion_cap,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Universal automaton; built from the standard table when omitted.
    #[arg(long)]
    automaton: Option<PathBuf>,
    /// Scenario file; the built-in three-vehicle scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    vehicle: String,
    /// Planning cycle to show; earlier cycles are simulated first.
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// SVG overlay of the plan.
    #[arg(long, default_value = "plan.svg")]
    svg: PathBuf,
    #[command(flatten)]
    planner: PlannerArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file; the built-in three-vehicle scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Universal automaton; built from the standard table when omitted.
    #[arg(long)]
    automaton: Option<PathBuf>,
    /// Presets per vehicle id, e.g. `red=A,blue=C,green=C`. Unlisted
    /// vehicles keep the scenario's preset.
    #[arg(long)]
    preset_map: Option<String>,
    /// Steps to simulate; the scenario's count when omitted.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    planner: PlannerArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory of `simulate`.
    #[arg(long)]
    log: PathBuf,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value = "scenario.json")]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::Version { .. }
        | Error::Integrity(_)
        | Error::Validation(_)
        | Error::Domain(_) => 2,
        _ => 1,
    }
}

fn trims_from(path: &Option<PathBuf>) -> mpa_core::Result<(Vec<Trim>, VehicleParams)> {
    match path {
        Some(p) => {
            let f = load_trim_file(p)?;
            Ok((f.trims, f.params))
        }
        None => Ok((standard_trim_table(), VehicleParams::default())),
    }
}

fn automaton_from(path: &Option<PathBuf>) -> mpa_core::Result<MotionPrimitiveAutomaton> {
    match path {
        Some(p) => load_automaton(p),
        None => {
            log::info!("no automaton given, building the standard one");
            mpa_core::automaton::standard_universal_automaton()
        }
    }
}

fn scenario_from(path: &Option<PathBuf>) -> mpa_core::Result<Scenario> {
    match path {
        Some(p) => load_scenario(p),
        None => Ok(Scenario::three_vehicle_crossing()),
    }
}

fn write_text(path: &Path, text: &str) -> mpa_core::Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn pareto(a: ParetoArgs) -> mpa_core::Result<()> {
    let (trims, mut params) = trims_from(&a.trims)?;
    let find = |id: u32| {
        trims
            .iter()
            .find(|t| t.id == TrimId(id))
            .copied()
            .ok_or_else(|| Error::Config(format!("trim {} not in the table", TrimId(id))))
    };
    let from = find(a.from)?;
    let to = match &a.to_state {
        Some(s) => {
            let parts: Vec<f64> = s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Config(format!("--to-state '{s}': {e}")))?;
            let [v, delta] = parts[..] else {
                return Err(Error::Config(format!("--to-state '{s}' must be v,delta")));
            };
            Trim {
                step_duration: from.step_duration,
                ..Trim::new(0, v, delta)
            }
        }
        None => find(a.to)?,
    };
    if a.relaxed {
        params.v_max = params.v_max.max(to.v).max(from.v) * 1.5;
        params.delta_max = 1.5;
        params.accel_max *= 10.0;
        params.steer_rate_max *= 10.0;
    }
    let problem = ManeuverProblem::new(from, to, params);
    problem.check_feasible()?;
    let front = sweep_pareto(&problem, &uniform_weights(a.weights))?;
    let files = write_pareto(&front, &a.out)?;
    print!("{}", mpa_core::maneuver::front_csv(&front));
    eprintln!(
        "{} points, {} files in {}",
        front.len(),
        files.len(),
        a.out.display()
    );
    Ok(())
}

fn build(a: BuildArgs) -> mpa_core::Result<()> {
    let (trims, params) = trims_from(&a.trims)?;
    let objectives = parse_objectives(&a.objectives)?;
    if objectives.is_empty() {
        return Err(Error::Config("no objectives given".into()));
    }
    let pairs = match &a.connectivity {
        Some(p) => load_connectivity_file(p)?.pairs,
        None => default_connectivity(&trims),
    };
    let opts = BuildOptions {
        params,
        ..BuildOptions::default()
    };
    let ua = build_universal_automaton(&trims, &objectives, &pairs, &opts)?;
    let report = validate_automaton(&ua);
    if !report.is_ok() {
        return Err(Error::Validation(report.errors.join("; ")));
    }
    save_automaton(&ua, &a.out)?;
    println!(
        "{} trims, {} maneuvers ({} objectives) -> {}",
        ua.trims.len(),
        ua.maneuvers.len(),
        objectives.len(),
        a.out.display()
    );
    Ok(())
}

fn subgraph(a: SubgraphArgs) -> mpa_core::Result<()> {
    let ua = automaton_from(&a.automaton)?;
    let sub = configure_subgraph(&ua, &a.preset.config())?;
    let report = validate_automaton(&sub);
    if !report.is_ok() {
        return Err(Error::Validation(report.errors.join("; ")));
    }
    let out = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("subgraph_{}.json", a.preset)));
    save_automaton(&sub, &out)?;
    println!(
        "preset {}: {} trims, {} maneuvers -> {}",
        a.preset,
        sub.trims.len(),
        sub.maneuvers.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PlanOutput<'a> {
    vehicle: &'a str,
    cycle: usize,
    preset: Preset,
    fallback: bool,
    reason: Option<&'a str>,
    cost: Option<f64>,
    stats: SearchStats,
    obstacles: usize,
    steps: &'a [PlanStep],
}

fn plan(a: PlanArgs) -> mpa_core::Result<()> {
    if a.steps == 0 {
        return Err(Error::Config("--steps must be at least 1".into()));
    }
    let scenario = scenario_from(&a.scenario)?;
    let i = scenario
        .vehicle_index(&a.vehicle)
        .ok_or_else(|| Error::Config(format!("no vehicle '{}' in the scenario", a.vehicle)))?;
    let ua = automaton_from(&a.automaton)?;
    let cfg = RunConfig {
        planner: a.planner.config(),
        ..RunConfig::default()
    };
    let mut sim = Simulation::new(&scenario, &ua, &cfg)?;
    for _ in 1..a.steps {
        sim.advance()?;
    }
    let cycle = sim.plan_cycle();
    let out = &cycle.outcomes[i];
    let text = serde_json::to_string_pretty(&PlanOutput {
        vehicle: &a.vehicle,
        cycle: a.steps,
        preset: scenario.vehicles[i].preset,
        fallback: out.fallback,
        reason: out.reason.as_deref(),
        cost: out.plan.cost,
        stats: out.stats,
        obstacles: cycle.obstacles[i].len(),
        steps: &out.plan.steps,
    })
    .map_err(|e| Error::Invariant(e.to_string()))?;
    println!("{text}");
    let discs: Vec<_> = cycle.obstacles[i]
        .iter()
        .flat_map(|o| {
            o.samples
                .iter()
                .map(|s| (s[1], o.radius))
                .chain([(o.rest, o.radius)])
        })
        .collect();
    let svg = plan_svg(
        scenario.map_extent,
        sim.path(i).points(),
        &cycle.references[i],
        &out.plan,
        sim.graph(i).radius(),
        &discs,
    );
    write_text(&a.svg, &svg)?;
    eprintln!("overlay -> {}", a.svg.display());
    Ok(())
}

fn parse_preset_map(map: &str, scenario: &Scenario) -> mpa_core::Result<Vec<Preset>> {
    let mut presets: Vec<Preset> = scenario.vehicles.iter().map(|v| v.preset).collect();
    for item in map.split(',').filter(|s| !s.trim().is_empty()) {
        let (id, p) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("preset map entry '{item}' must be id=preset")))?;
        let i = scenario.vehicle_index(id.trim()).ok_or_else(|| {
            Error::Config(format!("preset map names unknown vehicle '{}'", id.trim()))
        })?;
        presets[i] = p.parse()?;
    }
    Ok(presets)
}

fn simulate(a: SimulateArgs) -> mpa_core::Result<bool> {
    let scenario = scenario_from(&a.scenario)?;
    let ua = automaton_from(&a.automaton)?;
    let presets = match &a.preset_map {
        Some(m) => Some(parse_preset_map(m, &scenario)?),
        None => None,
    };
    let cfg = RunConfig {
        planner: a.planner.config(),
        presets,
        steps: a.steps,
    };
    let log = mpa_core::harness::run_scenario(&scenario, &ua, &cfg)?;
    let report = compute_metrics(&log);
    let files = export_report(&report, &log, &a.out)?;
    print_table(&report.vehicles);
    let fallbacks: usize = report.vehicles.iter().map(|v| v.fallbacks).sum();
    let radius = ua.params.footprint_radius;
    let violations = audit_separation(&log, radius, cfg.planner.safety_margin);
    eprintln!(
        "{} files in {}; {fallbacks} fallback steps; {} separation violations",
        files.len(),
        a.out.display(),
        violations.len()
    );
    for (step, x, y) in &violations {
        eprintln!("separation violated at step {step}: {x} / {y}");
    }
    Ok(violations.is_empty())
}

/// The report table with a leading vehicle id column.
fn print_table(vehicles: &[VehicleMetrics]) {
    let table = report_table(vehicles);
    let mut lines = table.lines();
    println!("vehicle,{}", lines.next().unwrap_or_default());
    for (v, line) in vehicles.iter().zip(lines) {
        println!("{},{line}", v.id);
    }
}

fn report(a: ReportArgs) -> mpa_core::Result<()> {
    print_table(&report_from_dir(&a.log)?.vehicles);
    Ok(())
}

fn run(cli: Cli) -> mpa_core::Result<bool> {
    match cli.command {
        Command::Pareto(a) => pareto(a)?,
        Command::BuildAutomaton(a) => build(a)?,
        Command::Subgraph(a) => subgraph(a)?,
        Command::Plan(a) => plan(a)?,
        Command::Simulate(a) => return simulate(a),
        Command::Report(a) => report(a)?,
        Command::Scenario(a) => {
            save_scenario(&Scenario::three_vehicle_crossing(), &a.out)?;
            println!("scenario -> {}", a.out.display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
