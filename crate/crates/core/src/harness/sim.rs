use serde::{Deserialize, Serialize};

use super::path::ReferencePath;
use super::scenario::Scenario;
use crate::automaton::{configure_subgraph, MotionPrimitiveAutomaton, Preset, PrimitiveKind};
use crate::error::{Error, Result};
use crate::planner::{
    collision_free, prioritized_step, shift_fallback, Agent, AgentOutcome, Disc, Occupancy, Plan,
    PlannerConfig, Point, SearchGraph,
};
use crate::vehicle::GroupElement;

/// How far behind and ahead of the last progress the projection looks [m].
const WINDOW_BEHIND: f64 = 0.3;
const WINDOW_AHEAD: f64 = 1.0;

/// One executed step of one vehicle. Positions are at the end of the step
/// except `mid_x`, `mid_y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: usize,
    pub time: f64,
    pub priority: usize,
    pub vehicle: String,
    pub preset: Preset,
    pub from: u32,
    pub to: u32,
    /// `loop` or `maneuver`.
    pub kind: String,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub mid_x: f64,
    pub mid_y: f64,
    /// Reference point the planner aimed at for the end of this step.
    pub ref_x: f64,
    pub ref_y: f64,
    /// Distance to the nearest point of the reference [m].
    pub deviation: f64,
    /// Accumulated arc-length progress along the reference [m].
    pub progress: f64,
    pub reference_length: f64,
    pub expanded: usize,
    pub wall_ms: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleLog {
    pub id: String,
    pub color: String,
    pub preset: Preset,
    pub start: [f64; 3],
    pub reference: Vec<Point>,
    pub rows: Vec<LogRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub scenario: String,
    pub map_extent: [f64; 2],
    pub step_duration: f64,
    pub vehicles: Vec<VehicleLog>,
}

impl RunLog {
    /// Copy with the wall-clock column zeroed, for comparing runs.
    pub fn without_timing(&self) -> RunLog {
        let mut out = self.clone();
        for v in &mut out.vehicles {
            for r in &mut v.rows {
                r.wall_ms = 0.0;
            }
        }
        out
    }

    /// Recomputes the deviation column of vehicle `i` against `path`.
    pub fn rereference(&mut self, i: usize, path: &ReferencePath) {
        for r in &mut self.vehicles[i].rows {
            r.deviation = path.nearest(&[r.x, r.y]).1;
        }
    }
}

/// Planner inputs of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub planner: PlannerConfig,
    /// Overrides the scenario's presets, one per vehicle in order.
    pub presets: Option<Vec<Preset>>,
    /// Overrides the scenario's step count.
    pub steps: Option<usize>,
}

/// Closed-loop state of a scenario run.
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    cfg: PlannerConfig,
    graphs: Vec<SearchGraph>,
    paths: Vec<ReferencePath>,
    committed: Vec<Plan>,
    arc: Vec<f64>,
    progress: Vec<f64>,
    step: usize,
    log: RunLog,
}

/// Everything one planning cycle saw and decided.
pub struct Cycle {
    pub references: Vec<Vec<Point>>,
    /// Obstacles each vehicle planned against.
    pub obstacles: Vec<Vec<Occupancy>>,
    pub outcomes: Vec<AgentOutcome>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        scenario: &'a Scenario,
        ua: &MotionPrimitiveAutomaton,
        cfg: &RunConfig,
    ) -> Result<Self> {
        scenario.validate()?;
        cfg.planner.validate()?;
        let n = scenario.vehicles.len();
        let presets: Vec<Preset> = match &cfg.presets {
            Some(p) if p.len() != n => {
                return Err(Error::Config(format!(
                    "{} presets given for {n} vehicles",
                    p.len()
                )));
            }
            Some(p) => p.clone(),
            None => scenario.vehicles.iter().map(|v| v.preset).collect(),
        };
        if (ua.step_duration - scenario.step_duration).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "automaton step {} s differs from scenario step {} s",
                ua.step_duration, scenario.step_duration
            )));
        }
        let mut graphs = Vec::with_capacity(n);
        for p in &presets {
            graphs.push(SearchGraph::new(configure_subgraph(ua, &p.config())?)?);
        }
        let paths: Vec<ReferencePath> = scenario
            .vehicles
            .iter()
            .map(|v| v.path())
            .collect::<Result<_>>()?;
        let starts: Vec<GroupElement> = scenario
            .vehicles
            .iter()
            .map(|v| v.start_pose())
            .collect::<Result<_>>()?;
        for i in 0..n {
            for j in i + 1..n {
                let disc = |k: usize| Disc {
                    x: starts[k].dx,
                    y: starts[k].dy,
                    r: graphs[k].radius(),
                };
                if !collision_free(&disc(i), &[disc(j)], cfg.planner.safety_margin) {
                    return Err(Error::Validation(format!(
                        "vehicles '{}' and '{}' start in collision",
                        scenario.vehicles[i].id, scenario.vehicles[j].id
                    )));
                }
            }
        }
        let h = cfg.planner.horizon;
        let committed = (0..n)
            .map(|i| Plan::standstill(starts[i], &graphs[i], h))
            .collect::<Result<_>>()?;
        let arc = (0..n)
            .map(|i| paths[i].nearest(&[starts[i].dx, starts[i].dy]).0)
            .collect();
        let vehicles = (0..n)
            .map(|i| VehicleLog {
                id: scenario.vehicles[i].id.clone(),
                color: scenario.vehicles[i].color.clone(),
                preset: presets[i],
                start: [starts[i].dx, starts[i].dy, starts[i].dpsi],
                reference: paths[i].points().to_vec(),
                rows: Vec::new(),
            })
            .collect();
        Ok(Self {
            scenario,
            cfg: cfg.planner,
            graphs,
            paths,
            committed,
            arc,
            progress: vec![0.0; n],
            step: 0,
            log: RunLog {
                scenario: scenario.name.clone(),
                map_extent: scenario.map_extent,
                step_duration: scenario.step_duration,
                vehicles,
            },
        })
    }

    pub fn graph(&self, i: usize) -> &SearchGraph {
        &self.graphs[i]
    }

    pub fn path(&self, i: usize) -> &ReferencePath {
        &self.paths[i]
    }

    /// Reference points for the next `H` steps of vehicle `i`.
    pub fn targets(&self, i: usize) -> Vec<Point> {
        let advance = self.scenario.vehicles[i].nominal_speed * self.scenario.step_duration;
        (1..=self.cfg.horizon)
            .map(|k| self.paths[i].point_at(self.arc[i] + advance * k as f64))
            .collect()
    }

    /// Plans all vehicles without executing anything.
    pub fn plan_cycle(&self) -> Cycle {
        let n = self.graphs.len();
        let agents: Vec<Agent> = (0..n)
            .map(|i| Agent {
                graph: &self.graphs[i],
                committed: self.committed[i].clone(),
                reference: self.targets(i),
            })
            .collect();
        let outcomes = prioritized_step(&agents, &self.cfg);
        let committed: Vec<Occupancy> = (0..n)
            .map(|i| self.committed[i].occupancy(&self.graphs[i]))
            .collect();
        let planned: Vec<Occupancy> = (0..n)
            .map(|i| outcomes[i].plan.occupancy(&self.graphs[i]))
            .collect();
        let obstacles = (0..n)
            .map(|i| {
                planned[..i]
                    .iter()
                    .chain(&committed[i + 1..])
                    .cloned()
                    .collect()
            })
            .collect();
        Cycle {
            references: agents.into_iter().map(|a| a.reference).collect(),
            obstacles,
            outcomes,
        }
    }

    /// Plans and executes one step, appending a log row per vehicle.
    pub fn advance(&mut self) -> Result<()> {
        let cycle = self.plan_cycle();
        self.step += 1;
        let dt = self.scenario.step_duration;
        for (i, out) in cycle.outcomes.iter().enumerate() {
            let first = out.plan.steps[0];
            let end = [first.end.dx, first.end.dy];
            let path = &self.paths[i];
            let (s, _) = path.nearest_near(&end, self.arc[i], WINDOW_BEHIND, WINDOW_AHEAD);
            self.progress[i] += path.difference(self.arc[i], s);
            self.arc[i] = s;
            let target = cycle.references[i][0];
            let preset = self.log.vehicles[i].preset;
            self.log.vehicles[i].rows.push(LogRow {
                step: self.step,
                time: self.step as f64 * dt,
                priority: i + 1,
                vehicle: self.scenario.vehicles[i].id.clone(),
                preset,
                from: first.from.0,
                to: first.to.0,
                kind: match first.kind {
                    PrimitiveKind::SelfLoop => "loop".into(),
                    PrimitiveKind::Maneuver(_) => "maneuver".into(),
                },
                x: first.end.dx,
                y: first.end.dy,
                psi: first.end.dpsi,
                mid_x: first.midpoint.dx,
                mid_y: first.midpoint.dy,
                ref_x: target[0],
                ref_y: target[1],
                deviation: path.nearest(&end).1,
                progress: self.progress[i],
                reference_length: path.length(),
                expanded: out.stats.expanded,
                wall_ms: out.stats.wall_ms,
                fallback: out.fallback,
            });
            self.committed[i] = shift_fallback(&out.plan, &self.graphs[i])?;
        }
        Ok(())
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }
}

/// Closed-loop run: each step plans all vehicles in priority order and
/// executes the first primitive of every plan.
pub fn run_scenario(
    scenario: &Scenario,
    ua: &MotionPrimitiveAutomaton,
    cfg: &RunConfig,
) -> Result<RunLog> {
    let mut sim = Simulation::new(scenario, ua, cfg)?;
    for _ in 0..cfg.steps.unwrap_or(scenario.steps) {
        sim.advance()?;
    }
    Ok(sim.into_log())
}

/// Pairs of `(step, vehicle a, vehicle b)` whose logged discs come closer
/// than `2 * radius + margin`, at step ends or midpoints.
pub fn audit_separation(log: &RunLog, radius: f64, margin: f64) -> Vec<(usize, String, String)> {
    let mut out = Vec::new();
    let n = log.vehicles.len();
    let steps = log.vehicles.iter().map(|v| v.rows.len()).min().unwrap_or(0);
    for k in 0..steps {
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&log.vehicles[i].rows[k], &log.vehicles[j].rows[k]);
                let d_end = (a.x - b.x).hypot(a.y - b.y);
                let d_mid = (a.mid_x - b.mid_x).hypot(a.mid_y - b.mid_y);
                if d_end.min(d_mid) < 2.0 * radius + margin {
                    out.push((a.step, a.vehicle.clone(), b.vehicle.clone()));
                }
            }
        }
    }
    out
}
