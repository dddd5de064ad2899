//! Receding-horizon graph search over a configured automaton.
//!
//! A plan is a sequence of `H` primitives. Every plan must end in a trim
//! from which standstill can be reached, and its occupancy includes the
//! braking tail along that route, so the shifted plan is always a valid
//! fallback for the next cycle.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::automaton::{routes_to_standstill, MotionPrimitiveAutomaton, Primitive, PrimitiveKind};
use crate::error::{Error, Result};
use crate::trims::{TrimId, STANDSTILL};
use crate::vehicle::{normalize_angle, GroupElement};

pub const POSITION_QUANTUM: f64 = 1e-3;
pub const HEADING_QUANTUM: f64 = 0.5 * PI / 180.0;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Steps per plan.
    pub horizon: usize,
    /// 0 gives uniform-cost search. A positive value adds an admissible
    /// distance bound scaled by `1 + heuristic_weight`, so the plan cost is
    /// at most `1 + heuristic_weight` times the optimum.
    pub heuristic_weight: f64,
    /// Extra clearance between collision discs [m].
    pub safety_margin: f64,
    pub expansion_cap: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 8,
            heuristic_weight: 0.0,
            safety_margin: 0.02,
            expansion_cap: 2_000_000,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.safety_margin >= 0.0) || !self.safety_margin.is_finite() {
            return Err(Error::Config(
                "safety margin must be finite and >= 0".into(),
            ));
        }
        if !(self.heuristic_weight >= 0.0) || !self.heuristic_weight.is_finite() {
            return Err(Error::Config(
                "heuristic weight must be finite and >= 0".into(),
            ));
        }
        if self.expansion_cap == 0 {
            return Err(Error::Config("expansion cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

/// True iff `disc` keeps at least `margin` clearance to every obstacle.
/// Touching at exactly the margin counts as free.
pub fn collision_free(disc: &Disc, obstacles: &[Disc], margin: f64) -> bool {
    obstacles.iter().all(|o| {
        let d = (disc.x - o.x).hypot(disc.y - o.y);
        d >= disc.r + o.r + margin
    })
}

/// Squared distance from the pose to the reference point of step `k`
/// (`reference[k - 1]`).
pub fn stage_cost(pose: &GroupElement, k: usize, reference: &[Point]) -> f64 {
    let [rx, ry] = reference[k - 1];
    let (dx, dy) = (pose.dx - rx, pose.dy - ry);
    dx * dx + dy * dy
}

/// Disc centres of one vehicle over future steps. `samples[k - 1]` holds
/// the centre halfway through and at the end of step `k`; after the last
/// step the vehicle rests at `rest`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Occupancy {
    pub radius: f64,
    pub samples: Vec<[Point; 2]>,
    pub rest: Point,
}

impl Occupancy {
    pub fn stationary(at: Point, radius: f64) -> Self {
        Self {
            radius,
            samples: Vec::new(),
            rest: at,
        }
    }

    /// Centre at sample `s` (0 middle, 1 end) of step `k >= 1`.
    pub fn at(&self, k: usize, s: usize) -> Point {
        match self.samples.get(k - 1) {
            Some(pair) => pair[s],
            None => self.rest,
        }
    }

    pub fn disc(&self, k: usize, s: usize) -> Disc {
        let [x, y] = self.at(k, s);
        Disc {
            x,
            y,
            r: self.radius,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn point(g: &GroupElement) -> Point {
    [g.dx, g.dy]
}

/// Precomputed adjacency of a configured automaton.
#[derive(Debug, Clone)]
pub struct SearchGraph {
    automaton: MotionPrimitiveAutomaton,
    primitives: Vec<Primitive>,
    trims: Vec<TrimId>,
    outgoing: Vec<Vec<usize>>,
    /// Primitive leading one hop closer to standstill, per trim index.
    fallback: Vec<Option<usize>>,
    max_chord: f64,
}

impl SearchGraph {
    /// Requires at most one maneuver per ordered trim pair and the
    /// standstill trim.
    pub fn new(automaton: MotionPrimitiveAutomaton) -> Result<Self> {
        if automaton.objectives().len() > 1 {
            return Err(Error::Config(
                "planning needs a configured automaton with one objective".into(),
            ));
        }
        if !automaton.contains(STANDSTILL) {
            return Err(Error::Config(format!(
                "automaton lacks the standstill trim {STANDSTILL}"
            )));
        }
        let trims = automaton.trim_ids();
        let primitives = automaton.primitives();
        let index_of = |id: TrimId| trims.iter().position(|&t| t == id);
        let mut outgoing = vec![Vec::new(); trims.len()];
        for (i, p) in primitives.iter().enumerate() {
            let (Some(from), Some(_)) = (index_of(p.from), index_of(p.to)) else {
                return Err(Error::Config(format!(
                    "primitive {} -> {} has an unknown trim",
                    p.from, p.to
                )));
            };
            if outgoing[from]
                .iter()
                .any(|&j: &usize| primitives[j].to == p.to)
            {
                return Err(Error::Config(format!(
                    "more than one primitive {} -> {}",
                    p.from, p.to
                )));
            }
            outgoing[from].push(i);
        }
        let routes = routes_to_standstill(&automaton);
        let fallback = trims
            .iter()
            .enumerate()
            .map(|(ti, t)| {
                let next = routes.get(t)?;
                outgoing[ti]
                    .iter()
                    .copied()
                    .find(|&j| primitives[j].to == *next)
            })
            .collect();
        let max_chord = primitives
            .iter()
            .map(|p| p.displacement.dx.hypot(p.displacement.dy))
            .fold(0.0, f64::max);
        Ok(Self {
            automaton,
            primitives,
            trims,
            outgoing,
            fallback,
            max_chord,
        })
    }

    pub fn automaton(&self) -> &MotionPrimitiveAutomaton {
        &self.automaton
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn radius(&self) -> f64 {
        self.automaton.params.footprint_radius
    }

    fn trim_index(&self, id: TrimId) -> Option<usize> {
        self.trims.iter().position(|&t| t == id)
    }

    /// Primitives leaving `trim`, self-loop first.
    pub fn outgoing(&self, trim: TrimId) -> &[usize] {
        self.trim_index(trim).map_or(&[], |i| &self.outgoing[i])
    }

    /// The braking primitive from `trim`: one hop along the route to
    /// standstill, or the standstill self-loop.
    pub fn fallback_primitive(&self, trim: TrimId) -> Option<usize> {
        self.fallback[self.trim_index(trim)?]
    }

    pub fn can_stop(&self, trim: TrimId) -> bool {
        self.fallback_primitive(trim).is_some()
    }

    /// Braking primitives from `trim` until standstill is reached.
    pub fn tail(&self, trim: TrimId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut t = trim;
        while t != STANDSTILL {
            match self.fallback_primitive(t) {
                Some(p) if out.len() <= self.trims.len() => {
                    out.push(p);
                    t = self.primitives[p].to;
                }
                _ => break,
            }
        }
        out
    }

    /// Occupancy of the tail that follows the end of a plan.
    fn tail_samples(&self, trim: TrimId, pose: &GroupElement, out: &mut Vec<[Point; 2]>) -> Point {
        let mut pose = *pose;
        for p in self.tail(trim) {
            let prim = &self.primitives[p];
            let mid = pose.compose(&prim.midpoint);
            pose = pose.compose(&prim.displacement);
            out.push([point(&mid), point(&pose)]);
        }
        point(&pose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    /// Index into the search graph's primitive list.
    pub primitive: usize,
    pub kind: PrimitiveKind,
    pub from: TrimId,
    pub to: TrimId,
    pub start: GroupElement,
    pub midpoint: GroupElement,
    pub end: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub start: GroupElement,
    pub start_trim: TrimId,
    pub steps: Vec<PlanStep>,
    /// Tracking cost; `None` for plans built by the fallback.
    pub cost: Option<f64>,
}

impl Plan {
    /// `horizon` standstill self-loops at `pose`.
    pub fn standstill(pose: GroupElement, graph: &SearchGraph, horizon: usize) -> Result<Plan> {
        let p = graph
            .fallback_primitive(STANDSTILL)
            .ok_or_else(|| Error::Invariant("standstill has no self-loop".into()))?;
        let mut plan = Plan {
            start: pose,
            start_trim: STANDSTILL,
            steps: Vec::with_capacity(horizon),
            cost: None,
        };
        for _ in 0..horizon {
            plan.push(graph, p);
        }
        Ok(plan)
    }

    pub fn final_trim(&self) -> TrimId {
        self.steps.last().map_or(self.start_trim, |s| s.to)
    }

    pub fn final_pose(&self) -> GroupElement {
        self.steps.last().map_or(self.start, |s| s.end)
    }

    fn push(&mut self, graph: &SearchGraph, p: usize) {
        let prim = &graph.primitives[p];
        let start = self.final_pose();
        self.steps.push(PlanStep {
            primitive: p,
            kind: prim.kind,
            from: prim.from,
            to: prim.to,
            start,
            midpoint: start.compose(&prim.midpoint),
            end: start.compose(&prim.displacement),
        });
    }

    /// Occupancy of the plan followed by its braking tail.
    pub fn occupancy(&self, graph: &SearchGraph) -> Occupancy {
        let mut samples: Vec<[Point; 2]> = self
            .steps
            .iter()
            .map(|s| [point(&s.midpoint), point(&s.end)])
            .collect();
        let rest = graph.tail_samples(self.final_trim(), &self.final_pose(), &mut samples);
        Occupancy {
            radius: graph.radius(),
            samples,
            rest,
        }
    }

    /// Sum of stage costs against `reference`.
    pub fn tracking_cost(&self, reference: &[Point]) -> f64 {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| stage_cost(&s.end, i + 1, reference))
            .sum()
    }
}

/// Drops the executed first step and appends one braking step.
pub fn shift_fallback(previous: &Plan, graph: &SearchGraph) -> Result<Plan> {
    let first = previous
        .steps
        .first()
        .ok_or_else(|| Error::Invariant("cannot shift an empty plan".into()))?;
    let last = previous.final_trim();
    let p = graph.fallback_primitive(last).ok_or_else(|| {
        Error::Invariant(format!(
            "plan ends in {last}, which cannot reach standstill"
        ))
    })?;
    let mut plan = Plan {
        start: first.end,
        start_trim: first.to,
        steps: previous.steps[1..].to_vec(),
        cost: None,
    };
    plan.push(graph, p);
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub expanded: usize,
    pub generated: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Copy)]
struct Node {
    step: usize,
    trim: TrimId,
    pose: GroupElement,
    g: f64,
    parent: usize,
    primitive: usize,
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    seq: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type Key = (usize, TrimId, i64, i64, i64);

fn key(step: usize, trim: TrimId, pose: &GroupElement) -> Key {
    (
        step,
        trim,
        (pose.dx / POSITION_QUANTUM).round() as i64,
        (pose.dy / POSITION_QUANTUM).round() as i64,
        (normalize_angle(pose.dpsi) / HEADING_QUANTUM).round() as i64,
    )
}

fn step_clear(
    mid: &GroupElement,
    end: &GroupElement,
    k: usize,
    r: f64,
    obstacles: &[Occupancy],
    margin: f64,
) -> bool {
    let samples = [point(mid), point(end)];
    obstacles.iter().all(|o| {
        (0..2).all(|s| {
            let [x, y] = samples[s];
            collision_free(&Disc { x, y, r }, &[o.disc(k, s)], margin)
        })
    })
}

/// Checks the braking tail after step `horizon` and the rest position
/// against everything the obstacles still do.
fn tail_clear(
    graph: &SearchGraph,
    trim: TrimId,
    pose: &GroupElement,
    horizon: usize,
    obstacles: &[Occupancy],
    margin: f64,
) -> bool {
    let mut samples = Vec::new();
    let rest = graph.tail_samples(trim, pose, &mut samples);
    let r = graph.radius();
    let last = obstacles
        .iter()
        .map(Occupancy::len)
        .max()
        .unwrap_or(0)
        .max(horizon + samples.len())
        + 1;
    for k in horizon + 1..=last {
        let mine = samples
            .get(k - horizon - 1)
            .copied()
            .unwrap_or([rest, rest]);
        for o in obstacles {
            for (s, [x, y]) in mine.iter().enumerate() {
                if !collision_free(&Disc { x: *x, y: *y, r }, &[o.disc(k, s)], margin) {
                    return false;
                }
            }
        }
    }
    true
}

/// Best-first search for the cheapest collision-free `H`-step plan that
/// ends in a trim able to brake to standstill without collision.
pub fn plan_horizon(
    graph: &SearchGraph,
    start: (GroupElement, TrimId),
    reference: &[Point],
    obstacles: &[Occupancy],
    cfg: &PlannerConfig,
) -> Result<(Plan, SearchStats)> {
    let clock = Instant::now();
    cfg.validate()?;
    let h = cfg.horizon;
    if reference.len() < h {
        return Err(Error::Config(format!(
            "reference has {} points, horizon needs {h}",
            reference.len()
        )));
    }
    let (start_pose, start_trim) = start;
    if graph.trim_index(start_trim).is_none() {
        return Err(Error::Config(format!(
            "start trim {start_trim} not in automaton"
        )));
    }
    let r = graph.radius();
    let margin = cfg.safety_margin;
    let use_heuristic = cfg.heuristic_weight > 0.0;
    let inflate = 1.0 + cfg.heuristic_weight;
    let heuristic = |pose: &GroupElement, step: usize| -> f64 {
        if !use_heuristic {
            return 0.0;
        }
        (step + 1..=h)
            .map(|j| {
                let d = (pose.dx - reference[j - 1][0]).hypot(pose.dy - reference[j - 1][1]);
                let gap = (d - graph.max_chord * (j - step) as f64).max(0.0);
                gap * gap
            })
            .sum::<f64>()
            * inflate
    };

    let mut nodes = vec![Node {
        step: 0,
        trim: start_trim,
        pose: start_pose,
        g: 0.0,
        parent: usize::MAX,
        primitive: usize::MAX,
    }];
    let mut best: HashMap<Key, f64> = HashMap::new();
    best.insert(key(0, start_trim, &start_pose), 0.0);
    let mut open = BinaryHeap::new();
    open.push(Entry {
        f: heuristic(&start_pose, 0),
        seq: 0,
    });
    let mut stats = SearchStats {
        generated: 1,
        ..SearchStats::default()
    };

    while let Some(Entry { seq, .. }) = open.pop() {
        let node = nodes[seq];
        if best
            .get(&key(node.step, node.trim, &node.pose))
            .is_some_and(|&g| g < node.g)
        {
            continue;
        }
        stats.expanded += 1;
        if node.step == h {
            stats.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
            return Ok((
                reconstruct(graph, &nodes, seq, start_pose, start_trim),
                stats,
            ));
        }
        if stats.expanded >= cfg.expansion_cap {
            return Err(Error::ExpansionCap {
                cap: cfg.expansion_cap,
                expanded: stats.expanded,
            });
        }
        let k = node.step + 1;
        for &p in graph.outgoing(node.trim) {
            let prim = &graph.primitives[p];
            let mid = node.pose.compose(&prim.midpoint);
            let end = node.pose.compose(&prim.displacement);
            if !step_clear(&mid, &end, k, r, obstacles, margin) {
                continue;
            }
            if k == h
                && !(graph.can_stop(prim.to)
                    && tail_clear(graph, prim.to, &end, h, obstacles, margin))
            {
                continue;
            }
            let g = node.g + stage_cost(&end, k, reference);
            let child_key = key(k, prim.to, &end);
            if best.get(&child_key).is_some_and(|&old| old <= g) {
                continue;
            }
            best.insert(child_key, g);
            nodes.push(Node {
                step: k,
                trim: prim.to,
                pose: end,
                g,
                parent: seq,
                primitive: p,
            });
            stats.generated += 1;
            open.push(Entry {
                f: g + heuristic(&end, k),
                seq: nodes.len() - 1,
            });
        }
    }
    Err(Error::PlanInfeasible {
        expanded: stats.expanded,
    })
}

fn reconstruct(
    graph: &SearchGraph,
    nodes: &[Node],
    goal: usize,
    start: GroupElement,
    trim: TrimId,
) -> Plan {
    let mut chain = Vec::new();
    let mut i = goal;
    while nodes[i].parent != usize::MAX {
        chain.push(nodes[i].primitive);
        i = nodes[i].parent;
    }
    let mut plan = Plan {
        start,
        start_trim: trim,
        steps: Vec::with_capacity(chain.len()),
        cost: Some(nodes[goal].g),
    };
    for &p in chain.iter().rev() {
        plan.push(graph, p);
    }
    plan
}

/// One vehicle's input to a coordinated planning cycle.
#[derive(Debug, Clone)]
pub struct Agent<'a> {
    pub graph: &'a SearchGraph,
    /// The plan the vehicle falls back on this cycle; it starts at the
    /// current state.
    pub committed: Plan,
    pub reference: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentOutcome {
    pub plan: Plan,
    pub stats: SearchStats,
    pub fallback: bool,
    /// Why the search did not produce a plan, if it did not.
    pub reason: Option<String>,
}

/// Plans all agents in priority order. Each agent avoids the new plans of
/// the agents before it and the committed plans of the agents after it; if
/// its search fails it keeps its committed plan.
pub fn prioritized_step(agents: &[Agent<'_>], cfg: &PlannerConfig) -> Vec<AgentOutcome> {
    let committed: Vec<Occupancy> = agents
        .iter()
        .map(|a| a.committed.occupancy(a.graph))
        .collect();
    let mut fixed: Vec<Occupancy> = Vec::with_capacity(agents.len());
    let mut out = Vec::with_capacity(agents.len());
    for (i, agent) in agents.iter().enumerate() {
        let obstacles: Vec<Occupancy> = fixed.iter().chain(&committed[i + 1..]).cloned().collect();
        let start = (agent.committed.start, agent.committed.start_trim);
        let clock = Instant::now();
        let outcome = match plan_horizon(agent.graph, start, &agent.reference, &obstacles, cfg) {
            Ok((plan, stats)) => AgentOutcome {
                plan,
                stats,
                fallback: false,
                reason: None,
            },
            Err(e) => {
                let expanded = match e {
                    Error::PlanInfeasible { expanded } | Error::ExpansionCap { expanded, .. } => {
                        expanded
                    }
                    _ => 0,
                };
                AgentOutcome {
                    plan: agent.committed.clone(),
                    stats: SearchStats {
                        expanded,
                        generated: 0,
                        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
                    },
                    fallback: true,
                    reason: Some(e.to_string()),
                }
            }
        };
        fixed.push(if outcome.fallback {
            committed[i].clone()
        } else {
            outcome.plan.occupancy(agent.graph)
        });
        out.push(outcome);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{
        build_universal_automaton, configure_subgraph, BuildOptions, SubgraphConfig,
    };
    use crate::objective::Objective;
    use crate::trims::standard_trim_table;

    fn graph() -> SearchGraph {
        let t = standard_trim_table();
        let pairs = [
            (TrimId(1), TrimId(7)),
            (TrimId(7), TrimId(1)),
            (TrimId(7), TrimId(8)),
            (TrimId(8), TrimId(7)),
        ];
        let ua = build_universal_automaton(
            &[t[0], t[6], t[7]],
            &[Objective::J2],
            &pairs,
            &BuildOptions::default(),
        )
        .unwrap();
        SearchGraph::new(ua).unwrap()
    }

    fn straight(n: usize) -> Vec<Point> {
        (1..=n).map(|k| [0.16 * k as f64, 0.0]).collect()
    }

    #[test]
    fn disc_boundary_is_free() {
        let a = Disc {
            x: 0.0,
            y: 0.0,
            r: 0.5,
        };
        assert!(collision_free(&a, &[], 0.1));
        assert!(!collision_free(&a, &[a], 0.0));
        let b = Disc {
            x: 1.25,
            y: 0.0,
            r: 0.5,
        };
        assert!(collision_free(&a, &[b], 0.25));
        assert!(!collision_free(&a, &[b], 0.2500001));
    }

    #[test]
    fn stage_cost_values() {
        let r = [[1.0, 2.0]];
        assert_eq!(stage_cost(&GroupElement::new(1.0, 2.0, 0.3), 1, &r), 0.0);
        assert!((stage_cost(&GroupElement::new(1.1, 2.0, 0.0), 1, &r) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn cruising_on_a_straight_reference() {
        let g = graph();
        let cfg = PlannerConfig::default();
        let (plan, stats) = plan_horizon(
            &g,
            (GroupElement::IDENTITY, TrimId(7)),
            &straight(8),
            &[],
            &cfg,
        )
        .unwrap();
        assert_eq!(plan.steps.len(), 8);
        assert!(plan
            .steps
            .iter()
            .all(|s| s.kind == PrimitiveKind::SelfLoop && s.from == TrimId(7)));
        assert!(plan.cost.unwrap() < 1e-20);
        assert!(stats.expanded >= 9);
    }

    #[test]
    fn rejects_universal_automaton() {
        let t = standard_trim_table();
        let pairs = [(TrimId(1), TrimId(7)), (TrimId(7), TrimId(1))];
        let ua = build_universal_automaton(
            &[t[0], t[6]],
            &Objective::ALL,
            &pairs,
            &BuildOptions::default(),
        )
        .unwrap();
        assert!(SearchGraph::new(ua.clone()).is_err());
        let cfg = SubgraphConfig::new([TrimId(1), TrimId(7)], &[Objective::J1]).unwrap();
        assert!(SearchGraph::new(configure_subgraph(&ua, &cfg).unwrap()).is_ok());
    }

    #[test]
    fn blocked_path_is_avoided_or_infeasible() {
        let g = graph();
        let cfg = PlannerConfig::default();
        // a parked vehicle right ahead
        let wall = Occupancy::stationary([0.5, 0.0], 0.06);
        match plan_horizon(
            &g,
            (GroupElement::IDENTITY, TrimId(7)),
            &straight(8),
            std::slice::from_ref(&wall),
            &cfg,
        ) {
            Ok((plan, _)) => {
                let occ = plan.occupancy(&g);
                for k in 1..=occ.len() + 1 {
                    for s in 0..2 {
                        assert!(collision_free(&occ.disc(k, s), &[wall.disc(k, s)], 0.02));
                    }
                }
            }
            Err(e) => assert!(matches!(e, Error::PlanInfeasible { .. })),
        }
    }

    #[test]
    fn expansion_cap() {
        let g = graph();
        let cfg = PlannerConfig {
            expansion_cap: 3,
            ..PlannerConfig::default()
        };
        let err = plan_horizon(
            &g,
            (GroupElement::IDENTITY, TrimId(1)),
            &straight(8),
            &[],
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ExpansionCap { cap: 3, .. }));
    }

    #[test]
    fn fallback_brakes_to_standstill() {
        let g = graph();
        let cfg = PlannerConfig::default();
        let (plan, _) = plan_horizon(
            &g,
            (GroupElement::IDENTITY, TrimId(8)),
            &straight(8),
            &[],
            &cfg,
        )
        .unwrap();
        let mut p = plan;
        let mut trims = Vec::new();
        for _ in 0..10 {
            p = shift_fallback(&p, &g).unwrap();
            assert_eq!(p.steps.len(), 8);
            trims.push(p.final_trim());
        }
        assert_eq!(*trims.last().unwrap(), STANDSTILL);
        // once stopped, the appended steps are standstill loops
        let stopped = Plan::standstill(GroupElement::new(1.0, 1.0, 0.0), &g, 8).unwrap();
        let shifted = shift_fallback(&stopped, &g).unwrap();
        assert_eq!(
            shifted,
            Plan {
                start: GroupElement::new(1.0, 1.0, 0.0),
                start_trim: STANDSTILL,
                ..stopped.clone()
            }
        );
    }

    #[test]
    fn fallback_follows_route() {
        let g = graph();
        assert_eq!(g.tail(TrimId(8)).len(), 2);
        let p8 = g.fallback_primitive(TrimId(8)).unwrap();
        assert_eq!(g.primitives()[p8].to, TrimId(7));
        let p1 = g.fallback_primitive(STANDSTILL).unwrap();
        assert_eq!(g.primitives()[p1].kind, PrimitiveKind::SelfLoop);
    }

    #[test]
    fn single_agent_step_matches_plan_horizon() {
        let g = graph();
        let cfg = PlannerConfig::default();
        let committed = Plan::standstill(GroupElement::IDENTITY, &g, 8).unwrap();
        let out = prioritized_step(
            &[Agent {
                graph: &g,
                committed,
                reference: straight(8),
            }],
            &cfg,
        );
        let (plan, _) = plan_horizon(
            &g,
            (GroupElement::IDENTITY, STANDSTILL),
            &straight(8),
            &[],
            &cfg,
        )
        .unwrap();
        assert_eq!(out[0].plan, plan);
        assert!(!out[0].fallback);
    }

    #[test]
    fn config_validation() {
        let bad = [
            PlannerConfig {
                horizon: 0,
                ..PlannerConfig::default()
            },
            PlannerConfig {
                safety_margin: -0.1,
                ..PlannerConfig::default()
            },
            PlannerConfig {
                heuristic_weight: f64::NAN,
                ..PlannerConfig::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }
}
