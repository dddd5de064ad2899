//! Motion primitive automaton: trims as vertices, maneuvers as edges.
//!
//! The universal automaton carries one maneuver per connected trim pair and
//! objective. Planning uses a configured subgraph, which keeps a subset of
//! the trims and the maneuvers of exactly one objective.

mod io;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maneuver::{Maneuver, ManeuverProblem, SolverOptions, DEFAULT_INTERVALS};
use crate::objective::Objective;
use crate::trims::{trim_displacement, trim_flow, Trim, TrimId, STANDSTILL};
use crate::vehicle::{GroupElement, State, VehicleParams};

pub use io::{
    from_json, load_automaton, load_connectivity_file, load_trim_file, parse_connectivity_file,
    parse_trim_file, save_automaton, to_json, ConnectivityFile, TrimFile, FORMAT_VERSION,
};
pub use validate::{routes_to_standstill, validate_automaton, EdgeReport, ValidationReport};

/// A vertex: the trim and its one-step self-loop displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimVertex {
    #[serde(flatten)]
    pub trim: Trim,
    pub self_loop: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitiveAutomaton {
    pub params: VehicleParams,
    pub step_duration: f64,
    pub trims: Vec<TrimVertex>,
    /// Edges, each labelled with the objective it is optimal for.
    pub maneuvers: Vec<Maneuver>,
}

/// What a primitive executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrimitiveKind {
    /// Stay in the trim for one step.
    SelfLoop,
    /// Index into `maneuvers`.
    Maneuver(usize),
}

/// One applicable step of the automaton, in its local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub from: TrimId,
    pub to: TrimId,
    pub kind: PrimitiveKind,
    pub displacement: GroupElement,
    /// Pose halfway through the step.
    pub midpoint: GroupElement,
}

impl MotionPrimitiveAutomaton {
    pub fn trim(&self, id: TrimId) -> Option<&Trim> {
        self.trims.iter().find(|t| t.trim.id == id).map(|t| &t.trim)
    }

    pub fn contains(&self, id: TrimId) -> bool {
        self.trim(id).is_some()
    }

    pub fn trim_ids(&self) -> Vec<TrimId> {
        self.trims.iter().map(|t| t.trim.id).collect()
    }

    /// Objective labels present on the edges, sorted.
    pub fn objectives(&self) -> Vec<Objective> {
        let set: BTreeSet<Objective> = self.maneuvers.iter().filter_map(|m| m.objective).collect();
        set.into_iter().collect()
    }

    pub fn maneuver(&self, from: TrimId, to: TrimId, objective: Objective) -> Option<&Maneuver> {
        self.maneuvers
            .iter()
            .find(|m| m.from == from && m.to == to && m.objective == Some(objective))
    }

    /// All primitives: self-loops first (in vertex order), then maneuvers.
    pub fn primitives(&self) -> Vec<Primitive> {
        let mut out = Vec::with_capacity(self.trims.len() + self.maneuvers.len());
        for v in &self.trims {
            let mid = trim_flow(&v.trim, 0.5 * v.trim.step_duration, &self.params)
                .map(|s| s.pose())
                .unwrap_or(GroupElement::IDENTITY);
            out.push(Primitive {
                from: v.trim.id,
                to: v.trim.id,
                kind: PrimitiveKind::SelfLoop,
                displacement: v.self_loop,
                midpoint: mid,
            });
        }
        for (i, m) in self.maneuvers.iter().enumerate() {
            out.push(Primitive {
                from: m.from,
                to: m.to,
                kind: PrimitiveKind::Maneuver(i),
                displacement: m.displacement,
                midpoint: m.mid_state().pose(),
            });
        }
        out
    }

    /// State reached by executing `kind` from pose `start`.
    pub fn execute(
        &self,
        start: &GroupElement,
        kind: PrimitiveKind,
        from: TrimId,
    ) -> Result<State> {
        let local = match kind {
            PrimitiveKind::SelfLoop => {
                let trim = self
                    .trim(from)
                    .ok_or_else(|| Error::Config(format!("trim {from} not in automaton")))?;
                trim_flow(trim, trim.step_duration, &self.params)?
            }
            PrimitiveKind::Maneuver(i) => *self
                .maneuvers
                .get(i)
                .ok_or_else(|| Error::Config(format!("maneuver index {i} out of range")))?
                .end_state(),
        };
        Ok(start.apply(&local))
    }
}

/// Options forwarded to the maneuver optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub params: VehicleParams,
    pub intervals: usize,
    pub solver: SolverOptions,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            params: VehicleParams::default(),
            intervals: DEFAULT_INTERVALS,
            solver: SolverOptions::default(),
        }
    }
}

/// Default edge set for the standard table: every trim of `2..=12` is linked
/// in both directions to its first and second neighbours in table order, and
/// standstill is linked to `pi2`, `pi7` and `pi12`. Ids absent from `trims`
/// are skipped.
pub fn default_connectivity(trims: &[Trim]) -> Vec<(TrimId, TrimId)> {
    let ids: BTreeSet<u32> = trims.iter().map(|t| t.id.0).collect();
    let mut pairs = Vec::new();
    let mut link = |a: u32, b: u32| {
        if ids.contains(&a) && ids.contains(&b) {
            pairs.push((TrimId(a), TrimId(b)));
            pairs.push((TrimId(b), TrimId(a)));
        }
    };
    for b in [2, 7, 12] {
        link(1, b);
    }
    for a in 2..=12 {
        for gap in [1, 2] {
            if a + gap <= 12 {
                link(a, a + gap);
            }
        }
    }
    pairs
}

/// Optimizes every connected pair for every objective and assembles the
/// universal automaton. Pairs whose bounds make them infeasible are left
/// out with a logged reason; any other optimizer failure aborts the build.
pub fn build_universal_automaton(
    trims: &[Trim],
    objectives: &[Objective],
    connectivity: &[(TrimId, TrimId)],
    options: &BuildOptions,
) -> Result<MotionPrimitiveAutomaton> {
    let params = options.params;
    params.validate()?;
    if trims.is_empty() {
        return Err(Error::Config("no trims given".into()));
    }
    let mut by_id = BTreeMap::new();
    for t in trims {
        t.validate(&params)?;
        if by_id.insert(t.id, *t).is_some() {
            return Err(Error::Config(format!("duplicate trim id {}", t.id)));
        }
    }
    let step_duration = trims[0].step_duration;
    if trims.iter().any(|t| t.step_duration != step_duration) {
        return Err(Error::Config(
            "all trims must share one step duration".into(),
        ));
    }
    let mut objectives: Vec<Objective> = objectives.to_vec();
    objectives.sort();
    objectives.dedup();
    let mut seen = BTreeSet::new();
    for &(a, b) in connectivity {
        if a == b {
            return Err(Error::Config(format!(
                "pair {a} -> {b}: self-loops are implicit"
            )));
        }
        for id in [a, b] {
            if !by_id.contains_key(&id) {
                return Err(Error::Config(format!(
                    "connectivity names unknown trim {id}"
                )));
            }
        }
        if !seen.insert((a, b)) {
            return Err(Error::Config(format!("duplicate pair {a} -> {b}")));
        }
    }

    let vertices = trims
        .iter()
        .map(|t| {
            Ok(TrimVertex {
                trim: *t,
                self_loop: trim_displacement(t, &params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let solved: Vec<(TrimId, TrimId, Result<Vec<Maneuver>>)> = connectivity
        .par_iter()
        .map(|&(a, b)| {
            let mut problem = ManeuverProblem::new(by_id[&a], by_id[&b], params)
                .with_intervals(options.intervals);
            problem.options = options.solver;
            (a, b, solve_pair(&problem, &objectives))
        })
        .collect();

    let mut maneuvers = Vec::new();
    let mut failed = Vec::new();
    for (a, b, result) in solved {
        match result {
            Ok(ms) => maneuvers.extend(ms),
            Err(Error::Infeasible { reason, .. }) => log::info!("omitting {a} -> {b}: {reason}"),
            Err(e) => failed.push(format!("{a} -> {b} ({e})")),
        }
    }
    if !failed.is_empty() {
        return Err(Error::Build(failed));
    }
    Ok(MotionPrimitiveAutomaton {
        params,
        step_duration,
        trims: vertices,
        maneuvers,
    })
}

fn solve_pair(problem: &ManeuverProblem, objectives: &[Objective]) -> Result<Vec<Maneuver>> {
    if objectives.is_empty() {
        return Ok(Vec::new());
    }
    problem.check_feasible()?;
    let anchors = problem.anchors()?;
    objectives
        .iter()
        .map(|&o| problem.solve_objective(o, Some(&anchors)))
        .collect()
}

/// Builds the universal automaton from the standard trim table with the
/// default connectivity and all three objectives.
pub fn standard_universal_automaton() -> Result<MotionPrimitiveAutomaton> {
    let trims = crate::trims::standard_trim_table();
    let pairs = default_connectivity(&trims);
    build_universal_automaton(&trims, &Objective::ALL, &pairs, &BuildOptions::default())
}

/// Which trims and which objective a configured subgraph keeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphConfig {
    pub enabled_trims: BTreeSet<TrimId>,
    pub objective: Objective,
}

impl SubgraphConfig {
    /// Validates the set and requires exactly one objective.
    pub fn new(
        enabled_trims: impl IntoIterator<Item = TrimId>,
        objectives: &[Objective],
    ) -> Result<Self> {
        let mut labels = objectives.to_vec();
        labels.sort();
        labels.dedup();
        let [objective] = labels[..] else {
            return Err(Error::Config(format!(
                "a subgraph uses exactly one objective, got {}",
                labels.len()
            )));
        };
        let cfg = Self {
            enabled_trims: enabled_trims.into_iter().collect(),
            objective,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled_trims.is_empty() {
            return Err(Error::Config("subgraph enables no trims".into()));
        }
        if !self.enabled_trims.contains(&STANDSTILL) {
            return Err(Error::Config(format!(
                "subgraph must enable the standstill trim {STANDSTILL}"
            )));
        }
        Ok(())
    }
}

/// The four evaluated subgraphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preset {
    A,
    B,
    C,
    D,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::A, Preset::B, Preset::C, Preset::D];

    pub fn config(&self) -> SubgraphConfig {
        let all = (1..=12).map(TrimId);
        let (trims, objective): (BTreeSet<TrimId>, Objective) = match self {
            Preset::A => (all.collect(), Objective::J1),
            Preset::B => (all.collect(), Objective::J2),
            Preset::C => (all.collect(), Objective::J3),
            Preset::D => (
                [1, 2, 4, 6, 7, 8, 10, 12].into_iter().map(TrimId).collect(),
                Objective::J3,
            ),
        };
        SubgraphConfig {
            enabled_trims: trims,
            objective,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Preset::A),
            "B" | "b" => Ok(Preset::B),
            "C" | "c" => Ok(Preset::C),
            "D" | "d" => Ok(Preset::D),
            other => Err(Error::Parse {
                context: "preset".into(),
                message: format!("unknown preset '{other}' (expected A, B, C or D)"),
            }),
        }
    }
}

/// Restricts `ua` to the enabled trims and the maneuvers of one objective.
pub fn configure_subgraph(
    ua: &MotionPrimitiveAutomaton,
    cfg: &SubgraphConfig,
) -> Result<MotionPrimitiveAutomaton> {
    cfg.validate()?;
    for id in &cfg.enabled_trims {
        if !ua.contains(*id) {
            return Err(Error::Config(format!(
                "enabled trim {id} is not in the automaton"
            )));
        }
    }
    if !ua.maneuvers.is_empty() && !ua.objectives().contains(&cfg.objective) {
        return Err(Error::Config(format!(
            "automaton has no {} maneuvers",
            cfg.objective
        )));
    }
    let keep = |id: &TrimId| cfg.enabled_trims.contains(id);
    Ok(MotionPrimitiveAutomaton {
        params: ua.params,
        step_duration: ua.step_duration,
        trims: ua
            .trims
            .iter()
            .filter(|v| keep(&v.trim.id))
            .copied()
            .collect(),
        maneuvers: ua
            .maneuvers
            .iter()
            .filter(|m| keep(&m.from) && keep(&m.to) && m.objective == Some(cfg.objective))
            .cloned()
            .collect(),
    })
}

/// Convenience for an automaton holding only standstill.
pub fn standstill_only(params: VehicleParams) -> Result<MotionPrimitiveAutomaton> {
    let t = Trim::new(STANDSTILL.0, 0.0, 0.0);
    build_universal_automaton(
        &[t],
        &Objective::ALL,
        &[],
        &BuildOptions {
            params,
            ..BuildOptions::default()
        },
    )
}
