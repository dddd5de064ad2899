use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::MotionPrimitiveAutomaton;
use crate::maneuver::{evaluate_objectives, ManeuverResiduals};
use crate::objective::Objective;
use crate::trims::{trim_displacement, TrimId, STANDSTILL};

const DYNAMICS_TOL: f64 = 1e-9;
const BOUNDARY_TOL: f64 = 1e-6;
const BOUNDS_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeReport {
    pub index: usize,
    pub from: TrimId,
    pub to: TrimId,
    pub objective: Option<Objective>,
    pub dynamics: f64,
    pub boundary: f64,
    pub bounds: f64,
    pub displacement: f64,
    pub cost: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub edges: Vec<EdgeReport>,
    /// Next trim on a shortest route to standstill, for every trim that has one.
    pub routes: BTreeMap<TrimId, TrimId>,
    pub unreachable: Vec<TrimId>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Next hop toward standstill for each trim that can reach it, using
/// breadth-first search over reversed edges. Ties go to the smallest id.
/// Standstill maps to itself.
pub fn routes_to_standstill(a: &MotionPrimitiveAutomaton) -> BTreeMap<TrimId, TrimId> {
    let mut preds: BTreeMap<TrimId, BTreeSet<TrimId>> = BTreeMap::new();
    for m in &a.maneuvers {
        if a.contains(m.from) && a.contains(m.to) {
            preds.entry(m.to).or_default().insert(m.from);
        }
    }
    let mut next = BTreeMap::new();
    if !a.contains(STANDSTILL) {
        return next;
    }
    next.insert(STANDSTILL, STANDSTILL);
    let mut queue = VecDeque::from([STANDSTILL]);
    while let Some(t) = queue.pop_front() {
        for &p in preds.get(&t).into_iter().flatten() {
            if let std::collections::btree_map::Entry::Vacant(e) = next.entry(p) {
                e.insert(t);
                queue.push_back(p);
            }
        }
    }
    next
}

/// Re-checks every invariant of `a` without modifying it.
pub fn validate_automaton(a: &MotionPrimitiveAutomaton) -> ValidationReport {
    let mut errors = Vec::new();
    if let Err(e) = a.params.validate() {
        errors.push(e.to_string());
    }
    let mut ids = BTreeSet::new();
    for v in &a.trims {
        if !ids.insert(v.trim.id) {
            errors.push(format!("duplicate trim {}", v.trim.id));
        }
        if let Err(e) = v.trim.validate(&a.params) {
            errors.push(e.to_string());
        }
        if v.trim.step_duration != a.step_duration {
            errors.push(format!(
                "trim {} step duration differs from the automaton's",
                v.trim.id
            ));
        }
        match trim_displacement(&v.trim, &a.params) {
            Ok(g) if g.max_abs_diff(&v.self_loop) <= DYNAMICS_TOL => {}
            Ok(_) => errors.push(format!(
                "trim {} self-loop displacement is inconsistent",
                v.trim.id
            )),
            Err(e) => errors.push(format!("trim {}: {e}", v.trim.id)),
        }
    }

    let mut edges = Vec::with_capacity(a.maneuvers.len());
    let mut keys = BTreeSet::new();
    for (index, m) in a.maneuvers.iter().enumerate() {
        let label = format!("edge {index} ({} -> {})", m.from, m.to);
        let (Some(from), Some(to)) = (a.trim(m.from), a.trim(m.to)) else {
            errors.push(format!("{label}: endpoint trim missing"));
            continue;
        };
        if m.objective.is_none() {
            errors.push(format!("{label}: no objective label"));
        }
        if !keys.insert((m.from, m.to, m.objective)) {
            errors.push(format!("{label}: duplicate edge"));
        }
        if (m.duration - a.step_duration).abs() > 1e-12 {
            errors.push(format!(
                "{label}: duration {} differs from the step duration",
                m.duration
            ));
        }
        let r: ManeuverResiduals = m.residuals(from, to, &a.params);
        let cost = if m.controls.len() + 1 == m.states.len() && !m.controls.is_empty() {
            let c = evaluate_objectives(m);
            (0..3)
                .map(|k| (c[k] - m.costs[k]).abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        let checks = [
            ("dynamics", r.dynamics, DYNAMICS_TOL),
            ("boundary", r.boundary, BOUNDARY_TOL),
            ("bounds", r.bounds, BOUNDS_TOL),
            ("displacement", r.displacement, DYNAMICS_TOL),
            ("cost", cost, COST_TOL),
        ];
        let mut ok = true;
        for (name, value, tol) in checks {
            // written so that NaN fails
            if !(value <= tol) {
                ok = false;
                errors.push(format!(
                    "{label}: {name} residual {value:.3e} exceeds {tol:.0e}"
                ));
            }
        }
        edges.push(EdgeReport {
            index,
            from: m.from,
            to: m.to,
            objective: m.objective,
            dynamics: r.dynamics,
            boundary: r.boundary,
            bounds: r.bounds,
            displacement: r.displacement,
            cost,
            ok,
        });
    }

    let routes = routes_to_standstill(a);
    if !a.contains(STANDSTILL) {
        errors.push(format!("standstill trim {STANDSTILL} missing"));
    }
    let unreachable: Vec<TrimId> = ids
        .iter()
        .copied()
        .filter(|t| !routes.contains_key(t))
        .collect();
    if a.contains(STANDSTILL) && !unreachable.is_empty() {
        let names: Vec<String> = unreachable.iter().map(|t| t.to_string()).collect();
        errors.push(format!(
            "cannot reach {STANDSTILL} from {}",
            names.join(", ")
        ));
    }
    ValidationReport {
        errors,
        edges,
        routes,
        unreachable,
    }
}
