//! Python bindings: automata, Pareto sweeps, single plans and scenario runs.
//! Structured results come back as plain dicts and lists.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use mpa_core::automaton::{
    build_universal_automaton, configure_subgraph, default_connectivity, from_json, load_automaton,
    save_automaton, to_json, validate_automaton, BuildOptions, MotionPrimitiveAutomaton, Preset,
};
use mpa_core::harness::{
    compute_metrics, export_report, load_scenario, parse_scenario, run_scenario, RunConfig, RunLog,
    Scenario, Simulation,
};
use mpa_core::maneuver::{build_maneuver, sweep_pareto, uniform_weights, ManeuverProblem};
use mpa_core::objective::{parse_objectives, Objective};
use mpa_core::planner::PlannerConfig;
use mpa_core::trims::{standard_trim_table, trim_flow as core_trim_flow, Trim, TrimId};
use mpa_core::vehicle::{integrate as core_integrate, Input, State, VehicleParams};

create_exception!(mpa, MpaError, PyValueError);

fn err(e: mpa_core::Error) -> PyErr {
    MpaError::new_err(e.to_string())
}

/// Serializes through JSON into Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| MpaError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn trim_by_id(id: u32) -> PyResult<Trim> {
    standard_trim_table()
        .into_iter()
        .find(|t| t.id == TrimId(id))
        .ok_or_else(|| MpaError::new_err(format!("no trim {id} in the standard table")))
}

fn objective(name: &str) -> PyResult<Objective> {
    name.parse().map_err(err)
}

fn preset(name: &str) -> PyResult<Preset> {
    name.parse().map_err(err)
}

/// `(from, to, objective, J1, J2, J3)`
type Edge = (u32, u32, Option<&'static str>, f64, f64, f64);

/// A motion-primitive automaton: trims as vertices, maneuvers as edges.
#[pyclass(name = "Automaton", module = "mpa", frozen)]
struct PyAutomaton {
    inner: MotionPrimitiveAutomaton,
}

#[pymethods]
impl PyAutomaton {
    /// The twelve-trim universal automaton with J1, J2 and J3 edges.
    #[staticmethod]
    fn standard(py: Python<'_>) -> PyResult<Self> {
        let inner = py
            .detach(mpa_core::automaton::standard_universal_automaton)
            .map_err(err)?;
        Ok(Self { inner })
    }

    /// Builds from standard trim ids, objective labels and directed pairs.
    /// Omitted pairs default to the neighbour connectivity.
    #[staticmethod]
    #[pyo3(signature = (trims=None, objectives="J1,J2,J3", pairs=None))]
    fn build(
        py: Python<'_>,
        trims: Option<Vec<u32>>,
        objectives: &str,
        pairs: Option<Vec<(u32, u32)>>,
    ) -> PyResult<Self> {
        let table = match trims {
            Some(ids) => ids
                .into_iter()
                .map(trim_by_id)
                .collect::<PyResult<Vec<_>>>()?,
            None => standard_trim_table(),
        };
        let objectives = parse_objectives(objectives).map_err(err)?;
        let pairs: Vec<(TrimId, TrimId)> = match pairs {
            Some(p) => p.into_iter().map(|(a, b)| (TrimId(a), TrimId(b))).collect(),
            None => default_connectivity(&table),
        };
        let inner = py
            .detach(|| {
                build_universal_automaton(&table, &objectives, &pairs, &BuildOptions::default())
            })
            .map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: load_automaton(&path).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: from_json(text, "<string>").map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_automaton(&self.inner, &path).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner).map_err(err)
    }

    /// Restriction to preset `A`, `B`, `C` or `D`.
    fn subgraph(&self, preset_name: &str) -> PyResult<Self> {
        let cfg = preset(preset_name)?.config();
        Ok(Self {
            inner: configure_subgraph(&self.inner, &cfg).map_err(err)?,
        })
    }

    /// Validation errors; empty when the automaton is sound.
    fn validate(&self) -> Vec<String> {
        validate_automaton(&self.inner).errors
    }

    #[getter]
    fn trim_ids(&self) -> Vec<u32> {
        self.inner.trim_ids().into_iter().map(|t| t.0).collect()
    }

    #[getter]
    fn num_maneuvers(&self) -> usize {
        self.inner.maneuvers.len()
    }

    #[getter]
    fn objectives(&self) -> Vec<&'static str> {
        self.inner
            .objectives()
            .iter()
            .map(Objective::as_str)
            .collect()
    }

    fn edges(&self) -> Vec<Edge> {
        self.inner
            .maneuvers
            .iter()
            .map(|m| {
                let [j1, j2, j3] = m.costs;
                (
                    m.from.0,
                    m.to.0,
                    m.objective.as_ref().map(Objective::as_str),
                    j1,
                    j2,
                    j3,
                )
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Automaton(trims={}, maneuvers={}, objectives={:?})",
            self.inner.trims.len(),
            self.inner.maneuvers.len(),
            self.objectives()
        )
    }
}

/// A closed-loop scenario run.
#[pyclass(name = "RunLog", module = "mpa", frozen)]
struct PyRunLog {
    inner: RunLog,
}

#[pymethods]
impl PyRunLog {
    /// Metrics per vehicle in priority order.
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &compute_metrics(&self.inner).vehicles)
    }

    /// Logged rows of one vehicle.
    fn rows<'py>(&self, py: Python<'py>, vehicle: &str) -> PyResult<Bound<'py, PyAny>> {
        let v = self
            .inner
            .vehicles
            .iter()
            .find(|v| v.id == vehicle)
            .ok_or_else(|| MpaError::new_err(format!("no vehicle '{vehicle}'")))?;
        to_py(py, &v.rows)
    }

    /// Writes per-vehicle CSV/SVG files and `report.csv`; returns the paths.
    fn export(&self, out_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
        export_report(&compute_metrics(&self.inner), &self.inner, &out_dir).map_err(err)
    }

    /// True if both runs agree in everything but wall-clock timings.
    fn same_as(&self, other: &PyRunLog) -> bool {
        self.inner.without_timing() == other.inner.without_timing()
    }

    #[getter]
    fn vehicles(&self) -> Vec<String> {
        self.inner.vehicles.iter().map(|v| v.id.clone()).collect()
    }
}

/// Closed-form trim state `(s_x, s_y, psi, v, delta)` after `t` seconds.
#[pyfunction]
fn trim_flow(v: f64, delta: f64, t: f64) -> PyResult<(f64, f64, f64, f64, f64)> {
    let s = core_trim_flow(&Trim::new(0, v, delta), t, &VehicleParams::default()).map_err(err)?;
    Ok((s.s_x, s.s_y, s.psi, s.v, s.delta))
}

/// RK4 integration of the single-track model under a constant input.
#[pyfunction]
#[pyo3(signature = (state, control, duration, substeps=20))]
fn integrate(
    state: (f64, f64, f64, f64, f64),
    control: (f64, f64),
    duration: f64,
    substeps: usize,
) -> PyResult<(f64, f64, f64, f64, f64)> {
    let x = State::new(state.0, state.1, state.2, state.3, state.4);
    let s = core_integrate(
        &x,
        &Input::new(control.0, control.1),
        duration,
        substeps,
        &VehicleParams::default(),
    )
    .map_err(err)?;
    Ok((s.s_x, s.s_y, s.psi, s.v, s.delta))
}

/// The standard trim table as `(id, v, delta)` tuples.
#[pyfunction]
fn standard_trims() -> Vec<(u32, f64, f64)> {
    standard_trim_table()
        .iter()
        .map(|t| (t.id.0, t.v, t.delta))
        .collect()
}

/// Optimal maneuver between two standard trims for one objective.
#[pyfunction]
fn maneuver<'py>(
    py: Python<'py>,
    from_id: u32,
    to_id: u32,
    objective_name: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let (from, to, o) = (
        trim_by_id(from_id)?,
        trim_by_id(to_id)?,
        objective(objective_name)?,
    );
    let m = py
        .detach(|| {
            build_maneuver(
                &from,
                &to,
                o,
                &VehicleParams::default(),
                mpa_core::maneuver::DEFAULT_INTERVALS,
            )
        })
        .map_err(err)?;
    to_py(py, &m)
}

/// Nondominated `{"w", "J1", "J2", "J3"}` points of a weight sweep.
#[pyfunction]
#[pyo3(signature = (from_id, to_id, weights=11))]
fn pareto(
    py: Python<'_>,
    from_id: u32,
    to_id: u32,
    weights: usize,
) -> PyResult<Vec<HashMap<&'static str, f64>>> {
    let problem = ManeuverProblem::new(
        trim_by_id(from_id)?,
        trim_by_id(to_id)?,
        VehicleParams::default(),
    );
    let front = py
        .detach(|| sweep_pareto(&problem, &uniform_weights(weights)))
        .map_err(err)?;
    Ok(front
        .iter()
        .map(|p| {
            let [j1, j2, j3] = p.maneuver.costs;
            HashMap::from([("w", p.weight), ("J1", j1), ("J2", j2), ("J3", j3)])
        })
        .collect())
}

fn scenario_from(scenario: Option<&str>) -> PyResult<Scenario> {
    match scenario {
        None => Ok(Scenario::three_vehicle_crossing()),
        Some(s) if s.trim_start().starts_with('{') => parse_scenario(s, "<string>").map_err(err),
        Some(path) => load_scenario(&PathBuf::from(path)).map_err(err),
    }
}

fn presets_for(
    scenario: &Scenario,
    map: Option<HashMap<String, String>>,
) -> PyResult<Option<Vec<Preset>>> {
    let Some(map) = map else { return Ok(None) };
    let mut out: Vec<Preset> = scenario.vehicles.iter().map(|v| v.preset).collect();
    for (id, name) in map {
        let i = scenario
            .vehicle_index(&id)
            .ok_or_else(|| MpaError::new_err(format!("unknown vehicle '{id}'")))?;
        out[i] = preset(&name)?;
    }
    Ok(Some(out))
}

/// Runs a scenario (a file path, a JSON string, or the built-in one when
/// omitted) with optional per-vehicle presets such as `{"red": "A"}`.
#[pyfunction]
#[pyo3(signature = (automaton, scenario=None, presets=None, steps=None, horizon=8))]
fn simulate(
    py: Python<'_>,
    automaton: &PyAutomaton,
    scenario: Option<&str>,
    presets: Option<HashMap<String, String>>,
    steps: Option<usize>,
    horizon: usize,
) -> PyResult<PyRunLog> {
    let scenario = scenario_from(scenario)?;
    let cfg = RunConfig {
        planner: PlannerConfig {
            horizon,
            ..PlannerConfig::default()
        },
        presets: presets_for(&scenario, presets)?,
        steps,
    };
    let inner = py
        .detach(|| run_scenario(&scenario, &automaton.inner, &cfg))
        .map_err(err)?;
    Ok(PyRunLog { inner })
}

/// The plan one vehicle would follow at cycle `step` (1 is the first).
#[pyfunction]
#[pyo3(signature = (automaton, vehicle, scenario=None, step=1))]
fn plan<'py>(
    py: Python<'py>,
    automaton: &PyAutomaton,
    vehicle: &str,
    scenario: Option<&str>,
    step: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let scenario = scenario_from(scenario)?;
    let i = scenario
        .vehicle_index(vehicle)
        .ok_or_else(|| MpaError::new_err(format!("unknown vehicle '{vehicle}'")))?;
    let mut sim =
        Simulation::new(&scenario, &automaton.inner, &RunConfig::default()).map_err(err)?;
    for _ in 1..step.max(1) {
        sim.advance().map_err(err)?;
    }
    let cycle = sim.plan_cycle();
    to_py(py, &cycle.outcomes[i])
}

#[pymodule]
fn mpa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MpaError", m.py().get_type::<MpaError>())?;
    m.add_class::<PyAutomaton>()?;
    m.add_class::<PyRunLog>()?;
    m.add_function(wrap_pyfunction!(trim_flow, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(standard_trims, m)?)?;
    m.add_function(wrap_pyfunction!(maneuver, m)?)?;
    m.add_function(wrap_pyfunction!(pareto, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    Ok(())
}
