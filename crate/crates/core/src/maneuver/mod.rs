//! Optimal maneuvers between trims.
//!
//! A maneuver is the solution of a fixed-duration optimal control problem
//! that starts at the origin in one trim's `(v, delta)` and ends in the
//! other trim's `(v, delta)`; its end pose is free and becomes the edge
//! displacement in the automaton. Competing objectives are traded off by a
//! weighted sum of min-max normalized costs.

mod export;
mod pareto;
mod solver;
mod transcription;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::trims::{Trim, TrimId};
use crate::vehicle::{rk4, GroupElement, Input, State, VehicleParams};

pub use export::{front_csv, front_svg, traces_svg, trajectory_csv, write_pareto, FRONT_FILE};
pub use pareto::{nondominated_filter, sweep_pareto, uniform_weights, ParetoPoint};
pub use solver::SolverOptions;

use solver::{Channel, PathBound, Problem, ScalarObjective};
use transcription::Transcription;

/// Default number of control intervals.
pub const DEFAULT_INTERVALS: usize = 20;

/// A maneuver trajectory in its local frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maneuver {
    pub from: TrimId,
    pub to: TrimId,
    /// Objective this maneuver is optimal for, if it is an automaton edge.
    pub objective: Option<Objective>,
    /// Scalarization weight on the normalized `J1`.
    pub weight: f64,
    pub duration: f64,
    /// RK4 steps per control interval.
    pub substeps: usize,
    pub controls: Vec<Input>,
    pub states: Vec<State>,
    pub displacement: GroupElement,
    /// `(J1, J2, J3)`.
    pub costs: [f64; 3],
}

/// Residuals of a maneuver against its defining constraints.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ManeuverResiduals {
    /// Largest deviation of a stored state from re-integration.
    pub dynamics: f64,
    /// Largest boundary mismatch (start state and terminal speed/steering).
    pub boundary: f64,
    /// Largest violation of the speed, steering, or input bounds.
    pub bounds: f64,
    /// Displacement versus the final stored pose.
    pub displacement: f64,
}

impl Maneuver {
    pub fn intervals(&self) -> usize {
        self.controls.len()
    }

    pub fn interval_duration(&self) -> f64 {
        self.duration / self.intervals() as f64
    }

    pub fn end_state(&self) -> &State {
        self.states.last().expect("maneuver has states")
    }

    /// State on the grid node closest to the middle of the maneuver.
    pub fn mid_state(&self) -> &State {
        &self.states[self.intervals() / 2]
    }

    /// Checks the stored trajectory against the trims it connects.
    pub fn residuals(&self, from: &Trim, to: &Trim, params: &VehicleParams) -> ManeuverResiduals {
        let mut res = ManeuverResiduals::default();
        if self.states.len() != self.controls.len() + 1
            || self.controls.is_empty()
            || self.substeps == 0
        {
            res.dynamics = f64::INFINITY;
            return res;
        }
        let h = self.interval_duration() / self.substeps as f64;
        for (i, u) in self.controls.iter().enumerate() {
            let mut x = self.states[i].to_array();
            for _ in 0..self.substeps {
                x = rk4(&x, u, h, params);
            }
            res.dynamics = res
                .dynamics
                .max(State::from_array(x).max_abs_diff(&self.states[i + 1]));
        }
        if !res.dynamics.is_finite() {
            res.dynamics = f64::INFINITY;
        }
        let end = self.end_state();
        res.boundary = self.states[0]
            .max_abs_diff(&from.start_state())
            .max((end.v - to.v).abs())
            .max((end.delta - to.delta).abs());
        for x in &self.states {
            let over = (x.v - params.v_max)
                .max(params.v_min - x.v)
                .max(x.delta.abs() - params.delta_max);
            res.bounds = res.bounds.max(over);
        }
        for u in &self.controls {
            let over =
                (u.u_vdot.abs() - params.accel_max).max(u.u_deltadot.abs() - params.steer_rate_max);
            res.bounds = res.bounds.max(over);
        }
        res.displacement = self.displacement.max_abs_diff(&end.pose());
        res
    }
}

/// `(J1, J2, J3)` of a stored trajectory: trapezoidal quadrature of the
/// position term on the grid, exact integral of the piecewise-constant
/// effort term.
pub fn evaluate_objectives(m: &Maneuver) -> [f64; 3] {
    let n = m.controls.len();
    if n == 0 {
        return [0.0; 3];
    }
    let dt = m.interval_duration();
    let j1: f64 = m
        .states
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let w = if k == 0 || k == n { 0.5 * dt } else { dt };
            -w * (x.s_x * x.s_x + x.s_y * x.s_y)
        })
        .sum();
    let j2: f64 = dt * m.controls.iter().map(Input::norm_squared).sum::<f64>();
    [j1, j2, 0.5 * j1 + 0.5 * j2]
}

/// Affine normalization `(J - offset) / scale` for the two base objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: [f64; 2],
    pub scale: [f64; 2],
}

/// The two single-objective solutions and the normalization they induce.
#[derive(Debug, Clone)]
pub struct Anchors {
    pub j1_optimal: Maneuver,
    pub j2_optimal: Maneuver,
    pub normalization: Normalization,
}

/// Fixed-duration two-point maneuver problem between trims.
#[derive(Debug, Clone)]
pub struct ManeuverProblem {
    pub from: Trim,
    pub to: Trim,
    pub duration: f64,
    pub intervals: usize,
    pub substeps: usize,
    pub params: VehicleParams,
    pub options: SolverOptions,
}

impl ManeuverProblem {
    pub fn new(from: Trim, to: Trim, params: VehicleParams) -> Self {
        Self {
            from,
            to,
            duration: from.step_duration,
            intervals: DEFAULT_INTERVALS,
            substeps: 1,
            params,
            options: SolverOptions::default(),
        }
    }

    pub fn with_intervals(mut self, intervals: usize) -> Self {
        self.intervals = intervals;
        self
    }

    fn infeasible(&self, reason: String) -> Error {
        Error::Infeasible {
            from: self.from.id.to_string(),
            to: self.to.id.to_string(),
            reason,
        }
    }

    fn transcription(&self) -> Transcription {
        Transcription::new(
            self.params,
            self.from.start_state().to_array(),
            self.duration,
            self.intervals,
            self.substeps,
        )
    }

    fn channels(&self) -> [Channel; 2] {
        let dt = self.duration / self.intervals as f64;
        [
            Channel {
                lo: -self.params.accel_max,
                hi: self.params.accel_max,
                sum: (self.to.v - self.from.v) / dt,
            },
            Channel {
                lo: -self.params.steer_rate_max,
                hi: self.params.steer_rate_max,
                sum: (self.to.delta - self.from.delta) / dt,
            },
        ]
    }

    /// Checks that some control sequence can connect the two trims.
    pub fn check_feasible(&self) -> Result<()> {
        if !(self.duration > 0.0) || self.intervals == 0 || self.substeps == 0 {
            return Err(Error::domain(
                "duration, intervals and substeps must be positive",
            ));
        }
        for trim in [&self.from, &self.to] {
            if !self.params.state_in_bounds(trim.v, trim.delta, 0.0) {
                return Err(self.infeasible(format!(
                    "trim {} (v={}, delta={}) violates the speed/steering bounds",
                    trim.id, trim.v, trim.delta
                )));
            }
        }
        let rate_v = (self.to.v - self.from.v) / self.duration;
        if rate_v.abs() > self.params.accel_max * (1.0 + 1e-12) {
            return Err(self.infeasible(format!(
                "required |dv/T| = {:.4} exceeds accel_max = {}",
                rate_v.abs(),
                self.params.accel_max
            )));
        }
        let rate_d = (self.to.delta - self.from.delta) / self.duration;
        if rate_d.abs() > self.params.steer_rate_max * (1.0 + 1e-12) {
            return Err(self.infeasible(format!(
                "required |ddelta/T| = {:.4} exceeds steer_rate_max = {}",
                rate_d.abs(),
                self.params.steer_rate_max
            )));
        }
        Ok(())
    }

    /// Constant controls matching `(dv/T, ddelta/T)`.
    fn initial_guess(&self) -> Vec<f64> {
        let a = (self.to.v - self.from.v) / self.duration;
        let r = (self.to.delta - self.from.delta) / self.duration;
        (0..self.intervals).flat_map(|_| [a, r]).collect()
    }

    /// Normalization used when no anchors exist: characteristic magnitudes
    /// of each objective for this vehicle and duration.
    pub fn characteristic_normalization(&self) -> Normalization {
        let t = self.duration;
        let p = &self.params;
        let j1 = p.v_max * p.v_max * t * t * t;
        let j2 = (p.accel_max * p.accel_max + p.steer_rate_max * p.steer_rate_max) * t;
        Normalization {
            offset: [0.0, 0.0],
            scale: [j1, j2],
        }
    }

    /// Minimizes `w * J1_hat + (1 - w) * J2_hat`.
    pub fn solve_scalarized(&self, weight: f64, norm: &Normalization) -> Result<Maneuver> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain(format!("weight {weight} outside [0, 1]")));
        }
        self.check_feasible()?;
        let tr = self.transcription();
        let problem = Problem {
            tr: &tr,
            objective: ScalarObjective {
                w1: weight / norm.scale[0],
                w2: (1.0 - weight) / norm.scale[1],
            },
            channels: self.channels(),
            bounds: [
                PathBound {
                    start: self.from.v,
                    lo: self.params.v_min,
                    hi: self.params.v_max,
                },
                PathBound {
                    start: self.from.delta,
                    lo: -self.params.delta_max,
                    hi: self.params.delta_max,
                },
            ],
        };
        let outcome = problem.solve(&self.initial_guess(), &self.options);
        let maneuver = self.assemble(&tr, &outcome.z, weight);
        if !outcome.converged {
            return Err(Error::Convergence {
                iterations: outcome.iterations,
                violation: outcome.violation,
                stationarity: outcome.stationarity,
                best: Box::new(maneuver),
            });
        }
        Ok(maneuver)
    }

    fn assemble(&self, tr: &Transcription, z: &[f64], weight: f64) -> Maneuver {
        let traj = tr.rollout(z);
        let states: Vec<State> = tr.nodes(&traj).into_iter().map(State::from_array).collect();
        let controls: Vec<Input> = (0..self.intervals)
            .map(|i| Transcription::input(z, i))
            .collect();
        let displacement = states.last().expect("nonempty").pose();
        let mut m = Maneuver {
            from: self.from.id,
            to: self.to.id,
            objective: None,
            weight,
            duration: self.duration,
            substeps: self.substeps,
            controls,
            states,
            displacement,
            costs: [0.0; 3],
        };
        m.costs = evaluate_objectives(&m);
        m
    }

    /// Solves both single-objective problems and derives the min-max
    /// normalization from them.
    pub fn anchors(&self) -> Result<Anchors> {
        let base = self.characteristic_normalization();
        let j1_optimal = self.solve_scalarized(1.0, &base)?;
        let j2_optimal = self.solve_scalarized(0.0, &base)?;
        let utopia = [j1_optimal.costs[0], j2_optimal.costs[1]];
        let nadir = [j2_optimal.costs[0], j1_optimal.costs[1]];
        let mut scale = [0.0; 2];
        for k in 0..2 {
            let range = nadir[k] - utopia[k];
            scale[k] = if range > 1e-9 * base.scale[k] {
                range
            } else {
                base.scale[k]
            };
        }
        Ok(Anchors {
            j1_optimal,
            j2_optimal,
            normalization: Normalization {
                offset: utopia,
                scale,
            },
        })
    }

    /// Optimal maneuver for one named objective, reusing anchors if given.
    pub fn solve_objective(
        &self,
        objective: Objective,
        anchors: Option<&Anchors>,
    ) -> Result<Maneuver> {
        let mut m = match (objective, anchors) {
            (Objective::J1, Some(a)) => a.j1_optimal.clone(),
            (Objective::J2, Some(a)) => a.j2_optimal.clone(),
            (Objective::J1 | Objective::J2, None) => {
                self.solve_scalarized(objective.weight(), &self.characteristic_normalization())?
            }
            (Objective::J3, Some(a)) => self.solve_scalarized(0.5, &a.normalization)?,
            (Objective::J3, None) => {
                let a = self.anchors()?;
                self.solve_scalarized(0.5, &a.normalization)?
            }
        };
        m.objective = Some(objective);
        m.weight = objective.weight();
        Ok(m)
    }
}

/// Optimal maneuver between two trims for a named objective.
pub fn build_maneuver(
    from: &Trim,
    to: &Trim,
    objective: Objective,
    params: &VehicleParams,
    intervals: usize,
) -> Result<Maneuver> {
    ManeuverProblem::new(*from, *to, *params)
        .with_intervals(intervals)
        .solve_objective(objective, None)
}
