//! Trim primitives: steady motions with zero input.
//!
//! With `u = 0` the speed and steering stay constant, so the sideslip angle
//! and the yaw rate are constant too and the flow is either a straight line
//! or a circular arc with a closed form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::RunningCost;
use crate::vehicle::{sideslip_beta, GroupElement, Input, State, VehicleParams};

/// Default primitive duration [s].
pub const STEP_DURATION: f64 = 0.2;

/// Identifier of a trim; the standard table uses 1..=12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrimId(pub u32);

/// The standstill trim every automaton must contain.
pub const STANDSTILL: TrimId = TrimId(1);

impl fmt::Display for TrimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pi{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trim {
    pub id: TrimId,
    pub v: f64,
    pub delta: f64,
    #[serde(default = "default_step")]
    pub step_duration: f64,
}

fn default_step() -> f64 {
    STEP_DURATION
}

impl Trim {
    pub fn new(id: u32, v: f64, delta: f64) -> Self {
        Self {
            id: TrimId(id),
            v,
            delta,
            step_duration: STEP_DURATION,
        }
    }

    pub fn start_state(&self) -> State {
        State::at_origin(self.v, self.delta)
    }

    pub fn validate(&self, params: &VehicleParams) -> Result<()> {
        if !(self.step_duration > 0.0) {
            return Err(Error::Config(format!(
                "trim {}: step duration must be positive",
                self.id
            )));
        }
        if !params.state_in_bounds(self.v, self.delta, 0.0) {
            return Err(Error::Config(format!(
                "trim {} (v={}, delta={}) violates vehicle bounds",
                self.id, self.v, self.delta
            )));
        }
        Ok(())
    }

    /// The trim with `delta` negated.
    pub fn mirrored(&self, id: u32) -> Trim {
        Trim {
            id: TrimId(id),
            delta: -self.delta,
            ..*self
        }
    }
}

/// The twelve trims of the universal automaton.
pub fn standard_trim_table() -> Vec<Trim> {
    const V: [f64; 12] = [0.0, 0.4, 0.5, 0.6, 0.7, 0.8, 0.8, 0.8, 0.7, 0.6, 0.5, 0.4];
    const DELTA: [f64; 12] = [
        0.0, -0.60, -0.48, -0.36, -0.24, -0.12, 0.0, 0.12, 0.24, 0.36, 0.48, 0.60,
    ];
    V.iter()
        .zip(DELTA.iter())
        .enumerate()
        .map(|(i, (&v, &delta))| Trim::new(i as u32 + 1, v, delta))
        .collect()
}

/// Yaw rate of a trim [rad/s].
pub fn trim_yaw_rate(trim: &Trim, params: &VehicleParams) -> Result<f64> {
    let beta = sideslip_beta(trim.delta, params)?;
    Ok(trim.v / params.wheelbase * trim.delta.tan() * beta.cos())
}

/// Closed-form state after `t` seconds in the trim, starting at the origin.
pub fn trim_flow(trim: &Trim, t: f64, params: &VehicleParams) -> Result<State> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!(
            "trim flow time must be >= 0, got {t}"
        )));
    }
    let beta = sideslip_beta(trim.delta, params)?;
    let omega = trim_yaw_rate(trim, params)?;
    let v = trim.v;
    let (s_x, s_y) = if omega.abs() < 1e-12 {
        (v * t * beta.cos(), v * t * beta.sin())
    } else {
        let r = v / omega;
        let phase = omega * t + beta;
        (
            r * (phase.sin() - beta.sin()),
            r * (beta.cos() - phase.cos()),
        )
    };
    Ok(State::new(s_x, s_y, omega * t, v, trim.delta))
}

/// Pose change after one step in the trim (the automaton self-loop).
pub fn trim_displacement(trim: &Trim, params: &VehicleParams) -> Result<GroupElement> {
    Ok(trim_flow(trim, trim.step_duration, params)?.pose())
}

/// `T * l(x(0), 0)`: the cost of staying `duration` seconds in the trim.
pub fn unit_cost<C: RunningCost + ?Sized>(
    trim: &Trim,
    cost: &C,
    duration: f64,
    params: &VehicleParams,
) -> Result<f64> {
    let x0 = trim_flow(trim, 0.0, params)?;
    Ok(duration * cost.evaluate(&x0, &Input::ZERO))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Objective;
    use crate::vehicle::integrate;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    fn table(i: u32) -> Trim {
        standard_trim_table()[i as usize - 1]
    }

    #[test]
    fn table_entries() {
        let t = standard_trim_table();
        assert_eq!(t.len(), 12);
        assert_eq!((t[0].v, t[0].delta), (0.0, 0.0));
        assert_eq!((t[6].v, t[6].delta), (0.8, 0.0));
        assert_eq!((t[11].v, t[11].delta), (0.4, 0.60));
        assert_eq!((t[1].v, t[1].delta), (0.4, -0.60));
        for trim in &t {
            trim.validate(&params()).unwrap();
            assert_eq!(trim.step_duration, 0.2);
        }
    }

    #[test]
    fn standstill_flow_is_fixed() {
        for t in [0.0, 0.2, 5.0] {
            assert_eq!(
                trim_flow(&table(1), t, &params()).unwrap(),
                State::default()
            );
        }
    }

    #[test]
    fn straight_flow() {
        let s = trim_flow(&table(7), 0.2, &params()).unwrap();
        assert!(s.max_abs_diff(&State::new(0.16, 0.0, 0.0, 0.8, 0.0)) < 1e-15);
        let g = trim_displacement(&table(7), &params()).unwrap();
        assert!(g.max_abs_diff(&GroupElement::new(0.16, 0.0, 0.0)) < 1e-15);
        assert_eq!(
            trim_displacement(&table(1), &params()).unwrap(),
            GroupElement::IDENTITY
        );
    }

    #[test]
    fn tight_arc_matches_integrator() {
        let trim = table(12);
        let omega = trim_yaw_rate(&trim, &params()).unwrap();
        assert!((omega - 1.726_167_78).abs() < 1e-8);
        let s = trim_flow(&trim, 0.2, &params()).unwrap();
        assert!((s.psi - 0.345_233_56).abs() < 1e-8);
        let rk = integrate(&trim.start_state(), &Input::ZERO, 0.2, 10, &params()).unwrap();
        assert!(s.max_abs_diff(&rk) < 1e-6);
    }

    #[test]
    fn rejects_negative_time() {
        assert!(trim_flow(&table(7), -0.1, &params()).is_err());
    }

    #[test]
    fn mirrored_displacement() {
        let right = trim_displacement(&table(2), &params()).unwrap();
        let left = trim_displacement(&table(12), &params()).unwrap();
        assert!((right.dx - left.dx).abs() < 1e-9);
        assert!((right.dy + left.dy).abs() < 1e-9);
        assert!((right.dpsi + left.dpsi).abs() < 1e-9);
        assert!(left.dy > 0.0);
    }

    #[test]
    fn unit_costs() {
        let p = params();
        for trim in standard_trim_table() {
            assert_eq!(unit_cost(&trim, &Objective::J2, 0.2, &p).unwrap(), 0.0);
            assert_eq!(unit_cost(&trim, &Objective::J1, 0.2, &p).unwrap(), 0.0);
        }
        let speed_sq = |x: &State, _: &Input| x.v * x.v;
        let c = unit_cost(&table(7), &speed_sq, 0.2, &p).unwrap();
        assert!((c - 0.128).abs() < 1e-15);
        let c2 = unit_cost(&table(7), &speed_sq, 0.6, &p).unwrap();
        assert!((c2 - 3.0 * c).abs() < 1e-15);
    }
}
