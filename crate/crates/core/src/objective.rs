//! Running costs used to rank motion primitives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::vehicle::{Input, State};

/// A running cost `l(x, u)`.
pub trait RunningCost {
    fn evaluate(&self, x: &State, u: &Input) -> f64;
}

impl<F> RunningCost for F
where
    F: Fn(&State, &Input) -> f64,
{
    fn evaluate(&self, x: &State, u: &Input) -> f64 {
        self(x, u)
    }
}

/// The three maneuver objectives.
///
/// * `J1`: negative squared distance from the maneuver start, integrated
///   over time. Minimizing it favours long displacements.
/// * `J2`: integrated squared input (effort / comfort).
/// * `J3`: the equal-weight blend of the two.
///
/// `J1` is only invariant under the symmetry group when evaluated in the
/// maneuver-local frame, so maneuvers are always optimized starting from
/// the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Objective {
    J1,
    J2,
    J3,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::J1, Objective::J2, Objective::J3];

    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::J1 => "J1",
            Objective::J2 => "J2",
            Objective::J3 => "J3",
        }
    }

    /// Scalarization weight on the normalized `J1` for this objective.
    pub fn weight(&self) -> f64 {
        match self {
            Objective::J1 => 1.0,
            Objective::J2 => 0.0,
            Objective::J3 => 0.5,
        }
    }
}

impl RunningCost for Objective {
    fn evaluate(&self, x: &State, u: &Input) -> f64 {
        let l1 = -(x.s_x * x.s_x + x.s_y * x.s_y);
        let l2 = u.norm_squared();
        match self {
            Objective::J1 => l1,
            Objective::J2 => l2,
            Objective::J3 => 0.5 * l1 + 0.5 * l2,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "J1" | "j1" => Ok(Objective::J1),
            "J2" | "j2" => Ok(Objective::J2),
            "J3" | "j3" => Ok(Objective::J3),
            other => Err(Error::Parse {
                context: "objective".into(),
                message: format!("unknown objective label '{other}'"),
            }),
        }
    }
}

/// Parses a comma-separated objective list such as `J1,J2,J3`.
pub fn parse_objectives(list: &str) -> Result<Vec<Objective>, Error> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blend_is_pointwise_average() {
        let x = State::new(0.3, -0.4, 1.0, 0.5, 0.1);
        let u = Input::new(2.0, -1.0);
        let l1 = Objective::J1.evaluate(&x, &u);
        let l2 = Objective::J2.evaluate(&x, &u);
        assert!((l1 + 0.25).abs() < 1e-15);
        assert_eq!(l2, 5.0);
        assert_eq!(Objective::J3.evaluate(&x, &u), 0.5 * l1 + 0.5 * l2);
    }

    #[test]
    fn parse_labels() {
        assert_eq!(
            parse_objectives("J1,J2,J3").unwrap(),
            vec![Objective::J1, Objective::J2, Objective::J3]
        );
        assert!(parse_objectives("J1,J4").is_err());
    }
}
