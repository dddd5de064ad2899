//! Scenario files.
//!
//! JSON with the vehicles in priority order:
//!
//! ```text
//! {
//!   "name": "three_vehicle_crossing",
//!   "map_extent": [4.5, 4.0],
//!   "steps": 150,
//!   "step_duration": 0.2,
//!   "vehicles": [
//!     { "id": "red", "color": "#d62728", "preset": "C", "nominal_speed": 0.8,
//!       "reference": { "lemniscate": { "center": [2.25, 2.0], "half_width": 1.0,
//!                                      "samples": 720, "phase": 1.5707963267948966 } } },
//!     { "id": "blue", ..., "reference": { "circle": { "center": [2.25, 1.0], "radius": 1.0,
//!                                                    "samples": 720, "start_angle": -1.57,
//!                                                    "clockwise": false } } },
//!     { "id": "green", ..., "reference": { "polyline": [[x, y], ...] } }
//!   ]
//! }
//! ```
//!
//! A vehicle starts at rest in the standstill trim at `start` (`[x, y, psi]`),
//! or at the first reference vertex facing along the path if `start` is
//! omitted.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::path::{circle, lemniscate, ReferencePath};
use crate::automaton::Preset;
use crate::error::{Error, Result};
use crate::planner::Point;
use crate::trims::{TrimId, STANDSTILL};
use crate::vehicle::GroupElement;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSpec {
    Polyline(Vec<Point>),
    Circle {
        center: Point,
        radius: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        start_angle: f64,
        #[serde(default)]
        clockwise: bool,
    },
    Lemniscate {
        center: Point,
        half_width: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        phase: f64,
    },
}

fn default_samples() -> usize {
    720
}

impl PathSpec {
    pub fn points(&self) -> Result<Vec<Point>> {
        match self {
            PathSpec::Polyline(p) => Ok(p.clone()),
            PathSpec::Circle {
                center,
                radius,
                samples,
                start_angle,
                clockwise,
            } => {
                check_shape(*radius, *samples)?;
                Ok(circle(*center, *radius, *samples, *start_angle, *clockwise))
            }
            PathSpec::Lemniscate {
                center,
                half_width,
                samples,
                phase,
            } => {
                check_shape(*half_width, *samples)?;
                Ok(lemniscate(*center, *half_width, *samples, *phase))
            }
        }
    }
}

fn check_shape(size: f64, samples: usize) -> Result<()> {
    if !(size > 0.0) || !size.is_finite() {
        return Err(Error::Validation(format!(
            "shape size must be positive, got {size}"
        )));
    }
    if samples < 3 {
        return Err(Error::Validation("a shape needs at least 3 samples".into()));
    }
    Ok(())
}

fn default_trim() -> TrimId {
    STANDSTILL
}

fn default_speed() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub id: String,
    #[serde(default)]
    pub color: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 3]>,
    #[serde(default = "default_trim")]
    pub start_trim: TrimId,
    pub reference: PathSpec,
    pub preset: Preset,
    /// Speed at which the reference point advances [m/s].
    #[serde(default = "default_speed")]
    pub nominal_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub map_extent: [f64; 2],
    pub steps: usize,
    pub step_duration: f64,
    pub vehicles: Vec<VehicleSpec>,
}

impl VehicleSpec {
    pub fn path(&self) -> Result<ReferencePath> {
        ReferencePath::new(&self.reference.points()?)
            .map_err(|e| Error::Validation(format!("vehicle '{}' reference: {e}", self.id)))
    }

    pub fn start_pose(&self) -> Result<GroupElement> {
        Ok(match self.start {
            Some([x, y, psi]) => GroupElement::new(x, y, psi),
            None => {
                let path = self.path()?;
                let [x, y] = path.point_at(0.0);
                GroupElement::new(x, y, path.heading_at(0.0))
            }
        })
    }
}

impl Scenario {
    /// Three vehicles in priority order red, blue, green. Red drives a
    /// figure-eight with 1 m half-width, blue and green drive 1 m circles
    /// that cross it; the map is 4.5 m by 4.0 m.
    pub fn three_vehicle_crossing() -> Scenario {
        let vehicle = |id: &str, color: &str, reference: PathSpec| VehicleSpec {
            id: id.into(),
            color: color.into(),
            start: None,
            start_trim: STANDSTILL,
            reference,
            preset: Preset::C,
            nominal_speed: default_speed(),
        };
        Scenario {
            name: "three_vehicle_crossing".into(),
            map_extent: [4.5, 4.0],
            steps: 150,
            step_duration: 0.2,
            vehicles: vec![
                vehicle(
                    "red",
                    "#d62728",
                    PathSpec::Lemniscate {
                        center: [2.25, 2.0],
                        half_width: 1.0,
                        samples: 720,
                        phase: FRAC_PI_2,
                    },
                ),
                vehicle(
                    "blue",
                    "#1f77b4",
                    PathSpec::Circle {
                        center: [2.25, 1.0],
                        radius: 1.0,
                        samples: 720,
                        start_angle: -FRAC_PI_2,
                        clockwise: false,
                    },
                ),
                vehicle(
                    "green",
                    "#2ca02c",
                    PathSpec::Circle {
                        center: [3.375, 2.0],
                        radius: 1.0,
                        samples: 720,
                        start_angle: 0.0,
                        clockwise: true,
                    },
                ),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [w, h] = self.map_extent;
        if !(w > 0.0 && h > 0.0) || !w.is_finite() || !h.is_finite() {
            return Err(Error::Validation("map_extent must be positive".into()));
        }
        if !(self.step_duration > 0.0) || !self.step_duration.is_finite() {
            return Err(Error::Validation("step_duration must be positive".into()));
        }
        if self.vehicles.is_empty() {
            return Err(Error::Validation("scenario has no vehicles".into()));
        }
        let mut ids = BTreeSet::new();
        for v in &self.vehicles {
            if v.id.is_empty()
                || !v
                    .id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::Validation(format!(
                    "vehicle id '{}' must be non-empty and use [A-Za-z0-9_-]",
                    v.id
                )));
            }
            if !ids.insert(v.id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate vehicle id '{}'",
                    v.id
                )));
            }
            if v.start_trim != STANDSTILL {
                return Err(Error::Validation(format!(
                    "vehicle '{}' must start in the standstill trim {STANDSTILL}",
                    v.id
                )));
            }
            if !(v.nominal_speed > 0.0) || !v.nominal_speed.is_finite() {
                return Err(Error::Validation(format!(
                    "vehicle '{}': nominal_speed must be positive",
                    v.id
                )));
            }
            v.path()?;
            let p = v.start_pose()?;
            if !(0.0..=w).contains(&p.dx) || !(0.0..=h).contains(&p.dy) || !p.dpsi.is_finite() {
                return Err(Error::Validation(format!(
                    "vehicle '{}' starts outside the map",
                    v.id
                )));
            }
        }
        Ok(())
    }

    pub fn vehicle_index(&self, id: &str) -> Option<usize> {
        self.vehicles.iter().position(|v| v.id == id)
    }
}

pub fn parse_scenario(text: &str, source: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            context: format!(
                "{source} line {} column {}, field {path}",
                inner.line(),
                inner.column()
            ),
            message: inner.to_string(),
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, &path.display().to_string())
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(s).map_err(|e| Error::Validation(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_fixture() {
        let s = Scenario::three_vehicle_crossing();
        s.validate().unwrap();
        let ids: Vec<&str> = s.vehicles.iter().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, ["red", "blue", "green"]);
        let red = s.vehicles[0].start_pose().unwrap();
        assert!((red.dx - 3.25).abs() < 1e-12 && (red.dy - 2.0).abs() < 1e-12);
        assert_eq!(s.steps, 150);
    }

    #[test]
    fn round_trip_through_json() {
        let s = Scenario::three_vehicle_crossing();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(parse_scenario(&text, "mem").unwrap(), s);
    }

    #[test]
    fn open_reference_is_rejected() {
        let mut s = Scenario::three_vehicle_crossing();
        s.vehicles[1].reference =
            PathSpec::Polyline(vec![[0.5, 0.5], [1.0, 0.5], [1.0, 1.0], [0.5, 1.0]]);
        assert!(matches!(s.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn zero_vehicles_rejected() {
        let mut s = Scenario::three_vehicle_crossing();
        s.vehicles.clear();
        assert!(matches!(s.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn parse_error_names_the_field() {
        let text = r#"{"name":"x","map_extent":[1,1],"steps":1,"step_duration":0.2,
            "vehicles":[{"id":"a","preset":"Q","reference":{"polyline":[]}}]}"#;
        match parse_scenario(text, "mem") {
            Err(Error::Parse { context, .. }) => {
                assert!(context.contains("vehicles[0].preset"), "{context}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
