//! Automaton files.
//!
//! The format is UTF-8 JSON:
//!
//! ```text
//! {
//!   "format": "motion-primitive-automaton",
//!   "version": 1,
//!   "automaton": {
//!     "params": { "wheelbase": 0.15, ... },
//!     "step_duration": 0.2,
//!     "trims": [ { "id": 1, "v": 0.0, "delta": 0.0, "step_duration": 0.2,
//!                  "self_loop": { "dx": 0.0, "dy": 0.0, "dpsi": 0.0 } }, ... ],
//!     "maneuvers": [ { "from": 1, "to": 7, "objective": "J2", "weight": 0.0,
//!                      "duration": 0.2, "substeps": 1,
//!                      "controls": [ { "u_vdot": 4.0, "u_deltadot": 0.0 }, ... ],
//!                      "states": [ { "s_x": 0.0, ... }, ... ],
//!                      "displacement": { ... }, "costs": [j1, j2, j3] }, ... ]
//!   }
//! }
//! ```
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`, so a save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate_automaton, MotionPrimitiveAutomaton};
use crate::error::{Error, Result};
use crate::trims::{Trim, TrimId};
use crate::vehicle::VehicleParams;

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "motion-primitive-automaton";

#[derive(Serialize)]
struct FileOut<'a> {
    format: &'static str,
    version: u32,
    automaton: &'a MotionPrimitiveAutomaton,
}

#[derive(Deserialize)]
struct Header {
    format: Option<String>,
    version: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIn {
    #[allow(dead_code)]
    format: String,
    #[allow(dead_code)]
    version: u32,
    automaton: MotionPrimitiveAutomaton,
}

pub fn to_json(a: &MotionPrimitiveAutomaton) -> Result<String> {
    let file = FileOut {
        format: FORMAT_NAME,
        version: FORMAT_VERSION,
        automaton: a,
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Parse {
        context: "automaton".into(),
        message: e.to_string(),
    })
}

/// Parses an automaton document. `source` names the input in errors.
pub fn from_json(text: &str, source: &str) -> Result<MotionPrimitiveAutomaton> {
    let header: Header = serde_json::from_str(text).map_err(|e| parse_error(source, "", &e))?;
    if header.format.as_deref() != Some(FORMAT_NAME) {
        return Err(Error::Parse {
            context: source.to_string(),
            message: format!("field 'format' must be \"{FORMAT_NAME}\""),
        });
    }
    match header.version {
        Some(FORMAT_VERSION) => {}
        Some(found) => {
            return Err(Error::Version {
                found,
                expected: FORMAT_VERSION,
            })
        }
        None => {
            return Err(Error::Parse {
                context: source.to_string(),
                message: "missing field 'version'".into(),
            })
        }
    }
    let file: FileIn = parse_with_path(text, source)?;
    let report = validate_automaton(&file.automaton);
    if !report.is_ok() {
        return Err(Error::Integrity(format!(
            "{source}: {}",
            report.errors.join("; ")
        )));
    }
    Ok(file.automaton)
}

fn parse_error(source: &str, path: &str, e: &serde_json::Error) -> Error {
    let field = if path.is_empty() || path == "." {
        String::new()
    } else {
        format!(", field {path}")
    };
    Error::Parse {
        context: format!("{source} line {} column {}{field}", e.line(), e.column()),
        message: e.to_string(),
    }
}

pub fn save_automaton(a: &MotionPrimitiveAutomaton, path: &Path) -> Result<()> {
    let text = to_json(a)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_automaton(path: &Path) -> Result<MotionPrimitiveAutomaton> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text, &path.display().to_string())
}

/// Trim table file: `{"params": {...}, "trims": [{"id": 1, "v": 0.0, "delta": 0.0}, ...]}`.
/// `params` is optional and defaults to the standard vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrimFile {
    #[serde(default)]
    pub params: VehicleParams,
    pub trims: Vec<Trim>,
}

/// Connectivity file: `{"pairs": [[1, 2], [2, 1], ...]}` of directed trim ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectivityFile {
    pub pairs: Vec<(TrimId, TrimId)>,
}

fn parse_with_path<T: serde::de::DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        parse_error(source, &path, e.inner())
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_with_path(&text, &path.display().to_string())
}

pub fn parse_trim_file(text: &str, source: &str) -> Result<TrimFile> {
    parse_with_path(text, source)
}

pub fn load_trim_file(path: &Path) -> Result<TrimFile> {
    read_json(path)
}

pub fn parse_connectivity_file(text: &str, source: &str) -> Result<ConnectivityFile> {
    parse_with_path(text, source)
}

pub fn load_connectivity_file(path: &Path) -> Result<ConnectivityFile> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{build_universal_automaton, BuildOptions};
    use crate::objective::Objective;
    use crate::trims::{standard_trim_table, TrimId};

    fn small() -> MotionPrimitiveAutomaton {
        let t = standard_trim_table();
        let pairs = [(TrimId(1), TrimId(12)), (TrimId(12), TrimId(1))];
        build_universal_automaton(
            &[t[0], t[11]],
            &Objective::ALL,
            &pairs,
            &BuildOptions::default(),
        )
        .unwrap()
    }

    fn bits(a: &MotionPrimitiveAutomaton) -> Vec<u64> {
        let mut out = Vec::new();
        for m in &a.maneuvers {
            for u in &m.controls {
                out.extend([u.u_vdot.to_bits(), u.u_deltadot.to_bits()]);
            }
            for s in &m.states {
                out.extend(s.to_array().map(f64::to_bits));
            }
            out.extend(m.costs.map(f64::to_bits));
            out.extend(
                [m.displacement.dx, m.displacement.dy, m.displacement.dpsi].map(f64::to_bits),
            );
        }
        for v in &a.trims {
            out.extend([v.self_loop.dx, v.self_loop.dy, v.self_loop.dpsi].map(f64::to_bits));
        }
        out
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let a = small();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ua.json");
        save_automaton(&a, &path).unwrap();
        let b = load_automaton(&path).unwrap();
        assert_eq!(a, b);
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn unknown_objective_is_a_parse_error() {
        let text = to_json(&small()).unwrap().replacen("\"J3\"", "\"J9\"", 1);
        match from_json(&text, "mem") {
            Err(Error::Parse { context, message }) => {
                assert!(context.contains("line"), "{context}");
                assert!(context.contains("objective"), "{context}");
                assert!(message.contains("J9"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_mismatch() {
        let text = to_json(&small())
            .unwrap()
            .replacen("\"version\": 1", "\"version\": 7", 1);
        match from_json(&text, "mem") {
            Err(
                e @ Error::Version {
                    found: 7,
                    expected: 1,
                },
            ) => {
                assert!(e.to_string().contains("version 7"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tampered_numbers_fail_integrity() {
        let mut a = small();
        a.maneuvers[0].states[10].s_x += 1e-3;
        let text = to_json(&a).unwrap();
        assert!(matches!(from_json(&text, "mem"), Err(Error::Integrity(_))));
    }

    #[test]
    fn garbage_is_a_parse_error() {
        assert!(matches!(
            from_json("{ not json", "mem"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(from_json("{}", "mem"), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_automaton(Path::new("/nonexistent/ua.json")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
