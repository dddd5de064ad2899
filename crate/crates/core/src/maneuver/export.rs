//! Files written for a Pareto sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Maneuver, ParetoPoint};
use crate::error::{Error, Result};
use crate::plot::{render, Panel, Series, PALETTE};

pub const FRONT_FILE: &str = "front.csv";

/// `w,J1,J2,J3` with a header row.
pub fn front_csv(points: &[ParetoPoint]) -> String {
    let mut out = String::from("w,J1,J2,J3\n");
    for p in points {
        let [j1, j2, j3] = p.maneuver.costs;
        let _ = writeln!(out, "{},{},{},{}", p.weight, j1, j2, j3);
    }
    out
}

/// One row per grid node. The control columns hold the input applied on
/// the interval that starts at the node and are empty on the last row.
pub fn trajectory_csv(m: &Maneuver) -> String {
    let mut out = String::from("t,s_x,s_y,psi,v,delta,u_vdot,u_deltadot\n");
    let h = m.interval_duration();
    for (i, x) in m.states.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{},{},{},",
            i as f64 * h,
            x.s_x,
            x.s_y,
            x.psi,
            x.v,
            x.delta
        );
        match m.controls.get(i) {
            Some(u) => {
                let _ = writeln!(out, "{},{}", u.u_vdot, u.u_deltadot);
            }
            None => out.push_str(",\n"),
        }
    }
    out
}

fn color(i: usize) -> String {
    PALETTE[i % PALETTE.len()].to_string()
}

/// Scatter of the front in the `(J1, J2)` plane.
pub fn front_svg(points: &[ParetoPoint]) -> String {
    let panel = Panel {
        title: "Pareto front".into(),
        x_label: "J1".into(),
        y_label: "J2".into(),
        series: points
            .iter()
            .enumerate()
            .map(|(i, p)| Series {
                label: format!("w={}", p.weight),
                color: color(i),
                points: vec![p.objectives],
                markers: true,
            })
            .collect(),
        equal_axes: false,
    };
    render(&[panel], 1)
}

fn zoh(m: &Maneuver, f: impl Fn(&crate::vehicle::Input) -> f64) -> Vec<(f64, f64)> {
    let h = m.interval_duration();
    m.controls
        .iter()
        .enumerate()
        .flat_map(|(i, u)| [(i as f64 * h, f(u)), ((i + 1) as f64 * h, f(u))])
        .collect()
}

/// Path, heading and input traces of every point, one colour per point.
pub fn traces_svg(points: &[ParetoPoint]) -> String {
    let panel =
        |title: &str, x: &str, y: &str, equal: bool, f: &dyn Fn(&Maneuver) -> Vec<(f64, f64)>| {
            Panel {
                title: title.into(),
                x_label: x.into(),
                y_label: y.into(),
                equal_axes: equal,
                series: points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| Series {
                        label: format!("w={}", p.weight),
                        color: color(i),
                        points: f(&p.maneuver),
                        markers: false,
                    })
                    .collect(),
            }
        };
    let node_t = |m: &Maneuver, g: &dyn Fn(&crate::vehicle::State) -> f64| -> Vec<(f64, f64)> {
        let h = m.interval_duration();
        m.states
            .iter()
            .enumerate()
            .map(|(i, x)| (i as f64 * h, g(x)))
            .collect()
    };
    let panels = [
        panel("position", "s_x [m]", "s_y [m]", true, &|m| {
            m.states.iter().map(|x| (x.s_x, x.s_y)).collect()
        }),
        panel("heading", "t [s]", "psi [rad]", false, &|m| {
            node_t(m, &|x| x.psi)
        }),
        panel(
            "acceleration input",
            "t [s]",
            "u_vdot [m/s^2]",
            false,
            &|m| zoh(m, |u| u.u_vdot),
        ),
        panel(
            "steering rate input",
            "t [s]",
            "u_deltadot [rad/s]",
            false,
            &|m| zoh(m, |u| u.u_deltadot),
        ),
    ];
    render(&panels, 2)
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(())
}

/// Writes `front.csv`, `trajectory_<i>.csv` per point, `front.svg` and
/// `traces.svg` into `dir`.
pub fn write_pareto(points: &[ParetoPoint], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    write(dir.join(FRONT_FILE), &front_csv(points), &mut files)?;
    for (i, p) in points.iter().enumerate() {
        write(
            dir.join(format!("trajectory_{i}.csv")),
            &trajectory_csv(&p.maneuver),
            &mut files,
        )?;
    }
    write(dir.join("front.svg"), &front_svg(points), &mut files)?;
    write(dir.join("traces.svg"), &traces_svg(points), &mut files)?;
    Ok(files)
}
