//! Output files of a run: one log CSV and one SVG per vehicle, plus
//! `report.csv` with the headline row for the highest-priority vehicle.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::metrics::{vehicle_metrics, MetricsReport, VehicleMetrics};
use super::sim::{LogRow, RunLog, VehicleLog};
use crate::error::{Error, Result};
use crate::planner::{Plan, Point};

pub const REPORT_FILE: &str = "report.csv";
pub const REPORT_COLUMNS: [&str; 6] = [
    "subgraph",
    "reference error",
    "lap time",
    "max expanded vertices",
    "computation time",
    "max computation time",
];

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            context: path.display().to_string(),
            message: format!("{other:?}"),
        },
    }
}

pub fn write_log_csv(rows: &[LogRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_log_csv(path: &Path) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

/// Report table rows, one per vehicle given.
pub fn report_table(vehicles: &[VehicleMetrics]) -> String {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    for m in vehicles {
        let _ = writeln!(
            out,
            "{},{:.3} ({:.3}),{},{},{:.3} ({:.3}),{:.3}",
            m.preset,
            m.error_mean_mm,
            m.error_std_mm,
            m.lap_label(),
            m.max_expanded,
            m.compute_mean_ms,
            m.compute_std_ms,
            m.compute_max_ms
        );
    }
    out
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// Writes `<id>.csv` and `<id>.svg` per vehicle and `report.csv`.
pub fn export_report(report: &MetricsReport, log: &RunLog, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    for v in &log.vehicles {
        let csv_path = out_dir.join(format!("{}.csv", v.id));
        write_log_csv(&v.rows, &csv_path)?;
        files.push(csv_path);
        let svg_path = out_dir.join(format!("{}.svg", v.id));
        write(svg_path.clone(), &trajectory_svg(log, v))?;
        files.push(svg_path);
    }
    let headline: Vec<VehicleMetrics> = report.vehicles.iter().take(1).cloned().collect();
    let report_path = out_dir.join(REPORT_FILE);
    write(report_path.clone(), &report_table(&headline))?;
    files.push(report_path);
    Ok(files)
}

/// Reads the per-vehicle CSVs of an output directory back, ordered by
/// priority. References and map extent are not stored in the CSVs and
/// come back empty.
pub fn read_log_dir(dir: &Path) -> Result<RunLog> {
    let mut vehicles = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv")
                && p.file_name().is_some_and(|n| n != REPORT_FILE)
        })
        .collect();
    paths.sort();
    for p in paths {
        let rows = read_log_csv(&p)?;
        let Some(first) = rows.first() else {
            continue;
        };
        vehicles.push(VehicleLog {
            id: first.vehicle.clone(),
            color: String::new(),
            preset: first.preset,
            start: [0.0; 3],
            reference: Vec::new(),
            rows,
        });
    }
    if vehicles.is_empty() {
        return Err(Error::Validation(format!(
            "no vehicle logs in {}",
            dir.display()
        )));
    }
    vehicles.sort_by_key(|v| v.rows[0].priority);
    let step_duration = {
        let r = &vehicles[0].rows[0];
        r.time / r.step as f64
    };
    Ok(RunLog {
        scenario: String::new(),
        map_extent: [0.0; 2],
        step_duration,
        vehicles,
    })
}

/// Metrics recomputed from an output directory.
pub fn report_from_dir(dir: &Path) -> Result<MetricsReport> {
    let log = read_log_dir(dir)?;
    Ok(MetricsReport {
        vehicles: log
            .vehicles
            .iter()
            .map(|v| vehicle_metrics(&v.id, v.preset, &v.rows, log.step_duration))
            .collect(),
    })
}

struct Canvas {
    height: f64,
    scale: f64,
    body: String,
}

impl Canvas {
    fn new(extent: [f64; 2]) -> Self {
        let scale = 200.0;
        let mut c = Canvas {
            height: extent[1],
            scale,
            body: String::new(),
        };
        let _ = writeln!(
            c.body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">",
            extent[0] * scale,
            extent[1] * scale,
            extent[0] * scale,
            extent[1] * scale
        );
        let _ = writeln!(
            c.body,
            "<rect x=\"0\" y=\"0\" width=\"{:.0}\" height=\"{:.0}\" fill=\"#f4f4f4\" stroke=\"#999\"/>",
            extent[0] * scale,
            extent[1] * scale
        );
        c
    }

    fn xy(&self, p: Point) -> (f64, f64) {
        (p[0] * self.scale, (self.height - p[1]) * self.scale)
    }

    fn polyline(&mut self, pts: &[Point], stroke: &str, width: f64, extra: &str) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = self.xy(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"{extra}/>",
            coords.join(" ")
        );
    }

    fn circle(&mut self, p: Point, r: f64, fill: &str, extra: &str) {
        let (x, y) = self.xy(p);
        let _ = writeln!(
            self.body,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{:.2}\" fill=\"{fill}\"{extra}/>",
            r * self.scale
        );
    }

    fn text(&mut self, p: Point, s: &str) {
        let (x, y) = self.xy(p);
        let _ = writeln!(self.body, "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"14\">{s}</text>");
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn color_or_default(c: &str) -> &str {
    if c.is_empty() {
        "#333333"
    } else {
        c
    }
}

/// Map with every vehicle's reference faintly, this vehicle's reference
/// dashed and its driven path solid.
pub fn trajectory_svg(log: &RunLog, v: &VehicleLog) -> String {
    let mut c = Canvas::new(log.map_extent);
    for other in &log.vehicles {
        c.polyline(&other.reference, "#cccccc", 1.0, "");
    }
    let color = color_or_default(&v.color);
    c.polyline(
        &v.reference,
        color,
        1.5,
        " stroke-dasharray=\"6 4\" opacity=\"0.6\"",
    );
    let mut driven: Vec<Point> = vec![[v.start[0], v.start[1]]];
    driven.extend(v.rows.iter().map(|r| [r.x, r.y]));
    c.polyline(&driven, color, 2.5, "");
    c.circle([v.start[0], v.start[1]], 0.04, color, " stroke=\"black\"");
    for r in v.rows.iter().filter(|r| r.fallback) {
        c.circle([r.x, r.y], 0.02, "black", "");
    }
    c.text(
        [0.05, 0.1],
        &format!("{} ({}) {} steps", v.id, v.preset, v.rows.len()),
    );
    c.finish()
}

/// A single plan over its reference and obstacles.
pub fn plan_svg(
    extent: [f64; 2],
    reference: &[Point],
    targets: &[Point],
    plan: &Plan,
    radius: f64,
    obstacles: &[(Point, f64)],
) -> String {
    let mut c = Canvas::new(extent);
    c.polyline(reference, "#999999", 1.0, " stroke-dasharray=\"6 4\"");
    for &(p, r) in obstacles {
        c.circle(p, r, "#888888", " opacity=\"0.4\"");
    }
    for &t in targets {
        c.circle(t, 0.015, "#ff7f0e", "");
    }
    let mut pts: Vec<Point> = vec![[plan.start.dx, plan.start.dy]];
    for s in &plan.steps {
        pts.push([s.midpoint.dx, s.midpoint.dy]);
        pts.push([s.end.dx, s.end.dy]);
    }
    c.polyline(&pts, "#d62728", 2.0, "");
    for s in &plan.steps {
        c.circle([s.end.dx, s.end.dy], radius, "none", " stroke=\"#d62728\"");
    }
    c.finish()
}
