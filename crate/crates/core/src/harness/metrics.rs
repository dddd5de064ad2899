use serde::Serialize;

use super::sim::{LogRow, RunLog};
use crate::automaton::Preset;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleMetrics {
    pub id: String,
    pub preset: Preset,
    pub steps: usize,
    pub error_mean_mm: f64,
    pub error_std_mm: f64,
    /// `None` if the vehicle never completed a lap.
    pub lap_time: Option<f64>,
    pub max_expanded: usize,
    pub compute_mean_ms: f64,
    pub compute_std_ms: f64,
    pub compute_max_ms: f64,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub vehicles: Vec<VehicleMetrics>,
}

impl VehicleMetrics {
    pub fn lap_label(&self) -> String {
        match self.lap_time {
            Some(t) => format!("{t:.1}"),
            None => "incomplete".into(),
        }
    }
}

/// Population mean and standard deviation; `(0, 0)` for no samples.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Time of the first step whose accumulated progress exceeds one
/// reference length.
pub fn lap_time(rows: &[LogRow], step_duration: f64) -> Option<f64> {
    rows.iter()
        .find(|r| r.progress > r.reference_length)
        .map(|r| r.step as f64 * step_duration)
}

pub fn vehicle_metrics(
    id: &str,
    preset: Preset,
    rows: &[LogRow],
    step_duration: f64,
) -> VehicleMetrics {
    let errors: Vec<f64> = rows.iter().map(|r| r.deviation * 1e3).collect();
    let times: Vec<f64> = rows.iter().map(|r| r.wall_ms).collect();
    let (error_mean_mm, error_std_mm) = mean_std(&errors);
    let (compute_mean_ms, compute_std_ms) = mean_std(&times);
    VehicleMetrics {
        id: id.to_string(),
        preset,
        steps: rows.len(),
        error_mean_mm,
        error_std_mm,
        lap_time: lap_time(rows, step_duration),
        max_expanded: rows.iter().map(|r| r.expanded).max().unwrap_or(0),
        compute_mean_ms,
        compute_std_ms,
        compute_max_ms: times.iter().copied().fold(0.0, f64::max),
        fallbacks: rows.iter().filter(|r| r.fallback).count(),
    }
}

pub fn compute_metrics(log: &RunLog) -> MetricsReport {
    MetricsReport {
        vehicles: log
            .vehicles
            .iter()
            .map(|v| vehicle_metrics(&v.id, v.preset, &v.rows, log.step_duration))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize, deviation: f64, progress: f64) -> LogRow {
        LogRow {
            step,
            time: 0.2 * step as f64,
            priority: 1,
            vehicle: "red".into(),
            preset: Preset::C,
            from: 1,
            to: 1,
            kind: "loop".into(),
            x: 0.0,
            y: 0.0,
            psi: 0.0,
            mid_x: 0.0,
            mid_y: 0.0,
            ref_x: 0.0,
            ref_y: 0.0,
            deviation,
            progress,
            reference_length: 1.0,
            expanded: step * 10,
            wall_ms: 1.0,
            fallback: false,
        }
    }

    #[test]
    fn population_statistics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s - 0.8165).abs() < 1e-4);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn deviations_in_millimetres() {
        let rows = [row(1, 0.001, 0.1), row(2, 0.002, 0.2), row(3, 0.003, 0.3)];
        let m = vehicle_metrics("red", Preset::C, &rows, 0.2);
        assert!((m.error_mean_mm - 2.0).abs() < 1e-12);
        assert!((m.error_std_mm - 0.816_496_580_927_726).abs() < 1e-9);
        assert_eq!(m.max_expanded, 30);
        assert_eq!(m.lap_time, None);
        assert_eq!(m.lap_label(), "incomplete");
    }

    #[test]
    fn lap_is_first_step_past_the_length() {
        let rows = [
            row(1, 0.0, 0.5),
            row(2, 0.0, 1.0),
            row(3, 0.0, 1.01),
            row(4, 0.0, 2.0),
        ];
        let t = lap_time(&rows, 0.2).unwrap();
        assert!((t - 0.6).abs() < 1e-12);
    }

    #[test]
    fn single_step_has_zero_spread() {
        let m = vehicle_metrics("red", Preset::C, &[row(1, 0.01, 0.1)], 0.2);
        assert_eq!(m.error_std_mm, 0.0);
        assert_eq!(m.compute_std_ms, 0.0);
    }
}
