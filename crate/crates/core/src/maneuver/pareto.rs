use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Maneuver, ManeuverProblem};
use crate::error::{Error, Result};

/// One nondominated candidate of a weight sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub weight: f64,
    pub maneuver: Maneuver,
    /// `(J1, J2)`.
    pub objectives: (f64, f64),
}

/// `n` weights evenly spaced on [0, 1].
pub fn uniform_weights(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Indices of the nondominated points (both coordinates minimized), sorted
/// by the first coordinate. Points equal within 1e-12 in both coordinates
/// are merged, keeping the earliest.
pub fn nondominated_filter(points: &[(f64, f64)]) -> Vec<usize> {
    const SAME: f64 = 1e-12;
    let mut keep: Vec<usize> = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        if points.iter().any(|&q| dominates(q, p)) {
            continue;
        }
        let duplicate = keep
            .iter()
            .any(|&j| (points[j].0 - p.0).abs() <= SAME && (points[j].1 - p.1).abs() <= SAME);
        if !duplicate {
            keep.push(i);
        }
    }
    keep.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[a].1.total_cmp(&points[b].1))
            .then(a.cmp(&b))
    });
    keep
}

/// Solves one scalarization per weight and returns the nondominated set.
pub fn sweep_pareto(problem: &ManeuverProblem, weights: &[f64]) -> Result<Vec<ParetoPoint>> {
    if weights.is_empty() {
        return Err(Error::domain("weight list is empty"));
    }
    if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(Error::domain(format!("weight {w} outside [0, 1]")));
    }
    let anchors = problem.anchors()?;
    let norm = anchors.normalization;

    // sort by weight so that duplicates keep the lowest weight
    let mut order: Vec<f64> = weights.to_vec();
    order.sort_by(f64::total_cmp);
    let solved: Vec<Result<Maneuver>> = order
        .par_iter()
        .map(|&w| problem.solve_scalarized(w, &norm))
        .collect();

    let mut candidates = Vec::new();
    let mut last_error = None;
    for (w, result) in order.iter().zip(solved) {
        match result {
            Ok(m) => candidates.push((*w, m)),
            Err(e) => {
                log::warn!("weight {w}: {e}");
                last_error = Some(e);
            }
        }
    }
    if candidates.is_empty() {
        return Err(last_error.unwrap_or_else(|| Error::domain("no weights solved")));
    }

    let points: Vec<(f64, f64)> = candidates
        .iter()
        .map(|(_, m)| (m.costs[0], m.costs[1]))
        .collect();
    Ok(nondominated_filter(&points)
        .into_iter()
        .map(|i| {
            let (weight, maneuver) = candidates[i].clone();
            ParetoPoint {
                weight,
                objectives: points[i],
                maneuver,
            }
        })
        .collect())
}
