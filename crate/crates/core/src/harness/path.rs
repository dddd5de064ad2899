use crate::error::{Error, Result};
use crate::planner::Point;

/// Closed polyline parameterized by arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    points: Vec<Point>,
    cumulative: Vec<f64>,
}

/// Gap between first and last vertex below which a polyline counts as closed.
pub const CLOSURE_TOL: f64 = 1e-6;

impl ReferencePath {
    /// `points` must start and end at the same location. Repeated
    /// consecutive vertices are dropped.
    pub fn new(points: &[Point]) -> Result<Self> {
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Validation(
                "reference has non-finite coordinates".into(),
            ));
        }
        let mut pts: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if pts.last().is_none_or(|q| dist(q, p) > 0.0) {
                pts.push(*p);
            }
        }
        if pts.len() < 4 {
            return Err(Error::Validation(
                "reference needs at least three distinct vertices".into(),
            ));
        }
        if dist(&pts[0], &pts[pts.len() - 1]) > CLOSURE_TOL {
            return Err(Error::Validation(format!(
                "reference polyline is not closed: ends {:?} and {:?}",
                pts[0],
                pts[pts.len() - 1]
            )));
        }
        let last = pts.len() - 1;
        pts[last] = pts[0];
        let mut cumulative = vec![0.0];
        for w in pts.windows(2) {
            cumulative.push(cumulative.last().unwrap() + dist(&w[0], &w[1]));
        }
        Ok(Self {
            points: pts,
            cumulative,
        })
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn wrap(&self, s: f64) -> f64 {
        s.rem_euclid(self.length())
    }

    /// Signed arc-length difference `b - a`, wrapped to half the length.
    pub fn difference(&self, a: f64, b: f64) -> f64 {
        let l = self.length();
        let d = (b - a).rem_euclid(l);
        if d > 0.5 * l {
            d - l
        } else {
            d
        }
    }

    fn segment(&self, s: f64) -> (usize, f64) {
        let s = self.wrap(s);
        let i = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => i - 1,
        };
        let len = self.cumulative[i + 1] - self.cumulative[i];
        (i, ((s - self.cumulative[i]) / len).clamp(0.0, 1.0))
    }

    pub fn point_at(&self, s: f64) -> Point {
        let (i, t) = self.segment(s);
        let (a, b) = (self.points[i], self.points[i + 1]);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Direction of travel at `s` [rad].
    pub fn heading_at(&self, s: f64) -> f64 {
        let (i, _) = self.segment(s);
        let (a, b) = (self.points[i], self.points[i + 1]);
        (b[1] - a[1]).atan2(b[0] - a[0])
    }

    fn project_segment(&self, i: usize, p: &Point) -> (f64, f64) {
        let (a, b) = (self.points[i], self.points[i + 1]);
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let len2 = ex * ex + ey * ey;
        let t = (((p[0] - a[0]) * ex + (p[1] - a[1]) * ey) / len2).clamp(0.0, 1.0);
        let q = [a[0] + t * ex, a[1] + t * ey];
        (self.cumulative[i] + t * len2.sqrt(), dist(&q, p))
    }

    /// Nearest point over the whole path: `(s, distance)`.
    pub fn nearest(&self, p: &Point) -> (f64, f64) {
        (0..self.points.len() - 1)
            .map(|i| self.project_segment(i, p))
            .fold(
                (0.0, f64::INFINITY),
                |best, c| if c.1 < best.1 { c } else { best },
            )
    }

    /// Nearest point among those whose arc length lies within
    /// `[s - behind, s + ahead]` of `s`; falls back to [`Self::nearest`].
    pub fn nearest_near(&self, p: &Point, s: f64, behind: f64, ahead: f64) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        for i in 0..self.points.len() - 1 {
            let (si, di) = self.project_segment(i, p);
            let d = self.difference(s, si);
            if d >= -behind && d <= ahead && di < best.1 {
                best = (si, di);
            }
        }
        if best.1.is_finite() {
            (self.wrap(best.0), best.1)
        } else {
            self.nearest(p)
        }
    }
}

fn dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Polyline of a circle, `samples` vertices plus the closing one,
/// starting at `start_angle` and running counterclockwise unless
/// `clockwise`.
pub fn circle(
    center: Point,
    radius: f64,
    samples: usize,
    start_angle: f64,
    clockwise: bool,
) -> Vec<Point> {
    let dir = if clockwise { -1.0 } else { 1.0 };
    (0..=samples)
        .map(|i| {
            let a =
                start_angle + dir * std::f64::consts::TAU * (i % samples) as f64 / samples as f64;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        })
        .collect()
}

/// Figure-eight `x = a sin t`, `y = a sin t cos t` around `center`,
/// with `t` starting at `phase`.
pub fn lemniscate(center: Point, half_width: f64, samples: usize, phase: f64) -> Vec<Point> {
    (0..=samples)
        .map(|i| {
            let t = phase + std::f64::consts::TAU * (i % samples) as f64 / samples as f64;
            [
                center[0] + half_width * t.sin(),
                center[1] + half_width * t.sin() * t.cos(),
            ]
        })
        .collect()
}
