//! Spectral projected gradient inside an augmented-Lagrangian loop.
//!
//! Each control channel lives in the polytope
//! `{lo <= u_i <= hi, sum(u_i) = c}`, which has an exact projection (a
//! one-dimensional root find on the shift). The terminal speed and steering
//! are therefore met by construction. The path bounds on speed and steering
//! at interior grid nodes are linear in the controls and are handled by the
//! augmented Lagrangian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::transcription::Transcription;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Inner projected-gradient iterations per subproblem.
    pub max_iterations: usize,
    pub max_outer_iterations: usize,
    /// Projected-gradient stationarity and constraint tolerance.
    pub tolerance: f64,
    pub initial_penalty: f64,
    pub max_penalty: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            max_outer_iterations: 40,
            tolerance: 1e-6,
            initial_penalty: 10.0,
            max_penalty: 1e12,
        }
    }
}

/// Box-and-sum feasible set of one control channel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Channel {
    pub lo: f64,
    pub hi: f64,
    pub sum: f64,
}

impl Channel {
    /// Euclidean projection of `y` onto the channel polytope.
    pub fn project(&self, y: &[f64], out: &mut [f64]) {
        let clip = |v: f64| v.clamp(self.lo, self.hi);
        let total = |mu: f64| y.iter().map(|&v| clip(v - mu)).sum::<f64>();
        let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
        let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // total(mu) is nonincreasing in mu
        let mut a = ymin - self.hi;
        let mut b = ymax - self.lo;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if total(m) > self.sum {
                a = m;
            } else {
                b = m;
            }
        }
        let mu = 0.5 * (a + b);
        for (o, &v) in out.iter_mut().zip(y) {
            *o = clip(v - mu);
        }
        // spread the remaining round-off over the unclipped entries
        let residual = self.sum - out.iter().sum::<f64>();
        if residual != 0.0 {
            let free: Vec<usize> = (0..out.len())
                .filter(|&i| {
                    let t = out[i] + residual / out.len() as f64;
                    t > self.lo && t < self.hi
                })
                .collect();
            if !free.is_empty() {
                let share = residual / free.len() as f64;
                for i in free {
                    out[i] += share;
                }
            }
        }
    }
}

/// Bounds on one state channel (speed or steering) at interior nodes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PathBound {
    pub start: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Linear scalarized objective `w1 * J1 + w2 * J2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScalarObjective {
    pub w1: f64,
    pub w2: f64,
}

pub(crate) struct Problem<'a> {
    pub tr: &'a Transcription,
    pub objective: ScalarObjective,
    pub channels: [Channel; 2],
    pub bounds: [PathBound; 2],
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub z: Vec<f64>,
    pub iterations: usize,
    pub violation: f64,
    pub stationarity: f64,
    pub converged: bool,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.tr.intervals
    }

    pub fn project(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n();
        let mut buf_in = vec![0.0; n];
        let mut buf_out = vec![0.0; n];
        for c in 0..2 {
            for i in 0..n {
                buf_in[i] = y[2 * i + c];
            }
            self.channels[c].project(&buf_in, &mut buf_out);
            for i in 0..n {
                out[2 * i + c] = buf_out[i];
            }
        }
    }

    /// Channel values at nodes 1..n-1 computed from the controls.
    fn node_values(&self, z: &[f64], c: usize) -> Vec<f64> {
        let n = self.n();
        let mut vals = Vec::with_capacity(n.saturating_sub(1));
        let mut acc = self.bounds[c].start;
        for i in 0..n.saturating_sub(1) {
            acc += self.tr.dt * z[2 * i + c];
            vals.push(acc);
        }
        vals
    }

    /// Constraint values `g <= 0`, ordered channel, node, (upper, lower).
    pub fn constraints(&self, z: &[f64]) -> Vec<f64> {
        let mut g = Vec::with_capacity(4 * self.n());
        for c in 0..2 {
            let b = self.bounds[c];
            for v in self.node_values(z, c) {
                g.push(v - b.hi);
                g.push(b.lo - v);
            }
        }
        g
    }

    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.constraints(z).into_iter().fold(0.0, f64::max)
    }

    /// Adds `sum_j m_j * grad g_j` to `grad`.
    fn add_constraint_gradient(&self, m: &[f64], grad: &mut [f64]) {
        let n = self.n();
        let per = 2 * (n - 1);
        for c in 0..2 {
            // d v_k / d u_i = dt for i < k, so accumulate from the back
            let mut tail = 0.0;
            for k in (0..n - 1).rev() {
                let idx = c * per + 2 * k;
                tail += m[idx] - m[idx + 1];
                grad[2 * k + c] += self.tr.dt * tail;
            }
        }
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        let mut f = self.objective.w2 * self.tr.j2(z);
        if self.objective.w1 != 0.0 {
            f += self.objective.w1 * self.tr.j1(&self.tr.rollout(z));
        }
        f
    }

    pub fn objective_gradient(&self, z: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.tr.j2_grad(z, self.objective.w2, grad);
        if self.objective.w1 != 0.0 {
            let traj = self.tr.rollout(z);
            self.tr.j1_grad(z, &traj, self.objective.w1, grad);
        }
    }

    fn lagrangian(&self, z: &[f64], lambda: &[f64], rho: f64) -> f64 {
        let g = self.constraints(z);
        let penalty: f64 = g
            .iter()
            .zip(lambda)
            .map(|(&gj, &lj)| {
                let t = (lj + rho * gj).max(0.0);
                (t * t - lj * lj) / (2.0 * rho)
            })
            .sum();
        self.objective_value(z) + penalty
    }

    fn lagrangian_gradient(&self, z: &[f64], lambda: &[f64], rho: f64, grad: &mut [f64]) {
        self.objective_gradient(z, grad);
        if self.n() < 2 {
            return;
        }
        let m: Vec<f64> = self
            .constraints(z)
            .iter()
            .zip(lambda)
            .map(|(&gj, &lj)| (lj + rho * gj).max(0.0))
            .collect();
        self.add_constraint_gradient(&m, grad);
    }

    fn projected_gradient_norm(&self, z: &[f64], grad: &[f64]) -> f64 {
        let y: Vec<f64> = z.iter().zip(grad).map(|(a, b)| a - b).collect();
        let mut p = vec![0.0; z.len()];
        self.project(&y, &mut p);
        p.iter()
            .zip(z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Minimizes the augmented Lagrangian for fixed multipliers. Starts with
    /// nonmonotone spectral projected gradient steps and switches to
    /// projected Newton steps on the free variables once those stall.
    fn minimize_inner(
        &self,
        z: &mut [f64],
        lambda: &[f64],
        rho: f64,
        stop: f64,
        opts: &SolverOptions,
    ) -> (usize, f64) {
        const MEMORY: usize = 10;
        const GRADIENT_PHASE: usize = 60;
        let dim = z.len();
        let mut grad = vec![0.0; dim];
        let mut next_grad = vec![0.0; dim];
        let mut trial = vec![0.0; dim];
        let mut step_point = vec![0.0; dim];

        let mut f = self.lagrangian(z, lambda, rho);
        self.lagrangian_gradient(z, lambda, rho, &mut grad);
        let mut pg = self.projected_gradient_norm(z, &grad);
        let mut alpha = if pg > 0.0 {
            (1.0 / pg).clamp(1e-12, 1e12)
        } else {
            1.0
        };
        let mut history = vec![f];

        let mut it = 0;
        while it < opts.max_iterations && pg > stop {
            it += 1;
            let newton = if it > GRADIENT_PHASE {
                self.newton_step(z, &grad, f, lambda, rho, pg)
            } else {
                None
            };
            let f_new = match newton {
                Some((point, value)) => {
                    trial.copy_from_slice(&point);
                    value
                }
                None => {
                    for i in 0..dim {
                        trial[i] = z[i] - alpha * grad[i];
                    }
                    self.project(&trial, &mut step_point);
                    let dir: Vec<f64> = step_point
                        .iter()
                        .zip(z.iter())
                        .map(|(p, x)| p - x)
                        .collect();
                    let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
                    if slope >= 0.0 {
                        break;
                    }
                    let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut lam = 1.0;
                    let mut value;
                    loop {
                        for i in 0..dim {
                            trial[i] = z[i] + lam * dir[i];
                        }
                        value = self.lagrangian(&trial, lambda, rho);
                        if value <= reference + 1e-4 * lam * slope || lam < 1e-14 {
                            break;
                        }
                        // safeguarded quadratic backtracking
                        let q = -0.5 * slope * lam * lam / (value - f - lam * slope);
                        lam = if q >= 0.1 * lam && q <= 0.5 * lam {
                            q
                        } else {
                            0.5 * lam
                        };
                    }
                    value
                }
            };
            self.lagrangian_gradient(&trial, lambda, rho, &mut next_grad);
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..dim {
                let s = trial[i] - z[i];
                let y = next_grad[i] - grad[i];
                ss += s * s;
                sy += s * y;
            }
            alpha = if sy > 0.0 {
                (ss / sy).clamp(1e-12, 1e12)
            } else {
                (alpha * 10.0).min(1e12)
            };
            z.copy_from_slice(&trial);
            std::mem::swap(&mut grad, &mut next_grad);
            f = f_new;
            history.push(f);
            if history.len() > MEMORY {
                history.remove(0);
            }
            pg = self.projected_gradient_norm(z, &grad);
        }
        (it, pg)
    }

    /// One projected Newton step restricted to the variables that are not
    /// held at a bound. The Hessian is a central difference of the exact
    /// gradient; indefinite curvature is shifted away. Returns the accepted
    /// point and its value, or `None` if no sufficient decrease was found.
    fn newton_step(
        &self,
        z: &[f64],
        grad: &[f64],
        f: f64,
        lambda: &[f64],
        rho: f64,
        pg: f64,
    ) -> Option<(Vec<f64>, f64)> {
        let n = self.n();
        let eps_active = pg.min(1e-3);
        let mut free: Vec<usize> = Vec::with_capacity(z.len());
        let mut channel_of = Vec::new();
        for c in 0..2 {
            let ch = self.channels[c];
            let near_lo = |j: usize| z[j] <= ch.lo + eps_active;
            let near_hi = |j: usize| z[j] >= ch.hi - eps_active;
            // multiplier of the sum constraint, estimated on interior entries
            let interior: Vec<f64> = (0..n)
                .map(|i| 2 * i + c)
                .filter(|&j| !near_lo(j) && !near_hi(j))
                .map(|j| grad[j])
                .collect();
            let mu = if interior.is_empty() {
                0.0
            } else {
                interior.iter().sum::<f64>() / interior.len() as f64
            };
            let idx: Vec<usize> = (0..n)
                .map(|i| 2 * i + c)
                .filter(|&j| {
                    let at_lo = near_lo(j) && grad[j] - mu > 0.0;
                    let at_hi = near_hi(j) && grad[j] - mu < 0.0;
                    !(at_lo || at_hi)
                })
                .collect();
            if idx.len() >= 2 {
                channel_of.extend(std::iter::repeat_n(c, idx.len()));
                free.extend(idx);
            }
        }
        let m = free.len();
        if m == 0 {
            return None;
        }

        let mut hess = DMatrix::<f64>::zeros(m, m);
        let mut gp = vec![0.0; z.len()];
        let mut gm = vec![0.0; z.len()];
        let mut probe = z.to_vec();
        for (col, &j) in free.iter().enumerate() {
            let h = 1e-6 * z[j].abs().max(1.0);
            probe[j] = z[j] + h;
            self.lagrangian_gradient(&probe, lambda, rho, &mut gp);
            probe[j] = z[j] - h;
            self.lagrangian_gradient(&probe, lambda, rho, &mut gm);
            probe[j] = z[j];
            for (row, &i) in free.iter().enumerate() {
                hess[(row, col)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let scale = (0..m)
            .map(|i| hess[(i, i)].abs())
            .fold(0.0, f64::max)
            .max(1e-12);

        let channels_used: Vec<usize> = {
            let mut c = channel_of.clone();
            c.dedup();
            c
        };
        let k = channels_used.len();
        let rhs = DVector::from_iterator(
            m + k,
            free.iter()
                .map(|&j| -grad[j])
                .chain(std::iter::repeat_n(0.0, k)),
        );
        let slope_of = |d: &DVector<f64>| -> f64 {
            free.iter().enumerate().map(|(r, &j)| d[r] * grad[j]).sum()
        };

        let mut shift = 0.0;
        for _ in 0..12 {
            let mut kkt = DMatrix::<f64>::zeros(m + k, m + k);
            kkt.view_mut((0, 0), (m, m)).copy_from(&hess);
            for r in 0..m {
                kkt[(r, r)] += shift;
                let row = m + channels_used
                    .iter()
                    .position(|&c| c == channel_of[r])
                    .expect("channel");
                kkt[(row, r)] = 1.0;
                kkt[(r, row)] = 1.0;
            }
            let sol = kkt.lu().solve(&rhs);
            let next_shift = if shift == 0.0 {
                1e-6 * scale
            } else {
                shift * 10.0
            };
            let Some(sol) = sol else {
                shift = next_shift;
                continue;
            };
            let d = sol.rows(0, m).into_owned();
            let curvature = d.dot(&(&hess * &d)) + shift * d.dot(&d);
            let slope = slope_of(&d);
            if !(slope < 0.0 && curvature > 0.0) || !d.iter().all(|v| v.is_finite()) {
                shift = next_shift;
                continue;
            }
            // backtrack along the projection arc
            let mut step = vec![0.0; z.len()];
            let mut point = vec![0.0; z.len()];
            let mut lam = 1.0;
            for _ in 0..30 {
                step.copy_from_slice(z);
                for (r, &j) in free.iter().enumerate() {
                    step[j] += lam * d[r];
                }
                self.project(&step, &mut point);
                let moved: f64 = point
                    .iter()
                    .zip(z)
                    .zip(grad)
                    .map(|((p, x), g)| (p - x) * g)
                    .sum();
                let value = self.lagrangian(&point, lambda, rho);
                if moved < 0.0 && value <= f + 1e-4 * moved {
                    return Some((point, value));
                }
                lam *= 0.5;
            }
            return None;
        }
        None
    }

    /// Pushes residual path-bound violations to round-off by alternating
    /// between clipping node values and projecting the controls.
    fn polish(&self, z: &mut [f64]) {
        let n = self.n();
        if n < 2 {
            return;
        }
        let mut y = z.to_vec();
        for _ in 0..1000 {
            if self.max_violation(z) <= 1e-13 {
                return;
            }
            for c in 0..2 {
                let b = self.bounds[c];
                let nodes = self.node_values(z, c);
                let mut prev = b.start;
                for (k, v) in nodes.iter().enumerate() {
                    let clipped = v.clamp(b.lo, b.hi);
                    y[2 * k + c] = (clipped - prev) / self.tr.dt;
                    prev = clipped;
                }
                y[2 * (n - 1) + c] =
                    (b.start + self.tr.dt * self.channels[c].sum - prev) / self.tr.dt;
            }
            self.project(&y, z);
        }
    }

    pub fn solve(&self, z0: &[f64], opts: &SolverOptions) -> Outcome {
        let mut z = vec![0.0; z0.len()];
        self.project(z0, &mut z);
        let m = self.constraints(&z).len();
        let mut lambda = vec![0.0; m];
        let mut rho = opts.initial_penalty;
        let mut total = 0;
        let mut last_violation = f64::INFINITY;
        let mut stationarity = f64::INFINITY;
        let mut converged = false;

        // stationarity is measured relative to the starting gradient; the
        // terminal-position objective is very flat in the controls
        let mut grad = vec![0.0; z.len()];
        self.objective_gradient(&z, &mut grad);
        let reference = self.projected_gradient_norm(&z, &grad).clamp(1e-6, 1.0);
        let target = opts.tolerance * reference;

        for _ in 0..opts.max_outer_iterations {
            let (it, pg) = self.minimize_inner(&mut z, &lambda, rho, target * 1e-3, opts);
            total += it;
            stationarity = pg;
            let g = self.constraints(&z);
            let violation = g.iter().copied().fold(0.0, f64::max);
            let mut slack = 0.0f64;
            for (l, gj) in lambda.iter_mut().zip(&g) {
                *l = (*l + rho * gj).max(0.0);
                slack = slack.max(l.min(-gj));
            }
            if violation <= 1e-9 && slack <= 1e-9 && pg <= target {
                converged = true;
                break;
            }
            if violation > 0.25 * last_violation {
                rho = (rho * 10.0).min(opts.max_penalty);
            }
            last_violation = violation;
        }
        self.polish(&mut z);
        let violation = self.max_violation(&z);
        Outcome {
            z,
            iterations: total,
            violation,
            stationarity,
            converged: converged && violation <= opts.tolerance,
        }
    }
}
