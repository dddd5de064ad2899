//! Single-shooting transcription of a fixed-duration maneuver.
//!
//! Decision vector layout: `z[2 i] = u_vdot`, `z[2 i + 1] = u_deltadot` on
//! control interval `i`, held constant over `substeps` RK4 steps.

use crate::vehicle::{dynamics, dynamics_state_jacobian, rk4, Input, VehicleParams};

#[derive(Debug, Clone)]
pub(crate) struct Transcription {
    pub params: VehicleParams,
    pub x0: [f64; 5],
    pub intervals: usize,
    pub substeps: usize,
    /// Control interval length.
    pub dt: f64,
}

impl Transcription {
    pub fn new(
        params: VehicleParams,
        x0: [f64; 5],
        duration: f64,
        intervals: usize,
        substeps: usize,
    ) -> Self {
        Self {
            params,
            x0,
            intervals,
            substeps,
            dt: duration / intervals as f64,
        }
    }

    pub fn h(&self) -> f64 {
        self.dt / self.substeps as f64
    }

    pub fn input(z: &[f64], i: usize) -> Input {
        Input::new(z[2 * i], z[2 * i + 1])
    }

    /// States at every substep, `intervals * substeps + 1` entries.
    pub fn rollout(&self, z: &[f64]) -> Vec<[f64; 5]> {
        let h = self.h();
        let mut out = Vec::with_capacity(self.intervals * self.substeps + 1);
        let mut x = self.x0;
        out.push(x);
        for i in 0..self.intervals {
            let u = Self::input(z, i);
            for _ in 0..self.substeps {
                x = rk4(&x, &u, h, &self.params);
                out.push(x);
            }
        }
        out
    }

    /// States on the control grid.
    pub fn nodes(&self, traj: &[[f64; 5]]) -> Vec<[f64; 5]> {
        traj.iter().step_by(self.substeps).copied().collect()
    }

    fn trapezoid_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.intervals {
            0.5 * self.dt
        } else {
            self.dt
        }
    }

    /// Trapezoidal quadrature of `-(s_x² + s_y²)` on the control grid.
    pub fn j1(&self, traj: &[[f64; 5]]) -> f64 {
        (0..=self.intervals)
            .map(|k| {
                let x = &traj[k * self.substeps];
                -self.trapezoid_weight(k) * (x[0] * x[0] + x[1] * x[1])
            })
            .sum()
    }

    /// Exact integral of `|u|²` under zero-order hold.
    pub fn j2(&self, z: &[f64]) -> f64 {
        self.dt * z.iter().map(|u| u * u).sum::<f64>()
    }

    pub fn j2_grad(&self, z: &[f64], scale: f64, grad: &mut [f64]) {
        for (g, u) in grad.iter_mut().zip(z) {
            *g += scale * 2.0 * self.dt * u;
        }
    }

    /// Adds `scale * dJ1/dz` to `grad` by reverse-mode differentiation of
    /// the RK4 recursion.
    pub fn j1_grad(&self, z: &[f64], traj: &[[f64; 5]], scale: f64, grad: &mut [f64]) {
        let h = self.h();
        let p = &self.params;
        let node_adjoint = |k: usize| -> [f64; 5] {
            let x = &traj[k * self.substeps];
            let w = -scale * self.trapezoid_weight(k);
            [2.0 * w * x[0], 2.0 * w * x[1], 0.0, 0.0, 0.0]
        };

        let mut lambda = node_adjoint(self.intervals);
        for i in (0..self.intervals).rev() {
            let u = Self::input(z, i);
            let mut gu = [0.0; 2];
            for s in (0..self.substeps).rev() {
                let x = &traj[i * self.substeps + s];
                lambda = rk4_adjoint(x, &u, h, p, &lambda, &mut gu);
            }
            grad[2 * i] += gu[0];
            grad[2 * i + 1] += gu[1];
            let local = node_adjoint(i);
            for j in 0..5 {
                lambda[j] += local[j];
            }
        }
    }
}

fn transpose_mul(a: &[[f64; 5]; 5], v: &[f64; 5]) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (i, row) in a.iter().enumerate() {
        for j in 0..5 {
            out[j] += row[j] * v[i];
        }
    }
    out
}

fn add_scaled(dst: &mut [f64; 5], h: f64, v: &[f64; 5]) {
    for i in 0..5 {
        dst[i] += h * v[i];
    }
}

/// Pulls the adjoint of `x_next = rk4(x, u, h)` back to `x`, accumulating
/// the input sensitivity into `gu`.
fn rk4_adjoint(
    x: &[f64; 5],
    u: &Input,
    h: f64,
    p: &VehicleParams,
    lambda_next: &[f64; 5],
    gu: &mut [f64; 2],
) -> [f64; 5] {
    let k1 = dynamics(x, u, p);
    let mut y2 = *x;
    add_scaled(&mut y2, 0.5 * h, &k1);
    let k2 = dynamics(&y2, u, p);
    let mut y3 = *x;
    add_scaled(&mut y3, 0.5 * h, &k2);
    let k3 = dynamics(&y3, u, p);
    let mut y4 = *x;
    add_scaled(&mut y4, h, &k3);

    let mut a1 = lambda_next.map(|l| h / 6.0 * l);
    let mut a2 = lambda_next.map(|l| h / 3.0 * l);
    let mut a3 = a2;
    let a4 = a1;
    let mut lambda = *lambda_next;

    let mu4 = transpose_mul(&dynamics_state_jacobian(&y4, p), &a4);
    gu[0] += a4[3];
    gu[1] += a4[4];
    add_scaled(&mut lambda, 1.0, &mu4);
    add_scaled(&mut a3, h, &mu4);

    let mu3 = transpose_mul(&dynamics_state_jacobian(&y3, p), &a3);
    gu[0] += a3[3];
    gu[1] += a3[4];
    add_scaled(&mut lambda, 1.0, &mu3);
    add_scaled(&mut a2, 0.5 * h, &mu3);

    let mu2 = transpose_mul(&dynamics_state_jacobian(&y2, p), &a2);
    gu[0] += a2[3];
    gu[1] += a2[4];
    add_scaled(&mut lambda, 1.0, &mu2);
    add_scaled(&mut a1, 0.5 * h, &mu2);

    let mu1 = transpose_mul(&dynamics_state_jacobian(x, p), &a1);
    gu[0] += a1[3];
    gu[1] += a1[4];
    add_scaled(&mut lambda, 1.0, &mu1);
    lambda
}
