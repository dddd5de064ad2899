//! Kinematic single-track vehicle model.
//!
//! The state is `(s_x, s_y, psi, v, delta)` with the position taken at the
//! centre of gravity. The input is `(u_vdot, u_deltadot)`. The dynamics are
//! invariant under planar rigid motions acting on `(s_x, s_y, psi)`, which
//! is what makes motion primitives reusable anywhere on the map.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vehicle state. `psi` is stored unnormalized.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub s_x: f64,
    pub s_y: f64,
    pub psi: f64,
    pub v: f64,
    pub delta: f64,
}

impl State {
    pub const fn new(s_x: f64, s_y: f64, psi: f64, v: f64, delta: f64) -> Self {
        Self {
            s_x,
            s_y,
            psi,
            v,
            delta,
        }
    }

    /// Standing at the frame origin with the given speed and steering.
    pub const fn at_origin(v: f64, delta: f64) -> Self {
        Self::new(0.0, 0.0, 0.0, v, delta)
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.s_x, self.s_y, self.psi, self.v, self.delta]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    /// Pose part as a group element (absolute pose relative to the map frame).
    pub fn pose(&self) -> GroupElement {
        GroupElement::new(self.s_x, self.s_y, self.psi)
    }

    /// Largest componentwise absolute difference, comparing headings modulo 2π.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        (0..5)
            .map(|i| {
                if i == 2 {
                    normalize_angle(a[i] - b[i]).abs()
                } else {
                    (a[i] - b[i]).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Control input, held constant over an integration step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Input {
    pub u_vdot: f64,
    pub u_deltadot: f64,
}

impl Input {
    pub const ZERO: Input = Input {
        u_vdot: 0.0,
        u_deltadot: 0.0,
    };

    pub const fn new(u_vdot: f64, u_deltadot: f64) -> Self {
        Self { u_vdot, u_deltadot }
    }

    pub fn norm_squared(&self) -> f64 {
        self.u_vdot * self.u_vdot + self.u_deltadot * self.u_deltadot
    }
}

/// Geometry and actuation limits of the vehicle.
///
/// The defaults describe a 1:18 model-scale car. They are configuration
/// values chosen to fit the standard trim table, not measured data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Wheelbase length [m].
    pub wheelbase: f64,
    /// Rear axle to centre of gravity [m].
    pub rear_to_cg: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub delta_max: f64,
    /// Bound on |u_vdot| [m/s²].
    pub accel_max: f64,
    /// Bound on |u_deltadot| [rad/s].
    pub steer_rate_max: f64,
    /// Radius of the collision disc [m].
    pub footprint_radius: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 0.15,
            rear_to_cg: 0.075,
            v_min: 0.0,
            v_max: 0.8,
            delta_max: 0.62,
            accel_max: 8.0,
            steer_rate_max: 10.0,
            footprint_radius: 0.06,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.wheelbase,
            self.rear_to_cg,
            self.v_min,
            self.v_max,
            self.delta_max,
            self.accel_max,
            self.steer_rate_max,
            self.footprint_radius,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("vehicle parameters must be finite".into()));
        }
        if self.wheelbase <= 0.0 {
            return Err(Error::Config("wheelbase must be positive".into()));
        }
        if !(0.0..=self.wheelbase).contains(&self.rear_to_cg) {
            return Err(Error::Config(
                "rear_to_cg must lie within [0, wheelbase]".into(),
            ));
        }
        if self.v_min > self.v_max {
            return Err(Error::Config("v_min exceeds v_max".into()));
        }
        if self.v_max <= 0.0
            || self.delta_max <= 0.0
            || self.delta_max >= FRAC_PI_2
            || self.accel_max <= 0.0
            || self.steer_rate_max <= 0.0
            || self.footprint_radius <= 0.0
        {
            return Err(Error::Config(
                "bounds must be positive and delta_max below pi/2".into(),
            ));
        }
        Ok(())
    }

    /// Velocity and steering bounds as a box check, with slack `tol`.
    pub fn state_in_bounds(&self, v: f64, delta: f64, tol: f64) -> bool {
        v >= self.v_min - tol && v <= self.v_max + tol && delta.abs() <= self.delta_max + tol
    }

    fn ratio(&self) -> f64 {
        self.rear_to_cg / self.wheelbase
    }
}

/// Time derivative of the five state components.
pub type StateDerivative = [f64; 5];

/// Sideslip angle at the centre of gravity.
pub fn sideslip_beta(delta: f64, params: &VehicleParams) -> Result<f64> {
    if !delta.is_finite() || delta.abs() >= FRAC_PI_2 {
        return Err(Error::domain(format!(
            "steering angle {delta} outside (-pi/2, pi/2)"
        )));
    }
    Ok(beta_unchecked(delta, params))
}

#[inline]
fn beta_unchecked(delta: f64, params: &VehicleParams) -> f64 {
    (params.ratio() * delta.tan()).atan()
}

/// Right-hand side of the kinematic single-track model.
pub fn eval_dynamics(x: &State, u: &Input, params: &VehicleParams) -> Result<StateDerivative> {
    if !x.is_finite() || !u.u_vdot.is_finite() || !u.u_deltadot.is_finite() {
        return Err(Error::domain("non-finite state or input"));
    }
    sideslip_beta(x.delta, params)?;
    Ok(dynamics(&x.to_array(), u, params))
}

#[inline]
pub(crate) fn dynamics(x: &[f64; 5], u: &Input, params: &VehicleParams) -> StateDerivative {
    let (psi, v, delta) = (x[2], x[3], x[4]);
    let beta = beta_unchecked(delta, params);
    let heading = psi + beta;
    [
        v * heading.cos(),
        v * heading.sin(),
        v / params.wheelbase * delta.tan() * beta.cos(),
        u.u_vdot,
        u.u_deltadot,
    ]
}

/// Jacobian of the dynamics with respect to the state, row-major.
/// The input Jacobian is constant: rows 3 and 4 are the identity.
pub(crate) fn dynamics_state_jacobian(x: &[f64; 5], params: &VehicleParams) -> [[f64; 5]; 5] {
    let (psi, v, delta) = (x[2], x[3], x[4]);
    let rho = params.ratio();
    let t = delta.tan();
    let sec2 = 1.0 + t * t;
    let q = 1.0 + rho * rho * t * t;
    let beta = (rho * t).atan();
    let dbeta = rho * sec2 / q;
    let (s, c) = (psi + beta).sin_cos();
    let cos_beta = beta.cos();

    let mut jac = [[0.0; 5]; 5];
    jac[0][2] = -v * s;
    jac[0][3] = c;
    jac[0][4] = -v * s * dbeta;
    jac[1][2] = v * c;
    jac[1][3] = s;
    jac[1][4] = v * c * dbeta;
    jac[2][3] = t * cos_beta / params.wheelbase;
    jac[2][4] = v / params.wheelbase * sec2 / (q * q.sqrt());
    jac
}

#[inline]
fn axpy(x: &[f64; 5], h: f64, k: &[f64; 5]) -> [f64; 5] {
    let mut out = *x;
    for i in 0..5 {
        out[i] += h * k[i];
    }
    out
}

#[inline]
pub(crate) fn rk4(x: &[f64; 5], u: &Input, dt: f64, params: &VehicleParams) -> [f64; 5] {
    let k1 = dynamics(x, u, params);
    let k2 = dynamics(&axpy(x, 0.5 * dt, &k1), u, params);
    let k3 = dynamics(&axpy(x, 0.5 * dt, &k2), u, params);
    let k4 = dynamics(&axpy(x, dt, &k3), u, params);
    let mut out = *x;
    for i in 0..5 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// One classical Runge–Kutta step under a zero-order-hold input.
pub fn integrate_step(x: &State, u: &Input, dt: f64, params: &VehicleParams) -> Result<State> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!(
            "step size must be positive, got {dt}"
        )));
    }
    eval_dynamics(x, u, params)?;
    Ok(State::from_array(rk4(&x.to_array(), u, dt, params)))
}

/// `substeps` RK4 steps covering `duration` with a constant input.
pub fn integrate(
    x: &State,
    u: &Input,
    duration: f64,
    substeps: usize,
    params: &VehicleParams,
) -> Result<State> {
    if substeps == 0 {
        return Err(Error::domain("substeps must be at least 1"));
    }
    let dt = duration / substeps as f64;
    let mut state = *x;
    for _ in 0..substeps {
        state = integrate_step(&state, u, dt, params)?;
    }
    Ok(state)
}

/// Planar rigid motion `(dx, dy, dpsi)`: rotate by `dpsi`, then translate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupElement {
    pub dx: f64,
    pub dy: f64,
    pub dpsi: f64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        dx: 0.0,
        dy: 0.0,
        dpsi: 0.0,
    };

    pub const fn new(dx: f64, dy: f64, dpsi: f64) -> Self {
        Self { dx, dy, dpsi }
    }

    /// Image of a planar point under this element.
    pub fn transform_point(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.dpsi.sin_cos();
        (c * x - s * y + self.dx, s * x + c * y + self.dy)
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        compose_group(self, other)
    }

    pub fn inverse(&self) -> GroupElement {
        invert_group(self)
    }

    pub fn apply(&self, x: &State) -> State {
        apply_group(self, x)
    }

    /// Largest componentwise difference with headings compared modulo 2π.
    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        (self.dx - other.dx)
            .abs()
            .max((self.dy - other.dy).abs())
            .max(normalize_angle(self.dpsi - other.dpsi).abs())
    }
}

/// Symmetry action on a state; speed and steering are left untouched.
pub fn apply_group(g: &GroupElement, x: &State) -> State {
    let (s_x, s_y) = g.transform_point(x.s_x, x.s_y);
    State::new(s_x, s_y, x.psi + g.dpsi, x.v, x.delta)
}

/// `apply(compose(g1, g2), x) == apply(g1, apply(g2, x))`.
pub fn compose_group(g1: &GroupElement, g2: &GroupElement) -> GroupElement {
    let (dx, dy) = g1.transform_point(g2.dx, g2.dy);
    GroupElement::new(dx, dy, g1.dpsi + g2.dpsi)
}

pub fn invert_group(g: &GroupElement) -> GroupElement {
    let (s, c) = g.dpsi.sin_cos();
    GroupElement::new(-(c * g.dx + s * g.dy), s * g.dx - c * g.dy, -g.dpsi)
}

/// Maps an angle to (-π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}
