use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{ActuationLineParams, LoadImpedance};

/// The seven states of the line: three positions, three velocities and the
/// lagged clutch force.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PlantState {
    pub x1: f64,
    pub v1: f64,
    pub x2: f64,
    pub v2: f64,
    pub x3: f64,
    pub v3: f64,
    pub f_mr: f64,
}

impl PlantState {
    pub fn to_array(&self) -> [f64; 7] {
        [self.x1, self.v1, self.x2, self.v2, self.x3, self.v3, self.f_mr]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self { x1: a[0], v1: a[1], x2: a[2], v2: a[3], x3: a[4], v3: a[5], f_mr: a[6] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Master-side line pressure, force-equivalent: `k1·(x1 − x2)`.
    pub fn pressure(&self, p: &ActuationLineParams) -> f64 {
        p.k1 * (self.x1 - self.x2)
    }

    /// Output force through the slave-side stiffness: `k2·(x2 − x3)`.
    pub fn output_force(&self, p: &ActuationLineParams) -> f64 {
        p.k2 * (self.x2 - self.x3)
    }

    /// Static equilibrium under a constant clutch force. Needs a restoring
    /// load spring (or a blocked output).
    pub fn equilibrium(force: f64, p: &ActuationLineParams, z: &LoadImpedance) -> Result<Self> {
        let x3 = match *z {
            LoadImpedance::Blocked => 0.0,
            LoadImpedance::Compliant { k3, .. } if k3 > 0.0 => force / k3,
            LoadImpedance::Compliant { .. } => {
                return Err(Error::Validation { name: "load.k3", msg: "no static equilibrium without a load spring".into() })
            }
        };
        let x2 = x3 + force / p.k2;
        let x1 = x2 + force / p.k1;
        Ok(Self { x1, x2, x3, f_mr: force, ..Self::default() })
    }

    /// Kinetic plus spring potential energy.
    pub fn mechanical_energy(&self, p: &ActuationLineParams, z: &LoadImpedance) -> f64 {
        let (m3, k3) = match *z {
            LoadImpedance::Blocked => (0.0, 0.0),
            LoadImpedance::Compliant { m3, k3, .. } => (m3, k3),
        };
        let d1 = self.x1 - self.x2;
        let d2 = self.x2 - self.x3;
        0.5 * (p.m1 * self.v1 * self.v1 + p.m2 * self.v2 * self.v2 + m3 * self.v3 * self.v3)
            + 0.5 * (p.k1 * d1 * d1 + p.k2 * d2 * d2 + k3 * self.x3 * self.x3)
    }
}

/// Time derivative of the line state.
///
/// ```text
/// F_MR' = (K_I·I − F_MR)/τ
/// m1·v1' = F_MR − b1·v1 − k1(x1 − x2)
/// m2·v2' = k1(x1 − x2) − b2·v2 − k2(x2 − x3)
/// m3·v3' = k2(x2 − x3) − b3·v3 − k3·x3 + F_dist
/// ```
///
/// With a blocked output x3 and v3 stay at zero and `F_dist` has no effect.
/// The clutch only pulls: a non-positive `F_MR` is not driven further down.
pub fn plant_derivative(
    s: &PlantState,
    current: f64,
    f_dist: f64,
    p: &ActuationLineParams,
    z: &LoadImpedance,
) -> PlantState {
    let spring1 = p.k1 * (s.x1 - s.x2);
    let spring2 = p.k2 * (s.x2 - s.x3);
    let mut df = (p.k_i * current - s.f_mr) / p.tau;
    if s.f_mr <= 0.0 && df < 0.0 {
        df = 0.0;
    }
    let (dx3, dv3) = match *z {
        LoadImpedance::Blocked => (0.0, 0.0),
        LoadImpedance::Compliant { m3, b3, k3 } => (s.v3, (spring2 - b3 * s.v3 - k3 * s.x3 + f_dist) / m3),
    };
    PlantState {
        x1: s.v1,
        v1: (s.f_mr - p.b1 * s.v1 - spring1) / p.m1,
        x2: s.v2,
        v2: (spring1 - p.b2 * s.v2 - spring2) / p.m2,
        x3: dx3,
        v3: dv3,
        f_mr: df,
    }
}

/// Same dynamics without the one-way clutch clamp (linear plant).
pub fn plant_derivative_linear(
    s: &PlantState,
    current: f64,
    f_dist: f64,
    p: &ActuationLineParams,
    z: &LoadImpedance,
) -> PlantState {
    let mut d = plant_derivative(s, current, f_dist, p, z);
    d.f_mr = (p.k_i * current - s.f_mr) / p.tau;
    d
}

/// One classical fourth-order Runge–Kutta step of `dy/dt = f(t, y)`.
pub fn rk4_step<const N: usize>(y: [f64; N], t: f64, h: f64, f: impl Fn(f64, &[f64; N]) -> [f64; N]) -> [f64; N] {
    let axpy = |a: &[f64; N], k: &[f64; N], c: f64| -> [f64; N] {
        let mut out = *a;
        for i in 0..N {
            out[i] += c * k[i];
        }
        out
    };
    let k1 = f(t, &y);
    let k2 = f(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(&y, &k3, h));
    let mut out = y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Advances the plant by `h` with the current held by `current(t)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn step_plant(
    s: &PlantState,
    t: f64,
    h: f64,
    current: impl Fn(f64) -> f64,
    f_dist: impl Fn(f64) -> f64,
    p: &ActuationLineParams,
    z: &LoadImpedance,
    clamped: bool,
) -> PlantState {
    let y = rk4_step(s.to_array(), t, h, |tt, y| {
        let st = PlantState::from_array(*y);
        let d = if clamped {
            plant_derivative(&st, current(tt), f_dist(tt), p, z)
        } else {
            plant_derivative_linear(&st, current(tt), f_dist(tt), p, z)
        };
        d.to_array()
    });
    let mut next = PlantState::from_array(y);
    if clamped && next.f_mr < 0.0 {
        next.f_mr = 0.0;
    }
    next
}
