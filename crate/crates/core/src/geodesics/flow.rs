//! Reduced Killing-time flow on the cotangent bundle of Σ and its linearization.
//!
//! With `H(x, k) = α·k + β|k|` the lightlike strips evolve as
//! `dq/dt = −∂H/∂k`, `dk/dt = ∂H/∂q` (the sign is fixed by the Lorentzian
//! signature: a covector `k > 0` on the circle moves towards decreasing `x`).

use nalgebra::{SMatrix, SVector};
use num_dual::{gradient, hessian, jacobian};

use crate::models::{dot3, inv2, Axis, Chart, Ellipsoid, SigmaPoint, StationaryModel};
use crate::Scalar;

pub(crate) type Vec4 = SVector<f64, 4>;
pub(crate) type Mat4 = SMatrix<f64, 4, 4>;

/// Sine of the colatitude below which the flow moves to a better chart.
const SWITCH_BELOW: f64 = 0.6;

/// Phase-space state `(q₀, q₁, k₀, k₁)` in a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct State {
    pub chart: Chart,
    pub z: Vec4,
}

impl State {
    pub fn new(x: &SigmaPoint, k: [f64; 2]) -> State {
        State {
            chart: x.chart,
            z: Vec4::new(x.q[0], x.q[1], k[0], k[1]),
        }
    }

    pub fn point(&self) -> SigmaPoint {
        SigmaPoint {
            chart: self.chart,
            q: [self.z[0], self.z[1]],
        }
    }

    pub fn k(&self) -> [f64; 2] {
        [self.z[2], self.z[3]]
    }
}

/// `H(q, k) = α·k + β |k|_{h⁻¹}`.
pub(crate) fn hamiltonian<T: Scalar>(model: &StationaryModel, chart: Chart, z: &[T; 4]) -> T {
    let g = model.local(chart, [z[0], z[1]]);
    let n = model.spatial_dim();
    let k = [z[2], z[3]];
    g.shift_dot(&k, n) + g.lapse * g.co_norm_sq(&k, n).sqrt()
}

fn as_array<T: Copy>(v: &SVector<T, 4>) -> [T; 4] {
    [v[0], v[1], v[2], v[3]]
}

/// Value and gradient of `H`.
pub(crate) fn h_gradient(model: &StationaryModel, chart: Chart, z: &Vec4) -> (f64, Vec4) {
    gradient(|v| hamiltonian(model, chart, &as_array(&v)), z)
}

/// Reduced flow vector field.
pub(crate) fn rhs(model: &StationaryModel, chart: Chart, z: &Vec4) -> Vec4 {
    let (_, g) = h_gradient(model, chart, z);
    Vec4::new(-g[2], -g[3], g[0], g[1])
}

/// Jacobian of [`rhs`].
pub(crate) fn rhs_jacobian(model: &StationaryModel, chart: Chart, z: &Vec4) -> Mat4 {
    let (_, _, h) = hessian(|v| hamiltonian(model, chart, &as_array(&v)), z);
    let mut a = Mat4::zeros();
    for j in 0..4 {
        a[(0, j)] = -h[(2, j)];
        a[(1, j)] = -h[(3, j)];
        a[(2, j)] = h[(0, j)];
        a[(3, j)] = h[(1, j)];
    }
    a
}

pub(crate) fn rk4(model: &StationaryModel, s: &State, dt: f64) -> State {
    let f = |z: &Vec4| rhs(model, s.chart, z);
    let k1 = f(&s.z);
    let k2 = f(&(s.z + k1 * (0.5 * dt)));
    let k3 = f(&(s.z + k2 * (0.5 * dt)));
    let k4 = f(&(s.z + k3 * dt));
    State {
        chart: s.chart,
        z: s.z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0),
    }
}

/// RK4 step of the state together with a 4×4 fundamental matrix.
pub(crate) fn rk4_variational(model: &StationaryModel, s: &State, phi: &Mat4, dt: f64) -> (State, Mat4) {
    let c = s.chart;
    let f = |z: &Vec4, p: &Mat4| (rhs(model, c, z), rhs_jacobian(model, c, z) * p);
    let (k1, l1) = f(&s.z, phi);
    let (k2, l2) = f(&(s.z + k1 * (0.5 * dt)), &(phi + l1 * (0.5 * dt)));
    let (k3, l3) = f(&(s.z + k2 * (0.5 * dt)), &(phi + l2 * (0.5 * dt)));
    let (k4, l4) = f(&(s.z + k3 * dt), &(phi + l3 * dt));
    (
        State {
            chart: c,
            z: s.z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0),
        },
        phi + (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (dt / 6.0),
    )
}

fn chart_coords_generic<T: Scalar>(ell: &Ellipsoid, axis: Axis, x: &[T; 3]) -> [T; 2] {
    let (p, u, v) = axis.frame();
    let mut c = x[p] / ell.s[p];
    // keep acos finite under rounding
    if c.re() > 1.0 {
        c = T::from(1.0);
    } else if c.re() < -1.0 {
        c = T::from(-1.0);
    }
    [c.acos(), (x[v] / ell.s[v]).atan2(x[u] / ell.s[u])]
}

/// Cotangent lift of a chart transition between two polar charts.
pub(crate) fn transition<T: Scalar>(ell: &Ellipsoid, from: Axis, to: Axis, z: &[T; 4]) -> [T; 4] {
    let q = [z[0], z[1]];
    let x = ell.embed(from, q);
    let [a0, a1] = ell.tangents(from, q);
    let h = [[dot3(&a0, &a0), dot3(&a0, &a1)], [dot3(&a1, &a0), dot3(&a1, &a1)]];
    let hi = inv2(&h);
    let v0 = hi[0][0] * z[2] + hi[0][1] * z[3];
    let v1 = hi[1][0] * z[2] + hi[1][1] * z[3];
    let w = [a0[0] * v0 + a1[0] * v1, a0[1] * v0 + a1[1] * v1, a0[2] * v0 + a1[2] * v1];
    let q2 = chart_coords_generic(ell, to, &x);
    let [b0, b1] = ell.tangents(to, q2);
    [q2[0], q2[1], dot3(&b0, &w), dot3(&b1, &w)]
}

/// Re-expresses a state in the given chart.
pub(crate) fn to_chart(model: &StationaryModel, s: &State, to: Chart) -> State {
    match (s.chart, to, model.cauchy.ellipsoid()) {
        (Chart::Polar(a), Chart::Polar(b), Some(ell)) if a != b => {
            let z = transition(&ell, a, b, &as_array(&s.z));
            State {
                chart: to,
                z: Vec4::from(z),
            }
        }
        _ => State { chart: to, ..*s },
    }
}

/// Chart change when close to a pole; returns the transition Jacobian if one happened.
pub(crate) fn maybe_switch(model: &StationaryModel, s: &State, with_jacobian: bool) -> Option<(State, Option<Mat4>)> {
    let (Chart::Polar(axis), Some(ell)) = (s.chart, model.cauchy.ellipsoid()) else {
        return None;
    };
    if s.z[0].sin().abs() >= SWITCH_BELOW {
        return None;
    }
    let x = ell.embed(axis, [s.z[0], s.z[1]]);
    let target = ell.best_axis(x);
    if target == axis {
        return None;
    }
    let next = to_chart(model, s, Chart::Polar(target));
    let jac = with_jacobian.then(|| {
        let (_, j) = jacobian(
            |v: SVector<_, 4>| SVector::from(transition(&ell, axis, target, &as_array(&v))),
            &s.z,
        );
        j
    });
    Some((next, jac))
}

/// Default chart for a point on a surface: the one with the farthest pole.
pub(crate) fn best_chart(model: &StationaryModel, s: &State) -> State {
    match (s.chart, model.cauchy.ellipsoid()) {
        (Chart::Polar(axis), Some(ell)) => {
            let x = ell.embed(axis, [s.z[0], s.z[1]]);
            to_chart(model, s, Chart::Polar(ell.best_axis(x)))
        }
        _ => *s,
    }
}

/// Flows for Killing time `t` using `steps` RK4 steps.
pub(crate) fn flow(model: &StationaryModel, s: &State, t: f64, steps: usize) -> State {
    let steps = steps.max(1);
    let dt = t / steps as f64;
    let mut cur = best_chart(model, s);
    for _ in 0..steps {
        cur = rk4(model, &cur, dt);
        if let Some((next, _)) = maybe_switch(model, &cur, false) {
            cur = next;
        }
    }
    cur
}

/// Number of RK4 steps used for a flow of duration `t`.
pub(crate) fn default_steps(model: &StationaryModel, t: f64) -> usize {
    let per_unit = if model.cauchy.is_flat() { 256.0 } else { 800.0 };
    ((t.abs() * per_unit).ceil() as usize).max(64)
}
