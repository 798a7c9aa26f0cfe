//! Linearized Poincaré maps and conjugate-point counts.

use nalgebra::{DMatrix, Matrix2};
use num_dual::jacobian;

use super::flow::{self, Mat4, State, Vec4};
use super::{GeodesicError, GeodesicStrip, PeriodicOrbit};
use crate::models::{dot3, Chart, StationaryModel};

fn omega(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[2] + a[1] * b[3] - a[2] * b[0] - a[3] * b[1]
}

/// Steps of the variational integration for a flow of duration `t`.
fn variational_steps(t: f64) -> usize {
    ((t.abs() * 1200.0).ceil() as usize).max(256)
}

/// Propagates the state and fundamental matrix for time `t`, returning both
/// expressed in the chart of the initial state.
pub(crate) fn propagate(model: &StationaryModel, s0: &State, t: f64) -> Result<(State, Mat4), GeodesicError> {
    propagate_with(model, s0, t, |_, _, _| {})
}

/// As [`propagate`], calling `visit(step, state, Φ)` after every step.
pub(crate) fn propagate_with<F: FnMut(usize, &State, &Mat4)>(
    model: &StationaryModel,
    s0: &State,
    t: f64,
    mut visit: F,
) -> Result<(State, Mat4), GeodesicError> {
    let steps = variational_steps(t);
    let dt = t / steps as f64;
    let mut cur = *s0;
    let mut phi = Mat4::identity();
    for step in 1..=steps {
        let (next, p) = flow::rk4_variational(model, &cur, &phi, dt);
        cur = next;
        phi = p;
        if let Some((sw, jac)) = flow::maybe_switch(model, &cur, true) {
            phi = jac.unwrap() * phi;
            cur = sw;
        }
        if !phi.iter().all(|v| v.is_finite()) {
            return Err(GeodesicError::Propagation(format!("non-finite fundamental matrix at step {step}")));
        }
        visit(step, &cur, &phi);
    }
    if let (Chart::Polar(a), Chart::Polar(b), Some(ell)) = (cur.chart, s0.chart, model.cauchy.ellipsoid()) {
        if a != b {
            let (_, j) = jacobian(
                |v: nalgebra::SVector<_, 4>| {
                    nalgebra::SVector::from(flow::transition(&ell, a, b, &[v[0], v[1], v[2], v[3]]))
                },
                &cur.z,
            );
            phi = j * phi;
            cur = flow::to_chart(model, &cur, s0.chart);
        }
    }
    Ok((cur, phi))
}

/// Basis `(u, v)` of the energy-surface complement of the flow line with `ω(u, v) = 1`.
fn transverse_basis(model: &StationaryModel, s: &State) -> (Vec4, Vec4) {
    let (_, grad) = flow::h_gradient(model, s.chart, &s.z);
    let x = flow::rhs(model, s.chart, &s.z);
    let mut basis: Vec<Vec4> = vec![grad.normalize(), x.normalize()];
    for i in 0..4 {
        let mut e = Vec4::zeros();
        e[i] = 1.0;
        for b in &basis {
            e -= b * b.dot(&e);
        }
        if e.norm() > 1e-6 {
            basis.push(e.normalize());
        }
        if basis.len() == 4 {
            break;
        }
    }
    let u = basis[2];
    let v = basis[3];
    let w = omega(&u, &v);
    (u, v / w)
}

/// Transverse linearized return map of a closed strip after time `period`.
pub(crate) fn poincare_map(model: &StationaryModel, strip: &GeodesicStrip, period: f64) -> Result<Matrix2<f64>, GeodesicError> {
    let s0 = strip.state();
    let (_, phi) = propagate(model, &s0, period)?;
    let (u, v) = transverse_basis(model, &s0);
    let pu = phi * u;
    let pv = phi * v;
    Ok(Matrix2::new(omega(&pu, &v), omega(&pv, &v), omega(&u, &pu), omega(&u, &pv)))
}

/// Monodromy `P_γ` on the transverse symplectic quotient; empty for `d = 2`.
pub fn monodromy(model: &StationaryModel, orbit: &PeriodicOrbit) -> Result<DMatrix<f64>, GeodesicError> {
    if model.spatial_dim() == 1 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let p = poincare_map(model, &orbit.strip, orbit.period)?;
    Ok(DMatrix::from_column_slice(2, 2, p.as_slice()))
}

/// `det(I − P)`, with the convention `1` for the empty matrix.
pub fn det_i_minus_p(p: &DMatrix<f64>) -> f64 {
    if p.nrows() == 0 {
        return 1.0;
    }
    (DMatrix::identity(p.nrows(), p.ncols()) - p).determinant()
}

/// `max |PᵀJP − J|`.
pub fn symplectic_defect(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    if n == 0 {
        return 0.0;
    }
    let half = n / 2;
    let mut j = DMatrix::zeros(n, n);
    for i in 0..half {
        j[(i, half + i)] = 1.0;
        j[(half + i, i)] = -1.0;
    }
    (p.transpose() * &j * p - j).abs().max()
}

/// Interior conjugate-point count along a strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaslovCount {
    pub count: u32,
    /// A conjugate point sits at the endpoint within tolerance.
    pub endpoint_conjugate: bool,
}

/// Counts zeros of the transverse Jacobi field started with `δq = 0`.
pub(crate) fn conjugate_points(model: &StationaryModel, strip: &GeodesicStrip, period: f64) -> Result<MaslovCount, GeodesicError> {
    let Some(ell) = model.cauchy.ellipsoid() else {
        return Ok(MaslovCount { count: 0, endpoint_conjugate: false });
    };
    let s0 = strip.state();
    let (_, grad) = flow::h_gradient(model, s0.chart, &s0.z);
    let dz0 = Vec4::new(0.0, 0.0, -grad[3], grad[2]).normalize();
    let mut samples: Vec<f64> = Vec::new();
    propagate_with(model, &s0, period, |_, s, phi| {
        let dz = phi * dz0;
        let Chart::Polar(axis) = s.chart else { return };
        let q = [s.z[0], s.z[1]];
        let [t0, t1] = ell.tangents(axis, q);
        let qd = flow::rhs(model, s.chart, &s.z);
        let a = [0, 1, 2].map(|i| t0[i] * dz[0] + t1[i] * dz[1]);
        let b = [0, 1, 2].map(|i| t0[i] * qd[0] + t1[i] * qd[1]);
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let nrm = ell.normal(ell.embed(axis, q));
        samples.push(dot3(&nrm, &cross));
    })?;
    let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = *samples.last().unwrap_or(&0.0);
    let endpoint_conjugate = last.abs() <= 1e-6 * scale;
    let usable = if endpoint_conjugate {
        // drop the tail where the field is within tolerance of zero
        let mut n = samples.len();
        while n > 1 && samples[n - 1].abs() <= 1e-4 * scale {
            n -= 1;
        }
        &samples[..n]
    } else {
        &samples[..]
    };
    let mut count = 0;
    let mut prev = 0.0f64;
    for &v in usable {
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = v;
    }
    Ok(MaslovCount { count, endpoint_conjugate })
}

/// Maslov index of an orbit: 0 on flat models, the conjugate-point count on surfaces.
pub fn maslov_index(model: &StationaryModel, orbit: &PeriodicOrbit) -> Result<u32, GeodesicError> {
    let c = conjugate_points(model, &orbit.strip, orbit.period)?;
    if c.endpoint_conjugate && orbit.nondegenerate {
        return Err(GeodesicError::MaslovAmbiguous { count: c.count });
    }
    Ok(c.count)
}
