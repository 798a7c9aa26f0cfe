//! Parallel transport of bundle endomorphisms around closed strips.
//!
//! Flat models carry a flat U(1) twist: going once around cycle `j` in the
//! direction of increasing `x_j` multiplies by `exp(2πiθ_j)`. On embedded
//! surfaces the spin connection rotates by the curvature enclosed by the
//! orbit, obtained from Gauss–Bonnet as `2π − ∮κ_g`.

use num_complex::Complex64;

use super::flow;
use super::{GeodesicError, GeodesicStrip, PeriodicOrbit};
use crate::models::{dot3, Chart, Endo, StationaryModel};

fn scalar(z: Complex64) -> Endo {
    Endo::identity() * z
}

/// `exp(2πi Σ θ_j w_j) · Id` for integer windings `w_j`.
pub(crate) fn flat_holonomy(model: &StationaryModel, winding: &[i64]) -> Endo {
    let theta = model.effective_twist();
    let phase: f64 = theta.iter().zip(winding).map(|(t, &w)| t * w as f64).sum();
    scalar(Complex64::from_polar(1.0, std::f64::consts::TAU * phase))
}

/// `exp(−½Θ γ₁γ₂)`.
pub(crate) fn spin_rotation(model: &StationaryModel, theta: f64) -> Endo {
    let g = &model.bundle.gamma.gamma;
    let g12 = g[1] * g[2];
    scalar(Complex64::new((0.5 * theta).cos(), 0.0)) - g12 * Complex64::new((0.5 * theta).sin(), 0.0)
}

/// Total geodesic curvature `∮κ_g ds` of a closed strip's spatial path.
pub(crate) fn total_geodesic_curvature(model: &StationaryModel, strip: &GeodesicStrip, period: f64) -> Result<f64, GeodesicError> {
    let ell = model
        .cauchy
        .ellipsoid()
        .ok_or_else(|| GeodesicError::Invalid("geodesic curvature needs an embedded surface".into()))?;
    let steps = ((period * 1200.0).ceil() as usize).max(512);
    let dt = period / steps as f64;
    let frame = |s: &flow::State| {
        let Chart::Polar(axis) = s.chart else { unreachable!() };
        let q = [s.z[0], s.z[1]];
        let [t0, t1] = ell.tangents(axis, q);
        let qd = flow::rhs(model, s.chart, &s.z);
        let v = [0, 1, 2].map(|i| t0[i] * qd[0] + t1[i] * qd[1]);
        let n = dot3(&v, &v).sqrt();
        (v.map(|c| c / n), ell.normal(ell.embed(axis, q)))
    };
    let mut cur = flow::best_chart(model, &strip.state());
    let (mut tan, mut nrm) = frame(&cur);
    let start = tan;
    let mut total = 0.0;
    for _ in 0..steps {
        cur = flow::rk4(model, &cur, dt);
        if let Some((next, _)) = flow::maybe_switch(model, &cur, false) {
            cur = next;
        }
        let (t2, n2) = frame(&cur);
        total += turning(&tan, &t2, &nrm);
        tan = t2;
        nrm = n2;
    }
    // close the loop exactly on the starting tangent
    total += turning(&tan, &start, &nrm);
    Ok(total)
}

/// Signed angle from `a` to the tangential part of `b`, measured about `n`.
fn turning(a: &[f64; 3], b: &[f64; 3], n: &[f64; 3]) -> f64 {
    let bn = dot3(b, n);
    let bp = [b[0] - bn * n[0], b[1] - bn * n[1], b[2] - bn * n[2]];
    let cross = [
        a[1] * bp[2] - a[2] * bp[1],
        a[2] * bp[0] - a[0] * bp[2],
        a[0] * bp[1] - a[1] * bp[0],
    ];
    dot3(n, &cross).atan2(dot3(a, &bp))
}

/// Holonomy of the primitive loop of a strip on a surface.
pub(crate) fn surface_holonomy(model: &StationaryModel, strip: &GeodesicStrip, period: f64) -> Result<Endo, GeodesicError> {
    let kappa = total_geodesic_curvature(model, strip, period)?;
    Ok(spin_rotation(model, std::f64::consts::TAU - kappa))
}

/// Holonomy `𝒯_γ` of an orbit (including repetitions).
pub fn holonomy(model: &StationaryModel, orbit: &PeriodicOrbit) -> Result<Endo, GeodesicError> {
    if model.cauchy.is_flat() {
        return Ok(flat_holonomy(model, &orbit.winding));
    }
    let prim = surface_holonomy(model, &orbit.strip, orbit.primitive_period)?;
    Ok(prim.pow(orbit.repetition))
}

/// Phase of `tr 𝒯 / rank`.
pub fn holonomy_phase(t: &Endo) -> f64 {
    t.trace().arg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;
    use crate::ModelConfig;
    use std::f64::consts::TAU;

    #[test]
    fn twisted_circle_phases() {
        let m = build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.25)).unwrap();
        let one = flat_holonomy(&m, &[1]);
        assert!((one - scalar(Complex64::new(0.0, 1.0))).norm() < 1e-15);
        let two = flat_holonomy(&m, &[2]);
        assert!((two + Endo::identity()).norm() < 1e-15);
        let m0 = build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(flat_holonomy(&m0, &[3]), Endo::identity());
    }

    #[test]
    fn full_turn_is_minus_identity() {
        let m = build_model(&ModelConfig::sphere(1.0, 1.0, 0.0)).unwrap();
        let r = spin_rotation(&m, TAU);
        assert!((r + Endo::identity()).norm() < 1e-14);
        let r2 = spin_rotation(&m, 2.0 * TAU);
        assert!((r2 - Endo::identity()).norm() < 1e-14);
    }
}
