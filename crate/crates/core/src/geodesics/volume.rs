//! Phase-space volume of `{H ≤ 1}` and the symplectic residue of `H^{1−d}`.

use std::f64::consts::{PI, TAU};

use super::flow;
use super::GeodesicError;
use crate::models::{cholesky2, Axis, CauchyModel, Chart, StationaryModel};
use crate::quadrature::{self, Quadrature};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Relative agreement required between two panel refinements.
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Trapezoid nodes on each cotangent fiber circle (surfaces).
    pub fiber_nodes: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-10,
            max_panels: 1 << 12,
            fiber_nodes: 96,
        }
    }
}

/// Integrates `f(chart point) · sqrt(det h)` over Σ.
fn integrate_sigma<F: Fn(Chart, [f64; 2]) -> f64>(
    model: &StationaryModel,
    opts: &QuadOptions,
    f: F,
) -> Result<Quadrature, GeodesicError> {
    let failed = || GeodesicError::Propagation("quadrature did not reach the requested tolerance".into());
    let q = match model.cauchy {
        CauchyModel::Circle { length } => {
            quadrature::integrate(|x| f(Chart::Periodic, [x, 0.0]), 0.0, length, opts.rel_tol, opts.max_panels)
        }
        CauchyModel::FlatTorus { lengths } => quadrature::integrate_2d(
            |a, b| f(Chart::Periodic, [a, b]),
            [0.0, lengths[0]],
            [0.0, lengths[1]],
            opts.rel_tol,
            opts.max_panels.min(256),
        ),
        _ => {
            let chart = Chart::Polar(Axis::Z);
            quadrature::integrate_2d(
                |a, b| {
                    let g = model.local(chart, [a, b]);
                    f(chart, [a, b]) * g.sqrt_det
                },
                [0.0, PI],
                [0.0, TAU],
                opts.rel_tol,
                opts.max_panels.min(256),
            )
        }
    };
    let q = q.ok_or_else(failed)?;
    if !q.value.is_finite() {
        return Err(GeodesicError::Propagation("integrand singular".into()));
    }
    Ok(q)
}

/// `vol(𝒩_{H≤1}) = vol(𝔹^{d−1}) ∫_Σ β (β² − |α|²)^{−d/2} dvol_h`.
pub fn volume_sublevel(model: &StationaryModel, opts: &QuadOptions) -> Result<Quadrature, GeodesicError> {
    let n = model.spatial_dim();
    let d = (n + 1) as i32;
    let ball = if n == 1 { 2.0 } else { PI };
    let q = integrate_sigma(model, opts, |chart, q| {
        let g = model.local(chart, q);
        let m = g.lapse * g.lapse - g.shift_norm_sq(n);
        g.lapse * m.powf(-0.5 * d as f64)
    })?;
    Ok(Quadrature {
        value: ball * q.value,
        error_estimate: ball * q.error_estimate,
        panels: q.panels,
    })
}

/// `res H^{1−d} = (d − 1) vol(𝒩_{H≤1})`.
pub fn symplectic_residue(model: &StationaryModel, opts: &QuadOptions) -> Result<f64, GeodesicError> {
    Ok(model.spatial_dim() as f64 * volume_sublevel(model, opts)?.value)
}

/// Independent evaluation of the residue as `∫_Σ ∫_{|k|=1} H^{1−d}` over the
/// unit cosphere bundle, without the closed-form fiber integral.
pub fn residue_fiber_quadrature(model: &StationaryModel, opts: &QuadOptions) -> Result<f64, GeodesicError> {
    let n = model.spatial_dim();
    let nodes = opts.fiber_nodes.max(8);
    let q = integrate_sigma(model, opts, |chart, q| {
        if n == 1 {
            return [1.0, -1.0]
                .iter()
                .map(|&k| 1.0 / flow::hamiltonian(model, chart, &[q[0], 0.0, k, 0.0]))
                .sum();
        }
        let g = model.local(chart, q);
        let l = match chart {
            Chart::Periodic => [[1.0, 0.0], [0.0, 1.0]],
            Chart::Polar(_) => cholesky2(&g.h),
        };
        let mut s = 0.0;
        for j in 0..nodes {
            let phi = TAU * j as f64 / nodes as f64;
            let u = [phi.cos(), phi.sin()];
            let k = [l[0][0] * u[0], l[1][0] * u[0] + l[1][1] * u[1]];
            let h = flow::hamiltonian(model, chart, &[q[0], q[1], k[0], k[1]]);
            s += h.powi(-(n as i32));
        }
        s * TAU / nodes as f64
    })?;
    Ok(q.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;
    use crate::ModelConfig;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn closed_form_volumes() {
        let o = QuadOptions::default();
        let v = volume_sublevel(&build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.0)).unwrap(), &o).unwrap();
        assert!(rel(v.value, 4.0 * PI) < 1e-12);
        let v = volume_sublevel(&build_model(&ModelConfig::circle(TAU, 1.0, 0.5, 0.0)).unwrap(), &o).unwrap();
        assert!(rel(v.value, 16.0 * PI / 3.0) < 1e-12);
        let v = volume_sublevel(&build_model(&ModelConfig::sphere(1.0, 1.0, 0.0)).unwrap(), &o).unwrap();
        assert!(rel(v.value, 4.0 * PI * PI) < 1e-10);
        let v = volume_sublevel(&build_model(&ModelConfig::sphere(1.5, 1.2, 0.4)).unwrap(), &o).unwrap();
        let expect = PI * 4.0 * PI * 1.5 * 1.5 / (1.2 * 1.2 - 0.36);
        assert!(rel(v.value, expect) < 1e-10);
    }

    #[test]
    fn residue_routes_agree() {
        let o = QuadOptions::default();
        for cfg in [
            ModelConfig::circle(TAU, 1.0, 0.5, 0.0),
            ModelConfig::circle_expr(TAU, "1 + 0.3*cos(x)", "0.2*sin(x)", 0.0),
            ModelConfig::torus([TAU, 4.0], 1.0, [0.3, 0.2], [0.0, 0.0]),
            ModelConfig::sphere(1.0, 1.0, 0.3),
            ModelConfig::ellipsoid([1.0, 1.2, 1.5], 1.0, 0.2),
        ] {
            let m = build_model(&cfg).unwrap();
            let a = symplectic_residue(&m, &o).unwrap();
            let b = residue_fiber_quadrature(&m, &o).unwrap();
            assert!(rel(a, b) < 1e-8, "{a} {b}");
        }
    }
}
