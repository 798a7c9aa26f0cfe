//! Lightlike geodesics, their reduction to strips on `Ṫ*Σ`, periodic orbits
//! and the classical data entering the trace formula.

mod flow;
mod holonomy;
mod monodromy;
mod orbits;
mod volume;

use nalgebra::SVector;
use num_dual::gradient;
use thiserror::Error;

use crate::models::{CauchyModel, Chart, ModelError, PhasePoint, SigmaPoint, StationaryModel, NULL_TOL};
use crate::Scalar;

pub use holonomy::{holonomy, holonomy_phase};
pub use monodromy::{det_i_minus_p, maslov_index, monodromy, symplectic_defect, MaslovCount};
pub use orbits::{find_periodic_orbits, orbit_table, Family, OrbitSearch, PeriodicOrbit, SeedFailure};
pub use volume::{residue_fiber_quadrature, symplectic_residue, volume_sublevel, QuadOptions};

pub(crate) use flow::State;

/// Tolerance on the reduced-phase-space distance for closed orbits.
pub const PERIOD_TOL: f64 = 1e-8;
/// Relative tolerance for merging equal periods.
pub const PERIOD_DEDUP: f64 = 1e-9;
/// Threshold on `|det(I − P)|` below which an orbit is degenerate.
pub const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("spatial covector must be nonzero")]
    ZeroCovector,
    #[error("phase point is not null: g^-1(xi, xi) = {residual:e}")]
    NotNull { residual: f64 },
    #[error("step size underflow at s = {s}")]
    StepUnderflow { s: f64 },
    #[error("trajectory left the chart atlas at {q:?}")]
    ChartExit { q: [f64; 2] },
    #[error("geodesic does not reach the t = 0 slice within the step budget")]
    NeverCrossesSlice,
    #[error("variational system could not be propagated: {0}")]
    Propagation(String),
    #[error("conjugate point at the endpoint of the orbit ({count} interior crossings); Maslov index ambiguous")]
    MaslovAmbiguous { count: u32 },
    #[error("orbit is degenerate: |det(I - P)| = {det:e}")]
    Degenerate { det: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// A lightlike geodesic strip represented on `Ṫ*Σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicStrip {
    pub x: SigmaPoint,
    pub k: [f64; 2],
    pub energy: f64,
}

impl GeodesicStrip {
    pub fn new(model: &StationaryModel, x: SigmaPoint, k: [f64; 2]) -> Result<GeodesicStrip, GeodesicError> {
        model.check_chart(&x)?;
        let n = model.spatial_dim();
        if k[..n].iter().all(|&v| v == 0.0) {
            return Err(GeodesicError::ZeroCovector);
        }
        let mut k = k;
        if n == 1 {
            k[1] = 0.0;
        }
        Ok(GeodesicStrip {
            x,
            k,
            energy: strip_energy(model, &x, k),
        })
    }

    /// Rescales the covector to unit energy.
    pub fn normalized(&self) -> GeodesicStrip {
        self.scaled(1.0 / self.energy)
    }

    pub fn scaled(&self, s: f64) -> GeodesicStrip {
        GeodesicStrip {
            x: self.x,
            k: [self.k[0] * s, self.k[1] * s],
            energy: self.energy * s,
        }
    }

    pub(crate) fn state(&self) -> State {
        State::new(&self.x, self.k)
    }
}

/// Killing energy `H(x, k) = α·k + β|k|` of a strip.
pub fn strip_energy(model: &StationaryModel, x: &SigmaPoint, k: [f64; 2]) -> f64 {
    let z = [x.q[0], x.q[1], k[0], k[1]];
    flow::hamiltonian(model, x.chart, &z)
}

/// Roots `τ = α·k ± β|k|` of `g⁻¹((τ,k),(τ,k)) = 0`.
pub fn null_dispersion(model: &StationaryModel, x: &SigmaPoint, k: [f64; 2]) -> Result<(f64, f64), GeodesicError> {
    model.check_chart(x)?;
    let n = model.spatial_dim();
    if k[..n].iter().all(|&v| v == 0.0) {
        return Err(GeodesicError::ZeroCovector);
    }
    let g = model.local_at(x);
    let a = g.shift_dot(&k, n);
    let b = g.lapse * g.co_norm_sq(&k, n).sqrt();
    Ok((a + b, a - b))
}

/// Options for [`integrate_null_geodesic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullOptions {
    /// Affine step; `None` chooses one giving `steps_per_circuit` steps per circuit.
    pub ds: Option<f64>,
    pub steps_per_circuit: usize,
    /// Keep every n-th point of the trajectory.
    pub record_every: usize,
}

impl Default for NullOptions {
    fn default() -> Self {
        NullOptions {
            ds: None,
            steps_per_circuit: 1024,
            record_every: 1,
        }
    }
}

fn circuit_length(c: &CauchyModel) -> f64 {
    match *c {
        CauchyModel::Circle { length } => length,
        CauchyModel::FlatTorus { lengths } => lengths[0].max(lengths[1]),
        CauchyModel::RoundSphere { radius } => std::f64::consts::TAU * radius,
        CauchyModel::Ellipsoid { semi_axes } => {
            std::f64::consts::TAU * semi_axes.iter().cloned().fold(0.0, f64::max)
        }
    }
}

type Vec6 = SVector<f64, 6>;

/// `½ g⁻¹(ξ, ξ)` on `(t, q₀, q₁, τ, k₀, k₁)`.
fn spacetime_hamiltonian<T: Scalar>(model: &StationaryModel, chart: Chart, z: &[T; 6]) -> T {
    let g = model.local(chart, [z[1], z[2]]);
    let n = model.spatial_dim();
    let k = [z[4], z[5]];
    let e = z[3] - g.shift_dot(&k, n);
    (e * e / (g.lapse * g.lapse) - g.co_norm_sq(&k, n)) * 0.5
}

fn spacetime_rhs(model: &StationaryModel, chart: Chart, z: &Vec6) -> Vec6 {
    let (_, g) = gradient(
        |v: SVector<_, 6>| spacetime_hamiltonian(model, chart, &[v[0], v[1], v[2], v[3], v[4], v[5]]),
        z,
    );
    Vec6::new(g[3], g[4], g[5], -g[0], -g[1], -g[2])
}

fn project_null(model: &StationaryModel, chart: Chart, z: &mut Vec6, future: bool) {
    let x = SigmaPoint { chart, q: [z[1], z[2]] };
    if let Ok((plus, minus)) = null_dispersion(model, &x, [z[4], z[5]]) {
        z[3] = if future { plus } else { minus };
    }
}

/// Integrates the Hamiltonian flow of `½g⁻¹` from a null phase point over
/// affine parameter `[0, s_max]`, re-solving `τ` from `k` after every step.
pub fn integrate_null_geodesic(
    model: &StationaryModel,
    p0: &PhasePoint,
    s_max: f64,
    opts: &NullOptions,
) -> Result<Vec<PhasePoint>, GeodesicError> {
    model.check_chart(&p0.x)?;
    let n = model.spatial_dim();
    if p0.k[..n].iter().all(|&v| v == 0.0) {
        return Err(GeodesicError::ZeroCovector);
    }
    if !p0.is_null(model, NULL_TOL) {
        return Err(GeodesicError::NotNull {
            residual: p0.co_norm(model),
        });
    }
    let g0 = model.local_at(&p0.x);
    let future = p0.tau - g0.shift_dot(&p0.k, n) > 0.0;
    let ds = match opts.ds {
        Some(ds) => ds,
        None => {
            let speed = g0.co_norm_sq(&p0.k, n).sqrt() * (g0.lapse + g0.shift_norm_sq(n).sqrt()) / g0.lapse;
            circuit_length(&model.cauchy) / (opts.steps_per_circuit.max(1) as f64 * speed.max(1e-300))
        }
    };
    if !(ds.is_finite() && ds > 0.0) || ds < 1e-14 * s_max.abs() {
        return Err(GeodesicError::StepUnderflow { s: 0.0 });
    }
    let steps = (s_max / ds).ceil().max(1.0) as usize;
    let h = s_max / steps as f64;
    let record = opts.record_every.max(1);

    let mut chart = p0.x.chart;
    let mut z = Vec6::new(p0.t, p0.x.q[0], p0.x.q[1], p0.tau, p0.k[0], p0.k[1]);
    let mut out = vec![*p0];
    for step in 1..=steps {
        let f = |v: &Vec6| spacetime_rhs(model, chart, v);
        let k1 = f(&z);
        let k2 = f(&(z + k1 * (0.5 * h)));
        let k3 = f(&(z + k2 * (0.5 * h)));
        let k4 = f(&(z + k3 * h));
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !z.iter().all(|v| v.is_finite()) {
            return Err(GeodesicError::StepUnderflow { s: h * step as f64 });
        }
        let reduced = State {
            chart,
            z: flow::Vec4::new(z[1], z[2], z[4], z[5]),
        };
        if let Some((next, _)) = flow::maybe_switch(model, &reduced, false) {
            chart = next.chart;
            z[1] = next.z[0];
            z[2] = next.z[1];
            z[4] = next.z[2];
            z[5] = next.z[3];
        }
        if let Chart::Polar(_) = chart {
            if z[1].sin().abs() < crate::models::CHART_OVERLAP_TOL {
                return Err(GeodesicError::ChartExit { q: [z[1], z[2]] });
            }
        }
        project_null(model, chart, &mut z, future);
        if step % record == 0 || step == steps {
            out.push(PhasePoint {
                t: z[0],
                x: SigmaPoint { chart, q: [z[1], z[2]] },
                tau: z[3],
                k: [z[4], z[5]],
            });
        }
    }
    Ok(out)
}

/// Transports a null phase point along its geodesic to the `t = 0` slice and
/// forgets `(t, τ)`. Past-directed covectors are identified with their negatives.
pub fn reduce_to_strip(model: &StationaryModel, p: &PhasePoint) -> Result<GeodesicStrip, GeodesicError> {
    model.check_chart(&p.x)?;
    let n = model.spatial_dim();
    if p.k[..n].iter().all(|&v| v == 0.0) {
        return Err(GeodesicError::ZeroCovector);
    }
    if !p.is_null(model, NULL_TOL) {
        return Err(GeodesicError::NotNull {
            residual: p.co_norm(model),
        });
    }
    let g = model.local_at(&p.x);
    let sign = if p.tau - g.shift_dot(&p.k, n) > 0.0 { 1.0 } else { -1.0 };
    let k = [sign * p.k[0], sign * p.k[1]];
    if p.t == 0.0 {
        return GeodesicStrip::new(model, p.x, k);
    }
    if !p.t.is_finite() {
        return Err(GeodesicError::NeverCrossesSlice);
    }
    let s = State::new(&p.x, k);
    let end = flow::flow(model, &s, -p.t, flow::default_steps(model, p.t));
    if !end.z.iter().all(|v| v.is_finite()) {
        return Err(GeodesicError::NeverCrossesSlice);
    }
    GeodesicStrip::new(model, end.point(), end.k())
}

/// Flows a strip for Killing time `t`.
pub fn flow_strip(model: &StationaryModel, strip: &GeodesicStrip, t: f64) -> GeodesicStrip {
    let end = flow::flow(model, &strip.state(), t, flow::default_steps(model, t));
    GeodesicStrip {
        x: end.point(),
        k: end.k(),
        energy: strip_energy(model, &end.point(), end.k()),
    }
}

/// Distance between two strips in the reduced phase space: positions are
/// compared modulo the period lattice (flat) or in the embedding (surfaces).
pub fn strip_distance(model: &StationaryModel, a: &GeodesicStrip, b: &GeodesicStrip) -> f64 {
    match model.cauchy {
        CauchyModel::Circle { .. } | CauchyModel::FlatTorus { .. } => {
            let lengths = model.cauchy.cycle_lengths();
            let mut d = 0.0f64;
            for (j, l) in lengths.iter().enumerate() {
                let diff = (a.x.q[j] - b.x.q[j]).rem_euclid(*l);
                d += diff.min(l - diff).powi(2);
                d += (a.k[j] - b.k[j]).powi(2);
            }
            d.sqrt()
        }
        _ => {
            let ell = model.cauchy.ellipsoid().unwrap();
            let sa = a.state();
            let sb = flow::to_chart(model, &b.state(), sa.chart);
            let ea = match a.x.chart {
                Chart::Polar(axis) => ell.embed(axis, a.x.q),
                Chart::Periodic => unreachable!(),
            };
            let eb = match sb.chart {
                Chart::Polar(axis) => ell.embed(axis, [sb.z[0], sb.z[1]]),
                Chart::Periodic => unreachable!(),
            };
            let dx: f64 = (0..3).map(|i| (ea[i] - eb[i]).powi(2)).sum();
            let dk = (sa.z[2] - sb.z[2]).powi(2) + (sa.z[3] - sb.z[3]).powi(2);
            (dx + dk).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, Axis};
    use crate::ModelConfig;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn circle(beta: f64, alpha: f64) -> StationaryModel {
        build_model(&ModelConfig::circle(TAU, beta, alpha, 0.0)).unwrap()
    }

    #[test]
    fn dispersion_examples() {
        let x = SigmaPoint::circle(0.0);
        assert_eq!(null_dispersion(&circle(1.0, 0.0), &x, [1.0, 0.0]).unwrap(), (1.0, -1.0));
        assert_eq!(null_dispersion(&circle(1.0, 0.5), &x, [1.0, 0.0]).unwrap(), (1.5, -0.5));
        assert_eq!(null_dispersion(&circle(2.0, 0.0), &x, [3.0, 0.0]).unwrap(), (6.0, -6.0));
        assert!(matches!(
            null_dispersion(&circle(1.0, 0.0), &x, [0.0, 0.0]),
            Err(GeodesicError::ZeroCovector)
        ));
    }

    #[test]
    fn dispersion_roots_are_null() {
        let m = build_model(&ModelConfig::ellipsoid([1.0, 1.2, 1.5], 1.1, 0.3)).unwrap();
        let x = SigmaPoint::polar(Axis::Z, 1.0, 0.5);
        let k = [0.4, -1.3];
        let (p, q) = null_dispersion(&m, &x, k).unwrap();
        assert!(p > q);
        for tau in [p, q] {
            let r = m.co_metric(&x, &[tau, k[0], k[1]], &[tau, k[0], k[1]]);
            assert!(r.abs() < 1e-12 * (tau * tau + 1.0));
        }
    }

    #[test]
    fn energy_examples() {
        let x = SigmaPoint::circle(1.0);
        assert_eq!(strip_energy(&circle(1.0, 0.0), &x, [1.0, 0.0]), 1.0);
        assert_eq!(strip_energy(&circle(1.0, 0.5), &x, [1.0, 0.0]), 1.5);
        assert_eq!(strip_energy(&circle(1.0, 0.5), &x, [-1.0, 0.0]), 0.5);
    }

    #[test]
    fn ultrastatic_null_line_returns_after_two_pi() {
        let m = circle(1.0, 0.0);
        let p0 = PhasePoint { t: 0.0, x: SigmaPoint::circle(0.0), tau: 1.0, k: [1.0, 0.0] };
        let traj = integrate_null_geodesic(&m, &p0, TAU, &NullOptions::default()).unwrap();
        assert!(traj.len() > 1024);
        let end = traj.last().unwrap();
        assert!((end.t - TAU).abs() < 1e-12);
        assert!((end.x.q[0] + TAU).abs() < 1e-12);
        for p in &traj {
            assert!(p.co_norm(&m).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_right_mover_speed() {
        let m = circle(1.0, 0.5);
        let p0 = PhasePoint { t: 0.0, x: SigmaPoint::circle(0.0), tau: 0.5, k: [-1.0, 0.0] };
        let traj = integrate_null_geodesic(&m, &p0, 4.0 * PI, &NullOptions::default()).unwrap();
        let end = traj.last().unwrap();
        assert!((end.x.q[0] / end.t - 0.5).abs() < 1e-12);
        // one full circuit after Killing time L / (1 - α)
        let pos_at = |t: f64| 0.5 * t;
        assert!((pos_at(4.0 * PI) - TAU).abs() < 1e-12);
    }

    #[test]
    fn sphere_null_geodesic_is_great_circle() {
        let m = build_model(&ModelConfig::sphere(1.0, 1.0, 0.0)).unwrap();
        let x = SigmaPoint::polar(Axis::Z, 1.2, 0.4);
        let k = [0.6, -0.5];
        let (tau, _) = null_dispersion(&m, &x, k).unwrap();
        let p0 = PhasePoint { t: 0.0, x, tau, k };
        let ell = m.cauchy.ellipsoid().unwrap();
        let start = ell.embed(Axis::Z, x.q);
        // dt/ds = |k|/β = τ, so Killing time 2π needs s = 2π/τ
        let traj = integrate_null_geodesic(&m, &p0, TAU / tau, &NullOptions { steps_per_circuit: 4096, ..Default::default() }).unwrap();
        let end = traj.last().unwrap();
        assert!((end.t - TAU).abs() < 1e-9);
        let e = match end.x.chart {
            Chart::Polar(a) => ell.embed(a, end.x.q),
            _ => unreachable!(),
        };
        let d: f64 = (0..3).map(|i| (e[i] - start[i]).powi(2)).sum::<f64>().sqrt();
        assert!(d < 1e-8, "{d}");
        // planar: all points orthogonal to the initial angular momentum
        let v = {
            let g = m.local_at(&x);
            let [t0, t1] = ell.tangents(Axis::Z, x.q);
            let u0 = g.h_inv[0][0] * k[0] + g.h_inv[0][1] * k[1];
            let u1 = g.h_inv[1][0] * k[0] + g.h_inv[1][1] * k[1];
            [t0[0] * u0 + t1[0] * u1, t0[1] * u0 + t1[1] * u1, t0[2] * u0 + t1[2] * u1]
        };
        let nrm = [
            start[1] * v[2] - start[2] * v[1],
            start[2] * v[0] - start[0] * v[2],
            start[0] * v[1] - start[1] * v[0],
        ];
        for p in &traj {
            let e = match p.x.chart {
                Chart::Polar(a) => ell.embed(a, p.x.q),
                _ => unreachable!(),
            };
            let dot: f64 = (0..3).map(|i| e[i] * nrm[i]).sum();
            assert!(dot.abs() < 1e-8);
        }
    }

    #[test]
    fn reduce_examples() {
        let m = circle(1.0, 0.5);
        let p = PhasePoint { t: 0.0, x: SigmaPoint::circle(0.7), tau: 1.5, k: [1.0, 0.0] };
        let s = reduce_to_strip(&m, &p).unwrap();
        assert_eq!(s.x.q[0], 0.7);
        assert_eq!(s.k[0], 1.0);
        let p = PhasePoint { t: 1.0, x: SigmaPoint::circle(0.7), tau: 0.5, k: [-1.0, 0.0] };
        let s = reduce_to_strip(&m, &p).unwrap();
        assert!((s.x.q[0] - (0.7 - 0.5)).abs() < 1e-12);
        let p2 = PhasePoint { tau: 1.0, k: [-2.0, 0.0], ..p };
        let s2 = reduce_to_strip(&m, &p2).unwrap();
        assert!((s2.k[0] - 2.0 * s.k[0]).abs() < 1e-15);
        assert!((s2.energy - 2.0 * s.energy).abs() < 1e-15);
        let bad = PhasePoint { tau: 2.0, ..p };
        assert!(matches!(reduce_to_strip(&m, &bad), Err(GeodesicError::NotNull { .. })));
    }

    proptest! {
        #[test]
        fn energy_is_homogeneous(q0 in 0.1f64..3.0, q1 in 0.0f64..6.2, k0 in -3.0f64..3.0, k1 in -3.0f64..3.0) {
            prop_assume!(k0.abs() + k1.abs() > 1e-3);
            let m = build_model(&ModelConfig::ellipsoid([1.0, 1.2, 1.5], 1.0, 0.3)).unwrap();
            let x = SigmaPoint::polar(Axis::Z, q0, q1);
            let h = strip_energy(&m, &x, [k0, k1]);
            prop_assert!(h > 0.0);
            for lam in [0.5, 2.0, 10.0] {
                let hl = strip_energy(&m, &x, [lam * k0, lam * k1]);
                prop_assert!((hl - lam * h).abs() <= 1e-12 * lam * h);
            }
        }

        #[test]
        fn energy_is_conserved_along_null_flow(k0 in -2.0f64..2.0, x0 in 0.0f64..6.0) {
            prop_assume!(k0.abs() > 0.1);
            let m = build_model(&ModelConfig::circle_expr(TAU, "1 + 0.3*cos(x)", "0.2*sin(x)", 0.0)).unwrap();
            let x = SigmaPoint::circle(x0);
            let (tau, _) = null_dispersion(&m, &x, [k0, 0.0]).unwrap();
            let p0 = PhasePoint { t: 0.0, x, tau, k: [k0, 0.0] };
            let traj = integrate_null_geodesic(&m, &p0, 10.0, &NullOptions::default()).unwrap();
            for p in traj {
                prop_assert!(p.co_norm(&m).abs() <= 1e-10 * k0 * k0);
            }
        }
    }
}
