//! Catalogue of stationary model spacetimes
//! `g = β² dt² − h_ij (dx^i + α^i dt)(dx^j + α^j dt)` over a compact Cauchy
//! surface, together with their Clifford-module bundle data.

mod clifford;
mod geometry;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{CauchyKind, ConfigError, ModelConfig, Quantity};
use crate::expr::{Expr, Var};
use crate::Scalar;

pub use clifford::{
    clifford_symbol, symbol_trace_pairing, verify_clifford, verify_clifford_with, CliffordData,
    CliffordReport, Endo, GammaSet,
};
pub use geometry::{Axis, Chart, SigmaPoint};
pub(crate) use geometry::{cholesky2, det2, dot3, inv2, Ellipsoid, Mat2};

/// Default relative tolerance for the null condition.
pub const NULL_TOL: f64 = 1e-10;

/// Minimal sine of the colatitude accepted inside a polar chart.
pub const CHART_OVERLAP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unsupported spacetime dimension {dimension} for a {cauchy} Cauchy surface")]
    UnsupportedDimension { dimension: u32, cauchy: String },
    #[error("unsupported bundle rank {0} (only rank 2 is modeled)")]
    UnsupportedRank(u32),
    #[error("size parameter `{field}` must be positive, got {value}")]
    NonPositiveSize { field: String, value: f64 },
    #[error("lapse is not positive at {at:?}: {value}")]
    LapseNotPositive { at: [f64; 2], value: f64 },
    #[error("Killing field not timelike at {at:?}: beta^2 - |alpha|^2 = {margin}")]
    KillingNotTimelike { at: [f64; 2], margin: f64 },
    #[error("field `{field}` is not periodic over the cycle of length {length}")]
    NotPeriodic { field: String, length: f64 },
    #[error("bundle field `{field}`: {reason}")]
    Bundle { field: String, reason: String },
    #[error("point {q:?} is outside the domain of chart {chart:?}")]
    ChartDomain { chart: Chart, q: [f64; 2] },
    #[error("{0}")]
    Unsupported(String),
}

/// Compact Cauchy surface of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CauchyModel {
    Circle { length: f64 },
    FlatTorus { lengths: [f64; 2] },
    RoundSphere { radius: f64 },
    Ellipsoid { semi_axes: [f64; 3] },
}

impl CauchyModel {
    pub fn spatial_dim(&self) -> usize {
        match self {
            CauchyModel::Circle { .. } => 1,
            _ => 2,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, CauchyModel::Circle { .. } | CauchyModel::FlatTorus { .. })
    }

    /// Lengths of the fundamental cycles carrying twist data.
    pub fn cycle_lengths(&self) -> Vec<f64> {
        match self {
            CauchyModel::Circle { length } => vec![*length],
            CauchyModel::FlatTorus { lengths } => lengths.to_vec(),
            _ => Vec::new(),
        }
    }

    pub(crate) fn ellipsoid(&self) -> Option<Ellipsoid> {
        match self {
            CauchyModel::RoundSphere { radius } => Some(Ellipsoid { s: [*radius; 3] }),
            CauchyModel::Ellipsoid { semi_axes } => Some(Ellipsoid { s: *semi_axes }),
            _ => None,
        }
    }

    pub(crate) fn kind_name(&self) -> &'static str {
        match self {
            CauchyModel::Circle { .. } => "circle",
            CauchyModel::FlatTorus { .. } => "torus",
            CauchyModel::RoundSphere { .. } => "sphere",
            CauchyModel::Ellipsoid { .. } => "ellipsoid",
        }
    }
}

/// Shift vector field.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftField {
    /// Chart components on flat models.
    Components(Vec<Expr>),
    /// Rigid rotation at the given rate about the z axis (embedded surfaces).
    Rotation(f64),
}

/// Lapse, shift, metric and inverse metric data at one point of Σ.
#[derive(Debug, Clone, Copy)]
pub struct LocalGeometry<T> {
    pub h: Mat2<T>,
    pub h_inv: Mat2<T>,
    pub sqrt_det: T,
    pub lapse: T,
    /// Contravariant shift components α^i.
    pub shift: [T; 2],
}

impl<T: Scalar> LocalGeometry<T> {
    /// `h^{-1}(k, k)` restricted to the first `n` components.
    pub fn co_norm_sq(&self, k: &[T; 2], n: usize) -> T {
        let mut acc = T::from(0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.h_inv[i][j] * k[i] * k[j];
            }
        }
        acc
    }

    /// `h(α, α)`.
    pub fn shift_norm_sq(&self, n: usize) -> T {
        let mut acc = T::from(0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.h[i][j] * self.shift[i] * self.shift[j];
            }
        }
        acc
    }

    pub fn shift_dot(&self, k: &[T; 2], n: usize) -> T {
        let mut acc = T::from(0.0);
        for i in 0..n {
            acc += self.shift[i] * k[i];
        }
        acc
    }
}

/// A validated standard stationary spacetime with its bundle.
#[derive(Debug, Clone)]
pub struct StationaryModel {
    pub dimension: usize,
    pub cauchy: CauchyModel,
    pub lapse: Expr,
    pub shift: ShiftField,
    pub bundle: CliffordData,
    config: ModelConfig,
    fingerprint: String,
}

/// Point of the spacetime cotangent bundle `(t, x; τ, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub x: SigmaPoint,
    pub tau: f64,
    pub k: [f64; 2],
}

fn positive(q: &Quantity, field: &str) -> Result<f64, ModelError> {
    let value = q.constant(field)?;
    if !(value > 0.0) || !value.is_finite() {
        return Err(ModelError::NonPositiveSize {
            field: field.to_string(),
            value,
        });
    }
    Ok(value)
}

fn parse_field(q: &Quantity, field: &str, vars: &[Var]) -> Result<Expr, ModelError> {
    let src = q.source();
    Expr::parse(&src, vars).map_err(|source| {
        ModelError::Config(ConfigError::Expr {
            field: field.to_string(),
            source,
        })
    })
}

fn missing(field: &str) -> ModelError {
    ModelError::Config(ConfigError::Invalid {
        field: field.to_string(),
        reason: "required for this Cauchy surface".to_string(),
    })
}

fn forbidden(field: &str, kind: &str) -> ModelError {
    ModelError::Config(ConfigError::Invalid {
        field: field.to_string(),
        reason: format!("not applicable to a {kind} Cauchy surface"),
    })
}

/// Builds and validates a model from its configuration document.
pub fn build_model(config: &ModelConfig) -> Result<StationaryModel, ModelError> {
    let st = &config.spacetime;
    let cauchy = match st.cauchy {
        CauchyKind::Circle => {
            let length = positive(st.length.as_ref().ok_or_else(|| missing("spacetime.length"))?, "spacetime.length")?;
            CauchyModel::Circle { length }
        }
        CauchyKind::Torus => {
            let ls = st.lengths.as_ref().ok_or_else(|| missing("spacetime.lengths"))?;
            if ls.len() != 2 {
                return Err(ModelError::Config(ConfigError::Invalid {
                    field: "spacetime.lengths".into(),
                    reason: format!("expected 2 entries, got {}", ls.len()),
                }));
            }
            CauchyModel::FlatTorus {
                lengths: [
                    positive(&ls[0], "spacetime.lengths[0]")?,
                    positive(&ls[1], "spacetime.lengths[1]")?,
                ],
            }
        }
        CauchyKind::Sphere => CauchyModel::RoundSphere {
            radius: positive(st.radius.as_ref().ok_or_else(|| missing("spacetime.radius"))?, "spacetime.radius")?,
        },
        CauchyKind::Ellipsoid => {
            let s = st.semi_axes.as_ref().ok_or_else(|| missing("spacetime.semi_axes"))?;
            if s.len() != 3 {
                return Err(ModelError::Config(ConfigError::Invalid {
                    field: "spacetime.semi_axes".into(),
                    reason: format!("expected 3 entries, got {}", s.len()),
                }));
            }
            let mut semi = [0.0; 3];
            for (i, q) in s.iter().enumerate() {
                semi[i] = positive(q, &format!("spacetime.semi_axes[{i}]"))?;
            }
            CauchyModel::Ellipsoid { semi_axes: semi }
        }
    };
    let kind = cauchy.kind_name();
    for (field, present) in [
        ("spacetime.length", st.length.is_some() && st.cauchy != CauchyKind::Circle),
        ("spacetime.lengths", st.lengths.is_some() && st.cauchy != CauchyKind::Torus),
        ("spacetime.radius", st.radius.is_some() && st.cauchy != CauchyKind::Sphere),
        ("spacetime.semi_axes", st.semi_axes.is_some() && st.cauchy != CauchyKind::Ellipsoid),
    ] {
        if present {
            return Err(forbidden(field, kind));
        }
    }

    let expected_dim = 1 + cauchy.spatial_dim() as u32;
    if st.dimension != expected_dim {
        return Err(ModelError::UnsupportedDimension {
            dimension: st.dimension,
            cauchy: kind.to_string(),
        });
    }

    let vars: &[Var] = match cauchy {
        CauchyModel::Circle { .. } => &[Var::X],
        CauchyModel::FlatTorus { .. } => &[Var::X1, Var::X2],
        _ => &[Var::Z],
    };
    let lapse = parse_field(&config.lapse.expr, "lapse.expr", vars)?;

    let sh = &config.shift;
    let shift = match cauchy {
        CauchyModel::Circle { .. } => {
            if sh.components.is_some() {
                return Err(forbidden("shift.components", kind));
            }
            if sh.rotation.is_some() {
                return Err(forbidden("shift.rotation", kind));
            }
            let e = match &sh.expr {
                Some(q) => parse_field(q, "shift.expr", vars)?,
                None => Expr::constant(0.0),
            };
            ShiftField::Components(vec![e])
        }
        CauchyModel::FlatTorus { .. } => {
            if sh.expr.is_some() {
                return Err(forbidden("shift.expr", kind));
            }
            if sh.rotation.is_some() {
                return Err(forbidden("shift.rotation", kind));
            }
            match &sh.components {
                Some(cs) if cs.len() == 2 => ShiftField::Components(vec![
                    parse_field(&cs[0], "shift.components[0]", vars)?,
                    parse_field(&cs[1], "shift.components[1]", vars)?,
                ]),
                Some(cs) => {
                    return Err(ModelError::Config(ConfigError::Invalid {
                        field: "shift.components".into(),
                        reason: format!("expected 2 entries, got {}", cs.len()),
                    }))
                }
                None => ShiftField::Components(vec![Expr::constant(0.0), Expr::constant(0.0)]),
            }
        }
        _ => {
            if sh.expr.is_some() {
                return Err(forbidden("shift.expr", kind));
            }
            if sh.components.is_some() {
                return Err(forbidden("shift.components", kind));
            }
            let omega = match &sh.rotation {
                Some(q) => q.constant("shift.rotation")?,
                None => 0.0,
            };
            ShiftField::Rotation(omega)
        }
    };

    let bundle = CliffordData::from_config(&config.bundle, &cauchy, expected_dim as usize)?;

    let canonical = config.to_toml();
    let digest = Sha256::digest(canonical.as_bytes());
    let fingerprint: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();

    let model = StationaryModel {
        dimension: expected_dim as usize,
        cauchy,
        lapse,
        shift,
        bundle,
        config: config.clone(),
        fingerprint,
    };
    model.check_periodicity()?;
    model.check_sample_grid()?;
    Ok(model)
}

impl StationaryModel {
    pub fn from_config(config: &ModelConfig) -> Result<StationaryModel, ModelError> {
        build_model(config)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Short content hash of the canonical configuration.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn name(&self) -> String {
        self.config
            .name
            .clone()
            .unwrap_or_else(|| self.cauchy.kind_name().to_string())
    }

    /// Dimension of the Cauchy surface.
    pub fn spatial_dim(&self) -> usize {
        self.cauchy.spatial_dim()
    }

    pub fn rank(&self) -> usize {
        self.bundle.rank
    }

    /// Twist angles after absorbing the constant gauge potential.
    pub fn effective_twist(&self) -> Vec<f64> {
        let lengths = self.cauchy.cycle_lengths();
        lengths
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let theta = self.bundle.twist.get(j).copied().unwrap_or(0.0);
                let a = self.bundle.potential.get(j).copied().unwrap_or(0.0);
                theta - a * l / std::f64::consts::TAU
            })
            .collect()
    }

    /// Constant lapse value if the lapse does not depend on position.
    pub fn constant_lapse(&self) -> Option<f64> {
        self.lapse.constant_value()
    }

    /// Constant shift components on flat models.
    pub fn constant_shift(&self) -> Option<Vec<f64>> {
        match &self.shift {
            ShiftField::Components(es) => es.iter().map(|e| e.constant_value()).collect(),
            ShiftField::Rotation(w) if *w == 0.0 => Some(vec![0.0, 0.0]),
            ShiftField::Rotation(_) => None,
        }
    }

    pub fn is_ultrastatic(&self) -> bool {
        self.constant_lapse() == Some(1.0)
            && self
                .constant_shift()
                .is_some_and(|s| s.iter().all(|&a| a == 0.0))
    }

    /// Default chart and a representative point for sampling.
    pub fn default_chart(&self) -> Chart {
        if self.cauchy.is_flat() {
            Chart::Periodic
        } else {
            Chart::Polar(Axis::Z)
        }
    }

    pub fn check_chart(&self, x: &SigmaPoint) -> Result<(), ModelError> {
        let ok = match (x.chart, self.cauchy.is_flat()) {
            (Chart::Periodic, true) => x.q.iter().all(|v| v.is_finite()),
            (Chart::Polar(_), false) => {
                x.q.iter().all(|v| v.is_finite()) && x.q[0].sin() > CHART_OVERLAP_TOL
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::ChartDomain {
                chart: x.chart,
                q: x.q,
            })
        }
    }

    /// Lapse, shift and spatial metric at a chart point.
    pub fn local<T: Scalar>(&self, chart: Chart, q: [T; 2]) -> LocalGeometry<T> {
        let one = T::from(1.0);
        let zero = T::from(0.0);
        match (chart, self.cauchy.ellipsoid()) {
            (Chart::Polar(axis), Some(ell)) => {
                let x = ell.embed(axis, q);
                let [d0, d1] = ell.tangents(axis, q);
                let h = [[dot3(&d0, &d0), dot3(&d0, &d1)], [dot3(&d1, &d0), dot3(&d1, &d1)]];
                let h_inv = inv2(&h);
                let sqrt_det = det2(&h).sqrt();
                let lapse = self.lapse.eval(&|_| x[2]);
                let shift = match &self.shift {
                    ShiftField::Rotation(w) if *w != 0.0 => {
                        let s = ell.s;
                        let field = [x[1] * (-w * s[0] / s[1]), x[0] * (w * s[1] / s[0]), zero];
                        let proj = [dot3(&d0, &field), dot3(&d1, &field)];
                        [
                            h_inv[0][0] * proj[0] + h_inv[0][1] * proj[1],
                            h_inv[1][0] * proj[0] + h_inv[1][1] * proj[1],
                        ]
                    }
                    _ => [zero, zero],
                };
                LocalGeometry {
                    h,
                    h_inv,
                    sqrt_det,
                    lapse,
                    shift,
                }
            }
            _ => {
                let env = |v: Var| match v {
                    Var::X | Var::X1 => q[0],
                    Var::X2 => q[1],
                    Var::Z => zero,
                };
                let lapse = self.lapse.eval(&env);
                let shift = match &self.shift {
                    ShiftField::Components(es) => {
                        let a0 = es[0].eval(&env);
                        let a1 = es.get(1).map(|e| e.eval(&env)).unwrap_or(zero);
                        [a0, a1]
                    }
                    ShiftField::Rotation(_) => [zero, zero],
                };
                LocalGeometry {
                    h: [[one, zero], [zero, one]],
                    h_inv: [[one, zero], [zero, one]],
                    sqrt_det: one,
                    lapse,
                    shift,
                }
            }
        }
    }

    pub fn local_at(&self, x: &SigmaPoint) -> LocalGeometry<f64> {
        self.local(x.chart, x.q)
    }

    /// Inverse spacetime metric in `(t, x^i)` coordinates, written in
    /// closed form from the lapse/shift split.
    pub fn inverse_metric(&self, x: &SigmaPoint) -> Result<DMatrix<f64>, ModelError> {
        self.check_chart(x)?;
        let g = self.local_at(x);
        let n = self.spatial_dim();
        let b2 = g.lapse * g.lapse;
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = 1.0 / b2;
        for i in 0..n {
            m[(0, i + 1)] = -g.shift[i] / b2;
            m[(i + 1, 0)] = -g.shift[i] / b2;
            for j in 0..n {
                m[(i + 1, j + 1)] = -g.h_inv[i][j] + g.shift[i] * g.shift[j] / b2;
            }
        }
        Ok(m)
    }

    /// Spacetime metric in `(t, x^i)` coordinates.
    pub fn metric(&self, x: &SigmaPoint) -> Result<DMatrix<f64>, ModelError> {
        self.check_chart(x)?;
        let g = self.local_at(x);
        let n = self.spatial_dim();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = g.lapse * g.lapse - g.shift_norm_sq(n);
        for i in 0..n {
            let lowered: f64 = (0..n).map(|j| g.h[i][j] * g.shift[j]).sum();
            m[(0, i + 1)] = -lowered;
            m[(i + 1, 0)] = -lowered;
            for j in 0..n {
                m[(i + 1, j + 1)] = -g.h[i][j];
            }
        }
        Ok(m)
    }

    /// `g^{-1}(ξ, η)` for covectors `(τ, k)` at `x`.
    pub fn co_metric(&self, x: &SigmaPoint, xi: &[f64], eta: &[f64]) -> f64 {
        let g = self.local_at(x);
        let n = self.spatial_dim();
        let xi0 = xi[0] - (0..n).map(|i| g.shift[i] * xi[i + 1]).sum::<f64>();
        let eta0 = eta[0] - (0..n).map(|i| g.shift[i] * eta[i + 1]).sum::<f64>();
        let mut spatial = 0.0;
        for i in 0..n {
            for j in 0..n {
                spatial += g.h_inv[i][j] * xi[i + 1] * eta[j + 1];
            }
        }
        xi0 * eta0 / (g.lapse * g.lapse) - spatial
    }

    /// Regular sample grid over the Cauchy surface, used for validation.
    pub fn sample_points(&self, per_dim: usize) -> Vec<SigmaPoint> {
        let per_dim = per_dim.max(2);
        match self.cauchy {
            CauchyModel::Circle { length } => (0..per_dim)
                .map(|i| SigmaPoint::circle(length * i as f64 / per_dim as f64))
                .collect(),
            CauchyModel::FlatTorus { lengths } => {
                let mut out = Vec::with_capacity(per_dim * per_dim);
                for i in 0..per_dim {
                    for j in 0..per_dim {
                        out.push(SigmaPoint::periodic([
                            lengths[0] * i as f64 / per_dim as f64,
                            lengths[1] * j as f64 / per_dim as f64,
                        ]));
                    }
                }
                out
            }
            _ => {
                let mut out = Vec::new();
                for axis in [Axis::Z, Axis::X] {
                    for i in 0..per_dim {
                        let colat = std::f64::consts::PI * (i as f64 + 0.5) / per_dim as f64;
                        for j in 0..2 * per_dim {
                            let az = std::f64::consts::PI * j as f64 / per_dim as f64;
                            out.push(SigmaPoint::polar(axis, colat, az));
                        }
                    }
                }
                out
            }
        }
    }

    fn check_sample_grid(&self) -> Result<(), ModelError> {
        let n = self.spatial_dim();
        let per_dim = if n == 1 { 512 } else { 48 };
        for p in self.sample_points(per_dim) {
            let g = self.local_at(&p);
            if !(g.lapse > 0.0) {
                return Err(ModelError::LapseNotPositive {
                    at: p.q,
                    value: g.lapse,
                });
            }
            let margin = g.lapse * g.lapse - g.shift_norm_sq(n);
            if !(margin > 0.0) {
                return Err(ModelError::KillingNotTimelike { at: p.q, margin });
            }
        }
        Ok(())
    }

    fn check_periodicity(&self) -> Result<(), ModelError> {
        let lengths = self.cauchy.cycle_lengths();
        if lengths.is_empty() {
            return Ok(());
        }
        let mut fields: Vec<(&str, &Expr)> = vec![("lapse.expr", &self.lapse)];
        if let ShiftField::Components(es) = &self.shift {
            for e in es {
                fields.push(("shift", e));
            }
        }
        for (name, e) in fields {
            for (j, &len) in lengths.iter().enumerate() {
                for s in 0..37 {
                    let base = [0.37 * s as f64, 0.23 * s as f64];
                    let mut shifted = base;
                    shifted[j] += len;
                    let env = |q: [f64; 2]| {
                        move |v: Var| match v {
                            Var::X | Var::X1 => q[0],
                            Var::X2 => q[1],
                            Var::Z => 0.0,
                        }
                    };
                    let a = e.eval_f64(&env(base));
                    let b = e.eval_f64(&env(shifted));
                    if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                        return Err(ModelError::NotPeriodic {
                            field: name.to_string(),
                            length: len,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

impl PhasePoint {
    /// `g^{-1}((τ,k),(τ,k))`.
    pub fn co_norm(&self, model: &StationaryModel) -> f64 {
        let n = model.spatial_dim();
        let mut xi = vec![self.tau];
        xi.extend_from_slice(&self.k[..n]);
        model.co_metric(&self.x, &xi, &xi)
    }

    pub fn is_null(&self, model: &StationaryModel, tol: f64) -> bool {
        let scale = self.tau * self.tau + self.k.iter().map(|v| v * v).sum::<f64>();
        self.co_norm(model).abs() <= tol * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ultrastatic_circle_builds() {
        let m = build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(m.dimension, 2);
        assert!(m.is_ultrastatic());
        let inv = m.inverse_metric(&SigmaPoint::circle(1.3)).unwrap();
        assert_eq!(inv[(0, 0)], 1.0);
        assert_eq!(inv[(0, 1)], 0.0);
        assert_eq!(inv[(1, 1)], -1.0);
    }

    #[test]
    fn shifted_circle_inverse_metric() {
        let m = build_model(&ModelConfig::circle(TAU, 1.0, 0.5, 0.0)).unwrap();
        let inv = m.inverse_metric(&SigmaPoint::circle(0.2)).unwrap();
        // direct inversion of [[1 - a^2, -a], [-a, -1]]
        let g = nalgebra::Matrix2::new(0.75, -0.5, -0.5, -1.0);
        let direct = g.try_inverse().unwrap();
        assert!(close(inv[(0, 0)], direct[(0, 0)], 1e-15) && close(inv[(0, 0)], 1.0, 1e-15));
        assert!(close(inv[(0, 1)], direct[(0, 1)], 1e-15) && close(inv[(0, 1)], -0.5, 1e-15));
        assert!(close(inv[(1, 1)], direct[(1, 1)], 1e-15) && close(inv[(1, 1)], -0.75, 1e-15));
    }

    #[test]
    fn rejects_non_timelike_killing_field() {
        let err = build_model(&ModelConfig::circle(TAU, 1.0, 1.1, 0.0)).unwrap_err();
        assert!(matches!(err, ModelError::KillingNotTimelike { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_lapse_dimension_and_sizes() {
        let cfg = ModelConfig::circle_expr(TAU, "0.5 + cos(x)", "0", 0.0);
        assert!(matches!(
            build_model(&cfg).unwrap_err(),
            ModelError::LapseNotPositive { .. }
        ));
        let mut cfg = ModelConfig::circle(TAU, 1.0, 0.0, 0.0);
        cfg.spacetime.dimension = 4;
        assert!(matches!(
            build_model(&cfg).unwrap_err(),
            ModelError::UnsupportedDimension { .. }
        ));
        let cfg = ModelConfig::circle(-1.0, 1.0, 0.0, 0.0);
        assert!(matches!(
            build_model(&cfg).unwrap_err(),
            ModelError::NonPositiveSize { .. }
        ));
        let cfg = ModelConfig::circle_expr(TAU, "1 + 0.1*cos(x/2)", "0", 0.0);
        assert!(matches!(
            build_model(&cfg).unwrap_err(),
            ModelError::NotPeriodic { .. }
        ));
        let mut cfg = ModelConfig::circle(TAU, 1.0, 0.0, 0.0);
        cfg.bundle.rank = 4;
        assert!(matches!(
            build_model(&cfg).unwrap_err(),
            ModelError::UnsupportedRank(4)
        ));
    }

    #[test]
    fn sphere_inverse_metric_in_polar_chart() {
        let m = build_model(&ModelConfig::sphere(1.0, 1.0, 0.0)).unwrap();
        let phi = 0.7;
        let inv = m
            .inverse_metric(&SigmaPoint::polar(Axis::Z, phi, 2.0))
            .unwrap();
        assert!(close(inv[(0, 0)], 1.0, 1e-15));
        assert!(close(inv[(1, 1)], -1.0, 1e-14));
        assert!(close(inv[(2, 2)], -1.0 / (phi.sin() * phi.sin()), 1e-13));
        assert!(close(inv[(1, 2)], 0.0, 1e-14));
        assert!(m
            .inverse_metric(&SigmaPoint::polar(Axis::Z, 0.0, 0.0))
            .is_err());
    }

    #[test]
    fn inverse_metric_times_metric_is_identity() {
        let models = [
            ModelConfig::circle_expr(TAU, "1 + 0.3*cos(x)", "0.2*sin(x)", 0.0),
            ModelConfig::torus([TAU, 5.0], 1.2, [0.3, -0.2], [0.0, 0.0]),
            ModelConfig::sphere(1.3, 1.0, 0.4),
            ModelConfig::ellipsoid([1.0, 1.2, 1.5], 1.1, 0.3),
        ];
        for cfg in models {
            let m = build_model(&cfg).unwrap();
            for p in m.sample_points(9) {
                let prod = m.inverse_metric(&p).unwrap() * m.metric(&p).unwrap();
                let id = DMatrix::<f64>::identity(m.dimension, m.dimension);
                assert!((prod - id).abs().max() < 1e-12);
            }
        }
    }

    #[test]
    fn stationarity_lapse_is_pure_function_of_position() {
        let m = build_model(&ModelConfig::circle_expr(TAU, "1 + 0.3*cos(x)", "0.1", 0.0)).unwrap();
        let p = SigmaPoint::circle(PI / 3.0);
        let a = m.local_at(&p);
        let b = m.local_at(&p);
        assert_eq!(a.lapse, b.lapse);
        assert_eq!(a.shift, b.shift);
    }

    #[test]
    fn rotating_sphere_shift_is_azimuthal() {
        let m = build_model(&ModelConfig::sphere(2.0, 1.0, 0.2)).unwrap();
        let g = m.local_at(&SigmaPoint::polar(Axis::Z, 1.0, 0.4));
        assert!(close(g.shift[0], 0.0, 1e-15));
        assert!(close(g.shift[1], 0.2, 1e-14));
        // |alpha|_h = omega R sin(colatitude)
        assert!(close(g.shift_norm_sq(2).sqrt(), 0.2 * 2.0 * 1.0f64.sin(), 1e-14));
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.0)).unwrap();
        let b = build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.0)).unwrap();
        let c = build_model(&ModelConfig::circle(TAU, 1.0, 0.5, 0.0)).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_eq!(a.fingerprint().len(), 32);
    }
}
