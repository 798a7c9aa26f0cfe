//! Clifford-module data: gamma matrices, the principal symbol and its
//! trace pairing.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cholesky2, CauchyModel, Chart, ModelError, SigmaPoint, StationaryModel};
use crate::config::BundleSection;

/// Rank-2 complex endomorphism.
pub type Endo = Matrix2<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Constant generators `γ⁰, γ¹, …` of the Clifford algebra in an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSet {
    pub gamma: Vec<Endo>,
}

impl GammaSet {
    /// `γ⁰ = σx`, `γ¹ = iσy` and for `d = 3` also `γ² = iσz`.
    pub fn standard(dimension: usize) -> GammaSet {
        let z = c(0.0);
        let g0 = Endo::new(z, c(1.0), c(1.0), z);
        let g1 = Endo::new(z, c(1.0), c(-1.0), z);
        let g2 = Endo::new(I, z, z, -I);
        let mut gamma = vec![g0, g1, g2];
        gamma.truncate(dimension);
        GammaSet { gamma }
    }

    pub fn from_matrices(gamma: Vec<Endo>) -> GammaSet {
        GammaSet { gamma }
    }

    pub fn dimension(&self) -> usize {
        self.gamma.len()
    }
}

/// Bundle description of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordData {
    pub rank: usize,
    pub gamma: GammaSet,
    /// Flat twist angle per fundamental cycle.
    pub twist: Vec<f64>,
    /// Constant potential component per fundamental cycle.
    pub potential: Vec<f64>,
}

impl CliffordData {
    pub(crate) fn from_config(
        b: &BundleSection,
        cauchy: &CauchyModel,
        dimension: usize,
    ) -> Result<CliffordData, ModelError> {
        if b.rank != 2 {
            return Err(ModelError::UnsupportedRank(b.rank));
        }
        let cycles = cauchy.cycle_lengths().len();
        let pad = |field: &str, v: &[f64], unit: bool| -> Result<Vec<f64>, ModelError> {
            if v.is_empty() {
                return Ok(vec![0.0; cycles]);
            }
            if v.len() != cycles {
                return Err(ModelError::Bundle {
                    field: field.to_string(),
                    reason: format!("expected {cycles} entries, got {}", v.len()),
                });
            }
            for &x in v {
                if !x.is_finite() || (unit && !(0.0..1.0).contains(&x)) {
                    return Err(ModelError::Bundle {
                        field: field.to_string(),
                        reason: format!("value {x} out of range"),
                    });
                }
            }
            Ok(v.to_vec())
        };
        Ok(CliffordData {
            rank: 2,
            gamma: GammaSet::standard(dimension),
            twist: pad("bundle.twist", &b.twist, true)?,
            potential: pad("bundle.potential", &b.potential, false)?,
        })
    }
}

/// Orthonormal-coframe components `(ξ₀, ξ_s)` of `ξ = τ dt + k dx`.
pub(crate) fn frame_components(model: &StationaryModel, x: &SigmaPoint, xi: &[f64]) -> Vec<f64> {
    let g = model.local_at(x);
    let n = model.spatial_dim();
    let tau = xi[0];
    let k = [xi.get(1).copied().unwrap_or(0.0), xi.get(2).copied().unwrap_or(0.0)];
    let mut out = vec![(tau - g.shift_dot(&k, n)) / g.lapse];
    match x.chart {
        Chart::Periodic => out.extend_from_slice(&k[..n]),
        Chart::Polar(_) => {
            // ξ_s = L⁻¹ k with h = L Lᵀ
            let l = cholesky2(&g.h);
            let a = k[0] / l[0][0];
            let b = (k[1] - l[1][0] * a) / l[1][1];
            out.push(a);
            out.push(b);
        }
    }
    out
}

fn symbol_with(gamma: &GammaSet, model: &StationaryModel, x: &SigmaPoint, xi: &[f64]) -> Endo {
    let comps = frame_components(model, x, xi);
    let mut s = Endo::zeros();
    for (g, v) in gamma.gamma.iter().zip(comps) {
        s += g * c(v);
    }
    s
}

/// Principal symbol `σ_D(x, ξ)` for `ξ = (τ, k₁, …)`.
pub fn clifford_symbol(
    model: &StationaryModel,
    x: &SigmaPoint,
    xi: &[f64],
) -> Result<Endo, ModelError> {
    model.check_chart(x)?;
    Ok(symbol_with(&model.bundle.gamma, model, x, xi))
}

/// `tr(σ_D(x, η) σ_D(x, ζ))`.
pub fn symbol_trace_pairing(
    model: &StationaryModel,
    x: &SigmaPoint,
    eta: &[f64],
    zeta: &[f64],
) -> Result<Complex64, ModelError> {
    let a = clifford_symbol(model, x, eta)?;
    let b = clifford_symbol(model, x, zeta)?;
    Ok((a * b).trace())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffordReport {
    pub samples: usize,
    /// Largest `‖[σ(ξ),σ(η)]₊ − 2g⁻¹(ξ,η)‖ / (1 + |ξ||η|)`.
    pub max_violation: f64,
}

fn op_norm(m: &Endo) -> f64 {
    // Frobenius bounds the operator norm and is enough for a violation measure.
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn random_point(model: &StationaryModel, rng: &mut ChaCha8Rng) -> SigmaPoint {
    match model.cauchy {
        CauchyModel::Circle { length } => SigmaPoint::circle(rng.random_range(0.0..length)),
        CauchyModel::FlatTorus { lengths } => SigmaPoint::periodic([
            rng.random_range(0.0..lengths[0]),
            rng.random_range(0.0..lengths[1]),
        ]),
        _ => {
            let axis = super::Axis::ALL[rng.random_range(0..3)];
            let colat = rng.random_range(0.05..std::f64::consts::PI - 0.05);
            let az = rng.random_range(0.0..std::f64::consts::TAU);
            SigmaPoint::polar(axis, colat, az)
        }
    }
}

/// Samples random points and covectors and checks the Clifford relation.
pub fn verify_clifford(model: &StationaryModel, n_samples: usize, seed: u64) -> CliffordReport {
    verify_clifford_with(&model.bundle.gamma, model, n_samples, seed)
}

/// As [`verify_clifford`], with an explicit gamma set in place of the model's.
pub fn verify_clifford_with(
    gamma: &GammaSet,
    model: &StationaryModel,
    n_samples: usize,
    seed: u64,
) -> CliffordReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.dimension;
    let mut worst = 0.0f64;
    for _ in 0..n_samples.max(1) {
        let x = random_point(model, &mut rng);
        let xi: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let eta: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a = symbol_with(gamma, model, &x, &xi);
        let b = symbol_with(gamma, model, &x, &eta);
        let target = Endo::identity() * c(2.0 * model.co_metric(&x, &xi, &eta));
        let dev = op_norm(&(a * b + b * a - target));
        let nx = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(dev / (1.0 + nx * ny));
    }
    CliffordReport {
        samples: n_samples.max(1),
        max_violation: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, Axis};
    use crate::ModelConfig;
    use std::f64::consts::TAU;

    fn circle(alpha: f64) -> StationaryModel {
        build_model(&ModelConfig::circle(TAU, 1.0, alpha, 0.0)).unwrap()
    }

    #[test]
    fn symbol_squares() {
        let m = circle(0.0);
        let x = SigmaPoint::circle(0.4);
        let dt = clifford_symbol(&m, &x, &[1.0, 0.0]).unwrap();
        assert!(op_norm(&(dt * dt - Endo::identity())) < 1e-15);
        let dx = clifford_symbol(&m, &x, &[0.0, 1.0]).unwrap();
        assert!(op_norm(&(dx * dx + Endo::identity())) < 1e-15);
        let null = clifford_symbol(&m, &x, &[1.0, 1.0]).unwrap();
        assert!(op_norm(&(null * null)) < 1e-15);
    }

    #[test]
    fn trace_pairings() {
        let m = circle(0.0);
        let x = SigmaPoint::circle(1.0);
        let p = symbol_trace_pairing(&m, &x, &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((p - c(2.0)).norm() < 1e-15);
        let p = symbol_trace_pairing(&m, &x, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(p.norm() < 1e-15);
        let m = circle(0.5);
        let p = symbol_trace_pairing(&m, &x, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((p - c(-1.0)).norm() < 1e-14);
    }

    #[test]
    fn verify_on_catalogue_and_negative_control() {
        let m = circle(0.0);
        assert!(verify_clifford(&m, 1000, 7).max_violation < 1e-12);
        let s = build_model(&ModelConfig::sphere(1.0, 1.0, 0.3)).unwrap();
        assert!(verify_clifford(&s, 1000, 7).max_violation < 1e-10);
        let e = build_model(&ModelConfig::ellipsoid([1.0, 1.2, 1.5], 1.0, 0.2)).unwrap();
        assert!(verify_clifford(&e, 1000, 7).max_violation < 1e-10);

        let mut bad = GammaSet::standard(3);
        bad.gamma[2] = bad.gamma[1];
        let r = verify_clifford_with(&bad, &s, 1000, 7);
        assert!(r.max_violation > 1e-2, "{}", r.max_violation);
    }

    #[test]
    fn pairing_equals_rank_times_co_metric_on_sphere() {
        let s = build_model(&ModelConfig::sphere(1.5, 1.0, 0.2)).unwrap();
        let x = SigmaPoint::polar(Axis::Y, 0.8, 2.5);
        let eta = [0.7, -1.2, 0.4];
        let zeta = [-0.3, 0.9, 2.0];
        let p = symbol_trace_pairing(&s, &x, &eta, &zeta).unwrap();
        let expect = 2.0 * s.co_metric(&x, &eta, &zeta);
        assert!((p.re - expect).abs() < 1e-12 && p.im.abs() < 1e-12);
    }
}
