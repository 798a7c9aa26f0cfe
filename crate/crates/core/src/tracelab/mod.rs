//! Windowed spectral sums compared against classical period data.

mod amplitude;
mod profile;
mod weyl;
mod window;

use crate::geodesics::GeodesicError;
use crate::models::ModelError;
use crate::spectra::{Spectrum, SpectrumError};

pub use amplitude::{predicted_amplitude, predicted_peak, symbol_trace_factor, AMPLITUDE_NORMALIZATION};
pub use profile::{
    detect_singular_times, peak_mass_and_phase, profile_table, trace_profile, Cutoff, PeakMass, TimeGrid, TraceProfile,
    DEFAULT_THRESHOLD,
};
pub use weyl::{remainder_band, tauberian_smooth, weyl_fit, weyl_prediction, RemainderBand, WeylFit};
pub use window::{Window, WindowKind};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("spectrum incomplete for this request: {0}")]
    CompletenessViolation(String),
    #[error("no peaks above the detection floor")]
    NoPeaks,
    #[error("peaks overlap at t = {time}: separation {separation:e} below four grid steps")]
    OverlappingPeaks { time: f64, separation: f64 },
    #[error("orbit with period {period} is degenerate (det(I − P) = {det:e}); compare family masses instead")]
    Degenerate { period: f64, det: f64 },
    #[error("too few eigenvalues in the fit range: {found} < {needed}")]
    InsufficientData { found: u64, needed: u64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// `Σ m_n ρ(λ_n − λ₀)` with an estimate of the contribution of the
/// eigenvalues beyond the completeness bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedTrace {
    pub value: f64,
    pub tail_estimate: f64,
}

/// Power-law model `#{|λ_n| ≤ x} ≈ c x^p` fitted on the top half of the spectrum.
fn growth_law(spectrum: &Spectrum) -> Option<(f64, f64)> {
    let x = spectrum.lambda_max;
    let count = |r: f64| -> f64 {
        spectrum
            .entries
            .iter()
            .filter(|e| e.lambda.abs() <= r)
            .map(|e| e.mult as f64)
            .sum()
    };
    let (hi, lo) = (count(x), count(0.5 * x));
    if hi <= 0.0 || lo <= 0.0 {
        return None;
    }
    let p = (hi / lo).log2().max(0.0);
    Some((hi / x.powf(p), p))
}

/// Estimated `Σ_{|λ_n| > lambda_max} m_n ρ(λ_n − λ₀)`, summed over dyadic shells.
fn tail_estimate(spectrum: &Spectrum, window: &Window, lambda0: f64) -> f64 {
    let Some((c, p)) = growth_law(spectrum) else {
        return 0.0;
    };
    let a = spectrum.lambda_max;
    let mut total = 0.0;
    let mut last = f64::INFINITY;
    for j in 0..200 {
        let r0 = a * 2f64.powi(j);
        let r1 = 2.0 * r0;
        let shell = c * (r1.powf(p) - r0.powf(p));
        let dist = (r0 - lambda0.abs()).max(0.0);
        last = shell * window.tail_bound(dist);
        total += last;
        if last < 1e-18 * total.max(1e-300) {
            return total;
        }
    }
    // shells stopped shrinking: the series does not converge
    if last > 1e-3 * total {
        f64::INFINITY
    } else {
        total
    }
}

/// `Tr U_ρ` shifted by `λ₀`; fails when the estimated tail exceeds
/// `tail_tol · max(1, |value|)`.
pub fn mollified_trace(spectrum: &Spectrum, window: &Window, lambda0: f64, tail_tol: f64) -> Result<MollifiedTrace, TraceError> {
    let value: f64 = spectrum
        .entries
        .iter()
        .map(|e| e.mult as f64 * window.rho(e.lambda - lambda0))
        .sum();
    let tail = tail_estimate(spectrum, window, lambda0);
    if !(tail <= tail_tol * value.abs().max(1.0)) {
        return Err(TraceError::CompletenessViolation(format!(
            "tail estimate {tail:e} exceeds tolerance for {} window with ε = {}",
            window.kind, window.epsilon
        )));
    }
    Ok(MollifiedTrace {
        value,
        tail_estimate: tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;
    use crate::spectra::{round_sphere_spectrum, torus_spectrum};
    use crate::ModelConfig;
    use std::f64::consts::TAU;

    fn circle(lmax: f64) -> Spectrum {
        torus_spectrum(&build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.0)).unwrap(), lmax).unwrap()
    }

    #[test]
    fn fejer_on_circle_matches_brute_force() {
        let s = circle(2000.0);
        let w = Window::fejer(1.0);
        let t = mollified_trace(&s, &w, 0.0, 1e-2).unwrap();
        let brute: f64 = (-2000i64..=2000).map(|n| 2.0 * w.rho(n as f64)).sum();
        assert!((t.value - brute).abs() < 1e-10 * brute);
        assert!(t.tail_estimate > 0.0 && t.tail_estimate < 0.05);
        // Poisson: Σ_n ρ(n) = 2π K(0) = 2π/ε for ε < 2π, up to the tail
        assert!((t.value - 2.0 * TAU).abs() < t.tail_estimate);
    }

    #[test]
    fn bump_on_circle_is_exact() {
        let s = circle(1200.0);
        for eps in [0.5, 2.0, 5.0] {
            let w = Window::bump_squared(eps);
            let t = mollified_trace(&s, &w, 0.0, 1e-12).unwrap();
            let exact = 2.0 * TAU * w.kernel(0.0);
            assert!((t.value - exact).abs() < 1e-8 * exact, "{eps} {} {exact}", t.value);
            // density regime: the shifted sum does not depend on λ₀ either
            let shifted = mollified_trace(&s, &w, 0.37, 1e-12).unwrap();
            assert!((shifted.value - exact).abs() < 1e-8 * exact);
        }
    }

    #[test]
    fn far_shift_leaves_only_tail() {
        let s = circle(200.0);
        let w = Window::bump_squared(2.0);
        let t = mollified_trace(&s, &w, 1e4, f64::INFINITY).unwrap();
        assert!(t.value.abs() < 1e-14);
        assert!(t.tail_estimate > 1.0);
        assert!(mollified_trace(&s, &w, 1e4, 1e-6).is_err());
    }

    #[test]
    fn fejer_on_sphere_is_incomplete() {
        let s = round_sphere_spectrum(1.0, 100.0);
        assert!(matches!(
            mollified_trace(&s, &Window::fejer(1.0), 0.0, 1e-2),
            Err(TraceError::CompletenessViolation(_))
        ));
        assert!(mollified_trace(&s, &Window::bump_squared(8.0), 0.0, 1e-10).is_ok());
    }
}
