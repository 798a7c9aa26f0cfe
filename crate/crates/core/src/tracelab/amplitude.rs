//! Leading coefficient of the trace singularity at a nonzero period.

use num_complex::Complex64;

use super::TraceError;
use crate::geodesics::{find_periodic_orbits, PeriodicOrbit, PERIOD_TOL};
use crate::models::{clifford_symbol, StationaryModel};

/// Normalization of the time variable in the amplitude: with the profile
/// convention `S(t) = Σ m_n e^{−itλ_n}` the delta mass of a nondegenerate
/// family equals its amplitude times this constant.
pub const AMPLITUDE_NORMALIZATION: f64 = 1.0;

/// `tr(σ(dt) 𝒯 σ(dt)) / tr(σ(dt) σ(dt))`: the holonomy seen through the
/// symbol, normalized so that `𝒯 = Id` gives 1.
pub fn symbol_trace_factor(model: &StationaryModel, orbit: &PeriodicOrbit) -> Result<Complex64, TraceError> {
    let mut dt = vec![0.0; model.dimension];
    dt[0] = 1.0;
    let s = clifford_symbol(model, &orbit.strip.x, &dt)?;
    let den = (s * s).trace();
    if den.norm() == 0.0 {
        return Err(TraceError::Invalid("symbol of dt is nilpotent at the orbit basepoint".into()));
    }
    Ok((s * orbit.holonomy * s).trace() / den)
}

/// `N · T_γ^♯ · e^{−iπ𝔪/2} · factor / √|det(I − P_γ)|` for one orbit.
pub fn predicted_amplitude(model: &StationaryModel, orbit: &PeriodicOrbit, normalization: f64) -> Result<Complex64, TraceError> {
    if !orbit.nondegenerate {
        return Err(TraceError::Degenerate {
            period: orbit.period,
            det: orbit.det_i_minus_p,
        });
    }
    let maslov = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2 * orbit.maslov as f64);
    let factor = symbol_trace_factor(model, orbit)?;
    Ok(normalization * orbit.primitive_period * maslov * factor / orbit.det_i_minus_p.abs().sqrt())
}

/// Sum of the amplitudes of all orbits with period `t`; distinct families
/// sharing a period add up.
pub fn predicted_peak(model: &StationaryModel, t: f64) -> Result<Complex64, TraceError> {
    let search = find_periodic_orbits(model, t * (1.0 + 1e-6), PERIOD_TOL)?;
    let orbits = search.with_period(t, 1e-6 * t.max(1.0));
    if orbits.is_empty() {
        return Err(TraceError::Invalid(format!("no periodic orbit with period {t}")));
    }
    orbits
        .into_iter()
        .map(|o| predicted_amplitude(model, o, AMPLITUDE_NORMALIZATION))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;
    use crate::spectra::torus_spectrum;
    use crate::tracelab::{peak_mass_and_phase, trace_profile, Cutoff, TimeGrid};
    use crate::ModelConfig;
    use std::f64::consts::{PI, TAU};

    fn circle(alpha: f64, theta: f64) -> StationaryModel {
        build_model(&ModelConfig::circle(TAU, 1.0, alpha, theta)).unwrap()
    }

    fn orbits_at(m: &StationaryModel, t: f64) -> Vec<PeriodicOrbit> {
        let s = find_periodic_orbits(m, t + 0.1, PERIOD_TOL).unwrap();
        s.with_period(t, 1e-6).into_iter().cloned().collect()
    }

    fn measured(m: &StationaryModel, t: f64, neighbours: &[f64]) -> Complex64 {
        let s = torus_spectrum(m, 800.0).unwrap();
        let profiles: Vec<_> = [200.0, 400.0, 800.0]
            .iter()
            .map(|&l| trace_profile(&s, Cutoff::Gaussian, &TimeGrid::for_cutoff(t - 1.0, t + 1.0, l), l).unwrap())
            .collect();
        peak_mass_and_phase(&profiles, t, 0.5, neighbours).unwrap().mass
    }

    #[test]
    fn untwisted_family_has_real_amplitude_t() {
        let m = circle(0.0, 0.0);
        for o in orbits_at(&m, TAU) {
            let a = predicted_amplitude(&m, &o, 1.0).unwrap();
            assert!((a - Complex64::new(TAU, 0.0)).norm() < 1e-12, "{a}");
        }
    }

    #[test]
    fn twist_rotates_each_family_by_its_winding() {
        let m0 = circle(0.0, 0.0);
        let m1 = circle(0.0, 0.25);
        for (a, b) in orbits_at(&m0, TAU).iter().zip(orbits_at(&m1, TAU)) {
            let ra = predicted_amplitude(&m0, a, 1.0).unwrap();
            let rb = predicted_amplitude(&m1, &b, 1.0).unwrap();
            assert!((rb.norm() - ra.norm()).abs() < 1e-12);
            let expect = Complex64::from_polar(1.0, 0.5 * PI * b.winding[0] as f64);
            assert!((rb / ra - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn prediction_matches_measured_mass() {
        let m = circle(0.0, 0.0);
        let (p, q) = (predicted_peak(&m, TAU).unwrap(), measured(&m, TAU, &[0.0, 2.0 * TAU]));
        assert!((q / p - 1.0).norm() < 0.02, "{p} {q}");
        let m = circle(0.3, 0.25);
        let t = TAU / 0.7;
        let (p, q) = (predicted_peak(&m, t).unwrap(), measured(&m, t, &[TAU / 1.3, 2.0 * TAU / 1.3]));
        assert!((q / p - 1.0).norm() < 0.02, "{p} {q}");
        assert!((p.arg() - 0.5 * PI).abs() < 1e-9);
    }

    #[test]
    fn sphere_is_refused() {
        let m = build_model(&ModelConfig::sphere(1.0, 1.0, 0.0)).unwrap();
        assert!(matches!(predicted_peak(&m, TAU), Err(TraceError::Degenerate { .. })));
    }
}
