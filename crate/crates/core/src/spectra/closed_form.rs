//! Exact spectra: constant-coefficient flat models and the round sphere.

use std::f64::consts::TAU;

use super::{param_fingerprint, Spectrum, SpectrumError, MERGE_TOL};
use crate::models::{CauchyModel, StationaryModel};

/// `λ = α·k ± β|k|` over the twisted dual lattice `k_j = 2π(n_j + θ_j)/L_j`,
/// keeping `|λ| ≤ lambda_max`. One value per branch per lattice point.
pub fn lattice_eigenvalues(lengths: &[f64], beta: f64, alpha: &[f64], theta: &[f64], lambda_max: f64) -> Vec<f64> {
    let a_norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    // |λ| ≥ (β − |α|)|k|
    let k_max = lambda_max / (beta - a_norm) + 1.0;
    let range = |j: usize| {
        let step = TAU / lengths[j];
        let lo = (-k_max / step - theta[j]).floor() as i64;
        let hi = (k_max / step - theta[j]).ceil() as i64;
        (lo, hi, step)
    };
    let mut out = Vec::new();
    let mut push = |k: &[f64]| {
        let ak: f64 = alpha.iter().zip(k).map(|(a, k)| a * k).sum();
        let kn = k.iter().map(|k| k * k).sum::<f64>().sqrt();
        for l in [ak + beta * kn, ak - beta * kn] {
            if l.abs() <= lambda_max {
                out.push(l);
            }
        }
    };
    match lengths.len() {
        1 => {
            let (lo, hi, step) = range(0);
            for n in lo..=hi {
                push(&[step * (n as f64 + theta[0])]);
            }
        }
        _ => {
            let (lo0, hi0, s0) = range(0);
            let (lo1, hi1, s1) = range(1);
            for n0 in lo0..=hi0 {
                let k0 = s0 * (n0 as f64 + theta[0]);
                if k0.abs() > k_max {
                    continue;
                }
                for n1 in lo1..=hi1 {
                    push(&[k0, s1 * (n1 as f64 + theta[1])]);
                }
            }
        }
    }
    out
}

/// Spectrum of a circle or flat torus with constant lapse and shift.
pub fn torus_spectrum(model: &StationaryModel, lambda_max: f64) -> Result<Spectrum, SpectrumError> {
    if !model.cauchy.is_flat() {
        return Err(SpectrumError::Unsupported(format!(
            "{} is not a flat model",
            model.cauchy.kind_name()
        )));
    }
    let (Some(beta), Some(alpha)) = (model.constant_lapse(), model.constant_shift()) else {
        return Err(SpectrumError::NonConstant(model.name()));
    };
    let lengths = model.cauchy.cycle_lengths();
    let n = lengths.len();
    let theta = model.effective_twist();
    let values = lattice_eigenvalues(&lengths, beta, &alpha[..n], &theta, lambda_max);
    Ok(Spectrum::from_values(values, lambda_max, model.fingerprint(), MERGE_TOL))
}

/// `λ = ±m/R`, multiplicity `2m`, on the round sphere of radius `R`.
pub fn round_sphere_spectrum(radius: f64, lambda_max: f64) -> Spectrum {
    let m_max = (lambda_max * radius).floor() as u32;
    let mut pairs = Vec::with_capacity(2 * m_max as usize);
    for m in 1..=m_max {
        let l = m as f64 / radius;
        if l <= lambda_max {
            pairs.push((l, 2 * m));
            pairs.push((-l, 2 * m));
        }
    }
    let fp = param_fingerprint(&format!("round-sphere R={radius:e}"));
    Spectrum::from_entries(&pairs, lambda_max, &fp)
}

/// Spectrum of an ultrastatic round-sphere model.
pub fn sphere_spectrum(model: &StationaryModel, lambda_max: f64) -> Result<Spectrum, SpectrumError> {
    let CauchyModel::RoundSphere { radius } = model.cauchy else {
        return Err(SpectrumError::Unsupported("closed-form sphere spectrum needs a round sphere".into()));
    };
    if !model.is_ultrastatic() {
        return Err(SpectrumError::Unsupported(
            "closed-form sphere spectrum needs unit lapse and zero shift".into(),
        ));
    }
    let mut s = round_sphere_spectrum(radius, lambda_max);
    s.fingerprint = model.fingerprint().to_string();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;
    use crate::spectra::counting_function;
    use crate::ModelConfig;
    use proptest::prelude::*;

    fn values(s: &Spectrum) -> Vec<(f64, u32)> {
        s.entries.iter().map(|e| (e.lambda, e.mult)).collect()
    }

    #[test]
    fn ultrastatic_circle_integers() {
        let m = build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.0)).unwrap();
        let s = torus_spectrum(&m, 10.0).unwrap();
        let expect: Vec<(f64, u32)> = (-10..=10).map(|n| (n as f64, 2)).collect();
        assert_eq!(s.len(), expect.len());
        for (a, b) in values(&s).iter().zip(&expect) {
            assert!((a.0 - b.0).abs() < 1e-13 && a.1 == b.1, "{a:?} {b:?}");
        }
        assert_eq!(counting_function(&s, 5.5).unwrap(), 12);
        assert_eq!(counting_function(&s, 0.0).unwrap(), 2);
    }

    #[test]
    fn shifted_circle_branches() {
        let m = build_model(&ModelConfig::circle(TAU, 1.0, 0.5, 0.0)).unwrap();
        let s = torus_spectrum(&m, 30.0).unwrap();
        // brute force: {1.5 n} ∪ {−0.5 n}
        let mut brute: Vec<f64> = (-100..=100)
            .flat_map(|n| [1.5 * n as f64, -0.5 * n as f64])
            .filter(|l| l.abs() <= 30.0)
            .collect();
        brute.sort_by(f64::total_cmp);
        assert_eq!(s.total_multiplicity() as usize, brute.len());
        let flat: Vec<f64> = s
            .entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.mult as usize))
            .collect();
        for (a, b) in flat.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn twisted_circle_shifts_lattice() {
        let m = build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.25)).unwrap();
        let s = torus_spectrum(&m, 5.0).unwrap();
        let mut expect: Vec<f64> = (-6..=6).flat_map(|n| [n as f64 + 0.25, -(n as f64 + 0.25)]).collect();
        expect.retain(|l| l.abs() <= 5.0);
        expect.sort_by(f64::total_cmp);
        let got: Vec<f64> = s.entries.iter().map(|e| e.lambda).collect();
        assert_eq!(got.len(), expect.len());
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(s.entries.iter().all(|e| e.mult == 1));
    }

    #[test]
    fn variable_lapse_is_redirected() {
        let m = build_model(&ModelConfig::circle_expr(TAU, "1 + 0.3*cos(x)", "0", 0.0)).unwrap();
        assert!(matches!(torus_spectrum(&m, 5.0), Err(SpectrumError::NonConstant(_))));
    }

    #[test]
    fn sphere_examples() {
        let s = round_sphere_spectrum(1.0, 3.5);
        assert_eq!(
            values(&s),
            vec![(-3.0, 6), (-2.0, 4), (-1.0, 2), (1.0, 2), (2.0, 4), (3.0, 6)]
        );
        assert_eq!(counting_function(&s, 3.5).unwrap(), 12);
        let big = round_sphere_spectrum(1.0, 10.0);
        assert_eq!(counting_function(&big, 10.0).unwrap(), 110);
        let r2 = round_sphere_spectrum(2.0, 3.5);
        assert_eq!(r2.entries.iter().find(|e| e.lambda > 0.0).unwrap().lambda, 0.5);
        assert_eq!(counting_function(&r2, 1.75).unwrap(), counting_function(&s, 3.5).unwrap());
        let rot = build_model(&ModelConfig::sphere(1.0, 1.0, 0.2)).unwrap();
        assert!(sphere_spectrum(&rot, 3.0).is_err());
    }

    #[test]
    fn torus_completeness_audit() {
        let (lengths, beta, alpha, theta) = ([TAU, 4.0], 1.2, [0.3, -0.2], [0.1, 0.6]);
        let m = build_model(&ModelConfig::torus(lengths, beta, alpha, theta)).unwrap();
        let lmax = 12.0;
        let s = torus_spectrum(&m, lmax).unwrap();
        let mut brute = 0u64;
        for n0 in -60..=60 {
            for n1 in -60..=60 {
                let k = [TAU * (n0 as f64 + theta[0]) / lengths[0], TAU * (n1 as f64 + theta[1]) / lengths[1]];
                let ak = alpha[0] * k[0] + alpha[1] * k[1];
                let kn = (k[0] * k[0] + k[1] * k[1]).sqrt();
                for l in [ak + beta * kn, ak - beta * kn] {
                    if (0.0..=lmax).contains(&l) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(counting_function(&s, lmax).unwrap(), brute);
    }

    proptest! {
        #[test]
        fn twist_relabeling_invariance(theta in 0.0..1.0f64, alpha in -0.6..0.6f64, len in 1.0..10.0f64) {
            let mut a = lattice_eigenvalues(&[len], 1.0, &[alpha], &[theta], 20.0);
            let mut b = lattice_eigenvalues(&[len], 1.0, &[alpha], &[theta + 1.0], 20.0);
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn closed_form_branches_have_constant_spacing(alpha in -0.8..0.8f64, theta in 0.0..1.0f64) {
            // each branch is an arithmetic progression with step 2π(β ± α)/L
            let vals = lattice_eigenvalues(&[TAU], 1.0, &[alpha], &[theta], 40.0);
            for (sign, speed) in [(1.0, 1.0 + alpha), (-1.0, 1.0 - alpha)] {
                let mut branch: Vec<f64> = vals
                    .iter()
                    .copied()
                    .filter(|l| {
                        let n = sign * l / speed - theta;
                        (n - n.round()).abs() < 1e-9
                    })
                    .collect();
                branch.sort_by(f64::total_cmp);
                branch.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
                for w in branch.windows(2) {
                    prop_assert!((w[1] - w[0] - speed).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn polynomial_growth(r in 0.5..2.0f64) {
            let s = round_sphere_spectrum(r, 80.0 / r);
            for l in [10.0, 20.0, 40.0] {
                let l = l / r;
                let ratio = counting_function(&s, l).unwrap() as f64 / (l * l * r * r);
                prop_assert!(ratio > 0.5 && ratio < 2.0);
            }
        }
    }
}
