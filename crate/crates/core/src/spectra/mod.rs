//! Spectrum of the Killing generator `L = −i£_Z` on solutions of the Dirac
//! equation, for the exactly solvable catalogue models and for variable
//! lapse/shift on the circle.

mod cache;
mod closed_form;
mod ode;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::models::{CauchyModel, ModelError, StationaryModel};

pub use cache::{cache_dir_from_env, CacheEntry, SpectrumCache, CACHE_ENV};
pub use closed_form::{lattice_eigenvalues, round_sphere_spectrum, sphere_spectrum, torus_spectrum};
pub use ode::{ode_spectrum_circle, OdeOptions};

#[derive(Debug, thiserror::Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model has position-dependent coefficients; use the ODE engine ({0})")]
    NonConstant(String),
    #[error("no spectral engine for this model: {0}")]
    Unsupported(String),
    #[error("λ = {lambda} lies beyond the completeness bound {lambda_max}")]
    BeyondCompleteness { lambda: f64, lambda_max: f64 },
    #[error("root bracketing failed: {0}")]
    Bracketing(String),
    #[error("monodromy resolutions did not agree after {steps} steps (difference {diff:e})")]
    NoConvergence { steps: usize, diff: f64 },
    #[error("cache file {path}: {reason}")]
    Cache { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One eigenvalue with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub lambda: f64,
    pub mult: u32,
}

/// Sorted eigenvalues, complete on `[−lambda_max, lambda_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub entries: Vec<Entry>,
    pub lambda_max: f64,
    pub fingerprint: String,
}

/// Relative tolerance under which closed-form eigenvalues are merged.
pub const MERGE_TOL: f64 = 1e-12;

impl Spectrum {
    /// Sorts the values, drops those outside `[−lambda_max, lambda_max]`
    /// and merges coincident ones into multiplicities.
    pub fn from_values(mut values: Vec<f64>, lambda_max: f64, fingerprint: &str, merge_tol: f64) -> Spectrum {
        values.retain(|v| v.abs() <= lambda_max);
        values.sort_by(f64::total_cmp);
        let mut entries: Vec<Entry> = Vec::new();
        let mut sum = 0.0;
        for v in values {
            match entries.last_mut() {
                Some(e) if (v - e.lambda).abs() <= merge_tol * v.abs().max(1.0) => {
                    sum += v;
                    e.mult += 1;
                    e.lambda = sum / e.mult as f64;
                }
                _ => {
                    sum = v;
                    entries.push(Entry { lambda: v, mult: 1 });
                }
            }
        }
        Spectrum {
            entries,
            lambda_max,
            fingerprint: fingerprint.to_string(),
        }
    }

    /// Builds from explicit `(λ, mult)` pairs, merging exact duplicates.
    pub fn from_entries(pairs: &[(f64, u32)], lambda_max: f64, fingerprint: &str) -> Spectrum {
        let mut values = Vec::new();
        for &(l, m) in pairs {
            values.extend(std::iter::repeat_n(l, m as usize));
        }
        Spectrum::from_values(values, lambda_max, fingerprint, 0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total count with multiplicity.
    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.mult as u64).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.entries.len();
        (0..n).all(|i| {
            let a = self.entries[i];
            let b = self.entries[n - 1 - i];
            a.mult == b.mult && (a.lambda + b.lambda).abs() <= tol * a.lambda.abs().max(1.0)
        })
    }

    /// Entries with `|λ| ≤ lambda_max`, lowering the completeness bound.
    pub fn truncated(&self, lambda_max: f64) -> Spectrum {
        Spectrum {
            entries: self.entries.iter().copied().filter(|e| e.lambda.abs() <= lambda_max).collect(),
            lambda_max: lambda_max.min(self.lambda_max),
            fingerprint: self.fingerprint.clone(),
        }
    }

    /// Union with another spectrum; the completeness bound is the smaller one.
    pub fn union(&self, other: &Spectrum) -> Spectrum {
        let lambda_max = self.lambda_max.min(other.lambda_max);
        let mut pairs: Vec<(f64, u32)> = self.entries.iter().map(|e| (e.lambda, e.mult)).collect();
        pairs.extend(other.entries.iter().map(|e| (e.lambda, e.mult)));
        let fp = format!("{}+{}", self.fingerprint, other.fingerprint);
        Spectrum::from_entries(&pairs, lambda_max, &fp)
    }

    /// Columnar text: `lambda mult` per line.
    pub fn table(&self) -> String {
        let mut out = String::from("# lambda\tmult\n");
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\n", crate::textio::fmt17(e.lambda), e.mult));
        }
        out
    }
}

/// Which half of the spectrum `counting_function` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountSide {
    /// `#{0 ≤ λ_n ≤ λ}`.
    #[default]
    NonNegative,
    /// `#{−λ ≤ λ_n ≤ 0}`, for symmetry checks.
    NonPositive,
}

/// `N(λ)`, the number of eigenvalues in `[0, λ]` with multiplicity.
pub fn counting_function(spectrum: &Spectrum, lambda: f64) -> Result<u64, SpectrumError> {
    counting_function_side(spectrum, lambda, CountSide::NonNegative)
}

pub fn counting_function_side(spectrum: &Spectrum, lambda: f64, side: CountSide) -> Result<u64, SpectrumError> {
    if lambda > spectrum.lambda_max {
        return Err(SpectrumError::BeyondCompleteness {
            lambda,
            lambda_max: spectrum.lambda_max,
        });
    }
    let es = &spectrum.entries;
    let count = match side {
        CountSide::NonNegative => {
            let lo = es.partition_point(|e| e.lambda < 0.0);
            let hi = es.partition_point(|e| e.lambda <= lambda);
            es[lo..hi.max(lo)].iter().map(|e| e.mult as u64).sum()
        }
        CountSide::NonPositive => {
            let lo = es.partition_point(|e| e.lambda < -lambda);
            let hi = es.partition_point(|e| e.lambda <= 0.0);
            es[lo..hi.max(lo)].iter().map(|e| e.mult as u64).sum()
        }
    };
    Ok(count)
}

/// `e^{−itλ}`.
pub fn evolve_mode(entry: &Entry, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -t * entry.lambda)
}

/// Picks the engine that applies to the model.
pub fn compute_spectrum(model: &StationaryModel, lambda_max: f64, tol: f64) -> Result<Spectrum, SpectrumError> {
    match model.cauchy {
        CauchyModel::Circle { .. } | CauchyModel::FlatTorus { .. } => match torus_spectrum(model, lambda_max) {
            Err(SpectrumError::NonConstant(_)) if matches!(model.cauchy, CauchyModel::Circle { .. }) => {
                ode_spectrum_circle(model, lambda_max, &OdeOptions { tol, ..OdeOptions::default() })
            }
            r => r,
        },
        CauchyModel::RoundSphere { .. } => sphere_spectrum(model, lambda_max),
        CauchyModel::Ellipsoid { .. } => Err(SpectrumError::Unsupported(
            "no spectral engine for ellipsoids; use the geodesics pipeline".into(),
        )),
    }
}

/// Hex fingerprint of a parameter description, for spectra built without a model.
pub(crate) fn param_fingerprint(desc: &str) -> String {
    Sha256::digest(desc.as_bytes()).iter().take(16).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn merging_and_counting() {
        let s = Spectrum::from_values(vec![1.0, -1.0, 0.0, 0.0, 1.0 + 1e-15, 2.0], 2.0, "x", MERGE_TOL);
        assert_eq!(s.entries.len(), 4);
        assert_eq!(s.entries[2].mult, 2);
        assert_eq!(counting_function(&s, 1.5).unwrap(), 4);
        assert_eq!(counting_function_side(&s, 1.5, CountSide::NonPositive).unwrap(), 3);
        assert!(matches!(
            counting_function(&s, 2.5),
            Err(SpectrumError::BeyondCompleteness { .. })
        ));
    }

    #[test]
    fn evolve_examples() {
        let e = Entry { lambda: 1.0, mult: 1 };
        assert!((evolve_mode(&e, std::f64::consts::PI) + 1.0).norm() < 1e-15);
        let z = Entry { lambda: 0.0, mult: 1 };
        assert_eq!(evolve_mode(&z, 3.7), Complex64::new(1.0, 0.0));
    }

    proptest! {
        #[test]
        fn evolve_group_law(l in -50.0..50.0f64, t in -10.0..10.0f64, s in -10.0..10.0f64) {
            let e = Entry { lambda: l, mult: 1 };
            let lhs = evolve_mode(&e, t + s);
            let rhs = evolve_mode(&e, t) * evolve_mode(&e, s);
            prop_assert!((lhs - rhs).norm() < 1e-12);
            prop_assert!((lhs.norm() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn union_adds_counts(a in proptest::collection::vec(-10.0..10.0f64, 0..30),
                             b in proptest::collection::vec(-10.0..10.0f64, 0..30),
                             l in 0.0..10.0f64) {
            let sa = Spectrum::from_values(a, 10.0, "a", 0.0);
            let sb = Spectrum::from_values(b, 10.0, "b", 0.0);
            let u = sa.union(&sb);
            prop_assert_eq!(counting_function(&u, l).unwrap(),
                counting_function(&sa, l).unwrap() + counting_function(&sb, l).unwrap());
        }
    }
}
