//! Power-law fits of the counting function and Tauberian smoothing.

use super::{TraceError, Window};
use crate::spectra::Spectrum;
use crate::StationaryModel;

const MIN_EIGENVALUES: u64 = 100;
const FIT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylFit {
    /// Leading coefficient `C` of `N(λ) ≈ C λ^p + B λ^{p−1}`, `p` the rounded exponent.
    pub prefactor: f64,
    /// Least-squares slope of `log N` against `log λ`.
    pub exponent: f64,
    /// RMS deviation of `log N` from the fitted line.
    pub residual: f64,
    /// Eigenvalues (with multiplicity) in the fit range.
    pub count: u64,
}

/// Nonnegative eigenvalues and the cumulative multiplicity up to each.
fn nonnegative(spectrum: &Spectrum) -> (Vec<f64>, Vec<u64>) {
    let mut lam = Vec::new();
    let mut cum = Vec::new();
    let mut acc = 0;
    for e in spectrum.entries.iter().filter(|e| e.lambda >= 0.0) {
        acc += e.mult as u64;
        lam.push(e.lambda);
        cum.push(acc);
    }
    (lam, cum)
}

/// `#{0 ≤ λ_n ≤ x}` from the cumulative table.
fn count_upto(lam: &[f64], cum: &[u64], x: f64) -> u64 {
    match lam.partition_point(|&l| l <= x) {
        0 => 0,
        i => cum[i - 1],
    }
}

/// `#{0 ≤ λ_n < x}`.
fn count_below(lam: &[f64], cum: &[u64], x: f64) -> u64 {
    match lam.partition_point(|&l| l < x) {
        0 => 0,
        i => cum[i - 1],
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let b = sxy / sxx;
    (b, my - b * mx)
}

/// Fits `N(λ) = #{0 ≤ λ_n ≤ λ}` over `range` on a geometric grid.
pub fn weyl_fit(spectrum: &Spectrum, range: (f64, f64)) -> Result<WeylFit, TraceError> {
    let (a, b) = range;
    if !(a > 0.0 && b > a) {
        return Err(TraceError::Invalid(format!("fit range [{a}, {b}] must satisfy 0 < a < b")));
    }
    if b > spectrum.lambda_max {
        return Err(TraceError::CompletenessViolation(format!(
            "fit range ends at {b} beyond the completeness bound {}",
            spectrum.lambda_max
        )));
    }
    let (lam, cum) = nonnegative(spectrum);
    let count = count_upto(&lam, &cum, b) - count_below(&lam, &cum, a);
    if count < MIN_EIGENVALUES {
        return Err(TraceError::InsufficientData {
            found: count,
            needed: MIN_EIGENVALUES,
        });
    }
    let r = (b / a).ln();
    let xs: Vec<f64> = (0..FIT_SAMPLES)
        .map(|i| a * (r * i as f64 / (FIT_SAMPLES - 1) as f64).exp())
        .collect();
    let ns: Vec<f64> = xs.iter().map(|&x| count_upto(&lam, &cum, x) as f64).collect();
    if ns[0] <= 0.0 {
        return Err(TraceError::InsufficientData { found: 0, needed: 1 });
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let (exponent, icpt) = slope(&lx, &ly);
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - exponent * x - icpt).powi(2))
        .sum::<f64>()
        / FIT_SAMPLES as f64)
        .sqrt();

    // N ≈ C x^p + B x^{p−1}: linear least squares in (C, B), scaled by x^p
    let p = exponent.round().max(1.0) as i32;
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &n) in xs.iter().zip(&ns) {
        let (u, v, y) = (1.0, 1.0 / x, n / x.powi(p));
        s11 += u * u;
        s12 += u * v;
        s22 += v * v;
        t1 += u * y;
        t2 += v * y;
    }
    let prefactor = (t1 * s22 - t2 * s12) / (s11 * s22 - s12 * s12);
    Ok(WeylFit {
        prefactor,
        exponent,
        residual,
        count,
    })
}

/// `r̂ · vol(𝒩_{H≤1}) / (2π)^{d−1}` with `r̂ = rank/2`.
pub fn weyl_prediction(model: &StationaryModel, volume: f64) -> f64 {
    let d = model.dimension as i32;
    0.5 * model.rank() as f64 * volume / std::f64::consts::TAU.powi(d - 1)
}

/// `(χ ∗ N)(λ) = Σ_{λ_n ≥ 0} m_n X(λ − λ_n)` on `grid`, with `X` the
/// antiderivative of the unit-mass window.
pub fn tauberian_smooth(spectrum: &Spectrum, window: &Window, grid: &[f64]) -> Result<Vec<f64>, TraceError> {
    if window.tauberian_antiderivative(0.0).is_none() {
        return Err(TraceError::CompletenessViolation(format!(
            "{} window has no compact spectral support; the smoothed count needs the whole spectrum",
            window.kind
        )));
    }
    let radius = window.support_radius();
    if let Some(&x) = grid.iter().find(|&&x| x + radius > spectrum.lambda_max) {
        return Err(TraceError::CompletenessViolation(format!(
            "λ = {x} plus window radius {radius} exceeds the completeness bound {}",
            spectrum.lambda_max
        )));
    }
    let (lam, cum) = nonnegative(spectrum);
    Ok(grid
        .iter()
        .map(|&x| {
            let lo = x - radius;
            let i0 = lam.partition_point(|&l| l < lo);
            let i1 = lam.partition_point(|&l| l <= x + radius);
            let below = if i0 == 0 { 0 } else { cum[i0 - 1] } as f64;
            let mut acc = 0.0;
            for i in i0..i1 {
                let m = (cum[i] - if i == 0 { 0 } else { cum[i - 1] }) as f64;
                acc += m * window.tauberian_antiderivative(x - lam[i]).unwrap_or(0.0);
            }
            below + acc
        })
        .collect())
}

/// Remainder `R(λ) = (χ∗N)(λ) − C λ^{d−1}` measured against `λ^order`.
#[derive(Debug, Clone, PartialEq)]
pub struct RemainderBand {
    pub order: f64,
    /// `max |R| / λ^order` over the lower and upper half of the grid.
    pub constant_lower: f64,
    pub constant_upper: f64,
    /// Slope of `log |R|` against `log λ`, when `R` stays away from zero.
    pub slope: Option<f64>,
    pub max_abs: f64,
    pub within: bool,
}

/// Checks that the remainder grows no faster than `λ^order`: the band
/// constant may not increase along the grid by more than half, and the log
/// slope may not exceed `order + 0.1`.
pub fn remainder_band(grid: &[f64], smoothed: &[f64], leading: f64, exponent: f64, order: f64) -> Result<RemainderBand, TraceError> {
    if grid.len() != smoothed.len() || grid.len() < 4 {
        return Err(TraceError::Invalid("remainder band needs at least four matching samples".into()));
    }
    let r: Vec<f64> = grid
        .iter()
        .zip(smoothed)
        .map(|(&x, &s)| s - leading * x.powf(exponent))
        .collect();
    let h = grid.len() / 2;
    let band = |idx: std::ops::Range<usize>| idx.map(|i| r[i].abs() / grid[i].powf(order)).fold(0.0, f64::max);
    let constant_lower = band(0..h);
    let constant_upper = band(h..grid.len());
    let max_abs = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-3 * max_abs;
    let slope = if max_abs > 0.0 && r.iter().all(|v| v.abs() > floor) {
        let lx: Vec<f64> = grid.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = r.iter().map(|v| v.abs().ln()).collect();
        Some(self::slope(&lx, &ly).0)
    } else {
        None
    };
    let scale = leading * grid[grid.len() - 1].powf(exponent);
    let within = constant_upper <= 1.5 * constant_lower + 1e-12 * scale && slope.map_or(true, |s| s <= order + 0.1);
    Ok(RemainderBand {
        order,
        constant_lower,
        constant_upper,
        slope,
        max_abs,
        within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;
    use crate::spectra::{counting_function, round_sphere_spectrum, torus_spectrum};
    use crate::ModelConfig;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn circle(alpha: f64, lmax: f64) -> Spectrum {
        torus_spectrum(&build_model(&ModelConfig::circle(TAU, 1.0, alpha, 0.0)).unwrap(), lmax).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn circle_constants() {
        let f = weyl_fit(&circle(0.0, 2000.0), (20.0, 2000.0)).unwrap();
        assert!((f.exponent - 1.0).abs() < 0.02, "{f:?}");
        assert!((f.prefactor / 2.0 - 1.0).abs() < 0.01, "{f:?}");
        let f = weyl_fit(&circle(0.5, 2000.0), (20.0, 2000.0)).unwrap();
        assert!((f.prefactor / (8.0 / 3.0) - 1.0).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn sphere_constant() {
        let f = weyl_fit(&round_sphere_spectrum(1.0, 200.0), (20.0, 200.0)).unwrap();
        assert!((f.exponent - 2.0).abs() < 0.02, "{f:?}");
        assert!((f.prefactor - 1.0).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn predictions_from_volume() {
        let m = build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.0)).unwrap();
        assert!((weyl_prediction(&m, 4.0 * PI) - 2.0).abs() < 1e-15);
        let m = build_model(&ModelConfig::circle(TAU, 1.0, 0.5, 0.0)).unwrap();
        assert!((weyl_prediction(&m, 16.0 * PI / 3.0) - 8.0 / 3.0).abs() < 1e-14);
        let m = build_model(&ModelConfig::sphere(1.0, 1.0, 0.0)).unwrap();
        assert!((weyl_prediction(&m, 4.0 * PI * PI) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fit_errors() {
        let s = circle(0.0, 100.0);
        assert!(matches!(weyl_fit(&s, (1.0, 20.0)), Err(TraceError::InsufficientData { .. })));
        assert!(matches!(weyl_fit(&s, (10.0, 200.0)), Err(TraceError::CompletenessViolation(_))));
    }

    #[test]
    fn smoothed_circle_has_bounded_remainder() {
        let w = Window::bump_squared(4.0);
        let g = grid(10.0, 100.0, 181);
        for (alpha, c) in [(0.0, 2.0), (0.5, 8.0 / 3.0)] {
            let s = tauberian_smooth(&circle(alpha, 300.0), &w, &g).unwrap();
            let band = remainder_band(&g, &s, c, 1.0, 0.0).unwrap();
            assert!(band.within, "{band:?}");
            assert!(band.max_abs < 2.0, "{band:?}");
        }
    }

    #[test]
    fn smoothed_sphere_remainder_is_linear_at_most() {
        let w = Window::bump_squared(4.0);
        let g = grid(10.0, 190.0, 181);
        let s = tauberian_smooth(&round_sphere_spectrum(1.0, 360.0), &w, &g).unwrap();
        let band = remainder_band(&g, &s, 1.0, 2.0, 1.0).unwrap();
        assert!(band.within, "{band:?}");
        assert!(band.slope.map_or(true, |p| p <= 1.1));
    }

    #[test]
    fn smoothing_requires_completeness() {
        let g = [10.0, 150.0];
        assert!(tauberian_smooth(&circle(0.0, 300.0), &Window::bump_squared(4.0), &g).is_err());
        assert!(tauberian_smooth(&circle(0.0, 300.0), &Window::fejer(4.0), &g[..1]).is_err());
    }

    #[test]
    fn approximate_identity_for_wide_time_windows() {
        // a wider time support means a narrower χ, so χ∗N → N at continuity points
        let s = circle(0.5, 400.0);
        let pts = [10.3, 17.1, 25.75, 40.4];
        let exact: Vec<f64> = pts.iter().map(|&x| counting_function(&s, x).unwrap() as f64).collect();
        let err = |eps: f64| {
            let v = tauberian_smooth(&s, &Window::bump_squared(eps), &pts).unwrap();
            v.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let errs: Vec<f64> = [4.0, 16.0, 64.0, 256.0].iter().map(|&e| err(e)).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] < 1e-3, "{errs:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn smoothing_is_monotone_and_below_total(x in 5.0f64..120.0, dx in 0.01f64..5.0) {
            let s = circle(0.3, 300.0);
            let w = Window::bump_squared(4.0);
            let v = tauberian_smooth(&s, &w, &[x, x + dx]).unwrap();
            prop_assert!(v[1] >= v[0] - 1e-9);
            prop_assert!(v[1] <= counting_function(&s, 300.0).unwrap() as f64);
        }
    }
}
