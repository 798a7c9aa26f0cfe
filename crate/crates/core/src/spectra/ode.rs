//! Transfer-matrix quantization on the circle.
//!
//! In the half-density frame the Dirac equation restricted to `e^{−iλt}`
//! modes is the first-order system `u' = A(x, λ) u` with
//! `A = iλ diag(1/(α+β), −1/(β−α)) + ½ diag(w₁'/w₁, w₂'/w₂)`, `w_j` the
//! diagonal of the first term. Eigenvalues are the `λ` at which an
//! eigenvalue of the x-monodromy equals the twist phase `e^{2πiθ}`.

use std::f64::consts::TAU;

use nalgebra::Matrix2;
use num_complex::Complex64;
use num_dual::Dual64;
use rayon::prelude::*;

use super::{Spectrum, SpectrumError};
use crate::models::{CauchyModel, Chart, StationaryModel};

type C2 = Matrix2<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    /// Absolute tolerance of each refined root.
    pub tol: f64,
    /// Magnus steps per circuit at the first resolution.
    pub initial_steps: usize,
    /// Two successive resolutions must agree to this (relative to `max(1, |λ|)`).
    pub agree_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tol: 1e-10,
            initial_steps: 4096,
            agree_tol: 1e-9,
            max_steps: 1 << 17,
        }
    }
}

/// `A(x, λ) = iλ D(x) + E(x)` sampled at the two Gauss nodes of every step.
struct Coefficients {
    h: f64,
    d: Vec<[C2; 2]>,
    e: Vec<[C2; 2]>,
    /// Circuit times `∮|w_j|` of the two branches.
    times: [f64; 2],
    /// `max |β'|/β · L`, a crude stiffness indicator.
    stiffness: f64,
}

fn diag(a: f64, b: f64) -> C2 {
    C2::new(Complex64::new(a, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(b, 0.0))
}

impl Coefficients {
    fn new(model: &StationaryModel, length: f64, steps: usize) -> Coefficients {
        let h = length / steps as f64;
        let c = 3f64.sqrt() / 6.0;
        let mut d = Vec::with_capacity(steps);
        let mut e = Vec::with_capacity(steps);
        let mut times = [0.0; 2];
        let mut stiffness: f64 = 0.0;
        for n in 0..steps {
            let mut dn = [C2::zeros(); 2];
            let mut en = [C2::zeros(); 2];
            for (j, off) in [0.5 - c, 0.5 + c].into_iter().enumerate() {
                let x = Dual64::from_re((n as f64 + off) * h).derivative();
                let g = model.local(Chart::Periodic, [x, Dual64::from_re(0.0)]);
                let (beta, alpha) = (g.lapse, g.shift[0]);
                let left = alpha + beta;
                let right = beta - alpha;
                dn[j] = diag(1.0 / left.re, -1.0 / right.re);
                en[j] = diag(-0.5 * left.eps / left.re, -0.5 * right.eps / right.re);
                times[0] += 0.5 * h / left.re;
                times[1] += 0.5 * h / right.re;
                stiffness = stiffness.max((beta.eps / beta.re).abs() * length);
            }
            d.push(dn);
            e.push(en);
        }
        Coefficients { h, d, e, times, stiffness }
    }

    /// Fourth-order Magnus monodromy over one circuit.
    fn monodromy(&self, lambda: f64) -> C2 {
        let il = Complex64::new(0.0, lambda);
        let h = Complex64::new(self.h, 0.0);
        let k = Complex64::new(3f64.sqrt() / 12.0 * self.h * self.h, 0.0);
        let mut m = C2::identity();
        for (dn, en) in self.d.iter().zip(&self.e) {
            let a1 = dn[0] * il + en[0];
            let a2 = dn[1] * il + en[1];
            let omega = (a1 + a2) * (h * 0.5) + (a2 * a1 - a1 * a2) * k;
            m = expm2(&omega) * m;
        }
        m
    }
}

/// Closed-form exponential of a complex 2×2 matrix.
fn expm2(a: &C2) -> C2 {
    let t = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let b = a - C2::identity() * t;
    // B² = δ·Id for traceless B
    let delta = b[(0, 0)] * b[(0, 0)] + b[(0, 1)] * b[(1, 0)];
    let s = delta.sqrt();
    let sinhc = if s.norm() < 1e-6 {
        Complex64::new(1.0, 0.0) + delta / 6.0 + delta * delta / 120.0
    } else {
        s.sinh() / s
    };
    (C2::identity() * s.cosh() + b * sinhc) * t.exp()
}

/// Phases `arg(μ_j e^{−2πiθ})` of the monodromy eigenvalues, labelled by branch.
fn branch_phases(m: &C2, twist: Complex64) -> [f64; 2] {
    let half = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let diff = (m[(0, 0)] - m[(1, 1)]) * 0.5;
    let disc = (diff * diff + m[(0, 1)] * m[(1, 0)]).sqrt();
    let (mut mu0, mut mu1) = (half + disc, half - disc);
    if (mu0 - m[(0, 0)]).norm() + (mu1 - m[(1, 1)]).norm() > (mu1 - m[(0, 0)]).norm() + (mu0 - m[(1, 1)]).norm() {
        std::mem::swap(&mut mu0, &mut mu1);
    }
    [(mu0 * twist).arg(), (mu1 * twist).arg()]
}

/// Illinois false position on a sign-changing bracket.
fn refine<F: Fn(f64) -> f64>(f: F, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, tol: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        if (b - a).abs() < tol {
            return c;
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < tol {
            return (a * fb - b * fa) / (fb - fa);
        }
    }
    0.5 * (a + b)
}

fn usable_bracket(fa: f64, fb: f64) -> bool {
    fa * fb <= 0.0 && (fa - fb).abs() < std::f64::consts::PI
}

struct Root {
    lambda: f64,
    branch: usize,
}

fn grid_roots(coef: &Coefficients, twist: Complex64, lambda_max: f64, tol: f64) -> Result<Vec<Root>, SpectrumError> {
    let gap = TAU / coef.times[0].max(coef.times[1]);
    let step = 0.25 * gap;
    let k = (lambda_max / step).ceil() as i64 + 1;
    let grid: Vec<f64> = (-k..=k).map(|i| i as f64 * step).collect();
    let phases: Vec<[f64; 2]> = grid
        .par_iter()
        .map(|&l| branch_phases(&coef.monodromy(l), twist))
        .collect();
    if phases.iter().flatten().any(|p| !p.is_finite()) {
        return Err(SpectrumError::Bracketing("non-finite monodromy phase".into()));
    }
    let mut brackets = Vec::new();
    for i in 0..grid.len() - 1 {
        for j in 0..2 {
            let (fa, fb) = (phases[i][j], phases[i + 1][j]);
            if usable_bracket(fa, fb) {
                brackets.push((j, grid[i], fa, grid[i + 1], fb));
            }
        }
    }
    let mut roots: Vec<Root> = brackets
        .par_iter()
        .map(|&(j, a, fa, b, fb)| Root {
            lambda: refine(|l| branch_phases(&coef.monodromy(l), twist)[j], a, fa, b, fb, tol),
            branch: j,
        })
        .collect();
    roots.sort_by(|a, b| (a.branch, a.lambda).partial_cmp(&(b.branch, b.lambda)).unwrap());
    // a root sitting exactly on a grid point closes two brackets
    roots.dedup_by(|a, b| a.branch == b.branch && (a.lambda - b.lambda).abs() < 0.01 * gap);
    roots.retain(|r| r.lambda.abs() <= lambda_max);
    Ok(roots)
}

/// Re-refines known roots at a finer resolution, bracketing each locally.
fn polish(coef: &Coefficients, twist: Complex64, roots: &[Root], tol: f64) -> Option<Vec<Root>> {
    let gap = TAU / coef.times[0].max(coef.times[1]);
    let out: Vec<Option<Root>> = roots
        .par_iter()
        .map(|r| {
            let f = |l: f64| branch_phases(&coef.monodromy(l), twist)[r.branch];
            let mut w = 1e-7 * r.lambda.abs().max(1.0);
            while w < 0.1 * gap {
                let (a, b) = (r.lambda - w, r.lambda + w);
                let (fa, fb) = (f(a), f(b));
                if usable_bracket(fa, fb) {
                    return Some(Root {
                        lambda: refine(f, a, fa, b, fb, tol),
                        branch: r.branch,
                    });
                }
                w *= 16.0;
            }
            None
        })
        .collect();
    out.into_iter().collect()
}

/// Eigenvalues of `L` on a circle model with arbitrary smooth lapse and shift,
/// complete on `[−lambda_max, lambda_max]`.
pub fn ode_spectrum_circle(model: &StationaryModel, lambda_max: f64, opts: &OdeOptions) -> Result<Spectrum, SpectrumError> {
    let CauchyModel::Circle { length } = model.cauchy else {
        return Err(SpectrumError::Unsupported("the ODE engine handles circle models only".into()));
    };
    let theta = model.effective_twist()[0];
    let twist = Complex64::from_polar(1.0, -TAU * theta);
    let mut steps = opts.initial_steps.max(16);
    let coef = Coefficients::new(model, length, steps);
    if coef.stiffness > 50.0 {
        log::warn!(
            "lapse varies rapidly (max |β'|/β · L = {:.1}); monodromy integration may be stiff",
            coef.stiffness
        );
    }
    let mut roots = grid_roots(&coef, twist, lambda_max, opts.tol)?;
    loop {
        let next_steps = steps * 2;
        if next_steps > opts.max_steps {
            return Err(SpectrumError::NoConvergence {
                steps,
                diff: f64::NAN,
            });
        }
        let fine = Coefficients::new(model, length, next_steps);
        let polished = match polish(&fine, twist, &roots, opts.tol) {
            Some(p) => p,
            None => grid_roots(&fine, twist, lambda_max, opts.tol)?,
        };
        let diff = if polished.len() == roots.len() {
            roots
                .iter()
                .zip(&polished)
                .map(|(a, b)| (a.lambda - b.lambda).abs() / a.lambda.abs().max(1.0))
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        roots = polished;
        steps = next_steps;
        if diff <= opts.agree_tol {
            break;
        }
        if steps * 2 > opts.max_steps {
            return Err(SpectrumError::NoConvergence { steps, diff });
        }
    }
    let values = roots.iter().map(|r| r.lambda).collect();
    Ok(Spectrum::from_values(values, lambda_max, model.fingerprint(), 10.0 * opts.tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;
    use crate::spectra::torus_spectrum;
    use crate::ModelConfig;

    #[test]
    fn expm_matches_series() {
        let a = C2::new(
            Complex64::new(0.1, 0.3),
            Complex64::new(-0.2, 0.05),
            Complex64::new(0.4, -0.1),
            Complex64::new(-0.3, 0.2),
        );
        let mut term = C2::identity();
        let mut sum = C2::identity();
        for n in 1..30 {
            term = term * a / Complex64::new(n as f64, 0.0);
            sum += term;
        }
        assert!((expm2(&a) - sum).norm() < 1e-14);
        assert!((expm2(&C2::zeros()) - C2::identity()).norm() < 1e-16);
    }

    #[test]
    fn constant_coefficients_match_closed_form() {
        for (beta, alpha, theta) in [(1.0, 0.5, 0.0), (2.0, 0.0, 0.0), (1.0, -0.3, 0.37)] {
            let m = build_model(&ModelConfig::circle(TAU, beta, alpha, theta)).unwrap();
            let ode = ode_spectrum_circle(&m, 20.2, &OdeOptions::default()).unwrap();
            let exact = torus_spectrum(&m, 20.2).unwrap();
            assert_eq!(ode.len(), exact.len(), "β={beta} α={alpha}");
            for (a, b) in ode.entries.iter().zip(&exact.entries) {
                assert_eq!(a.mult, b.mult);
                assert!((a.lambda - b.lambda).abs() < 1e-9, "{} {}", a.lambda, b.lambda);
            }
        }
    }

    #[test]
    fn lapse_two_gives_even_integers() {
        let m = build_model(&ModelConfig::circle(TAU, 2.0, 0.0, 0.0)).unwrap();
        let s = ode_spectrum_circle(&m, 9.0, &OdeOptions::default()).unwrap();
        let got: Vec<f64> = s.entries.iter().map(|e| e.lambda).collect();
        let expect = [-8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0];
        assert_eq!(got.len(), expect.len());
        for (a, b) in got.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn variable_lapse_spacing() {
        let m = build_model(&ModelConfig::circle_expr(TAU, "1 + 0.3*cos(x)", "0", 0.0)).unwrap();
        let s = ode_spectrum_circle(&m, 15.0, &OdeOptions::default()).unwrap();
        let t_eff = TAU / (1.0f64 - 0.09).sqrt();
        let spacing = TAU / t_eff;
        assert!((spacing - 0.9539392014169456).abs() < 1e-12);
        for w in s.entries.windows(2) {
            assert!(((w[1].lambda - w[0].lambda) / spacing - 1.0).abs() < 1e-9);
        }
        assert!(s.entries.iter().all(|e| e.mult == 2));
    }
}
