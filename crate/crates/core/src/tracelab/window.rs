//! Admissible mollifiers `ρ` with compactly supported time-side kernels.
//!
//! Both kinds are normalized so that `ρ(0) = 1`, i.e. the time kernel `K`
//! with `ρ(λ) = ∫K(t)e^{iλt}dt` has unit integral.
//!
//! * Fejér: `K(t) = (1 − |t|/ε)/ε` on `(−ε, ε)`, `ρ(λ) = sinc²(ελ/2)`. Not
//!   strictly positive: `ρ` vanishes at `λ ∈ 2πℤ/ε \ {0}`.
//! * bump-squared: `K = φ ∗ φ` for the bump `φ(t) ∝ exp(−1/(1 − (2t/ε)²))`,
//!   `ρ = φ̂²`. `φ̂` is tabulated once in the scaled variable `μ = ελ/2` and
//!   interpolated with cubic Hermite splines.

use std::sync::OnceLock;

use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Fejer,
    BumpSquared,
}

impl std::fmt::Display for WindowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WindowKind::Fejer => "fejer",
            WindowKind::BumpSquared => "bump-squared",
        })
    }
}

impl std::str::FromStr for WindowKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fejer" => Ok(WindowKind::Fejer),
            "bump-squared" | "bump" => Ok(WindowKind::BumpSquared),
            other => Err(format!("unknown window kind `{other}` (expected fejer or bump-squared)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub kind: WindowKind,
    /// Half-width of the time-side support.
    pub epsilon: f64,
}

/// Values below this are treated as zero when truncating the bump table.
const BUMP_TRUNCATION: f64 = 1e-18;
const TABLE_STEP: f64 = 0.01;
const TABLE_END: f64 = 400.0;

/// Tabulated `R(μ) = φ̂(μ)²` for the unit bump on `(−1, 1)`.
struct BumpTable {
    rho: Vec<f64>,
    drho: Vec<f64>,
    /// `∫₀^{μ_i} R`.
    cumulative: Vec<f64>,
    /// `μ` beyond which `R < BUMP_TRUNCATION`.
    cutoff: f64,
    /// `∫(φ/∫φ)² ds` on the unit bump.
    l2: f64,
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_table() -> &'static BumpTable {
    static TABLE: OnceLock<BumpTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        // composite Gauss–Legendre on [0, 1]; the integrands are even in s
        let rule = gauss_legendre(16);
        let panels = 64;
        let mut nodes = Vec::with_capacity(panels * rule.len());
        for p in 0..panels {
            let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
            for &(x, w) in &rule {
                let s = 0.5 * (a + b) + 0.5 * (b - a) * x;
                nodes.push((s, 0.5 * (b - a) * w * bump(s)));
            }
        }
        let mass: f64 = 2.0 * nodes.iter().map(|(_, w)| w).sum::<f64>();
        let l2 = 2.0 * nodes.iter().map(|&(s, w)| w * bump(s)).sum::<f64>() / (mass * mass);
        let n = (TABLE_END / TABLE_STEP) as usize + 1;
        let mut rho = Vec::with_capacity(n);
        let mut drho = Vec::with_capacity(n);
        for i in 0..n {
            let mu = i as f64 * TABLE_STEP;
            let (mut f, mut df) = (0.0, 0.0);
            for &(s, w) in &nodes {
                let (sn, cs) = (mu * s).sin_cos();
                f += w * cs;
                df -= w * s * sn;
            }
            let (f, df) = (2.0 * f / mass, 2.0 * df / mass);
            rho.push(f * f);
            drho.push(2.0 * f * df);
        }
        let mut cumulative = vec![0.0; n];
        for i in 1..n {
            let h = TABLE_STEP;
            cumulative[i] = cumulative[i - 1] + 0.5 * h * (rho[i - 1] + rho[i]) + h * h / 12.0 * (drho[i - 1] - drho[i]);
        }
        let last = rho.iter().rposition(|&r| r >= BUMP_TRUNCATION).unwrap_or(0);
        BumpTable {
            rho,
            drho,
            cumulative,
            cutoff: (last + 1) as f64 * TABLE_STEP,
            l2,
        }
    })
}

impl BumpTable {
    fn locate(&self, mu: f64) -> Option<(usize, f64)> {
        let mu = mu.abs();
        if mu >= self.cutoff {
            return None;
        }
        let x = mu / TABLE_STEP;
        let i = (x.floor() as usize).min(self.rho.len() - 2);
        Some((i, x - i as f64))
    }

    fn value(&self, mu: f64) -> f64 {
        let Some((i, u)) = self.locate(mu) else { return 0.0 };
        let h = TABLE_STEP;
        let (y0, y1, d0, d1) = (self.rho[i], self.rho[i + 1], self.drho[i], self.drho[i + 1]);
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        (h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1).max(0.0)
    }

    /// `∫₀^{|μ|} R`.
    fn integral(&self, mu: f64) -> f64 {
        let Some((i, u)) = self.locate(mu) else {
            return self.total();
        };
        let h = TABLE_STEP;
        let (y0, y1, d0, d1) = (self.rho[i], self.rho[i + 1], self.drho[i], self.drho[i + 1]);
        // exact integral of the Hermite cubic over [0, u]
        let u2 = u * u;
        let u3 = u2 * u;
        let u4 = u3 * u;
        let i00 = u - u3 + 0.5 * u4;
        let i10 = 0.5 * u2 - 2.0 / 3.0 * u3 + 0.25 * u4;
        let i01 = u3 - 0.5 * u4;
        let i11 = 0.25 * u4 - u3 / 3.0;
        self.cumulative[i] + h * (i00 * y0 + i10 * h * d0 + i01 * y1 + i11 * h * d1)
    }

    fn total(&self) -> f64 {
        let i = ((self.cutoff / TABLE_STEP) as usize).min(self.cumulative.len() - 1);
        self.cumulative[i]
    }
}

impl Window {
    pub fn new(kind: WindowKind, epsilon: f64) -> Result<Window, String> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(format!("window half-width must be positive, got {epsilon}"));
        }
        Ok(Window { kind, epsilon })
    }

    pub fn fejer(epsilon: f64) -> Window {
        Window::new(WindowKind::Fejer, epsilon).expect("positive epsilon")
    }

    pub fn bump_squared(epsilon: f64) -> Window {
        Window::new(WindowKind::BumpSquared, epsilon).expect("positive epsilon")
    }

    /// `ρ(λ)`.
    pub fn rho(&self, lambda: f64) -> f64 {
        match self.kind {
            WindowKind::Fejer => {
                let x = 0.5 * self.epsilon * lambda;
                if x.abs() < 1e-8 {
                    1.0 - x * x / 3.0
                } else {
                    let s = x.sin() / x;
                    s * s
                }
            }
            WindowKind::BumpSquared => bump_table().value(0.5 * self.epsilon * lambda),
        }
    }

    /// Time-side kernel `K(t)`, supported in `(−ε, ε)`.
    pub fn kernel(&self, t: f64) -> f64 {
        let e = self.epsilon;
        match self.kind {
            WindowKind::Fejer => ((1.0 - t.abs() / e) / e).max(0.0),
            WindowKind::BumpSquared => {
                if t.abs() >= e {
                    return 0.0;
                }
                // (φ∗φ)(t) for φ the unit-mass bump on (−ε/2, ε/2)
                let rule = gauss_legendre(64);
                let half = 0.5 * e;
                let (a, b) = ((t - half).max(-half), (t + half).min(half));
                let phi = |s: f64| bump(s / half);
                let norm: f64 = rule.iter().map(|&(x, w)| w * half * phi(half * x)).sum();
                let conv: f64 = rule
                    .iter()
                    .map(|&(x, w)| {
                        let s = 0.5 * (a + b) + 0.5 * (b - a) * x;
                        0.5 * (b - a) * w * phi(s) * phi(t - s)
                    })
                    .sum();
                conv / (norm * norm)
            }
        }
    }

    /// `∫ρ dλ` over the real line.
    pub fn mass(&self) -> f64 {
        match self.kind {
            WindowKind::Fejer => std::f64::consts::TAU / self.epsilon,
            // Parseval: ∫ρ = 2π∫φ²
            WindowKind::BumpSquared => std::f64::consts::TAU * bump_table().l2 * 2.0 / self.epsilon,
        }
    }

    /// Tabulated `∫ρ dλ`, independent of the Parseval route in [`Window::mass`].
    #[cfg(test)]
    fn tabulated_mass(&self) -> Option<f64> {
        match self.kind {
            WindowKind::Fejer => None,
            WindowKind::BumpSquared => Some(2.0 * bump_table().total() * 2.0 / self.epsilon),
        }
    }

    /// Upper bound of `ρ(μ)` over `|μ| ≥ |λ|`.
    pub fn tail_bound(&self, lambda: f64) -> f64 {
        match self.kind {
            WindowKind::Fejer => {
                let x = 0.5 * self.epsilon * lambda.abs();
                if x <= 1.0 {
                    1.0
                } else {
                    1.0 / (x * x)
                }
            }
            WindowKind::BumpSquared => {
                let t = bump_table();
                let mu = 0.5 * self.epsilon * lambda.abs();
                if mu >= t.cutoff {
                    // φ̂(μ) decays like exp(−√(2μ)) for this bump
                    return BUMP_TRUNCATION * (-2.0 * ((2.0 * mu).sqrt() - (2.0 * t.cutoff).sqrt())).exp();
                }
                let i = (mu / TABLE_STEP) as usize;
                // the interpolant may overshoot the node values slightly near a local maximum
                1.01 * t.rho[i..].iter().copied().fold(BUMP_TRUNCATION, f64::max)
            }
        }
    }

    /// `|λ|` beyond which `ρ` is numerically zero; infinite for Fejér.
    pub fn support_radius(&self) -> f64 {
        match self.kind {
            WindowKind::Fejer => f64::INFINITY,
            WindowKind::BumpSquared => 2.0 * bump_table().cutoff / self.epsilon,
        }
    }

    /// `X(λ) = ∫_{−∞}^{λ} χ` for the unit-mass Tauberian window `χ = ρ / ∫ρ`.
    /// Only defined for compactly supported kernels with rapidly decaying `ρ`.
    pub fn tauberian_antiderivative(&self, lambda: f64) -> Option<f64> {
        match self.kind {
            WindowKind::Fejer => None,
            WindowKind::BumpSquared => {
                let t = bump_table();
                let half = t.integral(0.5 * self.epsilon * lambda) / t.total();
                Some(0.5 + 0.5 * half.copysign(lambda))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn fejer_examples() {
        let w = Window::fejer(1.0);
        assert_eq!(w.rho(0.0), 1.0);
        assert!(w.rho(TAU).abs() < 1e-30);
        for l in [0.3, 1.7, 5.0, 40.0] {
            assert!((w.rho(l) - w.rho(-l)).abs() <= 1e-15);
        }
    }

    #[test]
    fn fejer_kernel_transform() {
        // ρ(λ) = ∫ K(t) cos(λt) dt over (−ε, ε)
        let w = Window::fejer(1.3);
        for l in [0.0, 0.7, 3.0, 9.0] {
            let q = crate::quadrature::integrate(|t| w.kernel(t) * (l * t).cos(), 0.0, 1.3, 1e-13, 1 << 12).unwrap();
            assert!((2.0 * q.value - w.rho(l)).abs() < 1e-11, "{l}");
        }
    }

    #[test]
    fn bump_transform_matches_kernel() {
        let w = Window::bump_squared(2.0);
        assert!((w.rho(0.0) - 1.0).abs() < 1e-12);
        for l in [0.5, 2.0, 6.0, 15.0] {
            let q = crate::quadrature::integrate(|t| w.kernel(t) * (l * t).cos(), 0.0, 2.0, 1e-12, 1 << 10).unwrap();
            assert!((2.0 * q.value - w.rho(l)).abs() < 1e-9, "{l} {} {}", 2.0 * q.value, w.rho(l));
        }
        assert_eq!(w.kernel(2.0), 0.0);
        assert_eq!(w.kernel(-2.5), 0.0);
    }

    #[test]
    fn bump_mass_two_routes() {
        let w = Window::bump_squared(1.0);
        let a = w.mass();
        let b = w.tabulated_mass().unwrap();
        assert!((a - b).abs() / a < 1e-9, "{a} {b}");
        // 2π K(0) = ∫ρ as well
        assert!((TAU * w.kernel(0.0) - a).abs() / a < 1e-9);
    }

    #[test]
    fn tauberian_antiderivative_limits() {
        let w = Window::bump_squared(3.0);
        let x = |l| w.tauberian_antiderivative(l).unwrap();
        assert!((x(0.0) - 0.5).abs() < 1e-15);
        assert!((x(w.support_radius() + 1.0) - 1.0).abs() < 1e-15);
        assert!(x(-w.support_radius() - 1.0).abs() < 1e-15);
        assert!((x(1.3) + x(-1.3) - 1.0).abs() < 1e-14);
        assert!(Window::fejer(1.0).tauberian_antiderivative(0.0).is_none());
        let r = w.support_radius();
        assert!(r.is_finite() && w.rho(r) <= BUMP_TRUNCATION * w.rho(0.0));
    }

    #[test]
    fn positivity_dense_sample() {
        for w in [Window::fejer(0.7), Window::bump_squared(0.7)] {
            let min = (0..20000).map(|i| w.rho(i as f64 * 0.037 - 370.0)).fold(f64::INFINITY, f64::min);
            assert!(min >= 0.0);
        }
    }

    #[test]
    fn tail_bound_dominates() {
        for w in [Window::fejer(1.1), Window::bump_squared(1.1)] {
            for i in 0..4000 {
                let l = i as f64 * 0.13;
                let b = w.tail_bound(l);
                for j in 0..20 {
                    let m = l + j as f64 * 0.71;
                    assert!(w.rho(m) <= b * (1.0 + 1e-12) + 1e-300, "{:?} {l} {m}", w.kind);
                }
            }
        }
    }
}
