//! Composite Gauss–Legendre quadrature with panel doubling.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Nodes per panel.
const ORDER: usize = 10;

/// A quadrature value with the difference between the last two refinements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n.max(1)).unwrap();
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}

/// Composite rule with `panels` equal panels.
pub fn composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in rule {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Doubles the number of panels until two refinements agree to `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Option<Quadrature> {
    let rule = gauss_legendre(ORDER);
    let mut panels = 2;
    let mut prev = composite(&f, a, b, panels, &rule);
    while panels < max_panels {
        panels *= 2;
        let next = composite(&f, a, b, panels, &rule);
        let diff = (next - prev).abs();
        if !next.is_finite() {
            return None;
        }
        if diff <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return Some(Quadrature {
                value: next,
                error_estimate: diff,
                panels,
            });
        }
        prev = next;
    }
    None
}

/// Tensor-product version of [`integrate`] over a rectangle.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    x: [f64; 2],
    y: [f64; 2],
    rel_tol: f64,
    max_panels: usize,
) -> Option<Quadrature> {
    let rule = gauss_legendre(ORDER);
    let eval = |panels: usize| {
        let inner = |u: f64| composite(&|v: f64| f(u, v), y[0], y[1], panels, &rule);
        composite(&inner, x[0], x[1], panels, &rule)
    };
    let mut panels = 2;
    let mut prev = eval(panels);
    while panels < max_panels {
        panels *= 2;
        let next = eval(panels);
        if !next.is_finite() {
            return None;
        }
        let diff = (next - prev).abs();
        if diff <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return Some(Quadrature {
                value: next,
                error_estimate: diff,
                panels,
            });
        }
        prev = next;
    }
    None
}
