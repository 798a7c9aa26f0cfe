//! Charts and pointwise Riemannian data of the Cauchy surface.
//!
//! Circles and flat tori use a single periodic chart with unwrapped
//! coordinates. Spheres and ellipsoids use polar charts about one of the
//! three principal axes; every point lies well inside at least one of them.

use crate::Scalar;

/// Principal axis of an embedded surface; also names a polar chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// (pole, first equatorial, second equatorial) embedding indices.
    pub(crate) fn frame(self) -> (usize, usize, usize) {
        match self {
            Axis::Z => (2, 0, 1),
            Axis::X => (0, 1, 2),
            Axis::Y => (1, 2, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    /// Flat periodic chart (circle, torus); coordinates are not wrapped.
    Periodic,
    /// Polar chart (colatitude, azimuth) with poles on the given axis.
    Polar(Axis),
}

/// A point of the Cauchy surface in a chart. Unused trailing coordinates are 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPoint {
    pub chart: Chart,
    pub q: [f64; 2],
}

impl SigmaPoint {
    pub fn periodic(q: [f64; 2]) -> SigmaPoint {
        SigmaPoint {
            chart: Chart::Periodic,
            q,
        }
    }

    pub fn circle(x: f64) -> SigmaPoint {
        SigmaPoint::periodic([x, 0.0])
    }

    pub fn polar(axis: Axis, colatitude: f64, azimuth: f64) -> SigmaPoint {
        SigmaPoint {
            chart: Chart::Polar(axis),
            q: [colatitude, azimuth],
        }
    }
}

pub(crate) type Mat2<T> = [[T; 2]; 2];

pub(crate) fn det2<T: Scalar>(m: &Mat2<T>) -> T {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub(crate) fn inv2<T: Scalar>(m: &Mat2<T>) -> Mat2<T> {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

/// Lower Cholesky factor of a symmetric positive 2x2 matrix.
pub(crate) fn cholesky2(m: &Mat2<f64>) -> Mat2<f64> {
    let l00 = m[0][0].sqrt();
    let l10 = m[1][0] / l00;
    let l11 = (m[1][1] - l10 * l10).sqrt();
    [[l00, 0.0], [l10, l11]]
}

/// Embedded triaxial ellipsoid with semi-axes `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Ellipsoid {
    pub s: [f64; 3],
}

impl Ellipsoid {
    pub fn embed<T: Scalar>(&self, axis: Axis, q: [T; 2]) -> [T; 3] {
        let (p, u, v) = axis.frame();
        let (sf, cf) = q[0].sin_cos();
        let (sp, cp) = q[1].sin_cos();
        let mut out = [T::from(0.0); 3];
        out[p] = cf * self.s[p];
        out[u] = sf * cp * self.s[u];
        out[v] = sf * sp * self.s[v];
        out
    }

    /// Columns d/dcolatitude and d/dazimuth of the embedding.
    pub fn tangents<T: Scalar>(&self, axis: Axis, q: [T; 2]) -> [[T; 3]; 2] {
        let (p, u, v) = axis.frame();
        let (sf, cf) = q[0].sin_cos();
        let (sp, cp) = q[1].sin_cos();
        let zero = T::from(0.0);
        let mut d_col = [zero; 3];
        let mut d_az = [zero; 3];
        d_col[p] = -sf * self.s[p];
        d_col[u] = cf * cp * self.s[u];
        d_col[v] = cf * sp * self.s[v];
        d_az[p] = zero;
        d_az[u] = -sf * sp * self.s[u];
        d_az[v] = sf * cp * self.s[v];
        [d_col, d_az]
    }

    /// Chart coordinates of an embedded point.
    #[cfg(test)]
    pub fn chart_coords(&self, axis: Axis, x: [f64; 3]) -> [f64; 2] {
        let (p, u, v) = axis.frame();
        let c = (x[p] / self.s[p]).clamp(-1.0, 1.0);
        let colat = c.acos();
        let mut az = (x[v] / self.s[v]).atan2(x[u] / self.s[u]);
        if az < 0.0 {
            az += std::f64::consts::TAU;
        }
        [colat, az]
    }

    /// Chart whose poles are farthest from the embedded point.
    pub fn best_axis(&self, x: [f64; 3]) -> Axis {
        let mut best = Axis::Z;
        let mut best_val = f64::INFINITY;
        for axis in [Axis::Z, Axis::X, Axis::Y] {
            let (p, _, _) = axis.frame();
            let val = (x[p] / self.s[p]).abs();
            if val < best_val - 1e-12 {
                best_val = val;
                best = axis;
            }
        }
        best
    }

    /// Outward unit normal at an embedded point.
    pub fn normal(&self, x: [f64; 3]) -> [f64; 3] {
        let g = [
            x[0] / (self.s[0] * self.s[0]),
            x[1] / (self.s[1] * self.s[1]),
            x[2] / (self.s[2] * self.s[2]),
        ];
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        [g[0] / n, g[1] / n, g[2] / n]
    }
}

pub(crate) fn dot3<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
