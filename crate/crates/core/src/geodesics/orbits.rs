//! Periodic orbits of the reduced flow.
//!
//! Circles, flat tori and the round sphere use closed forms. Triaxial
//! ellipsoids use Newton shooting on a Poincaré section through the three
//! principal planes.

use std::fmt;

use nalgebra::{DMatrix, Matrix2, Vector2};

use super::flow::{self, State};
use super::holonomy::{flat_holonomy, holonomy_phase, surface_holonomy};
use super::monodromy::{conjugate_points, det_i_minus_p, poincare_map};
use super::{strip_distance, strip_energy, GeodesicError, GeodesicStrip, DEGENERACY_TOL, PERIOD_DEDUP};
use crate::models::{cholesky2, Axis, CauchyModel, Chart, Endo, SigmaPoint, StationaryModel};
use crate::quadrature;
use crate::textio::fmt17;

/// Orbit family label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Circle strips with `k > 0` (moving towards decreasing `x`).
    Left,
    /// Circle strips with `k < 0`.
    Right,
    /// Straight torus orbits with primitive lattice displacement.
    Lattice([i64; 2]),
    /// Great circles of a non-rotating round sphere.
    Zoll,
    /// Equator of a rotating sphere, moving with (`true`) or against the rotation.
    Equator { prograde: bool },
    /// Ellipsoid orbit in the principal plane orthogonal to `normal`.
    Principal { normal: Axis, reversed: bool },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Left => write!(f, "left"),
            Family::Right => write!(f, "right"),
            Family::Lattice([a, b]) => write!(f, "lattice({a},{b})"),
            Family::Zoll => write!(f, "zoll"),
            Family::Equator { prograde: true } => write!(f, "equator+"),
            Family::Equator { prograde: false } => write!(f, "equator-"),
            Family::Principal { normal, reversed } => {
                write!(f, "principal-{:?}{}", normal, if *reversed { "-" } else { "+" })
            }
        }
    }
}

/// A closed strip with its classical data.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    /// Basepoint normalized to unit energy.
    pub strip: GeodesicStrip,
    pub period: f64,
    pub primitive_period: f64,
    pub repetition: u32,
    pub family: Family,
    /// Winding numbers per fundamental cycle (flat models).
    pub winding: Vec<i64>,
    pub monodromy: DMatrix<f64>,
    pub det_i_minus_p: f64,
    pub maslov: u32,
    pub endpoint_conjugate: bool,
    pub holonomy: Endo,
    pub nondegenerate: bool,
}

/// A seed of the numerical orbit search that did not converge.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrbitSearch {
    pub orbits: Vec<PeriodicOrbit>,
    pub failures: Vec<SeedFailure>,
}

impl OrbitSearch {
    /// Distinct periods, merged within the deduplication tolerance.
    pub fn periods(&self) -> Vec<f64> {
        let mut ps: Vec<f64> = self.orbits.iter().map(|o| o.period).collect();
        ps.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for p in ps {
            match out.last() {
                Some(&q) if (p - q).abs() <= PERIOD_DEDUP * p.max(1.0) => {}
                _ => out.push(p),
            }
        }
        out
    }

    /// Orbits whose period equals `t` within `tol`.
    pub fn with_period(&self, t: f64, tol: f64) -> Vec<&PeriodicOrbit> {
        self.orbits.iter().filter(|o| (o.period - t).abs() <= tol).collect()
    }
}

struct Primitive {
    strip: GeodesicStrip,
    period: f64,
    family: Family,
    winding: Vec<i64>,
}

/// All periodic orbits with period at most `t_max`, each re-validated by
/// flowing its basepoint for one period to within `tol`.
pub fn find_periodic_orbits(model: &StationaryModel, t_max: f64, tol: f64) -> Result<OrbitSearch, GeodesicError> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(GeodesicError::Invalid(format!("T_max must be positive, got {t_max}")));
    }
    let mut failures = Vec::new();
    let prims = match model.cauchy {
        CauchyModel::Circle { length } => circle_orbits(model, length)?,
        CauchyModel::FlatTorus { lengths } => torus_orbits(model, lengths, t_max)?,
        CauchyModel::RoundSphere { radius } => sphere_orbits(model, radius)?,
        CauchyModel::Ellipsoid { .. } => ellipsoid_orbits(model, &mut failures),
    };
    let mut orbits = Vec::new();
    for p in prims {
        if p.period > t_max * (1.0 + PERIOD_DEDUP) {
            continue;
        }
        let back = super::flow_strip(model, &p.strip, p.period);
        let dist = strip_distance(model, &p.strip, &back);
        if dist > tol {
            failures.push(SeedFailure {
                seed: format!("{} T={}", p.family, p.period),
                reason: format!("closure defect {dist:e} exceeds {tol:e}"),
            });
            continue;
        }
        let (p_mat, prim_hol) = if model.spatial_dim() == 1 {
            (DMatrix::zeros(0, 0), None)
        } else {
            let pm = poincare_map(model, &p.strip, p.period)?;
            let hol = if model.cauchy.is_flat() {
                None
            } else {
                Some(surface_holonomy(model, &p.strip, p.period)?)
            };
            (DMatrix::from_column_slice(2, 2, pm.as_slice()), hol)
        };
        let reps = (t_max * (1.0 + PERIOD_DEDUP) / p.period).floor() as u32;
        let mut pm = DMatrix::identity(p_mat.nrows(), p_mat.ncols());
        for m in 1..=reps {
            pm = &p_mat * &pm;
            let det = det_i_minus_p(&pm);
            let nondegenerate = det.abs() > DEGENERACY_TOL;
            let winding: Vec<i64> = p.winding.iter().map(|w| w * m as i64).collect();
            let holonomy = match &prim_hol {
                Some(h) => h.pow(m),
                None => flat_holonomy(model, &winding),
            };
            let period = p.period * m as f64;
            let mc = conjugate_points(model, &p.strip, period)?;
            orbits.push(PeriodicOrbit {
                strip: p.strip,
                period,
                primitive_period: p.period,
                repetition: m,
                family: p.family,
                winding,
                monodromy: pm.clone(),
                det_i_minus_p: det,
                maslov: mc.count,
                endpoint_conjugate: mc.endpoint_conjugate,
                holonomy,
                nondegenerate,
            });
        }
    }
    orbits.sort_by(|a, b| a.period.total_cmp(&b.period));
    Ok(OrbitSearch { orbits, failures })
}

fn unit_strip(model: &StationaryModel, x: SigmaPoint, k: [f64; 2]) -> Result<GeodesicStrip, GeodesicError> {
    Ok(GeodesicStrip::new(model, x, k)?.normalized())
}

fn circle_orbits(model: &StationaryModel, length: f64) -> Result<Vec<Primitive>, GeodesicError> {
    let x = SigmaPoint::circle(0.0);
    let mut out = Vec::new();
    for (family, sign, winding) in [(Family::Left, 1.0, -1), (Family::Right, -1.0, 1)] {
        // |dx/dt| = β ± α along the family
        let period = match (model.constant_lapse(), model.constant_shift()) {
            (Some(b), Some(a)) => length / (b + sign * a[0]),
            _ => {
                let speed = |x: f64| {
                    let g = model.local(Chart::Periodic, [x, 0.0]);
                    g.lapse + sign * g.shift[0]
                };
                quadrature::integrate(|x| 1.0 / speed(x), 0.0, length, 1e-13, 1 << 16)
                    .ok_or_else(|| GeodesicError::Propagation("period quadrature did not converge".into()))?
                    .value
            }
        };
        out.push(Primitive {
            strip: unit_strip(model, x, [sign, 0.0])?,
            period,
            family,
            winding: vec![winding],
        });
    }
    Ok(out)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn torus_orbits(model: &StationaryModel, lengths: [f64; 2], t_max: f64) -> Result<Vec<Primitive>, GeodesicError> {
    let (Some(beta), Some(alpha)) = (model.constant_lapse(), model.constant_shift()) else {
        return Err(GeodesicError::Invalid("torus orbits need constant lapse and shift".into()));
    };
    let a2 = alpha[0] * alpha[0] + alpha[1] * alpha[1];
    let reach = (beta + a2.sqrt()) * t_max;
    let n0 = (reach / lengths[0]).ceil() as i64;
    let n1 = (reach / lengths[1]).ceil() as i64;
    let mut out = Vec::new();
    for p0 in -n0..=n0 {
        for p1 in -n1..=n1 {
            if (p0, p1) == (0, 0) || gcd(p0, p1) != 1 {
                continue;
            }
            let w = [p0 as f64 * lengths[0], p1 as f64 * lengths[1]];
            let ww = w[0] * w[0] + w[1] * w[1];
            let aw = alpha[0] * w[0] + alpha[1] * w[1];
            // |w + Tα| = βT
            let c = beta * beta - a2;
            let period = (aw + (aw * aw + c * ww).sqrt()) / c;
            if period > t_max * (1.0 + PERIOD_DEDUP) {
                continue;
            }
            // dx/dt = −α − β n̂ with n̂ = k/|k|
            let n = [-(w[0] / period + alpha[0]) / beta, -(w[1] / period + alpha[1]) / beta];
            out.push(Primitive {
                strip: unit_strip(model, SigmaPoint::periodic([0.0, 0.0]), n)?,
                period,
                family: Family::Lattice([p0, p1]),
                winding: vec![p0, p1],
            });
        }
    }
    Ok(out)
}

fn sphere_orbits(model: &StationaryModel, radius: f64) -> Result<Vec<Primitive>, GeodesicError> {
    let Some(beta) = model.constant_lapse() else {
        return Err(GeodesicError::Invalid("sphere orbits need a constant lapse".into()));
    };
    let omega = match model.shift {
        crate::models::ShiftField::Rotation(w) => w,
        _ => 0.0,
    };
    let x = SigmaPoint::polar(Axis::Z, std::f64::consts::FRAC_PI_2, 0.0);
    let mut out = Vec::new();
    if omega == 0.0 {
        out.push(Primitive {
            strip: unit_strip(model, x, [0.0, 1.0])?,
            period: std::f64::consts::TAU * radius / beta,
            family: Family::Zoll,
            winding: Vec::new(),
        });
        return Ok(out);
    }
    // k_φ < 0 moves with increasing azimuth, i.e. along the rotation for ω > 0,
    // at angular speed −∂H/∂k_φ = β/R − ω
    for (sign, prograde) in [(-1.0, omega > 0.0), (1.0, omega < 0.0)] {
        let speed = beta / radius + sign * omega;
        out.push(Primitive {
            strip: unit_strip(model, x, [0.0, sign])?,
            period: std::f64::consts::TAU / speed.abs(),
            family: Family::Equator { prograde },
            winding: Vec::new(),
        });
    }
    Ok(out)
}

// ---- ellipsoid shooting -------------------------------------------------

struct Section {
    /// Pole axis of the section chart; the section is `{x_pole = 0}` crossed upwards.
    axis: Axis,
}

impl Section {
    fn state(&self, model: &StationaryModel, az: f64, psi: f64) -> State {
        let x = SigmaPoint::polar(self.axis, std::f64::consts::FRAC_PI_2, az);
        let g = model.local_at(&x);
        let l = cholesky2(&g.h);
        let xi = [psi.cos(), psi.sin()];
        let k = [l[0][0] * xi[0], l[1][0] * xi[0] + l[1][1] * xi[1]];
        let e = strip_energy(model, &x, k);
        State::new(&x, [k[0] / e, k[1] / e])
    }

    fn coords(&self, model: &StationaryModel, s: &State) -> (f64, f64) {
        let s = flow::to_chart(model, s, Chart::Polar(self.axis));
        let x = s.point();
        let g = model.local_at(&x);
        let l = cholesky2(&g.h);
        let a = s.z[2] / l[0][0];
        let b = (s.z[3] - l[1][0] * a) / l[1][1];
        (s.z[1], b.atan2(a))
    }

    fn height(&self, model: &StationaryModel, s: &State) -> f64 {
        let ell = model.cauchy.ellipsoid().unwrap();
        let Chart::Polar(axis) = s.chart else { unreachable!() };
        let (p, _, _) = self.axis.frame();
        ell.embed(axis, [s.z[0], s.z[1]])[p]
    }

    /// First upward return to the section: `(az, ψ, T)`.
    fn return_map(&self, model: &StationaryModel, az: f64, psi: f64, t_budget: f64) -> Result<(f64, f64, f64), String> {
        let dt = 1.0 / 800.0;
        let mut cur = flow::best_chart(model, &self.state(model, az, psi));
        let mut t = 0.0;
        let mut h_prev = 0.0;
        let mut been_below = false;
        while t < t_budget {
            let next = flow::rk4(model, &cur, dt);
            let h = self.height(model, &next);
            if h < 0.0 {
                been_below = true;
            }
            if been_below && h_prev < 0.0 && h >= 0.0 {
                // secant on the partial step length
                let (mut lo, mut hi) = (0.0, dt);
                let (mut flo, mut fhi) = (h_prev, h);
                let mut best = next;
                let mut best_t = dt;
                for _ in 0..40 {
                    let mid = (lo - flo * (hi - lo) / (fhi - flo)).clamp(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo));
                    let s = flow::rk4(model, &cur, mid);
                    let fm = self.height(model, &s);
                    best = s;
                    best_t = mid;
                    if fm.abs() < 1e-15 {
                        break;
                    }
                    if fm < 0.0 {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                        fhi = fm;
                    }
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                let (a2, p2) = self.coords(model, &best);
                return Ok((a2, p2, t + best_t));
            }
            h_prev = h;
            cur = next;
            if let Some((sw, _)) = flow::maybe_switch(model, &cur, false) {
                cur = sw;
            }
            t += dt;
        }
        Err("no return to the section within the time budget".into())
    }
}

fn wrap(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    (a + 0.5 * t).rem_euclid(t) - 0.5 * t
}

fn shoot(model: &StationaryModel, sec: &Section, az0: f64, psi0: f64, t_budget: f64) -> Result<(f64, f64, f64), String> {
    let residual = |az: f64, psi: f64| -> Result<(Vector2<f64>, f64), String> {
        let (a, p, t) = sec.return_map(model, az, psi, t_budget)?;
        Ok((Vector2::new(wrap(a - az), wrap(p - psi)), t))
    };
    let (mut az, mut psi) = (az0, psi0);
    for _ in 0..30 {
        let (f, t) = residual(az, psi)?;
        if f.norm() < 1e-11 {
            return Ok((az, psi, t));
        }
        let h = 1e-6;
        let (fa, _) = residual(az + h, psi)?;
        let (fp, _) = residual(az, psi + h)?;
        let j = Matrix2::from_columns(&[(fa - f) / h, (fp - f) / h]);
        let step = j
            .try_inverse()
            .ok_or_else(|| "singular shooting Jacobian".to_string())?
            * f;
        let scale = (0.2 / step.norm()).min(1.0);
        az -= step[0] * scale;
        psi -= step[1] * scale;
    }
    Err("Newton iteration did not converge".into())
}

fn ellipsoid_orbits(model: &StationaryModel, failures: &mut Vec<SeedFailure>) -> Vec<Primitive> {
    let ell = model.cauchy.ellipsoid().unwrap();
    let t_budget = 3.0 * std::f64::consts::TAU * ell.s.iter().cloned().fold(0.0, f64::max)
        / model.constant_lapse().unwrap_or(1.0).min(1.0);
    let mut found: Vec<(Axis, f64, f64, Primitive)> = Vec::new();
    for normal in [Axis::Z, Axis::X, Axis::Y] {
        let (_, i, j) = normal.frame();
        let pole = Axis::ALL.into_iter().find(|a| a.frame().0 == i).unwrap();
        let (_, u, _) = pole.frame();
        let sec = Section { axis: pole };
        for (reversed, side) in [(false, 1.0), (true, -1.0)] {
            // start on ±e_j heading towards +e_i
            let az = if j == u {
                if side > 0.0 { 0.0 } else { std::f64::consts::PI }
            } else if side > 0.0 {
                std::f64::consts::FRAC_PI_2
            } else {
                -std::f64::consts::FRAC_PI_2
            };
            let x = SigmaPoint::polar(pole, std::f64::consts::FRAC_PI_2, az);
            let g = model.local_at(&x);
            let l = cholesky2(&g.h);
            // the velocity −∂H/∂k opposes the metric dual of k, so heading
            // along v = (−1, 0) needs ξ_s ∝ −Lᵀv
            let psi = l[0][1].atan2(l[0][0]);
            let label = format!("principal-{normal:?}{}", if reversed { "-" } else { "+" });
            match shoot(model, &sec, az, psi, t_budget) {
                Ok((a, p, t)) => {
                    let dup = found.iter().any(|(ax, fa, fp, q)| {
                        *ax == pole
                            && (wrap(fa - a)).abs() < 1e-6
                            && (wrap(fp - p)).abs() < 1e-6
                            && (q.period - t).abs() < 1e-9 * t
                    });
                    if dup {
                        continue;
                    }
                    let s = sec.state(model, a, p);
                    let s = flow::best_chart(model, &s);
                    let strip = GeodesicStrip {
                        x: s.point(),
                        k: s.k(),
                        energy: strip_energy(model, &s.point(), s.k()),
                    };
                    found.push((
                        pole,
                        a,
                        p,
                        Primitive {
                            strip,
                            period: t,
                            family: Family::Principal { normal, reversed },
                            winding: Vec::new(),
                        },
                    ));
                }
                Err(reason) => failures.push(SeedFailure { seed: label, reason }),
            }
        }
    }
    found.into_iter().map(|(_, _, _, p)| p).collect()
}

/// Columnar text table of an orbit list.
pub fn orbit_table(model: &StationaryModel, search: &OrbitSearch) -> String {
    let mut out = String::from("# period\tfamily\trepetition\tchart\tq0\tq1\tk0\tk1\tenergy\tabs_det_I_minus_P\tmaslov\tholonomy_phase\tnondegenerate\n");
    for o in &search.orbits {
        let chart = match o.strip.x.chart {
            Chart::Periodic => "periodic".to_string(),
            Chart::Polar(a) => format!("polar-{a:?}"),
        };
        let cols = [
            fmt17(o.period),
            o.family.to_string(),
            o.repetition.to_string(),
            chart,
            fmt17(o.strip.x.q[0]),
            fmt17(o.strip.x.q[1]),
            fmt17(o.strip.k[0]),
            fmt17(o.strip.k[1]),
            fmt17(strip_energy(model, &o.strip.x, o.strip.k)),
            fmt17(o.det_i_minus_p.abs()),
            o.maslov.to_string(),
            fmt17(holonomy_phase(&o.holonomy)),
            o.nondegenerate.to_string(),
        ];
        out.push_str(&cols.join("\t"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;
    use crate::ModelConfig;
    use std::f64::consts::{PI, TAU};

    fn periods(cfg: ModelConfig, t_max: f64) -> Vec<f64> {
        let m = build_model(&cfg).unwrap();
        find_periodic_orbits(&m, t_max, 1e-8).unwrap().periods()
    }

    #[test]
    fn ultrastatic_circle_periods() {
        let m = build_model(&ModelConfig::circle(TAU, 1.0, 0.0, 0.0)).unwrap();
        let s = find_periodic_orbits(&m, 13.0, 1e-8).unwrap();
        assert_eq!(s.orbits.len(), 4);
        assert_eq!(s.periods().len(), 2);
        assert!((s.periods()[0] - TAU).abs() < 1e-12);
        assert!((s.periods()[1] - 2.0 * TAU).abs() < 1e-12);
        for o in &s.orbits {
            assert_eq!(o.maslov, 0);
            assert_eq!(o.det_i_minus_p, 1.0);
            assert!(o.nondegenerate);
        }
    }

    #[test]
    fn shifted_circle_periods() {
        let p = periods(ModelConfig::circle(TAU, 1.0, 0.5, 0.0), 14.0);
        let mut want: Vec<f64> = (1..=10).map(|m| m as f64 * 4.0 * PI / 3.0).filter(|t| *t <= 14.0).collect();
        want.push(4.0 * PI);
        want.sort_by(f64::total_cmp);
        want.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(p.len(), want.len());
        for (a, b) in p.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10 * b);
        }
    }

    #[test]
    fn torus_periods_match_quadratic() {
        let m = build_model(&ModelConfig::torus([TAU, TAU], 1.0, [0.0, 0.0], [0.0, 0.0])).unwrap();
        let s = find_periodic_orbits(&m, 9.0, 1e-8).unwrap();
        let p = s.periods();
        assert!((p[0] - TAU).abs() < 1e-12);
        assert!((p[1] - TAU * 2f64.sqrt()).abs() < 1e-12);
        for o in &s.orbits {
            assert!(!o.nondegenerate);
            assert_eq!(o.maslov, 0);
        }
    }

    #[test]
    fn round_sphere_is_degenerate() {
        let m = build_model(&ModelConfig::sphere(1.0, 1.0, 0.0)).unwrap();
        let s = find_periodic_orbits(&m, 7.0, 1e-8).unwrap();
        assert_eq!(s.orbits.len(), 1);
        let o = &s.orbits[0];
        assert!((o.period - TAU).abs() < 1e-12);
        assert!(!o.nondegenerate);
        assert!(o.det_i_minus_p.abs() < 1e-8);
        assert_eq!(o.maslov, 1);
        assert!(o.endpoint_conjugate);
        assert!((o.holonomy + Endo::identity()).norm() < 1e-6);
    }

    #[test]
    fn rotating_sphere_equators() {
        // light moving along the rotation is slowed to β/R − ω
        let m = build_model(&ModelConfig::sphere(1.0, 1.0, 0.3)).unwrap();
        let s = find_periodic_orbits(&m, 9.5, 1e-8).unwrap();
        assert!(s.failures.is_empty(), "{:?}", s.failures);
        let pro = s.orbits.iter().find(|o| o.family == Family::Equator { prograde: true }).unwrap();
        let retro = s.orbits.iter().find(|o| o.family == Family::Equator { prograde: false }).unwrap();
        assert!((pro.period - TAU / 0.7).abs() < 1e-12);
        assert!((retro.period - TAU / 1.3).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_principal_orbits() {
        let m = build_model(&ModelConfig::ellipsoid([1.0, 1.2, 1.5], 1.0, 0.0)).unwrap();
        let s = find_periodic_orbits(&m, 10.0, 1e-8).unwrap();
        assert!(s.failures.is_empty(), "{:?}", s.failures);
        for o in &s.orbits {
            assert!(super::super::symplectic_defect(&o.monodromy) < 1e-8);
        }
        assert_eq!(s.orbits.len(), 6);
        assert!(s.orbits.iter().any(|o| o.nondegenerate));
    }
}
