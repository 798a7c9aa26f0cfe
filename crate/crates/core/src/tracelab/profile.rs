//! Tapered spectral sums `S(t) = Σ m_n w(λ_n/Λ) e^{−itλ_n}` and their peaks.

use num_complex::Complex64;
use rayon::prelude::*;

use super::TraceError;
use crate::spectra::Spectrum;
use crate::textio::fmt17;

/// Default detection threshold, in multiples of the median `|S|`.
pub const DEFAULT_THRESHOLD: f64 = 8.0;

/// Peaks must also exceed this fraction of the largest `|S|`.
const NOISE_FLOOR: f64 = 1e-9;

/// Spectral cutoff `w(u)`, `u = λ/Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cutoff {
    /// `exp(−36u²)` on `|u| ≤ 1`: time response is a Gaussian without side lobes.
    #[default]
    Gaussian,
    /// `(1 − |u|)₊`: nonnegative time response with `sinc²` side lobes.
    Fejer,
}

impl Cutoff {
    pub fn weight(&self, u: f64) -> f64 {
        let a = u.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self {
            Cutoff::Gaussian => (-36.0 * u * u).exp(),
            Cutoff::Fejer => 1.0 - a,
        }
    }
}

impl std::fmt::Display for Cutoff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Cutoff::Gaussian => "gaussian",
            Cutoff::Fejer => "fejer",
        })
    }
}

/// Uniform samples `t_i = i·dt`, `i_min ≤ i ≤ i_max`; symmetric grids are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub i_min: i64,
    pub i_max: i64,
}

impl TimeGrid {
    /// Grid covering `[t_min, t_max]` with `per_unit` samples per unit time.
    pub fn new(t_min: f64, t_max: f64, per_unit: f64) -> TimeGrid {
        let dt = 1.0 / per_unit;
        TimeGrid {
            dt,
            i_min: (t_min / dt).floor() as i64,
            i_max: (t_max / dt).ceil() as i64,
        }
    }

    /// At least 4096 samples per unit time, growing linearly beyond `Λ = 200`.
    pub fn for_cutoff(t_min: f64, t_max: f64, lambda_cut: f64) -> TimeGrid {
        TimeGrid::new(t_min, t_max, 4096.0 * (lambda_cut / 200.0).max(1.0))
    }

    pub fn len(&self) -> usize {
        (self.i_max - self.i_min + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, i: usize) -> f64 {
        (self.i_min + i as i64) as f64 * self.dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceProfile {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
    pub lambda_cut: f64,
    pub cutoff: Cutoff,
}

impl TraceProfile {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.grid.time(i))
    }

    /// Value at the grid point nearest to `t`.
    pub fn at(&self, t: f64) -> Option<Complex64> {
        let i = (t / self.grid.dt).round() as i64 - self.grid.i_min;
        self.values.get(usize::try_from(i).ok()?).copied()
    }
}

const BLOCK: usize = 64;

/// Evaluates `S(t)` on the grid. Each block of samples is seeded with exact
/// phases and advanced by precomputed per-entry rotations, so rounding does
/// not accumulate along the grid.
pub fn trace_profile(spectrum: &Spectrum, cutoff: Cutoff, grid: &TimeGrid, lambda_cut: f64) -> Result<TraceProfile, TraceError> {
    if !(lambda_cut > 0.0) || lambda_cut > spectrum.lambda_max {
        return Err(TraceError::CompletenessViolation(format!(
            "cutoff Λ = {lambda_cut} exceeds the completeness bound {}",
            spectrum.lambda_max
        )));
    }
    let terms: Vec<(f64, f64)> = spectrum
        .entries
        .iter()
        .map(|e| (e.lambda, e.mult as f64 * cutoff.weight(e.lambda / lambda_cut)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let steps: Vec<[Complex64; BLOCK]> = terms
        .iter()
        .map(|&(l, _)| std::array::from_fn(|j| Complex64::from_polar(1.0, -(j as f64) * grid.dt * l)))
        .collect();
    let n = grid.len();
    let blocks = n.div_ceil(BLOCK);
    let values: Vec<Complex64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let start = b * BLOCK;
            let len = BLOCK.min(n - start);
            let t0 = grid.time(start);
            let mut acc = [Complex64::new(0.0, 0.0); BLOCK];
            for (&(l, w), rot) in terms.iter().zip(&steps) {
                let base = Complex64::from_polar(w, -t0 * l);
                for j in 0..len {
                    acc[j] += base * rot[j];
                }
            }
            acc.into_iter().take(len)
        })
        .collect();
    Ok(TraceProfile {
        grid: *grid,
        values,
        lambda_cut,
        cutoff,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Local maxima of `|S|` above `threshold × median(|S|)` (and above a relative
/// noise floor), refined by quadratic interpolation.
pub fn detect_singular_times(profile: &TraceProfile, threshold: f64) -> Result<Vec<f64>, TraceError> {
    let a: Vec<f64> = profile.values.iter().map(|z| z.norm()).collect();
    let max = a.iter().copied().fold(0.0, f64::max);
    let floor = (threshold * median(a.clone())).max(NOISE_FLOOR * max);
    let mut out = Vec::new();
    for i in 1..a.len().saturating_sub(1) {
        if a[i] > floor && a[i] >= a[i - 1] && a[i] > a[i + 1] {
            let den = a[i - 1] - 2.0 * a[i] + a[i + 1];
            let off = if den < 0.0 { 0.5 * (a[i - 1] - a[i + 1]) / den } else { 0.0 };
            out.push(profile.grid.time(i) + off * profile.grid.dt);
        }
    }
    if out.is_empty() {
        return Err(TraceError::NoPeaks);
    }
    Ok(out)
}

/// Flat-top taper: 1 on `|u| ≤ ½`, raised-cosine down to 0 at `|u| = 1`.
fn flat_top(u: f64) -> f64 {
    let a = u.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::TAU * (a - 0.5)).cos())
    }
}

/// Complex delta-mass of a peak, per cutoff and extrapolated in `1/Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakMass {
    pub time: f64,
    /// Half-width of the integration window actually used.
    pub delta: f64,
    pub per_cutoff: Vec<(f64, Complex64)>,
    pub mass: Complex64,
    /// Largest relative change of the mass between consecutive cutoffs.
    pub stability: f64,
}

impl PeakMass {
    pub fn phase(&self) -> f64 {
        self.mass.arg()
    }
}

/// Integrates `S(t)` against a flat-top window of half-width `delta` centred
/// at `time` for each profile, then Richardson-extrapolates the last two
/// cutoffs in `1/Λ`. `delta` shrinks to half the distance to the nearest
/// entry of `neighbours`.
pub fn peak_mass_and_phase(profiles: &[TraceProfile], time: f64, delta: f64, neighbours: &[f64]) -> Result<PeakMass, TraceError> {
    if profiles.len() < 3 {
        return Err(TraceError::Invalid("peak mass extraction needs at least three cutoffs".into()));
    }
    let sep = neighbours
        .iter()
        .map(|&t| (t - time).abs())
        .filter(|&d| d > 1e-9)
        .fold(f64::INFINITY, f64::min);
    let delta = delta.min(0.5 * sep);
    let mut per_cutoff = Vec::with_capacity(profiles.len());
    for p in profiles {
        if sep < 4.0 * p.grid.dt || delta < 2.0 * p.grid.dt {
            return Err(TraceError::OverlappingPeaks { time, separation: sep });
        }
        let lo = p.grid.time(0);
        let hi = p.grid.time(p.values.len().saturating_sub(1));
        if time - delta < lo || time + delta > hi {
            return Err(TraceError::Invalid(format!(
                "profile grid [{lo}, {hi}] does not cover [{}, {}]",
                time - delta,
                time + delta
            )));
        }
        let m: Complex64 = p
            .values
            .iter()
            .enumerate()
            .map(|(i, z)| z * flat_top((p.grid.time(i) - time) / delta))
            .sum::<Complex64>()
            * p.grid.dt;
        per_cutoff.push((p.lambda_cut, m));
    }
    per_cutoff.sort_by(|a, b| a.0.total_cmp(&b.0));
    let stability = per_cutoff
        .windows(2)
        .map(|w| (w[1].1 - w[0].1).norm() / w[1].1.norm().max(1e-300))
        .fold(0.0, f64::max);
    let (l1, m1) = per_cutoff[per_cutoff.len() - 2];
    let (l2, m2) = per_cutoff[per_cutoff.len() - 1];
    let mass = (m2 * l2 - m1 * l1) / (l2 - l1);
    Ok(PeakMass {
        time,
        delta,
        per_cutoff,
        mass,
        stability,
    })
}

/// Columnar text `t  Re S  Im S  |S|`.
pub fn profile_table(profile: &TraceProfile) -> String {
    let mut out = String::from("# t\tre\tim\tabs\n");
    for (t, z) in profile.times().zip(&profile.values) {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", fmt17(t), fmt17(z.re), fmt17(z.im), fmt17(z.norm())));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;
    use crate::spectra::torus_spectrum;
    use crate::ModelConfig;
    use std::f64::consts::{PI, TAU};

    fn spectrum(alpha: f64, theta: f64, lmax: f64) -> Spectrum {
        torus_spectrum(&build_model(&ModelConfig::circle(TAU, 1.0, alpha, theta)).unwrap(), lmax).unwrap()
    }

    fn close_to_any(t: f64, set: &[f64], tol: f64) -> bool {
        set.iter().any(|s| (s - t).abs() <= tol)
    }

    #[test]
    fn ultrastatic_peaks_at_multiples_of_two_pi() {
        let s = spectrum(0.0, 0.0, 200.0);
        let p = trace_profile(&s, Cutoff::Gaussian, &TimeGrid::for_cutoff(-1.0, 20.0, 200.0), 200.0).unwrap();
        let peaks = detect_singular_times(&p, DEFAULT_THRESHOLD).unwrap();
        let expect = [0.0, TAU, 2.0 * TAU, 3.0 * TAU];
        assert_eq!(peaks.len(), expect.len(), "{peaks:?}");
        for (a, b) in peaks.iter().zip(expect) {
            assert!((a - b).abs() < 1e-3);
        }
        let s0 = p.at(0.0).unwrap();
        assert!(s0.re > 0.0 && s0.im.abs() < 1e-9 * s0.re);
    }

    #[test]
    fn peak_height_grows_with_cutoff_and_floor_does_not() {
        let s = spectrum(0.0, 0.0, 400.0);
        let mut heights = Vec::new();
        let mut floors = Vec::new();
        for l in [100.0, 200.0, 400.0] {
            let p = trace_profile(&s, Cutoff::Gaussian, &TimeGrid::new(PI - 0.5, TAU + 0.5, 4096.0), l).unwrap();
            heights.push(p.at(TAU).unwrap().norm());
            floors.push(p.at(PI).unwrap().norm());
        }
        assert!((heights[1] / heights[0] - 2.0).abs() < 0.02);
        assert!((heights[2] / heights[1] - 2.0).abs() < 0.02);
        assert!(floors.iter().all(|&f| f < 1e-9 * heights[0]));
    }

    #[test]
    fn shifted_circle_periods() {
        let s = spectrum(0.5, 0.0, 200.0);
        let p = trace_profile(&s, Cutoff::Gaussian, &TimeGrid::for_cutoff(0.5, 14.0, 200.0), 200.0).unwrap();
        let peaks = detect_singular_times(&p, DEFAULT_THRESHOLD).unwrap();
        let t = 4.0 * PI / 3.0;
        let expect: Vec<f64> = (1..=10).map(|m| m as f64 * t).filter(|&x| x <= 14.0).collect();
        assert_eq!(peaks.len(), expect.len(), "{peaks:?}");
        for (a, b) in peaks.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn interleaved_irrational_progressions() {
        // branch spacings 1 and √2: peaks at 2πm and 2πm/√2
        let r2 = 2f64.sqrt();
        let mut pairs = Vec::new();
        for n in -300i64..=300 {
            pairs.push((n as f64, 1));
            pairs.push((n as f64 * r2, 1));
        }
        let s = Spectrum::from_entries(&pairs, 300.0, "fixture");
        let p = trace_profile(&s, Cutoff::Gaussian, &TimeGrid::for_cutoff(0.5, 30.0, 300.0), 300.0).unwrap();
        let peaks = detect_singular_times(&p, DEFAULT_THRESHOLD).unwrap();
        let mut expect: Vec<f64> = (1..=10)
            .flat_map(|m| [TAU * m as f64, TAU * m as f64 / r2])
            .filter(|&t| t <= 30.0)
            .collect();
        expect.sort_by(f64::total_cmp);
        assert_eq!(peaks.len(), expect.len(), "{peaks:?}");
        for t in &expect {
            assert!(close_to_any(*t, &peaks, 1e-3));
        }
    }

    #[test]
    fn hermitian_symmetry_and_linearity() {
        let a = spectrum(0.5, 0.0, 100.0);
        let b = spectrum(0.0, 0.3, 100.0);
        let grid = TimeGrid::new(-3.0, 3.0, 512.0);
        let pa = trace_profile(&a, Cutoff::Gaussian, &grid, 100.0).unwrap();
        let pb = trace_profile(&b, Cutoff::Gaussian, &grid, 100.0).unwrap();
        let n = pa.values.len();
        assert_eq!(grid.i_min, -grid.i_max);
        let sym = (0..n).map(|i| (pa.values[n - 1 - i] - pa.values[i].conj()).norm()).fold(0.0, f64::max);
        assert!(sym <= 1e-12, "{sym}");
        let pu = trace_profile(&a.union(&b), Cutoff::Gaussian, &grid, 100.0).unwrap();
        let lin = (0..n)
            .map(|i| (pu.values[i] - pa.values[i] - pb.values[i]).norm())
            .fold(0.0, f64::max);
        assert!(lin <= 1e-10, "{lin}");
    }

    #[test]
    fn cutoff_beyond_completeness_is_rejected() {
        let s = spectrum(0.0, 0.0, 50.0);
        assert!(trace_profile(&s, Cutoff::Gaussian, &TimeGrid::new(0.0, 1.0, 100.0), 60.0).is_err());
    }

    #[test]
    fn masses_follow_poisson_summation() {
        let s = spectrum(0.0, 0.0, 400.0);
        let t = TAU;
        let profiles: Vec<_> = [100.0, 200.0, 400.0]
            .iter()
            .map(|&l| trace_profile(&s, Cutoff::Gaussian, &TimeGrid::for_cutoff(t - 1.0, t + 1.0, l), l).unwrap())
            .collect();
        let m = peak_mass_and_phase(&profiles, t, 0.5, &[0.0, 2.0 * TAU]).unwrap();
        assert!((m.mass.norm() / (2.0 * TAU) - 1.0).abs() < 0.02, "{:?}", m.mass);
        assert!(m.stability < 0.02);
        assert!(m.phase().abs() < 0.02);

        let s = spectrum(0.5, 0.0, 400.0);
        let t = 4.0 * PI / 3.0;
        let profiles: Vec<_> = [100.0, 200.0, 400.0]
            .iter()
            .map(|&l| trace_profile(&s, Cutoff::Gaussian, &TimeGrid::for_cutoff(t - 1.0, t + 1.0, l), l).unwrap())
            .collect();
        let m = peak_mass_and_phase(&profiles, t, 0.5, &[0.0, 2.0 * t]).unwrap();
        assert!((m.mass.norm() / t - 1.0).abs() < 0.02, "{:?}", m.mass);
    }

    #[test]
    fn twisted_phase_shift() {
        // α = 0.3 keeps the two families apart; the right family winds +1
        let t = TAU / 0.7;
        let mass = |theta: f64| {
            let s = spectrum(0.3, theta, 800.0);
            let profiles: Vec<_> = [200.0, 400.0, 800.0]
                .iter()
                .map(|&l| trace_profile(&s, Cutoff::Gaussian, &TimeGrid::for_cutoff(t - 1.0, t + 1.0, l), l).unwrap())
                .collect();
            peak_mass_and_phase(&profiles, t, 0.5, &[2.0 * TAU / 1.3]).unwrap().mass
        };
        let d = (mass(0.25) / mass(0.0)).arg();
        assert!((d - TAU * 0.25).abs() < 0.02, "{d}");
    }

    #[test]
    fn overlapping_neighbour_is_reported() {
        let s = spectrum(0.0, 0.0, 100.0);
        let p = trace_profile(&s, Cutoff::Gaussian, &TimeGrid::new(5.0, 7.0, 100.0), 100.0).unwrap();
        assert!(matches!(
            peak_mass_and_phase(&[p.clone(), p.clone(), p], TAU, 0.5, &[TAU + 0.02]),
            Err(TraceError::OverlappingPeaks { .. })
        ));
    }
}
