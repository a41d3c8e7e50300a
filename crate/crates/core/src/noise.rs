//! Symmetrized output-field fluctuation spectra.
//!
//! In the frame rotating at the drive, with `D` the detuning of the bare
//! resonators from the drive,
//!
//! ```text
//! F_a(w) = D - Delta - w + i g_a/2
//! F_b(w) = D - w - i kappa_b/2
//! N(w)   = J^2 - F_a F_b
//!
//! S_a = [|N + i kx_a F_b|^2 + k0_a kx_a |F_b|^2] / 2|N|^2     (waveguide + environment of a)
//!     + g kx_a |F_b|^2 / 2|N|^2                                (gain)
//!     + J^2 kx_a kappa_b / 2|N|^2                              (ports of b)
//! S_b = [|N + i kx_b F_a|^2 + k0_b kx_b |F_a|^2] / 2|N|^2
//!     + J^2 kx_b (kappa_a + g) / 2|N|^2
//! ```
//!
//! Every spectrum sits on the vacuum floor 1/2.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::peaks::{fwhm_analytic, golden_max};
use crate::spectrum::is_stable;

pub const VACUUM_FLOOR: f64 = 0.5;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Resonator {
    A,
    B,
}

impl std::str::FromStr for Resonator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Resonator::A),
            "b" | "B" => Ok(Resonator::B),
            _ => Err(Error::Parse(format!("unknown resonator '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseFunctions {
    pub f_a: Complex64,
    pub f_b: Complex64,
    pub n: Complex64,
}

impl ResponseFunctions {
    pub fn at(params: &SystemParams, detuning: f64, omega: f64) -> Self {
        let f_a = Complex64::new(detuning - params.delta - omega, params.net_gain() / 2.0);
        let f_b = Complex64::new(detuning - omega, -params.kappa_b() / 2.0);
        let j = params.coupling;
        Self { f_a, f_b, n: j * j - f_a * f_b }
    }
}

/// Per-source contributions at one frequency; `s3` only exists for a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumTerms {
    pub s1: f64,
    pub s2: f64,
    pub s3: Option<f64>,
}

impl SpectrumTerms {
    pub fn total(&self) -> f64 {
        self.s1 + self.s2 + self.s3.unwrap_or(0.0)
    }
}

pub fn spectrum_terms(params: &SystemParams, detuning: f64, omega: f64, resonator: Resonator) -> SpectrumTerms {
    let r = ResponseFunctions::at(params, detuning, omega);
    let n2 = 2.0 * r.n.norm_sqr();
    let j2 = params.coupling * params.coupling;
    let a = &params.res_a;
    let b = &params.res_b;
    match resonator {
        Resonator::A => {
            let fb2 = r.f_b.norm_sqr();
            SpectrumTerms {
                s1: ((r.n + I * a.kappa_ex * r.f_b).norm_sqr() + a.kappa_0 * a.kappa_ex * fb2) / n2,
                s2: a.gain * a.kappa_ex * fb2 / n2,
                s3: Some(j2 * a.kappa_ex * (b.kappa_ex + b.kappa_0) / n2),
            }
        }
        Resonator::B => {
            let fa2 = r.f_a.norm_sqr();
            SpectrumTerms {
                s1: ((r.n + I * b.kappa_ex * r.f_a).norm_sqr() + b.kappa_0 * b.kappa_ex * fa2) / n2,
                s2: j2 * b.kappa_ex * (a.kappa_ex + a.kappa_0 + a.gain) / n2,
                s3: None,
            }
        }
    }
}

pub fn spectrum_value(params: &SystemParams, detuning: f64, omega: f64, resonator: Resonator) -> f64 {
    spectrum_terms(params, detuning, omega, resonator).total()
}

/// Symmetrized intracavity spectra `(S_aa, S_bb)`, before the input-output
/// relation. Their frequency integrals are the stationary symmetrized
/// occupations.
pub fn intracavity_spectrum(params: &SystemParams, detuning: f64, omega: f64) -> (f64, f64) {
    let r = ResponseFunctions::at(params, detuning, omega);
    let n2 = 2.0 * r.n.norm_sqr();
    let j2 = params.coupling * params.coupling;
    let pump_a = params.res_a.total_loss() + params.res_a.gain;
    let kb = params.kappa_b();
    (
        (r.f_b.norm_sqr() * pump_a + j2 * kb) / n2,
        (r.f_a.norm_sqr() * kb + j2 * pump_a) / n2,
    )
}

/// A sampled spectrum with its per-source breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    pub resonator: Resonator,
    pub detuning: f64,
    pub omega: Vec<f64>,
    pub total: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s3: Option<Vec<f64>>,
    /// Whether the parameters admit a stationary state.
    pub stable: bool,
}

impl SpectrumSeries {
    /// Samples where `N(w)` vanished are stored as NaN.
    pub fn is_finite_at(&self, i: usize) -> bool {
        self.total[i].is_finite()
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

fn series(params: &SystemParams, detuning: f64, grid: &[f64], resonator: Resonator) -> Result<SpectrumSeries> {
    params.ensure_valid()?;
    let mut out = SpectrumSeries {
        resonator,
        detuning,
        omega: grid.to_vec(),
        total: Vec::with_capacity(grid.len()),
        s1: Vec::with_capacity(grid.len()),
        s2: Vec::with_capacity(grid.len()),
        s3: (resonator == Resonator::A).then(|| Vec::with_capacity(grid.len())),
        stable: is_stable(params).stable,
    };
    for &w in grid {
        let t = spectrum_terms(params, detuning, w, resonator);
        let ok = t.total().is_finite();
        let nan_if = |v: f64| if ok { v } else { f64::NAN };
        out.total.push(nan_if(t.total()));
        out.s1.push(nan_if(t.s1));
        out.s2.push(nan_if(t.s2));
        if let (Some(s3), Some(v)) = (out.s3.as_mut(), t.s3) {
            s3.push(nan_if(v));
        }
    }
    Ok(out)
}

/// Output spectrum of the active resonator.
///
/// The formula is evaluated even outside the stable regime; `stable` on the
/// result records whether it describes a stationary state.
pub fn spectrum_a(params: &SystemParams, detuning: f64, grid: &[f64]) -> Result<SpectrumSeries> {
    series(params, detuning, grid, Resonator::A)
}

/// Output spectrum of the passive resonator.
pub fn spectrum_b(params: &SystemParams, detuning: f64, grid: &[f64]) -> Result<SpectrumSeries> {
    series(params, detuning, grid, Resonator::B)
}

pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// 4001 points over `[-2(J + Delta), 2(J + Delta)]`.
pub fn default_grid(params: &SystemParams) -> Vec<f64> {
    let half = 2.0 * (params.coupling + params.delta).max(1.0);
    uniform_grid(-half, half, 4001)
}

/// Lower supermode frequency `-Delta/2 - sqrt(Delta^2 + 4J^2)/2`, offset by the detuning.
pub fn closed_form_left_peak(params: &SystemParams, detuning: f64) -> f64 {
    let d = params.delta;
    let j = params.coupling;
    detuning - d / 2.0 - (d * d + 4.0 * j * j).sqrt() / 2.0
}

/// Upper supermode frequency `-Delta/2 + sqrt(Delta^2 + 4J^2)/2`, offset by the detuning.
pub fn closed_form_right_peak(params: &SystemParams, detuning: f64) -> f64 {
    let d = params.delta;
    let j = params.coupling;
    detuning - d / 2.0 + (d * d + 4.0 * j * j).sqrt() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakInfo {
    pub omega_peak: f64,
    pub height: f64,
    /// Width at half the height above the vacuum floor.
    pub fwhm: f64,
    pub closed_form_omega: f64,
}

/// Locates the maximum within `kappa_b` of `closed_form` (dense scan, then
/// golden section to 1e-6) and measures its width.
pub fn refine_peak(
    params: &SystemParams,
    detuning: f64,
    resonator: Resonator,
    closed_form: f64,
) -> Option<PeakInfo> {
    let f = |w: f64| spectrum_value(params, detuning, w, resonator);
    let half = params.kappa_b();
    let n = 4001;
    let h = 2.0 * half / (n - 1) as f64;
    let (mut best, mut best_v) = (closed_form, f64::NEG_INFINITY);
    for i in 0..n {
        let w = closed_form - half + h * i as f64;
        let v = f(w);
        if v > best_v {
            best = w;
            best_v = v;
        }
    }
    if !best_v.is_finite() {
        return None;
    }
    let (omega_peak, height) = golden_max(f, best - h, best + h, 1e-6 * half);
    let fwhm = fwhm_analytic(f, omega_peak, height, VACUUM_FLOOR, 1e-7 * half, 4.0 * params.coupling.max(half))?;
    Some(PeakInfo { omega_peak, height, fwhm, closed_form_omega: closed_form })
}

/// Both location estimates of the lower-supermode peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeftPeak {
    pub closed_form: f64,
    pub refined: f64,
    pub height: f64,
}

/// Left peak in the resonantly driven frame (zero detuning).
pub fn left_peak_frequency(params: &SystemParams, resonator: Resonator) -> LeftPeak {
    let closed_form = closed_form_left_peak(params, 0.0);
    match refine_peak(params, 0.0, resonator, closed_form) {
        Some(p) => LeftPeak { closed_form, refined: p.omega_peak, height: p.height },
        None => LeftPeak { closed_form, refined: f64::NAN, height: f64::NAN },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmaxRow {
    pub delta: f64,
    pub s_a_max: f64,
    pub s_b_max: f64,
    pub omega_peak_a: f64,
    pub omega_peak_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmaxSweep {
    pub rows: Vec<SmaxRow>,
    /// Shifts skipped because the system has no stationary state there.
    pub excluded: Vec<f64>,
    /// First stable-to-unstable crossing along the grid, located by bisection.
    pub stability_boundary: Option<f64>,
}

pub fn smax_at(params: &SystemParams) -> Option<SmaxRow> {
    let a = left_peak_frequency(params, Resonator::A);
    let b = left_peak_frequency(params, Resonator::B);
    if !(a.height.is_finite() && b.height.is_finite()) {
        return None;
    }
    Some(SmaxRow {
        delta: params.delta,
        s_a_max: a.height,
        s_b_max: b.height,
        omega_peak_a: a.refined,
        omega_peak_b: b.refined,
    })
}

/// Left-peak maxima of both output spectra over a grid of shifts, resonant drive.
pub fn smax_sweep(template: &SystemParams, delta_grid: &[f64]) -> Result<SmaxSweep> {
    template.with_delta(0.0).ensure_valid()?;
    let mut sweep = SmaxSweep { rows: Vec::new(), excluded: Vec::new(), stability_boundary: None };
    let mut last_stable: Option<f64> = None;
    for &delta in delta_grid {
        let p = template.with_delta(delta);
        if !is_stable(&p).stable {
            if let (Some(lo), None) = (last_stable, sweep.stability_boundary) {
                sweep.stability_boundary = Some(stability_crossing(template, lo, delta));
            }
            sweep.excluded.push(delta);
            continue;
        }
        last_stable = Some(delta);
        match smax_at(&p) {
            Some(row) => sweep.rows.push(row),
            None => sweep.excluded.push(delta),
        }
    }
    Ok(sweep)
}

/// Bisects the stability boundary between a stable and an unstable shift.
pub fn stability_crossing(template: &SystemParams, stable: f64, unstable: f64) -> f64 {
    let (mut lo, mut hi) = (stable, unstable);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if is_stable(&template.with_delta(mid)).stable {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Spectra and peak metrics for a pair of systems differing only in gain.
#[derive(Debug, Clone, PartialEq)]
pub struct GainComparison {
    /// `[S_a, S_b]` with gain.
    pub with_gain: [SpectrumSeries; 2],
    pub without_gain: [SpectrumSeries; 2],
    /// `[resonator][left, right]`.
    pub peaks_with_gain: [[PeakInfo; 2]; 2],
    pub peaks_without_gain: [[PeakInfo; 2]; 2],
}

impl GainComparison {
    /// True when every peak is both higher and narrower with gain.
    pub fn gain_sharpens(&self) -> bool {
        (0..2).all(|r| {
            (0..2).all(|k| {
                let g = &self.peaks_with_gain[r][k];
                let n = &self.peaks_without_gain[r][k];
                g.height > n.height && g.fwhm < n.fwhm
            })
        })
    }
}

fn both_peaks(params: &SystemParams, detuning: f64, resonator: Resonator) -> Result<[PeakInfo; 2]> {
    let find = |cf: f64| {
        refine_peak(params, detuning, resonator, cf)
            .ok_or_else(|| Error::NoPeak(format!("no finite maximum near {cf}")))
    };
    Ok([
        find(closed_form_left_peak(params, detuning))?,
        find(closed_form_right_peak(params, detuning))?,
    ])
}

pub fn gain_comparison(
    with_gain: &SystemParams,
    without_gain: &SystemParams,
    detuning: f64,
    grid: &[f64],
) -> Result<GainComparison> {
    if with_gain.with_gain(without_gain.res_a.gain) != *without_gain {
        return Err(Error::Argument("parameter sets must differ only in gain".into()));
    }
    for p in [with_gain, without_gain] {
        p.ensure_valid()?;
        crate::spectrum::require_stable(p)?;
    }
    Ok(GainComparison {
        with_gain: [spectrum_a(with_gain, detuning, grid)?, spectrum_b(with_gain, detuning, grid)?],
        without_gain: [spectrum_a(without_gain, detuning, grid)?, spectrum_b(without_gain, detuning, grid)?],
        peaks_with_gain: [
            both_peaks(with_gain, detuning, Resonator::A)?,
            both_peaks(with_gain, detuning, Resonator::B)?,
        ],
        peaks_without_gain: [
            both_peaks(without_gain, detuning, Resonator::A)?,
            both_peaks(without_gain, detuning, Resonator::B)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{canonical_figure_params, Figure};
    use crate::spectrum::{eigenvalues, DampingConvention};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fig4() -> SystemParams {
        canonical_figure_params(Figure::Fig4).0
    }

    #[test]
    fn tails_reach_vacuum_floor() {
        for r in [Resonator::A, Resonator::B] {
            for w in [-1e6, 1e6] {
                assert!((spectrum_value(&fig4(), 0.0, w, r) - 0.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn decoupled_passive_a_is_single_lorentzian() {
        let p = fig4().with_coupling(0.0).with_gain(0.0);
        let (kx, k0) = (p.res_a.kappa_ex, p.res_a.kappa_0);
        for w in uniform_grid(-6.0, 6.0, 101) {
            let fa = Complex64::new(0.7 - p.delta - w, p.net_gain() / 2.0);
            let expected = ((fa - I * kx).norm_sqr() + k0 * kx) / (2.0 * fa.norm_sqr());
            assert_abs_diff_eq!(spectrum_value(&p, 0.7, w, Resonator::A), expected, epsilon = 1e-13);
        }
        let s = spectrum_a(&p, 0.7, &uniform_grid(-6.0, 6.0, 1201)).unwrap();
        let peaks = crate::peaks::local_maxima(&s.total);
        assert_eq!(peaks.len(), 1);
        assert!((s.omega[peaks[0]] - (0.7 - p.delta)).abs() < 0.011);
    }

    #[test]
    fn fig4_double_peak_at_supermodes() {
        let p = fig4();
        for series in [spectrum_a(&p, 0.0, &default_grid(&p)).unwrap(), spectrum_b(&p, 0.0, &default_grid(&p)).unwrap()] {
            let peaks = crate::peaks::local_maxima(&series.total);
            assert_eq!(peaks.len(), 2, "{:?}", series.resonator);
            let e = eigenvalues(&p, DampingConvention::Drift);
            assert!((series.omega[peaks[0]] - e.e_minus.re).abs() < 0.5);
            assert!((series.omega[peaks[1]] - e.e_plus.re).abs() < 0.5);
            assert!(series.total[peaks[0]] > series.total[peaks[1]]);
            assert!(series.stable);
        }
    }

    #[test]
    fn passive_spectrum_below_active_at_left_peak() {
        let p = fig4();
        let a = left_peak_frequency(&p, Resonator::A);
        assert!(spectrum_value(&p, 0.0, a.refined, Resonator::B) < a.height);
    }

    #[test]
    fn b_at_zero_coupling_ignores_gain() {
        let p = fig4().with_coupling(0.0);
        let (kx, k0) = (p.res_b.kappa_ex, p.res_b.kappa_0);
        let kb = kx + k0;
        for w in uniform_grid(-3.0, 3.0, 61) {
            let lossy = spectrum_value(&p.with_gain(0.0), 0.0, w, Resonator::B);
            let pumped = spectrum_value(&p, 0.0, w, Resonator::B);
            assert_abs_diff_eq!(lossy, pumped, epsilon = 1e-14);
        }
        // single passive resonator: peak at w = D with height set by the port rates alone
        let lp = refine_peak(&p, 0.0, Resonator::B, 0.0).unwrap();
        let bound = ((kb / 2.0 + kx).powi(2) + k0 * kx) / (kb * kb / 2.0);
        assert_abs_diff_eq!(lp.omega_peak, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(lp.height, bound, epsilon = 1e-10);
    }

    #[test]
    fn closed_form_left_peak_values() {
        let p = fig4().with_delta(0.0);
        assert_eq!(closed_form_left_peak(&p, 0.0), -5.0);
        let p = fig4();
        assert_abs_diff_eq!(closed_form_left_peak(&p, 0.0), -1.0 - 104f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn refined_peak_close_to_closed_form() {
        for delta in [0.0, 1.0, 2.0, 3.0] {
            let lp = left_peak_frequency(&fig4().with_delta(delta), Resonator::A);
            assert!((lp.refined - lp.closed_form).abs() < 0.25);
        }
    }

    #[test]
    fn singular_sample_is_flagged() {
        // lossless, gainless and decoupled: F_a = 0 at w = D - Delta; b stays lossy so N = 0 needs J = 0
        let mut p = fig4().with_coupling(0.0).with_gain(1.0);
        p.res_a.kappa_ex = 0.5;
        let s = spectrum_b(&p, 0.0, &[0.0, -2.0]).unwrap();
        assert!(s.is_finite_at(0));
        assert!(!s.is_finite_at(1));
    }

    #[test]
    fn smax_sweep_monotone_and_boundary() {
        let grid = uniform_grid(0.0, 4.0, 41);
        let sweep = smax_sweep(&fig4(), &grid).unwrap();
        let boundary = sweep.stability_boundary.unwrap();
        assert!(boundary > 3.4 && boundary < 3.6, "{boundary}");
        assert!(!sweep.excluded.is_empty());
        for w in sweep.rows.windows(2) {
            assert!(w[1].s_a_max > w[0].s_a_max && w[1].s_b_max > w[0].s_b_max);
        }
        for r in &sweep.rows {
            assert!(r.s_b_max < r.s_a_max);
        }
        let baseline = smax_at(&fig4().with_delta(0.0)).unwrap();
        assert_eq!(sweep.rows[0], baseline);
    }

    #[test]
    fn gain_gives_higher_narrower_peaks() {
        let (g, _) = canonical_figure_params(Figure::Fig5Gain);
        let (n, _) = canonical_figure_params(Figure::Fig5NoGain);
        let grid = default_grid(&g);
        let cmp = gain_comparison(&g, &n, 0.0, &grid).unwrap();
        assert!(cmp.gain_sharpens());
        let same = gain_comparison(&g, &g.with_gain(1.5), 0.0, &grid).unwrap();
        assert_eq!(same.with_gain, same.without_gain);
        assert_eq!(same.peaks_with_gain, same.peaks_without_gain);
        assert!(gain_comparison(&g, &n.with_delta(1.0), 0.0, &grid).is_err());
    }

    proptest! {
        #[test]
        fn floor_and_nonnegative_terms(w in -50.0f64..50.0, delta in 0.0f64..3.4, det in -2.0f64..2.0) {
            let p = fig4().with_delta(delta);
            for r in [Resonator::A, Resonator::B] {
                let t = spectrum_terms(&p, det, w, r);
                prop_assert!(t.s1 >= 0.0 && t.s2 >= 0.0 && t.s3.unwrap_or(0.0) >= 0.0);
                prop_assert!(t.total() >= 0.5 - 1e-12);
            }
        }
    }
}
