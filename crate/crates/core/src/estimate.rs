//! Rotation estimation from output spectra.
//!
//! The default channel reads the lower-supermode peak frequency and inverts
//! `w_l = -Delta/2 - sqrt(Delta^2 + 4J^2)/2`. Gain pulls the peak slightly
//! away from that closed form, so the seed is refined by least squares
//! against the analytic spectrum. A second channel inverts the monotone
//! peak height `S^max(Delta)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{
    closed_form_left_peak, left_peak_frequency, refine_peak, smax_sweep, spectrum_value, Resonator, SpectrumSeries,
    VACUUM_FLOOR,
};
use crate::oracle::SpectrumEstimate;
use crate::params::SystemParams;
use crate::peaks::{bisect, golden_max, local_maxima, prominence, quadratic_vertex};
use crate::sagnac::SagnacConfig;

/// Exact inverse of the left-peak closed form: with `s = -2 w_l`,
/// `Delta = (s^2 - 4J^2) / (2s)`.
pub fn delta_from_left_peak(omega_l: f64, j: f64) -> Result<f64> {
    if !(omega_l <= -j) || j <= 0.0 {
        return Err(Error::OutOfRange { omega: omega_l, bound: -j });
    }
    let s = -2.0 * omega_l;
    Ok((s * s - 4.0 * j * j) / (2.0 * s))
}

/// `d w_l / d Delta = -1/2 - Delta / (2 sqrt(Delta^2 + 4J^2))`.
pub fn responsivity(delta: f64, j: f64) -> f64 {
    -0.5 - delta / (2.0 * (delta * delta + 4.0 * j * j).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    PeakFrequency,
    PeakHeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimationResult {
    pub delta_hat: f64,
    #[serde(rename = "omega_hat_rad_s")]
    pub omega_hat: Option<f64>,
    /// RMS of the (weighted, when standard errors exist) model residuals
    /// over the fit window.
    pub residual: f64,
    pub responsivity: f64,
    pub channel: Channel,
    /// One-sigma uncertainty of `delta_hat`, when the data carry errors.
    /// Treats bins as independent, which holds for rectangular-window
    /// periodograms; a Hann window correlates neighbours and this value
    /// then understates the spread.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_stderr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateConfig {
    /// Half-width of the fit window around the seed, in `kappa_b`.
    pub window: f64,
    pub refine: bool,
    pub resonator: Resonator,
    /// Relative height difference below which two peaks are ambiguous.
    pub ambiguity: f64,
    /// Required peak height above the floor, in standard errors.
    pub min_snr: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { window: 2.0, refine: true, resonator: Resonator::A, ambiguity: 0.10, min_snr: 5.0 }
    }
}

/// Spectrum samples in the resonantly driven frame, analytic or estimated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumData {
    pub omega: Vec<f64>,
    pub s: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl From<&SpectrumSeries> for SpectrumData {
    fn from(series: &SpectrumSeries) -> Self {
        let (omega, s) = series
            .omega
            .iter()
            .zip(&series.total)
            .filter(|(_, v)| v.is_finite())
            .map(|(w, v)| (*w, *v))
            .unzip();
        Self { omega, s, stderr: None }
    }
}

impl From<&SpectrumEstimate> for SpectrumData {
    fn from(est: &SpectrumEstimate) -> Self {
        Self { omega: est.omega.clone(), s: est.s_est.clone(), stderr: Some(est.stderr.clone()) }
    }
}

impl SpectrumData {
    fn error_at(&self, i: usize) -> f64 {
        self.stderr.as_ref().map_or(0.0, |e| e[i])
    }
}

/// Index of the dominant peak among the negative-frequency samples.
fn locate_left_peak(data: &SpectrumData, cfg: &EstimateConfig) -> Result<usize> {
    let left: Vec<usize> = (0..data.omega.len()).filter(|&i| data.omega[i] < 0.0).collect();
    if left.len() < 3 {
        return Err(Error::NoPeak("fewer than three samples below zero frequency".into()));
    }
    let y: Vec<f64> = left.iter().map(|&i| data.s[i]).collect();
    let mut peaks: Vec<(usize, f64)> = local_maxima(&y)
        .into_iter()
        .filter(|&k| {
            // a bump only counts if it stands clear of the noise
            let noise = cfg.min_snr * data.error_at(left[k]);
            let p = prominence(&y, k);
            p > noise && y[k] - VACUUM_FLOOR > noise
        })
        .map(|k| (k, y[k]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let Some(&(k, top)) = peaks.first() else {
        return Err(Error::NoPeak(format!("no maximum above the floor by {} standard errors", cfg.min_snr)));
    };
    if let Some(&(k2, second)) = peaks.get(1) {
        if (top - second) <= cfg.ambiguity * (top - VACUUM_FLOOR) {
            return Err(Error::AmbiguousPeak { first: data.omega[left[k]], second: data.omega[left[k2]] });
        }
    }
    Ok(left[k])
}

/// Shift whose model peak sits at `omega`, by bisection around `seed`.
/// Removes the pulling of the peak away from the supermode frequency.
fn match_peak(known: &SystemParams, resonator: Resonator, omega: f64, seed: f64) -> f64 {
    let offset = |d: f64| {
        let p = known.with_delta(d);
        refine_peak(&p, 0.0, resonator, closed_form_left_peak(&p, 0.0)).map_or(f64::NAN, |pk| pk.omega_peak - omega)
    };
    let (lo, hi) = (seed - 0.5, seed + 0.5);
    let (flo, fhi) = (offset(lo), offset(hi));
    // the peak moves down as the shift grows
    if !(flo >= 0.0 && fhi <= 0.0) {
        return seed;
    }
    bisect(|d| -offset(d), lo, hi, 1e-9)
}

/// Estimates the shift from the lower-supermode peak of one output spectrum.
///
/// `known` supplies the calibrated coupling, rates and gain; its shift is
/// ignored. The seed is the closed-form inversion of the interpolated peak
/// frequency. With `refine`, the seed is first moved to the shift whose
/// model peak matches the observed one, then the analytic spectrum is
/// fitted over the window by a one-parameter least-squares search,
/// weighted by the inverse variance when standard errors are present.
pub fn estimate_from_spectrum(
    data: &SpectrumData,
    known: &SystemParams,
    cfg: &EstimateConfig,
    sagnac: Option<&SagnacConfig>,
) -> Result<EstimationResult> {
    known.with_delta(0.0).ensure_valid()?;
    if data.omega.len() != data.s.len() || data.stderr.as_ref().is_some_and(|e| e.len() != data.s.len()) {
        return Err(Error::Argument("spectrum columns differ in length".into()));
    }
    let i = locate_left_peak(data, cfg)?;
    let (omega_seed, _) = quadratic_vertex(&data.omega, &data.s, i);
    let j = known.coupling;
    // the pulled peak can sit just above -J near zero shift
    let seed = delta_from_left_peak(omega_seed.min(-j), j)?;

    let half = cfg.window * known.kappa_b();
    let window: Vec<usize> = (0..data.omega.len())
        .filter(|&k| (data.omega[k] - omega_seed).abs() <= half && data.s[k].is_finite())
        .collect();
    let weight = |k: usize| match &data.stderr {
        Some(e) if e[k] > 0.0 => 1.0 / (e[k] * e[k]),
        _ => 1.0,
    };
    let chi2 = |delta: f64| -> f64 {
        let p = known.with_delta(delta);
        window
            .iter()
            .map(|&k| {
                let r = data.s[k] - spectrum_value(&p, 0.0, data.omega[k], cfg.resonator);
                weight(k) * r * r
            })
            .sum()
    };

    let delta_hat = if cfg.refine && window.len() >= 3 {
        let matched = match_peak(known, cfg.resonator, omega_seed, seed);
        // coarse-to-fine scans; near the stability edge the misfit is very spiky
        let (mut centre, mut span) = (matched, 0.1);
        for _ in 0..3 {
            let n = 41;
            let step = 2.0 * span / (n - 1) as f64;
            centre = (0..n)
                .map(|m| centre - span + step * m as f64)
                .map(|d| (d, chi2(d)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map_or(centre, |(d, _)| d);
            span = step;
        }
        golden_max(|d| -chi2(d), centre - span, centre + span, 1e-10).0
    } else {
        seed
    };
    // the model admits no negative shift
    let delta_hat = delta_hat.max(0.0);

    let n = window.len().max(1) as f64;
    let residual = (chi2(delta_hat) / n).sqrt();
    let delta_stderr = data.stderr.as_ref().filter(|_| cfg.refine).map(|_| {
        let h = 1e-3;
        let curv = (chi2(delta_hat + h) - 2.0 * chi2(delta_hat) + chi2(delta_hat - h)) / (h * h);
        (2.0 / curv).sqrt()
    });
    let omega_hat = sagnac.map(|s| s.rotation_from_scaled_shift(delta_hat)).transpose()?;
    Ok(EstimationResult {
        delta_hat,
        omega_hat,
        residual,
        responsivity: responsivity(delta_hat, j),
        channel: Channel::PeakFrequency,
        delta_stderr,
    })
}

/// Inverts the monotone left-peak height curve of the stable range.
///
/// A sweep over `[0, delta_max]` at step 0.1 brackets `height`; bisection on
/// the exact peak height then pins it down.
pub fn delta_from_smax(height: f64, known: &SystemParams, resonator: Resonator, delta_max: f64) -> Result<f64> {
    let grid: Vec<f64> = (0..)
        .map(|k| 0.1 * k as f64)
        .take_while(|d| *d <= delta_max + 1e-12)
        .collect();
    let sweep = smax_sweep(known, &grid)?;
    let value = |row: &crate::noise::SmaxRow| match resonator {
        Resonator::A => row.s_a_max,
        Resonator::B => row.s_b_max,
    };
    let rows = &sweep.rows;
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Err(Error::InsufficientData("no stable shift in range".into()));
    };
    let (lo, hi) = (value(first), value(last));
    if !(lo..=hi).contains(&height) {
        return Err(Error::HeightOutOfRange { height, lo, hi });
    }
    let k = rows.windows(2).position(|w| value(&w[1]) >= height).unwrap_or(0);
    let exact = |d: f64| left_peak_frequency(&known.with_delta(d), resonator).height - height;
    Ok(bisect(exact, rows[k].delta, rows[(k + 1).min(rows.len() - 1)].delta, 1e-12))
}

/// Peak-height channel on spectrum data: the interpolated maximum of the
/// left peak is inverted through [`delta_from_smax`].
pub fn estimate_from_smax(
    data: &SpectrumData,
    known: &SystemParams,
    cfg: &EstimateConfig,
    delta_max: f64,
    sagnac: Option<&SagnacConfig>,
) -> Result<EstimationResult> {
    let i = locate_left_peak(data, cfg)?;
    let (_, height) = quadratic_vertex(&data.omega, &data.s, i);
    let delta_hat = delta_from_smax(height, known, cfg.resonator, delta_max)?;
    let model = left_peak_frequency(&known.with_delta(delta_hat), cfg.resonator).height;
    let omega_hat = sagnac.map(|s| s.rotation_from_scaled_shift(delta_hat)).transpose()?;
    Ok(EstimationResult {
        delta_hat,
        omega_hat,
        residual: (height - model).abs(),
        responsivity: responsivity(delta_hat, known.coupling),
        channel: Channel::PeakHeight,
        delta_stderr: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{closed_form_left_peak, spectrum_a, spectrum_b, uniform_grid};
    use crate::params::{canonical_figure_params, Figure};
    use proptest::prelude::*;

    fn fig4() -> SystemParams {
        canonical_figure_params(Figure::Fig4).0
    }

    fn analytic(p: &SystemParams, res: Resonator) -> SpectrumData {
        let grid = uniform_grid(-12.0, 12.0, 2401);
        let s = match res {
            Resonator::A => spectrum_a(p, 0.0, &grid),
            Resonator::B => spectrum_b(p, 0.0, &grid),
        };
        SpectrumData::from(&s.unwrap())
    }

    #[test]
    fn inverse_fixed_points() {
        assert_eq!(delta_from_left_peak(-5.0, 5.0).unwrap(), 0.0);
        let w = -1.0 - 104f64.sqrt() / 2.0;
        assert!((delta_from_left_peak(w, 5.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(delta_from_left_peak(-4.9, 5.0), Err(Error::OutOfRange { .. })));
    }

    proptest! {
        #[test]
        fn inverse_round_trip(d in 0.0f64..4.0) {
            let p = fig4().with_delta(d);
            let w = closed_form_left_peak(&p, 0.0);
            prop_assert!((delta_from_left_peak(w, 5.0).unwrap() - d).abs() < 1e-10);
        }
    }

    #[test]
    fn responsivity_limits_and_difference() {
        assert_eq!(responsivity(0.0, 5.0), -0.5);
        assert!((responsivity(1e9, 5.0) + 1.0).abs() < 1e-12);
        let w = |d: f64| closed_form_left_peak(&fig4().with_delta(d), 0.0);
        let h = 1e-5;
        let fd = (w(2.0 + h) - w(2.0 - h)) / (2.0 * h);
        assert!((fd - responsivity(2.0, 5.0)).abs() < 1e-6);
    }

    #[test]
    fn responsivity_tracks_refined_peak() {
        let p = fig4();
        let h = 1e-3;
        for k in 0..=8 {
            let d = 0.5 * k as f64;
            let lo = left_peak_frequency(&p.with_delta((d - h).max(0.0)), Resonator::A).refined;
            let hi = left_peak_frequency(&p.with_delta(d + h), Resonator::A).refined;
            let fd = (hi - lo) / (d + h - (d - h).max(0.0));
            let r = responsivity(d, 5.0);
            assert!(((fd - r) / r).abs() < 0.05, "delta {d}: {fd} vs {r}");
        }
    }

    #[test]
    fn analytic_spectra_invert() {
        let cfg = EstimateConfig::default();
        for d in [0.0, 0.5, 2.0, 3.0] {
            for res in [Resonator::A, Resonator::B] {
                let p = fig4().with_delta(d);
                let e = estimate_from_spectrum(&analytic(&p, res), &fig4(), &EstimateConfig { resonator: res, ..cfg }, None)
                    .unwrap();
                assert!((e.delta_hat - d).abs() < 1e-4, "{res:?} {d}: {}", e.delta_hat);
                assert!(e.residual < 1e-6);
                assert!(e.responsivity <= -0.5);
            }
        }
    }

    #[test]
    fn seed_alone_is_close() {
        let cfg = EstimateConfig { refine: false, ..Default::default() };
        let p = fig4();
        let e = estimate_from_spectrum(&analytic(&p, Resonator::A), &p, &cfg, None).unwrap();
        assert!((e.delta_hat - 2.0).abs() < 0.1, "{}", e.delta_hat);
    }

    #[test]
    fn flat_spectrum_has_no_peak() {
        let data = SpectrumData {
            omega: uniform_grid(-10.0, 10.0, 101),
            s: vec![VACUUM_FLOOR; 101],
            stderr: None,
        };
        assert!(matches!(
            estimate_from_spectrum(&data, &fig4(), &EstimateConfig::default(), None),
            Err(Error::NoPeak(_))
        ));
    }

    #[test]
    fn twin_peaks_are_ambiguous() {
        let omega = uniform_grid(-10.0, 0.0, 401);
        let bump = |w: f64, c: f64| 1.0 / (1.0 + (w - c) * (w - c) * 16.0);
        let s = omega.iter().map(|&w| 0.5 + 3.0 * bump(w, -7.0) + 2.9 * bump(w, -3.0)).collect();
        let data = SpectrumData { omega, s, stderr: None };
        assert!(matches!(
            estimate_from_spectrum(&data, &fig4(), &EstimateConfig::default(), None),
            Err(Error::AmbiguousPeak { .. })
        ));
    }

    #[test]
    fn rotation_is_reported_with_sagnac() {
        let s = SagnacConfig::silica_microsphere(1e-3, 2.0 * std::f64::consts::PI * 1e6);
        let rot = 300.0;
        let d = s.shift_from_rotation(rot).scaled;
        let p = fig4().with_delta(d);
        let e = estimate_from_spectrum(&analytic(&p, Resonator::A), &fig4(), &EstimateConfig::default(), Some(&s))
            .unwrap();
        assert!((e.omega_hat.unwrap() - rot).abs() < 0.02 * rot);
    }

    #[test]
    fn height_channel_agrees() {
        let cfg = EstimateConfig::default();
        for d in [0.5, 1.5, 2.5] {
            let p = fig4().with_delta(d);
            let data = analytic(&p, Resonator::A);
            let a = estimate_from_spectrum(&data, &fig4(), &cfg, None).unwrap();
            let b = estimate_from_smax(&data, &fig4(), &cfg, 4.0, None).unwrap();
            assert_eq!(b.channel, Channel::PeakHeight);
            assert!((a.delta_hat - b.delta_hat).abs() < 0.1, "{d}: {} vs {}", a.delta_hat, b.delta_hat);
        }
        let err = delta_from_smax(1e6, &fig4(), Resonator::A, 4.0);
        assert!(matches!(err, Err(Error::HeightOutOfRange { .. })));
    }
}
