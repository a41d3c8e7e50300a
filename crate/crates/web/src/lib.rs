//! Browser bindings for the interactive demo page in `www/`.
//!
//! Each export returns a flat `Float64Array`; the layout is given per
//! function. All quantities are in units of the passive decay rate.

use wasm_bindgen::prelude::*;
use wgm_gyro::noise::{closed_form_left_peak, left_peak_frequency, spectrum_a, spectrum_b, uniform_grid, Resonator};
use wgm_gyro::spectrum::{is_stable, real_imag_sweep, DampingConvention};
use wgm_gyro::steady::photon_number_sweep;
use wgm_gyro::{canonical_figure_params, Drive, Figure, SystemParams};

fn base(gain: f64, coupling: f64, delta: f64) -> SystemParams {
    canonical_figure_params(Figure::Fig4).0.with_gain(gain).with_coupling(coupling).with_delta(delta)
}

fn to_js(err: wgm_gyro::Error) -> JsError {
    JsError::new(&err.to_string())
}

/// Supermode eigenvalues over `n` shifts in `[-10, 10]`.
///
/// Layout: `[delta; n] [Re E+; n] [Im E+; n] [Re E-; n] [Im E-; n]`.
/// `convention` is `paperH`, `fullH` or `drift`.
#[wasm_bindgen]
pub fn eigen_branches(gain: f64, coupling: f64, convention: &str, n: usize) -> Result<Vec<f64>, JsError> {
    let conv: DampingConvention = convention.parse().map_err(to_js)?;
    let rows = real_imag_sweep(&base(gain, coupling, 0.0), &uniform_grid(-10.0, 10.0, n), conv).map_err(to_js)?;
    let mut out = Vec::with_capacity(5 * rows.len());
    out.extend(rows.iter().map(|r| r.delta));
    out.extend(rows.iter().map(|r| r.e_plus.re));
    out.extend(rows.iter().map(|r| r.e_plus.im));
    out.extend(rows.iter().map(|r| r.e_minus.re));
    out.extend(rows.iter().map(|r| r.e_minus.im));
    Ok(out)
}

/// Mean photon numbers over `n` drive detunings in `[-10, 10]`.
///
/// Layout: `[detuning; n] [n_a; n] [n_b; n]`, NaN where no steady state exists.
#[wasm_bindgen]
pub fn photon_numbers(gain: f64, coupling: f64, delta: f64, eta_a: f64, eta_b: f64, n: usize) -> Vec<f64> {
    let p = base(gain, coupling, delta);
    let rows = photon_number_sweep(&p, &Drive::new(eta_a, eta_b, 0.0), &uniform_grid(-10.0, 10.0, n), &[delta]);
    let mut out = Vec::with_capacity(3 * rows.len());
    out.extend(rows.iter().map(|r| r.detuning));
    out.extend(rows.iter().map(|r| r.n_a));
    out.extend(rows.iter().map(|r| r.n_b));
    out
}

/// Output noise spectra of both resonators over `n` frequencies in
/// `[-half_width, half_width]`.
///
/// Layout: `[omega; n] [S_a; n] [S_b; n]` followed by five scalars:
/// stable (1 or 0), closed-form left peak, refined left peak of `S_a`,
/// its height, and the largest drift real part.
#[wasm_bindgen]
pub fn noise_spectra(gain: f64, coupling: f64, delta: f64, half_width: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let p = base(gain, coupling, delta);
    let grid = uniform_grid(-half_width, half_width, n);
    let sa = spectrum_a(&p, 0.0, &grid).map_err(to_js)?;
    let sb = spectrum_b(&p, 0.0, &grid).map_err(to_js)?;
    let stability = is_stable(&p);
    let left = left_peak_frequency(&p, Resonator::A);
    let mut out = Vec::with_capacity(3 * n + 5);
    out.extend(&grid);
    out.extend(&sa.total);
    out.extend(&sb.total);
    out.extend([
        f64::from(u8::from(stability.stable)),
        closed_form_left_peak(&p, 0.0),
        left.refined,
        left.height,
        stability.max_real(),
    ]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_layout() {
        let v = eigen_branches(1.5, 5.0, "paperH", 401).ok().unwrap();
        assert_eq!(v.len(), 5 * 401);
        assert_eq!(v[0], -10.0);
        // gap at zero shift is sqrt(4 J^2 - g_a^2)
        let gap = v[401 + 200] - v[3 * 401 + 200];
        assert!((gap - 99.75f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn photon_layout_and_values() {
        let v = photon_numbers(1.5, 5.0, 2.0, 0.2, 0.0, 201);
        assert_eq!(v.len(), 3 * 201);
        assert!(v[201..402].iter().all(|x| x.is_finite() && *x >= 0.0));
    }

    #[test]
    fn spectra_trailer() {
        let v = noise_spectra(1.5, 5.0, 2.0, 12.0, 801).ok().unwrap();
        assert_eq!(v.len(), 3 * 801 + 5);
        let t = &v[3 * 801..];
        assert_eq!(t[0], 1.0);
        assert!((t[2] - t[1]).abs() < 0.25);
        assert!(v[801..3 * 801].iter().all(|s| *s >= 0.5 - 1e-9));
        assert_eq!(noise_spectra(1.5, 5.0, 4.0, 12.0, 11).ok().unwrap()[3 * 11], 0.0);
    }
}
