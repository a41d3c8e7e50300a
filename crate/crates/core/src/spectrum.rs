//! Supermode eigenvalues, stability and the supermode drive decomposition.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Drive, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which imaginary diagonal the non-Hermitian single-particle matrix carries.
///
/// * `PaperH`: `+i g_a` on a, nothing on b.
/// * `FullH`: `+i g_a` on a, `-i kappa_b` on b.
/// * `Drift`: `+i g_a/2` on a, `-i kappa_b/2` on b. This is the matrix whose
///   eigenvalues govern the Langevin dynamics, and the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DampingConvention {
    PaperH,
    FullH,
    #[default]
    Drift,
}

impl DampingConvention {
    pub fn name(self) -> &'static str {
        match self {
            DampingConvention::PaperH => "paperH",
            DampingConvention::FullH => "fullH",
            DampingConvention::Drift => "drift",
        }
    }

    /// Imaginary diagonal entries `(on a, on b)`.
    fn damping(self, params: &SystemParams) -> (f64, f64) {
        let ga = params.net_gain();
        let kb = params.kappa_b();
        match self {
            DampingConvention::PaperH => (ga, 0.0),
            DampingConvention::FullH => (ga, -kb),
            DampingConvention::Drift => (ga / 2.0, -kb / 2.0),
        }
    }
}

impl fmt::Display for DampingConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DampingConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paperh" => Ok(DampingConvention::PaperH),
            "fullh" => Ok(DampingConvention::FullH),
            "drift" => Ok(DampingConvention::Drift),
            _ => Err(Error::Parse(format!("unknown damping convention '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpectrum {
    pub e_plus: Complex64,
    pub e_minus: Complex64,
    pub convention: DampingConvention,
}

impl ModeSpectrum {
    /// Splitting `Re(E+ - E-)` of the supermode frequencies.
    pub fn gap(&self) -> f64 {
        (self.e_plus - self.e_minus).re
    }
}

/// The 2x2 single-particle matrix in the lab frame.
pub fn mode_matrix(params: &SystemParams, convention: DampingConvention) -> Matrix2<Complex64> {
    let (da, db) = convention.damping(params);
    let w = params.omega_bar();
    let j = Complex64::from(params.coupling);
    Matrix2::new(Complex64::new(w - params.delta, da), j, j, Complex64::new(w, db))
}

/// Orders a pair by descending real part, then descending imaginary part.
fn ordered(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    if (a.re, a.im) >= (b.re, b.im) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Closed-form supermode eigenvalues
/// `E = (2w - Delta + i d_a + i d_b)/2 +- sqrt((Delta - i d_a + i d_b)^2 + 4J^2)/2`
/// on the principal square-root branch.
pub fn eigenvalues(params: &SystemParams, convention: DampingConvention) -> ModeSpectrum {
    let (da, db) = convention.damping(params);
    let w = params.omega_bar();
    let j = params.coupling;
    let mean = Complex64::new(2.0 * w - params.delta, da + db) / 2.0;
    let diff = Complex64::new(params.delta, -da + db);
    let root = (diff * diff + 4.0 * j * j).sqrt() / 2.0;
    let (e_plus, e_minus) = ordered(mean + root, mean - root);
    ModeSpectrum { e_plus, e_minus, convention }
}

/// Eigenvalues of an arbitrary complex 2x2 matrix by shifted QR iteration.
///
/// Iterative and free of the quadratic formula, so it serves as an
/// independent check on [`eigenvalues`]. Returned in descending-real order.
pub fn eigenvalues_numeric(m: &Matrix2<Complex64>) -> (Complex64, Complex64) {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return (Complex64::from(0.0), Complex64::from(0.0));
    }
    let mut a = m / Complex64::from(scale);
    let mut stall = 0;
    for iter in 0..500 {
        let sub = a[(1, 0)].norm();
        if sub <= 1e-17 * (a[(0, 0)].norm() + a[(1, 1)].norm()).max(1e-300) {
            break;
        }
        let shift = if iter % 11 == 10 || stall > 3 {
            stall = 0;
            a[(1, 1)] + Complex64::from_polar(0.75 * sub.max(1e-3), 0.7 + iter as f64)
        } else {
            a[(1, 1)]
        };
        let id = Matrix2::identity();
        let qr = (a - id * shift).qr();
        let next = qr.r() * qr.q() + id * shift;
        if next[(1, 0)].norm() > 0.5 * sub {
            stall += 1;
        }
        a = next;
    }
    let s = Complex64::from(scale);
    ordered(a[(0, 0)] * s, a[(1, 1)] * s)
}

/// One row of a shift sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenRow {
    pub delta: f64,
    pub e_plus: Complex64,
    pub e_minus: Complex64,
}

/// Eigenvalues over a grid of shifts, with branches continued by nearest
/// neighbour in the complex plane rather than re-sorted at every point.
pub fn real_imag_sweep(
    template: &SystemParams,
    delta_grid: &[f64],
    convention: DampingConvention,
) -> Result<Vec<EigenRow>> {
    if delta_grid.is_empty() {
        return Err(Error::InsufficientData("empty shift grid".into()));
    }
    let mut rows: Vec<EigenRow> = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let s = eigenvalues(&template.with_delta(delta), convention);
        let (mut p, mut m) = (s.e_plus, s.e_minus);
        if let Some(prev) = rows.last() {
            let keep = (p - prev.e_plus).norm() + (m - prev.e_minus).norm();
            let swap = (m - prev.e_plus).norm() + (p - prev.e_minus).norm();
            if swap < keep {
                std::mem::swap(&mut p, &mut m);
            }
        }
        rows.push(EigenRow { delta, e_plus: p, e_minus: m });
    }
    Ok(rows)
}

/// Drift matrix `M` of the linear dynamics `d(a, b)/dt = M (a, b) + ...` in
/// the frame rotating at the drive.
pub fn drift_matrix(params: &SystemParams, detuning: f64) -> Matrix2<Complex64> {
    let ga = params.net_gain();
    let kb = params.kappa_b();
    let j = -I * params.coupling;
    Matrix2::new(
        -I * (detuning - params.delta) + ga / 2.0,
        j,
        j,
        -I * detuning - kb / 2.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    /// Drift eigenvalues at zero detuning, descending real part.
    pub drift_eigenvalues: [Complex64; 2],
}

impl Stability {
    pub fn real_parts(&self) -> [f64; 2] {
        [self.drift_eigenvalues[0].re, self.drift_eigenvalues[1].re]
    }

    /// Largest real part; the slowest relaxation rate is its negative.
    pub fn max_real(&self) -> f64 {
        self.drift_eigenvalues[0].re
    }
}

/// Both drift eigenvalues must have strictly negative real part. The
/// detuning only adds a multiple of the identity, so it is set to zero.
pub fn is_stable(params: &SystemParams) -> Stability {
    let m = drift_matrix(params, 0.0);
    let tr = m.trace();
    let det = m.determinant();
    let root = (tr * tr / 4.0 - det).sqrt();
    let (a, b) = ordered(tr / 2.0 + root, tr / 2.0 - root);
    Stability { stable: a.re < 0.0 && b.re < 0.0, drift_eigenvalues: [a, b] }
}

pub(crate) fn require_stable(params: &SystemParams) -> Result<Stability> {
    let s = is_stable(params);
    if s.stable {
        Ok(s)
    } else {
        Err(Error::Unstable(s.real_parts()))
    }
}

/// Drive amplitudes seen by the symmetric (A) and antisymmetric (B) supermodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupermodeDrive {
    pub amp_a: Complex64,
    pub amp_b: Complex64,
}

impl SupermodeDrive {
    /// Maps back to the bare-mode amplitudes `(eta_a, eta_b)`.
    pub fn to_bare(&self) -> (Complex64, Complex64) {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        ((self.amp_a + self.amp_b) * r, (self.amp_a - self.amp_b) * r)
    }
}

/// `A = (a + b)/sqrt(2)`, `B = (a - b)/sqrt(2)`.
pub fn supermode_drive(drive: &Drive) -> SupermodeDrive {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    SupermodeDrive {
        amp_a: Complex64::from((drive.eta_a + drive.eta_b) * r),
        amp_b: Complex64::from((drive.eta_a - drive.eta_b) * r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{canonical_figure_params, Figure};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fig2() -> SystemParams {
        canonical_figure_params(Figure::Fig2).0
    }

    fn lossless() -> SystemParams {
        // g = kappa_a gives g_a = 0
        fig2().with_gain(1.0)
    }

    #[test]
    fn symmetric_lossless_dimer() {
        let s = eigenvalues(&lossless(), DampingConvention::PaperH);
        assert_eq!(s.e_plus, Complex64::new(5.0, 0.0));
        assert_eq!(s.e_minus, Complex64::new(-5.0, 0.0));
    }

    #[test]
    fn gain_at_zero_shift_matches_numeric() {
        let s = eigenvalues(&fig2(), DampingConvention::PaperH);
        let (p, m) = eigenvalues_numeric(&mode_matrix(&fig2(), DampingConvention::PaperH));
        let half = (100.0f64 - 0.25).sqrt() / 2.0;
        // QR oracle: 0.25 i +- sqrt(99.75)/2
        assert_abs_diff_eq!(p.re, half, epsilon = 1e-12);
        assert_abs_diff_eq!(p.im, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(m.re, -half, epsilon = 1e-12);
        assert_abs_diff_eq!((s.e_plus - p).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((s.e_minus - m).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn decoupled_is_diagonal() {
        let p = fig2().with_coupling(0.0).with_delta(1.5);
        let s = eigenvalues(&p, DampingConvention::PaperH);
        assert_eq!(s.e_plus, Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!((s.e_minus - Complex64::new(-1.5, 0.5)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sweep_gap_and_asymptotes() {
        let grid: Vec<f64> = (0..=400).map(|i| -10.0 + 0.05 * i as f64).collect();
        let rows = real_imag_sweep(&fig2(), &grid, DampingConvention::PaperH).unwrap();
        let mid = &rows[200];
        assert_eq!(mid.delta, 0.0);
        assert_abs_diff_eq!((mid.e_plus - mid.e_minus).re, 99.75f64.sqrt(), epsilon = 1e-12);
        for w in rows.windows(2) {
            assert!((w[1].e_plus - w[0].e_plus).norm() < 0.5);
            assert!((w[1].e_minus - w[0].e_minus).norm() < 0.5);
        }
        for r in &rows {
            assert!((r.e_plus - r.e_minus).re >= 10.0 * (1.0 - 0.01));
        }
        let lossless_gap = eigenvalues(&lossless(), DampingConvention::PaperH).gap();
        assert_eq!(lossless_gap, 10.0);

        let far = eigenvalues(&fig2().with_delta(1e5), DampingConvention::PaperH);
        assert!((far.e_plus - Complex64::new(0.0, 0.0)).norm() < 1e-3);
        assert!((far.e_minus - Complex64::new(-1e5, 0.5)).norm() < 1e-3);
        assert!(real_imag_sweep(&fig2(), &[], DampingConvention::PaperH).is_err());
    }

    #[test]
    fn stability_examples() {
        let s = is_stable(&fig2());
        assert!(s.stable);
        // trace/determinant oracle: M = [[0.25, -5i], [-5i, -0.5]]
        let tr = 0.25 - 0.5;
        let det = Complex64::new(-0.125 + 25.0, 0.0);
        let disc = (Complex64::from(tr * tr / 4.0) - det).sqrt();
        assert_abs_diff_eq!(s.real_parts()[0], (tr / 2.0 + disc.re).max(tr / 2.0 - disc.re), epsilon = 1e-12);
        assert_abs_diff_eq!(s.real_parts()[0], -0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(s.real_parts()[1], -0.125, epsilon = 1e-12);

        let runaway = fig2().with_gain(2.5).with_coupling(0.0);
        assert!(runaway.net_gain() > runaway.kappa_b());
        assert!(!is_stable(&runaway).stable);
    }

    #[test]
    fn supermode_drives() {
        let s = supermode_drive(&Drive::new(0.2, 0.2, 0.0));
        assert_abs_diff_eq!(s.amp_a.re, 0.2 * 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(s.amp_b, Complex64::from(0.0));
        let s = supermode_drive(&Drive::new(0.2, 0.0, 0.0));
        assert_abs_diff_eq!(s.amp_a.re, 0.2 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amp_b.re, 0.2 / 2f64.sqrt(), epsilon = 1e-15);
        let s = supermode_drive(&Drive::new(0.0, 0.0, 0.0));
        assert_eq!((s.amp_a, s.amp_b), (Complex64::from(0.0), Complex64::from(0.0)));
    }

    fn any_params() -> impl Strategy<Value = SystemParams> {
        (0.0f64..2.0, 0.0..2.0, 0.0..3.0, 0.01..2.0, 0.0..2.0, 0.0..10.0, 0.0..10.0, -5.0..5.0).prop_map(
            |(kxa, k0a, g, kxb, k0b, j, d, w)| {
                let mut p = fig2();
                p.res_a.kappa_ex = kxa;
                p.res_a.kappa_0 = k0a;
                p.res_a.gain = g;
                p.res_b.kappa_ex = kxb;
                p.res_b.kappa_0 = k0b;
                p.res_a.omega = w;
                p.res_b.omega = w;
                p.with_coupling(j).with_delta(d)
            },
        )
    }

    proptest! {
        #[test]
        fn eigenvalue_sum_is_trace(p in any_params()) {
            for c in [DampingConvention::PaperH, DampingConvention::FullH, DampingConvention::Drift] {
                let s = eigenvalues(&p, c);
                let tr = mode_matrix(&p, c).trace();
                prop_assert!((s.e_plus + s.e_minus - tr).norm() < 1e-12 * (1.0 + tr.norm()));
                prop_assert!(s.e_plus.re >= s.e_minus.re);
            }
        }

        #[test]
        fn stability_ignores_frame_shift(p in any_params(), c in -20.0f64..20.0) {
            let mut q = p;
            q.res_a.omega += c;
            q.res_b.omega += c;
            prop_assert_eq!(is_stable(&p).stable, is_stable(&q).stable);
            let m0 = drift_matrix(&p, 0.3);
            let m1 = drift_matrix(&q, 0.3);
            prop_assert_eq!(m0, m1);
        }

        #[test]
        fn drive_decomposition_inverts(ea in 0.0f64..3.0, eb in 0.0f64..3.0) {
            let (a, b) = supermode_drive(&Drive::new(ea, eb, 0.0)).to_bare();
            prop_assert!((a - ea).norm() < 1e-12 && (b - eb).norm() < 1e-12);
        }
    }
}
