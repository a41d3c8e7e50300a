//! Mean-field steady state of the driven coupled resonators.

use nalgebra::Vector2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{self, Method, State};
use crate::params::{validate_drive, Drive, SystemParams};
use crate::spectrum::{drift_matrix, is_stable, require_stable};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Denominators smaller than this are treated as an exceptional point.
const SINGULAR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl SteadyState {
    pub fn n_a(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn n_b(&self) -> f64 {
        self.beta.norm_sqr()
    }
}

fn check_inputs(params: &SystemParams, drive: &Drive) -> Result<()> {
    params.ensure_valid()?;
    let d = validate_drive(drive);
    if !d.is_empty() {
        return Err(Error::Invalid(d));
    }
    require_stable(params)?;
    Ok(())
}

/// Closed-form amplitudes
///
/// ```text
/// alpha = ((D - i kb/2) eta_a - J eta_b) / (J^2 - (D - Delta + i ga/2)(D - i kb/2))
/// beta  = ((D - Delta + i ga/2) eta_b - J eta_a) / (same)
/// ```
///
/// with `D` the detuning of the bare resonators from the drive.
pub fn steady_state(params: &SystemParams, drive: &Drive) -> Result<SteadyState> {
    check_inputs(params, drive)?;
    let det = drive.detuning(params);
    let j = params.coupling;
    let fa = Complex64::new(det - params.delta, params.net_gain() / 2.0);
    let fb = Complex64::new(det, -params.kappa_b() / 2.0);
    let denom = j * j - fa * fb;
    if denom.norm() < SINGULAR_FLOOR {
        return Err(Error::Singular(denom.norm()));
    }
    Ok(SteadyState {
        alpha: (fb * drive.eta_a - j * drive.eta_b) / denom,
        beta: (fa * drive.eta_b - j * drive.eta_a) / denom,
    })
}

/// Steady state from `M x = i eta`, the fixed point of the mean-field
/// equations, solved by LU. Used as a cross-check on [`steady_state`].
pub fn steady_state_linear(params: &SystemParams, drive: &Drive) -> Result<SteadyState> {
    check_inputs(params, drive)?;
    let m = drift_matrix(params, drive.detuning(params));
    let rhs = Vector2::new(I * drive.eta_a, I * drive.eta_b);
    let x = m.lu().solve(&rhs).ok_or(Error::Singular(0.0))?;
    Ok(SteadyState { alpha: x[0], beta: x[1] })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonRow {
    pub delta: f64,
    pub detuning: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub valid: bool,
}

/// Photon numbers over a grid of (shift, detuning). Rows whose steady state
/// does not exist are kept with `valid = false` and NaN photon numbers.
pub fn photon_number_sweep(
    template: &SystemParams,
    drive: &Drive,
    detunings: &[f64],
    deltas: &[f64],
) -> Vec<PhotonRow> {
    let mut rows = Vec::with_capacity(detunings.len() * deltas.len());
    for &delta in deltas {
        let p = template.with_delta(delta);
        for &detuning in detunings {
            let row = match steady_state(&p, &drive.with_detuning(&p, detuning)) {
                Ok(s) => PhotonRow { delta, detuning, n_a: s.n_a(), n_b: s.n_b(), valid: true },
                Err(_) => PhotonRow { delta, detuning, n_a: f64::NAN, n_b: f64::NAN, valid: false },
            };
            rows.push(row);
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldTrajectory {
    pub times: Vec<f64>,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
}

impl MeanFieldTrajectory {
    pub fn last(&self) -> SteadyState {
        SteadyState { alpha: *self.alpha.last().unwrap(), beta: *self.beta.last().unwrap() }
    }
}

/// Integrates the mean-field equations from `initial`. Stability is not
/// required, so runaway solutions can be observed.
pub fn integrate_mean_field(
    params: &SystemParams,
    drive: &Drive,
    t_end: f64,
    dt: f64,
    initial: (Complex64, Complex64),
    method: Method,
) -> Result<MeanFieldTrajectory> {
    params.ensure_valid()?;
    let m = drift_matrix(params, drive.detuning(params));
    let (ea, eb) = (I * drive.eta_a, I * drive.eta_b);
    let rhs = |_: f64, y: &State| {
        [
            m[(0, 0)] * y[0] + m[(0, 1)] * y[1] - ea,
            m[(1, 0)] * y[0] + m[(1, 1)] * y[1] - eb,
        ]
    };
    let points = ode::integrate(rhs, [initial.0, initial.1], t_end, dt, method)?;
    let mut traj = MeanFieldTrajectory {
        times: Vec::with_capacity(points.len()),
        alpha: Vec::with_capacity(points.len()),
        beta: Vec::with_capacity(points.len()),
    };
    for (t, y) in points {
        traj.times.push(t);
        traj.alpha.push(y[0]);
        traj.beta.push(y[1]);
    }
    Ok(traj)
}

/// Time after which transients have decayed by `e^-50`.
pub fn convergence_time(params: &SystemParams) -> f64 {
    50.0 / is_stable(params).max_real().abs()
}
