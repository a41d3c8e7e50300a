//! Explicit Runge-Kutta integration of small complex linear systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State = [Complex64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Dormand-Prince 5(4) with error control.
    Adaptive { rtol: f64, atol: f64 },
    /// Classical RK4 with the step held fixed.
    FixedRk4,
}

impl Default for Method {
    fn default() -> Self {
        Method::Adaptive { rtol: 1e-10, atol: 1e-13 }
    }
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..2 {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

/// Integrates `dy/dt = f(t, y)` from 0 to `t_end`; `h0` is the initial step
/// (adaptive) or the step (fixed). Returns every accepted point.
pub fn integrate(
    f: impl Fn(f64, &State) -> State,
    y0: State,
    t_end: f64,
    h0: f64,
    method: Method,
) -> Result<Vec<(f64, State)>> {
    if !(t_end > 0.0) || !(h0 > 0.0) {
        return Err(Error::Argument(format!("need t_end > 0 and dt > 0, got {t_end}, {h0}")));
    }
    match method {
        Method::FixedRk4 => Ok(rk4(f, y0, t_end, h0)),
        Method::Adaptive { rtol, atol } => dopri5(f, y0, t_end, h0, rtol, atol),
    }
}

fn rk4(f: impl Fn(f64, &State) -> State, y0: State, t_end: f64, h: f64) -> Vec<(f64, State)> {
    let n = (t_end / h).ceil() as usize;
    let h = t_end / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut y = y0;
    out.push((0.0, y));
    for s in 0..n {
        let t = s as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + h / 2.0, &axpy(&y, h, &[(0.5, &k1)]));
        let k3 = f(t + h / 2.0, &axpy(&y, h, &[(0.5, &k2)]));
        let k4 = f(t + h, &axpy(&y, h, &[(1.0, &k3)]));
        y = axpy(&y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
        out.push(((s + 1) as f64 * h, y));
    }
    out
}

// Dormand-Prince tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri5(
    f: impl Fn(f64, &State) -> State,
    y0: State,
    t_end: f64,
    h0: f64,
    rtol: f64,
    atol: f64,
) -> Result<Vec<(f64, State)>> {
    let h_min = 1e-14 * t_end.max(1.0);
    let mut out = vec![(0.0, y0)];
    let (mut t, mut y, mut h) = (0.0, y0, h0.min(t_end));
    let mut k1 = f(t, &y);
    while t < t_end {
        h = h.min(t_end - t);
        let k2 = f(t + C[1] * h, &axpy(&y, h, &[(A2[0], &k1)]));
        let k3 = f(t + C[2] * h, &axpy(&y, h, &[(A3[0], &k1), (A3[1], &k2)]));
        let k4 = f(t + C[3] * h, &axpy(&y, h, &[(A4[0], &k1), (A4[1], &k2), (A4[2], &k3)]));
        let k5 = f(
            t + C[4] * h,
            &axpy(&y, h, &[(A5[0], &k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]),
        );
        let k6 = f(
            t + C[5] * h,
            &axpy(&y, h, &[(A6[0], &k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)]),
        );
        let y5 = axpy(&y, h, &[(B[0], &k1), (B[2], &k3), (B[3], &k4), (B[4], &k5), (B[5], &k6)]);
        let k7 = f(t + h, &y5);
        let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let mut err: f64 = 0.0;
        for i in 0..2 {
            let mut e = Complex64::new(0.0, 0.0);
            for (s, k) in ks.iter().enumerate() {
                e += k[i] * (h * (B[s] - B_LOW[s]));
            }
            let scale = atol + rtol * y[i].norm().max(y5[i].norm());
            err = err.max(e.norm() / scale);
        }
        if err <= 1.0 {
            t = if t_end - (t + h) < h_min { t_end } else { t + h };
            y = y5;
            k1 = k7;
            out.push((t, y));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < h_min && t < t_end {
            return Err(Error::StepRejected { t, h });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(_: f64, y: &State) -> State {
        let l = Complex64::new(-0.1, 3.0);
        [l * y[0], -y[1]]
    }

    #[test]
    fn exponential_decay_both_methods() {
        let y0 = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        let exact = |t: f64| [(Complex64::new(-0.1, 3.0) * t).exp(), Complex64::from(2.0 * (-t).exp())];
        let adaptive = integrate(rotation, y0, 10.0, 0.01, Method::default()).unwrap();
        let (t, y) = *adaptive.last().unwrap();
        assert_eq!(t, 10.0);
        let e = exact(10.0);
        assert!((y[0] - e[0]).norm() < 1e-9 && (y[1] - e[1]).norm() < 1e-9);

        let fixed = integrate(rotation, y0, 10.0, 1e-3, Method::FixedRk4).unwrap();
        let (t, y) = *fixed.last().unwrap();
        assert!((t - 10.0).abs() < 1e-12);
        assert!((y[0] - e[0]).norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        let y0 = [Complex64::new(1.0, 0.0); 2];
        assert!(integrate(rotation, y0, 0.0, 0.1, Method::default()).is_err());
        assert!(integrate(rotation, y0, 1.0, -0.1, Method::default()).is_err());
    }
}
