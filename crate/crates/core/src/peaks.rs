//! Small 1-D helpers for locating and measuring spectral peaks.

/// Indices of interior local maxima. A flat top counts once, at its first sample.
pub fn local_maxima(y: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < y.len() {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < y.len() && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < y.len() && y[j + 1] < y[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Vertex of the parabola through samples `i-1, i, i+1`.
pub fn quadratic_vertex(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= x.len() {
        return (x[i], y[i]);
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a >= 0.0 || !a.is_finite() {
        return (x1, y1);
    }
    let b = d01 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    let c = y1 - a * x1 * x1 - b * x1;
    (xv, a * xv * xv + b * xv + c)
}

/// Full width at the level `floor + (height - floor)/2`, by linear
/// interpolation of the crossings on either side of sample `i`.
pub fn fwhm_on_grid(x: &[f64], y: &[f64], i: usize, floor: f64) -> Option<f64> {
    let level = floor + (y[i] - floor) / 2.0;
    let cross = |j: usize, k: usize| x[j] + (level - y[j]) * (x[k] - x[j]) / (y[k] - y[j]);
    let mut l = i;
    while l > 0 && y[l - 1] > level {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < y.len() && y[r + 1] > level {
        r += 1;
    }
    if l == 0 || r + 1 == y.len() {
        return None;
    }
    Some(cross(r, r + 1) - cross(l - 1, l))
}

/// Topographic prominence of the local maximum at `i`: its height above
/// the higher of the two lowest points separating it from higher ground
/// (or from the ends of the data).
pub fn prominence(y: &[f64], i: usize) -> f64 {
    let side = |range: &mut dyn Iterator<Item = usize>| {
        let mut low = y[i];
        for j in range {
            if y[j] > y[i] {
                break;
            }
            low = low.min(y[j]);
        }
        low
    };
    let left = side(&mut (0..i).rev());
    let right = side(&mut (i + 1..y.len()));
    y[i] - left.max(right)
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut c = hi - GOLDEN * (hi - lo);
    let mut d = lo + GOLDEN * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - GOLDEN * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + GOLDEN * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// FWHM of a peak of a continuous function with maximum `(x0, height)`
/// sitting on `floor`. Probes outward with geometrically growing offsets,
/// starting from `step`, up to `span`, then bisects each crossing.
pub fn fwhm_analytic(f: impl Fn(f64) -> f64, x0: f64, height: f64, floor: f64, step: f64, span: f64) -> Option<f64> {
    let level = floor + (height - floor) / 2.0;
    let g = |x: f64| f(x) - level;
    let edge = |dir: f64| {
        let mut inner = 0.0;
        let mut off = step;
        while off <= span {
            if g(x0 + dir * off) <= 0.0 {
                let (lo, hi) = if dir > 0.0 { (x0 + inner, x0 + off) } else { (x0 - off, x0 - inner) };
                return Some(bisect(g, lo, hi, 1e-13 * (1.0 + x0.abs())));
            }
            inner = off;
            off *= 1.25;
        }
        None
    };
    Some(edge(1.0)? - edge(-1.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prominence_of_two_bumps() {
        let y = [0.0, 3.0, 1.0, 5.0, 2.0, 2.5, 0.0];
        assert_eq!(prominence(&y, 3), 5.0);
        assert_eq!(prominence(&y, 1), 2.0);
        assert_eq!(prominence(&y, 5), 0.5);
    }

    fn lorentz(x: f64, c: f64, w: f64) -> f64 {
        0.5 + 1.0 / (1.0 + ((x - c) / (w / 2.0)).powi(2))
    }

    #[test]
    fn maxima_and_plateaus() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.0, 2.0, 2.0, 1.0, 3.0]), vec![1, 3]);
        assert!(local_maxima(&[1.0, 2.0, 3.0]).is_empty());
    }

    #[test]
    fn lorentzian_width_and_center() {
        let x: Vec<f64> = (0..2001).map(|i| -5.0 + 0.005 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&x| lorentz(x, 0.3, 0.4)).collect();
        let i = local_maxima(&y)[0];
        let (xv, _) = quadratic_vertex(&x, &y, i);
        assert!((xv - 0.3).abs() < 1e-4);
        let w = fwhm_on_grid(&x, &y, i, 0.5).unwrap();
        assert!((w - 0.4).abs() < 1e-4);
        let (xm, h) = golden_max(|x| lorentz(x, 0.3, 0.4), -1.0, 1.0, 1e-9);
        assert!((xm - 0.3).abs() < 1e-6 && (h - 1.5).abs() < 1e-12);
        let w = fwhm_analytic(|x| lorentz(x, 0.3, 0.4), xm, h, 0.5, 0.01, 5.0).unwrap();
        assert!((w - 0.4).abs() < 1e-9);
    }
}
