//! Bracketed root finding for monotone functions.

use crate::error::{Error, Result};

/// Brent–Dekker root of `f` inside `[a, b]`, where `f(a)` and `f(b)` differ in sign.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Domain(format!("root not bracketed in [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Ok(b)
}

/// Invert a nondecreasing CDF at probability `p`, expanding a bracket from `guess`.
pub fn invert_monotone<F: FnMut(f64) -> f64>(mut cdf: F, p: f64, guess: f64, step: f64) -> Result<f64> {
    let mut lo = guess - step;
    let mut hi = guess + step;
    let mut width = step;
    let mut guard = 0;
    while cdf(lo) > p {
        width *= 2.0;
        lo -= width;
        guard += 1;
        if guard > 200 || !lo.is_finite() {
            return Err(Error::Domain(format!("could not bracket quantile {p}")));
        }
    }
    width = step;
    guard = 0;
    while cdf(hi) < p {
        width *= 2.0;
        hi += width;
        guard += 1;
        if guard > 200 || !hi.is_finite() {
            return Err(Error::Domain(format!("could not bracket quantile {p}")));
        }
    }
    brent(|x| cdf(x) - p, lo, hi, 1e-14 * (1.0 + guess.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn unbracketed_is_error() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn inverts_logistic() {
        let cdf = |x: f64| 1.0 / (1.0 + (-x).exp());
        let q = invert_monotone(cdf, 0.9, 0.0, 1.0).unwrap();
        assert!((q - (0.9f64 / 0.1).ln()).abs() < 1e-12);
    }
}
