//! Bracketed scalar root finding: Brent's method plus a sign-change scan.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Brent's method on `[a, b]`; `f(a)` and `f(b)` must have opposite signs.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailure {
            context: "brent".into(),
            lo: a,
            hi: b,
        });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation / secant step.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0));
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1.copysign(xm)
        };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(Error::RootNonConvergence { iters: MAX_ITER })
}

/// Scan `n_points` equally spaced points on `[lo, hi]` and return the
/// subintervals where `f` changes sign.
pub fn sign_change_scan<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    n_points: usize,
) -> Vec<(f64, f64)> {
    assert!(n_points >= 2);
    let h = (hi - lo) / (n_points - 1) as f64;
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..n_points {
        let x = lo + i as f64 * h;
        let fx = f(x);
        // Strict crossings, plus grid points that hit a root exactly; an
        // exact zero endpoint produces one bracket, not one per side.
        let crossing = f_prev * fx < 0.0;
        let hit_zero = fx == 0.0 && f_prev != 0.0;
        let leave_zero =
            f_prev == 0.0 && fx != 0.0 && brackets.last().map_or(true, |b| b.1 != x_prev);
        if crossing || hit_zero || leave_zero {
            brackets.push((x_prev, x));
        }
        x_prev = x;
        f_prev = fx;
    }
    brackets
}
