//! Adaptive Gauss-Kronrod quadrature with a substitution helper for
//! left-endpoint power singularities.

use crate::error::{Error, Result};

// G7-K15 nodes and weights on [-1, 1], positive half.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_7,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * h;
    let mut err = ((kronrod - gauss) * h).abs();
    // Sharpen the raw error estimate the way QUADPACK does.
    let resabs = resabs * h.abs();
    if resabs > 0.0 && err > 0.0 {
        let scale = (200.0 * err / resabs).powf(1.5);
        err = if scale < 1.0 { resabs * scale } else { resabs };
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if round > err {
        err = round;
    }
    Panel {
        a,
        b,
        value,
        error: err,
    }
}

/// Integrate `f` on `[a, b]`, bisecting the worst panel until the summed
/// error estimate is below `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let mut panels = vec![gk15(&f, a, b)];
    let mut subdivisions = 0;
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            return Ok(QuadResult {
                value: total,
                error: err,
                subdivisions,
            });
        }
        if subdivisions >= max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                requested: tol,
                achieved: err,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // Panel has shrunk to machine width; accept what we have.
            panels.push(gk15(&f, a, b));
            let total: f64 = panels.iter().map(|p| p.value).sum();
            let err: f64 = panels.iter().map(|p| p.error).sum();
            return Ok(QuadResult {
                value: total,
                error: err,
                subdivisions,
            });
        }
        panels.push(gk15(&f, a, mid));
        panels.push(gk15(&f, mid, b));
        subdivisions += 1;
    }
}

/// Integrate `f` on `[a, b]` with forced subdivision at the interior points
/// of `breaks` (known kinks of the integrand; adaptive error estimation is
/// unreliable when a kink sits next to a panel edge).
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadResult> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut lo = a;
    let mut acc = QuadResult {
        value: 0.0,
        error: 0.0,
        subdivisions: 0,
    };
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        let piece = integrate(&f, lo, hi, rel_tol, abs_tol, max_subdivisions)?;
        acc.value += piece.value;
        acc.error += piece.error;
        acc.subdivisions += piece.subdivisions;
        lo = hi;
    }
    Ok(acc)
}

/// Integrate `x^{sigma-1} g(x)` on `[0, b]` for `sigma > 0` and smooth `g`.
///
/// The endpoint singularity is removed on `[0, min(1, b)]` by substituting
/// `x = u^{1/sigma}`, which maps the integral to `(1/sigma) ∫ g(u^{1/sigma}) du`.
pub fn integrate_left_power<G: Fn(f64) -> f64>(
    g: G,
    sigma: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadResult> {
    if sigma <= 0.0 {
        return Err(Error::domain(format!(
            "power exponent sigma = {sigma} must be positive"
        )));
    }
    if b <= 0.0 {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    if sigma >= 1.5 {
        return integrate(
            |x| x.powf(sigma - 1.0) * g(x),
            0.0,
            b,
            rel_tol,
            abs_tol,
            max_subdivisions,
        );
    }
    let split = b.min(1.0);
    let inner = integrate(
        |u| g(u.powf(1.0 / sigma)) / sigma,
        0.0,
        split.powf(sigma),
        rel_tol,
        abs_tol,
        max_subdivisions,
    )?;
    if split >= b {
        return Ok(inner);
    }
    let outer = integrate(
        |x| x.powf(sigma - 1.0) * g(x),
        split,
        b,
        rel_tol,
        abs_tol,
        max_subdivisions,
    )?;
    Ok(QuadResult {
        value: inner.value + outer.value,
        error: inner.error + outer.error,
        subdivisions: inner.subdivisions + outer.subdivisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 1e-15, 50).unwrap();
        assert_relative_eq!(r.value, 4.0 - 4.0 + 2.0, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_tail() {
        let r = integrate(|x| (-0.5 * x * x).exp(), 0.0, 12.0, 1e-12, 1e-15, 60).unwrap();
        assert_relative_eq!(
            r.value,
            (std::f64::consts::PI / 2.0).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn left_power_singularity() {
        // int_0^1 x^{-0.7} dx = 1/0.3
        let r = integrate_left_power(|_| 1.0, 0.3, 1.0, 1e-12, 1e-15, 60).unwrap();
        assert_relative_eq!(r.value, 1.0 / 0.3, max_relative = 1e-12);
        // int_0^2 x^{-0.5} e^{-x} dx = sqrt(pi) * erf(sqrt(2))
        let r = integrate_left_power(|x| (-x).exp(), 0.5, 2.0, 1e-12, 1e-15, 60).unwrap();
        assert_relative_eq!(r.value, 1.691_806_732_945_198_2, max_relative = 1e-10);
    }

    #[test]
    fn nonconvergence_reports_achieved_error() {
        let err = integrate(|x| (1.0 / (x + 1e-12)).sin() / (x + 1e-6), 0.0, 1.0, 1e-14, 0.0, 3);
        assert!(matches!(
            err,
            Err(Error::QuadratureNonConvergence { .. })
        ));
    }
}
