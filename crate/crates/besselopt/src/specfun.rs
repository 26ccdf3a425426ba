//! Modified Bessel functions of real order on the positive half line, and
//! the scaled kernels `S±_ν(x) = x^{-ν} I_ν(x)` / `x^{-ν} K_ν(x)` used by
//! the integral kernels downstream.
//!
//! `I_ν` uses its power series (all terms positive, no cancellation) below
//! `x = 30` and the large-argument asymptotic expansion above.  `K_ν` uses
//! the reflection formula `K_ν = (π/2)(I_{-ν} - I_ν)/sin(νπ)` with series
//! evaluation for small `x`, and the integral representation
//! `K_ν(x) = ∫_0^∞ e^{-x cosh t} cosh(νt) dt` for `x ≥ 2` or when `ν` is
//! close enough to an integer that the reflection formula loses digits.

use crate::error::{Error, Result};
use crate::quad;
use statrs::function::gamma::gamma;

const SERIES_ASYMPTOTIC_SWITCH: f64 = 30.0;
const REFLECTION_SIN_CUTOFF: f64 = 1e-3;
/// e^x overflows f64 just above x = 709.
const EXP_OVERFLOW: f64 = 705.0;

/// Bessel order restricted to `(-1, 2]`, the range needed for dimensions
/// `n ∈ (0, 2)`: `ν = (n-2)/2` and `ν + 1 = n/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order(f64);

impl Order {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu <= -1.0 || nu > 2.0 {
            return Err(Error::domain(format!("order nu = {nu} outside (-1, 2]")));
        }
        Ok(Order(nu))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSign {
    Plus,
    Minus,
}

fn check_positive_x(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("argument x = {x} must be positive")));
    }
    Ok(())
}

/// Power series for `x^{-ν} I_ν(x) = 2^{-ν} Σ_k (x²/4)^k / (k! Γ(ν+k+1))`.
/// Valid for any `x ≥ 0`; every term is positive.
fn s_minus_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0 / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..500 {
        let k = k as f64;
        term *= q / (k * (nu + k));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum * 2f64.powf(-nu)
}

/// Asymptotic expansion `I_ν(x) ~ e^x/√(2πx) Σ_k (-1)^k a_k(ν)/x^k`
/// with the exponential factor removed.
fn bessel_i_asymptotic_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = term;
    for k in 0..60 {
        let k = k as f64;
        let next = -term * (mu - (2.0 * k + 1.0).powi(2)) / (8.0 * (k + 1.0) * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `e^{-x} I_ν(x)` for `nu > -1`, any positive `x`.
pub(crate) fn bessel_i_scaled_raw(nu: f64, x: f64) -> f64 {
    if x < SERIES_ASYMPTOTIC_SWITCH {
        s_minus_series(nu, x) * x.powf(nu) * (-x).exp()
    } else {
        bessel_i_asymptotic_scaled(nu, x)
    }
}

fn bessel_i_raw(nu: f64, x: f64) -> Result<f64> {
    if x < SERIES_ASYMPTOTIC_SWITCH {
        Ok(s_minus_series(nu, x) * x.powf(nu))
    } else if x > EXP_OVERFLOW {
        Err(Error::domain(format!(
            "bessel_i overflows at x = {x}; use the scaled variant"
        )))
    } else {
        Ok(bessel_i_asymptotic_scaled(nu, x) * x.exp())
    }
}

/// `e^{x} K_ν(x)` through the integral representation
/// `∫_0^∞ e^{-x(cosh t - 1)} cosh(νt) dt`; valid for any real `ν`, `x > 0`.
fn bessel_k_scaled_integral(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    // Truncate where the integrand has decayed ~e^{-40} below its scale.
    let mut t_max = 1.0f64;
    while x * (t_max.cosh() - 1.0) - nu * t_max < 40.0 {
        t_max *= 1.5;
    }
    let r = quad::integrate(
        |t| (-x * (t.cosh() - 1.0) + (nu * t).abs()).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp()),
        0.0,
        t_max,
        1e-13,
        1e-300,
        80,
    )
    .expect("K integral representation must converge for x > 0");
    r.value
}

fn bessel_k_raw(nu: f64, x: f64) -> Result<f64> {
    let nu = nu.abs(); // K_{-nu} = K_nu
    let sin_pi_nu = (nu * std::f64::consts::PI).sin();
    if x >= 2.0 || sin_pi_nu.abs() < REFLECTION_SIN_CUTOFF {
        return Ok(bessel_k_scaled_integral(nu, x) * (-x).exp());
    }
    if nu <= 1.0 {
        // K_nu = (pi/2) (I_{-nu} - I_nu) / sin(nu pi), series for both I's.
        let i_neg = s_minus_series(-nu, x) * x.powf(-nu);
        let i_pos = s_minus_series(nu, x) * x.powf(nu);
        Ok(0.5 * std::f64::consts::PI * (i_neg - i_pos) / sin_pi_nu)
    } else {
        // Upward recurrence K_{m+1} = K_{m-1} + (2m/x) K_m from base orders in (-1, 1].
        let base = nu - 2.0;
        let k0 = bessel_k_raw(base, x)?;
        let k1 = bessel_k_raw(base + 1.0, x)?;
        Ok(k0 + (2.0 * (base + 1.0) / x) * k1)
    }
}

pub(crate) fn bessel_k_scaled_raw(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let sin_pi_nu = (nu * std::f64::consts::PI).sin();
    if x >= 2.0 || sin_pi_nu.abs() < REFLECTION_SIN_CUTOFF || nu > 1.0 {
        bessel_k_scaled_integral(nu, x)
    } else {
        bessel_k_raw(nu, x).expect("small-x K path cannot overflow") * x.exp()
    }
}

/// Modified Bessel function of the first kind, `I_ν(x)`.
pub fn bessel_i(nu: Order, x: f64) -> Result<f64> {
    check_positive_x(x)?;
    bessel_i_raw(nu.get(), x)
}

/// Exponentially scaled `e^{-x} I_ν(x)`; never overflows.
pub fn bessel_i_scaled(nu: Order, x: f64) -> Result<f64> {
    check_positive_x(x)?;
    Ok(bessel_i_scaled_raw(nu.get(), x))
}

/// Modified Bessel function of the second kind, `K_ν(x)`.
pub fn bessel_k(nu: Order, x: f64) -> Result<f64> {
    check_positive_x(x)?;
    bessel_k_raw(nu.get(), x)
}

/// Exponentially scaled `e^{x} K_ν(x)`.
pub fn bessel_k_scaled(nu: Order, x: f64) -> Result<f64> {
    check_positive_x(x)?;
    Ok(bessel_k_scaled_raw(nu.get(), x))
}

pub(crate) fn s_kernel_raw(sign: KernelSign, nu: f64, x: f64) -> Result<f64> {
    match sign {
        KernelSign::Minus => {
            if x == 0.0 {
                Ok(1.0 / (2f64.powf(nu) * gamma(nu + 1.0)))
            } else if x < SERIES_ASYMPTOTIC_SWITCH {
                Ok(s_minus_series(nu, x))
            } else if x > EXP_OVERFLOW {
                Err(Error::domain(format!(
                    "s_kernel(minus) overflows at x = {x}; use the scaled variant"
                )))
            } else {
                Ok(bessel_i_asymptotic_scaled(nu, x) * x.exp() * x.powf(-nu))
            }
        }
        KernelSign::Plus => {
            if x == 0.0 {
                if nu < 0.0 {
                    // lim w^{-nu} K_nu(w) = lim w^{|nu|} K_{|nu|}(w) = 2^{|nu|-1} Gamma(|nu|)
                    Ok(2f64.powf(-nu - 1.0) * gamma(-nu))
                } else {
                    Err(Error::domain(format!(
                        "s_kernel(plus, nu={nu}) diverges at x = 0"
                    )))
                }
            } else {
                Ok(bessel_k_raw(nu, x)? * x.powf(-nu))
            }
        }
    }
}

/// Scaled kernel `S⁻_ν(x) e^{-x}` or `S⁺_ν(x) e^{x}`; finite for all `x ≥ 0`
/// in the minus case and all `x > 0` (or `x = 0`, `ν < 0`) in the plus case.
pub(crate) fn s_kernel_scaled_raw(sign: KernelSign, nu: f64, x: f64) -> Result<f64> {
    match sign {
        KernelSign::Minus => {
            if x == 0.0 {
                s_kernel_raw(sign, nu, 0.0)
            } else {
                Ok(bessel_i_scaled_raw(nu, x) * x.powf(-nu))
            }
        }
        KernelSign::Plus => {
            if x == 0.0 {
                s_kernel_raw(sign, nu, 0.0)
            } else {
                Ok(bessel_k_scaled_raw(nu, x) * x.powf(-nu))
            }
        }
    }
}

/// `S±_ν(x) = x^{-ν} I_ν(x)` (minus) or `x^{-ν} K_ν(x)` (plus).
pub fn s_kernel(sign: KernelSign, nu: Order, x: f64) -> Result<f64> {
    if x < 0.0 || !x.is_finite() {
        return Err(Error::domain(format!("argument x = {x} must be >= 0")));
    }
    s_kernel_raw(sign, nu.get(), x)
}

/// `d/dx S±_ν(x) = ∓ x S±_{ν+1}(x)`.
pub fn s_kernel_deriv(sign: KernelSign, nu: Order, x: f64) -> Result<f64> {
    check_positive_x(x)?;
    let v = s_kernel_raw(sign, nu.get() + 1.0, x)?;
    Ok(match sign {
        KernelSign::Minus => x * v,
        KernelSign::Plus => -x * v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn order(nu: f64) -> Order {
        Order::new(nu).unwrap()
    }

    #[test]
    fn order_range_enforced() {
        assert!(Order::new(-1.0).is_err());
        assert!(Order::new(2.1).is_err());
        assert!(Order::new(f64::NAN).is_err());
        assert!(Order::new(2.0).is_ok());
        assert!(Order::new(-0.999).is_ok());
    }

    #[test]
    fn i_half_integer_closed_form() {
        // I_{1/2}(x) = sqrt(2/(pi x)) sinh(x)
        let v = bessel_i(order(0.5), 1.0).unwrap();
        assert_relative_eq!(v, (2.0 / PI).sqrt() * 1f64.sinh(), max_relative = 1e-13);
    }

    #[test]
    fn i_small_x_matches_truncated_series() {
        // 4-term power series oracle at nu=0.3, x=0.01; remainder below 1e-12 relative.
        let nu = 0.3;
        let x: f64 = 0.01;
        let mut oracle = 0.0;
        for k in 0..4 {
            oracle += (x * x / 4.0).powi(k) / (gamma(k as f64 + 1.0) * gamma(nu + k as f64 + 1.0));
        }
        oracle *= (x / 2.0).powf(nu);
        let v = bessel_i(order(nu), x).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
    }

    #[test]
    fn i_large_x_leading_asymptotic() {
        let x = 30.0;
        let v = bessel_i(order(0.3), x).unwrap();
        let lead = x.exp() / (2.0 * PI * x).sqrt();
        assert!((v - lead).abs() / lead < 0.02);
    }

    #[test]
    fn k_half_integer_closed_form() {
        // K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}
        let v = bessel_k(order(0.5), 2.0).unwrap();
        assert_relative_eq!(v, (PI / 4.0).sqrt() * (-2f64).exp(), max_relative = 1e-11);
    }

    #[test]
    fn k_reflection_symmetry() {
        let a = bessel_k(order(-0.4), 1.0).unwrap();
        let b = bessel_k(order(0.4), 1.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    #[test]
    fn k_large_x_leading_asymptotic() {
        let x: f64 = 20.0;
        let v = bessel_k(order(0.25), x).unwrap();
        let lead = (PI / (2.0 * x)).sqrt() * (-x).exp();
        assert!((v - lead).abs() / lead < 0.02);
    }

    #[test]
    fn k_continuous_across_integer_order() {
        let a = bessel_k(order(1e-8), 1.3).unwrap();
        let b = bessel_k(order(-1e-8), 1.3).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-7);
        let a = bessel_k(order(1.0 + 1e-8), 0.7).unwrap();
        let b = bessel_k(order(1.0 - 1e-8), 0.7).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-7);
    }

    #[test]
    fn k_integer_orders_match_integral_rep() {
        // K_0, K_1, K_2 reference values (Abramowitz & Stegun 9.8).
        let k0 = bessel_k(order(0.0 + 0.0), 1.0).unwrap();
        assert_relative_eq!(k0, 0.421_024_438_240_708_33, max_relative = 1e-10);
        let k1 = bessel_k(order(1.0), 1.0).unwrap();
        assert_relative_eq!(k1, 0.601_907_230_197_234_57, max_relative = 1e-10);
        let k2 = bessel_k(order(2.0), 1.0).unwrap();
        assert_relative_eq!(k2, 1.624_838_898_635_177_5, max_relative = 1e-10);
    }

    #[test]
    fn s_minus_at_origin() {
        let v = s_kernel(KernelSign::Minus, order(0.0), 0.0).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-14);
        let v = s_kernel(KernelSign::Minus, order(-0.5), 0.0).unwrap();
        assert_relative_eq!(
            v,
            1.0 / (2f64.powf(-0.5) * gamma(0.5)),
            max_relative = 1e-13
        );
    }

    #[test]
    fn s_plus_half_integer() {
        // S+_{-1/2}(1) = 1^{1/2} K_{1/2}(1) = sqrt(pi/2) e^{-1}
        let v = s_kernel(KernelSign::Plus, order(-0.5), 1.0).unwrap();
        assert_relative_eq!(v, (PI / 2.0).sqrt() * (-1f64).exp(), max_relative = 1e-11);
    }

    #[test]
    fn s_plus_origin_limit_rules() {
        assert!(s_kernel(KernelSign::Plus, order(-0.5), 0.0).is_ok());
        assert!(s_kernel(KernelSign::Plus, order(0.0), 0.0).is_err());
        assert!(s_kernel(KernelSign::Plus, order(0.5), 0.0).is_err());
    }

    #[test]
    fn deriv_matches_identity_and_finite_difference() {
        // minus kernel: d/dx S-_nu = +x S-_{nu+1}
        let nu = order(0.2);
        let x = 1.4;
        let d = s_kernel_deriv(KernelSign::Minus, nu, x).unwrap();
        let via_identity = x * s_kernel_raw(KernelSign::Minus, 1.2, x).unwrap();
        assert_relative_eq!(d, via_identity, max_relative = 1e-14);

        // plus kernel: central finite difference, step 1e-5
        let nu = order(0.1);
        let h = 1e-5;
        let d = s_kernel_deriv(KernelSign::Plus, nu, 1.0).unwrap();
        let fd = (s_kernel(KernelSign::Plus, nu, 1.0 + h).unwrap()
            - s_kernel(KernelSign::Plus, nu, 1.0 - h).unwrap())
            / (2.0 * h);
        assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0));
    }

    #[test]
    fn deriv_minus_vanishes_linearly_at_origin() {
        let d = s_kernel_deriv(KernelSign::Minus, order(-0.5), 0.001).unwrap();
        assert!(d.abs() < 0.01);
        assert!(d > 0.0);
    }

    #[test]
    fn wronskian_positivity() {
        for nu in [-0.9, -0.5, -0.1, 0.25, 0.5, 1.0] {
            for i in 0..10 {
                let x = 1e-3 * (30.0f64 / 1e-3).powf(i as f64 / 9.0);
                let i_v = bessel_i(order(nu), x).unwrap();
                let k_v = bessel_k(order(nu), x).unwrap();
                assert!(i_v * k_v > 0.0, "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn scaled_variants_consistent() {
        for x in [0.5, 5.0, 50.0, 400.0] {
            let nu = order(0.7);
            let i_s = bessel_i_scaled(nu, x).unwrap();
            let k_s = bessel_k_scaled(nu, x).unwrap();
            if x < 300.0 {
                assert_relative_eq!(i_s * x.exp(), bessel_i(nu, x).unwrap(), max_relative = 1e-12);
                assert_relative_eq!(
                    k_s * (-x).exp(),
                    bessel_k(nu, x).unwrap(),
                    max_relative = 1e-10
                );
            }
            assert!(i_s.is_finite() && k_s.is_finite());
        }
    }

    #[test]
    fn unscaled_overflow_is_signalled() {
        assert!(bessel_i(order(0.5), 800.0).is_err());
        assert!(bessel_i_scaled(order(0.5), 800.0).is_ok());
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_i(order(0.5), 0.0).is_err());
        assert!(bessel_i(order(0.5), -1.0).is_err());
        assert!(bessel_k(order(0.5), 0.0).is_err());
    }
}
