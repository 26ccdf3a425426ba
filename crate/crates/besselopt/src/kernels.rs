//! Quadrature-backed integral kernels: strategy weights `w` and `p`, the
//! `Y±_{ν,η}` kernels, the fundamental solutions `L±_{n,E,r}`, and the Green
//! function of the stationary generator.
//!
//! All lengths here live in stationary coordinates; conversion to the
//! original space-time coordinates happens in the dynamics and CLI layers.

use crate::error::{Error, Result};
use crate::quad::{self, QuadResult};
use crate::specfun::{s_kernel_raw, s_kernel_scaled_raw, KernelSign, Order};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

/// Bang-bang rate profile: `r1` on `[0, c]`, `r2` on `(c, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStrategy {
    pub r1: f64,
    pub r2: f64,
    pub cutoff_c: f64,
}

impl StepStrategy {
    pub fn new(r1: f64, r2: f64, cutoff_c: f64) -> Result<Self> {
        if !(r1 > 0.0) || !(r2 >= r1) {
            return Err(Error::domain(format!(
                "step strategy needs 0 < r1 <= r2, got r1={r1}, r2={r2}"
            )));
        }
        if !(cutoff_c >= 0.0) {
            return Err(Error::domain(format!("cutoff {cutoff_c} must be >= 0")));
        }
        Ok(StepStrategy { r1, r2, cutoff_c })
    }

    pub fn rate(&self, x: f64) -> f64 {
        if x <= self.cutoff_c {
            self.r1
        } else {
            self.r2
        }
    }
}

/// Monotone rate profile tabulated on a strictly increasing grid with
/// piecewise-constant-left interpolation: `R(x) = values[i]` on
/// `(knots[i-1], knots[i]]`, and `R(x) = values.last()` beyond the last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedStrategy {
    knots: Vec<f64>,
    values: Vec<f64>,
    r1: f64,
    r2: f64,
}

impl TabulatedStrategy {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, r1: f64, r2: f64) -> Result<Self> {
        if knots.len() != values.len() || knots.is_empty() {
            return Err(Error::domain(
                "tabulated strategy needs matching nonempty knots and values",
            ));
        }
        if !(r1 > 0.0) || !(r2 >= r1) {
            return Err(Error::domain("tabulated strategy needs 0 < r1 <= r2"));
        }
        if !knots.windows(2).all(|w| w[0] < w[1]) || knots[0] <= 0.0 {
            return Err(Error::domain("knots must be positive, strictly increasing"));
        }
        if values.iter().any(|&v| v < r1 || v > r2) {
            return Err(Error::domain("values must lie in [r1, r2]"));
        }
        // Encodes lim_{z->inf} R(z) = r2.
        if *values.last().unwrap() != r2 {
            return Err(Error::domain("final tabulated value must equal r2"));
        }
        Ok(TabulatedStrategy {
            knots,
            values,
            r1,
            r2,
        })
    }

    pub fn rate(&self, x: f64) -> f64 {
        match self.knots.iter().position(|&k| x <= k) {
            Some(i) => self.values[i],
            None => self.r2,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Strategy {
    Step(StepStrategy),
    Tabulated(TabulatedStrategy),
}

impl Strategy {
    pub fn constant(r: f64) -> Self {
        Strategy::Step(StepStrategy {
            r1: r,
            r2: r,
            cutoff_c: 0.0,
        })
    }

    pub fn step(r1: f64, r2: f64, cutoff_c: f64) -> Result<Self> {
        Ok(Strategy::Step(StepStrategy::new(r1, r2, cutoff_c)?))
    }

    pub fn rate(&self, x: f64) -> f64 {
        match self {
            Strategy::Step(s) => s.rate(x),
            Strategy::Tabulated(t) => t.rate(x),
        }
    }

    pub fn r1(&self) -> f64 {
        match self {
            Strategy::Step(s) => s.r1,
            Strategy::Tabulated(t) => t.r1,
        }
    }

    pub fn r2(&self) -> f64 {
        match self {
            Strategy::Step(s) => s.r2,
            Strategy::Tabulated(t) => t.r2,
        }
    }

    /// Point beyond which the rate is exactly `r2`.
    pub fn support_end(&self) -> f64 {
        match self {
            Strategy::Step(s) => s.cutoff_c,
            Strategy::Tabulated(t) => *t.knots.last().unwrap(),
        }
    }

    /// Breakpoints of the piecewise-constant rate inside `(0, x)`.
    fn breakpoints_below(&self, x: f64) -> Vec<f64> {
        match self {
            Strategy::Step(s) => {
                if s.cutoff_c > 0.0 && s.cutoff_c < x {
                    vec![s.cutoff_c]
                } else {
                    vec![]
                }
            }
            Strategy::Tabulated(t) => t.knots.iter().copied().filter(|&k| k < x).collect(),
        }
    }

    /// All rate breakpoints, for forced quadrature subdivision.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Strategy::Step(s) => {
                if s.cutoff_c > 0.0 {
                    vec![s.cutoff_c]
                } else {
                    vec![]
                }
            }
            Strategy::Tabulated(t) => t.knots.clone(),
        }
    }
}

/// `∫_0^x v / R(v) dv`, exact per constant-rate piece.
pub fn drift_integral(strategy: &Strategy, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    let mut total = 0.0;
    let mut lo = 0.0;
    for b in strategy.breakpoints_below(x) {
        total += (b * b - lo * lo) / (2.0 * strategy.rate(b));
        lo = b;
    }
    // Last piece: the rate is constant on (lo, x]; sample just right of lo.
    if x > lo {
        let r = strategy.rate(0.5 * (lo + x));
        total += (x * x - lo * lo) / (2.0 * r);
    }
    total
}

/// Weight of the invariant inner product: `w(x) = x^{n-1} e^{∫_0^x v/R} / R(x)`.
pub fn weight_w(n: f64, strategy: &Strategy, x: f64) -> f64 {
    x.powf(n - 1.0) * drift_integral(strategy, x).exp() / strategy.rate(x)
}

/// Dirichlet-form weight `p(x) = x^{n-1} e^{∫_0^x v/R} = R(x) w(x)`;
/// continuous across rate jumps.
pub fn weight_p(n: f64, strategy: &Strategy, x: f64) -> f64 {
    x.powf(n - 1.0) * drift_integral(strategy, x).exp()
}

/// Quadrature controls for every kernel integral.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-12,
            abs_tol: 1e-15,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    /// Tail cut for integrands damped by `e^{-(z ∓ x)^2/2}`: the Gaussian
    /// factor is below 1e-37 beyond it.
    pub fn z_max(&self, x: f64) -> f64 {
        x.max(8.0) + (2.0 * 37.0 * std::f64::consts::LN_10).sqrt()
    }

    fn run(&self, r: Result<QuadResult>) -> Result<f64> {
        r.map(|q| q.value)
    }
}

fn check_dimension(n: f64) -> Result<()> {
    if !(n > 0.0 && n < 2.0) {
        return Err(Error::domain(format!("dimension n = {n} outside (0, 2)")));
    }
    Ok(())
}

/// `Y±_{ν,η}(x) = ∫_0^∞ z^{η-1} S±_ν(xz) e^{-(z²+x²)/2} dz`.
///
/// The `z^{η-1}` endpoint singularity (plus the extra `z^{-2ν}` one of the
/// plus kernel at `ν > 0`) is removed by a power substitution, and the Bessel
/// factors are evaluated in exponentially scaled form so the integrand is
/// the bounded `e^{-(z∓x)²/2}` profile.
pub fn y_kernel(sign: KernelSign, nu: Order, eta: f64, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    let nu = nu.get();
    if !(eta > 0.0) {
        return Err(Error::domain(format!("y_kernel needs eta > 0, got {eta}")));
    }
    if x < 0.0 {
        return Err(Error::domain(format!("y_kernel needs x >= 0, got {x}")));
    }
    let sigma = match sign {
        KernelSign::Minus => eta,
        KernelSign::Plus => {
            let s = eta - 2.0 * nu.max(0.0);
            if s <= 0.0 {
                return Err(Error::domain(format!(
                    "y_kernel(plus, nu={nu}, eta={eta}) is not integrable at 0"
                )));
            }
            s
        }
    };
    if x == 0.0 {
        // S±(0) times the Gaussian moment  ∫ z^{η-1} e^{-z²/2} = 2^{η/2-1} Γ(η/2).
        let s0 = s_kernel_raw(sign, nu, 0.0)?;
        return Ok(s0 * 2f64.powf(eta / 2.0 - 1.0) * gamma(eta / 2.0));
    }
    let gauss = |z: f64| match sign {
        KernelSign::Minus => (-(z - x) * (z - x) / 2.0).exp(),
        KernelSign::Plus => (-(z + x) * (z + x) / 2.0).exp(),
    };
    // h(z) := z^{η-σ} S±(xz) e^{±xz - (z²+x²)/2}, smooth and bounded at 0.
    let h = |z: f64| -> f64 {
        let w = x * z;
        let s = if sign == KernelSign::Plus && nu > 0.0 {
            // z^{2ν} S⁺_ν(xz) = x^{-2ν} (xz)^ν K_ν(xz), finite at 0.
            if w == 0.0 {
                x.powf(-2.0 * nu) * 2f64.powf(nu - 1.0) * gamma(nu)
            } else {
                x.powf(-2.0 * nu)
                    * w.powf(2.0 * nu)
                    * s_kernel_scaled_raw(sign, nu, w).expect("w > 0")
            }
        } else {
            s_kernel_scaled_raw(sign, nu, w).expect("finite limit checked above")
        };
        s * gauss(z)
    };
    spec.run(quad::integrate_left_power(
        h,
        sigma,
        spec.z_max(x),
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
    ))
}

/// Factored minus kernel `e^{x²/2} Y⁻_{ν,η}(x)`, monotone increasing in `x`
/// and free of the overall Gaussian decay.
pub fn y_minus_factored(nu: Order, eta: f64, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    let nu = nu.get();
    if !(eta > 0.0) {
        return Err(Error::domain(format!("eta must be positive, got {eta}")));
    }
    if x < 0.0 {
        return Err(Error::domain(format!("x must be >= 0, got {x}")));
    }
    if x == 0.0 {
        let s0 = s_kernel_raw(KernelSign::Minus, nu, 0.0)?;
        return Ok(s0 * 2f64.powf(eta / 2.0 - 1.0) * gamma(eta / 2.0));
    }
    let h = |z: f64| -> f64 {
        let w = x * z;
        let s = s_kernel_scaled_raw(KernelSign::Minus, nu, w).expect("minus kernel finite at 0");
        // e^{xz - z²/2} = e^{x²/2} e^{-(z-x)²/2}; keep the factored exponent
        // direct so x up to ~50 stays in range.
        s * (w - z * z / 2.0).exp()
    };
    spec.run(quad::integrate_left_power(
        h,
        eta,
        spec.z_max(x),
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
    ))
}

/// `dY±_{ν,η}/dx = ∓ x Y±_{ν+1,η+2}(x) - x Y±_{ν,η}(x)`, from the `S±`
/// derivative identity under the integral sign.
pub fn y_kernel_deriv(
    sign: KernelSign,
    nu: Order,
    eta: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let shifted = Order::new(nu.get() + 1.0)?;
    let y_shift = y_kernel(sign, shifted, eta + 2.0, x, spec)?;
    let y_same = y_kernel(sign, nu, eta, x, spec)?;
    Ok(match sign {
        KernelSign::Minus => x * y_shift - x * y_same,
        KernelSign::Plus => -x * y_shift - x * y_same,
    })
}

/// Fundamental solution `L±_{n,E,r}(x) = ∫_0^∞ y^{E+n-1} S±_{(n-2)/2}(xy/r)
/// e^{-(x²+y²)/(2r)} dy`, evaluated through `Y±` by the substitution
/// `y → y√r`:  `L± = r^{(E+n)/2} Y±_{(n-2)/2, E+n}(x/√r)`.
pub fn l_fundamental(
    sign: KernelSign,
    n: f64,
    e_val: f64,
    r: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_dimension(n)?;
    if !(e_val > -n && e_val < 0.0) {
        return Err(Error::domain(format!("E = {e_val} outside (-{n}, 0)")));
    }
    if !(x > 0.0) || !(r > 0.0) {
        return Err(Error::domain("l_fundamental needs x > 0 and r > 0"));
    }
    let nu = Order::new((n - 2.0) / 2.0)?;
    let eta = e_val + n;
    Ok(r.powf(eta / 2.0) * y_kernel(sign, nu, eta, x / r.sqrt(), spec)?)
}

/// `d/dx L±_{n,E,r}(x)`, via the analytic `Y±` derivative.
pub fn l_fundamental_deriv(
    sign: KernelSign,
    n: f64,
    e_val: f64,
    r: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_dimension(n)?;
    let nu = Order::new((n - 2.0) / 2.0)?;
    let eta = e_val + n;
    Ok(r.powf(eta / 2.0 - 0.5) * y_kernel_deriv(sign, nu, eta, x / r.sqrt(), spec)?)
}

/// Decaying fundamental solution of `x g' + R Δₙ g = 0`:
/// `v₊(x) = ∫_x^∞ t^{1-n} e^{-∫_0^t v/R} dt`.
pub fn v_plus(n: f64, strategy: &Strategy, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    let r2 = strategy.r2();
    let t_max = x.max(1.0) + 14.0 * r2.sqrt() + 2.0;
    let f = |t: f64| t.powf(1.0 - n) * (-drift_integral(strategy, t)).exp();
    spec.run(quad::integrate_split(
        f,
        x,
        t_max,
        &strategy.breakpoints(),
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
    ))
}

/// Green function of `-L⁻¹`:  `G(x,z) = w(z) v₊(max(x,z))`
/// (pasting `v₋ ≡ 1` below the diagonal and `v₊` above).
pub fn green_function(
    n: f64,
    strategy: &Strategy,
    x: f64,
    z: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_dimension(n)?;
    if !(x > 0.0 && z > 0.0) {
        return Err(Error::domain("green_function needs x, z > 0"));
    }
    Ok(weight_w(n, strategy, z) * v_plus(n, strategy, x.max(z), spec)?)
}

/// Row integral `∫_0^∞ G(x,z) dx` in closed form:
/// `w(z) ∫_z^∞ a^{2-n} e^{-∫_0^a v/R} da`.
pub fn green_row_integral(
    n: f64,
    strategy: &Strategy,
    z: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_dimension(n)?;
    let r2 = strategy.r2();
    let t_max = z.max(1.0) + 14.0 * r2.sqrt() + 2.0;
    let f = |a: f64| a.powf(2.0 - n) * (-drift_integral(strategy, a)).exp();
    let tail = spec.run(quad::integrate_split(
        f,
        z,
        t_max,
        &strategy.breakpoints(),
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
    ))?;
    Ok(weight_w(n, strategy, z) * tail)
}

/// Stable factored tail quantities for the Hilbert-Schmidt integrand:
/// `ṽ(z) = e^{d(z)} v₊(z)` and `W̃(z) = e^{-d(z)} ∫_0^z w`, where `d` is the
/// drift integral.  Both stay in floating-point range for arbitrarily
/// large `z`.
fn v_plus_factored(n: f64, strategy: &Strategy, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    let r2 = strategy.r2();
    let dz = drift_integral(strategy, z);
    let s_max = (2.0 * 90.0 * r2).sqrt() / (1.0 + z / (2.0 * r2.sqrt())).max(1.0) + 180.0 * r2 / (z + 1.0);
    let f = |s: f64| {
        let t = z + s;
        t.powf(1.0 - n) * (dz - drift_integral(strategy, t)).exp()
    };
    let breaks: Vec<f64> = strategy.breakpoints().iter().map(|b| b - z).collect();
    spec.run(quad::integrate_split(
        f,
        0.0,
        s_max.max(2.0),
        &breaks,
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
    ))
}

fn w_cumulative_factored(n: f64, strategy: &Strategy, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    let dz = drift_integral(strategy, z);
    if dz < 40.0 {
        // Power substitution up to the first rate breakpoint, plain pieces after.
        let first = strategy
            .breakpoints_below(z)
            .first()
            .copied()
            .unwrap_or(z)
            .min(z);
        let head = quad::integrate_left_power(
            |t| (drift_integral(strategy, t) - dz).exp() / strategy.rate(t),
            n,
            first,
            spec.rel_tol,
            spec.abs_tol,
            spec.max_subdivisions,
        )?;
        let rest = quad::integrate_split(
            |t| t.powf(n - 1.0) * (drift_integral(strategy, t) - dz).exp() / strategy.rate(t),
            first,
            z,
            &strategy.breakpoints(),
            spec.rel_tol,
            spec.abs_tol,
            spec.max_subdivisions,
        )?;
        return Ok(head.value + rest.value);
    }
    // Large z: only the neighborhood of t = z contributes.
    let r2 = strategy.r2();
    let s_max = (90.0 * 2.0 * r2).sqrt().min(z);
    let f = |s: f64| {
        let t = z - s;
        t.powf(n - 1.0) * (drift_integral(strategy, t) - dz).exp() / strategy.rate(t)
    };
    let breaks: Vec<f64> = strategy.breakpoints().iter().map(|b| z - b).collect();
    spec.run(quad::integrate_split(
        f,
        0.0,
        s_max,
        &breaks,
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
    ))
}

/// Hilbert-Schmidt norm of the resolvent:
/// `‖L⁻¹‖²_HS = ∫∫ |Ĝ(x,z)|² = 2 ∫_0^∞ w(z) v₊(z)² (∫_0^z w) dz`,
/// reduced to nested 1D quadratures of the symmetric kernel
/// `Ĝ² = w(x) w(z) v₊(max(x,z))²`.
pub fn hs_norm(n: f64, strategy: &Strategy, spec: &QuadratureSpec) -> Result<f64> {
    check_dimension(n)?;
    let integrand = |z: f64| -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let vt = v_plus_factored(n, strategy, z, spec).unwrap_or(f64::NAN);
        let wt = w_cumulative_factored(n, strategy, z, spec).unwrap_or(f64::NAN);
        z.powf(n - 1.0) * vt * vt * wt / strategy.rate(z)
    };
    // Inner quadratures are adaptive; a looser outer tolerance keeps the
    // nesting affordable.
    let outer_rel = spec.rel_tol.max(1e-9);
    let z_split = 4.0 * strategy.r2().sqrt() + strategy.support_end();
    let head = quad::integrate_split(
        integrand,
        0.0,
        z_split,
        &strategy.breakpoints(),
        outer_rel,
        spec.abs_tol,
        400,
    )?;
    // Tail decays ~ z^{-3}; substitute u = 1/z to keep it finite-domain.
    let tail = quad::integrate(
        |u| {
            if u <= 0.0 {
                0.0
            } else {
                integrand(1.0 / u) / (u * u)
            }
        },
        0.0,
        1.0 / z_split,
        outer_rel,
        spec.abs_tol,
        400,
    )?;
    let total = 2.0 * (head.value + tail.value);
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::Instability(format!(
            "hs_norm produced non-finite value {total}"
        )));
    }
    Ok(total.sqrt())
}
