//! Principal-eigenvalue solvers: the smooth-pasting (Wronskian) solver for
//! step strategies, the nested transcendental solver for the optimal
//! `(η, κ)` pair, the limiting cutoff `κ̄ₙ`, eigenfunction assembly, and a
//! discretized Rayleigh-quotient eigensolver for arbitrary strategies.

use crate::error::{Error, Result};
use crate::kernels::{
    self, l_fundamental, l_fundamental_deriv, weight_p, weight_w, y_kernel, y_minus_factored,
    QuadratureSpec, StepStrategy, Strategy,
};
use crate::quad;
use crate::roots::{brent, sign_change_scan};
use crate::specfun::{KernelSign, Order};
use serde::{Deserialize, Serialize};

/// Threshold below which `V - 1` is treated as exactly degenerate.
pub const DEGENERATE_V_MARGIN: f64 = 1e-4;

/// Solution of the coupled transcendental system for the optimal exponent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimalSolution {
    pub n: f64,
    pub v_ratio: f64,
    /// Optimal tail exponent, in (0, n).
    pub eta: f64,
    /// Optimal cutoff in unit-rate stationary coordinates.
    pub kappa: f64,
    /// Principal eigenvalue of the stationary generator: `eta - n`.
    pub eigenvalue_e: f64,
    /// Matching constant making the eigenfunction continuous at the cutoff.
    pub gamma: f64,
    pub residual_eq1: f64,
    pub residual_eq2: f64,
    /// Set when `V - 1 < 1e-4` and the analytic limit was returned instead
    /// of solving the ill-conditioned system.
    pub degenerate: bool,
}

/// Principal eigenvalue/eigenfunction data for a fixed step strategy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    pub n: f64,
    pub strategy: StepStrategy,
    pub eigenvalue_e: f64,
    pub gamma: f64,
    /// Radial inflection point of the eigenfunction (zero of its radial
    /// Laplacian); coincides with the cutoff exactly at the optimum.
    pub inflection_x: f64,
}

/// Mesh for the finite-difference Rayleigh solver.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_max: f64,
    pub cells: usize,
}

/// Discretized generalized eigenpair from inverse iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscretizedEig {
    pub grid: Vec<f64>,
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
    /// Rayleigh quotients per inverse-iteration step.
    pub rayleigh_history: Vec<f64>,
}

fn check_dimension(n: f64) -> Result<()> {
    if !(n > 0.0 && n < 2.0) {
        return Err(Error::domain(format!("dimension n = {n} outside (0, 2)")));
    }
    Ok(())
}

/// Residual of the limiting-cutoff equation
/// `1 = κ^{2-n} ∫_0^κ a^{n-1} e^{(a²-κ²)/2} da` as a function of `κ`.
fn kappa_bar_residual(n: f64, kappa: f64, spec: &QuadratureSpec) -> f64 {
    let integral = quad::integrate_left_power(
        |a| ((a * a - kappa * kappa) / 2.0).exp(),
        n,
        kappa,
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
    )
    .map(|q| q.value)
    .unwrap_or(f64::NAN);
    kappa.powf(2.0 - n) * integral - 1.0
}

/// Residual of the limiting-cutoff equation at a trial `κ` (zero at `κ̄ₙ`).
pub fn kappa_bar_residual_at(n: f64, kappa: f64) -> Result<f64> {
    check_dimension(n)?;
    if !(kappa > 0.0) {
        return Err(Error::domain(format!("kappa = {kappa} must be positive")));
    }
    Ok(kappa_bar_residual(n, kappa, &QuadratureSpec::default()))
}

/// Limiting optimal cutoff `κ̄ₙ`: the root of the equation above.  It is the
/// `V → ∞` limit of `κ(n, V)` and satisfies `√n < κ̄ₙ`.
pub fn kappa_bar(n: f64) -> Result<f64> {
    check_dimension(n)?;
    let spec = QuadratureSpec::default();
    let f = |k: f64| kappa_bar_residual(n, k, &spec);
    // The residual is -1 at 0 and approaches 0 from above past the root.
    let lo = 0.5 * n.sqrt();
    let mut hi = n.sqrt() + 1.0;
    let mut iter = 0;
    while f(hi) <= 0.0 {
        hi *= 1.5;
        iter += 1;
        if iter > 40 {
            return Err(Error::BracketFailure {
                context: "kappa_bar upper bracket".into(),
                lo,
                hi,
            });
        }
    }
    brent(f, lo, hi, 1e-13)
}

/// Residual of the cutoff equation at fixed exponent:
/// `κ^{2-n} ∫_0^κ Ỹ(a) a^{n-1} da / Ỹ(κ) - 1`, with `Ỹ = e^{a²/2} Y⁻_{ν,η}(a)`
/// (the Gaussian factors of the original equation cancel in this form).
fn kappa_residual(n: f64, eta: f64, kappa: f64, spec: &QuadratureSpec) -> Result<f64> {
    let nu = Order::new((n - 2.0) / 2.0)?;
    let numerator = quad::integrate_left_power(
        |a| y_minus_factored(nu, eta, a, spec).unwrap_or(f64::NAN),
        n,
        kappa,
        spec.rel_tol.max(1e-11),
        spec.abs_tol,
        spec.max_subdivisions,
    )?;
    let denominator = y_minus_factored(nu, eta, kappa, spec)?;
    Ok(kappa.powf(2.0 - n) * numerator.value / denominator - 1.0)
}

/// Unique cutoff `κ(η)` solving the second equation of the coupled system
/// (it involves only `n` and `η`, not `V`); lies in `(√n, κ̄ₙ)`.
pub fn kappa_of_eta(n: f64, eta: f64) -> Result<f64> {
    check_dimension(n)?;
    if !(eta > 0.0 && eta < n) {
        return Err(Error::domain(format!("eta = {eta} outside (0, {n})")));
    }
    let spec = QuadratureSpec::default();
    let kb = kappa_bar(n)?;
    let lo = 0.8 * n.sqrt();
    let hi = 1.05 * kb;
    let f = |k: f64| kappa_residual(n, eta, k, &spec).unwrap_or(f64::NAN);
    brent(f, lo, hi, 1e-12)
}

/// Residual of the first (V-dependent) equation of the coupled system at a
/// given exponent, with the cutoff already eliminated via `kappa_of_eta`:
/// `Y⁺_{n/2,η+2}(x)/Y⁺_{(n-2)/2,η}(x) - (n-η-x²)/x²` at `x = κ(η)/V`.
fn eta_residual(n: f64, v_ratio: f64, eta: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let kappa = kappa_of_eta(n, eta)?;
    let x = kappa / v_ratio;
    let nu_lo = Order::new((n - 2.0) / 2.0)?;
    let nu_hi = Order::new(n / 2.0)?;
    let ratio = y_kernel(KernelSign::Plus, nu_hi, eta + 2.0, x, spec)?
        / y_kernel(KernelSign::Plus, nu_lo, eta, x, spec)?;
    Ok((ratio - (n - eta - x * x) / (x * x), kappa))
}

/// Solve the coupled system for the optimal `(η, κ)` and assemble the full
/// solution record (eigenvalue, matching constant, final residuals).
pub fn solve_optimal(n: f64, v_ratio: f64) -> Result<OptimalSolution> {
    check_dimension(n)?;
    if !(v_ratio >= 1.0) {
        return Err(Error::domain(format!("rate ratio V = {v_ratio} must be >= 1")));
    }
    if v_ratio - 1.0 < DEGENERATE_V_MARGIN {
        // Analytic limit: no gain from switching, exponent 0, cutoff sqrt(n).
        return Ok(OptimalSolution {
            n,
            v_ratio,
            eta: 0.0,
            kappa: n.sqrt(),
            eigenvalue_e: -n,
            gamma: 1.0,
            residual_eq1: 0.0,
            residual_eq2: 0.0,
            degenerate: true,
        });
    }
    let spec = QuadratureSpec::default();
    let delta = 1e-6 * n;
    let f = |eta: f64| {
        eta_residual(n, v_ratio, eta, &spec)
            .map(|(r, _)| r)
            .unwrap_or(f64::NAN)
    };
    let eta = brent(f, delta, n - delta, 1e-11)?;
    let (residual_eq1, kappa) = eta_residual(n, v_ratio, eta, &spec)?;
    let residual_eq2 = kappa_residual(n, eta, kappa, &spec)?;
    let eigenvalue_e = eta - n;
    // Matching constant in unit-rate coordinates: r1 = 1, r2 = V², c = kappa.
    let gamma = l_fundamental(KernelSign::Minus, n, eigenvalue_e, 1.0, kappa, &spec)?
        / l_fundamental(KernelSign::Plus, n, eigenvalue_e, v_ratio * v_ratio, kappa, &spec)?;
    Ok(OptimalSolution {
        n,
        v_ratio,
        eta,
        kappa,
        eigenvalue_e,
        gamma,
        residual_eq1,
        residual_eq2,
        degenerate: false,
    })
}

/// Smooth-pasting ratio whose unit value characterizes the principal
/// eigenvalue of a step strategy: the logarithmic derivative of `L⁻` (rate
/// `r1`) at the cutoff over that of `L⁺` (rate `r2`).
pub fn h_ratio(n: f64, r1: f64, r2: f64, c: f64, e_val: f64) -> Result<f64> {
    check_dimension(n)?;
    if !(c > 0.0) {
        return Err(Error::domain(format!("cutoff c = {c} must be positive")));
    }
    let spec = QuadratureSpec::default();
    let num = l_fundamental_deriv(KernelSign::Minus, n, e_val, r1, c, &spec)?
        * l_fundamental(KernelSign::Plus, n, e_val, r2, c, &spec)?;
    let den = l_fundamental_deriv(KernelSign::Plus, n, e_val, r2, c, &spec)?
        * l_fundamental(KernelSign::Minus, n, e_val, r1, c, &spec)?;
    Ok(num / den)
}

/// Principal eigenvalue of the step strategy `(r1, r2, c)` by root-finding
/// `h_ratio(E) = 1` on `(-n, 0)`; exactly one sign change is required (the
/// root is unique), more than one signals a numerics bug.
pub fn eigen_step(n: f64, r1: f64, r2: f64, c: f64) -> Result<EigenResult> {
    check_dimension(n)?;
    let strategy = StepStrategy::new(r1, r2, c)?;
    if r1 == r2 {
        // Constant rate: eigenfunction e^{-x²/(2r)}, eigenvalue -n; its
        // radial Laplacian vanishes at x = sqrt(n r).
        return Ok(EigenResult {
            n,
            strategy,
            eigenvalue_e: -n,
            gamma: 1.0,
            inflection_x: (n * r1).sqrt(),
        });
    }
    let delta = 1e-6 * n;
    let f = |e_val: f64| h_ratio(n, r1, r2, c, e_val).map(|h| h - 1.0).unwrap_or(f64::NAN);
    let brackets = sign_change_scan(f, -n + delta, -delta, 64);
    match brackets.len() {
        1 => {}
        0 => {
            return Err(Error::BracketFailure {
                context: format!("eigen_step(n={n}, r1={r1}, r2={r2}, c={c})"),
                lo: -n + delta,
                hi: -delta,
            })
        }
        _ => {
            return Err(Error::MultipleRoots {
                context: format!(
                    "h_ratio - 1 changed sign {} times for (n={n}, r1={r1}, r2={r2}, c={c})",
                    brackets.len()
                ),
            })
        }
    }
    let (lo, hi) = brackets[0];
    let eigenvalue_e = brent(f, lo, hi, 1e-12)?;
    let spec = QuadratureSpec::default();
    let gamma = l_fundamental(KernelSign::Minus, n, eigenvalue_e, r1, c, &spec)?
        / l_fundamental(KernelSign::Plus, n, eigenvalue_e, r2, c, &spec)?;
    let partial = EigenResult {
        n,
        strategy,
        eigenvalue_e,
        gamma,
        inflection_x: f64::NAN,
    };
    let inflection_x = locate_inflection(&partial)?;
    Ok(EigenResult {
        inflection_x,
        ..partial
    })
}

/// Zero of the eigenfunction's radial Laplacian, via the continuous
/// combination `t(x) = E - x φ'(x)/φ(x)` (equal to `R Δₙφ / φ`), which
/// increases from `E < 0` through its single zero.
fn locate_inflection(result: &EigenResult) -> Result<f64> {
    let c = result.strategy.cutoff_c;
    let r2 = result.strategy.r2;
    let n = result.n;
    let lo = 1e-2 * (n * result.strategy.r1).sqrt();
    let hi = c + 3.0 * (r2 * n.max(1.0)).sqrt();
    let t = |x: f64| {
        let phi = eigenfunction_eval(result, x).unwrap_or(f64::NAN);
        let dphi = eigenfunction_deriv(result, x).unwrap_or(f64::NAN);
        result.eigenvalue_e - x * dphi / phi
    };
    let brackets = sign_change_scan(t, lo, hi, 128);
    match brackets.first() {
        Some(&(a, b)) => brent(t, a, b, 1e-11),
        None => Err(Error::BracketFailure {
            context: "eigenfunction inflection".into(),
            lo,
            hi,
        }),
    }
}

/// Piecewise eigenfunction: `L⁻` with rate `r1` below the cutoff, `γ L⁺`
/// with rate `r2` above; continuous and C¹ at the cutoff by construction.
pub fn eigenfunction_eval(result: &EigenResult, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("x = {x} must be positive")));
    }
    let s = &result.strategy;
    if s.r1 == s.r2 {
        return Ok((-x * x / (2.0 * s.r1)).exp());
    }
    let spec = QuadratureSpec::default();
    if x <= s.cutoff_c {
        l_fundamental(KernelSign::Minus, result.n, result.eigenvalue_e, s.r1, x, &spec)
    } else {
        Ok(result.gamma
            * l_fundamental(KernelSign::Plus, result.n, result.eigenvalue_e, s.r2, x, &spec)?)
    }
}

/// Radial derivative of the piecewise eigenfunction.
pub fn eigenfunction_deriv(result: &EigenResult, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("x = {x} must be positive")));
    }
    let s = &result.strategy;
    if s.r1 == s.r2 {
        return Ok(-(x / s.r1) * (-x * x / (2.0 * s.r1)).exp());
    }
    let spec = QuadratureSpec::default();
    if x <= s.cutoff_c {
        l_fundamental_deriv(KernelSign::Minus, result.n, result.eigenvalue_e, s.r1, x, &spec)
    } else {
        Ok(result.gamma
            * l_fundamental_deriv(KernelSign::Plus, result.n, result.eigenvalue_e, s.r2, x, &spec)?)
    }
}

/// Solve the tridiagonal system with Thomas elimination.
fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let m = diag.len();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = sup[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - sub[i - 1] * cp[i - 1];
        cp[i] = if i < m - 1 { sup[i] / denom } else { 0.0 };
        dp[i] = (rhs[i] - sub[i - 1] * dp[i - 1]) / denom;
    }
    rhs[m - 1] = dp[m - 1];
    for i in (0..m - 1).rev() {
        rhs[i] = dp[i] - cp[i] * rhs[i + 1];
    }
}

/// Discretized principal eigenpair of the Rayleigh quotient
/// `∫ p |f'|² / ∫ w |f|²` by vertex-centered finite differences and inverse
/// iteration; Neumann (natural) condition at 0, Dirichlet at `x_max`.
/// The reported `eigenvalue` is `-λ_min` (the generator's eigenvalue).
pub fn rayleigh_eigen(n: f64, strategy: &Strategy, grid: GridSpec) -> Result<DiscretizedEig> {
    check_dimension(n)?;
    if grid.cells < 16 || !(grid.x_max > 0.0) {
        return Err(Error::domain("grid needs x_max > 0 and at least 16 cells"));
    }
    // Align the mesh with a step cutoff so the rate jump falls on a vertex
    // (an off-vertex jump costs O(h) in the eigenvalue).
    let mut h = grid.x_max / grid.cells as f64;
    if let Strategy::Step(s) = strategy {
        if s.cutoff_c > 0.0 && s.cutoff_c < grid.x_max {
            let k = (s.cutoff_c / h).round().max(1.0);
            h = s.cutoff_c / k;
        }
    }
    let m = (grid.x_max / h).ceil() as usize;
    let xs: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    // Unknowns f_0 .. f_{m-1}; f_m = 0 (Dirichlet).
    let p_mid: Vec<f64> = (0..m)
        .map(|i| weight_p(n, strategy, (xs[i] + xs[i + 1]) / 2.0))
        .collect();
    let mut mass = vec![0.0; m];
    for (i, mi) in mass.iter_mut().enumerate() {
        let lo = if i == 0 { 0.0 } else { xs[i] - h / 2.0 };
        let hi = xs[i] + h / 2.0;
        if i == 0 {
            // x^{n-1} is integrable-singular at 0; integrate the power factor
            // exactly and evaluate the smooth remainder at the cell's
            // power-weighted mean abscissa.
            let xbar = hi * n / (n + 1.0);
            *mi = hi.powf(n) / n * kernels::drift_integral(strategy, xbar).exp()
                / strategy.rate(xbar);
        } else {
            // Simpson per smooth piece: w jumps at the rate breakpoints, so a
            // cell straddling one is integrated in two halves (sampling just
            // inside each piece keeps the one-sided values correct).
            let mut piece_lo = lo;
            let mut breaks: Vec<f64> = match strategy {
                Strategy::Step(s) => vec![s.cutoff_c],
                Strategy::Tabulated(t) => t.knots().to_vec(),
            };
            breaks.retain(|&b| b > lo && b < hi);
            breaks.push(hi);
            let mut acc = 0.0;
            for b in breaks {
                let w = b - piece_lo;
                let at = |x: f64| weight_w(n, strategy, x);
                let inner = 1e-9 * h;
                acc += w / 6.0
                    * (at(piece_lo + inner) + 4.0 * at((piece_lo + b) / 2.0) + at(b - inner));
                piece_lo = b;
            }
            *mi = acc;
        }
    }
    let mut sub = vec![0.0; m - 1];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m - 1];
    for i in 0..m {
        let left = if i == 0 { 0.0 } else { p_mid[i - 1] / h };
        let right = p_mid[i] / h;
        diag[i] = left + right;
        if i > 0 {
            sub[i - 1] = -p_mid[i - 1] / h;
        }
        if i < m - 1 {
            sup[i] = -p_mid[i] / h;
        }
    }
    // Inverse iteration on the pencil (A, M): f <- A^{-1} M f.
    let mut f: Vec<f64> = xs[..m]
        .iter()
        .map(|&x| (-x * x / (2.0 * strategy.r1())).exp())
        .collect();
    let mut history = Vec::new();
    let mut lambda_prev = f64::INFINITY;
    for iter in 0..500 {
        let mut rhs: Vec<f64> = (0..m).map(|i| mass[i] * f[i]).collect();
        thomas_solve(&sub, &diag, &sup, &mut rhs);
        let norm = rhs
            .iter()
            .zip(&mass)
            .map(|(v, mi)| mi * v * v)
            .sum::<f64>()
            .sqrt();
        for v in rhs.iter_mut() {
            *v /= norm;
        }
        f = rhs;
        // Rayleigh quotient f'Af / f'Mf with f'Mf = 1.
        let mut num = 0.0;
        for i in 0..m {
            let fr = if i + 1 < m { f[i + 1] } else { 0.0 };
            num += p_mid[i] / h * (fr - f[i]) * (fr - f[i]);
        }
        history.push(num);
        if (num - lambda_prev).abs() <= 1e-13 * num.abs() && iter >= 3 {
            lambda_prev = num;
            break;
        }
        lambda_prev = num;
        if iter == 499 {
            return Err(Error::EigenNonConvergence { iters: 500 });
        }
    }
    let sign = f[0].signum();
    let eigenvector: Vec<f64> = f.iter().map(|v| v * sign).collect();
    if eigenvector.iter().any(|&v| v < 0.0) {
        return Err(Error::Instability(
            "discretized principal eigenvector is not positive".into(),
        ));
    }
    Ok(DiscretizedEig {
        grid: xs,
        eigenvalue: -lambda_prev,
        eigenvector,
        rayleigh_history: history,
    })
}

/// The optimal bang-bang strategy in stationary coordinates, with its full
/// solution record: rate `r1` below `κ√r1`, rate `r2` above.
pub fn optimal_strategy(n: f64, r1: f64, r2: f64) -> Result<(StepStrategy, OptimalSolution)> {
    if !(r1 > 0.0 && r2 >= r1) {
        return Err(Error::domain("rates must satisfy 0 < r1 <= r2"));
    }
    let v_ratio = (r2 / r1).sqrt();
    let solution = solve_optimal(n, v_ratio)?;
    let strategy = StepStrategy::new(r1, r2, solution.kappa * r1.sqrt())?;
    Ok((strategy, solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kappa_bar_reference_values() {
        // Frozen from an independent high-precision quadrature/root pipeline.
        assert_relative_eq!(kappa_bar(1.0).unwrap(), 1.306_929_727_719_281, max_relative = 1e-9);
        assert_relative_eq!(kappa_bar(0.3).unwrap(), 0.590_631_640_763_785, max_relative = 1e-9);
        assert_relative_eq!(kappa_bar(0.9).unwrap(), 1.203_035_577_011_268, max_relative = 1e-9);
        assert_relative_eq!(kappa_bar(1.7).unwrap(), 2.276_005_227_766_686, max_relative = 1e-9);
    }

    #[test]
    fn kappa_bar_residual_small() {
        let spec = QuadratureSpec::default();
        for n in [0.4, 1.0, 1.6] {
            let k = kappa_bar(n).unwrap();
            assert!(kappa_bar_residual(n, k, &spec).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_bar_limits_and_monotonicity() {
        // Small-n limit kbar/sqrt(n) -> 1.
        let r = kappa_bar(0.01).unwrap() / 0.01f64.sqrt();
        assert!(r > 0.95 && r < 1.05, "ratio {r}");
        // n -> 2 growth rate: the ratio to sqrt(2 ln(1/(2-n))) approaches 1
        // only logarithmically; at n = 1.99 it is ~1.239.
        let r = kappa_bar(1.99).unwrap() / (2.0 * (1.0 / 0.01f64).ln()).sqrt();
        assert!(r > 0.8 && r < 1.25, "ratio {r}");
        let grid: Vec<f64> = (1..8).map(|i| 0.25 * i as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&n| kappa_bar(n).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn kappa_of_eta_limits() {
        // eta -> 0: kappa -> sqrt(n).
        let k = kappa_of_eta(1.0, 1e-4).unwrap();
        assert!((k - 1.0).abs() < 1e-2, "kappa(1e-4) = {k}");
        // eta -> n: kappa -> kappa_bar.
        let k = kappa_of_eta(1.0, 0.999).unwrap();
        let kb = kappa_bar(1.0).unwrap();
        assert!((kb - k).abs() < 0.01 && k < kb, "kappa(0.999) = {k}, kbar = {kb}");
    }

    #[test]
    fn kappa_of_eta_residual_scan() {
        // The solved kappa zeroes the residual, which brackets it in sign.
        let spec = QuadratureSpec::default();
        let (n, eta) = (1.0, 0.5);
        let k = kappa_of_eta(n, eta).unwrap();
        assert!(kappa_residual(n, eta, k, &spec).unwrap().abs() < 1e-10);
        assert!(kappa_residual(n, eta, 0.95 * k, &spec).unwrap() < 0.0);
        assert!(kappa_residual(n, eta, 1.05 * k, &spec).unwrap() > 0.0);
    }

    #[test]
    fn solve_optimal_reference_point() {
        // Frozen from the independent prototype pipeline (xtol 5e-14).
        let sol = solve_optimal(1.0, 2.0).unwrap();
        assert_relative_eq!(sol.eta, 0.490_854_228_997_467, max_relative = 1e-8);
        assert_relative_eq!(sol.kappa, 1.119_619_520_045_148, max_relative = 1e-8);
        assert_relative_eq!(sol.eigenvalue_e, sol.eta - 1.0, max_relative = 1e-14);
        assert_relative_eq!(sol.gamma, 0.499_334_902_863_663, max_relative = 1e-7);
        assert!(sol.residual_eq1.abs() < 1e-9 && sol.residual_eq2.abs() < 1e-9);
        assert!(!sol.degenerate);
    }

    #[test]
    fn solve_optimal_degenerate_path() {
        let sol = solve_optimal(1.3, 1.0 + 5e-5).unwrap();
        assert!(sol.degenerate);
        assert_eq!(sol.eta, 0.0);
        assert_relative_eq!(sol.kappa, 1.3f64.sqrt(), max_relative = 1e-15);
        assert_eq!(sol.eigenvalue_e, -1.3);
    }

    #[test]
    fn solve_optimal_invariants() {
        for (n, v) in [(0.5, 2.0), (1.5, 1.5)] {
            let sol = solve_optimal(n, v).unwrap();
            assert!(sol.eta > 0.0 && sol.eta < n);
            assert!(sol.kappa > n.sqrt() && sol.kappa < kappa_bar(n).unwrap());
            assert!(sol.eigenvalue_e > -n && sol.eigenvalue_e < 0.0);
            assert!(sol.gamma > 0.0);
        }
    }

    #[test]
    fn monotone_in_rate_ratio() {
        let vs = [1.1, 2.0, 5.0, 10.0];
        let sols: Vec<_> = vs.iter().map(|&v| solve_optimal(1.0, v).unwrap()).collect();
        assert!(sols.windows(2).all(|w| w[0].eta < w[1].eta));
        assert!(sols.windows(2).all(|w| w[0].kappa < w[1].kappa));
    }

    #[test]
    fn h_ratio_limits() {
        let (n, r1, r2, c) = (1.0, 1.0, 4.0, 1.12);
        let near_zero = h_ratio(n, r1, r2, c, -1e-6).unwrap();
        assert!(near_zero.abs() < 1e-3, "H near E=0: {near_zero}");
        let near_minus_n = h_ratio(n, r1, r2, c, -1.0 + 1e-6).unwrap();
        assert_relative_eq!(near_minus_n, r2 / r1, max_relative = 1e-3);
    }

    #[test]
    fn eigen_step_constant_rate() {
        let r = eigen_step(0.7, 2.0, 2.0, 1.0).unwrap();
        assert_eq!(r.eigenvalue_e, -0.7);
        assert_relative_eq!(r.inflection_x, (0.7f64 * 2.0).sqrt(), max_relative = 1e-14);
        let phi = eigenfunction_eval(&r, 1.5).unwrap();
        assert_relative_eq!(phi, (-1.5f64 * 1.5 / 4.0).exp(), max_relative = 1e-14);
    }

    #[test]
    fn eigen_step_cross_solver_consistency() {
        let sol = solve_optimal(1.0, 2.0).unwrap();
        let r = eigen_step(1.0, 1.0, 4.0, sol.kappa).unwrap();
        assert!(
            (r.eigenvalue_e - sol.eigenvalue_e).abs() < 1e-8,
            "eigen_step E = {}, solver E = {}",
            r.eigenvalue_e,
            sol.eigenvalue_e
        );
        assert_relative_eq!(r.gamma, sol.gamma, max_relative = 1e-6);
    }

    #[test]
    fn eigen_step_stationarity_at_optimum() {
        let sol = solve_optimal(1.0, 2.0).unwrap();
        let e0 = eigen_step(1.0, 1.0, 4.0, sol.kappa).unwrap().eigenvalue_e;
        for shift in [0.999, 1.001] {
            let e = eigen_step(1.0, 1.0, 4.0, sol.kappa * shift).unwrap().eigenvalue_e;
            assert!(e <= e0, "perturbed cutoff must not beat the optimum");
            assert!((e - e0).abs() < 1e-5 * e0.abs(), "stationarity violated: {e} vs {e0}");
        }
    }

    #[test]
    fn inflection_coincides_with_cutoff_at_optimum_only() {
        let sol = solve_optimal(1.0, 2.0).unwrap();
        let opt = eigen_step(1.0, 1.0, 4.0, sol.kappa).unwrap();
        assert!(
            (opt.inflection_x - sol.kappa).abs() / sol.kappa < 1e-5,
            "inflection {} vs cutoff {}",
            opt.inflection_x,
            sol.kappa
        );
        for fac in [0.6, 1.5] {
            let off = eigen_step(1.0, 1.0, 4.0, fac * sol.kappa).unwrap();
            let rel = (off.inflection_x - off.strategy.cutoff_c).abs() / off.strategy.cutoff_c;
            assert!(rel > 1e-3, "non-optimal cutoff {fac} should not coincide: {rel}");
        }
    }

    #[test]
    fn eigenfunction_smoothness_and_decrease() {
        let sol = solve_optimal(1.0, 2.0).unwrap();
        let r = eigen_step(1.0, 1.0, 4.0, sol.kappa).unwrap();
        let c = r.strategy.cutoff_c;
        let below = eigenfunction_eval(&r, c * (1.0 - 1e-10)).unwrap();
        let above = eigenfunction_eval(&r, c * (1.0 + 1e-10)).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-9);
        let d_below = eigenfunction_deriv(&r, c * (1.0 - 1e-10)).unwrap();
        let d_above = eigenfunction_deriv(&r, c * (1.0 + 1e-10)).unwrap();
        assert_relative_eq!(d_below, d_above, max_relative = 1e-7);
        let mut prev = f64::INFINITY;
        for i in 1..=200 {
            let x = 4.0 * i as f64 / 200.0;
            let phi = eigenfunction_eval(&r, x).unwrap();
            assert!(phi < prev, "eigenfunction must strictly decrease");
            prev = phi;
        }
    }

    #[test]
    fn rayleigh_constant_rate() {
        for n in [0.5, 1.0, 1.5] {
            let r = 1.0;
            let s = Strategy::constant(r);
            let grid = GridSpec {
                x_max: 8.0 * r.sqrt(),
                cells: 4000,
            };
            let d = rayleigh_eigen(n, &s, grid).unwrap();
            assert!(
                (d.eigenvalue + n).abs() < 1e-4,
                "n={n}: discretized E = {}",
                d.eigenvalue
            );
            assert!(d.eigenvector.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn rayleigh_matches_eigen_step() {
        let sol = solve_optimal(1.0, 2.0).unwrap();
        let s = Strategy::step(1.0, 4.0, sol.kappa).unwrap();
        let grid = GridSpec {
            x_max: 18.0,
            cells: 6000,
        };
        let d = rayleigh_eigen(1.0, &s, grid).unwrap();
        assert!(
            (d.eigenvalue - sol.eigenvalue_e).abs() < 1e-4,
            "discretized {} vs analytic {}",
            d.eigenvalue,
            sol.eigenvalue_e
        );
    }

    #[test]
    fn rayleigh_second_order_convergence() {
        let n = 1.0;
        let s = Strategy::constant(1.0);
        let coarse = rayleigh_eigen(n, &s, GridSpec { x_max: 8.0, cells: 500 })
            .unwrap()
            .eigenvalue;
        let fine = rayleigh_eigen(n, &s, GridSpec { x_max: 8.0, cells: 1000 })
            .unwrap()
            .eigenvalue;
        let err_c = (coarse + n).abs();
        let err_f = (fine + n).abs();
        let order = (err_c / err_f).log2();
        assert!(order > 1.6 && order < 2.4, "observed order {order}");
    }

    #[test]
    fn optimal_strategy_scaling() {
        let (s1, sol1) = optimal_strategy(1.0, 1.0, 4.0).unwrap();
        let (s2, sol2) = optimal_strategy(1.0, 2.5, 10.0).unwrap();
        assert_relative_eq!(sol1.eta, sol2.eta, max_relative = 1e-10);
        assert_relative_eq!(sol1.kappa, sol2.kappa, max_relative = 1e-10);
        assert_relative_eq!(s2.cutoff_c, s1.cutoff_c * 2.5f64.sqrt(), max_relative = 1e-10);
    }
}
