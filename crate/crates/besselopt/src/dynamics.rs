//! Independent verification of the decay exponents: semigroup evolution of
//! the stationary dynamics, Monte-Carlo simulation of the original SDE in
//! parabolic coordinates, tail-exponent fitting, and the integration-by-parts
//! identity check for the quadratic form.

use crate::error::{Error, Result};
use crate::kernels::{self, weight_p, weight_w, QuadratureSpec, Strategy};
use crate::quad;
use crate::spectral::{rayleigh_eigen, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Problem data for the time-dependent simulation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelParams {
    /// Effective dimension, in (0, 2).
    pub n: f64,
    pub r1: f64,
    pub r2: f64,
    /// Horizon time.
    pub t_horizon: f64,
    /// Starting radius.
    pub y_start: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n > 0.0 && self.n < 2.0) {
            return Err(Error::domain(format!("n = {} outside (0, 2)", self.n)));
        }
        if !(self.r1 > 0.0 && self.r2 >= self.r1) {
            return Err(Error::domain("rates must satisfy 0 < r1 <= r2"));
        }
        if !(self.t_horizon > 0.0) {
            return Err(Error::domain("horizon T must be positive"));
        }
        if !(self.y_start >= 0.0) {
            return Err(Error::domain("start radius must be nonnegative"));
        }
        Ok(())
    }

    pub fn v_ratio(&self) -> f64 {
        (self.r2 / self.r1).sqrt()
    }
}

/// Weighted power-law fit of the near-origin mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Fitted exponent of `mass(eps) ~ eps^slope`.
    pub slope: f64,
    pub stderr: f64,
    /// Strictly decreasing evaluation radii.
    pub eps_grid: Vec<f64>,
    /// Tail mass (fraction of samples at or below each radius).
    pub masses: Vec<f64>,
    /// Raw hit counts when fitted from samples.
    pub counts: Option<Vec<u64>>,
}

/// Record of one semigroup evolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemigroupRun {
    pub grid: GridSpec,
    pub time_step: f64,
    /// Late-time slope of the log functional; approximately `E/2`.
    pub decay_rate: f64,
    /// `(s, ln functional)` at every step.
    pub history: Vec<(f64, f64)>,
    /// Relative drift of the total weighted mass per unit `s`; meaningful
    /// (and small) only while the evolving profile stays clear of the
    /// outflow boundary at `x_max`.
    pub mass_drift: f64,
}

/// Evolve `g(s) = e^{(s/2)L} f0` on the discretized self-adjoint form by
/// Crank-Nicolson and extract the decay rate of the functional
/// `⟨φ_proxy, g(s)⟩_w` (projection on the discretized principal
/// eigenvector, which suppresses subdominant modes) over the last half of
/// the run.
pub fn evolve_semigroup<F: Fn(f64) -> f64>(
    n: f64,
    strategy: &Strategy,
    f0: F,
    grid: GridSpec,
    s_max: f64,
    dt: f64,
) -> Result<SemigroupRun> {
    if !(dt > 0.0 && s_max > 4.0 * dt) {
        return Err(Error::domain("need dt > 0 and s_max > 4 dt"));
    }
    let eig = rayleigh_eigen(n, strategy, grid)?;
    let m = eig.eigenvector.len();
    let h = eig.grid[1] - eig.grid[0];
    // Reassemble the same matrices the eigensolver used.
    let p_mid: Vec<f64> = (0..m)
        .map(|i| weight_p(n, strategy, (eig.grid[i] + eig.grid[i + 1]) / 2.0))
        .collect();
    let mass = cell_masses(n, strategy, &eig.grid, m);
    let apply_a = |f: &[f64], out: &mut [f64]| {
        for i in 0..m {
            let fl = if i > 0 { f[i - 1] } else { f[i] };
            let fr = if i + 1 < m { f[i + 1] } else { 0.0 };
            let left = if i > 0 { p_mid[i - 1] / h } else { 0.0 };
            let right = p_mid[i] / h;
            out[i] = left * (f[i] - fl) + right * (f[i] - fr);
        }
    };
    // Crank-Nicolson: (M + dt/4 A) g' = (M - dt/4 A) g.
    let alpha = dt / 4.0;
    let sub: Vec<f64> = (0..m - 1).map(|i| -alpha * p_mid[i] / h).collect();
    let mut diag = vec![0.0; m];
    for i in 0..m {
        let left = if i > 0 { p_mid[i - 1] / h } else { 0.0 };
        diag[i] = mass[i] + alpha * (left + p_mid[i] / h);
    }
    let mut g: Vec<f64> = eig.grid[..m].iter().map(|&x| f0(x)).collect();
    if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::domain("initial data must be finite and nonnegative"));
    }
    let functional = |g: &[f64]| -> f64 {
        g.iter()
            .zip(&eig.eigenvector)
            .zip(&mass)
            .map(|((gi, phi), mi)| phi * mi * gi)
            .sum()
    };
    let total_mass = |g: &[f64]| -> f64 { g.iter().zip(&mass).map(|(gi, mi)| mi * gi).sum() };
    let mass0 = total_mass(&g);
    let steps = (s_max / dt).round() as usize;
    let mut history = Vec::with_capacity(steps + 1);
    history.push((0.0, functional(&g).ln()));
    let mut scratch = vec![0.0; m];
    for k in 1..=steps {
        apply_a(&g, &mut scratch);
        let mut rhs: Vec<f64> = (0..m).map(|i| mass[i] * g[i] - alpha * scratch[i]).collect();
        thomas_solve(&sub, &diag, &sub, &mut rhs);
        g = rhs;
        let f = functional(&g);
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Instability(format!(
                "semigroup functional became {f} at step {k}"
            )));
        }
        history.push((k as f64 * dt, f.ln()));
    }
    let mass_drift = ((total_mass(&g) - mass0) / mass0).abs() / s_max;
    // Least-squares slope over the last half.
    let tail = &history[history.len() / 2..];
    let decay_rate = ls_slope(tail);
    if decay_rate >= 0.0 {
        return Err(Error::Instability(format!(
            "expected decay, got rate {decay_rate}"
        )));
    }
    Ok(SemigroupRun {
        grid,
        time_step: dt,
        decay_rate,
        history,
        mass_drift,
    })
}

fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum::<f64>() / k;
    let sy: f64 = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - sx) * (p.0 - sx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - sx) * (p.1 - sy)).sum();
    sxy / sxx
}

/// Same vertex-centered cell masses as the Rayleigh eigensolver.
fn cell_masses(n: f64, strategy: &Strategy, xs: &[f64], m: usize) -> Vec<f64> {
    let h = xs[1] - xs[0];
    let mut mass = vec![0.0; m];
    for (i, mi) in mass.iter_mut().enumerate() {
        let lo = if i == 0 { 0.0 } else { xs[i] - h / 2.0 };
        let hi = xs[i] + h / 2.0;
        if i == 0 {
            let xbar = hi * n / (n + 1.0);
            *mi = hi.powf(n) / n * kernels::drift_integral(strategy, xbar).exp()
                / strategy.rate(xbar);
        } else {
            let mut piece_lo = lo;
            let mut breaks: Vec<f64> = strategy_breaks(strategy);
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
    mass
}

fn strategy_breaks(strategy: &Strategy) -> Vec<f64> {
    match strategy {
        Strategy::Step(s) => vec![s.cutoff_c],
        Strategy::Tabulated(t) => t.knots().to_vec(),
    }
}

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

/// Number of paths per deterministic RNG stream; fixed so results are
/// bit-identical for any thread count.
const PATHS_PER_CHUNK: usize = 10_000;
/// Cap on the step as a fraction of the remaining time: the strategy
/// argument `x/√(T-t)` evolves on the log scale of the remaining time, so
/// this bounds the step in that (stationary) time variable.  The rate-freeze
/// bias of the tail exponent scales with this fraction.
const GEOMETRIC_STEP_FRACTION: f64 = 0.005;
/// Smallest refined remaining time, as a fraction of the horizon, before the
/// exact constant-rate finish.
const TAU_MIN_FRACTION: f64 = 1e-12;

/// Simulate the squared radius of the controlled diffusion to the horizon
/// and return the final radii.
///
/// The radial SDE is `dρ = n D dt + 2 √(D ρ) dW` with the parabolic rate
/// `D = R(x/√(T-t))`.  Each step freezes the rate at the step's start and
/// samples the resulting constant-rate squared-Bessel transition exactly
/// (noncentral chi-squared via a Poisson-mixed Gamma), so the only
/// discretization error is in the rate argument.  A Gaussian Euler step with
/// truncation at 0 is avoided deliberately: its boundary clamping deposits
/// spurious mass at small radii, which directly corrupts the tail exponent.
/// Steps are uniform (`dt`) early on and shrink geometrically near the
/// horizon, keeping the step small in the stationary log-time variable; once
/// the strategy argument is far enough above the last rate breakpoint (or
/// the remaining time reaches `1e-12 T`), the remainder is one exact step.
pub fn simulate_paths(
    params: &ModelParams,
    strategy: &Strategy,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    params.validate()?;
    let t = params.t_horizon;
    if !(dt > 0.0 && dt <= t / 1e3) {
        return Err(Error::domain(format!("dt = {dt} must be in (0, T/1000]")));
    }
    if n_paths < 10_000 {
        return Err(Error::domain("need at least 10^4 paths"));
    }
    let n_chunks = n_paths.div_ceil(PATHS_PER_CHUNK);
    let results: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = PATHS_PER_CHUNK.min(n_paths - chunk * PATHS_PER_CHUNK);
            (0..count)
                .map(|_| simulate_one(params, strategy, dt, &mut rng))
                .collect()
        })
        .collect();
    Ok(results.into_iter().flatten().collect())
}

fn simulate_one(params: &ModelParams, strategy: &Strategy, dt: f64, rng: &mut ChaCha8Rng) -> f64 {
    let n = params.n;
    let t_hor = params.t_horizon;
    let mut rho = params.y_start * params.y_start;
    // Beyond this strategy argument the rate is exactly r2 and stays there
    // with overwhelming probability for the remaining time.
    let exact_threshold = strategy.support_end() + 6.0 * strategy.r2().sqrt();
    if strategy.support_end() == 0.0 {
        // Constant rate: the transition is exact from the start.
        return exact_finish(n, rho, strategy.r2(), t_hor, rng);
    }
    let tau_min = TAU_MIN_FRACTION * t_hor;
    let mut tau = t_hor;
    loop {
        let z = rho.sqrt() / tau.sqrt();
        if z > exact_threshold || tau <= tau_min {
            return (frozen_rate_step(n, rho, strategy.rate(z), tau, rng)).sqrt();
        }
        let step = dt.min(tau * GEOMETRIC_STEP_FRACTION);
        // The rate argument drifts mostly through the deterministic shrinkage
        // of the remaining time, so evaluate it at the step's midpoint in
        // remaining time; this cancels the leading freeze error.
        let z_mid = rho.sqrt() / (tau - 0.5 * step).sqrt();
        rho = frozen_rate_step(n, rho, strategy.rate(z_mid), step, rng);
        tau -= step;
    }
}

/// Exact squared-Bessel transition over time `tau` at constant rate `d`:
/// `rho' = d·tau · X` with `X` noncentral chi-squared (`n` degrees of
/// freedom, noncentrality `rho/(d·tau)`), sampled as a Poisson-mixed Gamma.
fn frozen_rate_step(n: f64, rho: f64, d: f64, tau: f64, rng: &mut ChaCha8Rng) -> f64 {
    let scale = d * tau;
    if scale <= 0.0 {
        return rho;
    }
    let lambda = rho / scale;
    // Below ~1e-16 the sampler's e^{-λ} rounds to 1 and it misbehaves; the
    // mixing index is 0 there with probability 1 - O(λ).
    let j = if lambda > 1e-12 {
        Poisson::new(lambda / 2.0)
            .expect("positive mean")
            .sample(rng)
            .max(0.0)
    } else {
        0.0
    };
    let shape = n / 2.0 + j;
    let x = Gamma::new(shape, 2.0).expect("positive shape").sample(rng);
    scale * x
}

/// Exact transition straight to the horizon, returning the final radius.
fn exact_finish(n: f64, rho: f64, d: f64, tau: f64, rng: &mut ChaCha8Rng) -> f64 {
    frozen_rate_step(n, rho, d, tau, rng).sqrt()
}

/// Default geometric radius grid for tail fitting: ratio 1/2 from
/// `0.2·√(r1·T)` down while every radius still collects `min_count` hits.
/// Radii near the scheme's resolution floor `√(r1·τ_min)` are excluded:
/// below that scale the final exact step freezes the rate, which biases the
/// local slope.
pub fn default_eps_grid(params: &ModelParams, samples: &[f64], min_count: usize) -> Vec<f64> {
    let mut eps = 0.2 * (params.r1 * params.t_horizon).sqrt();
    let floor = 30.0 * (params.r1 * TAU_MIN_FRACTION * params.t_horizon).sqrt();
    let mut grid = Vec::new();
    loop {
        let hits = samples.iter().filter(|&&x| x <= eps).count();
        if hits < min_count || eps < floor || grid.len() >= 40 {
            break;
        }
        grid.push(eps);
        eps /= 2.0;
    }
    grid
}

/// Fit `mass(eps) ~ eps^slope` from samples by weighted least squares on
/// `ln mass` vs `ln eps` with binomial weights `count/(1 - mass)`.
///
/// The reported standard error is *not* the naive per-point one: the bins
/// are nested, so their log masses form a random walk of conditionally
/// independent binomial increments (`var = 1/count_small - 1/count_large`),
/// and the slope's true variance — dominated by the smallest bin — is the
/// propagation of those increment variances through the fit's linear
/// coefficients.  Residual- or independence-based formulas understate it
/// several-fold.
pub fn fit_exponent(samples: &[f64], eps_grid: &[f64]) -> Result<ExponentFit> {
    if eps_grid.len() < 4 {
        return Err(Error::Config(format!(
            "need at least 4 radii for a fit, got {}",
            eps_grid.len()
        )));
    }
    if !eps_grid.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::Config("eps grid must be strictly decreasing".into()));
    }
    let total = samples.len() as f64;
    let mut counts = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let hits = samples.iter().filter(|&&x| x <= eps).count() as u64;
        if hits == 0 {
            let nonzero: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0).collect();
            let lo = nonzero.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = nonzero.iter().copied().fold(0.0, f64::max);
            return Err(Error::EmptyBin {
                eps,
                suggest_lo: lo * 2.0,
                suggest_hi: hi / 4.0,
            });
        }
        counts.push(hits);
    }
    let points: Vec<(f64, f64, f64)> = eps_grid
        .iter()
        .zip(&counts)
        .map(|(&eps, &c)| {
            let mass = c as f64 / total;
            let weight = c as f64 / (1.0 - mass).max(1e-12);
            (eps.ln(), mass.ln(), weight)
        })
        .collect();
    let (slope, _) = weighted_fit(&points, true);
    let stderr = nested_slope_stderr(&points, &counts);
    Ok(ExponentFit {
        slope,
        stderr,
        eps_grid: eps_grid.to_vec(),
        masses: counts.iter().map(|&c| c as f64 / total).collect(),
        counts: Some(counts),
    })
}

/// Fit from precomputed masses (ordinary least squares, residual-based
/// standard error).
pub fn fit_exponent_from_masses(eps_grid: &[f64], masses: &[f64]) -> Result<ExponentFit> {
    if eps_grid.len() != masses.len() || eps_grid.len() < 4 {
        return Err(Error::Config(
            "need matching eps/mass arrays with at least 4 points".into(),
        ));
    }
    if masses.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Config("masses must be positive".into()));
    }
    let points: Vec<(f64, f64, f64)> = eps_grid
        .iter()
        .zip(masses)
        .map(|(&e, &m)| (e.ln(), m.ln(), 1.0))
        .collect();
    let (slope, stderr) = weighted_fit(&points, false);
    Ok(ExponentFit {
        slope,
        stderr,
        eps_grid: eps_grid.to_vec(),
        masses: masses.to_vec(),
        counts: None,
    })
}

/// Standard error of the weighted-fit slope for nested count bins.
///
/// The slope is `sum_j b_j ln(m_j)` with `b_j = w_j (x_j - x̄_w) / sxx_w`;
/// writing `ln m_j` as a cumulative sum of increments between consecutive
/// bins (independent given the coarser count) gives
/// `var = sum_i (sum_{j>=i} b_j)^2 (1/c_i - 1/c_{i-1})`.
fn nested_slope_stderr(points: &[(f64, f64, f64)], counts: &[u64]) -> f64 {
    let sw: f64 = points.iter().map(|p| p.2).sum();
    let mx: f64 = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    let b: Vec<f64> = points.iter().map(|p| p.2 * (p.0 - mx) / sxx).collect();
    let mut var = 0.0;
    let mut tail: f64 = b.iter().sum(); // starts at 0 up to rounding
    for i in 1..counts.len() {
        tail -= b[i - 1];
        let inc_var = (1.0 / counts[i] as f64 - 1.0 / counts[i - 1] as f64).max(0.0);
        var += tail * tail * inc_var;
    }
    var.sqrt()
}

/// Weighted linear regression of y on x; returns (slope, stderr of slope).
/// With `apriori` the error uses the given weights as inverse variances,
/// otherwise the residual variance.
fn weighted_fit(points: &[(f64, f64, f64)], apriori: bool) -> (f64, f64) {
    let sw: f64 = points.iter().map(|p| p.2).sum();
    let mx: f64 = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my: f64 = points.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let stderr = if apriori {
        (1.0 / sxx).sqrt()
    } else {
        let intercept = my - slope * mx;
        let dof = (points.len() as f64 - 2.0).max(1.0);
        let ss_res: f64 = points
            .iter()
            .map(|p| {
                let r = p.1 - intercept - slope * p.0;
                p.2 * r * r
            })
            .sum();
        (ss_res / dof / sxx).sqrt()
    };
    (slope, stderr)
}

/// Residual report from the integration-by-parts identity
/// `‖Lf‖² = ‖RΔₙf‖² - ∫ p |f'|²` (norms in the `w`-weighted space).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadFormReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_residual: f64,
}

/// Smooth test function with analytic first and second derivatives, used by
/// the quadratic-form and symmetry checks (analytic derivatives keep the
/// integrands free of finite-difference noise).
pub struct TestFunction<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    pub df: &'a dyn Fn(f64) -> f64,
    pub d2f: &'a dyn Fn(f64) -> f64,
}

impl TestFunction<'_> {
    /// `Lf = x f' + R (f'' + (n-1)/x f')` at `x > 0`.
    fn apply_l(&self, n: f64, strategy: &Strategy, x: f64) -> f64 {
        let fp = (self.df)(x);
        let fpp = (self.d2f)(x);
        x * fp + strategy.rate(x) * (fpp + (n - 1.0) / x * fp)
    }
}

/// Weighted integral `∫₀^xmax q(x) w(x) dx` with the `x^{n-1}` origin
/// singularity peeled off by substitution and forced quadrature splits at the
/// strategy's rate breakpoints.
fn weighted_integral(
    n: f64,
    strategy: &Strategy,
    q: &dyn Fn(f64) -> f64,
    x_max: f64,
) -> Result<f64> {
    let spec = QuadratureSpec::default();
    let breaks = strategy_breaks(strategy);
    // Stop the substitution region before the first rate breakpoint so each
    // quadrature piece is smooth.
    let mut lim = 0.5f64.min(x_max);
    for &b in &breaks {
        if b > 0.0 && b < lim {
            lim = b;
        }
    }
    let head = quad::integrate_left_power(
        |x| q(x) * kernels::drift_integral(strategy, x).exp() / strategy.rate(x),
        n,
        lim,
        1e-11,
        1e-15,
        spec.max_subdivisions,
    )?;
    let tail = quad::integrate_split(
        |x| q(x) * weight_w(n, strategy, x),
        lim,
        x_max,
        &breaks,
        1e-11,
        1e-15,
        spec.max_subdivisions,
    )?;
    Ok(head.value + tail.value)
}

/// Check the quadratic-form identity for a smooth test function supported
/// (to numerical precision) inside `(0, x_max)`.
pub fn quadratic_form_check(
    n: f64,
    strategy: &Strategy,
    tf: &TestFunction,
    x_max: f64,
) -> Result<QuadFormReport> {
    let lhs = weighted_integral(
        n,
        strategy,
        &|x| {
            let l = tf.apply_l(n, strategy, x);
            l * l
        },
        x_max,
    )?;
    let norm_lap = weighted_integral(
        n,
        strategy,
        &|x| {
            let rl = strategy.rate(x) * ((tf.d2f)(x) + (n - 1.0) / x * (tf.df)(x));
            rl * rl
        },
        x_max,
    )?;
    // Dirichlet term uses p = R w, i.e. an extra factor R inside the w-integral.
    let dirichlet = weighted_integral(
        n,
        strategy,
        &|x| {
            let fp = (tf.df)(x);
            strategy.rate(x) * fp * fp
        },
        x_max,
    )?;
    let rhs = norm_lap - dirichlet;
    let scale = lhs.abs().max(norm_lap.abs());
    Ok(QuadFormReport {
        lhs,
        rhs,
        rel_residual: (lhs - rhs).abs() / scale,
    })
}

/// Symmetry of the generator in the weighted space: returns
/// `(⟨g, Lf⟩_w, ⟨Lg, f⟩_w)`; both also equal `-∫ p g' f'`.
pub fn symmetry_check(
    n: f64,
    strategy: &Strategy,
    tf: &TestFunction,
    tg: &TestFunction,
    x_max: f64,
) -> Result<(f64, f64)> {
    let a = weighted_integral(
        n,
        strategy,
        &|x| (tg.f)(x) * tf.apply_l(n, strategy, x),
        x_max,
    )?;
    let b = weighted_integral(
        n,
        strategy,
        &|x| (tf.f)(x) * tg.apply_l(n, strategy, x),
        x_max,
    )?;
    Ok((a, b))
}
