//! The saddle point α(x, y) of the Rankin-type Dirichlet series, the partial
//! Euler product ζ(s, y), the prime sums S and T, and the smooth
//! counterpart f(σ) = σ·log x + I((1 − σ)·log y) with its minimiser β.

use serde::{Deserialize, Serialize};

use crate::dickman::{int_exp, xi, xi_integral};
use crate::error::{domain, range, Error, Result};
use crate::primes::PrimeTable;
use crate::sum::CompensatedSum;

const MAX_ITERATIONS: u32 = 200;

/// The saddle point together with the derived quantities u, c and β.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleState {
    pub log_x: f64,
    pub y: f64,
    /// log x / log y.
    pub u: f64,
    /// log y / log log x; reporting only, absent when log log x <= 0.
    pub c: Option<f64>,
    pub alpha: f64,
    /// 1 − ξ(u)/log y; absent when u < 1.
    pub beta: Option<f64>,
    /// Σ_{p≤y} log p/(p^α − 1) − log x at the returned α.
    pub solver_residual: f64,
    pub iterations: u32,
}

fn check_y(table: &PrimeTable, y: f64) -> Result<()> {
    if !(y >= 2.0) {
        return domain(format!("y must be >= 2, got {y}"));
    }
    if y.floor() > table.limit() as f64 {
        return range(format!("y = {y} exceeds the prime table limit {}", table.limit()));
    }
    Ok(())
}

/// Σ log p/(p^α − 1) and its α-derivative over the given primes.
fn alpha_sum(log_primes: &[f64], alpha: f64) -> (f64, f64) {
    let mut value = CompensatedSum::new();
    let mut slope = CompensatedSum::new();
    for &lp in log_primes {
        let denom = (alpha * lp).exp_m1();
        value.add(lp / denom);
        let ratio = lp / denom;
        slope.add(-ratio * ratio * (denom + 1.0));
    }
    (value.value(), slope.value())
}

/// Solves `Σ_{p≤y} log p/(p^α − 1) = log x` for α > 0.
///
/// The left side decreases from +∞ to 0 on (0, ∞). A bracket is found by
/// doubling/halving, bisected to width 1e-3, and refined by safeguarded
/// Newton steps.
pub fn solve_alpha(log_x: f64, table: &PrimeTable, y: f64) -> Result<SaddleState> {
    check_y(table, y)?;
    if !(log_x >= std::f64::consts::LN_2) || !log_x.is_finite() {
        return domain(format!("log x must be finite and >= log 2, got {log_x}"));
    }
    let (_, logs) = table.up_to(y);
    let target = log_x;
    let f = |a: f64| alpha_sum(logs, a);
    let mut iterations = 0u32;
    let tick = |iterations: &mut u32| -> Result<()> {
        *iterations += 1;
        if *iterations > MAX_ITERATIONS {
            return Err(Error::Numeric(format!(
                "saddle point did not converge for log x = {log_x}, y = {y}"
            )));
        }
        Ok(())
    };

    let (mut lo, mut hi) = (0.5, 1.0);
    while f(hi).0 > target {
        tick(&mut iterations)?;
        lo = hi;
        hi *= 2.0;
    }
    while f(lo).0 < target {
        tick(&mut iterations)?;
        hi = lo;
        lo *= 0.5;
    }
    while hi - lo > 1e-3 {
        tick(&mut iterations)?;
        let mid = 0.5 * (lo + hi);
        if f(mid).0 > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tolerance = 1e-12 * log_x;
    let mut alpha = 0.5 * (lo + hi);
    let mut residual;
    loop {
        let (value, slope) = f(alpha);
        residual = value - target;
        if residual.abs() <= tolerance {
            break;
        }
        tick(&mut iterations)?;
        if residual > 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let mut next = alpha - residual / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == alpha {
            break;
        }
        alpha = next;
    }
    if residual.abs() > 1e-9 * log_x {
        return Err(Error::Numeric(format!(
            "saddle point residual {residual:e} too large for log x = {log_x}, y = {y}"
        )));
    }

    let log_y = y.ln();
    let u = log_x / log_y;
    let log2_x = log_x.ln();
    let beta = if u >= 1.0 { Some(1.0 - xi(u)?.xi / log_y) } else { None };
    Ok(SaddleState {
        log_x,
        y,
        u,
        c: (log2_x > 0.0).then(|| log_y / log2_x),
        alpha,
        beta,
        solver_residual: residual,
        iterations,
    })
}

/// The explicit term `log(1 + y/log x)/log y` approximating α for
/// `2 <= y <= (log x)^2`.
pub fn alpha_approx(log_x: f64, y: f64) -> Result<f64> {
    if !(y >= 2.0) || !(log_x > 0.0) {
        return domain(format!("alpha approximation needs y >= 2 and log x > 0, got y = {y}, log x = {log_x}"));
    }
    if y > log_x * log_x {
        return domain(format!("alpha approximation requires y <= (log x)^2, got y = {y}, log x = {log_x}"));
    }
    Ok((y / log_x).ln_1p() / y.ln())
}

/// log ζ(s, y) = −Σ_{p≤y} log(1 − p^{−s}).
pub fn zeta_partial(s: f64, table: &PrimeTable, y: f64) -> Result<f64> {
    if !(s > 0.0) {
        return domain(format!("partial zeta requires s > 0, got {s}"));
    }
    check_y(table, y)?;
    let (_, logs) = table.up_to(y);
    let mut acc = CompensatedSum::new();
    for &lp in logs {
        acc.add(-(-(-s * lp).exp()).ln_1p());
    }
    Ok(acc.value())
}

/// `S = Σ_{p≤y} p^{−s}` and `T = Σ_{p≤y} p^{−2s}`.
pub fn prime_power_sums(s: f64, table: &PrimeTable, y: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return domain(format!("prime sums require s > 0, got {s}"));
    }
    check_y(table, y)?;
    let (_, logs) = table.up_to(y);
    let mut first = CompensatedSum::new();
    let mut second = CompensatedSum::new();
    for &lp in logs {
        let w = (-s * lp).exp();
        first.add(w);
        second.add(w * w);
    }
    Ok((first.value(), second.value()))
}

/// `w_σ = (y^{1−σ} − 1)/((1 − σ) log y)`, continued by its limit 1 at σ = 1.
pub fn w_sigma(sigma: f64, y: f64) -> Result<f64> {
    if !(y > 1.0) {
        return domain(format!("w_sigma requires y > 1, got {y}"));
    }
    let z = (1.0 - sigma) * y.ln();
    if z.abs() < 1e-6 {
        return Ok(1.0 + z / 2.0 + z * z / 6.0);
    }
    Ok(z.exp_m1() / z)
}

fn f_unchecked(sigma: f64, log_x: f64, y: f64) -> Result<f64> {
    Ok(sigma * log_x + int_exp((1.0 - sigma) * y.ln())?)
}

/// `f(σ) = σ·log x + I((1 − σ)·log y)` for `0 <= σ <= 1`.
pub fn f_sigma(sigma: f64, log_x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&sigma) {
        return domain(format!("f(sigma) requires 0 <= sigma <= 1, got {sigma}"));
    }
    if !(y > 1.0) {
        return domain(format!("f(sigma) requires y > 1, got {y}"));
    }
    f_unchecked(sigma, log_x, y)
}

/// Derivative `f'(σ) = log x − (y^{1−σ} − 1)/(1 − σ)`.
pub fn f_sigma_derivative(sigma: f64, log_x: f64, y: f64) -> Result<f64> {
    Ok(log_x - y.ln() * w_sigma(sigma, y)?)
}

/// Both sides of `f(β) = log x − u·ξ(u) + ∫_1^u tξ'(t) dt`, the left through
/// the I-series, the right through quadrature of ξ.
pub fn f_at_beta_identity(log_x: f64, y: f64) -> Result<(f64, f64)> {
    if !(y > 1.0) {
        return domain(format!("identity requires y > 1, got {y}"));
    }
    let u = log_x / y.ln();
    if !(u >= 1.0) {
        return domain(format!("identity requires u = log x/log y >= 1, got {u}"));
    }
    let xi_u = xi(u)?.xi;
    let beta = 1.0 - xi_u / y.ln();
    let lhs = f_unchecked(beta, log_x, y)?;
    let rhs = log_x - u * xi_u + xi_integral(u)?;
    Ok((lhs, rhs))
}

/// log of `x^α ζ(α, y) / (α·log y·√(2πu))`.
pub fn psi_saddle(log_x: f64, table: &PrimeTable, y: f64) -> Result<f64> {
    let state = solve_alpha(log_x, table, y)?;
    if !(state.u >= 2.0) {
        return domain(format!("saddle-point estimate is used for u >= 2, got u = {}", state.u));
    }
    psi_saddle_from(&state, table)
}

/// The saddle-point estimate for an already solved state.
pub fn psi_saddle_from(state: &SaddleState, table: &PrimeTable) -> Result<f64> {
    let alpha = state.alpha;
    Ok(alpha * state.log_x + zeta_partial(alpha, table, state.y)?
        - alpha.ln()
        - state.y.ln().ln()
        - 0.5 * (2.0 * std::f64::consts::PI * state.u).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PrimeTable {
        PrimeTable::sieve(100_000).unwrap()
    }

    #[test]
    fn single_prime_closed_form() {
        let t = table();
        let s = solve_alpha(2f64.ln(), &t, 2.0).unwrap();
        assert!((s.alpha - 1.0).abs() < 1e-12);
        // log 2/(2^α − 1) = L  ⇒  α = log2(1 + log 2/L).
        let l = 10.0;
        let s = solve_alpha(l, &t, 2.5).unwrap();
        assert!((s.alpha - (1.0 + 2f64.ln() / l).log2()).abs() < 1e-12);
    }

    #[test]
    fn residual_within_tolerance() {
        let t = table();
        for (lx, y) in [(13.815_510_557_964_274, 100.0), (40.0, 2000.0), (3.0, 50_000.0)] {
            let s = solve_alpha(lx, &t, y).unwrap();
            assert!(s.solver_residual.abs() <= 1e-9 * lx);
            assert!(s.iterations <= MAX_ITERATIONS);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let t = table();
        assert!(matches!(solve_alpha(10.0, &t, 1.5), Err(Error::Domain(_))));
        assert!(matches!(solve_alpha(10.0, &t, 2e5), Err(Error::Range(_))));
        assert!(matches!(solve_alpha(0.1, &t, 10.0), Err(Error::Domain(_))));
        assert!(zeta_partial(0.0, &t, 10.0).is_err());
        assert!(prime_power_sums(-1.0, &t, 10.0).is_err());
        assert!(f_sigma(1.5, 10.0, 10.0).is_err());
    }

    #[test]
    fn alpha_approx_values() {
        let lx = 1e6f64.ln();
        assert!((alpha_approx(lx, lx).unwrap() - 2f64.ln() / lx.ln()).abs() < 1e-15);
        assert!((alpha_approx(lx, 50.0).unwrap() - 0.391_24).abs() < 1e-4);
        assert!(alpha_approx(lx, lx * lx + 1.0).is_err());
    }

    #[test]
    fn zeta_and_prime_sums() {
        let t = table();
        let expected = (4.0f64 / 3.0 * 9.0 / 8.0 * 25.0 / 24.0 * 49.0 / 48.0).ln();
        assert!((zeta_partial(2.0, &t, 10.0).unwrap() - expected).abs() < 1e-15);
        assert!((zeta_partial(0.7, &t, 2.0).unwrap() + (1.0 - 2f64.powf(-0.7)).ln()).abs() < 1e-15);
        let (s, _) = prime_power_sums(1.0, &t, 10.0).unwrap();
        assert!((s - (0.5 + 1.0 / 3.0 + 0.2 + 1.0 / 7.0)).abs() < 1e-15);
        let (s, tt) = prime_power_sums(0.37, &t, 2.0).unwrap();
        assert!((tt - s * s).abs() < 1e-15);
    }

    #[test]
    fn w_sigma_values() {
        let y: f64 = 1e4;
        assert!((w_sigma(0.0, y).unwrap() - (y - 1.0) / y.ln()).abs() < 1e-12);
        assert_eq!(w_sigma(1.0, y).unwrap(), 1.0);
        assert!((w_sigma(0.5, y).unwrap() - 21.497).abs() < 1e-3);
        // The Taylor branch agrees with the direct formula just inside its threshold.
        let z: f64 = 0.99e-6;
        let sigma = 1.0 - z / y.ln();
        let direct = ((1.0 - sigma) * y.ln()).exp_m1() / ((1.0 - sigma) * y.ln());
        assert!((w_sigma(sigma, y).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn f_sigma_edges() {
        assert_eq!(f_sigma(1.0, 12.5, 30.0).unwrap(), 12.5);
        let (lhs, rhs) = f_at_beta_identity(30f64.ln(), 30.0).unwrap();
        assert!((lhs - 30f64.ln()).abs() < 1e-12 && (rhs - 30f64.ln()).abs() < 1e-12);
        assert!(f_at_beta_identity(2.0, 30.0).is_err());
    }
}
