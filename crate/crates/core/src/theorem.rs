//! Desk-scale comparison of Ψ(x, y) with x·ρ(u) along `y = (log x)^c`,
//! the closed forms for log Ψ, and the oscillating prime sum
//! `S(α, y) − I((1 − α) log y)`.

use std::io::{Read, Write};

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dickman::{int_exp, RhoGrid};
use crate::error::{domain, range, Error, Result};
use crate::primes::PrimeTable;
use crate::psi_exact::{preflight_estimate, psi_enumerate, EnumerateOptions, XValue};
use crate::quad::integrate_geometric;
use crate::report::{csv_err, fmt_real};
use crate::saddle::{prime_power_sums, solve_alpha, zeta_partial, SaddleState};
use crate::sum::CompensatedSum;
use crate::EULER_GAMMA;

pub const REGIME_HEADER: [&str; 10] = [
    "log_x",
    "c",
    "y",
    "u",
    "alpha",
    "log_psi_exact",
    "log_x_rho",
    "measured_gap",
    "predicted_gap",
    "regime",
];

pub const OSCILLATION_HEADER: [&str; 7] = ["y", "alpha", "S", "I", "diff", "normalizer", "normalized_diff"];

/// Tolerance within which c is treated as exactly 1.
const C_ONE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "c_in_1_2")]
    CIn12,
    #[serde(rename = "c_eq_1")]
    CEq1,
    #[serde(rename = "c_lt_1")]
    CLt1,
}

impl Regime {
    pub fn of(c: f64) -> Result<Regime> {
        if !(c > 0.0 && c < 2.0) {
            return domain(format!("c must lie in (0, 2), got {c}"));
        }
        Ok(if (c - 1.0).abs() <= C_ONE_TOL {
            Regime::CEq1
        } else if c > 1.0 {
            Regime::CIn12
        } else {
            Regime::CLt1
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::CIn12 => "c_in_1_2",
            Regime::CEq1 => "c_eq_1",
            Regime::CLt1 => "c_lt_1",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeRecord {
    pub log_x: f64,
    pub c: f64,
    pub y: f64,
    pub u: f64,
    pub alpha: f64,
    pub log_psi_exact: f64,
    /// log(x·ρ(u)).
    pub log_x_rho: f64,
    /// log Ψ(x, y) − log(x·ρ(u)).
    pub measured_gap: f64,
    pub predicted_gap: f64,
    pub regime: Regime,
}

impl RegimeRecord {
    /// Whether α < 1/2, which the c ∈ (1, 2) main term presumes. Only
    /// meaningful for that regime; large c at small x can violate it.
    pub fn alpha_below_half(&self) -> bool {
        self.alpha < 0.5
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let mut row: Vec<String> = [
            self.log_x,
            self.c,
            self.y,
            self.u,
            self.alpha,
            self.log_psi_exact,
            self.log_x_rho,
            self.measured_gap,
            self.predicted_gap,
        ]
        .iter()
        .map(|&v| fmt_real(v))
        .collect();
        row.push(self.regime.as_str().to_string());
        row
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationRecord {
    pub y: f64,
    pub alpha: f64,
    /// S(α, y) = Σ_{p≤y} p^{−α}.
    #[serde(rename = "S")]
    pub s_sum: f64,
    /// I((1 − α) log y).
    #[serde(rename = "I")]
    pub i_term: f64,
    pub diff: f64,
    /// y^{1/2−α}·log log log y / log y.
    pub normalizer: f64,
    pub normalized_diff: f64,
}

impl OscillationRecord {
    pub fn csv_fields(&self) -> Vec<String> {
        [
            self.y,
            self.alpha,
            self.s_sum,
            self.i_term,
            self.diff,
            self.normalizer,
            self.normalized_diff,
        ]
        .iter()
        .map(|&v| fmt_real(v))
        .collect()
    }
}

/// `y = (log x)^c`.
pub fn y_of(log_x: f64, c: f64) -> f64 {
    log_x.powf(c)
}

fn log2_of(log_x: f64) -> Result<f64> {
    if !(log_x > 1.0) {
        return domain(format!("log log x needs log x > 1, got {log_x}"));
    }
    Ok(log_x.ln())
}

/// Main term of log(Ψ/xρ(u)) in the regime selected by c:
///
/// * c ∈ (1, 2): `½·y^{1−2α}/((1 − 2α) log y)`;
/// * c = 1: `(log 4 − 1)·log x/log log x`;
/// * c ∈ (0, 1): `(1/c − 1)·log x`.
///
/// For c ∈ (1, 2) with α >= 1/2 the value is still returned; callers should
/// check [`RegimeRecord::alpha_below_half`].
pub fn predicted_gap(log_x: f64, c: f64, state: &SaddleState) -> Result<f64> {
    Ok(match Regime::of(c)? {
        Regime::CIn12 => {
            let e = 1.0 - 2.0 * state.alpha;
            let log_y = state.y.ln();
            0.5 * (e * log_y).exp() / (e * log_y)
        }
        Regime::CEq1 => (4f64.ln() - 1.0) * log_x / log2_of(log_x)?,
        Regime::CLt1 => (1.0 / c - 1.0) * log_x,
    })
}

/// `log(x·ρ(u))` from the grid, with `u = log x/(c log log x)`, alongside
/// its three-term expansion in powers of `1/log log x`.
pub fn log_x_rho(log_x: f64, c: f64, grid: &RhoGrid) -> Result<(f64, f64)> {
    if !(c > 0.0 && c <= 1.0 + C_ONE_TOL) {
        return domain(format!("the expansion of log(x rho(u)) is for c in (0, 1], got {c}"));
    }
    let l2 = log2_of(log_x)?;
    let u = log_x / (c * l2);
    let exact = log_x + grid.log_rho(u)?;
    let lc = c.ln();
    let expansion = (c - 1.0) / c * log_x + (1.0 + lc) * log_x / (c * l2) + (1.0 - lc) * log_x / (c * l2 * l2);
    Ok((exact, expansion))
}

/// de Bruijn's closed form
/// `Z = (log x/log y)·log(1 + y/log x) + (y/log y)·log(1 + log x/y)`.
pub fn z_bruijn(log_x: f64, y: f64) -> Result<f64> {
    if !(y >= 3.0) || !(log_x >= y.ln()) {
        return domain(format!("Z(x, y) requires x >= y >= 3, got log x = {log_x}, y = {y}"));
    }
    let log_y = y.ln();
    Ok(log_x / log_y * (y / log_x).ln_1p() + y / log_y * (log_x / y).ln_1p())
}

/// The explicit terms of Z(x, (log x)^c) in each regime.
pub fn z_cases(log_x: f64, c: f64) -> Result<f64> {
    let regime = Regime::of(c)?;
    let l2 = log2_of(log_x)?;
    Ok(match regime {
        Regime::CIn12 => {
            (c - 1.0) / c * log_x + log_x / (c * l2) + log_x.powf(2.0 - c) / (2.0 * c * l2)
        }
        Regime::CEq1 => 4f64.ln() * log_x / l2,
        Regime::CLt1 => {
            let lc = log_x.powf(c);
            (1.0 - c) * lc / c + lc / (c * l2)
        }
    })
}

/// Size of the first term dropped by [`z_cases`]: `(log x)^{3−2c}/log log x`
/// for c > 1, `(log x)^{2c−1}/log log x` for c < 1, and 0 at c = 1 where the
/// closed form is exact.
pub fn z_omitted_scale(log_x: f64, c: f64) -> Result<f64> {
    let l2 = log2_of(log_x)?;
    Ok(match Regime::of(c)? {
        Regime::CIn12 => log_x.powf(3.0 - 2.0 * c) / l2,
        Regime::CEq1 => 0.0,
        Regime::CLt1 => log_x.powf(2.0 * c - 1.0) / l2,
    })
}

/// `log ζ(α, y) − I((1 − α) log y) + log(c·e^{−γ}/(c − 1))`, the lower bound
/// for the gap when c ∈ (1, 2), without its o(1).
pub fn gap_lower_bound(state: &SaddleState, c: f64, table: &PrimeTable) -> Result<f64> {
    if Regime::of(c)? != Regime::CIn12 {
        return domain(format!("the lower bound applies to c in (1, 2), got {c}"));
    }
    let zeta = zeta_partial(state.alpha, table, state.y)?;
    let i = int_exp((1.0 - state.alpha) * state.y.ln())?;
    Ok(zeta - i + (c * (-EULER_GAMMA).exp() / (c - 1.0)).ln())
}

/// Shared inputs for regime comparisons.
pub struct RegimeContext<'a> {
    pub table: &'a PrimeTable,
    pub grid: &'a RhoGrid,
    pub enumerate: EnumerateOptions,
}

/// One row of the comparison at x with `y = (log x)^c`.
///
/// The measured gap uses only the exact count and the ρ grid; the predicted
/// gap uses only the saddle point.
pub fn regime_record(x: &XValue, c: f64, ctx: &RegimeContext<'_>) -> Result<RegimeRecord> {
    let regime = Regime::of(c)?;
    let log_x = x.log_x();
    let y = y_of(log_x, c);
    let u = log_x / y.ln();
    let state = solve_alpha(log_x, ctx.table, y)?;
    let psi = psi_enumerate(x, ctx.table, y, &ctx.enumerate)?;
    let count = psi
        .count
        .to_f64()
        .ok_or_else(|| Error::Numeric("count does not fit a double".into()))?;
    let log_psi_exact = count.ln();
    let log_x_rho = log_x + ctx.grid.log_rho(u)?;
    Ok(RegimeRecord {
        log_x,
        c,
        y,
        u,
        alpha: state.alpha,
        log_psi_exact,
        log_x_rho,
        measured_gap: log_psi_exact - log_x_rho,
        predicted_gap: predicted_gap(log_x, c, &state)?,
        regime,
    })
}

/// Rows for every x, in input order.
pub fn regime_scan(xs: &[XValue], c: f64, ctx: &RegimeContext<'_>) -> Result<Vec<RegimeRecord>> {
    if ctx.enumerate.parallel {
        xs.par_iter().map(|x| regime_record(x, c, ctx)).collect()
    } else {
        xs.iter().map(|x| regime_record(x, c, ctx)).collect()
    }
}

/// Powers `x = 10^k`, `k = 3, …, max_exponent`, whose pre-flight estimate of
/// Ψ(x, (log x)^c) stays within `max_count`. Stops at the first infeasible
/// power, since the estimate grows with x.
pub fn feasible_x_ladder(c: f64, table: &PrimeTable, max_count: f64, max_exponent: u32) -> Result<Vec<XValue>> {
    Regime::of(c)?;
    let mut out = Vec::new();
    for k in 3..=max_exponent {
        let x: XValue = format!("1e{k}").parse()?;
        let y = y_of(x.log_x(), c);
        if y < 2.0 {
            continue;
        }
        if y.floor() > table.limit() as f64 {
            break;
        }
        if preflight_estimate(x.log_x(), table, y)? > max_count {
            break;
        }
        out.push(x);
    }
    Ok(out)
}

fn oscillation_record(y: f64, c: f64, table: &PrimeTable) -> Result<OscillationRecord> {
    if !(y > std::f64::consts::E.exp()) {
        return domain(format!("oscillation needs y > e^e so that log log log y > 0, got {y}"));
    }
    let log_x = y.powf(1.0 / c);
    let state = solve_alpha(log_x, table, y)?;
    oscillation_at(y, state.alpha, table)
}

/// The oscillation quantities at a given (y, α).
pub fn oscillation_at(y: f64, alpha: f64, table: &PrimeTable) -> Result<OscillationRecord> {
    if !(y > std::f64::consts::E.exp()) {
        return domain(format!("oscillation needs y > e^e so that log log log y > 0, got {y}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("oscillation needs 0 < alpha < 1, got {alpha}"));
    }
    let log_y = y.ln();
    let (s_sum, _) = prime_power_sums(alpha, table, y)?;
    let i_term = int_exp((1.0 - alpha) * log_y)?;
    let diff = s_sum - i_term;
    let normalizer = ((0.5 - alpha) * log_y).exp() * log_y.ln().ln() / log_y;
    Ok(OscillationRecord {
        y,
        alpha,
        s_sum,
        i_term,
        diff,
        normalizer,
        normalized_diff: diff / normalizer,
    })
}

/// For each y, α is the saddle point at `log x = y^{1/c}`. Output follows
/// the order of `y_grid`.
pub fn oscillation_scan(c: f64, y_grid: &[f64], table: &PrimeTable, parallel: bool) -> Result<Vec<OscillationRecord>> {
    if Regime::of(c)? != Regime::CIn12 {
        return domain(format!("the oscillation scan is for c in (1, 2), got {c}"));
    }
    if parallel {
        y_grid.par_iter().map(|&y| oscillation_record(y, c, table)).collect()
    } else {
        y_grid.iter().map(|&y| oscillation_record(y, c, table)).collect()
    }
}

/// `count` points spaced geometrically from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return domain(format!("grid needs 0 < lo <= hi and count >= 1, got {lo}, {hi}, {count}"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { hi } else { lo * (step * i as f64).exp() })
        .collect())
}

/// `∫_2^y t^{−α} d li(t) = ∫_2^y t^{−α}/log t dt`, on pieces with
/// endpoint ratio at most `ratio`.
pub fn smooth_li_integral(y: f64, alpha: f64, ratio: f64) -> f64 {
    integrate_geometric(|t: f64| (-alpha * t.ln()).exp() / t.ln(), 2.0, y, ratio, 1e-13)
}

/// Stieltjes integrals of `t^{−α}` against `Π − li` and `π − li` over
/// `[2, y]`, returned as `(q_part, pi_part)`.
pub fn q_integral(y: f64, alpha: f64, table: &PrimeTable) -> Result<(f64, f64)> {
    q_integral_with_ratio(y, alpha, table, 2.0)
}

pub fn q_integral_with_ratio(y: f64, alpha: f64, table: &PrimeTable, ratio: f64) -> Result<(f64, f64)> {
    if !(y >= 2.0) {
        return domain(format!("q integral needs y >= 2, got {y}"));
    }
    if y.floor() > table.limit() as f64 {
        return range(format!("y = {y} exceeds the prime table limit {}", table.limit()));
    }
    if !alpha.is_finite() {
        return domain("alpha must be finite");
    }
    let (_, logs) = table.up_to(y);
    let log_y = y.ln();
    let mut primes_only = CompensatedSum::new();
    let mut higher = CompensatedSum::new();
    for &lp in logs {
        primes_only.add((-alpha * lp).exp());
        let mut k = 2.0;
        while k * lp <= log_y + 1e-12 {
            higher.add((-alpha * k * lp).exp() / k);
            k += 1.0;
        }
    }
    let smooth = smooth_li_integral(y, alpha, ratio);
    let pi_part = primes_only.value() - smooth;
    let q_part = primes_only.value() + higher.value() - smooth;
    Ok((q_part, pi_part))
}

pub fn write_regime_csv<W: Write>(rows: &[RegimeRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REGIME_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.csv_fields()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_regime_csv<R: Read>(input: R) -> Result<Vec<RegimeRecord>> {
    read_csv(input, &REGIME_HEADER)
}

pub fn write_oscillation_csv<W: Write>(rows: &[OscillationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OSCILLATION_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.csv_fields()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_oscillation_csv<R: Read>(input: R) -> Result<Vec<OscillationRecord>> {
    read_csv(input, &OSCILLATION_HEADER)
}

fn read_csv<R: Read, T: serde::de::DeserializeOwned>(input: R, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if found != header {
        return Err(Error::Format(format!("unexpected CSV header {found:?}")));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
